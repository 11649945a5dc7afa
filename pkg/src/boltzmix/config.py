"""JSON configuration ingestion.

Top-level keys: ``species``, ``cross_section``, ``omega_constants``, ``sim``,
``diagnostics``. Only the sections a given command needs must be present.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .bounds import OmegaConstants
from .dsmc import SimConfig, initial_condition_from_dict
from .mixture import AngularKernel, CrossSection, SpeciesSet


class ConfigError(ValueError):
    """Malformed or inconsistent configuration content."""


def load_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    with path.open(encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _section(cfg: dict, key: str) -> dict:
    if key not in cfg:
        raise ConfigError(f"missing top-level key {key!r}")
    return cfg[key]


def parse_species(cfg: dict) -> SpeciesSet:
    sec = _section(cfg, "species")
    try:
        return SpeciesSet(sec["masses"])
    except KeyError as exc:
        raise ConfigError("species.masses is required") from exc


def parse_kernel(d: dict) -> AngularKernel:
    kind = d.get("kind")
    if kind == "constant":
        return AngularKernel.constant(float(d["value"]))
    if kind == "tabulated":
        table = np.asarray(d["table"], dtype=float)
        if table.ndim != 2 or table.shape[1] != 2:
            raise ConfigError("tabulated kernel table must be a list of [tau, b] pairs")
        return AngularKernel.tabulated(table[:, 0], table[:, 1])
    raise ConfigError(f"unknown kernel kind {kind!r}")


def parse_cross_section(cfg: dict, n_species: int) -> CrossSection:
    sec = _section(cfg, "cross_section")
    gamma = sec.get("gamma", 1.0)
    gamma = np.full((n_species, n_species), float(gamma)) if np.isscalar(gamma) else np.asarray(gamma, dtype=float)
    kernels = sec.get("kernels", {"kind": "constant", "value": 1.0 / (4.0 * np.pi)})
    if isinstance(kernels, dict):
        kern = parse_kernel(kernels)
    else:
        kern = [[parse_kernel(k) for k in row] for row in kernels]
    return CrossSection(gamma, kern)


def parse_omega(cfg: dict) -> OmegaConstants:
    sec = _section(cfg, "omega_constants")
    keys = ("c0", "C0", "c2", "C2", "C2eps", "eps", "C_kstar")
    missing = [k for k in keys if k not in sec]
    if missing:
        raise ConfigError(f"omega_constants missing {missing}")
    return OmegaConstants(**{k: float(sec[k]) for k in keys})


def parse_sim(cfg: dict, seed_override: int | None = None) -> SimConfig:
    species = parse_species(cfg)
    cs = parse_cross_section(cfg, species.count)
    sim = _section(cfg, "sim")
    diag = cfg.get("diagnostics", {})
    ics = sim.get("initial_conditions")
    if ics is None:
        raise ConfigError("sim.initial_conditions is required")
    if isinstance(ics, dict):
        ics = [ics] * species.count
    exp = diag.get("exp_moment")
    return SimConfig(
        species=species,
        cross_section=cs,
        particles_per_species=sim["particles_per_species"],
        initial_conditions=[initial_condition_from_dict(d) for d in ics],
        dt=float(sim["dt"]),
        t_end=float(sim["t_end"]),
        diagnostic_every=int(diag.get("every", 10)),
        moment_orders=diag.get("moment_orders", [4.0, 6.0]),
        exp_moment_params=None if exp is None else (float(exp[0]), float(exp[1])),
        seed=int(seed_override if seed_override is not None else sim.get("seed", 0)),
        majorant_cap_quantile=float(sim.get("majorant_cap_quantile", 0.999)),
        entropy_bins=diag.get("entropy_bins"),
        entropy_box=diag.get("entropy_box"),
        entropy_bootstrap=int(diag.get("entropy_bootstrap", 0)),
    )
