"""Command-line front end.

Exit status: 0 success, 1 validation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    clb_from_omega,
    compute_ak_bk,
    generation_envelope,
    log_generation_envelope,
    log_propagation_envelope,
    omega_cap_constant,
)
from .collision import verify_corpus
from .config import ConfigError, load_json, parse_cross_section, parse_omega, parse_sim, parse_species
from .dsmc import simulate
from .mixture import validate
from .moments import MomentRecord, fuzz_inequalities
from .povzner import kstar_global, povzner_scan

RESIDUAL_THRESHOLD = 1e-10
SPEED_THRESHOLD = 1e-12


class UsageError(Exception):
    pass


class ValidationFailure(Exception):
    pass


def parse_range(text: str) -> np.ndarray:
    """``start:step:end`` inclusive of ``end`` within half a step, or a single number."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}") from exc
    if len(nums) == 1:
        return np.array(nums)
    if len(nums) != 3 or not nums[1] > 0 or nums[2] < nums[0]:
        raise UsageError(f"range must be start:step:end with step > 0 and end >= start, got {text!r}")
    start, stepv, end = nums
    count = int(np.floor((end - start) / stepv + 0.5)) + 1
    return start + stepv * np.arange(count)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def write_json(path: Path, obj) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


def write_manifest(path: Path, subcommand: str, config, seed, started: str, outputs) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "version": __version__,
        "seed": seed,
        "started": started,
        "finished": _now(),
        "outputs": [{"path": str(p), "sha256": _sha256(p)} for p in outputs],
    }
    write_json(path, manifest)


def _load(path):
    try:
        return load_json(path)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from exc


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest_for(out_file: Path) -> Path:
    return out_file.with_name(out_file.name + ".manifest.json")


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    started = _now()
    raw = _load(args.config)
    cfg = parse_sim(raw, args.seed)
    out = _out_dir(args.out)
    res = simulate(cfg)
    ks = cfg.moment_orders
    header = MomentRecord.header(cfg.species.count, ks, cfg.exp_moment_params, cfg.entropy_bins is not None)
    write_csv(out / "moments.csv", header, [r.row(ks) for r in res.records])
    # wall time lives in the manifest so that summary.json is reproducible
    write_json(out / "summary.json", {k: v for k, v in res.summary.items() if k != "wall_seconds"})
    echo = cfg.to_dict()
    if "omega_constants" in raw:
        echo["omega_constants"] = raw["omega_constants"]
    write_json(out / "config.echo.json", echo)
    files = [out / "moments.csv", out / "summary.json", out / "config.echo.json"]
    write_manifest(out / "manifest.json", "simulate", echo, cfg.seed, started, files)
    return 0


def cmd_povzner_scan(args) -> int:
    started = _now()
    r = parse_range(args.r)
    n = parse_range(args.n)
    if np.any((r <= 0) | (r >= 1)) or np.any(n <= 1):
        raise UsageError("r values must lie in (0, 1) and n values must exceed 1")
    table = povzner_scan(r, n)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = [[repr(float(ri)), repr(float(nj)), repr(float(table[a, b]))]
            for a, ri in enumerate(r) for b, nj in enumerate(n)]
    write_csv(out, ["r", "n", "c_inf"], rows)
    write_manifest(_manifest_for(out), "povzner-scan", {"r": args.r, "n": args.n}, None, started, [out])
    return 0


def _mixture(raw):
    species = parse_species(raw)
    cs = parse_cross_section(raw, species.count)
    rep = validate(cs, species)
    if not rep.ok:
        raise ValidationFailure("; ".join(rep))
    return species, cs


def cmd_kstar(args) -> int:
    started = _now()
    raw = _load(args.config)
    species, cs = _mixture(raw)
    summary = kstar_global(species, cs, args.grid_step)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_json(out, summary.to_dict())
    write_manifest(_manifest_for(out), "kstar", raw, None, started, [out])
    return 0


def cmd_bounds(args) -> int:
    started = _now()
    raw = _load(args.config)
    species, cs = _mixture(raw)
    omega = parse_omega(raw)
    ks = kstar_global(species, cs, args.grid_step)
    k = ks.k_star if args.k is None else args.k
    c_lb = clb_from_omega(omega, species, cs)
    consts = compute_ak_bk(k, ks, omega, c_lb, species, cs)
    at_kstar = compute_ak_bk(ks.k_star, ks, omega, c_lb, species, cs)
    c_kstar = omega_cap_constant(at_kstar.A_k, at_kstar.B_k, cs.gamma_bar, ks.k_star)
    times = parse_range(args.t)
    if np.any(times <= 0):
        raise UsageError("envelope times must be positive")
    env = [[float(t), float(generation_envelope(k, consts, t))] for t in times]
    log10 = [[float(t), float(log_generation_envelope(k, consts, t) / np.log(10))] for t in times]
    result = {
        "k": consts.k,
        "A_k": consts.A_k,
        "B_k": consts.B_k,
        "c_lb": c_lb,
        "C_kstar": c_kstar,
        "envelope": env,
        "log10_envelope": log10,
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_json(out, result)
    write_manifest(_manifest_for(out), "bounds", raw, None, started, [out])
    return 0


def cmd_verify(args) -> int:
    started = _now()
    rng = np.random.Generator(np.random.PCG64(args.seed))
    rep = verify_corpus(rng, args.cases)
    report = {
        "cases": rep["cases"],
        "max_momentum_residual": rep["max_momentum_residual"],
        "max_energy_residual": rep["max_energy_residual"],
        "max_identity_residual": rep["max_identity_residual"],
        "max_relative_speed_residual": rep["max_relative_speed_residual"],
    }
    if args.inequality_cases:
        report["inequality_cases"] = args.inequality_cases
        report["inequality_violations"] = fuzz_inequalities(rng, args.inequality_cases)
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        write_manifest(_manifest_for(out), "verify", {"cases": args.cases}, args.seed, started, [out])
    else:
        sys.stdout.write(text)
    ok = (
        max(rep["max_momentum_residual"], rep["max_energy_residual"], rep["max_identity_residual"])
        < RESIDUAL_THRESHOLD
        and rep["max_relative_speed_residual"] < SPEED_THRESHOLD
        and not any(report.get("inequality_violations", {}).values())
    )
    return 0 if ok else 1


def _read_moments(path: Path):
    if not path.is_file():
        raise UsageError(f"moments file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise UsageError(f"{path} has no data rows")
    return rows


def cmd_envelope_check(args) -> int:
    started = _now()
    raw = _load(args.config)
    species, cs = _mixture(raw)
    omega = parse_omega(raw)
    rows = _read_moments(Path(args.moments))
    col = f"mk_{int(args.k) if float(args.k).is_integer() else repr(float(args.k))}"
    if col not in rows[0]:
        raise UsageError(f"column {col} not in {args.moments}")
    ks = kstar_global(species, cs, args.grid_step)
    c_lb = clb_from_omega(omega, species, cs)
    consts = compute_ak_bk(args.k, ks, omega, c_lb, species, cs)
    mk0 = float(rows[0][col])
    log_prop = log_propagation_envelope(consts, mk0)
    report_rows = []
    violations = 0
    for row in rows:
        t = float(row["t"])
        mk = float(row[col])
        log_mk = np.log(mk)
        gen_ok = True
        log_gen = None
        if t > 0:
            log_gen = float(log_generation_envelope(args.k, consts, t))
            gen_ok = log_mk <= log_gen
        prop_ok = log_mk <= log_prop + 1e-12
        violations += (not gen_ok) + (not prop_ok)
        report_rows.append({
            "t": t,
            "mk": mk,
            "log10_propagation": log_prop / np.log(10),
            "log10_generation": None if log_gen is None else log_gen / np.log(10),
            "propagation_ok": bool(prop_ok),
            "generation_ok": bool(gen_ok),
        })
    result = {"k": consts.k, "A_k": consts.A_k, "B_k": consts.B_k, "c_lb": c_lb,
              "violations": violations, "rows": report_rows}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_json(out, result)
    write_manifest(_manifest_for(out), "envelope-check", raw, None, started, [out])
    return 0 if violations == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boltzmix", description="Boltzmann mixture toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the particle simulation")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("povzner-scan", help="tabulate C_inf_n(r) over a grid")
    s.add_argument("--r", required=True, help="start:step:end")
    s.add_argument("--n", required=True, help="start:step:end")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_povzner_scan)

    s = sub.add_parser("kstar", help="moment-order thresholds for a mixture")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--grid-step", type=float, default=0.5)
    s.set_defaults(func=cmd_kstar)

    s = sub.add_parser("bounds", help="ODI constants and the generation envelope")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--k", type=float, default=None)
    s.add_argument("--t", default="0.5:0.5:10")
    s.add_argument("--grid-step", type=float, default=0.5)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("verify", help="collision and inequality fuzz suites")
    s.add_argument("--cases", type=int, default=100_000)
    s.add_argument("--inequality-cases", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("envelope-check", help="compare a moments.csv with the envelopes")
    s.add_argument("--moments", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--grid-step", type=float, default=0.5)
    s.set_defaults(func=cmd_envelope_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"boltzmix {args.command}: {exc}", file=sys.stderr)
        return 2
    except (ValidationFailure, ConfigError, ValueError, OverflowError) as exc:
        print(f"boltzmix {args.command}: validation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
