"""Stochastic particle solver for the space-homogeneous Boltzmann mixture system.

Pair selection is Nanbu-Babovsky style with a no-time-counter majorant per
species pair. Within a step, species pairs are processed in a fixed order and
every collision round draws disjoint particles, so the vectorised velocity
update never touches a particle twice in the same round.

Normalisation: the effective volume is 1 and every particle carries weight
``w = 1 / N_total``, so w N_i is the number density of species i and the
total number density is 1.
"""
from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .collision import collide_arrays, sample_sigma_arrays, uniform_sphere
from .mixture import CrossSection, SpeciesSet, validate
from .moments import MomentRecord, ParticleEnsemble, measure, poly_moment

MIN_PARTICLES = 100
STABILITY_LIMIT = 0.5
MAJORANT_SAFETY = 1.5
MAJORANT_PROBE_PAIRS = 10_000


@dataclass(frozen=True)
class Maxwellian:
    temperature: float
    drift: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def sample(self, rng, n, mass):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        return np.asarray(self.drift, dtype=float) + np.sqrt(self.temperature / mass) * rng.standard_normal((n, 3))

    def to_dict(self):
        return {"kind": "maxwellian", "temperature": self.temperature, "drift": list(self.drift)}


@dataclass(frozen=True)
class TwoTemperature:
    """A fraction ``mix_frac`` of the particles at T_a, the rest at T_b."""

    T_a: float
    T_b: float
    mix_frac: float

    def sample(self, rng, n, mass):
        if min(self.T_a, self.T_b) < 0 or not (0 <= self.mix_frac <= 1):
            raise ValueError("need non-negative temperatures and mix_frac in [0, 1]")
        na = int(round(self.mix_frac * n))
        sd = np.sqrt(np.array([self.T_a] * na + [self.T_b] * (n - na)) / mass)
        return sd[:, None] * rng.standard_normal((n, 3))

    def to_dict(self):
        return {"kind": "two_temperature", "T_a": self.T_a, "T_b": self.T_b, "mix_frac": self.mix_frac}


@dataclass(frozen=True)
class SphericalShell:
    """Every particle at the same speed, isotropic direction."""

    speed: float

    def sample(self, rng, n, mass):
        if self.speed < 0:
            raise ValueError("shell speed must be non-negative")
        return self.speed * uniform_sphere(rng, n)

    def to_dict(self):
        return {"kind": "spherical_shell", "speed": self.speed}


InitialCondition = Union[Maxwellian, TwoTemperature, SphericalShell]


def initial_condition_from_dict(d: dict) -> InitialCondition:
    kind = d.get("kind")
    if kind == "maxwellian":
        return Maxwellian(float(d["temperature"]), tuple(float(x) for x in d.get("drift", (0, 0, 0))))
    if kind == "two_temperature":
        return TwoTemperature(float(d["T_a"]), float(d["T_b"]), float(d["mix_frac"]))
    if kind == "spherical_shell":
        return SphericalShell(float(d["speed"]))
    raise ValueError(f"unknown initial condition kind {kind!r}")


@dataclass
class SimConfig:
    species: SpeciesSet
    cross_section: CrossSection
    particles_per_species: Sequence[int]
    initial_conditions: Sequence[InitialCondition]
    dt: float
    t_end: float
    diagnostic_every: int = 10
    moment_orders: Sequence[float] = (4.0, 6.0)
    exp_moment_params: tuple[float, float] | None = None
    seed: int = 0
    majorant_cap_quantile: float = 0.999
    entropy_bins: int | None = None
    entropy_box: float | None = None
    entropy_bootstrap: int = 0

    def __post_init__(self):
        n = self.species.count
        self.particles_per_species = [int(x) for x in self.particles_per_species]
        self.initial_conditions = list(self.initial_conditions)
        self.moment_orders = [float(k) for k in self.moment_orders]
        if len(self.particles_per_species) != n or len(self.initial_conditions) != n:
            raise ValueError("need one particle count and one initial condition per species")
        if any(c < MIN_PARTICLES for c in self.particles_per_species):
            raise ValueError(f"every species needs at least {MIN_PARTICLES} particles")
        if not (self.dt >= 0 and np.isfinite(self.dt)) or not self.t_end >= 0:
            raise ValueError("dt and t_end must be non-negative and finite")
        if self.diagnostic_every < 1:
            raise ValueError("diagnostic_every must be at least 1")
        if not (0.9 < self.majorant_cap_quantile <= 1.0):
            raise ValueError("majorant_cap_quantile must lie in (0.9, 1]")
        report = validate(self.cross_section, self.species)
        if not report.ok:
            raise ValueError("invalid cross section: " + "; ".join(report))

    @property
    def n_steps(self) -> int:
        if self.dt == 0:
            return 0
        return int(round(self.t_end / self.dt))

    @property
    def weight(self) -> float:
        return 1.0 / sum(self.particles_per_species)

    def to_dict(self) -> dict:
        cs = self.cross_section
        return {
            "species": {"masses": list(self.species.masses)},
            "cross_section": {
                "gamma": cs.gamma.tolist(),
                "kernels": [[cs.kernel(i, j).to_dict() for j in range(cs.size)] for i in range(cs.size)],
            },
            "sim": {
                "particles_per_species": list(self.particles_per_species),
                "initial_conditions": [ic.to_dict() for ic in self.initial_conditions],
                "dt": self.dt,
                "t_end": self.t_end,
                "seed": self.seed,
                "majorant_cap_quantile": self.majorant_cap_quantile,
            },
            "diagnostics": {
                "every": self.diagnostic_every,
                "moment_orders": list(self.moment_orders),
                "exp_moment": None if self.exp_moment_params is None else list(self.exp_moment_params),
                "entropy_bins": self.entropy_bins,
                "entropy_box": self.entropy_box,
                "entropy_bootstrap": self.entropy_bootstrap,
            },
        }


@dataclass
class SimState:
    ensemble: ParticleEnsemble
    time: float
    rng: np.random.Generator
    attempted: np.ndarray
    accepted: np.ndarray
    majorant: np.ndarray
    exceedances: np.ndarray
    carry: np.ndarray
    steps: int = 0
    diag_rng: np.random.Generator | None = None


def _pairs(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


def _probe_relative_speeds(rng, vi, vj, same):
    n = MAJORANT_PROBE_PAIRS
    a = rng.integers(0, len(vi), n)
    b = rng.integers(0, len(vj), n)
    if same:
        keep = a != b
        a, b = a[keep], b[keep]
    return np.linalg.norm(vi[a] - vj[b], axis=1)


def collision_rate_bound(config: SimConfig, majorant: np.ndarray) -> np.ndarray:
    """Majorant collision rate per particle of each species."""
    w = config.weight
    cs = config.cross_section
    N = config.particles_per_species
    l1 = cs.l1_norms()
    return np.array([
        sum(w * N[j] * l1[i, j] * majorant[i, j] ** cs.gamma[i, j] for j in range(len(N)))
        for i in range(len(N))
    ])


def init(config: SimConfig) -> SimState:
    """Sample the initial ensemble and set up the majorants; deterministic in ``config.seed``."""
    sim_seq, diag_seq = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.Generator(np.random.PCG64(sim_seq))
    sp = config.species
    vels = [
        np.ascontiguousarray(ic.sample(rng, n, sp.mass(i)), dtype=float)
        for i, (ic, n) in enumerate(zip(config.initial_conditions, config.particles_per_species))
    ]
    total_p = sum(sp.mass(i) * v.sum(axis=0) for i, v in enumerate(vels))
    total_m = sum(sp.mass(i) * len(v) for i, v in enumerate(vels))
    mean_v = total_p / total_m
    for v in vels:
        v -= mean_v
    if not all(np.all(np.isfinite(v)) for v in vels):
        raise ValueError("initial data is not finite")
    n = sp.count
    majorant = np.zeros((n, n))
    for i, j in _pairs(n):
        u = _probe_relative_speeds(rng, vels[i], vels[j], i == j)
        q = float(np.quantile(u, config.majorant_cap_quantile)) if len(u) else 0.0
        majorant[i, j] = majorant[j, i] = MAJORANT_SAFETY * q if q > 0 else 1.0
    rate = collision_rate_bound(config, majorant)
    if config.dt * rate.max() >= STABILITY_LIMIT:
        raise ValueError(
            f"time step too large: dt * majorant collision rate = {config.dt * rate.max():.3g} "
            f">= {STABILITY_LIMIT}"
        )
    zeros = np.zeros((n, n), dtype=np.int64)
    return SimState(
        ensemble=ParticleEnsemble(sp, vels, config.weight),
        time=0.0,
        rng=rng,
        attempted=zeros.copy(),
        accepted=zeros.copy(),
        majorant=majorant,
        exceedances=zeros.copy(),
        carry=np.zeros((n, n)),
        diag_rng=np.random.Generator(np.random.PCG64(diag_seq)),
    )


def _draw_partners(rng, Ni, Nj, m, same):
    if same:
        idx = rng.choice(Ni, 2 * m, replace=False)
        return idx[:m], idx[m:]
    return rng.choice(Ni, m, replace=False), rng.choice(Nj, m, replace=False)


def step(state: SimState, config: SimConfig) -> SimState:
    """Advance the ensemble by one time step ``config.dt`` in place and return the state."""
    ens = state.ensemble
    sp, cs = config.species, config.cross_section
    rng = state.rng
    w, dt = ens.w, config.dt
    for i, j in _pairs(sp.count):
        same = i == j
        Ni, Nj = ens.counts[i], ens.counts[j]
        gam = cs.gamma[i, j]
        kern = cs.kernel(i, j)
        U = state.majorant[i, j]
        n_pairs = Ni * (Ni - 1) / 2.0 if same else float(Ni) * Nj
        expected = n_pairs * w * dt * kern.l1_norm * U**gam
        state.carry[i, j] += expected
        n_cand = int(state.carry[i, j])
        state.carry[i, j] -= n_cand
        if n_cand == 0:
            continue
        vi, vj = ens.velocities[i], ens.velocities[j]
        mi, mj = sp.mass(i), sp.mass(j)
        cap = Ni // 2 if same else min(Ni, Nj)
        u_seen = 0.0
        n_exceed = 0
        n_acc = 0
        remaining = n_cand
        while remaining > 0:
            m = min(remaining, cap)
            remaining -= m
            a, b = _draw_partners(rng, Ni, Nj, m, same)
            va, vb = vi[a], vj[b]
            u = va - vb
            un = np.sqrt(np.einsum("ij,ij->i", u, u))
            over = un > U
            if over.any():
                n_exceed += int(over.sum())
                u_seen = max(u_seen, float(un.max()))
            p_acc = np.minimum(1.0, (un / U) ** gam)
            acc = rng.random(m) < p_acc
            k = int(acc.sum())
            if k == 0:
                continue
            n_acc += k
            if kern.kind == "constant":
                sigma = uniform_sphere(rng, k)
            else:
                sigma = sample_sigma_arrays(rng, u[acc] / un[acc, None], kern)
            vp, vsp = collide_arrays(va[acc], vb[acc], mi, mj, sigma)
            vi[a[acc]] = vp
            vj[b[acc]] = vsp
        state.attempted[i, j] += n_cand
        state.accepted[i, j] += n_acc
        if n_exceed:
            state.exceedances[i, j] += n_exceed
            while U < u_seen:
                U *= 2.0
            state.majorant[i, j] = U
        if not same:
            state.attempted[j, i] = state.attempted[i, j]
            state.accepted[j, i] = state.accepted[i, j]
            state.exceedances[j, i] = state.exceedances[i, j]
            state.majorant[j, i] = state.majorant[i, j]
    state.steps += 1
    state.time = state.steps * dt
    return state


def _record(state: SimState, config: SimConfig) -> MomentRecord:
    return measure(
        state.ensemble,
        state.time,
        config.moment_orders,
        config.exp_moment_params,
        config.entropy_bins,
        config.entropy_box,
        config.entropy_bootstrap,
        state.diag_rng,
    )


@dataclass
class SimResult:
    records: list[MomentRecord]
    state: SimState
    summary: dict = field(default_factory=dict)


def simulate(config: SimConfig, progress=None) -> SimResult:
    """init, then step to t_end recording diagnostics every ``diagnostic_every`` steps."""
    t0 = _time.perf_counter()
    state = init(config)
    ens = state.ensemble
    if config.entropy_bins is not None and config.entropy_box is None:
        config.entropy_box = default_entropy_box(ens)
    p0 = ens.momentum()
    # a gas entirely at rest has zero momentum scale; report absolute drift then
    p_scale = ens.momentum_scale() or 1.0
    m2_0 = poly_moment(ens, 2.0)
    records = [_record(state, config)]
    max_p_drift = 0.0
    max_m2_drift = 0.0
    for s in range(1, config.n_steps + 1):
        step(state, config)
        if s % config.diagnostic_every == 0 or s == config.n_steps:
            rec = _record(state, config)
            records.append(rec)
            max_p_drift = max(max_p_drift, float(np.linalg.norm(rec.momentum - p0)) / p_scale)
            max_m2_drift = max(max_m2_drift, abs(rec.m2 - m2_0) / m2_0)
            if progress is not None:
                progress(state, rec)
    summary = {
        "steps": state.steps,
        "t_end": state.time,
        "momentum_drift_rel": max_p_drift,
        "m2_drift_rel": max_m2_drift,
        "m0_constant": all(r.m0_per_species == records[0].m0_per_species for r in records),
        "attempted": state.attempted.tolist(),
        "accepted": state.accepted.tolist(),
        "acceptance_rate": np.divide(
            state.accepted, state.attempted, out=np.zeros(state.accepted.shape), where=state.attempted > 0
        ).tolist(),
        "majorant": state.majorant.tolist(),
        "majorant_exceedances": state.exceedances.tolist(),
        "wall_seconds": _time.perf_counter() - t0,
    }
    return SimResult(records, state, summary)


def default_entropy_box(ens: ParticleEnsemble) -> float:
    """Half-width covering six thermal standard deviations of the widest species."""
    sd = max(float(np.sqrt(np.mean(v * v))) for v in ens.velocities if len(v))
    return 6.0 * sd


def run(config: SimConfig) -> list[MomentRecord]:
    return simulate(config).records


@dataclass
class AggregatedRecords:
    times: np.ndarray
    mean: dict[str, np.ndarray]
    std_error: dict[str, np.ndarray]
    n_replicas: int


def _flatten(rec: MomentRecord) -> dict[str, float]:
    out = {f"m0_{i}": m for i, m in enumerate(rec.m0_per_species)}
    out.update(px=rec.momentum[0], py=rec.momentum[1], pz=rec.momentum[2], m2=rec.m2)
    for k, v in rec.mk.items():
        out[f"mk_{k!r}"] = v
    if rec.exp_moment is not None:
        out["exp"] = rec.exp_moment[2]
    if rec.entropy is not None:
        out["entropy"] = rec.entropy
    return out


def replica_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def replicate(config: SimConfig, n_replicas: int, same_seed: bool = False) -> AggregatedRecords:
    """Independent replicas with split seeds; mean and standard error per diagnostic."""
    if n_replicas < 2:
        raise ValueError("need at least two replicas")
    runs = []
    times = None
    for r in range(n_replicas):
        cfg = SimConfig(**{**config.__dict__, "seed": config.seed if same_seed else replica_seed(config.seed, r)})
        recs = run(cfg)
        if times is None:
            times = np.array([rec.time for rec in recs])
        runs.append([_flatten(rec) for rec in recs])
    keys = runs[0][0].keys()
    stacked = {k: np.array([[row[k] for row in rows] for rows in runs]) for k in keys}
    mean = {k: v.mean(axis=0) for k, v in stacked.items()}
    se = {k: v.std(axis=0, ddof=1) / np.sqrt(n_replicas) for k, v in stacked.items()}
    return AggregatedRecords(times, mean, se, n_replicas)
