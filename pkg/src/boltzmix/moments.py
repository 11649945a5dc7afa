"""Moments, entropy and the auxiliary inequality oracles for particle ensembles."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import binom

from .mixture import SpeciesSet

EXP_ARG_LIMIT = 700.0
REL_SLACK = 1e-12


class ParticleEnsemble:
    """Weighted velocity samples, one ``(N_i, 3)`` array per species.

    Every simulation particle carries the same number-density weight ``w``.
    """

    __slots__ = ("species", "velocities", "w")

    def __init__(self, species: SpeciesSet, velocities: Sequence[np.ndarray], w: float):
        if len(velocities) != species.count:
            raise ValueError(f"expected {species.count} velocity arrays, got {len(velocities)}")
        if not (np.isfinite(w) and w > 0):
            raise ValueError("statistical weight must be positive and finite")
        vels = []
        for i, v in enumerate(velocities):
            v = np.asarray(v, dtype=float).reshape(-1, 3)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"non-finite velocity in species {i}")
            vels.append(v)
        self.species = species
        self.velocities = vels
        self.w = float(w)

    @property
    def counts(self) -> list[int]:
        return [len(v) for v in self.velocities]

    @property
    def total_particles(self) -> int:
        return sum(self.counts)

    def brackets_sq(self, i: int) -> np.ndarray:
        v = self.velocities[i]
        return 1.0 + self.species.bracket_coefficient(i) * np.einsum("ij,ij->i", v, v)

    def m0_per_species(self) -> list[float]:
        return [self.w * n for n in self.counts]

    def momentum(self) -> np.ndarray:
        p = np.zeros(3)
        for i, v in enumerate(self.velocities):
            p += self.species.mass(i) * v.sum(axis=0)
        return self.w * p

    def momentum_scale(self) -> float:
        """w * sum_p m_p |v_p|, the natural size of momentum fluctuations."""
        return self.w * sum(
            self.species.mass(i) * np.linalg.norm(v, axis=1).sum() for i, v in enumerate(self.velocities)
        )

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(self.species, [v.copy() for v in self.velocities], self.w)


def poly_moment(ens: ParticleEnsemble, q: float) -> float:
    """Scalar polynomial moment w * sum_i sum_p <v_p>_i^q."""
    if q < 0:
        raise ValueError("moment order must be non-negative")
    if q == 0:
        return ens.w * ens.total_particles
    total = 0.0
    for i in range(ens.species.count):
        total += np.exp(0.5 * q * np.log(ens.brackets_sq(i))).sum()
    return ens.w * float(total)


def poly_moments(ens: ParticleEnsemble, qs: Sequence[float]) -> dict[float, float]:
    """Several polynomial moments sharing one pass over the brackets."""
    logs = [np.log(ens.brackets_sq(i)) for i in range(ens.species.count)]
    out = {}
    for q in qs:
        if q < 0:
            raise ValueError("moment order must be non-negative")
        if q == 0:
            out[q] = ens.w * ens.total_particles
        else:
            out[q] = ens.w * float(sum(np.exp(0.5 * q * lg).sum() for lg in logs))
    return out


def exp_moment(ens: ParticleEnsemble, alpha: float, s: float) -> float:
    """Scalar exponential moment w * sum_i sum_p exp(alpha <v_p>_i^s)."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not (0 < s <= 2):
        raise ValueError("s must lie in (0, 2]")
    total = 0.0
    for i in range(ens.species.count):
        arg = alpha * ens.brackets_sq(i) ** (0.5 * s)
        if arg.size and arg.max() > EXP_ARG_LIMIT:
            p = int(np.argmax(arg))
            raise OverflowError(
                f"exponent alpha*<v>^s = {arg[p]!r} exceeds {EXP_ARG_LIMIT} for species {i}, particle {p}"
            )
        total += np.exp(arg).sum()
    return ens.w * float(total)


def exp_partial_sum(ens: ParticleEnsemble, alpha: float, s: float, n: int) -> float:
    """Truncated series sum_{k<=n} alpha^k m_{sk} / k!."""
    moms = poly_moments(ens, [s * k for k in range(n + 1)])
    total = 0.0
    fact = 1.0
    for k in range(n + 1):
        if k:
            fact *= k
        total += alpha**k * moms[s * k] / fact
    return total


def jensen_lower_bound(m_k: float, m0_cap: float, I: int, k: float, lam: float) -> float:
    """(I m0_cap)^(-lam/k) m_k^(1 + lam/k), a lower bound for m_{k+lam}."""
    if min(m_k, m0_cap, I, k) <= 0 or not (0 < lam <= 1):
        raise ValueError("Jensen bound needs positive inputs and lam in (0, 1]")
    if k < 1:
        raise ValueError("order k must be at least 1")
    return (I * m0_cap) ** (-lam / k) * m_k ** (1.0 + lam / k)


@dataclass(frozen=True)
class InequalityResult:
    lhs: float
    rhs: float
    holds: bool

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.holds))


def interpolation_check(ens: ParticleEnsemble, k1: float, k2: float, alpha: float,
                        per_species: bool = False) -> InequalityResult:
    """m_k <= I m_{k1}^alpha m_{k2}^(1-alpha) for k = alpha k1 + (1-alpha) k2.

    With ``per_species`` each species is checked separately with constant 1 and
    the worst ratio is reported.
    """
    if not (0 < alpha < 1) or not (0 < k1 <= k2):
        raise ValueError("need 0 < alpha < 1 and 0 < k1 <= k2")
    k = alpha * k1 + (1 - alpha) * k2
    if per_species:
        worst = None
        for i in range(ens.species.count):
            sub = ParticleEnsemble(
                SpeciesSet(ens.species.masses),
                [v if j == i else np.empty((0, 3)) for j, v in enumerate(ens.velocities)],
                ens.w,
            )
            m = poly_moments(sub, [k, k1, k2])
            lhs, rhs = m[k], m[k1] ** alpha * m[k2] ** (1 - alpha)
            if worst is None or lhs - rhs > worst[0] - worst[1]:
                worst = (lhs, rhs)
        lhs, rhs = worst
    else:
        m = poly_moments(ens, [k, k1, k2])
        lhs = m[k]
        rhs = ens.species.count * m[k1] ** alpha * m[k2] ** (1 - alpha)
    return InequalityResult(lhs, rhs, bool(lhs <= rhs * (1 + REL_SLACK)))


def poly_inequality_I(x: float, y: float, p: float) -> InequalityResult:
    """(x+y)^p - x^p - y^p <= sum_{n=1}^{n_p} C(p,n)(x^n y^(p-n) + x^(p-n) y^n)."""
    if not (x > 0 and y > 0 and p > 1):
        raise ValueError("need x, y > 0 and p > 1")
    lhs = (x + y) ** p - x**p - y**p
    n_p = int(np.floor((p + 1) / 2))
    n = np.arange(1, n_p + 1, dtype=float)
    rhs = float(np.sum(binom(p, n) * (x**n * y ** (p - n) + x ** (p - n) * y**n)))
    scale = (x + y) ** p
    return InequalityResult(lhs, rhs, bool(lhs <= rhs + REL_SLACK * scale))


def poly_inequality_II(x: float, y: float, a: float, b: float, p: float) -> InequalityResult:
    """x^a y^(p-a) + x^(p-a) y^a <= x^b y^(p-b) + x^(p-b) y^b for b+1 <= a <= (p+1)/2."""
    if not (b >= 0 and b + 1 <= a <= (p + 1) / 2):
        raise ValueError("need b >= 0 and b + 1 <= a <= (p+1)/2")
    if x < 0 or y < 0:
        raise ValueError("x and y must be non-negative")
    lhs = x**a * y ** (p - a) + x ** (p - a) * y**a
    rhs = x**b * y ** (p - b) + x ** (p - b) * y**b
    return InequalityResult(lhs, rhs, bool(lhs <= rhs * (1 + REL_SLACK)))


def entropy(ens: ParticleEnsemble, bins_per_axis: int = 32, box_halfwidth: float | None = None) -> float:
    """Histogram estimate of sum_i int f_i log f_i on a common cubic velocity box.

    Each species is binned on the same grid; empty cells contribute nothing.
    If ``box_halfwidth`` is omitted the box is sized to the largest speed
    component.
    """
    if ens.total_particles == 0:
        raise ValueError("entropy of an empty ensemble")
    if bins_per_axis < 8:
        raise ValueError("need at least 8 bins per axis")
    if box_halfwidth is None:
        box_halfwidth = max(np.abs(v).max() for v in ens.velocities if len(v)) * (1 + 1e-9)
    L = float(box_halfwidth)
    edges = np.linspace(-L, L, bins_per_axis + 1)
    vol = (2 * L / bins_per_axis) ** 3
    eta = 0.0
    inside = 0
    for v in ens.velocities:
        if not len(v):
            continue
        counts, _ = np.histogramdd(v, bins=(edges, edges, edges))
        c = counts[counts > 0]
        inside += int(c.sum())
        dens = ens.w * c / vol
        eta += float(np.sum(ens.w * c * np.log(dens)))
    if inside < 0.999 * ens.total_particles:
        warnings.warn(
            f"entropy box covers only {inside / ens.total_particles:.4%} of particles", RuntimeWarning
        )
    return eta


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class MomentRecord:
    time: float
    m0_per_species: list[float]
    momentum: np.ndarray
    m2: float
    mk: dict[float, float] = field(default_factory=dict)
    exp_moment: tuple[float, float, float] | None = None
    entropy: float | None = None
    # standard errors, kept in memory only (not part of the CSV row)
    mk_se: dict[float, float] = field(default_factory=dict)
    entropy_se: float | None = None

    @staticmethod
    def header(n_species: int, ks: Sequence[float], exp_params: tuple[float, float] | None,
               with_entropy: bool) -> list[str]:
        cols = ["t"] + [f"m0_{i}" for i in range(n_species)] + ["px", "py", "pz", "m2"]
        cols += [f"mk_{_korder(k)}" for k in ks]
        if exp_params is not None:
            cols.append(f"exp_a{exp_params[0]!r}_s{exp_params[1]!r}")
        if with_entropy:
            cols.append("entropy")
        return cols

    def row(self, ks: Sequence[float]) -> list[str]:
        vals = [_fmt(self.time)] + [_fmt(m) for m in self.m0_per_species]
        vals += [_fmt(c) for c in self.momentum] + [_fmt(self.m2)]
        vals += [_fmt(self.mk[k]) for k in ks]
        if self.exp_moment is not None:
            vals.append(_fmt(self.exp_moment[2]))
        if self.entropy is not None:
            vals.append(_fmt(self.entropy))
        return vals


def _korder(k: float) -> str:
    k = float(k)
    return str(int(k)) if k.is_integer() else repr(k)


def poly_moment_se(ens: ParticleEnsemble, q: float) -> float:
    """Standard error of the particle estimator of m_q, stratified by species."""
    var = 0.0
    for i in range(ens.species.count):
        x = ens.brackets_sq(i) ** (0.5 * q)
        if len(x) > 1:
            var += len(x) * x.var(ddof=1)
    return ens.w * float(np.sqrt(var))


def entropy_bootstrap(ens: ParticleEnsemble, bins_per_axis: int, box_halfwidth: float,
                      n_boot: int, rng: np.random.Generator) -> tuple[float, float]:
    """Histogram entropy and its bootstrap standard error.

    Resampling particles with replacement within each species is equivalent to
    a multinomial redraw of the occupied cell counts, which is what is done.
    """
    if n_boot < 2:
        raise ValueError("need at least two bootstrap replicates")
    L = float(box_halfwidth)
    edges = np.linspace(-L, L, bins_per_axis + 1)
    vol = (2 * L / bins_per_axis) ** 3
    eta = entropy(ens, bins_per_axis, box_halfwidth)
    boots = np.zeros(n_boot)
    for v in ens.velocities:
        if not len(v):
            continue
        counts, _ = np.histogramdd(v, bins=(edges, edges, edges))
        c = counts[counts > 0]
        draws = rng.multinomial(len(v), c / len(v), size=n_boot).astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(draws > 0, ens.w * draws * np.log(ens.w * draws / vol), 0.0)
        boots += terms.sum(axis=1)
    return eta, float(boots.std(ddof=1))


def measure(ens: ParticleEnsemble, t: float, ks: Sequence[float] = (), exp_params=None,
            entropy_bins: int | None = None, entropy_box: float | None = None,
            n_boot: int = 0, rng: np.random.Generator | None = None) -> MomentRecord:
    """Snapshot of every diagnostic at time ``t``."""
    moms = poly_moments(ens, [2.0, *ks])
    rec = MomentRecord(
        time=float(t),
        m0_per_species=ens.m0_per_species(),
        momentum=ens.momentum(),
        m2=moms[2.0],
        mk={float(k): moms[k] for k in ks},
        mk_se={float(k): poly_moment_se(ens, k) for k in ks},
    )
    if exp_params is not None:
        a, s = exp_params
        rec.exp_moment = (a, s, exp_moment(ens, a, s))
    if entropy_bins is not None:
        if n_boot:
            rec.entropy, rec.entropy_se = entropy_bootstrap(ens, entropy_bins, entropy_box, n_boot, rng)
        else:
            rec.entropy = entropy(ens, entropy_bins, entropy_box)
    return rec


def random_ensemble(rng: np.random.Generator, max_species: int = 3, max_particles: int = 20) -> ParticleEnsemble:
    """Small random ensemble: log-uniform masses, Gaussian velocities with random spread."""
    n = int(rng.integers(1, max_species + 1))
    masses = np.exp(rng.uniform(np.log(0.1), np.log(10.0), n))
    vels = [
        rng.standard_normal((int(rng.integers(1, max_particles + 1)), 3)) * np.exp(rng.uniform(-2, 2))
        for _ in range(n)
    ]
    return ParticleEnsemble(SpeciesSet(masses), vels, float(np.exp(rng.uniform(np.log(0.01), np.log(10.0)))))


def fuzz_inequalities(rng: np.random.Generator, cases: int) -> dict[str, int]:
    """Violation counts of the four auxiliary inequalities over ``cases`` random draws each."""
    bad = {"poly_inequality_I": 0, "poly_inequality_II": 0, "interpolation": 0, "jensen": 0}
    for _ in range(cases):
        x, y = rng.uniform(1e-6, 100.0, 2)
        p = rng.uniform(1.0 + 1e-9, 20.0)
        if not poly_inequality_I(x, y, p).holds:
            bad["poly_inequality_I"] += 1

        p = rng.uniform(3.0, 20.0)
        b = rng.uniform(0.0, (p - 1) / 2 - 1)
        a = rng.uniform(b + 1, (p + 1) / 2)
        x, y = rng.uniform(0.0, 50.0, 2)
        if not poly_inequality_II(x, y, a, b, p).holds:
            bad["poly_inequality_II"] += 1

        ens = random_ensemble(rng)
        k1 = rng.uniform(0.01, 10.0)
        k2 = k1 + rng.uniform(0.0, 10.0)
        if not interpolation_check(ens, k1, k2, rng.uniform(0.01, 0.99)).holds:
            bad["interpolation"] += 1

        k = rng.uniform(1.0, 10.0)
        lam = rng.uniform(1e-3, 1.0)
        m0 = poly_moment(ens, 0.0)
        cap = m0 * rng.uniform(1.0, 2.0)
        bound = jensen_lower_bound(poly_moment(ens, k), cap, ens.species.count, k, lam)
        if poly_moment(ens, k + lam) < bound * (1 - REL_SLACK):
            bad["jensen"] += 1
    return bad
