"""Explicit ODI constants, the lower cross-section bound and Bernoulli envelopes."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import binom

from .mixture import CrossSection, SpeciesSet, mass_fraction
from .moments import ParticleEnsemble, poly_moments
from .povzner import KStarSummary, povzner_linf

MOMENTUM_SIGMAS = 5.0


@dataclass(frozen=True)
class OmegaConstants:
    """Bounds describing the invariant set: number density, energy, 2+eps and k* moments."""

    c0: float
    C0: float
    c2: float
    C2: float
    C2eps: float
    eps: float
    C_kstar: float

    def __post_init__(self):
        vals = asdict(self)
        if any(not (np.isfinite(v) and v > 0) for v in vals.values()):
            raise ValueError(f"Omega constants must be positive and finite: {vals}")
        if self.c0 > self.C0 or self.c2 > self.C2:
            raise ValueError("need c0 <= C0 and c2 <= C2")
        if not self.C0 < self.c2:
            raise ValueError("need C0 < c2")


@dataclass(frozen=True)
class ODIConstants:
    k: float
    A_k: float
    B_k: float
    c_lb: float
    gamma_bar: float

    @property
    def rate(self) -> float:
        """Bernoulli exponent c = gamma_bar / k."""
        return self.gamma_bar / self.k


def _pairs(n):
    return [(i, j) for i in range(n) for j in range(n)]


def _c_tilde(cross_section: CrossSection) -> float:
    return float(np.min(np.minimum(1.0, 2.0 ** (1.0 - cross_section.gamma))))


def compute_clb(species: SpeciesSet, cross_section: CrossSection, c: float, C: float, B: float,
                eps: float) -> float:
    """Closed-form constant of the lower cross-section bound."""
    if not (0 < c <= C) or not B > 0 or not eps > 0:
        raise ValueError("need 0 < c <= C, B > 0 and eps > 0")
    gb = cross_section.gamma_bar
    gmin = cross_section.gamma_min
    ct = _c_tilde(cross_section)
    ratio = 2.0 * C / (ct * c)
    inner = 2.0 ** (2.0 + eps) * (max(C, B) / c) * (1.0 + ratio ** (2.0 / gb)) ** ((2.0 + eps) / 2.0)
    mmax = max(species.masses) / species.total_mass
    return float(
        0.5 * c * ct * inner ** ((gmin - 2.0) / eps) * (1.0 + mmax * ratio**2) ** (-gb / 2.0)
    )


def clb_inputs(omega: OmegaConstants, species: SpeciesSet) -> tuple[float, float, float]:
    """(c, C, B) for ``compute_clb`` expressed through the Omega bounds.

    c and C bound the mass-weighted density sum_i m_i int f_i and its second
    velocity moment; B bounds the 2+eps moment of the same.
    """
    M = species.total_mass
    mmin, mmax = min(species.masses), max(species.masses)
    c = min(omega.c0 * mmin, (omega.c2 - omega.C0) * M)
    C = max(omega.C0 * mmax, (omega.C2 - omega.c0) * M)
    B = omega.C2eps * M ** (1.0 + omega.eps / 2.0) * mmax ** (-omega.eps / 2.0)
    return c, C, B


def clb_from_omega(omega: OmegaConstants, species: SpeciesSet, cross_section: CrossSection) -> float:
    c, C, B = clb_inputs(omega, species)
    return compute_clb(species, cross_section, c, C, B, omega.eps)


@dataclass
class CheckResult:
    lhs: float
    rhs: float
    holds: bool
    skipped: bool = False
    reason: str = ""


def _momentum_tolerance(ens: ParticleEnsemble) -> tuple[float, float]:
    p = ens.momentum()
    var = np.zeros(3)
    for i, v in enumerate(ens.velocities):
        var += np.sum((ens.species.mass(i) * v) ** 2, axis=0)
    se = ens.w * np.sqrt(var)
    return float(np.linalg.norm(p)), float(MOMENTUM_SIGMAS * np.linalg.norm(se))


def lower_bound_check(ens: ParticleEnsemble, v, j: int, c_lb: float, cross_section: CrossSection,
                      n_se: float = 3.0) -> CheckResult:
    """sum_i m_i int f_i(w) |v - w|^gamma_ij dw >= c_lb <v>_j^gamma_bar, as a discrete sum."""
    v = np.asarray(v, dtype=float).reshape(3)
    pnorm, ptol = _momentum_tolerance(ens)
    rhs = c_lb * (1.0 + ens.species.bracket_coefficient(j) * v @ v) ** (cross_section.gamma_bar / 2.0)
    if pnorm > ptol:
        return CheckResult(float("nan"), rhs, False, True, "ensemble momentum is not zero")
    terms = []
    for i, w in enumerate(ens.velocities):
        d = np.linalg.norm(w - v, axis=1)
        terms.append(ens.species.mass(i) * d ** cross_section.gamma[i, j])
    t = np.concatenate(terms)
    lhs = ens.w * float(t.sum())
    se = ens.w * float(np.sqrt(len(t)) * t.std()) if len(t) > 1 else 0.0
    return CheckResult(lhs, rhs, bool(lhs >= rhs - n_se * se))


def _pair_constants(k, species, cross_section):
    n = species.count
    M = species.total_mass
    margins, growth, mass_factor = [], [], []
    for i, j in _pairs(n):
        kern = cross_section.kernel(i, j)
        if not kern.is_bounded:
            raise ValueError(f"kernel ({i},{j}) is unbounded; no closed-form Povzner constant")
        c_ij = povzner_linf(k / 2.0, mass_fraction(i, j, species), kern.sup_norm)
        f = (M / np.sqrt(species.mass(i) * species.mass(j))) ** cross_section.gamma[i, j]
        margins.append(kern.l1_norm - c_ij)
        growth.append(f * c_ij)
        mass_factor.append(f)
    return np.array(margins), np.array(growth), np.array(mass_factor)


def binomial_sum(k: float) -> float:
    """sum_{l=1}^{floor((k+1)/2)} C(k, l) with the generalised binomial for real k."""
    ell = np.arange(1, int(np.floor((k + 1) / 2)) + 1, dtype=float)
    return float(np.sum(binom(k, ell)))


def compute_ak_bk(k: float, kstar: KStarSummary, omega: OmegaConstants, c_lb: float,
                  species: SpeciesSet, cross_section: CrossSection) -> ODIConstants:
    if k < kstar.k_star:
        raise ValueError(f"k={k!r} is below k*={kstar.k_star!r}; A_k would not be positive")
    margins, growth, _ = _pair_constants(k, species, cross_section)
    gb = cross_section.gamma_bar
    I = species.count
    A = float(margins.min()) * c_lb / max(species.masses) * (I * omega.C0) ** (-gb / k)
    B = 2.0 * omega.C2 * float(growth.max()) * binomial_sum(k)
    if not (A > 0 and B > 0):
        raise ValueError(f"non-positive ODI constants at k={k!r}: A={A!r}, B={B!r}")
    return ODIConstants(float(k), A, B, float(c_lb), gb)


@dataclass(frozen=True)
class KConstants:
    """K_1 (absorption) and K_2 (mass-ratio prefactor) of the rescaled moment ODI."""

    k: float
    K1: float
    K2: float
    max_povzner: float


def compute_k1_k2(k: float, c_lb: float, species: SpeciesSet, cross_section: CrossSection) -> KConstants:
    margins, growth, mass_factor = _pair_constants(k, species, cross_section)
    K1 = float(margins.min()) * c_lb / max(species.masses)
    K2 = 0.5 * float(mass_factor.max())
    cmax = max(
        povzner_linf(k / 2.0, mass_fraction(i, j, species), cross_section.kernel(i, j).sup_norm)
        for i, j in _pairs(species.count)
    )
    return KConstants(float(k), K1, K2, float(cmax))


def bernoulli_solution(a: float, b: float, c: float, y0: float, t):
    """Closed-form solution of y' = -a y^(1+c) + b y with y(0) = y0."""
    if min(a, b, c, y0) <= 0:
        raise ValueError("Bernoulli parameters and y0 must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    # factored through y0 so that t = 0 returns y0 exactly
    e = np.exp(-c * b * t)
    out = y0 * (e + (a / b) * y0**c * -np.expm1(-c * b * t)) ** (-1.0 / c)
    return float(out) if out.ndim == 0 else out


def log_equilibrium(consts: ODIConstants) -> float:
    """log of (A_k/B_k)^(-k/gamma_bar)."""
    return -(consts.k / consts.gamma_bar) * np.log(consts.A_k / consts.B_k)


def log_generation_envelope(k: float, consts: ODIConstants, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("generation envelope needs t > 0")
    if k != consts.k:
        raise ValueError(f"constants were assembled for k={consts.k!r}, not {k!r}")
    g = consts.gamma_bar
    return log_equilibrium(consts) - (k / g) * np.log(-np.expm1(-g * consts.B_k * t / k))


def generation_envelope(k: float, consts: ODIConstants, t):
    """(A_k/B_k)^(-k/g) (1 - exp(-g B_k t / k))^(-k/g), g = gamma_bar."""
    out = np.exp(log_generation_envelope(k, consts, t))
    return float(out) if np.ndim(out) == 0 else out


def log_generation_envelope_max(k: float, consts: ODIConstants, t) -> np.ndarray:
    """Log of the B^m max{1, t^(-k/g)} form of the generation bound.

    B^m = E^m max{(g B/k)^(-k/g) e^(B/2), (1 - e^(-g B/k))^(-k/g)}.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("generation envelope needs t > 0")
    g, B = consts.gamma_bar, consts.B_k
    x = g * B / k
    small = -(k / g) * np.log(x) + B / 2.0
    large = -(k / g) * np.log(-np.expm1(-x))
    logB = log_equilibrium(consts) + max(small, large)
    return logB + np.maximum(0.0, -(k / g) * np.log(t))


def generation_envelope_max(k: float, consts: ODIConstants, t):
    out = np.exp(log_generation_envelope_max(k, consts, t))
    return float(out) if np.ndim(out) == 0 else out


def propagation_envelope(consts: ODIConstants, mk0: float) -> float:
    """max{(A_k/B_k)^(-k/gamma_bar), m_k(0)}."""
    if mk0 < 0:
        raise ValueError("initial moment must be non-negative")
    return float(max(np.exp(log_equilibrium(consts)), mk0))


def log_propagation_envelope(consts: ODIConstants, mk0: float) -> float:
    return float(max(log_equilibrium(consts), np.log(mk0) if mk0 > 0 else -np.inf))


def omega_cap_constant(A: float, B: float, gamma_bar: float, k_star: float) -> float:
    """Root of L(x) = -A x^(1+c) + B x plus the maximum of L, with c = gamma_bar/k*."""
    if min(A, B, gamma_bar, k_star) <= 0:
        raise ValueError("all arguments must be positive")
    c = gamma_bar / k_star
    x_star = (B / A) ** (1.0 / c)
    x_max = (B / (A * (1.0 + c))) ** (1.0 / c)
    L_max = -A * x_max ** (1.0 + c) + B * x_max
    return float(x_star + L_max)


@dataclass
class OmegaCondition:
    name: str
    value: float
    lower: float | None
    upper: float | None
    passed: bool


@dataclass
class OmegaReport:
    conditions: list[OmegaCondition] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name: str) -> OmegaCondition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)


def check_omega(ens: ParticleEnsemble, omega: OmegaConstants, k_star: float) -> OmegaReport:
    rep = OmegaReport()
    if ens.total_particles == 0:
        m = {0.0: 0.0, 2.0: 0.0, 2.0 + omega.eps: 0.0, float(k_star): 0.0}
        pnorm, ptol = 0.0, 0.0
    else:
        m = poly_moments(ens, [0.0, 2.0, 2.0 + omega.eps, float(k_star)])
        pnorm, ptol = _momentum_tolerance(ens)

    def add(name, value, lo, hi):
        ok = (lo is None or value >= lo) and (hi is None or value <= hi)
        rep.conditions.append(OmegaCondition(name, float(value), lo, hi, bool(ok)))

    add("m0", m[0.0], omega.c0, omega.C0)
    add("m2", m[2.0], omega.c2, omega.C2)
    add("m2eps", m[2.0 + omega.eps], None, omega.C2eps)
    add("mkstar", m[float(k_star)], None, omega.C_kstar)
    add("momentum", pnorm, None, ptol)
    return rep


def omega_from_ensemble(ens: ParticleEnsemble, eps: float, k_star: float, slack: float = 0.0) -> OmegaConstants:
    """Tightest Omega constants containing a measured ensemble, widened by ``slack`` (relative)."""
    m = poly_moments(ens, [0.0, 2.0, 2.0 + eps, float(k_star)])
    lo, hi = 1.0 - slack, 1.0 + slack
    return OmegaConstants(
        c0=m[0.0] * lo, C0=m[0.0] * hi, c2=m[2.0] * lo, C2=m[2.0] * hi,
        C2eps=m[2.0 + eps] * hi, eps=eps, C_kstar=m[float(k_star)] * hi,
    )
