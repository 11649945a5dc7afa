"""Angular-averaged Povzner constants and the moment-order thresholds k*."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .collision import CollisionInput, center_and_relative_arrays, energy_identity_arrays, uniform_sphere
from .mixture import AngularKernel, CrossSection, SpeciesSet, mass_fraction

BRANCH_POINT = 2.0
HORIZON_FACTOR = 100.0
KSTAR_CAP = 1e4


def _check_args(n, r):
    n = np.asarray(n, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(~(n > 1.0)):
        raise ValueError("Povzner order n must exceed 1")
    if np.any(~((r > 0.0) & (r < 1.0))):
        raise ValueError("mass fraction r must lie in (0, 1)")
    return n, r


def povzner_renormalized(n, r):
    """Normalised bounded-kernel Povzner constant C_inf_n(r).

    Vectorised over broadcastable ``n`` and ``r``; returns a float for scalar
    arguments.
    """
    n, r = _check_args(n, r)
    n, r = np.broadcast_arrays(n, r)
    # r_lo = 1 - r_hi makes r and 1 - r map to bit-identical inputs
    rb = np.maximum(r, 1.0 - r)
    rl = 1.0 - rb
    head = 2.0 * rb**n
    one = 1.0 - rl
    tail = (
        head
        - 2.0 * (rb**2 / rl**2) * one**n
        - (rb**2 / rl) * n * one ** (n - 1.0)
        + 2.0 * (rb**2 / rl**3) * (1.0 - one ** (n + 1.0)) / (n + 1.0)
    )
    out = np.where(n > BRANCH_POINT, tail, head)
    return float(out) if out.ndim == 0 else out


def povzner_linf(n, r, b_sup: float):
    """Povzner constant for a bounded kernel: 4 pi ||b||_inf C_inf_n(r)."""
    if b_sup < 0:
        raise ValueError("b_sup must be non-negative")
    return 4.0 * np.pi * b_sup * povzner_renormalized(n, r)


@dataclass(frozen=True)
class PovznerConstants:
    """C_inf_n(r) for a fixed mass fraction."""

    r: float
    branch_point: float = BRANCH_POINT

    def __post_init__(self):
        _check_args(2.0, self.r)

    def evaluate(self, n):
        return povzner_renormalized(n, self.r)


def sphere_average_exact(n, p, lam):
    """Uniform-sphere mean of (p + lam mu)^n, mu = sigma . V_hat, in closed form."""
    p = np.asarray(p, dtype=float)
    lam = np.asarray(lam, dtype=float)
    safe = np.where(lam > 0, lam, 1.0)
    val = ((p + lam) ** (n + 1) - (p - lam) ** (n + 1)) / (2.0 * safe * (n + 1))
    return np.where(lam > 0, val, p**n)


def _mc_integrand(ks, v, vs, mi, mj, M, kernel, sigma):
    V, u = center_and_relative_arrays(v, vs, mi, mj)
    umag = np.linalg.norm(u)
    vp = V + (mj / (mi + mj)) * umag * sigma
    vsp = V - (mi / (mi + mj)) * umag * sigma
    bp2 = 1.0 + mi / M * np.sum(vp * vp, axis=1)
    bsp2 = 1.0 + mj / M * np.sum(vsp * vsp, axis=1)
    if kernel.kind == "constant":
        weight = 4.0 * np.pi * kernel.value
    else:
        u_hat = u / umag if umag > 0 else np.array([0.0, 0.0, 1.0])
        weight = 4.0 * np.pi * kernel(sigma @ u_hat)
    return [weight * (bp2 ** (k / 2.0) + bsp2 ** (k / 2.0)) for k in ks]


def angular_average_mc_multi(ks, inp: CollisionInput, kernel: AngularKernel, species: SpeciesSet,
                             samples: int, rng: np.random.Generator):
    """Monte Carlo sphere integral of b(sigma . u_hat)(<v'>^k + <v'_*>^k) for several k.

    One set of uniform sigma draws is shared by all orders. Returns arrays of
    estimates and standard errors aligned with ``ks``.
    """
    if samples < 1000:
        raise ValueError("at least 1000 samples are required")
    ks = [float(k) for k in ks]
    mi, mj = species.mass(inp.i), species.mass(inp.j)
    M = species.total_mass
    if np.array_equal(inp.v, inp.v_star):
        # u = 0: every sigma gives v' = v'_* = V
        V = inp.v
        bi = 1.0 + mi / M * V @ V
        bj = 1.0 + mj / M * V @ V
        est = np.array([kernel.l1_norm * (bi ** (k / 2) + bj ** (k / 2)) for k in ks])
        return est, np.zeros(len(ks))
    sigma = uniform_sphere(rng, samples)
    vals = _mc_integrand(ks, inp.v, inp.v_star, mi, mj, M, kernel, sigma)
    est = np.array([v.mean() for v in vals])
    se = np.array([v.std(ddof=1) / np.sqrt(samples) for v in vals])
    return est, se


def angular_average_mc(k: float, inp: CollisionInput, kernel: AngularKernel, species: SpeciesSet,
                       samples: int, rng: np.random.Generator):
    """(estimate, std_error) of the sphere integral for a single order k >= 2."""
    if k < 2:
        raise ValueError("order k must be at least 2")
    est, se = angular_average_mc_multi([k], inp, kernel, species, samples, rng)
    return float(est[0]), float(se[0])


def bracket_energy(inp: CollisionInput, species: SpeciesSet) -> float:
    mi, mj = species.mass(inp.i), species.mass(inp.j)
    E = energy_identity_arrays(inp.v, inp.v_star, mi, mj, species.total_mass)[0]
    return float(E)


def _pair_violation(k_grid, r, kernel: AngularKernel):
    n = k_grid / 2.0
    if kernel.kind == "constant":
        # equivalent normalised test C_inf < 1
        return povzner_renormalized(n, r) >= 1.0
    return povzner_linf(n, r, kernel.sup_norm) >= kernel.l1_norm


def find_kstar_pair(r: float, kernel: AngularKernel, grid_step: float = 0.5) -> float:
    """Smallest grid order k with C^{ij}_{k'/2} < ||b||_L1 for all grid k' in [k, 100 k].

    The grid is {2 + h, 2 + 2h, ...}. Raises if no such k exists below 1e4.
    """
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    if not kernel.is_bounded:
        raise ValueError("closed-form Povzner constant needs a bounded kernel")
    if not kernel.l1_norm > 0:
        raise ValueError("kernel has zero L1 norm")
    m = 1
    while True:
        k = 2.0 + m * grid_step
        if k > KSTAR_CAP:
            raise ValueError(f"no k* below {KSTAR_CAP:g} for r={r!r}")
        m_hi = int(np.floor((HORIZON_FACTOR * k - 2.0) / grid_step + 1e-9))
        idx = np.arange(m, m_hi + 1)
        bad = _pair_violation(2.0 + idx * grid_step, r, kernel)
        if not bad.any():
            return k
        m = int(idx[np.flatnonzero(bad)[-1]]) + 1


@dataclass(frozen=True)
class KStarSummary:
    k_star_pairs: np.ndarray
    k_bar: float
    gamma_bar: float
    k_star: float
    grid_step: float = 0.5
    horizon: float = HORIZON_FACTOR

    def to_dict(self) -> dict:
        return {
            "pairs": self.k_star_pairs.tolist(),
            "k_bar": self.k_bar,
            "gamma_bar": self.gamma_bar,
            "k_star": self.k_star,
            "grid_step": self.grid_step,
            "horizon": self.horizon,
        }


def kstar_global(species: SpeciesSet, cross_section: CrossSection, grid_step: float = 0.5) -> KStarSummary:
    n = species.count
    pairs = np.empty((n, n))
    cache: dict[tuple, float] = {}
    for i in range(n):
        for j in range(n):
            r = mass_fraction(i, j, species)
            kern = cross_section.kernel(i, j)
            key = (round(max(r, 1 - r), 15), repr(kern.to_dict()))
            if key not in cache:
                cache[key] = find_kstar_pair(r, kern, grid_step)
            pairs[i, j] = cache[key]
    k_bar = float(pairs.max())
    gb = cross_section.gamma_bar
    return KStarSummary(pairs, k_bar, gb, max(k_bar, 2.0 + 2.0 * gb), grid_step, HORIZON_FACTOR)


def povzner_scan(r_grid, n_grid) -> np.ndarray:
    """Matrix of C_inf_n(r) with rows indexed by r and columns by n."""
    r = np.asarray(list(r_grid), dtype=float)
    n = np.asarray(list(n_grid), dtype=float)
    if r.size == 0 or n.size == 0:
        raise ValueError("scan grids must be non-empty")
    return povzner_renormalized(n[None, :], r[:, None])
