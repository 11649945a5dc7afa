"""Binary elastic collisions between species of unequal mass.

The scalar-input functions (``collide``, ``energy_identity`` ...) follow a
single pair of particles. The ``*_arrays`` variants do the same arithmetic on
stacked ``(n, 3)`` velocity arrays with per-row masses and are what the
simulator and the fuzz suites call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mixture import AngularKernel, SpeciesSet, mass_fraction

SIGMA_TOL = 1e-12


@dataclass(frozen=True)
class CollisionInput:
    v: np.ndarray
    v_star: np.ndarray
    i: int
    j: int

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))
        object.__setattr__(self, "v_star", np.asarray(self.v_star, dtype=float).reshape(3))


@dataclass(frozen=True)
class CollisionOutput:
    v_prime: np.ndarray
    v_star_prime: np.ndarray


@dataclass(frozen=True)
class EnergyIdentityTerms:
    E: float
    p: float
    q: float
    lam: float
    s: float
    r: float
    V: np.ndarray
    u: np.ndarray
    V_hat: np.ndarray


def _norm(x):
    return np.sqrt(np.sum(x * x, axis=-1))


def _pair_masses(inp: CollisionInput, species: SpeciesSet):
    return species.mass(inp.i), species.mass(inp.j)


# ---------------------------------------------------------------------------
# vectorised kernels


def center_and_relative_arrays(v, vs, mi, mj):
    mi = np.asarray(mi, dtype=float)[..., None]
    mj = np.asarray(mj, dtype=float)[..., None]
    V = (mi * v + mj * vs) / (mi + mj)
    return V, v - vs


def collide_arrays(v, vs, mi, mj, sigma):
    """Post-collision velocities V + (1-r)|u| sigma and V - r|u| sigma, row by row."""
    V, u = center_and_relative_arrays(v, vs, mi, mj)
    mi = np.asarray(mi, dtype=float)[..., None]
    mj = np.asarray(mj, dtype=float)[..., None]
    umag = _norm(u)[..., None]
    # v = v* makes V = v exactly; avoid the rounding of the weighted mean
    V = np.where(umag == 0, v, V)
    vp = V + (mj / (mi + mj)) * umag * sigma
    vsp = V - (mi / (mi + mj)) * umag * sigma
    return vp, vsp


def energy_identity_arrays(v, vs, mi, mj, total_mass):
    """Energy-identity terms (E, p, q, lam, s, r, V, u, V_hat) for stacked pairs.

    ``sE - 1`` and ``(1-s)E - 1`` are formed directly from |u|^2 and |V|^2 so
    that lam keeps full relative precision for nearly-grazing pairs.
    """
    mi = np.asarray(mi, dtype=float)
    mj = np.asarray(mj, dtype=float)
    M = np.asarray(total_mass, dtype=float)
    V, u = center_and_relative_arrays(v, vs, mi, mj)
    u2 = np.sum(u * u, axis=-1)
    V2 = np.sum(V * V, axis=-1)
    r = mi / (mi + mj)
    se_m1 = mi * mj / ((mi + mj) * M) * u2
    ose_m1 = (mi + mj) / M * V2
    sE = 1.0 + se_m1
    oE = 1.0 + ose_m1
    E = sE + oE
    s = sE / E
    p = r * oE + (1.0 - r) * sE
    q = E - p
    lam = 2.0 * np.sqrt(r * (1.0 - r) * se_m1 * ose_m1)
    Vn = np.sqrt(V2)
    with np.errstate(invalid="ignore", divide="ignore"):
        V_hat = np.where(Vn[..., None] > 0, V / Vn[..., None], 0.0)
    return E, p, q, lam, s, r, V, u, V_hat


def uniform_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    """n points uniformly distributed on S^2."""
    tau = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    st = np.sqrt(np.maximum(0.0, 1.0 - tau * tau))
    return np.column_stack([st * np.cos(phi), st * np.sin(phi), tau])


def orthonormal_frame(z_hat: np.ndarray):
    """Two unit vectors completing each row of ``z_hat`` to an orthonormal basis.

    Rows of zeros get the canonical frame.
    """
    z = np.atleast_2d(np.asarray(z_hat, dtype=float))
    n = np.linalg.norm(z, axis=1)
    zz = np.where(n[:, None] > 0, z / np.where(n > 0, n, 1.0)[:, None], [0.0, 0.0, 1.0])
    # pick the helper axis least aligned with z
    helper = np.zeros_like(zz)
    idx = np.argmin(np.abs(zz), axis=1)
    helper[np.arange(len(zz)), idx] = 1.0
    e1 = np.cross(zz, helper)
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(zz, e1)
    return zz, e1, e2


def sample_tau(rng: np.random.Generator, kernel: AngularKernel, n: int) -> np.ndarray:
    """Draw tau = sigma . u_hat with density proportional to b(tau) on [-1, 1].

    Constant kernels give tau uniform. Tabulated kernels are inverted exactly
    on each linear segment (the CDF is piecewise quadratic).
    """
    if kernel.kind == "constant":
        if kernel.value <= 0:
            raise ValueError("degenerate angular kernel: all values are zero")
        return rng.uniform(-1.0, 1.0, n)
    cdf = kernel.cumulative()
    total = cdf[-1]
    if not total > 0:
        raise ValueError("degenerate angular kernel: all values are zero")
    target = rng.uniform(0.0, total, n)
    k = np.clip(np.searchsorted(cdf, target, side="right") - 1, 0, len(cdf) - 2)
    t0 = kernel.tau[k]
    h = kernel.tau[k + 1] - t0
    b0 = kernel.b[k]
    slope = (kernel.b[k + 1] - b0) / h
    rem = target - cdf[k]
    # solve b0 x + slope x^2 / 2 = rem for x in [0, h]
    disc = np.maximum(b0 * b0 + 2.0 * slope * rem, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(
            np.abs(slope) * h > 1e-12 * np.maximum(b0, 1e-300),
            2.0 * rem / (b0 + np.sqrt(disc)),
            rem / np.where(b0 > 0, b0, 1.0),
        )
    x = np.where(np.isfinite(x), x, 0.0)
    return t0 + np.clip(x, 0.0, h)


def sample_sigma_arrays(rng: np.random.Generator, u_hat: np.ndarray, kernel: AngularKernel) -> np.ndarray:
    u_hat = np.atleast_2d(u_hat)
    n = len(u_hat)
    tau = sample_tau(rng, kernel, n)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    z, e1, e2 = orthonormal_frame(u_hat)
    st = np.sqrt(np.maximum(0.0, 1.0 - tau * tau))[:, None]
    return tau[:, None] * z + st * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)


# ---------------------------------------------------------------------------
# single-pair API


def center_and_relative(inp: CollisionInput, species: SpeciesSet):
    mi, mj = _pair_masses(inp, species)
    V, u = center_and_relative_arrays(inp.v, inp.v_star, mi, mj)
    return V, u


def collide(inp: CollisionInput, sigma, species: SpeciesSet) -> CollisionOutput:
    sigma = np.asarray(sigma, dtype=float).reshape(3)
    if abs(np.linalg.norm(sigma) - 1.0) > SIGMA_TOL:
        raise ValueError(f"scattering direction is not a unit vector: |sigma|={np.linalg.norm(sigma)!r}")
    mi, mj = _pair_masses(inp, species)
    vp, vsp = collide_arrays(inp.v, inp.v_star, mi, mj, sigma)
    return CollisionOutput(vp, vsp)


def energy_identity(inp: CollisionInput, species: SpeciesSet) -> EnergyIdentityTerms:
    mi, mj = _pair_masses(inp, species)
    E, p, q, lam, s, r, V, u, V_hat = energy_identity_arrays(
        inp.v, inp.v_star, mi, mj, species.total_mass
    )
    return EnergyIdentityTerms(float(E), float(p), float(q), float(lam), float(s), float(r), V, u, V_hat)


def conservation_residuals(inp: CollisionInput, out: CollisionOutput, species: SpeciesSet):
    """Absolute momentum and kinetic-energy residuals of a collision."""
    mi, mj = _pair_masses(inp, species)
    dp = mi * (out.v_prime - inp.v) + mj * (out.v_star_prime - inp.v_star)
    de = mi * (out.v_prime @ out.v_prime - inp.v @ inp.v) + mj * (
        out.v_star_prime @ out.v_star_prime - inp.v_star @ inp.v_star
    )
    return float(np.linalg.norm(dp)), float(abs(de))


def sample_sigma(rng: np.random.Generator, u_hat, kernel: AngularKernel, size: int | None = None):
    """Scattering direction(s) with density b(sigma . u_hat) / ||b||_L1 on S^2."""
    u_hat = np.asarray(u_hat, dtype=float)
    if u_hat.ndim == 1:
        rows = np.broadcast_to(u_hat, (1 if size is None else size, 3))
        out = sample_sigma_arrays(rng, rows, kernel)
        return out[0] if size is None else out
    return sample_sigma_arrays(rng, u_hat, kernel)


def equal_mass_collide(v, vs, sigma):
    """Single-gas collision rule (v+v*)/2 +- |u| sigma / 2."""
    v = np.asarray(v, dtype=float)
    vs = np.asarray(vs, dtype=float)
    half = 0.5 * _norm(v - vs)[..., None]
    mid = 0.5 * (v + vs)
    return mid + half * sigma, mid - half * sigma


def fuzz_corpus(rng: np.random.Generator, n: int, mass_range=(0.1, 10.0)):
    """Random collision inputs: log-uniform masses, standard Gaussian velocities, uniform sigma.

    Each case is a two-species mixture (so total mass = m_i + m_j).
    """
    lo, hi = np.log(mass_range[0]), np.log(mass_range[1])
    mi = np.exp(rng.uniform(lo, hi, n))
    mj = np.exp(rng.uniform(lo, hi, n))
    v = rng.standard_normal((n, 3))
    vs = rng.standard_normal((n, 3))
    sigma = uniform_sphere(rng, n)
    return mi, mj, v, vs, sigma


def verify_corpus(rng: np.random.Generator, n: int, chunk: int = 200_000) -> dict:
    """Run the collision fuzz suite and return the max relative residuals.

    Residuals are relative to the natural scale of each quantity: momentum to
    m_i|v| + m_j|v*|, kinetic energy to m_i|v|^2 + m_j|v*|^2, bracket energies
    to E, and |u'| to |u|.
    """
    worst = dict(max_momentum_residual=0.0, max_energy_residual=0.0,
                 max_identity_residual=0.0, max_relative_speed_residual=0.0)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        mi, mj, v, vs, sigma = fuzz_corpus(rng, m)
        M = mi + mj
        vp, vsp = collide_arrays(v, vs, mi, mj, sigma)
        mi_, mj_ = mi[:, None], mj[:, None]
        p_scale = mi * _norm(v) + mj * _norm(vs)
        dp = _norm(mi_ * vp + mj_ * vsp - mi_ * v - mj_ * vs) / p_scale
        e0 = mi * np.sum(v * v, 1) + mj * np.sum(vs * vs, 1)
        de = np.abs(mi * np.sum(vp * vp, 1) + mj * np.sum(vsp * vsp, 1) - e0) / e0
        E, p, q, lam, s, r, V, u, V_hat = energy_identity_arrays(v, vs, mi, mj, M)
        mu = np.sum(sigma * V_hat, 1)
        bp = 1.0 + mi / M * np.sum(vp * vp, 1)
        bsp = 1.0 + mj / M * np.sum(vsp * vsp, 1)
        di = np.maximum(np.abs(bp - (p + lam * mu)), np.abs(bsp - (q - lam * mu))) / E
        un = _norm(u)
        du = np.abs(_norm(vp - vsp) - un) / un
        worst["max_momentum_residual"] = max(worst["max_momentum_residual"], float(dp.max()))
        worst["max_energy_residual"] = max(worst["max_energy_residual"], float(de.max()))
        worst["max_identity_residual"] = max(worst["max_identity_residual"], float(di.max()))
        worst["max_relative_speed_residual"] = max(worst["max_relative_speed_residual"], float(du.max()))
        done += m
    return {"cases": int(n), **worst}


def pair_mass_fraction(inp: CollisionInput, species: SpeciesSet) -> float:
    return mass_fraction(inp.i, inp.j, species)
