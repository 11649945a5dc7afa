"""Mixture configuration: species masses, pairwise cross sections, bracket weights."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class SpeciesSet:
    """Masses of the ``I`` mixture components (arbitrary consistent units)."""

    masses: tuple[float, ...]
    total_mass: float = field(init=False)

    def __init__(self, masses: Sequence[float]):
        masses = tuple(float(m) for m in masses)
        if len(masses) == 0:
            raise ValueError("a mixture needs at least one species")
        if any(not np.isfinite(m) or m <= 0.0 for m in masses):
            raise ValueError(f"species masses must be positive and finite, got {masses}")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "total_mass", float(sum(masses)))

    @property
    def count(self) -> int:
        return len(self.masses)

    def mass(self, i: int) -> float:
        self._check_index(i)
        return self.masses[i]

    def bracket_coefficient(self, i: int) -> float:
        """m_i / sum_j m_j, the factor multiplying |v|^2 inside the bracket."""
        return self.mass(i) / self.total_mass

    def _check_index(self, i: int) -> None:
        if not (0 <= int(i) < len(self.masses)) or int(i) != i:
            raise IndexError(f"species index {i} out of range for I={len(self.masses)}")


class AngularKernel:
    """Angular part b(tau) of the cross section, tau = sigma . u_hat in [-1, 1].

    Either a constant ``value`` or a table of ``(tau, b)`` pairs interpolated
    linearly. Norms are with respect to the surface measure on S^2, so the
    L1 norm is ``2*pi * int_{-1}^{1} b(tau) dtau``.
    """

    __slots__ = ("kind", "value", "tau", "b", "l1_norm", "sup_norm", "_cdf")

    def __init__(self, kind: str, value: float | None = None, tau=None, b=None):
        if kind == "constant":
            if value is None or not np.isfinite(value) or value < 0:
                raise ValueError("constant kernel needs a finite value >= 0")
            self.value = float(value)
            self.tau = np.array([-1.0, 1.0])
            self.b = np.array([self.value, self.value])
            self.l1_norm = 4.0 * np.pi * self.value
            self.sup_norm = self.value
        elif kind == "tabulated":
            tau = np.asarray(tau, dtype=float)
            b = np.asarray(b, dtype=float)
            if tau.ndim != 1 or tau.shape != b.shape or tau.size < 2:
                raise ValueError("tabulated kernel needs matching 1-d tau and b arrays")
            if np.any(np.diff(tau) <= 0):
                raise ValueError("tabulated tau grid must be strictly increasing")
            if not (np.isclose(tau[0], -1.0, atol=1e-12) and np.isclose(tau[-1], 1.0, atol=1e-12)):
                raise ValueError("tabulated tau grid must cover [-1, 1]")
            if np.any(b < 0) or not np.all(np.isfinite(b)):
                raise ValueError("tabulated kernel values must be finite and non-negative")
            self.value = None
            self.tau = tau
            self.b = b
            self.l1_norm = 2.0 * np.pi * float(np.trapezoid(b, tau))
            self.sup_norm = float(b.max())
        else:
            raise ValueError(f"unknown kernel kind {kind!r}")
        self.kind = kind
        self._cdf = None

    @classmethod
    def constant(cls, value: float) -> "AngularKernel":
        return cls("constant", value=value)

    @classmethod
    def tabulated(cls, tau, b) -> "AngularKernel":
        return cls("tabulated", tau=tau, b=b)

    @property
    def is_bounded(self) -> bool:
        return bool(np.isfinite(self.sup_norm))

    def __call__(self, tau):
        if self.kind == "constant":
            return np.full(np.shape(tau), self.value)
        return np.interp(tau, self.tau, self.b)

    def cumulative(self) -> np.ndarray:
        """Trapezoidal cumulative integral of b over the tau grid (unnormalised)."""
        if self._cdf is None:
            seg = 0.5 * (self.b[1:] + self.b[:-1]) * np.diff(self.tau)
            self._cdf = np.concatenate([[0.0], np.cumsum(seg)])
        return self._cdf

    def same_as(self, other: "AngularKernel") -> bool:
        return (
            self.kind == other.kind
            and np.array_equal(self.tau, other.tau)
            and np.array_equal(self.b, other.b)
        )

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        return {"kind": "tabulated", "table": [[float(t), float(v)] for t, v in zip(self.tau, self.b)]}

    def __repr__(self) -> str:
        if self.kind == "constant":
            return f"AngularKernel.constant({self.value!r})"
        return f"AngularKernel.tabulated(<{self.tau.size} points>)"


@dataclass(frozen=True)
class CrossSection:
    """Hard-potential exponents gamma_ij and angular kernels b_ij for every pair."""

    gamma: np.ndarray
    kernels: tuple[tuple[AngularKernel, ...], ...]

    def __init__(self, gamma, kernels):
        gamma = np.array(gamma, dtype=float)
        if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
            raise ValueError("gamma must be a square matrix")
        n = gamma.shape[0]
        if isinstance(kernels, AngularKernel):
            kernels = [[kernels] * n for _ in range(n)]
        kernels = tuple(tuple(row) for row in kernels)
        if len(kernels) != n or any(len(row) != n for row in kernels):
            raise ValueError("kernels must be an I x I matrix matching gamma")
        gamma.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "kernels", kernels)

    @classmethod
    def uniform(cls, n_species: int, gamma: float = 1.0, b: float = 1.0 / (4.0 * np.pi)) -> "CrossSection":
        """Same exponent and constant angular kernel for every pair."""
        return cls(np.full((n_species, n_species), gamma), AngularKernel.constant(b))

    @property
    def size(self) -> int:
        return self.gamma.shape[0]

    @property
    def gamma_bar(self) -> float:
        return float(self.gamma.max())

    @property
    def gamma_min(self) -> float:
        return float(self.gamma.min())

    def kernel(self, i: int, j: int) -> AngularKernel:
        return self.kernels[i][j]

    def l1_norms(self) -> np.ndarray:
        return np.array([[k.l1_norm for k in row] for row in self.kernels])

    def sup_norms(self) -> np.ndarray:
        return np.array([[k.sup_norm for k in row] for row in self.kernels])


def bracket(v, i: int, species: SpeciesSet):
    """Bracket weight sqrt(1 + (m_i / sum m) |v|^2); accepts one velocity or an (n, 3) array."""
    coeff = species.bracket_coefficient(i)
    v = np.asarray(v, dtype=float)
    return np.sqrt(1.0 + coeff * np.sum(v * v, axis=-1))


def bracket_sq(v, i: int, species: SpeciesSet):
    v = np.asarray(v, dtype=float)
    return 1.0 + species.bracket_coefficient(i) * np.sum(v * v, axis=-1)


def mass_fraction(i: int, j: int, species: SpeciesSet) -> float:
    """Two-body mass fraction r_ij = m_i / (m_i + m_j)."""
    mi, mj = species.mass(i), species.mass(j)
    return mi / (mi + mj)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        # truthy when there is something to report
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(cross_section: CrossSection, species: SpeciesSet) -> ValidationReport:
    """Collect every symmetry or range violation; never raises on bad data."""
    report = ValidationReport()
    n = species.count
    if cross_section.size != n:
        report.violations.append(
            f"cross section is {cross_section.size}x{cross_section.size} but there are {n} species"
        )
        return report
    g = cross_section.gamma
    for i in range(n):
        for j in range(n):
            if not (0.0 < g[i, j] <= 1.0):
                report.violations.append(f"gamma[{i},{j}]={g[i, j]!r} outside (0, 1]")
            kern = cross_section.kernel(i, j)
            if not kern.l1_norm > 0:
                report.violations.append(f"kernel ({i},{j}) has zero L1 norm")
            if j > i:
                if g[i, j] != g[j, i]:
                    report.violations.append(
                        f"gamma asymmetric for pair ({i},{j}): {g[i, j]!r} != {g[j, i]!r}"
                    )
                if not kern.same_as(cross_section.kernel(j, i)):
                    report.violations.append(f"kernel asymmetric for pair ({i},{j})")
    return report
