import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boltzmix.mixture import (
    AngularKernel,
    CrossSection,
    SpeciesSet,
    bracket,
    bracket_sq,
    mass_fraction,
    validate,
)

masses_st = st.lists(st.floats(0.01, 100.0), min_size=1, max_size=5)


class TestSpeciesSet:
    def test_total_mass_cached(self):
        sp = SpeciesSet([1.0, 3.0])
        assert sp.total_mass == 4.0
        assert sp.count == 2

    @pytest.mark.parametrize("bad", [[], [0.0], [-1.0, 2.0], [np.inf], [np.nan]])
    def test_rejects_bad_masses(self, bad):
        with pytest.raises(ValueError):
            SpeciesSet(bad)

    def test_index_out_of_range(self):
        sp = SpeciesSet([1.0])
        with pytest.raises(IndexError):
            sp.mass(1)
        with pytest.raises(IndexError):
            bracket([0, 0, 0], -1, sp)

    @given(masses_st)
    def test_total_mass_matches_sum(self, masses):
        sp = SpeciesSet(masses)
        assert sp.total_mass == pytest.approx(sum(masses), rel=1e-15)


class TestBracket:
    def test_zero_velocity_is_one(self):
        sp = SpeciesSet([1.0, 3.0])
        assert bracket([0, 0, 0], 1, sp) == 1.0

    def test_two_species_hand_value(self):
        sp = SpeciesSet([1.0, 3.0])
        assert bracket([1.0, 0, 0], 0, sp) == pytest.approx(np.sqrt(1.25), abs=1e-15)

    @pytest.mark.parametrize("m", [0.1, 1.0, 42.0])
    def test_single_species_independent_of_mass(self, m):
        sp = SpeciesSet([m])
        v = np.array([0.3, -1.2, 2.0])
        assert bracket(v, 0, sp) == pytest.approx(np.sqrt(1 + v @ v), rel=1e-15)

    def test_vectorised_rows(self):
        sp = SpeciesSet([2.0, 2.0])
        v = np.array([[0, 0, 0], [2, 0, 0]], dtype=float)
        np.testing.assert_allclose(bracket(v, 0, sp), [1.0, np.sqrt(3.0)])
        np.testing.assert_allclose(bracket_sq(v, 0, sp), [1.0, 3.0])

    @given(masses_st, st.floats(0, 50), st.floats(0, 50))
    def test_monotone_and_at_least_one(self, masses, a, b):
        sp = SpeciesSet(masses)
        lo, hi = sorted([a, b])
        b_lo = bracket([lo, 0, 0], 0, sp)
        b_hi = bracket([0, hi, 0], 0, sp)
        assert 1.0 <= b_lo <= b_hi


class TestMassFraction:
    def test_equal_masses(self):
        assert mass_fraction(0, 1, SpeciesSet([2.0, 2.0])) == 0.5

    def test_hand_values(self):
        sp = SpeciesSet([1.0, 3.0])
        assert mass_fraction(0, 1, sp) == 0.25
        assert mass_fraction(1, 0, sp) == 0.75

    @given(masses_st)
    def test_complement(self, masses):
        sp = SpeciesSet(masses)
        for i in range(sp.count):
            for j in range(sp.count):
                r = mass_fraction(i, j, sp)
                assert 0 < r < 1
                assert r + mass_fraction(j, i, sp) == pytest.approx(1.0, abs=4.5e-16)


class TestAngularKernel:
    def test_constant_norms_exact(self):
        k = AngularKernel.constant(0.7)
        assert k.l1_norm == 4 * np.pi * 0.7
        assert k.sup_norm == 0.7

    def test_tabulated_constant_quadrature(self):
        tau = np.linspace(-1, 1, 1001)
        k = AngularKernel.tabulated(tau, np.full_like(tau, 0.3))
        assert abs(k.l1_norm - 4 * np.pi * 0.3) / (4 * np.pi * 0.3) < 1e-10

    def test_tabulated_linear_exact(self):
        tau = np.array([-1.0, 0.0, 1.0])
        k = AngularKernel.tabulated(tau, 1 + tau)
        assert k.l1_norm == pytest.approx(2 * np.pi * 2.0, rel=1e-14)
        assert k.sup_norm == 2.0
        assert k(0.5) == pytest.approx(1.5)

    @pytest.mark.parametrize(
        "tau,b",
        [
            ([-1.0, 0.5], [1.0, 1.0]),
            ([-1.0, 0.0, 0.0, 1.0], [1, 1, 1, 1]),
            ([-1.0, 1.0], [1.0, -0.1]),
            ([-1.0, 1.0], [1.0]),
        ],
    )
    def test_tabulated_rejects(self, tau, b):
        with pytest.raises(ValueError):
            AngularKernel.tabulated(tau, b)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            AngularKernel("power")


class TestValidate:
    def test_clean_report(self):
        sp = SpeciesSet([1.0, 3.0])
        rep = validate(CrossSection.uniform(2), sp)
        assert rep.ok and len(rep) == 0

    def test_asymmetric_gamma_named(self):
        g = np.array([[1.0, 0.5], [0.6, 1.0]])
        rep = validate(CrossSection(g, AngularKernel.constant(1.0)), SpeciesSet([1.0, 2.0]))
        assert not rep.ok
        assert any("(0,1)" in v and "gamma" in v for v in rep)

    def test_gamma_out_of_range(self):
        g = np.array([[1.2]])
        rep = validate(CrossSection(g, AngularKernel.constant(1.0)), SpeciesSet([1.0]))
        assert any("outside (0, 1]" in v for v in rep)

    def test_asymmetric_kernels(self):
        a, b = AngularKernel.constant(1.0), AngularKernel.constant(2.0)
        cs = CrossSection(np.ones((2, 2)), [[a, a], [b, a]])
        rep = validate(cs, SpeciesSet([1.0, 1.0]))
        assert any("kernel asymmetric" in v for v in rep)

    def test_zero_kernel_flagged(self):
        cs = CrossSection(np.ones((1, 1)), AngularKernel.constant(0.0))
        assert any("zero L1" in v for v in validate(cs, SpeciesSet([1.0])))

    def test_size_mismatch(self):
        rep = validate(CrossSection.uniform(3), SpeciesSet([1.0, 2.0]))
        assert len(rep) == 1

    def test_gamma_bar(self):
        g = np.array([[0.5, 0.8], [0.8, 0.3]])
        cs = CrossSection(g, AngularKernel.constant(1.0))
        assert cs.gamma_bar == 0.8 and cs.gamma_min == 0.3
