import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boltzmix.collision import CollisionInput, energy_identity
from boltzmix.mixture import AngularKernel, CrossSection, SpeciesSet
from boltzmix.povzner import (
    PovznerConstants,
    angular_average_mc,
    angular_average_mc_multi,
    bracket_energy,
    find_kstar_pair,
    kstar_global,
    povzner_linf,
    povzner_renormalized,
    povzner_scan,
    sphere_average_exact,
)

B0 = 1.0 / (4 * np.pi)
CONST = AngularKernel.constant(B0)


def _half_r(n):
    # the r = 1/2 specialisation, written out independently of the general form
    if n <= 2:
        return 2 * 0.5**n
    return 4 / (n + 1) - 0.5**n * (n + 2 / (n + 1))


class TestClosedForm:
    def test_n2_half(self):
        assert povzner_renormalized(2, 0.5) == pytest.approx(0.5, abs=1e-12)

    def test_n3_half(self):
        assert povzner_renormalized(3, 0.5) == pytest.approx(0.5625, abs=1e-12)

    def test_n3_r09(self):
        assert povzner_renormalized(3, 0.9) == pytest.approx(2.9565, abs=1e-10)

    @pytest.mark.parametrize("n", [1.1, 1.5, 2.0, 2.5, 3.0, 7.0, 40.0])
    def test_half_specialisation(self, n):
        assert povzner_renormalized(n, 0.5) == pytest.approx(_half_r(n), rel=1e-13)

    @given(st.floats(1.0001, 300), st.floats(0.001, 0.999))
    def test_symmetry_exact(self, n, r):
        assert povzner_renormalized(n, r) == povzner_renormalized(n, 1 - r)

    @pytest.mark.parametrize("n,r", [(1.0, 0.5), (0.5, 0.5), (3.0, 0.0), (3.0, 1.0), (3.0, 1.2)])
    def test_domain_errors(self, n, r):
        with pytest.raises(ValueError):
            povzner_renormalized(n, r)

    def test_vectorised(self):
        n = np.array([1.5, 2.0, 3.0])
        np.testing.assert_allclose(povzner_renormalized(n, 0.5), [_half_r(x) for x in n], rtol=1e-13)

    def test_constants_type(self):
        c = PovznerConstants(0.5)
        assert c.branch_point == 2.0
        assert c.evaluate(3.0) == pytest.approx(0.5625)
        assert c.evaluate(1.7) == 2 * 0.5**1.7

    def test_slow_algebraic_decay(self):
        # the closed form decays like 2 r_hi^2 / (r_lo^3 (n+1)), not geometrically
        n = np.array([100.0, 1000.0, 10000.0])
        for r in (0.5, 0.7):
            rb, rl = max(r, 1 - r), min(r, 1 - r)
            np.testing.assert_allclose(
                povzner_renormalized(n, r) * (n + 1), 2 * rb**2 / rl**3, rtol=1e-6
            )


class TestLinf:
    def test_zero_sup(self):
        assert povzner_linf(3, 0.5, 0.0) == 0.0

    def test_scaled(self):
        assert povzner_linf(3, 0.5, B0) == pytest.approx(0.5625, rel=1e-14)

    def test_unit_sup(self):
        assert povzner_linf(2, 0.5, 1.0) == pytest.approx(2 * np.pi, rel=1e-14)


class TestSphereAverage:
    def test_closed_form_matches_quadrature(self):
        mu = np.linspace(-1, 1, 200001)
        for n, p, lam in [(1.5, 3.0, 1.0), (2.0, 1.0, 0.9), (4.0, 2.0, 0.5)]:
            ref = np.trapezoid((p + lam * mu) ** n, mu) / 2
            assert sphere_average_exact(n, p, lam) == pytest.approx(ref, rel=1e-8)

    def test_n_above_two_bound_holds(self):
        # 4 pi b * sphere mean of <v'>^k + <v'_*>^k  <=  C_inf E^{k/2}, n = k/2 > 2
        rng = np.random.default_rng(0)
        sp = SpeciesSet([1.0, 3.0])
        for _ in range(300):
            v, vs = rng.standard_normal((2, 3)) * rng.uniform(0.1, 5)
            t = energy_identity(CollisionInput(v, vs, 0, 1), sp)
            for n in (2.5, 3.0, 4.0, 6.0):
                avg = sphere_average_exact(n, t.p, t.lam) + sphere_average_exact(n, t.q, t.lam)
                assert avg <= povzner_renormalized(n, t.r) * t.E**n * (1 + 1e-12)

    def test_n_at_most_two_branch_exceeded_near_half(self):
        # documents the branch 1 < n <= 2 failing as an upper bound for r = 1/2
        sp = SpeciesSet([1.0, 1.0])
        t = energy_identity(CollisionInput([2.0, 0, 0], [0, 1.0, 0], 0, 1), sp)
        avg = sphere_average_exact(2.0, t.p, t.lam) + sphere_average_exact(2.0, t.q, t.lam)
        assert t.lam > 0
        assert avg == pytest.approx(t.E**2 / 2 + 2 * t.lam**2 / 3, rel=1e-12)
        assert avg > povzner_renormalized(2.0, 0.5) * t.E**2


class TestAngularAverageMC:
    def test_k2_energy_identity(self):
        rng = np.random.default_rng(1)
        sp = SpeciesSet([1.0, 3.0])
        inp = CollisionInput([1.0, -0.5, 2.0], [0.3, 0.1, -1.0], 0, 1)
        est, se = angular_average_mc(2, inp, CONST, sp, 10_000, rng)
        E = bracket_energy(inp, sp)
        assert abs(est - CONST.l1_norm * E) <= max(3 * se, 1e-12 * E)

    def test_degenerate_u_zero(self):
        sp = SpeciesSet([1.0, 3.0])
        v = np.array([0.5, 0.0, 1.0])
        est, se = angular_average_mc(6, CollisionInput(v, v, 0, 1), CONST, sp, 1000, np.random.default_rng(0))
        expect = CONST.l1_norm * ((1 + 0.25 * v @ v) ** 3 + (1 + 0.75 * v @ v) ** 3)
        assert se == 0.0
        assert est == pytest.approx(expect, rel=1e-14)

    def test_matches_exact_average(self):
        rng = np.random.default_rng(2)
        sp = SpeciesSet([1.0, 3.0])
        for _ in range(20):
            v, vs = rng.standard_normal((2, 3)) * 2
            inp = CollisionInput(v, vs, 0, 1)
            t = energy_identity(inp, sp)
            est, se = angular_average_mc_multi([4, 6], inp, CONST, sp, 20_000, rng)
            for k, e, s in zip([4, 6], est, se):
                exact = sphere_average_exact(k / 2, t.p, t.lam) + sphere_average_exact(k / 2, t.q, t.lam)
                assert abs(e - exact) <= 5 * s + 1e-12 * exact

    def test_k6_inequality(self):
        rng = np.random.default_rng(3)
        sp = SpeciesSet([1.0, 3.0])
        for _ in range(30):
            v, vs = rng.standard_normal((2, 3)) * 2
            inp = CollisionInput(v, vs, 0, 1)
            est, se = angular_average_mc(6, inp, CONST, sp, 5000, rng)
            E = bracket_energy(inp, sp)
            assert est - 3 * se <= povzner_linf(3, 0.25, B0) * E**3

    def test_tabulated_weight(self):
        # b(tau) = (1 + tau) / (8 pi): same L1 norm as the constant kernel
        rng = np.random.default_rng(4)
        sp = SpeciesSet([1.0, 1.0])
        kern = AngularKernel.tabulated([-1.0, 1.0], [0.0, 2 * B0])
        inp = CollisionInput([1.0, 0, 0], [0, 0, 0], 0, 1)
        est, se = angular_average_mc(2, inp, kern, sp, 50_000, rng)
        assert abs(est - kern.l1_norm * bracket_energy(inp, sp)) < 5 * se + 1e-12

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            angular_average_mc(4, CollisionInput([1, 0, 0], [0, 0, 0], 0, 0), CONST, SpeciesSet([1.0]), 10,
                               np.random.default_rng(0))


class TestKStar:
    def test_half_is_small(self):
        assert find_kstar_pair(0.5, CONST, 0.5) <= 4

    def test_r09_large(self):
        assert find_kstar_pair(0.9, CONST, 0.5) > 6

    def test_monotone_in_disparity(self):
        ks = [find_kstar_pair(r, CONST, 0.5) for r in np.arange(0.5, 0.91, 0.1)]
        assert all(a <= b for a, b in zip(ks, ks[1:]))

    def test_result_satisfies_criterion(self):
        k = find_kstar_pair(0.7, CONST, 0.5)
        grid = k + 0.5 * np.arange(0, int((100 * k - k) / 0.5) + 1)
        assert np.all(povzner_renormalized(grid / 2, 0.7) < 1)
        assert povzner_renormalized((k - 0.5) / 2, 0.7) >= 1

    def test_scale_invariance_of_constant_kernel(self):
        assert find_kstar_pair(0.65, AngularKernel.constant(3.0)) == find_kstar_pair(0.65, CONST)

    def test_tabulated_uses_sup(self):
        # a peaked table has sup above mean, so its threshold cannot be lower
        tab = AngularKernel.tabulated([-1.0, 0.0, 1.0], [0.0, 2 * B0, 0.0])
        assert find_kstar_pair(0.6, tab) >= find_kstar_pair(0.6, CONST)

    def test_bad_step(self):
        with pytest.raises(ValueError):
            find_kstar_pair(0.5, CONST, 0.0)

    def test_cap(self):
        with pytest.raises(ValueError):
            find_kstar_pair(0.97, CONST, 0.5)

    def test_global_single_species(self):
        s = kstar_global(SpeciesSet([1.0]), CrossSection.uniform(1), 0.5)
        assert s.k_star == max(s.k_bar, 4.0) == 4.0

    def test_global_equal_masses(self):
        s = kstar_global(SpeciesSet([2.0, 2.0]), CrossSection.uniform(2), 0.5)
        assert np.all(s.k_star_pairs == s.k_star_pairs[0, 0])

    def test_global_off_diagonal_dominates(self):
        s = kstar_global(SpeciesSet([1.0, 9.0]), CrossSection.uniform(2), 0.5)
        assert s.k_bar == s.k_star_pairs[0, 1] == s.k_star_pairs[1, 0]
        assert s.k_star_pairs[0, 1] > s.k_star_pairs[0, 0]
        assert s.k_star >= 2 + 2 * s.gamma_bar
        d = s.to_dict()
        assert list(d) == ["pairs", "k_bar", "gamma_bar", "k_star", "grid_step", "horizon"]


class TestScan:
    def test_shape(self):
        t = povzner_scan([0.5, 0.6], [2.0, 3.0, 4.0])
        assert t.shape == (2, 3)
        assert t[0, 1] == pytest.approx(0.5625)

    def test_half_decreasing_beyond_three(self):
        row = povzner_scan([0.5], np.arange(3, 200, 0.5))[0]
        assert np.all(np.diff(row) < 0)

    def test_tends_to_zero(self):
        row = povzner_scan([0.2, 0.5, 0.8], [1e3, 1e5, 1e7])
        assert np.all(np.diff(row, axis=1) < 0)
        assert np.all(row[:, -1] < 1e-4)

    def test_sublevel_interval_at_n10(self):
        r = np.linspace(0.01, 0.99, 99)
        below = povzner_scan(r, [10.0])[:, 0] < 1
        idx = np.flatnonzero(below)
        assert below[49]
        assert np.all(np.diff(idx) == 1)

    def test_empty(self):
        with pytest.raises(ValueError):
            povzner_scan([], [3.0])
