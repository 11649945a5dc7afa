import numpy as np
import pytest

from boltzmix.dsmc import (
    Maxwellian,
    SimConfig,
    SphericalShell,
    TwoTemperature,
    collision_rate_bound,
    init,
    initial_condition_from_dict,
    replica_seed,
    replicate,
    simulate,
    step,
)
from boltzmix.mixture import AngularKernel, CrossSection, SpeciesSet
from boltzmix.moments import poly_moment, poly_moment_se


def _config(masses=(1.0, 3.0), n=2000, ics=None, dt=0.01, t_end=0.1, seed=7, **kw):
    ics = ics or [Maxwellian(1.0)] * len(masses)
    return SimConfig(SpeciesSet(list(masses)), CrossSection.uniform(len(masses)), [n] * len(masses), ics,
                     dt, t_end, seed=seed, **kw)


def _temperatures(state):
    ens = state.ensemble
    return [ens.species.mass(i) * np.mean(np.sum(v * v, 1)) / 3 for i, v in enumerate(ens.velocities)]


class TestInitialConditions:
    def test_maxwellian_mean_speed(self):
        rng = np.random.default_rng(0)
        v = Maxwellian(2.0).sample(rng, 200_000, 0.5)
        speed = np.linalg.norm(v, axis=1)
        assert speed.mean() == pytest.approx(np.sqrt(8 * 2.0 / (np.pi * 0.5)), rel=5e-3)

    def test_two_temperature_split(self):
        v = TwoTemperature(1.0, 4.0, 0.25).sample(np.random.default_rng(1), 40_000, 1.0)
        assert np.var(v[:10_000]) == pytest.approx(1.0, rel=0.03)
        assert np.var(v[10_000:]) == pytest.approx(4.0, rel=0.03)

    def test_shell(self):
        v = SphericalShell(2.5).sample(np.random.default_rng(2), 100, 1.0)
        np.testing.assert_allclose(np.linalg.norm(v, axis=1), 2.5)

    @pytest.mark.parametrize("ic", [Maxwellian(1.5, (0.1, 0.0, -0.2)), TwoTemperature(1, 2, 0.3), SphericalShell(1)])
    def test_dict_roundtrip(self, ic):
        assert initial_condition_from_dict(ic.to_dict()) == ic

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            initial_condition_from_dict({"kind": "bimodal"})


class TestConfig:
    def test_too_few_particles(self):
        with pytest.raises(ValueError):
            _config(n=10)

    def test_invalid_cross_section(self):
        g = np.array([[1.0, 0.5], [0.6, 1.0]])
        with pytest.raises(ValueError, match="cross section"):
            SimConfig(SpeciesSet([1.0, 2.0]), CrossSection(g, AngularKernel.constant(1.0)), [200, 200],
                      [Maxwellian(1.0)] * 2, 0.01, 1.0)

    def test_stability_guard(self):
        with pytest.raises(ValueError, match="time step too large"):
            init(_config(dt=1.0))


class TestInit:
    def test_zero_momentum(self):
        st = init(_config(ics=[Maxwellian(1.0, (1.0, 0, 0)), Maxwellian(2.0)]))
        assert np.linalg.norm(st.ensemble.momentum()) < 1e-12 * st.ensemble.momentum_scale()

    def test_deterministic(self):
        a, b = init(_config()), init(_config())
        for va, vb in zip(a.ensemble.velocities, b.ensemble.velocities):
            np.testing.assert_array_equal(va, vb)
        np.testing.assert_array_equal(a.majorant, b.majorant)

    def test_seed_changes_sample(self):
        a, b = init(_config(seed=1)), init(_config(seed=2))
        assert not np.array_equal(a.ensemble.velocities[0], b.ensemble.velocities[0])

    def test_rate_bound_shape(self):
        cfg = _config()
        st = init(cfg)
        assert collision_rate_bound(cfg, st.majorant).shape == (2,)


class TestStep:
    def test_zero_dt_is_identity(self):
        res = simulate(_config(dt=0.0, t_end=1.0))
        assert res.state.steps == 0 and len(res.records) == 1

    def test_identical_velocities_never_collide(self):
        cfg = _config(masses=(1.0,), ics=[SphericalShell(0.0)], dt=0.05, t_end=1.0)
        res = simulate(cfg)
        assert res.state.accepted.sum() == 0
        assert res.state.attempted.sum() > 0
        np.testing.assert_array_equal(res.state.ensemble.velocities[0], 0.0)

    def test_conservation_every_step(self):
        cfg = _config(ics=[Maxwellian(1.0), TwoTemperature(0.5, 3.0, 0.5)])
        st = init(cfg)
        ens = st.ensemble
        p0, e0 = ens.momentum(), poly_moment(ens, 2.0)
        counts = list(ens.counts)
        for _ in range(20):
            step(st, cfg)
            assert np.linalg.norm(ens.momentum() - p0) <= 1e-12 * ens.momentum_scale()
            assert poly_moment(ens, 2.0) == pytest.approx(e0, rel=1e-12)
            assert list(ens.counts) == counts
        assert st.accepted.sum() > 0

    def test_time_is_steps_times_dt(self):
        res = simulate(_config(dt=0.01, t_end=0.3))
        assert res.state.steps == 30 and res.state.time == 30 * 0.01


class TestPhysics:
    @pytest.mark.parametrize("i,j", [(0, 0), (0, 1), (1, 1)])
    def test_collision_rate_matches_mean_relative_speed(self, i, j):
        # accepted collisions per unit time = pair count * w * ||b||_L1 * E|u| at equilibrium
        masses = (1.0, 3.0)
        n = 3000
        cfg = _config(masses=masses, n=n, dt=0.005, t_end=1.0, seed=11)
        res = simulate(cfg)
        mi, mj = masses[i], masses[j]
        mu = mi * mj / (mi + mj)
        mean_u = np.sqrt(8 * 1.0 / (np.pi * mu))
        pairs = n * (n - 1) / 2 if i == j else n * n
        expected = pairs * cfg.weight * 1.0 * mean_u * cfg.t_end
        assert res.state.accepted[i, j] == pytest.approx(expected, rel=0.05)

    def test_equilibrium_is_stationary(self):
        cfg = _config(masses=(1.0, 1.0), n=4000, dt=0.01, t_end=1.0, moment_orders=(4.0,))
        st = init(cfg)
        m4_0, se_0 = poly_moment(st.ensemble, 4.0), poly_moment_se(st.ensemble, 4.0)
        for _ in range(cfg.n_steps):
            step(st, cfg)
        m4_1, se_1 = poly_moment(st.ensemble, 4.0), poly_moment_se(st.ensemble, 4.0)
        assert abs(m4_1 - m4_0) < 3 * np.hypot(se_0, se_1)

    def test_temperatures_equilibrate(self):
        cfg = _config(masses=(1.0, 2.0), n=2000, ics=[Maxwellian(0.5), Maxwellian(2.0)], dt=0.01, t_end=4.0)
        st = init(cfg)
        T0 = _temperatures(st)
        for _ in range(cfg.n_steps):
            step(st, cfg)
        T1 = _temperatures(st)
        assert abs(T0[1] - T0[0]) > 1.0
        assert abs(T1[1] - T1[0]) < 0.1 * np.mean(T1)

    def test_summary(self):
        res = simulate(_config(t_end=0.2))
        s = res.summary
        assert s["m0_constant"] and s["momentum_drift_rel"] < 1e-12 and s["m2_drift_rel"] < 1e-12
        assert set(s) >= {"steps", "attempted", "accepted", "majorant", "majorant_exceedances", "acceptance_rate"}
        assert all(0 <= x <= 1 for row in s["acceptance_rate"] for x in row)


class TestReplicas:
    def test_seeds_distinct(self):
        assert len({replica_seed(3, k) for k in range(50)}) == 50

    def test_same_seed_zero_variance(self):
        agg = replicate(_config(n=200, t_end=0.05), 3, same_seed=True)
        assert np.all(agg.std_error["m2"] == 0) and np.all(agg.std_error["mk_4.0"] == 0)

    def test_split_seeds_vary(self):
        agg = replicate(_config(n=200, t_end=0.05), 4)
        assert np.all(agg.std_error["mk_4.0"] > 0)
        assert agg.n_replicas == 4 and len(agg.times) == 2

    def test_standard_error_clt_scaling(self):
        cfg = _config(masses=(1.0, 2.0), n=200, ics=[Maxwellian(1.0), Maxwellian(2.0)], t_end=0.05,
                      diagnostic_every=5, moment_orders=(4.0,))
        scaled = [replicate(cfg, n).std_error["mk_4.0"][-1] * np.sqrt(n) for n in (4, 16, 64)]
        assert max(scaled) / min(scaled) < 1.5

    def test_aggregated_m2_matches_single_run(self):
        cfg = _config(n=200, t_end=0.05, diagnostic_every=5)
        agg = replicate(cfg, 3)
        # m2 is conserved along each replica, so the mean is flat in time
        np.testing.assert_allclose(agg.mean["m2"], agg.mean["m2"][0], rtol=1e-12)

    def test_needs_two(self):
        with pytest.raises(ValueError):
            replicate(_config(), 1)
