"""Coupled Monte Carlo transport: exactness, determinism, and statistics."""

import math
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np
import pytest
from scipy import stats

from cityheat import _kernels
from cityheat.encoder import encode_city
from cityheat.geometry import GridSpec
from cityheat.materials import (LAMBERTIAN, MaterialDatabase, STEFAN_BOLTZMANN,
                                _DEFAULT_ROWS)
from cityheat.scenario import ConstantSchedule, ScenarioConfig
from cityheat.scenes import canyon_scene, single_box_scene, uniform_composition
from cityheat.transport import (CompiledScene, chain_simulate, estimate_pixel,
                                sample_path_at, simulate)
from tests.conftest import quiet_config


def flat_scene(db, ground_name, extent=20.0, cell=1.0):
    grid = GridSpec(origin_x=0.0, origin_y=0.0, cell_size=cell,
                    width=round(extent / cell), height=round(extent / cell))
    mapset, _, _ = encode_city([], grid,
                               ground_material=db.lookup(ground_name).id)
    return mapset


def extended_db(*rows):
    return MaterialDatabase.from_rows(list(_DEFAULT_ROWS) + list(rows))


class TestNullEnvironment:
    def test_exactly_t0_with_zero_variance(self, box_scene):
        mapset, _, db = box_scene
        cfg = quiet_config(spp=40, air_temperature=ConstantSchedule(300.0),
                           sky_temperature=ConstantSchedule(300.0),
                           initial_temperature_k=300.0)
        result = simulate(mapset, cfg, db)
        assert np.all(result.temperature == 300.0)
        assert np.all(result.std_error == 0.0)
        assert result.discard_fraction == 0.0


class TestDeterminism:
    def test_same_seed_is_bit_identical(self, box_scene):
        mapset, _, db = box_scene
        cfg = quiet_config(spp=16, seed=42)
        a = simulate(mapset, cfg, db)
        b = simulate(mapset, cfg, db)
        assert a.temperature.tobytes() == b.temperature.tobytes()
        assert a.std_error.tobytes() == b.std_error.tobytes()

    def test_thread_count_does_not_change_results(self, box_scene):
        mapset, _, db = box_scene
        a = simulate(mapset, quiet_config(spp=16, seed=9, threads=1), db)
        b = simulate(mapset, quiet_config(spp=16, seed=9, threads=2), db)
        assert a.temperature.tobytes() == b.temperature.tobytes()

    def test_different_seed_changes_results(self, box_scene):
        mapset, _, db = box_scene
        a = simulate(mapset, quiet_config(spp=16, seed=1), db)
        b = simulate(mapset, quiet_config(spp=16, seed=2), db)
        assert a.temperature.tobytes() != b.temperature.tobytes()

    def test_estimate_pixel_matches_simulate(self, box_scene):
        mapset, _, db = box_scene
        cfg = quiet_config(spp=32, seed=5)
        cs = CompiledScene.build(mapset, cfg, db)
        result = simulate(mapset, cfg, db, compiled=cs)
        for px, py in ((3, 4), (60, 60), (90, 17)):
            est = estimate_pixel(px, py, mapset, cfg, compiled=cs)
            assert est.temperature == result.temperature[py, px]
            assert est.valid_paths == result.valid[py, px]

    def test_night_run_equals_solar_disabled_run(self, box_scene):
        mapset, _, db = box_scene
        midnight = dict(latitude_deg=42.33, longitude_deg=-83.04,
                        utc_offset_hours=-4.0,
                        when=datetime(2024, 6, 17, 0, 30))
        dark = quiet_config(spp=24, seed=3, solar_enabled=True, **midnight)
        off = quiet_config(spp=24, seed=3, solar_enabled=False, **midnight)
        a = simulate(mapset, dark, db)
        b = simulate(mapset, off, db)
        assert a.temperature.tobytes() == b.temperature.tobytes()


class TestRngAndSampling:
    def test_rewind_mean_formula_values(self):
        # mean = rho * c * delta^2 / (4 k) at delta = 0.135 m
        rho_c_wall = 2500.0 * 2000.0
        assert rho_c_wall * 0.135 ** 2 / (4 * 1.5) == pytest.approx(15187.5)
        rho_c_concrete = 2300.0 * 880.0
        assert rho_c_concrete * 0.135 ** 2 / (4 * 1.4) == \
            pytest.approx(6587.04, abs=0.01)

    def test_empirical_rewind_mean_within_one_percent(self):
        draws = _kernels.exponential_batch(123, 100_000, 15187.5)
        assert draws.mean() == pytest.approx(15187.5, rel=0.01)

    def test_cosine_hemisphere_moment(self):
        d = _kernels.cosine_batch(7, 1_000_000, 0.0, 0.0, 1.0)
        assert np.all(d[:, 2] > 0.0)
        assert d[:, 2].mean() == pytest.approx(2.0 / 3.0, abs=1e-2)

    def test_cosine_hemisphere_azimuth_uniformity(self):
        d = _kernels.cosine_batch(11, 1_000_000, 0.0, 0.0, 1.0)
        phi = np.arctan2(d[:, 1], d[:, 0])
        counts, _ = np.histogram(phi, bins=16, range=(-np.pi, np.pi))
        expected = len(d) / 16
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        assert chi2 < stats.chi2.ppf(0.95, 15)

    def test_cosine_hemisphere_about_horizontal_normal(self):
        d = _kernels.cosine_batch(13, 200_000, 1.0, 0.0, 0.0)
        assert np.all(d @ np.array([1.0, 0.0, 0.0]) > 0)
        assert (d @ np.array([1.0, 0.0, 0.0])).mean() == \
            pytest.approx(2.0 / 3.0, abs=1e-2)

    def test_uniform_batch_range_and_mean(self):
        u = _kernels.uniform_batch(5, 200_000)
        assert np.all((0.0 <= u) & (u < 1.0))
        assert u.mean() == pytest.approx(0.5, abs=5e-3)


class TestModeClosures:
    def test_forced_convective_returns_air_temperature(self):
        # emissivity 0 and negligible conductivity: p_conv ~ 1
        db = extended_db(("Foam", 1000.0, 1e-12, 100.0, 0.0, LAMBERTIAN))
        mapset = flat_scene(db, "Foam")
        cfg = quiet_config(spp=50, air_temperature=ConstantSchedule(297.0),
                           sky_temperature=ConstantSchedule(250.0),
                           initial_temperature_k=260.0)
        result = simulate(mapset, cfg, db)
        assert np.all(result.temperature == 297.0)

    def test_forced_radiative_at_night_returns_sky(self):
        # emissivity 1, no convection, negligible conduction: p_rad ~ 1 and
        # every ray from flat ground reaches the sky
        db = extended_db(("Soot", 1000.0, 1e-12, 100.0, 1.0, LAMBERTIAN))
        mapset = flat_scene(db, "Soot")
        cfg = quiet_config(spp=50, h_conv_w_m2k=0.0,
                           air_temperature=ConstantSchedule(297.0),
                           sky_temperature=ConstantSchedule(251.5),
                           initial_temperature_k=260.0)
        result = simulate(mapset, cfg, db)
        assert np.all(result.temperature == 251.5)

    def test_dirichlet_material_pins_temperature(self):
        mapset, _, db = single_box_scene()
        cfg = quiet_config(spp=30, dirichlet={"Asphalt": 285.0})
        result = simulate(mapset, cfg, db)
        ground = mapset.building_id == 0
        assert np.all(result.temperature[ground] == 285.0)
        assert np.all(result.std_error[ground] == 0.0)

    def test_depth_one_enumeration_oracle(self):
        # flat scene, tiny lookback: every branch is terminal, so the pixel
        # expectation is exactly p_rad*T_sky + p_conv*T_air + p_cond*T_I
        db = extended_db()
        mapset = flat_scene(db, "Asphalt", extent=16.0)
        t_air, t_sky, t_init = 301.0, 260.0, 283.0
        cfg = quiet_config(spp=4000, seed=17, lookback_horizon_s=1.0,
                           air_temperature=ConstantSchedule(t_air),
                           sky_temperature=ConstantSchedule(t_sky),
                           initial_temperature_k=t_init)
        asphalt = db.lookup("Asphalt")
        h_rad = 4 * asphalt.emissivity * STEFAN_BOLTZMANN * cfg.t_ref_k ** 3
        h_cond = asphalt.conductivity / cfg.delta_m
        h_tot = h_rad + cfg.h_conv_w_m2k + h_cond
        expected = (h_rad * t_sky + cfg.h_conv_w_m2k * t_air
                    + h_cond * t_init) / h_tot
        result = simulate(mapset, cfg, db)
        mean = float(result.temperature.mean())
        pooled_se = float(result.std_error.mean()) / math.sqrt(
            result.temperature.size)
        assert mean == pytest.approx(expected, abs=max(4 * pooled_se, 0.02))

    def test_weights_bounded_by_terminal_temperatures(self):
        mapset, _, db = canyon_scene(cell_size=1.0)
        cfg = quiet_config(spp=1, air_temperature=ConstantSchedule(300.0),
                           sky_temperature=ConstantSchedule(280.0),
                           initial_temperature_k=273.0)
        cs = CompiledScene.build(mapset, cfg, db)
        weights = np.empty(300, dtype=np.float64)
        outcomes = np.empty(300, dtype=np.int64)
        for pix in (5, 3000, 7000):
            _kernels.pixel_paths(cfg.seed, pix, 300, cs.scene, cs.cfg,
                                 cs.tables, weights, outcomes)
            ok = outcomes != _kernels.END_DISCARD
            assert np.all(weights[ok] >= 273.0 - 1e-9)
            assert np.all(weights[ok] <= 300.0 + 1e-9)

    def test_discards_are_counted_and_pixels_flagged(self):
        db = extended_db(("Soot", 1000.0, 1e-12, 100.0, 1.0, LAMBERTIAN))
        mapset = flat_scene(db, "Soot")
        cfg = quiet_config(spp=20, h_conv_w_m2k=0.0, trace_budget=1)
        result = simulate(mapset, cfg, db)
        assert np.all(result.valid + result.discarded == 20)
        assert result.discard_fraction == 1.0
        assert np.all(np.isnan(result.temperature))
        assert any("discard" in w for w in result.warnings)


def _solar_fixture(db, mapset, when, extra=None):
    cfg = quiet_config(spp=1, solar_enabled=True, latitude_deg=42.33,
                       longitude_deg=-83.04, utc_offset_hours=-4.0,
                       when=when, lookback_horizon_s=600.0, table_dt_s=600.0,
                       **(extra or {}))
    return CompiledScene.build(mapset, cfg, db), cfg


class TestSolarVisit:
    WHEN = datetime(2024, 6, 17, 13, 0)

    def test_unoccluded_flat_ground_direct_term(self):
        db = extended_db()
        mapset = flat_scene(db, "Asphalt", extent=40.0)
        cs, _ = _solar_fixture(db, mapset, self.WHEN)
        sun_z = cs.tables[2][0]
        d_o = cs.tables[3][0]
        assert d_o > 500.0
        eps = 0.94
        state = _kernels.path_seed(1, 0, 0)
        _, w = _kernels.solar_visit(state, 20.0, 20.0, 0.0, 0.0, 0.0, 1.0,
                                    eps, 0.0, cs.scene, cs.cfg, cs.tables)
        # diffuse fraction 0: the only term is eps * (sun . n) * D_o
        assert w == pytest.approx(eps * sun_z * d_o, rel=1e-12)

    def test_night_visit_is_zero(self):
        db = extended_db()
        mapset = flat_scene(db, "Asphalt", extent=40.0)
        cs, _ = _solar_fixture(db, mapset, datetime(2024, 6, 17, 1, 0))
        state = _kernels.path_seed(1, 0, 0)
        state2, w = _kernels.solar_visit(state, 20.0, 20.0, 0.0, 0.0, 0.0, 1.0,
                                         0.9, 0.0, cs.scene, cs.cfg, cs.tables)
        assert w == 0.0
        assert state2 == state  # no random numbers consumed at night

    def test_visit_weight_scales_linearly_with_emissivity(self):
        mapset, _, db = single_box_scene()
        cs, _ = _solar_fixture(db, mapset, self.WHEN)
        for pix_seed in range(5):
            state = _kernels.path_seed(77, pix_seed, 0)
            _, w_low = _kernels.solar_visit(
                state, 36.0, 30.0, 0.0, 0.0, 0.0, 1.0, 0.88, 0.0,
                cs.scene, cs.cfg, cs.tables)
            _, w_high = _kernels.solar_visit(
                state, 36.0, 30.0, 0.0, 0.0, 0.0, 1.0, 0.95, 0.0,
                cs.scene, cs.cfg, cs.tables)
            assert w_high >= w_low
            if w_low > 0:
                assert w_high / w_low == pytest.approx(0.95 / 0.88, rel=1e-12)

    def test_shadowed_point_loses_the_direct_term(self):
        mapset, _, db = single_box_scene()  # box [25,35]^2, 10 m tall
        cs, _ = _solar_fixture(db, mapset, self.WHEN)
        sun_z = cs.tables[2][0]
        d_o = cs.tables[3][0]
        eps = 0.94
        n = 600
        lit = shaded = 0.0
        for k in range(n):
            s1 = _kernels.path_seed(5, k, 0)
            _, w1 = _kernels.solar_visit(s1, 30.0, 50.0, 0.0, 0, 0, 1.0, eps,
                                         0.0, cs.scene, cs.cfg, cs.tables)
            lit += w1
            s2 = _kernels.path_seed(5, k, 1)
            _, w2 = _kernels.solar_visit(s2, 30.0, 36.0, 0.0, 0, 0, 1.0, eps,
                                         0.0, cs.scene, cs.cfg, cs.tables)
            shaded += w2
        direct = eps * sun_z * d_o
        assert (lit - shaded) / n == pytest.approx(direct, rel=0.25)

    def test_specular_mirror_reaches_the_sun_disc(self):
        # specular ground + an almost-hemispheric sun cone: every downward
        # sample mirrors up into the cone and pays eps * pi * I_od
        db = extended_db(("MirrorFloor", 1000.0, 1.0, 1000.0, 0.1, "specular"))
        mapset = flat_scene(db, "MirrorFloor", extent=40.0)
        cs, _ = _solar_fixture(db, mapset, self.WHEN,
                               extra={"sun_half_angle_deg": 89.0})
        i_od = cs.tables[4][0]
        eps = 0.5
        weights = []
        for k in range(200):
            state = _kernels.path_seed(9, k, 0)
            _, w = _kernels.solar_visit(state, 20.0, 20.0, 3.0,
                                        0.0, 0.0, -1.0, eps, 0.0,
                                        cs.scene, cs.cfg, cs.tables)
            weights.append(w)
        expected = eps * math.pi * i_od
        assert max(weights) == pytest.approx(expected, rel=1e-9)
        assert np.mean(weights) >= 0.95 * expected

    def test_zero_emissivity_visit_contributes_nothing(self):
        mapset, _, db = single_box_scene()
        cs, _ = _solar_fixture(db, mapset, self.WHEN)
        for k in range(50):
            state = _kernels.path_seed(3, k, 0)
            _, w = _kernels.solar_visit(state, 20.0, 20.0, 0.0, 0, 0, 1.0,
                                        0.0, 0.0, cs.scene, cs.cfg, cs.tables)
            assert w == 0.0


class TestStatistics:
    def test_std_error_follows_inverse_sqrt_law(self, box_scene):
        mapset, _, db = box_scene
        se = {}
        for spp in (32, 128):
            result = simulate(mapset, quiet_config(spp=spp, seed=2), db)
            rng = np.random.default_rng(0)
            pick = rng.choice(result.std_error.size, 100, replace=False)
            se[spp] = float(result.std_error.ravel()[pick].mean())
        assert se[128] / se[32] == pytest.approx(0.5, abs=0.1)

    def test_doubling_spp_keeps_the_mean_within_noise(self, box_scene):
        mapset, _, db = box_scene
        r1 = simulate(mapset, quiet_config(spp=64, seed=4), db)
        r2 = simulate(mapset, quiet_config(spp=128, seed=104), db)
        combined = np.sqrt(r1.std_error ** 2 + r2.std_error ** 2)
        delta = np.abs(r1.temperature - r2.temperature)
        # per-pixel 3-sigma bound, allowing a small multiple-testing margin
        frac_bad = float(np.mean(delta > 3.0 * combined + 1e-9))
        assert frac_bad < 0.01


class TestChain:
    def test_single_timestamp_equals_simulate(self, box_scene):
        mapset, _, db = box_scene
        cfg = quiet_config(spp=16, seed=6)
        chained = chain_simulate(mapset, cfg, [cfg.when], db)
        direct = simulate(mapset, cfg, db)
        assert chained[0].temperature.tobytes() == direct.temperature.tobytes()

    def test_fixed_point_at_uniform_steady_state(self, box_scene):
        mapset, _, db = box_scene
        cfg = quiet_config(spp=24, seed=8,
                           air_temperature=ConstantSchedule(300.0),
                           sky_temperature=ConstantSchedule(300.0),
                           initial_temperature_k=300.0)
        t0 = cfg.when
        from datetime import timedelta
        results = chain_simulate(mapset, cfg,
                                 [t0, t0 + timedelta(hours=1)], db)
        assert np.all(results[0].temperature == 300.0)
        assert np.all(results[1].temperature == 300.0)

    def test_non_monotone_timestamps_rejected(self, box_scene):
        mapset, _, db = box_scene
        cfg = quiet_config(spp=4)
        from datetime import timedelta
        t0 = cfg.when
        with pytest.raises(ValueError, match="increasing"):
            chain_simulate(mapset, cfg, [t0, t0 - timedelta(hours=1)], db)


class TestSamplePathHook:
    def test_outcome_names(self, box_scene):
        mapset, _, db = box_scene
        cfg = quiet_config(spp=1, seed=123)
        w, outcome = sample_path_at(mapset, cfg, 5, 5, 0)
        assert outcome in ("initial", "fluid", "sky", "dirichlet")
        assert 270.0 < w < 310.0
