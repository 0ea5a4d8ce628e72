"""Procedural facade layout and the 3D-point -> facade-plane projection."""

import numpy as np
import pytest

from cityheat.encoder import encode_city
from cityheat.facade import (DOOR, FRAME, MAIN, SHUTTER, WINDOW,
                             CompositionError, FacadeLayout, FacadePattern,
                             OffFacadeError, characteristic_delta, facade_uv,
                             sample_component)
from cityheat.geometry import FacadeComposition, GridSpec
from cityheat.scenes import box_footprint, uniform_composition

BENCH = FacadeComposition(ground_main=(13, 94), ground_windows=(14, 6),
                          upper_main=(13, 94), upper_windows=(14, 6))
PATTERN = FacadePattern(pattern_width=6.6, pattern_height=2.7,
                        max_door_width=4.0)


class TestCharacteristicDelta:
    def test_reference_pattern(self):
        assert characteristic_delta(PATTERN) == pytest.approx(0.135)

    def test_square_pattern(self):
        assert characteristic_delta(FacadePattern(2.0, 2.0, 1.0)) == 0.1

    def test_min_selection(self):
        assert characteristic_delta(FacadePattern(1.0, 100.0, 1.0)) == 0.05

    def test_positive_dims_required(self):
        with pytest.raises(ValueError):
            FacadePattern(pattern_width=0.0)


class TestSampleComponent:
    def test_tile_center_is_window(self):
        # 6% windows: the centered sqrt(0.06) x sqrt(0.06) rectangle holds
        # the tile center
        perimeter, height = 68.6, 13.7
        u = (0.5 * 6.6) / perimeter           # horizontal tile center
        h = (0.5 * 2.7) / height              # vertical center of floor 0
        pt = sample_component(u, h, BENCH, PATTERN, height, perimeter)
        assert pt.component == WINDOW
        assert pt.material == 14

    def test_tile_corner_is_main(self):
        perimeter, height = 68.6, 13.7
        pt = sample_component(1e-6, 1e-6, BENCH, PATTERN, height, perimeter)
        assert pt.component == MAIN
        assert pt.material == 13

    def test_degenerate_composition_is_all_main(self):
        comp = uniform_composition(3)
        rng = np.random.default_rng(0)
        for _ in range(100):
            pt = sample_component(rng.uniform(0, 1), rng.uniform(0, 1),
                                  comp, PATTERN, 13.7, 68.6)
            assert pt.component == MAIN and pt.material == 3

    def test_pure_function(self):
        args = (0.37, 0.62, BENCH, PATTERN, 13.7, 68.6)
        assert sample_component(*args) == sample_component(*args)

    def test_periodic_in_u(self):
        period = PATTERN.pattern_width / 68.6
        rng = np.random.default_rng(1)
        for _ in range(50):
            u = rng.uniform(0.0, 1.0 - 2 * period)
            h = rng.uniform(0.0, 1.0)
            a = sample_component(u, h, BENCH, PATTERN, 13.7, 68.6)
            b = sample_component(u + period, h, BENCH, PATTERN, 13.7, 68.6)
            assert (a.component, a.material) == (b.component, b.material)

    def test_ground_vs_upper_composition(self):
        comp = FacadeComposition(ground_main=(1, 100), upper_main=(2, 100))
        low = sample_component(0.1, 0.01, comp, PATTERN, 13.7, 68.6)
        high = sample_component(0.1, 0.5, comp, PATTERN, 13.7, 68.6)
        assert low.material == 1
        assert high.material == 2

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            sample_component(1.0, 0.5, BENCH, PATTERN, 13.7, 68.6)
        with pytest.raises(ValueError):
            sample_component(0.5, 1.1, BENCH, PATTERN, 13.7, 68.6)

    def test_percentages_must_sum_to_100(self):
        bad = FacadeComposition(ground_main=(1, 50), upper_main=(1, 100))
        with pytest.raises(CompositionError):
            sample_component(0.5, 0.5, bad, PATTERN, 13.7, 68.6)


class TestAreaAccounting:
    def _fractions(self, comp, pattern, height, perimeter, n=200_000, seed=0):
        layout = FacadeLayout(comp, pattern)
        rng = np.random.default_rng(seed)
        counts = {}
        pw, ph = pattern.pattern_width, pattern.pattern_height
        ss = rng.uniform(0.0, perimeter, n)
        zs = rng.uniform(0.0, height, n)
        for s, z in zip(ss, zs):
            floor = min(int(z / ph), max(int((height - 1e-9) / ph), 0))
            comp_id, _ = layout.component_at(s % pw, z - floor * ph,
                                             ground_floor=floor == 0)
            counts[comp_id] = counts.get(comp_id, 0) + 1
        return {k: v / n for k, v in counts.items()}, layout

    def test_bench_composition(self):
        # a 27 m building: 10 floors, every level 94/6; expect the global
        # fractions to match the configured percentages within 1% absolute
        frac, layout = self._fractions(BENCH, PATTERN, height=27.0,
                                       perimeter=66.0)
        assert not layout.warnings
        assert frac.get(WINDOW, 0.0) == pytest.approx(0.06, abs=0.01)
        assert frac.get(MAIN, 0.0) == pytest.approx(0.94, abs=0.01)

    def test_rich_upper_composition(self):
        comp = FacadeComposition(
            ground_main=(1, 70), ground_windows=(2, 12), ground_doors=(4, 18),
            upper_main=(1, 45), upper_windows=(2, 30), upper_frames=(3, 20),
            upper_shutters=(4, 5))
        frac, layout = self._fractions(comp, PATTERN, height=27.0,
                                       perimeter=66.0)
        assert not layout.warnings
        # ground floor is 1 of 10 floors: expected global fraction mixes levels
        expect = {
            MAIN: 0.1 * 0.70 + 0.9 * 0.45,
            WINDOW: 0.1 * 0.12 + 0.9 * 0.30,
            FRAME: 0.9 * 0.20,
            DOOR: 0.1 * 0.18,
            SHUTTER: 0.9 * 0.05,
        }
        for comp_id, expected in expect.items():
            assert frac.get(comp_id, 0.0) == pytest.approx(expected, abs=0.01), \
                comp_id

    def test_overfull_frame_warns_and_reassigns_to_main(self):
        comp = FacadeComposition(
            ground_main=(1, 45), ground_windows=(2, 25), ground_frames=(3, 20),
            ground_doors=(4, 10), upper_main=(1, 100))
        layout = FacadeLayout(comp, PATTERN)
        assert any("frame" in w for w in layout.warnings)
        frac, _ = self._fractions(comp, PATTERN, height=2.7, perimeter=66.0)
        # window area is preserved even when clamped beside the door
        assert frac.get(WINDOW, 0.0) == pytest.approx(0.25, abs=0.01)
        assert frac.get(DOOR, 0.0) == pytest.approx(0.10, abs=0.01)
        # the frame shortfall went to main
        assert frac.get(MAIN, 0.0) > 0.45


class TestFacadeUV:
    @pytest.fixture(scope="class")
    def scene(self):
        grid = GridSpec(origin_x=0.0, origin_y=0.0, cell_size=0.5,
                        width=60, height=60)
        fp = box_footprint(1, 10.0, 10.0, 10.0, 10.0, 13.7, 3,
                           uniform_composition(3))
        mapset, segs, _ = encode_city([fp], grid, ground_material=11)
        return mapset, segs

    def test_height_fraction(self, scene):
        mapset, _ = scene
        _, h = facade_uv(mapset, 10.0, 15.0, 6.85)
        assert h == pytest.approx(0.5)

    def test_u_at_segment_start_matches_u_map(self, scene):
        mapset, segs = scene
        s = 12  # some mid-wall segment
        row, col = segs.row[s], segs.col[s]
        u, _ = facade_uv(mapset, segs.x0[s], segs.y0[s], 1.0)
        assert u == pytest.approx(float(mapset.u_coord[row, col]), abs=1e-6)

    def test_u_wraps_at_perimeter_end(self, scene):
        mapset, segs = scene
        last = len(segs) - 1
        u, _ = facade_uv(mapset, segs.x1[last], segs.y1[last], 1.0)
        assert min(u, 1.0 - u) == pytest.approx(0.0, abs=1e-6)

    def test_off_facade_errors(self, scene):
        mapset, segs = scene
        with pytest.raises(OffFacadeError):
            facade_uv(mapset, segs.x0[0], segs.y0[0], 20.0)  # above the roof
        with pytest.raises(OffFacadeError):
            facade_uv(mapset, 2.0, 2.0, 1.0)  # open ground, no segment
