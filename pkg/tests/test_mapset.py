"""MapSet container: sampling semantics and the HM25 file format."""

import struct

import numpy as np
import pytest

from cityheat.mapset import (DomainExit, FormatError, MapSet, read_hm25,
                             write_hm25, write_pgm)
from cityheat.geometry import GridSpec


@pytest.fixture(scope="module")
def saved(block_scene, tmp_path_factory):
    mapset, _, _ = block_scene
    path = tmp_path_factory.mktemp("hm25") / "city.hm25"
    mapset.save(path)
    return mapset, path


class TestRoundTrip:
    def test_bit_identical_layers(self, saved):
        mapset, path = saved
        loaded = MapSet.load(path)
        assert loaded.grid == mapset.grid
        for name, arr in mapset.layers.items():
            assert loaded.layers[name].tobytes() == arr.tobytes(), name
        assert loaded.segment_index.tobytes() == mapset.segment_index.tobytes()
        for field in ("x0", "y0", "x1", "y1", "cum0", "length"):
            assert getattr(loaded.segments, field).tobytes() == \
                getattr(mapset.segments, field).tobytes()
        assert loaded.building_heights == mapset.building_heights
        assert loaded.compositions == mapset.compositions

    def test_nan_payloads_survive(self, block_scene, tmp_path):
        mapset, _, _ = block_scene
        # a NaN with a nonstandard payload must round-trip bit-exactly
        weird = np.frombuffer(struct.pack("<I", 0x7FC00ABC), dtype=np.float32)[0]
        layer = mapset.emissivity_override.copy()
        layer[3, 4] = weird
        layer[5, 6] = 0.25
        modified = mapset.replace_layer("emissivity_override", layer)
        path = tmp_path / "nan.hm25"
        modified.save(path)
        loaded = MapSet.load(path)
        assert loaded.emissivity_override.tobytes() == layer.tobytes()

    def test_truncated_file_is_a_format_error(self, saved, tmp_path):
        _, path = saved
        data = path.read_bytes()
        stub = tmp_path / "trunc.hm25"
        stub.write_bytes(data[:len(data) // 3])
        with pytest.raises(FormatError, match="truncated"):
            MapSet.load(stub)

    def test_wrong_magic_names_expected(self, saved, tmp_path):
        _, path = saved
        data = bytearray(path.read_bytes())
        data[:4] = b"XX25"
        bad = tmp_path / "magic.hm25"
        bad.write_bytes(bytes(data))
        with pytest.raises(FormatError, match="HM25"):
            MapSet.load(bad)

    def test_header_corruption_is_a_format_error(self, saved, tmp_path):
        _, path = saved
        data = bytearray(path.read_bytes())
        data[12] = 0xFF  # stomp on the JSON header
        bad = tmp_path / "corrupt.hm25"
        bad.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            MapSet.load(bad)

    def test_generic_container_round_trip(self, tmp_path):
        grid = GridSpec(origin_x=1.0, origin_y=-2.0, cell_size=0.25,
                        width=7, height=5)
        blocks = {
            "a": np.arange(35, dtype=np.float32).reshape(5, 7),
            "b": np.arange(10, dtype=np.uint16),
        }
        path = tmp_path / "generic.hm25"
        write_hm25(path, grid, blocks)
        grid2, loaded = read_hm25(path)
        assert grid2 == grid
        for name in blocks:
            assert np.array_equal(loaded[name], blocks[name])
            assert loaded[name].dtype == blocks[name].dtype


class TestValidation:
    def test_dimension_disagreement(self, block_scene):
        mapset, _, _ = block_scene
        with pytest.raises(FormatError, match="shape"):
            mapset.replace_layer("height_m",
                                 np.zeros((3, 3), dtype=np.float32))

    def test_id_height_pairing(self, block_scene):
        mapset, _, _ = block_scene
        bad = mapset.height_m.copy()
        bad[mapset.building_id > 0] = 0.0
        with pytest.raises(FormatError, match="height"):
            mapset.replace_layer("height_m", bad)


class TestSampling:
    def test_nearest_at_centroid(self, block_scene):
        mapset, _, _ = block_scene
        x, y = mapset.grid.centroid(40, 41)
        assert mapset.sample_nearest("building_id", x, y) == \
            mapset.building_id[40, 41]

    def test_nearest_off_centroid(self, block_scene):
        mapset, _, _ = block_scene
        x, y = mapset.grid.centroid(40, 41)
        dx = 0.1 * mapset.grid.cell_size
        assert mapset.sample_nearest("building_id", x + dx, y - dx) == \
            mapset.building_id[40, 41]

    def test_out_of_bounds_is_domain_exit(self, block_scene):
        mapset, _, _ = block_scene
        with pytest.raises(DomainExit):
            mapset.sample_nearest("building_id", -1.0, 5.0)
        with pytest.raises(DomainExit):
            mapset.sample_sdf(5.0, 1e9)

    def test_sdf_identity_at_centroids(self, block_scene):
        mapset, _, _ = block_scene
        x, y = mapset.grid.centroid(10, 10)
        assert mapset.sample_sdf(x, y) == pytest.approx(
            float(mapset.sdf_m[10, 10]), abs=1e-6)

    def test_sdf_linear_midpoint(self, block_scene):
        mapset, _, _ = block_scene
        sdf = mapset.sdf_m
        r, c = 5, 5
        x0, y0 = mapset.grid.centroid(r, c)
        x1, _ = mapset.grid.centroid(r, c + 1)
        expected = 0.5 * (float(sdf[r, c]) + float(sdf[r, c + 1]))
        assert mapset.sample_sdf(0.5 * (x0 + x1), y0) == \
            pytest.approx(expected, abs=1e-6)

    def test_sdf_constant_layer(self, block_scene):
        mapset, _, _ = block_scene
        flat = mapset.replace_layer(
            "sdf_m", np.full_like(mapset.sdf_m, 2.5))
        rng = np.random.default_rng(0)
        x0, y0, x1, y1 = flat.grid.extent
        for _ in range(50):
            x = rng.uniform(x0, x1 - 1e-9)
            y = rng.uniform(y0, y1 - 1e-9)
            assert flat.sample_sdf(x, y) == pytest.approx(2.5, abs=1e-6)

    def test_sdf_never_negative(self, block_scene):
        mapset, _, _ = block_scene
        rng = np.random.default_rng(1)
        x0, y0, x1, y1 = mapset.grid.extent
        for _ in range(200):
            x = rng.uniform(x0, x1 - 1e-9)
            y = rng.uniform(y0, y1 - 1e-9)
            assert mapset.sample_sdf(x, y) >= 0.0


class TestExporters:
    def test_pgm_and_csv(self, block_scene, tmp_path):
        mapset, _, _ = block_scene
        pgm = tmp_path / "ids.pgm"
        mapset.export_pgm("building_id", pgm)
        header = pgm.read_text().splitlines()[:3]
        assert header[0] == "P2"
        assert header[1] == f"{mapset.grid.width} {mapset.grid.height}"
        csv = tmp_path / "height.csv"
        mapset.export_csv("height_m", csv)
        loaded = np.loadtxt(csv, delimiter=",")
        assert loaded.shape == (mapset.grid.height, mapset.grid.width)
        assert np.allclose(loaded, mapset.height_m)

    def test_pgm_window_is_respected(self, tmp_path):
        layer = np.array([[280.0, 300.0], [320.0, 340.0]])
        path = tmp_path / "t.pgm"
        write_pgm(layer, path, (300.0, 340.0))
        values = [int(v) for v in path.read_text().split()[4:]]
        assert values[-2] == 0      # 280 clamps to the window floor (row 0 last)
        assert values[0] == 32768   # 320 is halfway up the window
