"""Material database and transfer-coefficient behavior."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cityheat.materials import (DegenerateInterfaceError, Material,
                                MaterialDatabase, STEFAN_BOLTZMANN,
                                TransferCoefficients, UnknownMaterialError,
                                albedo, default_database, mode_probabilities,
                                transfer_coefficients)

DEFAULT_NAMES = ["Brick", "Aluminium", "Concrete", "Steel", "Glass", "Wood",
                 "Terracotta", "Limestone", "Stone", "Cement", "Asphalt",
                 "Slate"]


class TestDatabase:
    def test_brick_row(self, database):
        m = database.lookup("Brick")
        assert (m.heat_capacity, m.conductivity, m.density, m.emissivity) == \
            (790.0, 0.9, 1920.0, 0.93)

    def test_aluminium_row(self, database):
        m = database.lookup("Aluminium")
        assert (m.heat_capacity, m.conductivity, m.density, m.emissivity) == \
            (903.0, 237.0, 2702.0, 0.03)

    def test_lookup_is_case_insensitive(self, database):
        assert database.lookup("brick") is database.lookup("BRICK")

    def test_unknown_material_error_lists_names(self, database):
        with pytest.raises(UnknownMaterialError) as err:
            database.lookup("Kryptonite")
        assert "Kryptonite" in str(err.value)
        for name in DEFAULT_NAMES:
            assert name in str(err.value)

    def test_default_database_contents(self, database):
        assert sorted(m.name for m in database) == sorted(DEFAULT_NAMES)
        assert [m.id for m in database] == list(range(1, 13))

    def test_reflectance_kinds(self, database):
        for m in database:
            expected = "specular" if m.name in ("Glass", "Aluminium") \
                else "lambertian"
            assert m.reflectance_kind == expected, m.name

    def test_ids_unique(self):
        with pytest.raises(ValueError, match="duplicate"):
            MaterialDatabase([
                Material(id=1, name="A", heat_capacity=1, conductivity=1,
                         density=1, emissivity=0.5),
                Material(id=1, name="B", heat_capacity=1, conductivity=1,
                         density=1, emissivity=0.5),
            ])

    def test_csv_round_trip_is_exact(self, database, tmp_path):
        path = tmp_path / "materials.csv"
        database.to_csv(path)
        loaded = MaterialDatabase.from_csv(path)
        for a, b in zip(database, loaded):
            assert a == b  # bit-exact float fields

    def test_invalid_rows_rejected(self):
        with pytest.raises(ValueError):
            Material(id=1, name="X", heat_capacity=0.0, conductivity=1,
                     density=1, emissivity=0.5)
        with pytest.raises(ValueError):
            Material(id=1, name="X", heat_capacity=1, conductivity=1,
                     density=1, emissivity=1.5)


class TestAlbedo:
    def test_concrete(self, database):
        assert albedo(database.lookup("Concrete")) == pytest.approx(0.12)

    def test_boundaries(self):
        m1 = Material(id=1, name="black", heat_capacity=1, conductivity=1,
                      density=1, emissivity=1.0)
        m0 = Material(id=2, name="mirror", heat_capacity=1, conductivity=1,
                      density=1, emissivity=0.0)
        assert albedo(m1) == 0.0
        assert albedo(m0) == 1.0

    def test_albedo_plus_emissivity_is_one_exactly(self, database):
        for m in database:
            assert albedo(m) + m.emissivity == 1.0


class TestTransferCoefficients:
    def test_concrete_reference_values(self, database):
        # frozen from the definitions: h_rad = 4*eps*sigma*T^3, h_cond = k/delta
        c = transfer_coefficients(database.lookup("Concrete"), delta=0.135,
                                  t_ref=300.0, h_conv=10.0)
        assert c.h_rad == pytest.approx(4 * 0.88 * STEFAN_BOLTZMANN * 300.0 ** 3)
        assert c.h_rad == pytest.approx(5.389124, abs=1e-5)
        assert c.h_cond == pytest.approx(10.370370, abs=1e-5)
        assert c.h_total == pytest.approx(25.759494, abs=1e-5)

    def test_zero_emissivity_kills_h_rad(self):
        m = Material(id=1, name="mirror", heat_capacity=1, conductivity=1,
                     density=1, emissivity=0.0)
        assert transfer_coefficients(m, 0.1, 300.0, 10.0).h_rad == 0.0

    def test_doubling_delta_halves_h_cond(self, database):
        m = database.lookup("Brick")
        c1 = transfer_coefficients(m, 0.1, 300.0, 10.0)
        c2 = transfer_coefficients(m, 0.2, 300.0, 10.0)
        assert c1.h_cond == pytest.approx(2.0 * c2.h_cond)

    def test_argument_errors(self, database):
        m = database.lookup("Brick")
        with pytest.raises(ValueError):
            transfer_coefficients(m, 0.0, 300.0, 10.0)
        with pytest.raises(ValueError):
            transfer_coefficients(m, 0.1, -1.0, 10.0)

    def test_h_rad_monotone_in_t_ref_and_emissivity(self, database):
        m = database.lookup("Concrete")
        hs = [transfer_coefficients(m, 0.1, t, 10.0).h_rad
              for t in (250.0, 300.0, 350.0)]
        assert hs == sorted(hs) and hs[0] < hs[-1]
        by_eps = sorted(database, key=lambda m: m.emissivity)
        hr = [transfer_coefficients(m, 0.1, 300.0, 10.0).h_rad for m in by_eps]
        assert all(a <= b for a, b in zip(hr, hr[1:]))


class TestModeProbabilities:
    def test_concrete_reference_split(self, database):
        c = transfer_coefficients(database.lookup("Concrete"), 0.135, 300.0, 10.0)
        p_rad, p_conv, p_cond = mode_probabilities(c)
        assert p_rad == pytest.approx(0.20921, abs=1e-4)
        assert p_conv == pytest.approx(0.38821, abs=1e-4)
        assert p_cond == pytest.approx(0.40258, abs=1e-4)

    def test_symmetric(self):
        p = mode_probabilities(TransferCoefficients(1.0, 1.0, 1.0))
        assert p == pytest.approx((1 / 3, 1 / 3, 1 / 3))

    def test_single_mode(self):
        assert mode_probabilities(TransferCoefficients(0.0, 5.0, 0.0)) == \
            (0.0, 1.0, 0.0)

    def test_degenerate_interface(self):
        with pytest.raises(DegenerateInterfaceError):
            mode_probabilities(TransferCoefficients(0.0, 0.0, 0.0))

    @settings(max_examples=200, deadline=None)
    @given(delta=st.floats(1e-3, 10.0), t_ref=st.floats(200.0, 400.0),
           h_conv=st.floats(0.0, 100.0),
           index=st.integers(min_value=0, max_value=11))
    def test_probabilities_sum_to_one(self, delta, t_ref, h_conv, index):
        material = list(default_database())[index]
        p = mode_probabilities(
            transfer_coefficients(material, delta, t_ref, h_conv))
        assert abs(sum(p) - 1.0) < 1e-12
        assert all(v >= 0.0 for v in p)
