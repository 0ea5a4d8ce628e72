"""Shared fixtures: small encoded scenes reused across test modules."""

import numpy as np
import pytest

from cityheat.materials import default_database
from cityheat.scenario import ConstantSchedule, ScenarioConfig
from cityheat.scenes import single_box_scene, validation_block_scene


@pytest.fixture(scope="session")
def database():
    return default_database()


@pytest.fixture(scope="session")
def box_scene():
    """One 10 m box, 10 m tall, centered on a 60 m grid at 0.5 m cells."""
    mapset, footprints, db = single_box_scene()
    return mapset, footprints, db


@pytest.fixture(scope="session")
def block_scene():
    """The eight-building 210x320 benchmark scene."""
    mapset, footprints, db = validation_block_scene()
    return mapset, footprints, db


def quiet_config(**kwargs) -> ScenarioConfig:
    """A cheap, sun-free config for transport tests."""
    defaults = dict(spp=64, seed=1, solar_enabled=False,
                    lookback_horizon_s=3600.0, table_dt_s=600.0,
                    air_temperature=ConstantSchedule(300.0),
                    sky_temperature=ConstantSchedule(280.0),
                    initial_temperature_k=290.0)
    defaults.update(kwargs)
    return ScenarioConfig(**defaults)


@pytest.fixture
def make_config():
    return quiet_config
