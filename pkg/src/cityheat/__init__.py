"""cityheat: 2.5D Monte Carlo urban surface-temperature simulation.

Buildings are encoded as random-access raster maps (heights, facade distance
field, perimeter parameterization, material slots); surface temperatures are
estimated per pixel by Monte Carlo paths coupling solar irradiation with
radiative, convective, and surface-conductive exchange.
"""

from .geometry import BuildingFootprint, FacadeComposition, GridSpec
from .materials import (Material, MaterialDatabase, TransferCoefficients,
                        albedo, default_database, mode_probabilities,
                        transfer_coefficients)
from .mapset import DomainExit, FormatError, MapSet
from .encoder import encode_city, load_geojson
from .facade import (FacadePattern, FacadePoint, characteristic_delta,
                     facade_uv, sample_component)
from .scenario import (ConfigError, ScenarioConfig, ScenarioFile, load_scenario)
from .solar import SolarState, direct_irradiance, solar_state, sun_direction
from .tracer import Hit, Ray, occluded_toward_sun, sphere_trace
from .transport import (CompiledScene, PixelEstimate, SimulationResult,
                        chain_simulate, estimate_pixel, simulate)

__version__ = "0.1.0"

__all__ = [
    "BuildingFootprint", "FacadeComposition", "GridSpec",
    "Material", "MaterialDatabase", "TransferCoefficients",
    "albedo", "default_database", "mode_probabilities", "transfer_coefficients",
    "DomainExit", "FormatError", "MapSet",
    "encode_city", "load_geojson",
    "FacadePattern", "FacadePoint", "characteristic_delta", "facade_uv",
    "sample_component",
    "ConfigError", "ScenarioConfig", "ScenarioFile", "load_scenario",
    "SolarState", "direct_irradiance", "solar_state", "sun_direction",
    "Hit", "Ray", "occluded_toward_sun", "sphere_trace",
    "CompiledScene", "PixelEstimate", "SimulationResult",
    "chain_simulate", "estimate_pixel", "simulate",
    "__version__",
]
