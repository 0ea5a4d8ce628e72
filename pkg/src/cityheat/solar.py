"""Sun position, clear-sky direct irradiance, and the diffuse-sky closure.

Positions come from the standard low-precision ephemeris (mean longitude /
mean anomaly series, good to ~0.01 deg over 1990-2050), expressed in a local
east-north-up frame. Azimuth is measured clockwise from north, so east is
pi/2. Direct irradiance uses a Meinel-style clear-sky attenuation of the
solar constant; the diffuse sky is isotropic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

SOLAR_CONSTANT = 1361.0      # W/m^2
SUN_HALF_ANGLE_DEG = 0.266   # apparent solar disc half-angle
_J2000 = datetime(2000, 1, 1, 12, 0, tzinfo=timezone.utc)


def _to_utc(when: datetime, utc_offset_hours: float | None = None) -> datetime:
    if when.tzinfo is not None:
        return when.astimezone(timezone.utc)
    if utc_offset_hours is None:
        raise ValueError("naive datetime requires utc_offset_hours")
    return (when - timedelta(hours=utc_offset_hours)).replace(tzinfo=timezone.utc)


def sun_direction(latitude_deg: float, longitude_deg: float, when: datetime,
                  utc_offset_hours: float | None = None):
    """Solar elevation, azimuth (radians) and the unit vector toward the sun.

    The vector is in local east-north-up coordinates; azimuth is clockwise
    from north. Elevation goes negative at night.
    """
    if not -90.0 <= latitude_deg <= 90.0:
        raise ValueError(f"latitude {latitude_deg} out of [-90, 90]")
    utc = _to_utc(when, utc_offset_hours)
    n = (utc - _J2000).total_seconds() / 86400.0  # days since J2000.0

    mean_long = math.radians((280.460 + 0.9856474 * n) % 360.0)
    mean_anom = math.radians((357.528 + 0.9856003 * n) % 360.0)
    ecl_long = mean_long + math.radians(1.915) * math.sin(mean_anom) \
        + math.radians(0.020) * math.sin(2.0 * mean_anom)
    obliquity = math.radians(23.439 - 4.0e-7 * n)

    sin_dec = math.sin(obliquity) * math.sin(ecl_long)
    declination = math.asin(sin_dec)
    right_asc = math.atan2(math.cos(obliquity) * math.sin(ecl_long),
                           math.cos(ecl_long))

    gmst_deg = (280.46061837 + 360.98564736629 * n) % 360.0
    hour_angle = math.radians(gmst_deg + longitude_deg) - right_asc
    hour_angle = (hour_angle + math.pi) % (2.0 * math.pi) - math.pi

    lat = math.radians(latitude_deg)
    cos_dec = math.cos(declination)
    east = -cos_dec * math.sin(hour_angle)
    north = sin_dec * math.cos(lat) - cos_dec * math.cos(hour_angle) * math.sin(lat)
    up = sin_dec * math.sin(lat) + cos_dec * math.cos(hour_angle) * math.cos(lat)

    elevation = math.asin(max(-1.0, min(1.0, up)))
    azimuth = math.atan2(east, north) % (2.0 * math.pi)
    direction = np.array([east, north, up], dtype=np.float64)
    direction /= np.linalg.norm(direction)
    return elevation, azimuth, direction


def direct_irradiance(elevation: float, solar_constant: float = SOLAR_CONSTANT) -> float:
    """Clear-sky direct normal irradiance, W/m^2; zero at or below the horizon.

    Attenuation 0.7^(AM^0.678) with air mass AM = 1/max(sin h, 0.01).
    """
    if elevation <= 0.0:
        return 0.0
    air_mass = 1.0 / max(math.sin(elevation), 0.01)
    return solar_constant * 0.7 ** (air_mass ** 0.678)


def sun_disc_solid_angle(half_angle: float) -> float:
    """Solid angle (sr) of a cone with the given half-angle."""
    return 2.0 * math.pi * (1.0 - math.cos(half_angle))


@dataclass(frozen=True)
class SolarState:
    """Sun geometry and radiometry at one instant."""

    direction: np.ndarray  # unit vector toward the sun, east-north-up
    elevation: float       # radians
    azimuth: float         # radians, clockwise from north
    direct_normal: float   # D_o, W/m^2 on a sun-facing plane
    intensity: float       # I_od = D_o / sun disc solid angle, W/(m^2 sr)
    half_angle: float      # radians

    @property
    def cos_half_angle(self) -> float:
        return math.cos(self.half_angle)

    @property
    def sun_up(self) -> bool:
        return self.elevation > 0.0


def solar_state(latitude_deg: float, longitude_deg: float, when: datetime,
                utc_offset_hours: float | None = None,
                solar_constant: float = SOLAR_CONSTANT,
                half_angle_deg: float = SUN_HALF_ANGLE_DEG) -> SolarState:
    """Full solar state (direction + direct irradiance + intensity) at `when`."""
    elevation, azimuth, direction = sun_direction(
        latitude_deg, longitude_deg, when, utc_offset_hours)
    d_o = direct_irradiance(elevation, solar_constant)
    half = math.radians(half_angle_deg)
    i_od = d_o / sun_disc_solid_angle(half)
    return SolarState(direction=direction, elevation=elevation, azimuth=azimuth,
                      direct_normal=d_o, intensity=i_od, half_angle=half)


def sky_fraction(direction: np.ndarray, diffuse_fraction: float) -> float:
    """Isotropic sky radiance fraction: diffuse_fraction/pi above the horizon.

    `direction` is the outgoing ray direction that reached the sky; rays with
    no upward component see no sky and get 0.
    """
    if not 0.0 <= diffuse_fraction <= 1.0:
        raise ValueError(f"diffuse_fraction {diffuse_fraction} out of [0, 1]")
    if direction[2] <= 0.0:
        return 0.0
    return diffuse_fraction / math.pi


def in_sun_cone(direction: np.ndarray, state: SolarState) -> bool:
    """True when `direction` lies within the closed solar disc cone."""
    cos_angle = float(np.dot(direction, state.direction))
    return cos_angle >= state.cos_half_angle


@dataclass(frozen=True)
class SkyModel:
    """Diffuse-sky closure parameters: isotropic fraction and sky temperature."""

    diffuse_fraction: float = 0.0
    sky_temperature_k: float = 280.0  # used when no schedule is given

    def __post_init__(self):
        if not 0.0 <= self.diffuse_fraction <= 1.0:
            raise ValueError("diffuse_fraction must be in [0, 1]")
        if self.sky_temperature_k <= 0:
            raise ValueError("sky temperature must be positive")
