"""Scenario files: simulation settings with explicit units in key names.

Scenarios are TOML documents. Keys carry their unit as a suffix
(air_temperature_k, cell_size_m, ...) so Kelvin/Celsius and meter/pixel
mixups fail loudly at load time instead of silently midway through a run.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .facade import FacadePattern, characteristic_delta
from .solar import SOLAR_CONSTANT, SUN_HALF_ANGLE_DEG


class ConfigError(ValueError):
    """Raised with the full list of scenario validation problems."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class Schedule:
    """A value over absolute time: constant, daily-periodic, or interpolated."""

    def at(self, when: datetime) -> float:
        raise NotImplementedError

    def covers(self, start: datetime, end: datetime) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantSchedule(Schedule):
    value: float

    def at(self, when):
        return self.value

    def covers(self, start, end):
        return True


@dataclass(frozen=True)
class DailySchedule(Schedule):
    """Piecewise-linear over local hour of day, periodic with period 24 h."""

    points: tuple  # ((hour, value), ...) sorted, hours in [0, 24)
    utc_offset_hours: float = 0.0

    def __post_init__(self):
        if len(self.points) < 1:
            raise ConfigError("daily schedule needs at least one point")
        hours = [h for h, _ in self.points]
        if any(not 0.0 <= h < 24.0 for h in hours):
            raise ConfigError("daily schedule hours must lie in [0, 24)")
        if sorted(hours) != hours or len(set(hours)) != len(hours):
            raise ConfigError("daily schedule hours must be strictly increasing")

    def at(self, when):
        local = when.astimezone(timezone.utc) + timedelta(hours=self.utc_offset_hours)
        hour = local.hour + local.minute / 60.0 + local.second / 3600.0 \
            + local.microsecond / 3.6e9
        pts = list(self.points)
        if len(pts) == 1:
            return pts[0][1]
        for i in range(len(pts)):
            h0, v0 = pts[i]
            h1, v1 = pts[(i + 1) % len(pts)]
            span = (h1 - h0) % 24.0 or 24.0
            off = (hour - h0) % 24.0
            if off < span or (i == len(pts) - 1):
                return v0 + (v1 - v0) * min(off, span) / span
        return pts[-1][1]

    def covers(self, start, end):
        return True  # periodic: defined everywhere


@dataclass(frozen=True)
class AbsoluteSchedule(Schedule):
    """Piecewise-linear between timestamped points; undefined outside them."""

    points: tuple  # ((datetime UTC, value), ...) sorted

    def __post_init__(self):
        if len(self.points) < 2:
            raise ConfigError("absolute schedule needs at least two points")
        times = [t for t, _ in self.points]
        if sorted(times) != times:
            raise ConfigError("absolute schedule timestamps must increase")

    def at(self, when):
        when = when.astimezone(timezone.utc)
        pts = self.points
        if when < pts[0][0] or when > pts[-1][0]:
            raise ConfigError(
                f"schedule gap: {when.isoformat()} outside "
                f"[{pts[0][0].isoformat()}, {pts[-1][0].isoformat()}]")
        for (t0, v0), (t1, v1) in zip(pts[:-1], pts[1:]):
            if when <= t1:
                span = (t1 - t0).total_seconds()
                f = (when - t0).total_seconds() / span if span else 0.0
                return v0 + (v1 - v0) * f
        return pts[-1][1]

    def covers(self, start, end):
        return self.points[0][0] <= start.astimezone(timezone.utc) and \
            end.astimezone(timezone.utc) <= self.points[-1][0]


def _parse_schedule(value, utc_offset_hours: float, key: str) -> Schedule:
    if isinstance(value, (int, float)):
        return ConstantSchedule(float(value))
    if isinstance(value, list):
        if all(isinstance(p, list) and len(p) == 2 and
               isinstance(p[0], (int, float)) for p in value):
            return DailySchedule(tuple((float(h), float(v)) for h, v in value),
                                 utc_offset_hours=utc_offset_hours)
        if all(isinstance(p, list) and len(p) == 2 and isinstance(p[0], str)
               for p in value):
            pts = []
            for t, v in value:
                dt = datetime.fromisoformat(t)
                if dt.tzinfo is None:
                    dt = dt - timedelta(hours=utc_offset_hours)
                    dt = dt.replace(tzinfo=timezone.utc)
                pts.append((dt.astimezone(timezone.utc), float(v)))
            return AbsoluteSchedule(tuple(pts))
    raise ConfigError(f"{key}: expected a number, [[hour, K], ...], or "
                      f"[[iso-datetime, K], ...]")


@dataclass
class ScenarioConfig:
    """Everything the transport kernel needs beyond the MapSet itself."""

    # sampling budgets
    spp: int = 5000
    max_radiative_bounces: int = 30
    conductive_steps_per_chain: int = 700
    max_transitions: int = 100
    trace_budget: int = 512
    seed: int = 0
    threads: int = 0  # 0 = all available; never affects results

    # geometry / conduction
    pattern: FacadePattern = field(default_factory=FacadePattern)
    delta_override_m: float | None = None

    # interface physics
    h_conv_w_m2k: float = 10.0
    t_ref_k: float = 300.0

    # environment
    air_temperature: Schedule = field(default_factory=lambda: ConstantSchedule(300.0))
    sky_temperature: Schedule = field(default_factory=lambda: ConstantSchedule(280.0))
    initial_temperature_k: float | None = None  # None: use the MapSet layer
    lookback_horizon_s: float = 86400.0
    table_dt_s: float = 60.0

    # sun
    solar_enabled: bool = True
    latitude_deg: float = 42.33
    longitude_deg: float = -83.04
    utc_offset_hours: float = 0.0
    when: datetime = field(
        default_factory=lambda: datetime(2024, 6, 17, 12, 0, tzinfo=timezone.utc))
    diffuse_fraction: float = 0.0
    sun_half_angle_deg: float = SUN_HALF_ANGLE_DEG
    solar_constant_w_m2: float = SOLAR_CONSTANT

    # materials
    ground_material: str = "Asphalt"
    materials_csv: str | None = None
    dirichlet: dict = field(default_factory=dict)  # material name -> Kelvin

    @property
    def delta_m(self) -> float:
        if self.delta_override_m is not None:
            return self.delta_override_m
        return characteristic_delta(self.pattern)

    @property
    def when_utc(self) -> datetime:
        if self.when.tzinfo is not None:
            return self.when.astimezone(timezone.utc)
        return (self.when - timedelta(hours=self.utc_offset_hours)).replace(
            tzinfo=timezone.utc)

    def at_time(self, when: datetime) -> "ScenarioConfig":
        return replace(self, when=when)

    def validate(self) -> None:
        problems = []
        if self.spp < 1:
            problems.append("samples_per_pixel must be >= 1")
        for name in ("max_radiative_bounces", "conductive_steps_per_chain",
                     "max_transitions", "trace_budget"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if self.lookback_horizon_s <= 0:
            problems.append("lookback_horizon_s must be > 0")
        if self.table_dt_s <= 0:
            problems.append("table_dt_s must be > 0")
        if self.delta_m <= 0:
            problems.append("conduction step delta must be > 0")
        if self.h_conv_w_m2k < 0:
            problems.append("h_conv_w_m2k must be >= 0")
        if self.t_ref_k <= 0:
            problems.append("t_ref_k must be > 0")
        if not -90 <= self.latitude_deg <= 90:
            problems.append("latitude_deg out of [-90, 90]")
        if not 0.0 <= self.diffuse_fraction <= 1.0:
            problems.append("diffuse_fraction out of [0, 1]")
        if self.sun_half_angle_deg <= 0:
            problems.append("sun_half_angle_deg must be > 0")
        # schedules must cover the lookback window
        t0 = self.when_utc
        t_start = t0 - timedelta(seconds=self.lookback_horizon_s)
        for name, schedule in (("air_temperature", self.air_temperature),
                               ("sky_temperature", self.sky_temperature)):
            if not schedule.covers(t_start, t0):
                problems.append(
                    f"{name} schedule does not cover the lookback window "
                    f"[{t_start.isoformat()}, {t0.isoformat()}]")
        if problems:
            raise ConfigError(problems)


@dataclass
class ScenarioFile:
    """A parsed scenario document: inputs, config, outputs, overrides."""

    config: ScenarioConfig
    mapset_path: str | None = None
    geojson_path: str | None = None
    grid: dict | None = None      # origin/cell_size/width/height for encoding
    output_dir: str = "out"
    profile_line_px: tuple | None = None  # (x0, y0, x1, y1) pixel coords
    pgm_range_k: tuple = (290.0, 338.0)
    overrides: dict = field(default_factory=dict)   # see cli.cmd_diff
    base_dir: Path = field(default_factory=Path)

    def resolve(self, path_str: str) -> Path:
        p = Path(path_str)
        return p if p.is_absolute() else self.base_dir / p


def load_scenario(path) -> ScenarioFile:
    """Parse and validate a scenario TOML file."""
    path = Path(path)
    try:
        with open(path, "rb") as f:
            doc = tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    return scenario_from_dict(doc, base_dir=path.parent)


def scenario_from_dict(doc: dict, base_dir=Path(".")) -> ScenarioFile:
    problems = []
    scene = doc.get("scene", {})
    time_sec = doc.get("time", {})
    sampling = doc.get("sampling", {})
    physics = doc.get("physics", {})
    sun = doc.get("solar", {})
    output = doc.get("output", {})
    materials = doc.get("materials", {})

    utc_offset = float(time_sec.get("utc_offset_h", 0.0))
    cfg = ScenarioConfig()
    try:
        when_raw = time_sec.get("datetime")
        if when_raw is not None:
            when = when_raw if isinstance(when_raw, datetime) \
                else datetime.fromisoformat(str(when_raw))
        else:
            when = cfg.when
        pattern = FacadePattern(
            pattern_width=float(physics.get("pattern_width_m", 6.6)),
            pattern_height=float(physics.get("pattern_height_m", 2.7)),
            max_door_width=float(physics.get("max_door_width_m", 4.0)))
        cfg = ScenarioConfig(
            spp=int(sampling.get("samples_per_pixel", 5000)),
            max_radiative_bounces=int(sampling.get("max_radiative_bounces", 30)),
            conductive_steps_per_chain=int(
                sampling.get("conductive_steps_per_chain", 700)),
            max_transitions=int(sampling.get("max_transitions", 100)),
            trace_budget=int(sampling.get("trace_budget", 512)),
            seed=int(sampling.get("seed", 0)),
            threads=int(sampling.get("threads", 0)),
            pattern=pattern,
            delta_override_m=(float(physics["delta_override_m"])
                              if "delta_override_m" in physics else None),
            h_conv_w_m2k=float(physics.get("h_conv_w_m2k", 10.0)),
            t_ref_k=float(physics.get("t_ref_k", 300.0)),
            air_temperature=_parse_schedule(
                physics.get("air_temperature_k", 300.0), utc_offset,
                "air_temperature_k"),
            sky_temperature=_parse_schedule(
                physics.get("sky_temperature_k", 280.0), utc_offset,
                "sky_temperature_k"),
            initial_temperature_k=(float(physics["initial_temperature_k"])
                                   if "initial_temperature_k" in physics else None),
            lookback_horizon_s=float(time_sec.get("lookback_horizon_s", 86400.0)),
            table_dt_s=float(time_sec.get("table_dt_s", 60.0)),
            solar_enabled=bool(sun.get("enabled", True)),
            latitude_deg=float(time_sec.get("latitude_deg", 42.33)),
            longitude_deg=float(time_sec.get("longitude_deg", -83.04)),
            utc_offset_hours=utc_offset,
            when=when,
            diffuse_fraction=float(sun.get("diffuse_fraction", 0.0)),
            sun_half_angle_deg=float(sun.get("sun_half_angle_deg",
                                             SUN_HALF_ANGLE_DEG)),
            solar_constant_w_m2=float(sun.get("solar_constant_w_m2",
                                              SOLAR_CONSTANT)),
            ground_material=str(materials.get("ground", "Asphalt")),
            materials_csv=materials.get("csv"),
            dirichlet={str(k): float(v)
                       for k, v in (materials.get("dirichlet") or {}).items()},
        )
        cfg.validate()
    except ConfigError as exc:
        problems.extend(exc.problems)
    except (KeyError, TypeError, ValueError) as exc:
        problems.append(str(exc))

    mapset_path = scene.get("mapset")
    geojson_path = scene.get("geojson")
    grid = None
    if geojson_path is not None:
        try:
            grid = {
                "origin_x": float(scene.get("origin_m", [0.0, 0.0])[0]),
                "origin_y": float(scene.get("origin_m", [0.0, 0.0])[1]),
                "cell_size": float(scene["cell_size_m"]),
                "width": int(scene["width_px"]),
                "height": int(scene["height_px"]),
            }
        except (KeyError, TypeError, ValueError):
            problems.append(
                "scene.geojson requires cell_size_m, width_px, height_px")
    if mapset_path is None and geojson_path is None:
        problems.append("scenario needs scene.mapset or scene.geojson")

    profile = output.get("profile_line_px")
    if profile is not None and len(profile) != 4:
        problems.append("output.profile_line_px must be [x0, y0, x1, y1]")
    pgm_range = output.get("pgm_range_k", [290.0, 338.0])
    if len(pgm_range) != 2 or pgm_range[0] >= pgm_range[1]:
        problems.append("output.pgm_range_k must be [low, high] with low < high")

    if problems:
        raise ConfigError(problems)
    return ScenarioFile(
        config=cfg,
        mapset_path=mapset_path,
        geojson_path=geojson_path,
        grid=grid,
        output_dir=str(output.get("directory", "out")),
        profile_line_px=tuple(profile) if profile else None,
        pgm_range_k=(float(pgm_range[0]), float(pgm_range[1])),
        overrides=doc.get("override", {}),
        base_dir=Path(base_dir),
    )
