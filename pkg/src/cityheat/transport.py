"""The Monte Carlo transport driver.

Compiles a MapSet + ScenarioConfig into the flat array bundles the kernels
consume, then estimates per-pixel surface temperatures by averaging path
weights. Each path couples solar pickup at every solid-fluid interface visit
with randomly sampled radiative / convective / conductive exchanges; only
conduction advances the path's time, rewinding toward the lookback horizon
where the initial temperature field takes over.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numba
import numpy as np

from . import _kernels
from .facade import FacadeLayout
from .materials import (STEFAN_BOLTZMANN, MaterialDatabase, default_database)
from .mapset import MapSet
from .scenario import ConfigError, ScenarioConfig
from .solar import solar_state

OUTCOME_NAMES = {
    _kernels.END_INITIAL: "initial",
    _kernels.END_DIRICHLET: "dirichlet",
    _kernels.END_FLUID: "fluid",
    _kernels.END_SKY: "sky",
    _kernels.END_DISCARD: "discard",
}


def _apply_threads(n: int) -> None:
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(min(n, limit) if n and n > 0 else limit)


@dataclass
class CompiledScene:
    """MapSet + config flattened into kernel-ready tuples."""

    scene: tuple
    cfg: tuple
    tables: tuple
    warnings: list = field(default_factory=list)

    @classmethod
    def build(cls, mapset: MapSet, config: ScenarioConfig,
              database: MaterialDatabase | None = None) -> "CompiledScene":
        config.validate()
        db = database or default_database()
        grid = mapset.grid
        warnings: list[str] = []

        ids = mapset.building_id.astype(np.int32)
        heights = mapset.height_m.astype(np.float64)
        sdf = mapset.sdf_m.astype(np.float64)
        seg_idx = mapset.segment_index.astype(np.int32)
        roof_mat = mapset.roof_material.astype(np.int32)
        ground_mat = mapset.ground_material.astype(np.int32)
        eps_override = mapset.emissivity_override.astype(np.float64)
        if config.initial_temperature_k is not None:
            init_temp = np.full(ids.shape, config.initial_temperature_k,
                                dtype=np.float64)
        else:
            init_temp = mapset.initial_temperature_K.astype(np.float64)

        segs = mapset.segments
        b_ids = sorted(segs.perimeter)
        b_index = {b: i for i, b in enumerate(b_ids)}
        n_b = len(b_ids)
        b_first = np.zeros(n_b, dtype=np.int64)
        b_count = np.zeros(n_b, dtype=np.int64)
        b_perimeter = np.zeros(n_b, dtype=np.float64)
        b_height = np.zeros(n_b, dtype=np.float64)
        rects = np.zeros((n_b, 2, 18), dtype=np.float64)
        rmats = np.zeros((n_b, 2, 4), dtype=np.int32)
        for b, i in b_index.items():
            b_first[i] = segs.first_index[b]
            b_count[i] = segs.count[b]
            b_perimeter[i] = segs.perimeter[b]
            b_height[i] = mapset.building_heights.get(b, 0.0)
            comp = mapset.compositions.get(b)
            if comp is None:
                raise ConfigError(
                    f"building {b} has facade segments but no composition")
            layout = FacadeLayout(comp, config.pattern)
            warnings.extend(f"building {b}: {w}" for w in layout.warnings)
            rects[i] = layout.rects
            rmats[i] = layout.materials
        sbidx = np.array([b_index[int(b)] for b in segs.building],
                         dtype=np.int32) if len(segs) else np.zeros(0, np.int32)
        sheight = np.array([b_height[b_index[int(b)]] for b in segs.building],
                           dtype=np.float64) if len(segs) else np.zeros(0)

        # material tables indexed by id
        referenced = set()
        roofed = (ids > 0) | (seg_idx >= 0)
        if np.any(roofed):
            referenced.update(int(v) for v in np.unique(roof_mat[roofed]))
        referenced.update(int(v) for v in np.unique(ground_mat))
        for b in b_ids:
            for mat, pct in mapset.compositions[b].slots():
                if pct > 0:
                    referenced.add(int(mat))
        max_id = max([db.max_id] + list(referenced)) if referenced else db.max_id
        m = max_id + 1
        mat_eps = np.full(m, np.nan)
        mat_hcond = np.full(m, np.nan)
        mat_rewind = np.full(m, np.nan)
        mat_specular = np.zeros(m, dtype=np.uint8)
        delta = config.delta_m
        for mat in db:
            mat_eps[mat.id] = mat.emissivity
            mat_hcond[mat.id] = mat.conductivity / delta
            mat_rewind[mat.id] = (mat.density * mat.heat_capacity * delta * delta
                                  / (4.0 * mat.conductivity))
            mat_specular[mat.id] = 1 if mat.reflectance_kind == "specular" else 0
        missing = sorted(i for i in referenced if not np.isfinite(mat_eps[i]))
        if missing:
            raise ConfigError(
                f"scene references material ids {missing} absent from the database")

        dirichlet_temp = np.full(m, np.nan)
        for name, temp in config.dirichlet.items():
            dirichlet_temp[db.lookup(name).id] = float(temp)

        ceiling = float(heights.max()) + 1.0
        scene = (
            float(grid.origin_x), float(grid.origin_y), float(grid.cell_size),
            int(grid.width), int(grid.height),
            np.ascontiguousarray(ids), np.ascontiguousarray(heights),
            np.ascontiguousarray(sdf), np.ascontiguousarray(seg_idx),
            np.ascontiguousarray(segs.x0), np.ascontiguousarray(segs.y0),
            np.ascontiguousarray(segs.x1), np.ascontiguousarray(segs.y1),
            np.ascontiguousarray(segs.normal_x), np.ascontiguousarray(segs.normal_y),
            np.ascontiguousarray(segs.cum0), np.ascontiguousarray(segs.length),
            np.ascontiguousarray(sbidx), np.ascontiguousarray(sheight),
            b_first, b_count, b_perimeter, b_height, rects, rmats,
            np.ascontiguousarray(roof_mat), np.ascontiguousarray(ground_mat),
            np.ascontiguousarray(eps_override), np.ascontiguousarray(init_temp),
            mat_eps, mat_hcond, mat_rewind, mat_specular, dirichlet_temp,
            ceiling,
        )

        hr_coef = 4.0 * STEFAN_BOLTZMANN * config.t_ref_k ** 3
        cfg = (
            float(delta), float(config.h_conv_w_m2k), float(hr_coef),
            float(grid.cell_size / 10.0), int(config.trace_budget),
            float(config.pattern.pattern_width),
            float(config.pattern.pattern_height),
            int(config.max_radiative_bounces),
            int(config.conductive_steps_per_chain),
            int(config.max_transitions),
            float(config.lookback_horizon_s), float(config.table_dt_s),
            float(config.diffuse_fraction),
            float(math.cos(math.radians(config.sun_half_angle_deg))),
        )

        tables = _build_tables(config)
        return cls(scene=scene, cfg=cfg, tables=tables, warnings=warnings)


def _build_tables(config: ScenarioConfig) -> tuple:
    """Time tables over the lookback window, indexed by seconds before t0."""
    n = int(math.ceil(config.lookback_horizon_s / config.table_dt_s)) + 1
    sun_x = np.zeros(n)
    sun_y = np.zeros(n)
    sun_z = np.zeros(n)
    sun_do = np.zeros(n)
    sun_iod = np.zeros(n)
    air_t = np.zeros(n)
    sky_t = np.zeros(n)
    t0 = config.when_utc
    for k in range(n):
        when = t0 - timedelta(seconds=k * config.table_dt_s)
        air_t[k] = config.air_temperature.at(when)
        sky_t[k] = config.sky_temperature.at(when)
        if config.solar_enabled:
            state = solar_state(
                config.latitude_deg, config.longitude_deg, when,
                utc_offset_hours=config.utc_offset_hours,
                solar_constant=config.solar_constant_w_m2,
                half_angle_deg=config.sun_half_angle_deg)
            if state.direct_normal > 0.0:
                sun_x[k], sun_y[k], sun_z[k] = state.direction
                sun_do[k] = state.direct_normal
                sun_iod[k] = state.intensity
    return (sun_x, sun_y, sun_z, sun_do, sun_iod, air_t, sky_t)


@dataclass(frozen=True)
class PixelEstimate:
    """Monte Carlo estimate for one pixel."""

    temperature: float
    sample_std_error: float
    valid_paths: int
    discarded_paths: int

    @property
    def valid(self) -> bool:
        return self.valid_paths > 0


@dataclass
class SimulationResult:
    """Full-grid estimate plus sampling statistics."""

    temperature: np.ndarray   # Kelvin, NaN where every path was discarded
    std_error: np.ndarray
    valid: np.ndarray
    discarded: np.ndarray
    elapsed_s: float
    warnings: list = field(default_factory=list)

    @property
    def discard_fraction(self) -> float:
        total = int(self.valid.sum() + self.discarded.sum())
        return float(self.discarded.sum()) / total if total else 0.0

    def stats(self) -> dict:
        return {
            "valid_paths": int(self.valid.sum()),
            "discarded_paths": int(self.discarded.sum()),
            "discard_fraction": self.discard_fraction,
            "mean_std_error_k": float(np.nanmean(self.std_error)),
            "mean_temperature_k": float(np.nanmean(self.temperature)),
            "invalid_pixels": int(np.sum(self.valid == 0)),
            "elapsed_s": self.elapsed_s,
        }


def simulate(mapset: MapSet, config: ScenarioConfig,
             database: MaterialDatabase | None = None,
             compiled: CompiledScene | None = None) -> SimulationResult:
    """Estimate the whole grid. Deterministic for a fixed seed regardless of
    thread count; paths that exhaust a budget are excluded from the averages
    and reported."""
    cs = compiled or CompiledScene.build(mapset, config, database)
    grid = mapset.grid
    temps = np.zeros((grid.height, grid.width), dtype=np.float64)
    stderr = np.zeros((grid.height, grid.width), dtype=np.float64)
    valid = np.zeros((grid.height, grid.width), dtype=np.int64)
    discarded = np.zeros((grid.height, grid.width), dtype=np.int64)
    _apply_threads(config.threads)
    start = _time.perf_counter()
    _kernels.simulate_grid(config.seed, config.spp, cs.scene, cs.cfg, cs.tables,
                           temps, stderr, valid, discarded)
    elapsed = _time.perf_counter() - start
    result = SimulationResult(temperature=temps, std_error=stderr, valid=valid,
                              discarded=discarded, elapsed_s=elapsed,
                              warnings=list(cs.warnings))
    if result.discard_fraction > 0.01:
        result.warnings.append(
            f"discarded {result.discard_fraction:.1%} of paths; their exclusion "
            "biases the estimator")
    return result


def estimate_pixel(px: int, py: int, mapset: MapSet, config: ScenarioConfig,
                   database: MaterialDatabase | None = None,
                   compiled: CompiledScene | None = None) -> PixelEstimate:
    """Estimate one pixel (px = column, py = row)."""
    if not (0 <= px < mapset.grid.width and 0 <= py < mapset.grid.height):
        raise ValueError(f"pixel ({px}, {py}) outside the grid")
    cs = compiled or CompiledScene.build(mapset, config, database)
    pix = py * mapset.grid.width + px
    weights = np.empty(config.spp, dtype=np.float64)
    outcomes = np.empty(config.spp, dtype=np.int64)
    _kernels.pixel_paths(config.seed, pix, config.spp, cs.scene, cs.cfg,
                         cs.tables, weights, outcomes)
    ok = outcomes != _kernels.END_DISCARD
    n_valid = int(ok.sum())
    n_disc = config.spp - n_valid
    if n_valid == 0:
        return PixelEstimate(float("nan"), float("nan"), 0, n_disc)
    w = weights[ok]
    mean = float(w.mean())
    std_err = float(w.std(ddof=1) / math.sqrt(n_valid)) if n_valid > 1 else 0.0
    return PixelEstimate(mean, std_err, n_valid, n_disc)


def sample_path_at(mapset: MapSet, config: ScenarioConfig, row: int, col: int,
                   sample_index: int = 0,
                   compiled: CompiledScene | None = None):
    """Run a single path; returns (weight, outcome name). Test hook."""
    cs = compiled or CompiledScene.build(mapset, config)
    pix = row * mapset.grid.width + col
    weights = np.empty(1, dtype=np.float64)
    outcomes = np.empty(1, dtype=np.int64)
    _kernels.pixel_paths(config.seed, pix, 1, cs.scene, cs.cfg, cs.tables,
                         weights, outcomes, sample_index)
    return float(weights[0]), OUTCOME_NAMES[int(outcomes[0])]


def chain_simulate(mapset: MapSet, config: ScenarioConfig,
                   timestamps: list[datetime],
                   database: MaterialDatabase | None = None,
                   progress=None) -> list[SimulationResult]:
    """Run `simulate` at each timestamp, feeding each result forward as the
    next run's initial temperature; the lookback horizon of every step after
    the first is the gap to the previous timestamp."""
    if not timestamps:
        raise ValueError("chain_simulate needs at least one timestamp")
    stamps = [config.at_time(t).when_utc for t in timestamps]
    if any(b <= a for a, b in zip(stamps[:-1], stamps[1:])):
        raise ValueError("timestamps must be strictly increasing")
    results = []
    current = mapset
    for i, when in enumerate(timestamps):
        step_cfg = config.at_time(when)
        if i > 0:
            gap = (stamps[i] - stamps[i - 1]).total_seconds()
            step_cfg.lookback_horizon_s = gap
            step_cfg.initial_temperature_k = None
            filled = np.where(np.isfinite(results[-1].temperature),
                              results[-1].temperature,
                              current.initial_temperature_K)
            current = current.replace_layer("initial_temperature_K",
                                            filled.astype(np.float32))
        step_cfg.validate()
        result = simulate(current, step_cfg, database)
        results.append(result)
        if progress is not None:
            progress(i, when, result)
    return results
