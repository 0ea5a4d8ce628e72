"""Python-level ray queries against a compiled scene.

Thin wrappers over the compiled marcher for inspection and testing; the
transport kernel calls the compiled form directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .mapset import MapSet
from .scenario import ScenarioConfig
from .transport import CompiledScene

KIND_NAMES = {_kernels.SKY: "sky", _kernels.FACADE: "facade",
              _kernels.ROOF: "roof", _kernels.GROUND: "ground"}


class TraceBudgetError(RuntimeError):
    """The marcher ran out of steps before resolving the ray."""


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin",
                           np.asarray(self.origin, dtype=np.float64))
        d = np.asarray(self.direction, dtype=np.float64)
        norm = np.linalg.norm(d)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"direction must be unit length, |d| = {norm}")
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class Hit:
    kind: str                 # facade / roof / ground / sky / domain_edge
    point: np.ndarray | None  # None for sky
    normal: np.ndarray | None
    building_id: int
    travel: float
    segment: int = -1


def compile_scene(mapset: MapSet, config: ScenarioConfig | None = None,
                  database=None) -> CompiledScene:
    """Compile with a lightweight default config when none is given."""
    if config is None:
        config = ScenarioConfig(solar_enabled=False, lookback_horizon_s=3600.0,
                                table_dt_s=3600.0)
    return CompiledScene.build(mapset, config, database)


def sphere_trace(ray: Ray, mapset: MapSet,
                 compiled: CompiledScene | None = None,
                 config: ScenarioConfig | None = None) -> Hit:
    """Resolve one ray; lateral exits report kind "domain_edge"."""
    cs = compiled or compile_scene(mapset, config)
    budget = cs.cfg[4]
    kind, hx, hy, hz, nx, ny, nz, seg, travel = _kernels.trace(
        float(ray.origin[0]), float(ray.origin[1]), float(ray.origin[2]),
        float(ray.direction[0]), float(ray.direction[1]), float(ray.direction[2]),
        cs.scene, budget)
    if kind == _kernels.TRACE_BUDGET:
        raise TraceBudgetError(f"step budget {budget} exhausted")
    if kind == _kernels.SKY:
        x0, y0, x1, y1 = mapset.grid.extent
        lateral = not (x0 <= hx < x1 and y0 <= hy < y1)
        return Hit(kind="domain_edge" if lateral else "sky", point=None,
                   normal=None, building_id=0, travel=travel)
    point = np.array([hx, hy, hz])
    normal = np.array([nx, ny, nz])
    if kind == _kernels.FACADE:
        building = int(mapset.segments.building[seg])
    elif kind == _kernels.ROOF:
        row, col = mapset.grid.cell_of(hx, hy)
        building = int(mapset.building_id[row, col])
    else:
        building = 0
    return Hit(kind=KIND_NAMES[kind], point=point, normal=normal,
               building_id=building, travel=travel, segment=int(seg))


def occluded_toward_sun(point, normal, sun_direction, mapset: MapSet,
                        compiled: CompiledScene | None = None,
                        config: ScenarioConfig | None = None) -> bool:
    """True when something blocks the sun from `point`.

    The shadow ray starts a small offset along the surface normal; a sun at
    or below the horizon always counts as occluded (no direct term).
    """
    sun = np.asarray(sun_direction, dtype=np.float64)
    if sun[2] <= 0.0:
        return True
    cs = compiled or compile_scene(mapset, config)
    eps_hit = cs.cfg[3]
    origin = np.asarray(point, dtype=np.float64) + \
        eps_hit * np.asarray(normal, dtype=np.float64)
    kind, *_ = _kernels.trace(
        float(origin[0]), float(origin[1]), float(origin[2]),
        float(sun[0]), float(sun[1]), float(sun[2]),
        cs.scene, cs.cfg[4])
    if kind == _kernels.TRACE_BUDGET:
        return True  # conservative: treat an unresolved shadow ray as blocked
    return kind != _kernels.SKY
