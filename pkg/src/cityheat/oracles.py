"""Independent reference implementations and comparison metrics.

These deliberately avoid the production code paths: the plate conduction
problem is solved both by classic finite differences and by the standalone
fixed-radius walk, distances by an exhaustive point-to-segment scan, and the
sun position by the PSA ephemeris (a different series than the production
algorithm). Comparisons between production and oracle outputs are the
simulator's ground truth at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from . import _kernels
from .materials import Material


@dataclass
class ConductionProblem:
    """Square Dirichlet plate: node-registered grid over [0, size]^2.

    Steady-state Laplace needs no material constants; the material is kept
    for the walk's step/time calibration. Boundary nodes are pinned to the
    edge temperatures, corners to the average of their two edges.
    """

    nodes: int = 64
    size: float = 1.0
    material: Material | None = None
    t_top: float = 1.0
    t_bottom: float = 1.0
    t_left: float = 0.0
    t_right: float = 0.0
    initial: np.ndarray | None = None

    def __post_init__(self):
        if self.nodes < 3:
            raise ValueError("plate needs at least a 3x3 grid")
        if self.size <= 0:
            raise ValueError("plate size must be positive")

    def boundary_field(self) -> np.ndarray:
        """Initial field with the boundary pinned (row 0 = bottom)."""
        n = self.nodes
        if self.initial is not None:
            u = np.array(self.initial, dtype=np.float64)
            if u.shape != (n, n):
                raise ValueError(f"initial field must be {n}x{n}")
        else:
            u = np.zeros((n, n), dtype=np.float64)
        u[:, 0] = self.t_left
        u[:, -1] = self.t_right
        u[0, :] = self.t_bottom
        u[-1, :] = self.t_top
        u[0, 0] = 0.5 * (self.t_bottom + self.t_left)
        u[0, -1] = 0.5 * (self.t_bottom + self.t_right)
        u[-1, 0] = 0.5 * (self.t_top + self.t_left)
        u[-1, -1] = 0.5 * (self.t_top + self.t_right)
        return u


class ConvergenceError(RuntimeError):
    """FDM iteration cap reached before the update tolerance."""


def fdm_steady_conduction(problem: ConductionProblem, tolerance: float = 1e-9,
                          max_iterations: int = 200_000,
                          return_history: bool = False):
    """Steady 5-point Laplace solution via red-black Gauss-Seidel sweeps.

    Iterates until the largest per-node update of a sweep drops below
    `tolerance`. Returns the field (and the per-sweep update history when
    requested).
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    u = problem.boundary_field()
    n = problem.nodes
    rows, cols = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    interior = (rows > 0) & (rows < n - 1) & (cols > 0) & (cols < n - 1)
    red = interior & (((rows + cols) % 2) == 0)
    black = interior & (((rows + cols) % 2) == 1)
    history = []
    for _ in range(max_iterations):
        max_update = 0.0
        for mask in (red, black):
            neighbors = np.zeros_like(u)
            neighbors[1:-1, 1:-1] = (u[:-2, 1:-1] + u[2:, 1:-1]
                                     + u[1:-1, :-2] + u[1:-1, 2:]) * 0.25
            delta = np.abs(neighbors[mask] - u[mask])
            if delta.size:
                max_update = max(max_update, float(delta.max()))
            u[mask] = neighbors[mask]
        history.append(max_update)
        if max_update < tolerance:
            return (u, history) if return_history else u
    raise ConvergenceError(
        f"no convergence after {max_iterations} sweeps; last update {history[-1]:.3e}")


def walk_steady_conduction(problem: ConductionProblem, walks_per_cell: int,
                           delta: float, seed: int = 0) -> np.ndarray:
    """Fixed-radius 2D walk estimate of the same Dirichlet plate.

    Every interior node averages the edge temperature reached by
    `walks_per_cell` walks of step `delta`; the first boundary crossing of a
    step decides which edge temperature is collected.
    """
    if delta > problem.size / 20.0 + 1e-12:
        raise ValueError(f"delta {delta} exceeds plate size/20")
    if walks_per_cell < 1:
        raise ValueError("walks_per_cell must be >= 1")
    n = problem.nodes
    step = problem.size / (n - 1)
    out = np.zeros((n, n), dtype=np.float64)
    _kernels.plate_walk(seed, n, n, step, step, problem.size, problem.size,
                        delta, walks_per_cell, problem.t_top, problem.t_bottom,
                        problem.t_left, problem.t_right, out)
    return out


def scaled_difference(candidate: np.ndarray, reference: np.ndarray) -> float:
    """Mean absolute difference as a percentage of the reference range."""
    candidate = np.asarray(candidate, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if candidate.shape != reference.shape:
        raise ValueError(f"shape mismatch {candidate.shape} vs {reference.shape}")
    span = float(reference.max() - reference.min())
    if span == 0.0:
        raise ValueError("reference raster is constant; scale is undefined")
    return float(np.mean(np.abs(candidate - reference))) / span * 100.0


def rmse(a: np.ndarray, b: np.ndarray) -> float:
    """Root mean squared difference."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def brute_force_sdf(segments, x: float, y: float) -> float:
    """Exact minimum distance from (x, y) to any facade segment.

    `segments` is anything exposing x0/y0/x1/y1 arrays or an (n, 4) array.
    """
    if hasattr(segments, "x0"):
        x0, y0 = np.asarray(segments.x0), np.asarray(segments.y0)
        x1, y1 = np.asarray(segments.x1), np.asarray(segments.y1)
    else:
        arr = np.asarray(segments, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 4 or arr.shape[0] == 0:
            raise ValueError("segments must be a non-empty (n, 4) array")
        x0, y0, x1, y1 = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
    if len(x0) == 0:
        raise ValueError("no segments")
    ex = x1 - x0
    ey = y1 - y0
    ll = ex * ex + ey * ey
    t = np.clip(((x - x0) * ex + (y - y0) * ey) / ll, 0.0, 1.0)
    dx = x - (x0 + t * ex)
    dy = y - (y0 + t * ey)
    return float(np.sqrt(np.min(dx * dx + dy * dy)))


def resample_bilinear(raster: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Bilinear resampling to (rows, cols), edge-clamped, pixel-center aligned."""
    raster = np.asarray(raster, dtype=np.float64)
    new_h, new_w = int(shape[0]), int(shape[1])
    if new_h < 1 or new_w < 1:
        raise ValueError("target dimensions must be >= 1")
    h, w = raster.shape
    if (new_h, new_w) == (h, w):
        return raster.copy()
    ys = (np.arange(new_h) + 0.5) * h / new_h - 0.5
    xs = (np.arange(new_w) + 0.5) * w / new_w - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    fx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    v00 = raster[np.ix_(y0, x0)]
    v01 = raster[np.ix_(y0, x1)]
    v10 = raster[np.ix_(y1, x0)]
    v11 = raster[np.ix_(y1, x1)]
    return (v00 * (1 - fy) * (1 - fx) + v01 * (1 - fy) * fx
            + v10 * fy * (1 - fx) + v11 * fy * fx)


# ---------------------------------------------------------------------------
# independent ephemeris (PSA algorithm, Blanco-Muriel et al.)
# ---------------------------------------------------------------------------

def psa_sun_position(latitude_deg: float, longitude_deg: float,
                     when_utc: datetime) -> tuple[float, float]:
    """(elevation, azimuth) in radians from the PSA ephemeris.

    Kept as an independent cross-check: different series, different authors
    than the production sun model. Azimuth is clockwise from north.
    """
    hour = when_utc.hour + when_utc.minute / 60.0 + when_utc.second / 3600.0
    # Julian day from the calendar date; the Fliegel formula assumes
    # truncating (C-style) division, hence math.trunc for the month term
    li_aux1 = math.trunc((when_utc.month - 14) / 12)
    li_aux2 = (1461 * (when_utc.year + 4800 + li_aux1)) // 4 \
        + (367 * (when_utc.month - 2 - 12 * li_aux1)) // 12 \
        - (3 * ((when_utc.year + 4900 + li_aux1) // 100)) // 4 \
        + when_utc.day - 32075
    jd = li_aux2 - 0.5 + hour / 24.0
    n = jd - 2451545.0

    omega = 2.1429 - 0.0010394594 * n
    mean_long = 4.8950630 + 0.017202791698 * n
    mean_anom = 6.2400600 + 0.0172019699 * n
    ecl_long = mean_long + 0.03341607 * math.sin(mean_anom) \
        + 0.00034894 * math.sin(2.0 * mean_anom) - 0.0001134 \
        - 0.0000203 * math.sin(omega)
    obliquity = 0.4090928 - 6.2140e-9 * n + 0.0000396 * math.cos(omega)

    sin_el = math.sin(ecl_long)
    dec = math.asin(math.sin(obliquity) * sin_el)
    ra = math.atan2(math.cos(obliquity) * sin_el, math.cos(ecl_long))
    if ra < 0.0:
        ra += 2.0 * math.pi

    gmst = 6.6974243242 + 0.0657098283 * n + hour
    lmst = math.radians(gmst * 15.0 + longitude_deg)
    ha = lmst - ra

    lat = math.radians(latitude_deg)
    cos_lat = math.cos(lat)
    sin_lat = math.sin(lat)
    cos_ha = math.cos(ha)
    zenith = math.acos(cos_lat * cos_ha * math.cos(dec) + math.sin(dec) * sin_lat)
    azimuth = math.atan2(-math.sin(ha),
                         math.tan(dec) * cos_lat - sin_lat * cos_ha)
    azimuth = azimuth % (2.0 * math.pi)
    # parallax correction (earth radius / 1 AU)
    zenith += 6371.01 / 149597890.0 * math.sin(zenith)
    return math.pi / 2.0 - zenith, azimuth


@dataclass
class SuiteResult:
    """Outcome of one validation check."""

    name: str
    passed: bool
    measured: float
    limit: float
    detail: str = ""
    rows: list = field(default_factory=list)
