"""Footprint and grid primitives shared by the encoder and the tracer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """A raster over local planar coordinates, in meters.

    Cell (row, col) covers [origin_x + col*cell, origin_x + (col+1)*cell) x
    [origin_y + row*cell, ...): row 0 is the southernmost row.
    """

    origin_x: float
    origin_y: float
    cell_size: float
    width: int   # columns
    height: int  # rows

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError(f"cell_size must be > 0, got {self.cell_size}")
        if self.width < 1 or self.height < 1:
            raise ValueError("grid must be at least 1x1")

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) in meters."""
        return (self.origin_x, self.origin_y,
                self.origin_x + self.width * self.cell_size,
                self.origin_y + self.height * self.cell_size)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) of the cell containing (x, y); may be out of range."""
        col = int(np.floor((x - self.origin_x) / self.cell_size))
        row = int(np.floor((y - self.origin_y) / self.cell_size))
        return row, col

    def contains(self, x: float, y: float) -> bool:
        x0, y0, x1, y1 = self.extent
        return x0 <= x < x1 and y0 <= y < y1

    def centroid(self, row: int, col: int) -> tuple[float, float]:
        return (self.origin_x + (col + 0.5) * self.cell_size,
                self.origin_y + (row + 0.5) * self.cell_size)

    def centroids(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid arrays (x, y) of all cell centroids, shape (height, width)."""
        xs = self.origin_x + (np.arange(self.width) + 0.5) * self.cell_size
        ys = self.origin_y + (np.arange(self.height) + 0.5) * self.cell_size
        return np.meshgrid(xs, ys)


# Facade slot order used in compositions, packed layers, and layouts.
GROUND_SLOTS = ("ground_main", "ground_windows", "ground_frames", "ground_doors")
UPPER_SLOTS = ("upper_main", "upper_windows", "upper_frames", "upper_shutters")
SLOT_NAMES = GROUND_SLOTS + UPPER_SLOTS


@dataclass(frozen=True)
class FacadeComposition:
    """Statistical facade description: (material id, percentage) per slot.

    Ground-level percentages and upper-level percentages each sum to 100;
    `normalized()` rescales inputs that do not.
    """

    ground_main: tuple[int, int] = (0, 100)
    ground_windows: tuple[int, int] = (0, 0)
    ground_frames: tuple[int, int] = (0, 0)
    ground_doors: tuple[int, int] = (0, 0)
    upper_main: tuple[int, int] = (0, 100)
    upper_windows: tuple[int, int] = (0, 0)
    upper_frames: tuple[int, int] = (0, 0)
    upper_shutters: tuple[int, int] = (0, 0)

    def slots(self) -> list[tuple[int, int]]:
        return [getattr(self, name) for name in SLOT_NAMES]

    def level_percentages(self) -> tuple[int, int]:
        ground = sum(getattr(self, n)[1] for n in GROUND_SLOTS)
        upper = sum(getattr(self, n)[1] for n in UPPER_SLOTS)
        return ground, upper

    def validate(self) -> None:
        for name in SLOT_NAMES:
            mat, pct = getattr(self, name)
            if not 0 <= mat <= 255:
                raise ValueError(f"{name}: material id {mat} out of [0, 255]")
            if not 0 <= pct <= 100:
                raise ValueError(f"{name}: percentage {pct} out of [0, 100]")
        ground, upper = self.level_percentages()
        if ground != 100:
            raise ValueError(f"ground-level percentages sum to {ground}, not 100")
        if upper != 100:
            raise ValueError(f"upper-level percentages sum to {upper}, not 100")

    def normalized(self) -> "FacadeComposition":
        """Rescale each level's percentages to sum to 100 (largest remainder)."""
        values = {}
        for names in (GROUND_SLOTS, UPPER_SLOTS):
            slots = [getattr(self, n) for n in names]
            total = sum(p for _, p in slots)
            if total == 100:
                scaled = [p for _, p in slots]
            elif total == 0:
                scaled = [100, 0, 0, 0]
            else:
                exact = [p * 100.0 / total for _, p in slots]
                scaled = [int(np.floor(v)) for v in exact]
                remainder = 100 - sum(scaled)
                order = np.argsort([s - e for s, e in zip(scaled, exact)])
                for i in range(remainder):
                    scaled[order[i % 4]] += 1
            for name, (mat, _), pct in zip(names, slots, scaled):
                values[name] = (mat, pct)
        return FacadeComposition(**values)


@dataclass
class BuildingFootprint:
    """One building: a simple CCW polygon with height and material metadata."""

    id: int
    polygon: np.ndarray  # (n, 2) vertices, meters, CCW exterior, not closed
    height: float
    roof_material: int
    composition: FacadeComposition = field(default_factory=FacadeComposition)

    def __post_init__(self):
        self.polygon = np.asarray(self.polygon, dtype=np.float64)
        if self.id <= 0:
            raise ValueError(f"building id must be positive, got {self.id}")
        if self.height <= 0:
            raise ValueError(f"building {self.id}: height must be > 0")
        if self.polygon.ndim != 2 or self.polygon.shape[1] != 2:
            raise ValueError(f"building {self.id}: polygon must be (n, 2)")
        # Drop an explicit closing vertex.
        if len(self.polygon) > 1 and np.allclose(self.polygon[0], self.polygon[-1]):
            self.polygon = self.polygon[:-1]
        if len(self.polygon) < 3:
            raise ValueError(f"building {self.id}: polygon needs >= 3 vertices")
        area = signed_area(self.polygon)
        if area == 0:
            raise ValueError(f"building {self.id}: degenerate (zero-area) polygon")
        if area < 0:  # accept CW input, normalize to CCW
            self.polygon = self.polygon[::-1].copy()
        if not is_simple_polygon(self.polygon):
            raise ValueError(f"building {self.id}: polygon is self-intersecting")

    @property
    def perimeter(self) -> float:
        closed = np.vstack([self.polygon, self.polygon[:1]])
        return float(np.sum(np.hypot(*np.diff(closed, axis=0).T)))


def signed_area(polygon: np.ndarray) -> float:
    """Shoelace area; positive for CCW orientation."""
    x, y = polygon[:, 0], polygon[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _segments_intersect(p1, p2, q1, q2) -> bool:
    """Proper intersection of two segments, shared endpoints excluded."""
    d1 = _cross2(q2 - q1, p1 - q1)
    d2 = _cross2(q2 - q1, p2 - q1)
    d3 = _cross2(p2 - p1, q1 - p1)
    d4 = _cross2(p2 - p1, q2 - p1)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def is_simple_polygon(polygon: np.ndarray) -> bool:
    """True when no two non-adjacent edges intersect."""
    n = len(polygon)
    edges = [(polygon[i], polygon[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or j == (i + 1) % n or (j + 1) % n == i:
                continue
            if _segments_intersect(*edges[i], *edges[j]):
                return False
    return True


def point_in_polygon(x: float, y: float, polygon: np.ndarray) -> bool:
    """Even-odd rule; points exactly on an edge may land on either side."""
    inside = False
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xt = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
            if x < xt:
                inside = not inside
    return inside


def points_in_polygon(xs: np.ndarray, ys: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Vectorized even-odd point-in-polygon test."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    inside = np.zeros(xs.shape, dtype=bool)
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        crosses = (y1 > ys) != (y2 > ys)
        if y2 != y1:
            xt = x1 + (ys - y1) / (y2 - y1) * (x2 - x1)
            inside ^= crosses & (xs < xt)
    return inside
