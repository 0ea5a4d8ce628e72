"""Encode building footprints into the raster city maps.

The pipeline walks each footprint's exterior ring across the grid, splits it
at every cell-border crossing, and simplifies whatever falls inside one cell
to a single chord. Straight walls keep their geometry exactly; corners get
the chord between the border entry and exit points, which preserves
continuity with the neighbor cells and guarantees one facade segment (hence
one normal and one distance) per boundary cell. Arc lengths accumulated along
the chords drive the perimeter parameterization, and the chords themselves
drive the horizontal distance field used by the ray marcher.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .geometry import (BuildingFootprint, FacadeComposition, GridSpec,
                       SLOT_NAMES, points_in_polygon)


class EncodingError(ValueError):
    """Raised when footprints cannot be encoded on the requested grid."""


class FlaggedGeometryError(EncodingError):
    """Raised when a building is thinner than a cell somewhere.

    Cells crossed more than once by the same outline cannot hold a single
    facade segment; encoding aborts and reports the cells so the caller can
    raise the grid resolution instead of silently degrading geometry.
    """

    def __init__(self, flagged):
        self.flagged = flagged  # list of (building_id, row, col)
        cells = ", ".join(f"b{b}@({r},{c})" for b, r, c in flagged[:8])
        more = "" if len(flagged) <= 8 else f" (+{len(flagged) - 8} more)"
        super().__init__(
            f"{len(flagged)} cell(s) crossed more than once by a facade: "
            f"{cells}{more}; increase the grid resolution (smaller cell_size)")


@dataclass
class FacadeSegments:
    """Per-cell facade chords for all buildings, in traversal order.

    Segments of one building are contiguous and CCW-ordered; `cum0` holds the
    arc length (m) from the building's parameterization origin to the segment
    start, and `perimeter` dict maps building id to the total simplified ring
    length.
    """

    x0: np.ndarray
    y0: np.ndarray
    x1: np.ndarray
    y1: np.ndarray
    building: np.ndarray   # building id per segment
    cum0: np.ndarray       # arc length at segment start, m
    length: np.ndarray
    normal_x: np.ndarray   # outward unit normal
    normal_y: np.ndarray
    row: np.ndarray        # hosting cell (may be -1 when outside the grid)
    col: np.ndarray
    perimeter: dict[int, float] = field(default_factory=dict)
    first_index: dict[int, int] = field(default_factory=dict)
    count: dict[int, int] = field(default_factory=dict)
    ring: dict[int, np.ndarray] = field(default_factory=dict)  # simplified ring

    def __len__(self) -> int:
        return len(self.x0)

    @property
    def azimuth(self) -> np.ndarray:
        """Outward normal azimuth per segment, clockwise from north, [0, 2pi)."""
        return np.mod(np.arctan2(self.normal_x, self.normal_y), 2.0 * np.pi)

    @classmethod
    def empty(cls) -> "FacadeSegments":
        z = np.zeros(0)
        zi = np.zeros(0, dtype=np.int32)
        return cls(z, z, z, z, zi, z, z, z, z, zi.copy(), zi.copy())

    @classmethod
    def concatenate(cls, parts: list["FacadeSegments"]) -> "FacadeSegments":
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty()
        out = cls(*[np.concatenate([getattr(p, name) for p in parts])
                    for name in ("x0", "y0", "x1", "y1", "building", "cum0",
                                 "length", "normal_x", "normal_y", "row", "col")])
        offset = 0
        for p in parts:
            for b in p.perimeter:
                out.perimeter[b] = p.perimeter[b]
                out.first_index[b] = p.first_index[b] + offset
                out.count[b] = p.count[b]
                out.ring[b] = p.ring[b]
            offset += len(p)
        return out


def _ring_from_vertex(polygon: np.ndarray) -> np.ndarray:
    """Rotate the CCW ring to start at the lexicographically smallest (y, x)."""
    order = np.lexsort((polygon[:, 0], polygon[:, 1]))
    return np.roll(polygon, -int(order[0]), axis=0)


def _split_edge(p, q, grid: GridSpec):
    """Cut edge p->q at every grid-line crossing; yields sub-segment endpoints."""
    d = q - p
    ts = [0.0, 1.0]
    for axis, origin in ((0, grid.origin_x), (1, grid.origin_y)):
        if d[axis] == 0.0:
            continue
        lo = min(p[axis], q[axis])
        hi = max(p[axis], q[axis])
        first = int(np.ceil((lo - origin) / grid.cell_size))
        last = int(np.floor((hi - origin) / grid.cell_size))
        for k in range(first, last + 1):
            t = (origin + k * grid.cell_size - p[axis]) / d[axis]
            if 0.0 < t < 1.0:
                ts.append(t)
    ts = sorted(set(ts))
    pieces = []
    for ta, tb in zip(ts[:-1], ts[1:]):
        a = p + d * ta
        b = p + d * tb
        if np.hypot(*(b - a)) > 1e-12:
            pieces.append((a, b))
    return pieces


def _merge_adjacent(chains):
    """Merge consecutive (and wrap-around) chains that share a cell."""
    out = []
    for row, col, a, b in chains:
        if out and out[-1][0] == row and out[-1][1] == col:
            out[-1][3] = b
        else:
            out.append([row, col, a, b])
    if len(out) > 1 and out[0][0:2] == out[-1][0:2]:
        out[0][2] = out[-1][2]
        out.pop()
    return out


def _fold_excursions(chains, max_arc):
    """Fold short A-X[-Y]-A outline excursions into cell A's single chord.

    A polygon corner sitting just across a cell border makes the outline dip
    into a neighbor cell and come straight back; the dip is shorter than a
    cell and is absorbed into the host cell's chord (which, the cell being
    convex, stays inside it). Long revisits are left alone and end up
    flagged as sub-resolution geometry.
    """
    guard = 0
    changed = True
    while changed and guard < 16:
        guard += 1
        changed = False
        chains = _merge_adjacent(chains)
        i = 0
        while i < len(chains):
            n = len(chains)
            if n < 4:
                break
            folded = False
            for gap in (1, 2):
                if n - gap - 1 < 3:
                    continue
                j = (i + gap + 1) % n
                if j == i or chains[i][0:2] != chains[j][0:2]:
                    continue
                mids = [(i + k + 1) % n for k in range(gap)]
                arc = sum(np.hypot(*(np.asarray(chains[m][3])
                                     - np.asarray(chains[m][2])))
                          for m in mids)
                if arc > max_arc:
                    continue
                chains[i][3] = chains[j][3]
                for idx in sorted(mids + [j], reverse=True):
                    del chains[idx]
                    if idx < i:
                        i -= 1
                folded = True
                changed = True
                break
            if not folded:
                i += 1
    return _merge_adjacent(chains)


def trace_boundary_chains(footprint: BuildingFootprint, grid: GridSpec):
    """Walk the exterior ring and group it into one chain per visited cell.

    Returns (chains, flagged_cells). Each chain is (row, col, entry, exit)
    with entry/exit on cell borders (except possibly around the traversal
    origin, which is anchored at the first border crossing at or after the
    lexicographically smallest vertex). A cell visited by two distinct chains
    after excursion folding is geometry thinner than the grid and lands in
    flagged_cells.
    """
    ring = _ring_from_vertex(footprint.polygon)
    closed = np.vstack([ring, ring[:1]])

    pieces = []
    for p, q in zip(closed[:-1], closed[1:]):
        pieces.extend(_split_edge(p, q, grid))
    if not pieces:
        return [], [(footprint.id, -1, -1)]

    # Assign each piece to the cell on its interior (left-of-travel) side so
    # walls lying exactly on a grid line land in the building-side cell.
    nudge = 1e-7 * grid.cell_size
    cells = []
    for a, b in pieces:
        d = b - a
        left = np.array([-d[1], d[0]]) / np.hypot(*d)
        mid = (a + b) * 0.5 + left * nudge
        cells.append(grid.cell_of(mid[0], mid[1]))

    chains = []  # [row, col, entry, exit]
    for (a, b), cell in zip(pieces, cells):
        if chains and chains[-1][0:2] == list(cell):
            chains[-1][3] = b
        else:
            chains.append([cell[0], cell[1], a, b])

    chains = _fold_excursions(chains, max_arc=2.0 * grid.cell_size)
    if len(chains) < 3:
        # Outline confined to fewer than three cells: below grid resolution.
        return chains, [(footprint.id, chains[0][0], chains[0][1])]

    flagged = []
    seen = {}
    for k, (row, col, _, _) in enumerate(chains):
        key = (row, col)
        if key in seen:
            flagged.append((footprint.id, row, col))
        seen[key] = k
    for row, col, a, b in chains:
        if np.hypot(*(np.asarray(b) - np.asarray(a))) < 1e-9:
            flagged.append((footprint.id, row, col))
    return chains, flagged


def simplify_corners(footprint: BuildingFootprint, grid: GridSpec):
    """Simplified per-cell facade segments of one building.

    Returns (FacadeSegments, flagged_cells): one chord per boundary cell,
    chords sharing endpoints with their neighbors, plus the arc-length
    bookkeeping along the simplified ring.
    """
    chains, flagged = trace_boundary_chains(footprint, grid)
    if flagged:
        return FacadeSegments.empty(), flagged

    n = len(chains)
    x0 = np.empty(n)
    y0 = np.empty(n)
    x1 = np.empty(n)
    y1 = np.empty(n)
    rows = np.empty(n, dtype=np.int32)
    cols = np.empty(n, dtype=np.int32)
    lengths = np.empty(n)
    for k, (row, col, a, b) in enumerate(chains):
        x0[k], y0[k] = a
        x1[k], y1[k] = b
        in_grid = 0 <= row < grid.height and 0 <= col < grid.width
        rows[k] = row if in_grid else -1
        cols[k] = col if in_grid else -1
        lengths[k] = np.hypot(x1[k] - x0[k], y1[k] - y0[k])

    cum0 = np.concatenate([[0.0], np.cumsum(lengths[:-1])])
    perimeter = float(np.sum(lengths))
    dx = x1 - x0
    dy = y1 - y0
    normal_x = dy / lengths
    normal_y = -dx / lengths

    segs = FacadeSegments(
        x0=x0, y0=y0, x1=x1, y1=y1,
        building=np.full(n, footprint.id, dtype=np.int32),
        cum0=cum0, length=lengths, normal_x=normal_x, normal_y=normal_y,
        row=rows, col=cols,
        perimeter={footprint.id: perimeter},
        first_index={footprint.id: 0},
        count={footprint.id: n},
        ring={footprint.id: np.column_stack([x0, y0])},
    )
    return segs, []


def _clip_polygon_to_cell(polygon, x_lo, y_lo, x_hi, y_hi):
    """Sutherland-Hodgman clip of a polygon against an axis-aligned cell."""
    def clip(points, inside, intersect):
        out = []
        for i in range(len(points)):
            cur = points[i]
            prev = points[i - 1]
            cur_in = inside(cur)
            if inside(prev) != cur_in:
                out.append(intersect(prev, cur))
            if cur_in:
                out.append(cur)
        return out

    def x_cut(bound):
        def inter(p, q):
            t = (bound - p[0]) / (q[0] - p[0])
            return (bound, p[1] + t * (q[1] - p[1]))
        return inter

    def y_cut(bound):
        def inter(p, q):
            t = (bound - p[1]) / (q[1] - p[1])
            return (p[0] + t * (q[0] - p[0]), bound)
        return inter

    pts = [tuple(v) for v in polygon]
    pts = clip(pts, lambda p: p[0] >= x_lo, x_cut(x_lo))
    if pts:
        pts = clip(pts, lambda p: p[0] <= x_hi, x_cut(x_hi))
    if pts:
        pts = clip(pts, lambda p: p[1] >= y_lo, y_cut(y_lo))
    if pts:
        pts = clip(pts, lambda p: p[1] <= y_hi, y_cut(y_hi))
    if len(pts) < 3:
        return 0.0
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    return 0.5 * abs(float(np.sum(xs * np.roll(ys, -1) - np.roll(xs, -1) * ys)))


def rasterize_footprints(footprints: list[BuildingFootprint], grid: GridSpec,
                         ground_material: int = 0):
    """Rasterize footprints into id/height/roof-material layers.

    A cell belongs to the building with the largest overlap area; exact ties
    go to the smaller building id. Cells without any overlap get id 0, height
    0, and the scenario ground material. Returns (building_id, height,
    roof_material, ground_material_layer, clipped_count).
    """
    building_id = np.zeros((grid.height, grid.width), dtype=np.uint32)
    height = np.zeros((grid.height, grid.width), dtype=np.float64)
    roof = np.zeros((grid.height, grid.width), dtype=np.uint8)
    ground = np.full((grid.height, grid.width), ground_material, dtype=np.uint8)
    best = np.zeros((grid.height, grid.width), dtype=np.float64)

    x_min, y_min, x_max, y_max = grid.extent
    cell = grid.cell_size
    tie_eps = 1e-9 * cell * cell
    clipped = 0
    for fp in footprints:
        poly = fp.polygon
        if (poly[:, 0].min() < x_min - 1e-9 or poly[:, 0].max() > x_max + 1e-9 or
                poly[:, 1].min() < y_min - 1e-9 or poly[:, 1].max() > y_max + 1e-9):
            clipped += 1
        c_lo = max(0, int(np.floor((poly[:, 0].min() - x_min) / cell)))
        c_hi = min(grid.width - 1, int(np.floor((poly[:, 0].max() - x_min) / cell)))
        r_lo = max(0, int(np.floor((poly[:, 1].min() - y_min) / cell)))
        r_hi = min(grid.height - 1, int(np.floor((poly[:, 1].max() - y_min) / cell)))
        for r in range(r_lo, r_hi + 1):
            y_lo = y_min + r * cell
            for c in range(c_lo, c_hi + 1):
                x_lo = x_min + c * cell
                area = _clip_polygon_to_cell(poly, x_lo, y_lo, x_lo + cell, y_lo + cell)
                if area <= tie_eps:
                    continue
                better = area > best[r, c] + tie_eps
                tie = abs(area - best[r, c]) <= tie_eps and 0 < fp.id < building_id[r, c]
                if better or tie:
                    best[r, c] = area
                    building_id[r, c] = fp.id
                    height[r, c] = fp.height
                    roof[r, c] = fp.roof_material
    return building_id, height, roof, ground, clipped


@njit(cache=True, parallel=True)
def _sdf_fill(xs, ys, interior, sx0, sy0, sx1, sy1):
    h, w = interior.shape
    out = np.zeros((h, w), dtype=np.float64)
    n = sx0.shape[0]
    for r in prange(h):
        for c in range(w):
            if interior[r, c]:
                continue
            px = xs[r, c]
            py = ys[r, c]
            dmin = 1e30
            for s in range(n):
                ex = sx1[s] - sx0[s]
                ey = sy1[s] - sy0[s]
                qx = px - sx0[s]
                qy = py - sy0[s]
                ll = ex * ex + ey * ey
                t = (qx * ex + qy * ey) / ll
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                dx = qx - t * ex
                dy = qy - t * ey
                d2 = dx * dx + dy * dy
                if d2 < dmin:
                    dmin = d2
            out[r, c] = np.sqrt(dmin)
    return out


def compute_sdf(segments: FacadeSegments, grid: GridSpec,
                interior: np.ndarray | None = None) -> np.ndarray:
    """Distance (m) from each cell centroid to the nearest facade segment.

    Cells whose centroid lies inside a simplified building ring store 0. With
    no facades at all, every cell stores the grid diagonal (open ground in
    every direction).
    """
    if len(segments) == 0:
        diag = float(np.hypot(grid.width, grid.height)) * grid.cell_size
        return np.full((grid.height, grid.width), diag, dtype=np.float64)
    xs, ys = grid.centroids()
    if interior is None:
        interior = interior_mask(segments, grid)
    return _sdf_fill(xs, ys, interior, segments.x0, segments.y0,
                     segments.x1, segments.y1)


def interior_mask(segments: FacadeSegments, grid: GridSpec) -> np.ndarray:
    """Cells whose centroid falls inside any simplified building ring."""
    xs, ys = grid.centroids()
    mask = np.zeros((grid.height, grid.width), dtype=bool)
    for ring in segments.ring.values():
        mask |= points_in_polygon(xs, ys, ring)
    return mask


def compute_umap(segments: FacadeSegments, grid: GridSpec):
    """Raster (u, perimeter, azimuth) layers from the per-cell segments.

    Boundary cells store the perimeter fraction of their segment start, the
    building's simplified perimeter, and the outward normal azimuth
    (clockwise from north). Other cells store zeros. Also returns the
    segment-index raster (-1 where no facade crosses the cell).
    """
    u = np.zeros((grid.height, grid.width), dtype=np.float64)
    perimeter = np.zeros((grid.height, grid.width), dtype=np.float64)
    azimuth = np.zeros((grid.height, grid.width), dtype=np.float64)
    seg_index = np.full((grid.height, grid.width), -1, dtype=np.int32)
    az = segments.azimuth
    for s in range(len(segments)):
        r, c = segments.row[s], segments.col[s]
        if r < 0:
            continue
        p = segments.perimeter[int(segments.building[s])]
        u[r, c] = segments.cum0[s] / p
        perimeter[r, c] = p
        azimuth[r, c] = az[s]
        seg_index[r, c] = s
    return u, perimeter, azimuth, seg_index


class PackingError(ValueError):
    """Raised when a facade slot cannot be packed into 16 bits."""


def pack_slot(material_id: int, percentage: int) -> int:
    """Pack one (material id, percentage) slot: id in the high byte."""
    if not 0 <= material_id <= 255:
        raise PackingError(f"material id {material_id} exceeds 8 bits")
    if not 0 <= percentage <= 100:
        raise PackingError(f"percentage {percentage} out of [0, 100]")
    return (material_id << 8) | percentage


def unpack_slot(packed: int) -> tuple[int, int]:
    return (packed >> 8) & 0xFF, packed & 0xFF


def pack_facade_slots(composition: FacadeComposition) -> list[int]:
    """The eight 16-bit slot values, in ground-then-upper slot order."""
    return [pack_slot(mat, pct) for mat, pct in composition.slots()]


@dataclass
class EncodeReport:
    """What happened while encoding: clips, rejects, thin-geometry flags."""

    clipped_footprints: int = 0
    rejected: list = field(default_factory=list)       # (building id, reason)
    flagged_cells: list = field(default_factory=list)  # (building id, row, col)


def encode_city(footprints: list[BuildingFootprint], grid: GridSpec,
                ground_material: int, initial_temperature_k: float = 288.15,
                strict: bool = True):
    """Run the full encoding pipeline.

    Returns (MapSet, FacadeSegments, EncodeReport). With strict=True (the
    default), thin-geometry flags abort with FlaggedGeometryError since the
    one-segment-per-cell guarantee is load-bearing for the ray marcher.
    """
    from .mapset import MapSet  # deferred: mapset imports GridSpec from geometry

    report = EncodeReport()
    ids = [fp.id for fp in footprints]
    if len(set(ids)) != len(ids):
        raise EncodingError("building ids must be unique within a scene")

    building_id, height, roof, ground, clipped = rasterize_footprints(
        footprints, grid, ground_material)
    report.clipped_footprints = clipped

    parts = []
    for fp in footprints:
        segs, flagged = simplify_corners(fp, grid)
        if flagged:
            report.flagged_cells.extend(flagged)
        else:
            parts.append(segs)
    if report.flagged_cells and strict:
        raise FlaggedGeometryError(report.flagged_cells)
    segments = FacadeSegments.concatenate(parts)

    # A cell can host only one segment; overlapping outlines of two buildings
    # in one cell means the spacing is below grid resolution.
    if len(segments):
        in_grid = segments.row >= 0
        keys = segments.row[in_grid].astype(np.int64) * grid.width + \
            segments.col[in_grid]
        unique, counts = np.unique(keys, return_counts=True)
        for key in unique[counts > 1]:
            r, c = int(key // grid.width), int(key % grid.width)
            report.flagged_cells.append((0, r, c))
        if report.flagged_cells and strict:
            raise FlaggedGeometryError(report.flagged_cells)

    interior = interior_mask(segments, grid) if len(segments) else \
        np.zeros((grid.height, grid.width), dtype=bool)
    sdf = compute_sdf(segments, grid, interior)
    u, perimeter, azimuth, seg_index = compute_umap(segments, grid)

    # Boundary cells the overlap rule assigned to ground still expose a roof
    # sliver on the interior side of their segment; give them their
    # building's roof material so sliver hits resolve.
    roof_by_id = {fp.id: fp.roof_material for fp in footprints}
    for s in range(len(segments)):
        r, c = segments.row[s], segments.col[s]
        if r >= 0 and building_id[r, c] == 0:
            roof[r, c] = roof_by_id[int(segments.building[s])]

    slots = np.zeros((8, grid.height, grid.width), dtype=np.uint16)
    for fp in footprints:
        packed = pack_facade_slots(fp.composition.normalized())
        mask = building_id == fp.id
        for k in range(8):
            slots[k][mask] = packed[k]

    mapset = MapSet.build(
        grid=grid,
        building_id=building_id,
        height_m=height.astype(np.float32),
        roof_material=roof,
        ground_material=ground,
        sdf_m=sdf.astype(np.float32),
        facade_azimuth_rad=azimuth.astype(np.float32),
        u_coord=u.astype(np.float32),
        perimeter_m=perimeter.astype(np.float32),
        facade_slots=slots,
        initial_temperature_K=np.full((grid.height, grid.width),
                                      initial_temperature_k, dtype=np.float32),
        emissivity_override=np.full((grid.height, grid.width), np.nan,
                                    dtype=np.float32),
        segments=segments,
        segment_index=seg_index,
        compositions={fp.id: fp.composition.normalized() for fp in footprints},
        building_heights={fp.id: fp.height for fp in footprints},
    )
    return mapset, segments, report


def apply_material_override(mapset, database, overrides: dict):
    """New MapSet with scenario-level material substitutions applied.

    Keys: "facade_main" (replace the main material of every facade, keeping
    percentages), "roof", "ground", or "building:<id>:facade_main" for one
    building. Values are material names resolved in `database`.
    """
    from .mapset import SLOT_LAYERS, MapSet  # deferred, see encode_city

    ms = mapset
    compositions = dict(ms.compositions)

    def swap_main(comp: FacadeComposition, mat_id: int) -> FacadeComposition:
        return FacadeComposition(
            ground_main=(mat_id, comp.ground_main[1]),
            ground_windows=comp.ground_windows,
            ground_frames=comp.ground_frames,
            ground_doors=comp.ground_doors,
            upper_main=(mat_id, comp.upper_main[1]),
            upper_windows=comp.upper_windows,
            upper_frames=comp.upper_frames,
            upper_shutters=comp.upper_shutters)

    layers = dict(ms.layers)
    for key, name in overrides.items():
        mat = database.lookup(str(name)).id
        if key == "facade_main":
            for b in list(compositions):
                compositions[b] = swap_main(compositions[b], mat)
        elif key == "roof":
            roof = layers["roof_material"].copy()
            roof[layers["building_id"] > 0] = mat
            layers["roof_material"] = roof
        elif key == "ground":
            layers["ground_material"] = np.full_like(layers["ground_material"], mat)
        elif key.startswith("building:") and key.endswith(":facade_main"):
            b = int(key.split(":")[1])
            if b not in compositions:
                raise EncodingError(f"override names unknown building {b}")
            compositions[b] = swap_main(compositions[b], mat)
        else:
            raise EncodingError(f"unknown override key {key!r}")

    # refresh the packed facade slot layers from the new compositions
    ids = layers["building_id"]
    slots = [layers[name].copy() for name in SLOT_LAYERS]
    for b, comp in compositions.items():
        packed = pack_facade_slots(comp)
        mask = ids == b
        for k in range(8):
            slots[k][mask] = packed[k]
    for k, name in enumerate(SLOT_LAYERS):
        layers[name] = slots[k]

    out = MapSet(grid=ms.grid, layers=layers, segments=ms.segments,
                 segment_index=ms.segment_index,
                 building_heights=dict(ms.building_heights),
                 compositions=compositions)
    out.validate()
    return out


def load_geojson(source, database, default_composition=None):
    """Parse a GeoJSON FeatureCollection of building footprints.

    Each feature needs polygon geometry in local meters and properties `id`,
    `height_m`, `roof_material` (name or numeric id), and optionally a
    `facade` object mapping slot names to [material name or id, percentage].
    Returns (footprints, rejected) where rejected holds (id, reason) pairs
    for features that could not be used (holes, degenerate rings, ...).
    """
    if isinstance(source, (str,)) and source.lstrip().startswith("{"):
        doc = json.loads(source)
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as f:
            doc = json.load(f)
    if doc.get("type") != "FeatureCollection":
        raise EncodingError("expected a GeoJSON FeatureCollection")

    def material_id(value):
        if isinstance(value, (int, np.integer)):
            return int(value)
        return database.lookup(str(value)).id

    footprints = []
    rejected = []
    for feature in doc.get("features", []):
        props = feature.get("properties", {}) or {}
        fid = props.get("id", "?")
        try:
            geom = feature.get("geometry") or {}
            if geom.get("type") != "Polygon":
                raise ValueError(f"unsupported geometry {geom.get('type')!r}")
            rings = geom.get("coordinates", [])
            if len(rings) > 1:
                raise ValueError("polygons with holes (courtyards) are not supported")
            slots = {}
            for name, value in (props.get("facade") or {}).items():
                if name not in SLOT_NAMES:
                    raise ValueError(f"unknown facade slot {name!r}")
                slots[name] = (material_id(value[0]), int(value[1]))
            if slots:
                composition = FacadeComposition(**slots).normalized()
            else:
                composition = default_composition or FacadeComposition()
            footprints.append(BuildingFootprint(
                id=int(props["id"]),
                polygon=np.asarray(rings[0], dtype=np.float64),
                height=float(props["height_m"]),
                roof_material=material_id(props["roof_material"]),
                composition=composition,
            ))
        except (KeyError, ValueError, IndexError, TypeError) as exc:
            rejected.append((fid, str(exc)))
    return footprints, rejected
