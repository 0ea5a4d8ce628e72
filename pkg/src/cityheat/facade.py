"""Procedural facade sampling: (u, h) on the facade plane -> component + material.

The facade plane of a building unrolls its exterior walls into a rectangle
of perimeter x height meters. It is tiled by pattern-sized cells anchored at
(u=0, ground); floor 0 uses the ground-level composition, upper floors the
upper-level one. Within a tile the layout is deterministic: an optional
full-height door strip (ground floor), a window rectangle sized so its area
matches the configured coverage, a uniform frame band around the window, and
shutter strips flanking the frame on upper floors. Partial tiles at facade
ends and tops are clipped, never rescaled, so the pattern pitch that defines
the conduction step stays meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import FacadeComposition

# Component codes, also used by the transport kernel.
MAIN, WINDOW, FRAME, DOOR, SHUTTER = 0, 1, 2, 3, 4
COMPONENT_NAMES = {MAIN: "main", WINDOW: "window", FRAME: "frame",
                   DOOR: "door", SHUTTER: "shutter"}


@dataclass(frozen=True)
class FacadePattern:
    """Tile pitch of the unit facade arrangement, meters."""

    pattern_width: float = 6.6
    pattern_height: float = 2.7
    max_door_width: float = 4.0

    def __post_init__(self):
        for name in ("pattern_width", "pattern_height", "max_door_width"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class FacadePoint:
    """One sampled facade location."""

    u: float
    h: float
    component: int
    material: int

    @property
    def component_name(self) -> str:
        return COMPONENT_NAMES[self.component]


class CompositionError(ValueError):
    """Raised when facade percentages do not sum to 100 per level."""


def characteristic_delta(pattern: FacadePattern) -> float:
    """Conductive walk radius: one twentieth of the smaller pattern pitch."""
    return min(pattern.pattern_width, pattern.pattern_height) / 20.0


def _frame_thickness(w_win: float, h_win: float, area: float) -> float:
    """Uniform band thickness t with (w+2t)(h+2t) - w*h = area."""
    if area <= 0.0:
        return 0.0
    s = w_win + h_win
    return (-s + math.sqrt(s * s + 4.0 * area)) / 4.0


class FacadeLayout:
    """Precomputed tile rectangles for one composition and pattern.

    Coverage shortfalls that cannot fit the tile geometrically (door taller
    than a floor, frame band wider than the tile, ...) are reassigned to the
    main material and recorded in `warnings`.
    """

    def __init__(self, composition: FacadeComposition, pattern: FacadePattern):
        ground, upper = composition.level_percentages()
        if ground != 100 or upper != 100:
            raise CompositionError(
                f"facade percentages must sum to 100 per level "
                f"(got ground {ground}, upper {upper})")
        self.composition = composition
        self.pattern = pattern
        self.warnings: list[str] = []
        # rects[level] = 18 floats: door, window, frame outer, shutters
        # (ts0, ts1, tz0, tz1 each; shutters share one tz range)
        self.rects = np.zeros((2, 18), dtype=np.float64)
        self.materials = np.zeros((2, 4), dtype=np.int32)  # main/window/frame/extra
        self._build_level(0, composition.ground_main, composition.ground_windows,
                          composition.ground_frames, composition.ground_doors,
                          has_door=True)
        self._build_level(1, composition.upper_main, composition.upper_windows,
                          composition.upper_frames, composition.upper_shutters,
                          has_door=False)

    def _build_level(self, level, main, windows, frames, extra, has_door):
        w_p = self.pattern.pattern_width
        h_p = self.pattern.pattern_height
        tile = w_p * h_p
        rect = np.zeros(18)
        rect[0:4] = (1.0, 0.0, 1.0, 0.0)    # door: empty (ts0 > ts1)
        rect[12:16] = (1.0, 0.0, 1.0, 0.0)  # shutters: empty
        label = "ground" if level == 0 else "upper"

        door_frac = (extra[1] if has_door else 0) / 100.0
        win_frac = windows[1] / 100.0
        frame_frac = frames[1] / 100.0
        shutter_frac = (0 if has_door else extra[1]) / 100.0

        region_lo, region_hi = 0.0, w_p
        if door_frac > 0.0:
            width = min(self.pattern.max_door_width, door_frac * w_p, w_p)
            height = door_frac * tile / width
            if height > h_p:
                self.warnings.append(
                    f"{label}: door coverage {extra[1]}% cannot fit one floor; "
                    "excess reassigned to main")
                height = h_p
            ts0 = (w_p - width) / 2.0
            rect[0:4] = (ts0, ts0 + width, 0.0, height)
            region_lo = ts0 + width  # window moves beside the door

        if win_frac > 0.0:
            f = math.sqrt(win_frac)
            width = f * w_p
            height = f * h_p
            avail = region_hi - region_lo
            if width > avail:
                width = avail
                height = min(h_p, win_frac * tile / width) if width > 0 else 0.0
                if width <= 0 or width * height < win_frac * tile - 1e-9:
                    self.warnings.append(
                        f"{label}: window coverage {windows[1]}% does not fit "
                        "beside the door; excess reassigned to main")
            ts0 = region_lo + (avail - width) / 2.0
            tz0 = (h_p - height) / 2.0
            rect[4:8] = (ts0, ts0 + width, tz0, tz0 + height)
        else:
            rect[4:8] = (1.0, 0.0, 1.0, 0.0)  # empty

        if frame_frac > 0.0:
            if win_frac <= 0.0:
                self.warnings.append(
                    f"{label}: frame coverage {frames[1]}% without a window; "
                    "reassigned to main")
                rect[8:12] = (1.0, 0.0, 1.0, 0.0)
            else:
                ts0, ts1, tz0, tz1 = rect[4:8]
                t = _frame_thickness(ts1 - ts0, tz1 - tz0, frame_frac * tile)
                t_max = min(ts0 - region_lo, region_hi - ts1, tz0, h_p - tz1)
                if t > t_max + 1e-12:
                    self.warnings.append(
                        f"{label}: frame coverage {frames[1]}% exceeds the band "
                        "that fits; excess reassigned to main")
                    t = max(t_max, 0.0)
                rect[8:12] = (ts0 - t, ts1 + t, tz0 - t, tz1 + t)
        else:
            rect[8:12] = (1.0, 0.0, 1.0, 0.0)

        if shutter_frac > 0.0:
            if win_frac <= 0.0:
                self.warnings.append(
                    f"{label}: shutter coverage {extra[1]}% without a window; "
                    "reassigned to main")
            else:
                f_ts0, f_ts1 = (rect[8], rect[9]) if frame_frac > 0 else (rect[4], rect[5])
                tz0, tz1 = rect[6], rect[7]
                h_win = tz1 - tz0
                each = shutter_frac * tile / (2.0 * h_win)
                left0 = f_ts0 - each
                right1 = f_ts1 + each
                if left0 < region_lo - 1e-12 or right1 > region_hi + 1e-12:
                    self.warnings.append(
                        f"{label}: shutter coverage {extra[1]}% does not fit "
                        "beside the frame; excess reassigned to main")
                    left0 = max(left0, region_lo)
                    right1 = min(right1, region_hi)
                rect[12:16] = (left0, f_ts0, f_ts1, right1)
                rect[16:18] = (tz0, tz1)

        self.rects[level] = rect
        self.materials[level] = (main[0], windows[0], frames[0], extra[0])

    def component_at(self, ts: float, tz: float, ground_floor: bool):
        """(component, material) at tile-local coordinates."""
        level = 0 if ground_floor else 1
        r = self.rects[level]
        m = self.materials[level]
        if ground_floor and r[0] <= ts <= r[1] and r[2] <= tz <= r[3]:
            return DOOR, int(m[3])
        in_window = r[4] <= ts <= r[5] and r[6] <= tz <= r[7]
        if in_window:
            return WINDOW, int(m[1])
        if r[8] <= ts <= r[9] and r[10] <= tz <= r[11]:
            return FRAME, int(m[2])
        if not ground_floor and r[16] <= tz <= r[17] and \
                (r[12] <= ts <= r[13] or r[14] <= ts <= r[15]):
            return SHUTTER, int(m[3])
        return MAIN, int(m[0])


def sample_component(u: float, h: float, composition: FacadeComposition,
                     pattern: FacadePattern, building_height: float,
                     perimeter: float) -> FacadePoint:
    """Deterministically classify a facade-plane position.

    u is the perimeter fraction in [0, 1), h the height fraction in [0, 1].
    """
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u {u} out of [0, 1)")
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"h {h} out of [0, 1]")
    layout = FacadeLayout(composition, pattern)
    s = u * perimeter
    z = h * building_height
    floor = int(z / pattern.pattern_height)
    if z >= building_height and floor > 0:  # top edge belongs to the last floor
        floor = int((building_height - 1e-12) / pattern.pattern_height)
    ts = s % pattern.pattern_width
    tz = z - floor * pattern.pattern_height
    component, material = layout.component_at(ts, tz, ground_floor=floor == 0)
    return FacadePoint(u=u, h=h, component=component, material=material)


class OffFacadeError(ValueError):
    """Raised when a 3D point lies outside a building's facade plane."""


def facade_uv(mapset, x: float, y: float, z: float,
              tolerance: float = 1e-6) -> tuple[float, float]:
    """(u, h) of a 3D point on a facade, via the hosting cell's segment.

    The point must lie in a cell crossed by a facade segment; u combines the
    cell's stored perimeter fraction with the in-cell arc-length offset of
    the point projected onto the segment, wrapped to [0, 1).
    """
    row, col = mapset.grid.cell_of(x, y)
    if not (0 <= row < mapset.grid.height and 0 <= col < mapset.grid.width):
        raise OffFacadeError(f"({x}, {y}) outside the grid")
    s = int(mapset.segment_index[row, col])
    if s < 0:
        raise OffFacadeError(f"cell ({row}, {col}) has no facade segment")
    segs = mapset.segments
    b = int(segs.building[s])
    height = mapset.building_heights[b]
    if z < -tolerance or z > height + tolerance:
        raise OffFacadeError(f"z={z} outside facade extent [0, {height}]")
    ex = segs.x1[s] - segs.x0[s]
    ey = segs.y1[s] - segs.y0[s]
    ll = ex * ex + ey * ey
    t = ((x - segs.x0[s]) * ex + (y - segs.y0[s]) * ey) / ll
    t = min(max(t, 0.0), 1.0)
    perimeter = segs.perimeter[b]
    u = (segs.cum0[s] + t * segs.length[s]) / perimeter
    u = u % 1.0
    h = min(max(z / height, 0.0), 1.0)
    return u, h
