"""Synthetic city scenes for validation runs, demos, and tests."""

from __future__ import annotations

import numpy as np

from .encoder import encode_city
from .geometry import BuildingFootprint, FacadeComposition, GridSpec
from .materials import MaterialDatabase, _DEFAULT_ROWS, LAMBERTIAN, SPECULAR


def uniform_composition(material_id: int) -> FacadeComposition:
    """Facade made of a single material everywhere."""
    return FacadeComposition(ground_main=(material_id, 100),
                             upper_main=(material_id, 100))


def box_footprint(building_id: int, x0: float, y0: float, size_x: float,
                  size_y: float, height: float, roof_material: int,
                  composition: FacadeComposition) -> BuildingFootprint:
    polygon = np.array([[x0, y0], [x0 + size_x, y0],
                        [x0 + size_x, y0 + size_y], [x0, y0 + size_y]])
    return BuildingFootprint(id=building_id, polygon=polygon, height=height,
                             roof_material=roof_material,
                             composition=composition)


def validation_database() -> MaterialDatabase:
    """Default materials plus the three coupled-validation scene materials."""
    rows = list(_DEFAULT_ROWS) + [
        ("Wall",    2000.0, 1.5, 2500.0, 0.9, LAMBERTIAN),
        ("Glazing", 2000.0, 0.9, 2500.0, 0.9, SPECULAR),
        ("Ground",  2000.0, 1.0, 2500.0, 0.9, LAMBERTIAN),
    ]
    return MaterialDatabase.from_rows(rows)


def validation_block_scene(cell_size: float = 0.5,
                           database: MaterialDatabase | None = None):
    """The eight-building coupled-validation scene on a 105 m x 160 m grid.

    Two columns of four buildings (15 m x 20 m footprint, 13.7 m tall),
    10 m gaps within a column, 35 m between columns. At 0.5 m cells the grid
    is 210x320 pixels. Facades are 94% Wall / 6% Glazing on every level.
    Returns (mapset, footprints, database).
    """
    db = database or validation_database()
    wall = db.lookup("Wall").id
    glazing = db.lookup("Glazing").id
    composition = FacadeComposition(
        ground_main=(wall, 94), ground_windows=(glazing, 6),
        upper_main=(wall, 94), upper_windows=(glazing, 6))
    grid = GridSpec(origin_x=0.0, origin_y=0.0, cell_size=cell_size,
                    width=round(105.0 / cell_size),
                    height=round(160.0 / cell_size))
    size_x, size_y, height = 15.0, 20.0, 13.7
    col_x = (20.0, 20.0 + size_x + 35.0)
    footprints = []
    bid = 1
    for cx in col_x:
        for k in range(4):
            y0 = 25.0 + k * (size_y + 10.0)
            footprints.append(box_footprint(bid, cx, y0, size_x, size_y,
                                            height, wall, composition))
            bid += 1
    mapset, _, _ = encode_city(footprints, grid,
                               ground_material=db.lookup("Ground").id,
                               initial_temperature_k=273.0)
    return mapset, footprints, db


def canyon_scene(cell_size: float = 0.5, facade_material: str = "Concrete",
                 database: MaterialDatabase | None = None,
                 height: float = 18.0, gap: float = 8.0):
    """A dense east-west street canyon block for material what-if studies.

    Six slab buildings (30 m x 12 m, `height` m tall) in two columns with a
    narrow `gap` between rows so the ground sees plenty of facade. Roofs are
    concrete, the ground asphalt, facades a single configurable material.
    Returns (mapset, footprints, database).
    """
    db = database or MaterialDatabase.default()
    mat = db.lookup(facade_material).id
    concrete = db.lookup("Concrete").id
    composition = uniform_composition(mat)
    size_x, size_y = 30.0, 12.0
    margin = 12.0
    width_m = 2 * size_x + 3 * margin
    height_m = 3 * size_y + 2 * gap + 2 * margin
    grid = GridSpec(origin_x=0.0, origin_y=0.0, cell_size=cell_size,
                    width=round(width_m / cell_size),
                    height=round(height_m / cell_size))
    footprints = []
    bid = 1
    for i, x0 in enumerate((margin, 2 * margin + size_x)):
        for k in range(3):
            y0 = margin + k * (size_y + gap)
            footprints.append(box_footprint(bid, x0, y0, size_x, size_y,
                                            height, concrete, composition))
            bid += 1
    mapset, _, _ = encode_city(footprints, grid,
                               ground_material=db.lookup("Asphalt").id,
                               initial_temperature_k=300.0)
    return mapset, footprints, db


def random_scene(seed: int, cell_size: float = 0.5, n_buildings: int = 4,
                 extent: float = 60.0, database: MaterialDatabase | None = None):
    """Random rotated-box scene for geometry oracles.

    Buildings are rectangles with random size, position, and rotation,
    re-drawn until they keep a >= 3-cell mutual clearance so the encoder's
    one-segment-per-cell guarantee holds. Returns (mapset, footprints, db).
    """
    rng = np.random.default_rng(seed)
    db = database or MaterialDatabase.default()
    concrete = db.lookup("Concrete").id
    grid = GridSpec(origin_x=0.0, origin_y=0.0, cell_size=cell_size,
                    width=round(extent / cell_size),
                    height=round(extent / cell_size))
    clearance = 3.0 * cell_size
    placed = []
    footprints = []
    attempts = 0
    while len(footprints) < n_buildings and attempts < 500:
        attempts += 1
        sx = rng.uniform(6.0, 14.0)
        sy = rng.uniform(6.0, 14.0)
        angle = rng.uniform(0.0, np.pi / 2.0)
        radius = 0.5 * np.hypot(sx, sy)
        cx = rng.uniform(radius + clearance, extent - radius - clearance)
        cy = rng.uniform(radius + clearance, extent - radius - clearance)
        if any(np.hypot(cx - px, cy - py) < radius + pr + clearance
               for px, py, pr in placed):
            continue
        c, s = np.cos(angle), np.sin(angle)
        local = np.array([[-sx / 2, -sy / 2], [sx / 2, -sy / 2],
                          [sx / 2, sy / 2], [-sx / 2, sy / 2]])
        polygon = local @ np.array([[c, s], [-s, c]]) + [cx, cy]
        bid = len(footprints) + 1
        footprints.append(BuildingFootprint(
            id=bid, polygon=polygon, height=float(rng.uniform(5.0, 20.0)),
            roof_material=concrete, composition=uniform_composition(concrete)))
        placed.append((cx, cy, radius))
    mapset, _, _ = encode_city(footprints, grid,
                               ground_material=db.lookup("Asphalt").id)
    return mapset, footprints, db


def single_box_scene(cell_size: float = 0.5, box: float = 10.0,
                     height: float = 10.0, extent: float = 60.0,
                     database: MaterialDatabase | None = None):
    """One centered axis-aligned box; the shadow-geometry workhorse."""
    db = database or MaterialDatabase.default()
    concrete = db.lookup("Concrete").id
    grid = GridSpec(origin_x=0.0, origin_y=0.0, cell_size=cell_size,
                    width=round(extent / cell_size),
                    height=round(extent / cell_size))
    x0 = (extent - box) / 2.0
    footprints = [box_footprint(1, x0, x0, box, box, height, concrete,
                                uniform_composition(concrete))]
    mapset, _, _ = encode_city(footprints, grid,
                               ground_material=db.lookup("Asphalt").id)
    return mapset, footprints, db
