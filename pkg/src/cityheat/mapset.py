"""The raster map container: named layers, sampling, and the HM25 file format.

A MapSet is immutable once built; simulation code reads it concurrently
without synchronization. The on-disk container is a small inspectable format:
magic "HM25", a version word, a JSON directory (grid spec plus one entry per
payload block), then raw little-endian arrays aligned to 64 bytes. Facade
segment tables ride along as auxiliary blocks because the per-cell rasters
alone cannot reconstruct segment endpoints.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .encoder import FacadeSegments
from .geometry import FacadeComposition, GridSpec, SLOT_NAMES

MAGIC = b"HM25"
VERSION = 1
_ALIGN = 64

SLOT_LAYERS = tuple(f"slot_{name}" for name in SLOT_NAMES)

# The 18 logical layers and their storage dtypes.
LAYER_DTYPES = {
    "building_id": np.uint32,
    "height_m": np.float32,
    "roof_material": np.uint8,
    "ground_material": np.uint8,
    "sdf_m": np.float32,
    "facade_azimuth_rad": np.float32,
    "u_coord": np.float32,
    "perimeter_m": np.float32,
    **{name: np.uint16 for name in SLOT_LAYERS},
    "initial_temperature_K": np.float32,
    "emissivity_override": np.float32,
}

_SEGMENT_FIELDS = [
    ("x0", np.float64), ("y0", np.float64), ("x1", np.float64),
    ("y1", np.float64), ("building", np.int32), ("cum0", np.float64),
    ("length", np.float64), ("normal_x", np.float64), ("normal_y", np.float64),
    ("row", np.int32), ("col", np.int32),
]


class FormatError(ValueError):
    """Raised on malformed, truncated, or mismatched HM25 files."""


class DomainExit(Exception):
    """Signals a sample query outside the grid; not a fault.

    The ray marcher treats leaving the grid as open sky / domain edge.
    """


@dataclass
class MapSet:
    """Grid spec plus the named raster layers and facade segment tables."""

    grid: GridSpec
    layers: dict[str, np.ndarray]
    segments: FacadeSegments
    segment_index: np.ndarray  # int32 raster, -1 where no facade segment
    building_heights: dict[int, float] = field(default_factory=dict)
    compositions: dict[int, FacadeComposition] = field(default_factory=dict)

    @classmethod
    def build(cls, grid: GridSpec, building_id, height_m, roof_material,
              ground_material, sdf_m, facade_azimuth_rad, u_coord, perimeter_m,
              facade_slots, initial_temperature_K, emissivity_override,
              segments: FacadeSegments, segment_index,
              compositions=None, building_heights=None) -> "MapSet":
        layers = {
            "building_id": building_id,
            "height_m": height_m,
            "roof_material": roof_material,
            "ground_material": ground_material,
            "sdf_m": sdf_m,
            "facade_azimuth_rad": facade_azimuth_rad,
            "u_coord": u_coord,
            "perimeter_m": perimeter_m,
            "initial_temperature_K": initial_temperature_K,
            "emissivity_override": emissivity_override,
        }
        for k, name in enumerate(SLOT_LAYERS):
            layers[name] = facade_slots[k]
        if building_heights is None:
            building_heights = {}
            ids = np.asarray(building_id)
            hs = np.asarray(height_m)
            for b in np.unique(ids[ids > 0]):
                building_heights[int(b)] = float(hs[ids == b].max())
        ms = cls(grid=grid,
                 layers={k: np.ascontiguousarray(v, dtype=LAYER_DTYPES[k])
                         for k, v in layers.items()},
                 segments=segments,
                 segment_index=np.ascontiguousarray(segment_index, dtype=np.int32),
                 building_heights=dict(building_heights),
                 compositions=dict(compositions or {}))
        ms.validate()
        return ms

    def validate(self) -> None:
        shape = (self.grid.height, self.grid.width)
        for name, dtype in LAYER_DTYPES.items():
            if name not in self.layers:
                raise FormatError(f"missing layer {name!r}")
            arr = self.layers[name]
            if arr.shape != shape:
                raise FormatError(
                    f"layer {name!r} has shape {arr.shape}, grid is {shape}")
            if arr.dtype != np.dtype(dtype):
                raise FormatError(f"layer {name!r} dtype {arr.dtype} != {dtype}")
        if self.segment_index.shape != shape:
            raise FormatError("segment_index shape disagrees with grid")
        ids = self.layers["building_id"]
        heights = self.layers["height_m"]
        if np.any((ids == 0) & (heights != 0)) or np.any((ids != 0) & (heights == 0)):
            raise FormatError("building_id 0 must pair with height 0 and vice versa")

    def __getattr__(self, name):
        layers = self.__dict__.get("layers", {})
        if name in layers:
            return layers[name]
        raise AttributeError(name)

    def replace_layer(self, name: str, values: np.ndarray) -> "MapSet":
        """New MapSet with one layer replaced; the original stays untouched."""
        if name not in LAYER_DTYPES:
            raise KeyError(name)
        layers = dict(self.layers)
        layers[name] = np.ascontiguousarray(values, dtype=LAYER_DTYPES[name])
        out = MapSet(grid=self.grid, layers=layers, segments=self.segments,
                     segment_index=self.segment_index,
                     building_heights=dict(self.building_heights),
                     compositions=dict(self.compositions))
        out.validate()
        return out

    # -- sampling ---------------------------------------------------------

    def _cell_checked(self, x: float, y: float) -> tuple[int, int]:
        if not self.grid.contains(x, y):
            raise DomainExit(f"({x}, {y}) outside grid extent {self.grid.extent}")
        return self.grid.cell_of(x, y)

    def sample_nearest(self, layer: str, x: float, y: float):
        """Value of the cell whose centroid is nearest to (x, y)."""
        row, col = self._cell_checked(x, y)
        return self.layers[layer][row, col]

    def sample_sdf(self, x: float, y: float) -> float:
        """Bilinear interpolation of the distance layer, edge-clamped."""
        if not self.grid.contains(x, y):
            raise DomainExit(f"({x}, {y}) outside grid extent {self.grid.extent}")
        sdf = self.layers["sdf_m"]
        g = self.grid
        fx = (x - g.origin_x) / g.cell_size - 0.5
        fy = (y - g.origin_y) / g.cell_size - 0.5
        c0 = int(np.floor(fx))
        r0 = int(np.floor(fy))
        tx = fx - c0
        ty = fy - r0
        c0 = min(max(c0, 0), g.width - 1)
        r0 = min(max(r0, 0), g.height - 1)
        c1 = min(c0 + 1, g.width - 1)
        r1 = min(r0 + 1, g.height - 1)
        if fx < 0:
            tx = 0.0
        if fy < 0:
            ty = 0.0
        v00 = float(sdf[r0, c0])
        v01 = float(sdf[r0, c1])
        v10 = float(sdf[r1, c0])
        v11 = float(sdf[r1, c1])
        return (v00 * (1 - tx) * (1 - ty) + v01 * tx * (1 - ty)
                + v10 * (1 - tx) * ty + v11 * tx * ty)

    # -- persistence ------------------------------------------------------

    def save(self, path) -> None:
        blocks = dict(self.layers)
        blocks["aux:segment_index"] = self.segment_index
        segs = self.segments
        for name, dtype in _SEGMENT_FIELDS:
            blocks[f"aux:seg_{name}"] = np.ascontiguousarray(
                getattr(segs, name), dtype=dtype)
        b_ids = sorted(segs.perimeter)
        blocks["aux:b_id"] = np.array(b_ids, dtype=np.int32)
        blocks["aux:b_perimeter"] = np.array(
            [segs.perimeter[b] for b in b_ids], dtype=np.float64)
        blocks["aux:b_first"] = np.array(
            [segs.first_index[b] for b in b_ids], dtype=np.int32)
        blocks["aux:b_count"] = np.array(
            [segs.count[b] for b in b_ids], dtype=np.int32)
        blocks["aux:b_height"] = np.array(
            [self.building_heights.get(b, 0.0) for b in b_ids], dtype=np.float64)
        comp = np.zeros((len(b_ids), 16), dtype=np.int32)
        for i, b in enumerate(b_ids):
            c = self.compositions.get(b)
            if c is not None:
                comp[i] = [v for slot in c.slots() for v in slot]
        blocks["aux:b_composition"] = comp
        write_hm25(path, self.grid, blocks)

    @classmethod
    def load(cls, path) -> "MapSet":
        grid, blocks = read_hm25(path)
        missing = set(LAYER_DTYPES) - set(blocks)
        if missing:
            raise FormatError(f"missing layers: {sorted(missing)}")
        seg_arrays = {}
        for name, dtype in _SEGMENT_FIELDS:
            key = f"aux:seg_{name}"
            if key not in blocks:
                raise FormatError(f"missing segment table {key!r}")
            seg_arrays[name] = blocks[key]
        segs = FacadeSegments(**seg_arrays)
        b_ids = blocks["aux:b_id"]
        building_heights = {}
        compositions = {}
        for i, b in enumerate(b_ids):
            b = int(b)
            segs.perimeter[b] = float(blocks["aux:b_perimeter"][i])
            segs.first_index[b] = int(blocks["aux:b_first"][i])
            segs.count[b] = int(blocks["aux:b_count"][i])
            lo = segs.first_index[b]
            hi = lo + segs.count[b]
            segs.ring[b] = np.column_stack([segs.x0[lo:hi], segs.y0[lo:hi]])
            building_heights[b] = float(blocks["aux:b_height"][i])
            raw = blocks["aux:b_composition"][i]
            slots = {name: (int(raw[2 * k]), int(raw[2 * k + 1]))
                     for k, name in enumerate(SLOT_NAMES)}
            compositions[b] = FacadeComposition(**slots)
        ms = cls(grid=grid,
                 layers={name: blocks[name] for name in LAYER_DTYPES},
                 segments=segs,
                 segment_index=blocks["aux:segment_index"],
                 building_heights=building_heights,
                 compositions=compositions)
        ms.validate()
        return ms

    # -- debug exporters ----------------------------------------------------

    def export_pgm(self, layer: str, path, value_range=None) -> None:
        write_pgm(self.layers[layer], path, value_range)

    def export_csv(self, layer: str, path) -> None:
        np.savetxt(path, self.layers[layer], delimiter=",", fmt="%.9g")


def write_hm25(path, grid: GridSpec, blocks: dict[str, np.ndarray]) -> None:
    """Write a directory of named arrays to an HM25 container."""
    entries = []
    payload_offset = 0
    arrays = {}
    for name, arr in blocks.items():
        arr = np.ascontiguousarray(arr)
        arrays[name] = arr
        entries.append({
            "name": name,
            "dtype": arr.dtype.str,  # little-endian typestrings like '<f4'
            "shape": list(arr.shape),
            "offset": payload_offset,
        })
        payload_offset += -(-arr.nbytes // _ALIGN) * _ALIGN
    header = {
        "grid": {"origin_x": grid.origin_x, "origin_y": grid.origin_y,
                 "cell_size": grid.cell_size, "width": grid.width,
                 "height": grid.height},
        "blocks": entries,
    }
    header_bytes = json.dumps(header).encode("utf-8")
    prefix_len = len(MAGIC) + 2 + 4 + len(header_bytes)
    base = -(-prefix_len // _ALIGN) * _ALIGN
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<H", VERSION))
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        f.write(b"\x00" * (base - prefix_len))
        for entry in entries:
            arr = arrays[entry["name"]]
            f.write(arr.tobytes())
            pad = -(-arr.nbytes // _ALIGN) * _ALIGN - arr.nbytes
            f.write(b"\x00" * pad)


def read_hm25(path) -> tuple[GridSpec, dict[str, np.ndarray]]:
    """Read an HM25 container back into (grid, named arrays)."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < len(MAGIC) + 6:
        raise FormatError("file too short for an HM25 container")
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}; expected {MAGIC.decode()!r}")
    version, = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported HM25 version {version}")
    header_len, = struct.unpack_from("<I", data, 6)
    if 10 + header_len > len(data):
        raise FormatError("truncated HM25 header")
    try:
        header = json.loads(data[10:10 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"corrupt HM25 header: {exc}") from exc
    try:
        g = header["grid"]
        grid = GridSpec(origin_x=g["origin_x"], origin_y=g["origin_y"],
                        cell_size=g["cell_size"], width=g["width"],
                        height=g["height"])
        entries = header["blocks"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"incomplete HM25 header: {exc}") from exc
    base = -(-(10 + header_len) // _ALIGN) * _ALIGN
    blocks = {}
    for entry in entries:
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        nbytes = dtype.itemsize * int(np.prod(shape)) if shape else dtype.itemsize
        start = base + entry["offset"]
        if start + nbytes > len(data):
            raise FormatError(f"truncated payload for block {entry['name']!r}")
        arr = np.frombuffer(data[start:start + nbytes], dtype=dtype)
        blocks[entry["name"]] = arr.reshape(shape).copy()
    return grid, blocks


def write_pgm(layer: np.ndarray, path, value_range=None) -> None:
    """ASCII PGM dump of a layer, scaled into 0..65535 over value_range."""
    arr = np.asarray(layer, dtype=np.float64)
    arr = np.where(np.isnan(arr), 0.0, arr)
    if value_range is None:
        lo, hi = float(arr.min()), float(arr.max())
    else:
        lo, hi = value_range
    span = hi - lo if hi > lo else 1.0
    scaled = np.clip((arr - lo) / span, 0.0, 1.0)
    pixels = np.round(scaled * 65535).astype(np.uint16)
    with open(path, "w", encoding="ascii") as f:
        f.write(f"P2\n{arr.shape[1]} {arr.shape[0]}\n65535\n")
        # row 0 is the southern edge; PGM rows run top-down
        for row in pixels[::-1]:
            f.write(" ".join(str(v) for v in row))
            f.write("\n")
