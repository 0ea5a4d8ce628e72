"""Material property database and interface heat-transfer coefficients.

Materials carry the thermal constants (heat capacity, conductivity, density)
used by the conductive walk and the optical constants (emissivity, reflectance
kind) used by the radiative and solar transport. At every solid-fluid
interface the transport kernel turns one material into a triple of linearized
transfer coefficients whose normalization doubles as the transfer-mode
sampling distribution.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

STEFAN_BOLTZMANN = 5.670374419e-8  # W/(m^2 K^4)

LAMBERTIAN = "lambertian"
SPECULAR = "specular"

VOID_ID = 0  # reserved: "no material"


class UnknownMaterialError(KeyError):
    """Raised when a material name is not present in the database."""


class DegenerateInterfaceError(ValueError):
    """Raised when all transfer coefficients vanish at an interface."""


@dataclass(frozen=True)
class Material:
    """Thermal and optical properties of one opaque material."""

    id: int
    name: str
    heat_capacity: float  # J/(K kg)
    conductivity: float   # W/(m K)
    density: float        # kg/m^3
    emissivity: float     # fraction of blackbody emission, in [0, 1]
    reflectance_kind: str = LAMBERTIAN

    def __post_init__(self):
        if not 0 <= self.id <= 255:
            raise ValueError(f"material id must be in [0, 255], got {self.id}")
        if not 0.0 <= self.emissivity <= 1.0:
            raise ValueError(f"emissivity must be in [0, 1], got {self.emissivity}")
        for field in ("heat_capacity", "conductivity", "density"):
            if getattr(self, field) <= 0:
                raise ValueError(f"{field} must be > 0, got {getattr(self, field)}")
        if self.reflectance_kind not in (LAMBERTIAN, SPECULAR):
            raise ValueError(f"unknown reflectance kind {self.reflectance_kind!r}")


@dataclass(frozen=True)
class TransferCoefficients:
    """Linearized per-mode heat transfer coefficients at one interface, W/(m^2 K)."""

    h_rad: float
    h_conv: float
    h_cond: float

    @property
    def h_total(self) -> float:
        return self.h_rad + self.h_conv + self.h_cond


def albedo(material: Material) -> float:
    """Shortwave albedo of an opaque material: 1 - emissivity (Kirchhoff)."""
    return 1.0 - material.emissivity


def transfer_coefficients(material: Material, delta: float, t_ref: float,
                          h_conv: float) -> TransferCoefficients:
    """Compute the per-mode coefficients at a solid-fluid interface.

    h_rad is the linearized radiative coefficient 4*eps*sigma*t_ref^3,
    h_cond the conductive coupling k/delta over the walk step delta, and
    h_conv the scenario convective constant, all in W/(m^2 K).
    """
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    if t_ref <= 0:
        raise ValueError(f"t_ref must be > 0, got {t_ref}")
    if h_conv < 0:
        raise ValueError(f"h_conv must be >= 0, got {h_conv}")
    h_rad = 4.0 * material.emissivity * STEFAN_BOLTZMANN * t_ref ** 3
    h_cond = material.conductivity / delta
    return TransferCoefficients(h_rad=h_rad, h_conv=h_conv, h_cond=h_cond)


def mode_probabilities(c: TransferCoefficients) -> tuple[float, float, float]:
    """Sampling probabilities (p_rad, p_conv, p_cond) of the three transfer modes."""
    total = c.h_total
    if total <= 0:
        raise DegenerateInterfaceError("all transfer coefficients are zero")
    return c.h_rad / total, c.h_conv / total, c.h_cond / total


# Default database rows: name, heat capacity, conductivity, density, emissivity.
# Glass and Aluminium reflect specularly; everything else is Lambertian.
_DEFAULT_ROWS = [
    ("Brick",      790.0,  0.90, 1920.0, 0.93, LAMBERTIAN),
    ("Aluminium",  903.0, 237.00, 2702.0, 0.03, SPECULAR),
    ("Concrete",   880.0,  1.40, 2300.0, 0.88, LAMBERTIAN),
    ("Steel",      456.0, 15.60, 7913.0, 0.85, LAMBERTIAN),
    ("Glass",      840.0,  1.00,  500.0, 0.93, SPECULAR),
    ("Wood",      1880.0,  0.12,  450.0, 0.90, LAMBERTIAN),
    ("Terracotta", 1800.0,  0.80,  780.0, 0.60, LAMBERTIAN),
    ("Limestone", 1000.0,  1.70, 2200.0, 0.95, LAMBERTIAN),
    ("Stone",      840.0,  2.68, 2550.0, 0.87, LAMBERTIAN),
    ("Cement",     920.0,  0.43, 1283.0, 0.54, LAMBERTIAN),
    ("Asphalt",   1000.0,  0.50, 1700.0, 0.94, LAMBERTIAN),
    ("Slate",     1000.0,  2.20, 2400.0, 0.97, LAMBERTIAN),
]

CSV_HEADER = ["name", "heat_capacity", "conductivity", "density", "emissivity",
              "reflectance"]


class MaterialDatabase:
    """Immutable, id- and name-addressable set of materials.

    Ids start at 1 in insertion order; id 0 is reserved for "none/void".
    Safe for unsynchronized shared reads once constructed.
    """

    def __init__(self, materials: list[Material]):
        self._by_id: dict[int, Material] = {}
        self._by_name: dict[str, Material] = {}
        for m in materials:
            if m.id in self._by_id:
                raise ValueError(f"duplicate material id {m.id}")
            key = m.name.lower()
            if key in self._by_name:
                raise ValueError(f"duplicate material name {m.name!r}")
            self._by_id[m.id] = m
            self._by_name[key] = m

    @classmethod
    def from_rows(cls, rows) -> "MaterialDatabase":
        """Build a database from (name, c, k, rho, eps[, reflectance]) rows."""
        materials = []
        for i, row in enumerate(rows):
            name, c, k, rho, eps = row[:5]
            kind = row[5] if len(row) > 5 else LAMBERTIAN
            materials.append(Material(
                id=i + 1, name=name, heat_capacity=float(c),
                conductivity=float(k), density=float(rho),
                emissivity=float(eps), reflectance_kind=kind))
        return cls(materials)

    @classmethod
    def default(cls) -> "MaterialDatabase":
        """The built-in urban material database."""
        return cls.from_rows(_DEFAULT_ROWS)

    @classmethod
    def from_csv(cls, source) -> "MaterialDatabase":
        """Load from a UTF-8 CSV with header name,heat_capacity,conductivity,
        density,emissivity,reflectance."""
        if isinstance(source, (str, Path)):
            text = Path(source).read_text(encoding="utf-8")
        else:
            text = source.read()
        reader = csv.DictReader(io.StringIO(text))
        missing = set(CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"material CSV missing columns: {sorted(missing)}")
        rows = [(r["name"], r["heat_capacity"], r["conductivity"], r["density"],
                 r["emissivity"], r["reflectance"].strip().lower())
                for r in reader]
        return cls.from_rows(rows)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_HEADER)
            for m in self:
                writer.writerow([m.name, m.heat_capacity, m.conductivity,
                                 m.density, m.emissivity, m.reflectance_kind])

    def lookup(self, name: str) -> Material:
        """Look a material up by name, case-insensitively."""
        try:
            return self._by_name[name.lower()]
        except KeyError:
            valid = ", ".join(sorted(m.name for m in self))
            raise UnknownMaterialError(
                f"unknown material {name!r}; valid names: {valid}") from None

    def by_id(self, material_id: int) -> Material:
        try:
            return self._by_id[material_id]
        except KeyError:
            raise UnknownMaterialError(f"no material with id {material_id}") from None

    def __contains__(self, name: str) -> bool:
        return name.lower() in self._by_name

    def __iter__(self):
        return iter(sorted(self._by_id.values(), key=lambda m: m.id))

    def __len__(self) -> int:
        return len(self._by_id)

    @property
    def max_id(self) -> int:
        return max(self._by_id) if self._by_id else 0


def default_database() -> MaterialDatabase:
    return MaterialDatabase.default()
