"""Core, material and wire-gauge catalog.

Records are loaded from a plain-text ``section.key = value`` file and
validated on load; the catalog is immutable afterwards and safe to share
across workers.  Units follow the mixed cm-based convention of
Erickson & Maksimovic, "Fundamentals of Power Electronics", ch. 15:
areas in cm^2, lengths in cm, flux density in tesla, wire resistivity
in ohm*cm.
"""

from dataclasses import dataclass, fields
from pathlib import Path

from .kvfile import KvError, as_float, as_int, as_str, dump_kv, load_kv, parse_kv_text

DEFAULT_CATALOG_PATH = Path(__file__).parent / "data" / "cores.cat"


class CatalogError(ValueError):
    """Catalog file cannot be parsed or a record violates an invariant."""


@dataclass(frozen=True)
class MaterialRecord:
    """Ferrite material constants.

    Kfe is the core-loss coefficient in W/(cm^3 * T^beta) at the design
    switching frequency; beta the loss exponent; Bsat the saturation
    flux density used as the design limit; mu_r_initial the initial
    relative permeability of the anhysteretic magnetization curve.
    """

    name: str
    Kfe: float
    beta: float
    Bsat: float
    mu_r_initial: float

    def validate(self) -> None:
        if self.Kfe <= 0:
            raise CatalogError(f"material {self.name!r}: Kfe must be positive")
        if self.beta <= 2:
            raise CatalogError(
                f"material {self.name!r}: beta must exceed 2 (ferrite Steinmetz range)"
            )
        if self.Bsat <= 0:
            raise CatalogError(f"material {self.name!r}: Bsat must be positive")
        if self.mu_r_initial <= 1:
            raise CatalogError(f"material {self.name!r}: mu_r_initial must exceed 1")


@dataclass(frozen=True)
class CoreRecord:
    """One EE core size: magnetic constants plus mesh geometry.

    Ac: center-leg cross-section (cm^2); WA: usable winding window area
    (cm^2); MLT: mean length per turn (cm); lm: effective magnetic path
    length (cm); Kgfe: core geometrical constant in the Erickson
    convention.  The window/leg/yoke dimensions (cm) describe the EE
    cross-section for the reluctance mesh; depth is the stack depth
    into the page.
    """

    name: str
    Ac: float
    WA: float
    MLT: float
    lm: float
    Kgfe: float
    window_width: float
    window_height: float
    center_leg_width: float
    outer_leg_width: float
    yoke_height: float
    depth: float
    material: str

    def validate(self) -> None:
        for field in fields(self):
            if field.type in (float, "float") and getattr(self, field.name) <= 0:
                raise CatalogError(
                    f"core {self.name!r}: {field.name} must be strictly positive"
                )
        if self.window_width * self.window_height < self.WA:
            raise CatalogError(
                f"core {self.name!r}: WA exceeds the window box "
                f"({self.window_width} x {self.window_height} cm)"
            )


@dataclass(frozen=True)
class WireGauge:
    """Bare-copper AWG entry: cross-section in cm^2, resistance in ohm/cm at 20 C."""

    awg: int
    area: float
    resistance_per_cm: float


@dataclass(frozen=True)
class Catalog:
    """Immutable bundle of cores, materials and the wire table."""

    cores: dict[str, CoreRecord]
    materials: dict[str, MaterialRecord]
    wires: tuple[WireGauge, ...]
    rho_wire: float  # ohm*cm, catalog-level copper resistivity

    def core(self, name: str) -> CoreRecord:
        try:
            return self.cores[name]
        except KeyError:
            raise CatalogError(f"unknown core {name!r}") from None

    def material_of(self, core: CoreRecord) -> MaterialRecord:
        try:
            return self.materials[core.material]
        except KeyError:
            raise CatalogError(
                f"core {core.name!r} references unknown material {core.material!r}"
            ) from None

    def smallest_wire_at_most(self, area_max: float) -> WireGauge:
        """Largest-area gauge with area <= area_max (smallest AWG number that fits).

        Raises CatalogError when even the finest cataloged wire is too big.
        """
        if area_max <= 0:
            raise CatalogError("area_max must be positive")
        for wire in self.wires:  # sorted by ascending AWG = descending area
            if wire.area <= area_max:
                return wire
        raise CatalogError(
            f"no gauge fits: area_max {area_max:g} cm^2 is below the finest "
            f"cataloged wire (AWG {self.wires[-1].awg}, {self.wires[-1].area:g} cm^2)"
        )

    def largest_wire(self) -> WireGauge:
        return self.wires[0]


_CORE_FIELDS = (
    "Ac", "WA", "MLT", "lm", "Kgfe",
    "window_width", "window_height", "center_leg_width",
    "outer_leg_width", "yoke_height", "depth",
)
_MATERIAL_FIELDS = ("Kfe", "beta", "Bsat", "mu_r_initial")


def _group_records(pairs: dict[str, str], prefix: str) -> dict[str, dict[str, str]]:
    """Split ``prefix.<name>.<field>`` keys into one dict per record name."""
    records: dict[str, dict[str, str]] = {}
    for key, value in pairs.items():
        if not key.startswith(prefix + "."):
            continue
        rest = key[len(prefix) + 1:]
        name, _, field = rest.rpartition(".")
        if not name:
            raise CatalogError(f"key {key!r}: expected {prefix}.<name>.<field>")
        records.setdefault(name, {})[field] = value
    return records


def parse_catalog(text: str, source: str = "<string>") -> Catalog:
    """Parse catalog text.  An empty file yields an empty catalog."""
    try:
        pairs = parse_kv_text(text, source=source)
    except KvError as exc:
        raise CatalogError(str(exc)) from exc

    try:
        rho_wire = as_float(pairs, "catalog.rho_wire") if "catalog.rho_wire" in pairs else 1.724e-6

        materials: dict[str, MaterialRecord] = {}
        for name, rec in _group_records(pairs, "material").items():
            values = {field: as_float(rec, field) for field in _MATERIAL_FIELDS}
            materials[name] = MaterialRecord(name=name, **values)

        cores: dict[str, CoreRecord] = {}
        for name, rec in _group_records(pairs, "core").items():
            values = {field: as_float(rec, field) for field in _CORE_FIELDS}
            cores[name] = CoreRecord(name=name, material=as_str(rec, "material"), **values)

        wires = []
        for name, rec in _group_records(pairs, "wire").items():
            wires.append(
                WireGauge(
                    awg=int(name),
                    area=as_float(rec, "area"),
                    resistance_per_cm=as_float(rec, "resistance_per_cm"),
                )
            )
    except (KvError, ValueError) as exc:
        raise CatalogError(f"{source}: {exc}") from exc

    wires.sort(key=lambda wire: wire.awg)
    for previous, current in zip(wires, wires[1:]):
        if current.area >= previous.area:
            raise CatalogError(
                f"wire table not strictly decreasing in area at AWG {current.awg}"
            )

    for material in materials.values():
        material.validate()
    for core in cores.values():
        core.validate()
        if core.material not in materials:
            raise CatalogError(
                f"core {core.name!r} references unknown material {core.material!r}"
            )

    return Catalog(cores=cores, materials=materials, wires=tuple(wires), rho_wire=rho_wire)


def load_catalog(path=None) -> Catalog:
    """Load a catalog file (the bundled default when path is None)."""
    path = DEFAULT_CATALOG_PATH if path is None else Path(path)
    try:
        pairs_text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CatalogError(f"cannot read catalog {path}: {exc}") from exc
    return parse_catalog(pairs_text, source=str(path))


def serialize_catalog(catalog: Catalog) -> str:
    """Render a catalog back to the file format (field-by-field round trip)."""
    pairs: dict[str, str] = {"catalog.rho_wire": f"{catalog.rho_wire:.12g}"}
    for name in sorted(catalog.materials):
        material = catalog.materials[name]
        for field in _MATERIAL_FIELDS:
            pairs[f"material.{name}.{field}"] = f"{getattr(material, field):.12g}"
    for name in sorted(catalog.cores):
        core = catalog.cores[name]
        for field in _CORE_FIELDS:
            pairs[f"core.{name}.{field}"] = f"{getattr(core, field):.12g}"
        pairs[f"core.{name}.material"] = core.material
    for wire in catalog.wires:
        pairs[f"wire.{wire.awg}.area"] = f"{wire.area:.12g}"
        pairs[f"wire.{wire.awg}.resistance_per_cm"] = f"{wire.resistance_per_cm:.12g}"
    return dump_kv(pairs)
