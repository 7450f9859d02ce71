"""Small unit-conversion helpers.

Internal canonical units are seconds, m3/s, m/s, kg/m3. CSV files and design
rules may declare the common plant units below; conversion happens at these
boundaries only. Each unit carries a dimension tag so callers can reject
rules written in incompatible units.
"""

from .errors import UnknownQuantity

# unit -> (factor to canonical, dimension tag)
_UNITS = {
    "m3/s": (1.0, "flow"),
    "m3/h": (1.0 / 3600.0, "flow"),
    "m3/d": (1.0 / 86400.0, "flow"),
    "m/s": (1.0, "velocity"),
    "m/h": (1.0 / 3600.0, "velocity"),
    "m/d": (1.0 / 86400.0, "velocity"),
    "kg/m3": (1.0, "concentration"),
    "g/m3": (1e-3, "concentration"),
    "g/l": (1.0, "concentration"),
    "mg/l": (1e-3, "concentration"),
    "m": (1.0, "length"),
    "s": (1.0, "time"),
    "h": (3600.0, "time"),
    "d": (86400.0, "time"),
    "-": (1.0, "dimensionless"),
    "": (1.0, "dimensionless"),
    "kg/(m2.s)": (1.0, "mass_flux"),
    "kg/(m2.h)": (1.0 / 3600.0, "mass_flux"),
    "kg/(m2.d)": (1.0 / 86400.0, "mass_flux"),
    "m3/(m.s)": (1.0, "weir_loading"),
    "m3/(m.h)": (1.0 / 3600.0, "weir_loading"),
    "m3/(m.d)": (1.0 / 86400.0, "weir_loading"),
}


def normalize(unit: str) -> str:
    return (unit.strip().lower().replace(" ", "")
            .replace("**", "").replace("^", "").replace("·", "."))


def _lookup(unit: str):
    key = normalize(unit)
    if key not in _UNITS:
        raise UnknownQuantity(f"unsupported unit {unit!r}")
    return _UNITS[key]


def dimension(unit: str) -> str:
    return _lookup(unit)[1]


def to_canonical(value: float, unit: str) -> float:
    """Convert ``value`` declared in ``unit`` to the canonical SI unit."""
    return value * _lookup(unit)[0]


def from_canonical(value: float, unit: str) -> float:
    """Convert a canonical-SI ``value`` to ``unit``."""
    return value / _lookup(unit)[0]
