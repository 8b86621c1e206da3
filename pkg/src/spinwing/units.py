"""Engineering-unit parsing for configuration scalars.

All internal computation is SI. Config scalars may be written either as
bare numbers (interpreted as SI) or as strings with a unit suffix, e.g.
``"20 mm"``, ``"13 mg"``, ``"150 uNm"``. Unicode spellings (µ, Ω, ·, ², °)
are normalized before lookup. Every unit carries a dimension tag so that
a mass key given a length unit is rejected instead of silently scaled.
"""

from __future__ import annotations

import math
import re


class UnitError(ValueError):
    """Unknown unit, malformed quantity, or unit/dimension mismatch."""


_DEG = math.pi / 180.0

# suffix -> (SI factor, dimension); keys are in normalized ASCII form
_UNIT_TABLE: dict[str, tuple[float, str]] = {
    # length
    "m": (1.0, "length"),
    "cm": (1e-2, "length"),
    "mm": (1e-3, "length"),
    "um": (1e-6, "length"),
    "nm": (1e-9, "length"),
    # mass
    "kg": (1.0, "mass"),
    "g": (1e-3, "mass"),
    "mg": (1e-6, "mass"),
    "ug": (1e-9, "mass"),
    # angle
    "rad": (1.0, "angle"),
    "mrad": (1e-3, "angle"),
    "deg": (_DEG, "angle"),
    # time
    "s": (1.0, "time"),
    "ms": (1e-3, "time"),
    "us": (1e-6, "time"),
    "min": (60.0, "time"),
    # frequency
    "Hz": (1.0, "frequency"),
    "kHz": (1e3, "frequency"),
    # voltage
    "V": (1.0, "voltage"),
    "mV": (1e-3, "voltage"),
    "kV": (1e3, "voltage"),
    # resistance
    "ohm": (1.0, "resistance"),
    "Ohm": (1.0, "resistance"),
    "kohm": (1e3, "resistance"),
    "mohm": (1e-3, "resistance"),
    # magnetic field
    "T": (1.0, "field"),
    "mT": (1e-3, "field"),
    "uT": (1e-6, "field"),
    "gauss": (1e-4, "field"),
    # torque / torsional stiffness (per-rad is implicit for stiffness keys)
    "N*m": (1.0, "torque"),
    "Nm": (1.0, "torque"),
    "mN*m": (1e-3, "torque"),
    "mNm": (1e-3, "torque"),
    "uN*m": (1e-6, "torque"),
    "uNm": (1e-6, "torque"),
    "nNm": (1e-9, "torque"),
    "N*m/rad": (1.0, "torque"),
    "Nm/rad": (1.0, "torque"),
    "mNm/rad": (1e-3, "torque"),
    "uNm/rad": (1e-6, "torque"),
    # force
    "N": (1.0, "force"),
    "mN": (1e-3, "force"),
    "uN": (1e-6, "force"),
    # power
    "W": (1.0, "power"),
    "mW": (1e-3, "power"),
    "uW": (1e-6, "power"),
    "kW": (1e3, "power"),
    # density
    "kg/m^3": (1.0, "density"),
    "kg/m3": (1.0, "density"),
    "g/cm^3": (1e3, "density"),
    "g/cc": (1e3, "density"),
    "mg/mm^3": (1e3, "density"),
    # elastic modulus
    "Pa": (1.0, "modulus"),
    "kPa": (1e3, "modulus"),
    "MPa": (1e6, "modulus"),
    "GPa": (1e9, "modulus"),
    # rotational inertia
    "kg*m^2": (1.0, "inertia"),
    "g*cm^2": (1e-7, "inertia"),
    "g*mm^2": (1e-9, "inertia"),
    "mg*mm^2": (1e-12, "inertia"),
    # quadratic damping factor
    "N*m*s^2": (1.0, "damping"),
    "Nms^2": (1.0, "damping"),
    "uN*m*s^2": (1e-6, "damping"),
    # revolution rate
    "rev/s": (1.0, "rate"),
    "rps": (1.0, "rate"),
    "rev/min": (1.0 / 60.0, "rate"),
    "rpm": (1.0 / 60.0, "rate"),
    # dimensionless
    "%": (0.01, "dimensionless"),
}

_NUMBER_RE = re.compile(
    r"\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(.*?)\s*$"
)


def normalize_unit(unit: str) -> str:
    """Map unicode unit spellings to the ASCII forms used in the table."""
    return (
        unit.replace("µ", "u")  # micro sign
        .replace("μ", "u")      # greek mu
        .replace("·", "*")      # middle dot
        .replace("²", "^2")
        .replace("³", "^3")
        .replace("Ω", "ohm")
        .replace("Ω", "ohm")
        .replace("°", "deg")
        .replace(" ", "")
    )


def parse_quantity(value, dimension: str, key: str = "") -> float:
    """Convert a config scalar to SI float, checking the unit's dimension.

    `value` may be an int/float (taken as SI) or a string of the form
    "<number> <unit>". A bare-number string is taken as SI as well.
    """
    where = f" for {key}" if key else ""
    if isinstance(value, bool):
        raise UnitError(f"expected a number{where}, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise UnitError(f"expected a number or quantity string{where}, "
                        f"got {type(value).__name__}")
    m = _NUMBER_RE.fullmatch(value)
    if m is None:
        raise UnitError(f"malformed quantity {value!r}{where}")
    number = float(m.group(1))
    unit = normalize_unit(m.group(2))
    if unit == "":
        return number
    entry = _UNIT_TABLE.get(unit)
    if entry is None:
        raise UnitError(f"unknown unit {m.group(2)!r}{where}")
    factor, unit_dim = entry
    if unit_dim != dimension and unit_dim != "dimensionless":
        raise UnitError(
            f"unit {m.group(2)!r}{where} has dimension '{unit_dim}', "
            f"expected '{dimension}'"
        )
    return number * factor
