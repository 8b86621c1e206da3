"""Configuration model: types, schema, loading, validation, reference device.

The config file is TOML with one table per subsystem. Scalars are SI
numbers or unit-suffixed strings (see `spinwing.units`); `spinwing schema`
dumps every key with its unit and default. Defaults reproduce the built-in
reference robot: a 133 mg spinning-wing machine with a 250 Hz resonant
coil actuator driving a two-wing flywheel through a one-way ratchet.

Derived quantities (coil inertia from the coil mass and arm radius, coil
spring stiffness from resonance sizing, wing inertia from a uniform-rod
approximation, ratchet spring stiffness from the steel-spring beam model,
aerodynamic damping from the wing model) are filled in at load time when
not given explicitly.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import aero, springs
from .units import UnitError, parse_quantity


class ConfigError(Exception):
    """Config file cannot be parsed or refers to unknown/malformed keys."""


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by validate()."""

    path: str
    message: str
    severity: str = "error"  # "error" blocks loading, "warning" does not

    def __str__(self) -> str:
        return f"[{self.severity}] {self.path}: {self.message}"


class ConfigValidationError(ConfigError):
    """Raised by load_config when any hard invariant is violated."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        lines = "\n".join(f"  {v}" for v in violations)
        super().__init__(f"invalid configuration:\n{lines}")


# --------------------------------------------------------------------------
# domain types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class WingGeometry:
    R: float              # wing length, m
    aspect_ratio: float
    alpha: float          # angle of attack, rad
    p_hat: float          # normalized center-of-pressure radius
    mass_per_wing: float  # kg
    n_wings: int = 2


@dataclass(frozen=True)
class CoilSpec:
    n_turns: int
    l_coil: float      # mean turn circumference, m
    resistance: float  # ohm
    mass: float        # kg
    arm_radius: float  # m, radius of the arc the coil rides on
    y_max: float       # m, design stroke half-amplitude


@dataclass(frozen=True)
class DriveSignal:
    V_max: float   # square-wave amplitude, V
    f_coil: float  # coil oscillation frequency, Hz (supply runs at 2x)
    phase: float = 0.0


@dataclass(frozen=True)
class FieldConfig:
    """Effective magnetic field B(y) seen by the coil.

    `parametric` is two opposed gaussian lobes at +/-y_p (odd in y);
    `tabulated` reads a two-column CSV (y in mm, B in T). Exactly one of
    B_peak (or scale, for tabulated) and calibrate_P_mech must be given;
    the latter sizes the field so the prescribed-kinematics cycle delivers
    that average mechanical power.
    """

    kind: str = "parametric"
    B_peak: float | None = None     # T (parametric only)
    y_p: float = 0.8e-3             # m, lobe center
    sigma: float = 0.6e-3           # m, lobe width
    table_path: str | None = None   # CSV for kind="tabulated"
    scale: float | None = None      # multiplier on tabulated B values
    calibrate_P_mech: float | None = None  # W


@dataclass(frozen=True)
class SpringSpec:
    Y: float        # Young's modulus, Pa
    eps_max: float  # fatigue strain limit
    density: float  # kg/m^3
    l: float        # beam length, m
    w: float        # beam width, m
    t: float        # beam thickness, m
    n_chains: int   # parallel chains
    n_series: int   # beams per chain
    n_grounded: int = 0  # beams rigidified by gluing


@dataclass(frozen=True)
class LossModel:
    """Flywheel drains besides the wing drag torque.

    Exactly one of tau_losses (constant friction torque, applied while the
    flywheel turns forward) and target_loss_power (torque sized to drain
    this power at system.f_wing_target) is given. The quadratic damping
    factor b defaults to the wing-drag value.
    """

    tau_losses: float | None = None        # N*m
    target_loss_power: float | None = None  # W
    b: float | None = None                 # N*m*s^2


@dataclass(frozen=True)
class IntegratorSettings:
    dt: float = 1e-5          # s, base step (>= 400 steps per coil cycle)
    eps_event: float = 1e-9   # ratchet guard tolerance (rad or rad/s)
    output_dt: float = 5e-5   # s, trace sample cadence
    seed_angle: float = 1e-3  # rad, symmetry-breaking initial coil angle
    quasi_samples: int = 4096  # samples per prescribed-kinematics cycle


@dataclass(frozen=True)
class RobotConfig:
    wing: WingGeometry
    coil: CoilSpec
    drive: DriveSignal
    field: FieldConfig
    ti_spring: SpringSpec | None
    steel_spring: SpringSpec | None
    losses: LossModel
    k_coil: float | None = None   # N*m/rad
    k_con: float | None = None    # N*m/rad
    J_coil: float | None = None   # kg*m^2
    J_wing: float | None = None   # kg*m^2
    J_shaft: float = 6.86e-12     # kg*m^2, ratchet inner shaft
    rho_air: float = 1.22         # kg/m^3
    f_wing_target: float = 47.0   # rev/s, design operating point
    stiffness_tol: float = 0.10   # allowed given-vs-model stiffness mismatch
    integrator: IntegratorSettings = IntegratorSettings()
    mass_parts: tuple[tuple[str, float], ...] = ()


def tau_losses_value(cfg: RobotConfig) -> float:
    """Friction torque in N*m, sized from the power target when needed."""
    if cfg.losses.tau_losses is not None:
        return cfg.losses.tau_losses
    if cfg.losses.target_loss_power is not None:
        return cfg.losses.target_loss_power / (2.0 * math.pi * cfg.f_wing_target)
    raise ConfigError("losses: neither tau_losses nor target_loss_power given")


# --------------------------------------------------------------------------
# schema
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SchemaKey:
    path: str
    dimension: str  # units.py dimension, or "count"/"string"
    unit: str       # display unit for docs
    default: object
    doc: str


_REFERENCE_MASS_PARTS = (
    ("coil", 13e-6),
    ("dead coil", 13e-6),
    ("magnet", 24e-6),
    ("titanium torsion spring", 8e-6),
    ("ratchet shaft", 7e-6),
    ("ratchet ring", 1e-6),
    ("steel torsion spring", 7e-6),
    ("wing assembly", 47e-6),
    ("support base", 13e-6),
)

SCHEMA: tuple[SchemaKey, ...] = (
    SchemaKey("wing.R", "length", "m", 0.020, "wing length"),
    SchemaKey("wing.aspect_ratio", "dimensionless", "", 4.0, "wing aspect ratio"),
    SchemaKey("wing.alpha", "angle", "rad", math.radians(30.0), "angle of attack"),
    SchemaKey("wing.p_hat", "dimensionless", "", 0.46,
              "normalized center-of-pressure radius"),
    SchemaKey("wing.mass_per_wing", "mass", "kg", 20e-6, "mass of one wing blade"),
    SchemaKey("wing.n_wings", "count", "", 2, "number of wings (model assumes 2)"),
    SchemaKey("coil.n_turns", "count", "", 384, "number of coil turns"),
    SchemaKey("coil.l_coil", "length", "m", 2.0 * math.pi * 2.2e-3,
              "mean circumference of one turn"),
    SchemaKey("coil.resistance", "resistance", "ohm", 108.0, "coil resistance"),
    SchemaKey("coil.mass", "mass", "kg", 13e-6, "mass of the live coil"),
    SchemaKey("coil.arm_radius", "length", "m", 4e-3,
              "radius of the arc the coil rides on"),
    SchemaKey("coil.y_max", "length", "m", 1.8e-3, "design stroke half-amplitude"),
    SchemaKey("drive.V_max", "voltage", "V", 2.75, "square-wave amplitude"),
    SchemaKey("drive.f_coil", "frequency", "Hz", 250.0,
              "coil oscillation frequency (supply frequency is twice this)"),
    SchemaKey("drive.phase", "angle", "rad", 0.0, "square-wave phase offset"),
    SchemaKey("field.kind", "string", "", "parametric",
              "'parametric' or 'tabulated'"),
    SchemaKey("field.B_peak", "field", "T", None,
              "peak effective field (exclusive with field.calibrate_P_mech)"),
    SchemaKey("field.y_p", "length", "m", 0.8e-3,
              "lobe center of the parametric profile"),
    SchemaKey("field.sigma", "length", "m", 0.6e-3,
              "lobe width of the parametric profile"),
    SchemaKey("field.table_path", "string", "", None,
              "two-column CSV (y in mm, B in T) for kind='tabulated'"),
    SchemaKey("field.scale", "dimensionless", "", None,
              "multiplier on tabulated B values "
              "(exclusive with field.calibrate_P_mech)"),
    SchemaKey("field.calibrate_P_mech", "power", "W", 8.8e-3,
              "size the field so the quasi-static cycle delivers this "
              "average mechanical power"),
    SchemaKey("ti_spring.Y", "modulus", "Pa", 114e9, "Young's modulus"),
    SchemaKey("ti_spring.eps_max", "dimensionless", "", 0.0043,
              "fatigue strain limit"),
    SchemaKey("ti_spring.density", "density", "kg/m^3", 4500.0, "material density"),
    SchemaKey("ti_spring.l", "length", "m", 1.83e-3, "beam length"),
    SchemaKey("ti_spring.w", "length", "m", 0.4e-3, "beam width"),
    SchemaKey("ti_spring.t", "length", "m", 100e-6, "beam thickness"),
    SchemaKey("ti_spring.n_chains", "count", "", 2, "parallel chains"),
    SchemaKey("ti_spring.n_series", "count", "", 4, "beams per chain"),
    SchemaKey("ti_spring.n_grounded", "count", "", 0, "beams glued rigid"),
    SchemaKey("steel_spring.Y", "modulus", "Pa", 200e9,
              "Young's modulus (assumed, not measured)"),
    SchemaKey("steel_spring.eps_max", "dimensionless", "", 0.0025,
              "fatigue strain limit (assumed, not measured)"),
    SchemaKey("steel_spring.density", "density", "kg/m^3", 7850.0,
              "material density"),
    SchemaKey("steel_spring.l", "length", "m", 2.13e-3, "beam length"),
    SchemaKey("steel_spring.w", "length", "m", 0.29e-3, "beam width"),
    SchemaKey("steel_spring.t", "length", "m", 50.8e-6, "beam thickness"),
    SchemaKey("steel_spring.n_chains", "count", "", 1, "parallel chains"),
    SchemaKey("steel_spring.n_series", "count", "", 4, "beams per chain"),
    SchemaKey("steel_spring.n_grounded", "count", "", 2, "beams glued rigid"),
    SchemaKey("losses.tau_losses", "torque", "N*m", None,
              "constant flywheel friction torque "
              "(exclusive with losses.target_loss_power)"),
    SchemaKey("losses.target_loss_power", "power", "W", 6e-3,
              "friction torque sized to drain this power at "
              "system.f_wing_target"),
    SchemaKey("losses.b", "damping", "N*m*s^2", None,
              "quadratic damping factor; wing-drag value when omitted"),
    SchemaKey("system.k_coil", "torque", "N*m/rad", None,
              "coil spring stiffness; resonance-sized when omitted"),
    SchemaKey("system.k_con", "torque", "N*m/rad", 150e-6,
              "ratchet (connecting) spring stiffness"),
    SchemaKey("system.J_coil", "inertia", "kg*m^2", None,
              "coil+dead-coil inertia; 2*coil.mass*arm_radius^2 when omitted"),
    SchemaKey("system.J_wing", "inertia", "kg*m^2", None,
              "wing assembly inertia; uniform-rod value when omitted"),
    SchemaKey("system.J_shaft", "inertia", "kg*m^2", 6.86e-12,
              "ratchet inner-shaft inertia (quasi-static spring check)"),
    SchemaKey("system.rho_air", "density", "kg/m^3", 1.22, "air density"),
    SchemaKey("system.f_wing_target", "rate", "rev/s", 47.0,
              "design spin rate used for budgets and friction sizing"),
    SchemaKey("system.stiffness_tol", "dimensionless", "", 0.10,
              "allowed mismatch between given stiffness and spring model"),
    SchemaKey("integrator.dt", "time", "s", 1e-5, "base integration step"),
    SchemaKey("integrator.eps_event", "dimensionless", "", 1e-9,
              "ratchet guard tolerance (rad or rad/s)"),
    SchemaKey("integrator.output_dt", "time", "s", 5e-5,
              "trace sample cadence"),
    SchemaKey("integrator.seed_angle", "angle", "rad", 1e-3,
              "symmetry-breaking initial coil angle"),
    SchemaKey("integrator.quasi_samples", "count", "", 4096,
              "samples per prescribed-kinematics cycle"),
)

# key pairs where giving one side suppresses the other side's default
_EXCLUSIVE_PAIRS = (
    ("losses.tau_losses", "losses.target_loss_power"),
    ("field.B_peak", "field.calibrate_P_mech"),
    ("field.scale", "field.calibrate_P_mech"),
)

_SCHEMA_BY_PATH = {key.path: key for key in SCHEMA}


def schema_entries() -> list[dict]:
    """Machine-readable schema: every key with unit, default and doc."""
    entries = [
        {
            "key": k.path,
            "dimension": k.dimension,
            "unit": k.unit,
            "default": k.default,
            "doc": k.doc,
        }
        for k in SCHEMA
    ]
    entries.append({
        "key": "mass_parts",
        "dimension": "mass",
        "unit": "kg",
        "default": [[name, m] for name, m in _REFERENCE_MASS_PARTS],
        "doc": "list of [name, mass] component pairs",
    })
    return entries


# --------------------------------------------------------------------------
# loading
# --------------------------------------------------------------------------

def _flatten(data: dict, prefix: str = "") -> dict:
    flat: dict = {}
    for name, value in data.items():
        path = f"{prefix}{name}"
        if isinstance(value, dict):
            flat.update(_flatten(value, prefix=f"{path}."))
        else:
            flat[path] = value
    return flat


def _convert(key: SchemaKey, raw):
    if raw is None:
        return None
    if key.dimension == "string":
        if not isinstance(raw, str):
            raise ConfigError(f"{key.path}: expected a string, got {raw!r}")
        return raw
    if key.dimension == "count":
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"{key.path}: expected an integer, got {raw!r}")
        return int(raw)
    try:
        return parse_quantity(raw, key.dimension, key=key.path)
    except UnitError as err:
        raise ConfigError(str(err)) from err


def _parse_mass_parts(raw) -> tuple[tuple[str, float], ...]:
    if not isinstance(raw, list):
        raise ConfigError("mass_parts: expected a list of [name, mass] pairs")
    parts = []
    for i, item in enumerate(raw):
        if not isinstance(item, list) or len(item) != 2 or not isinstance(item[0], str):
            raise ConfigError(
                f"mass_parts[{i}]: expected a [name, mass] pair, got {item!r}"
            )
        try:
            mass = parse_quantity(item[1], "mass", key=f"mass_parts[{i}]")
        except UnitError as err:
            raise ConfigError(str(err)) from err
        parts.append((item[0], mass))
    return tuple(parts)


def config_from_dict(data: dict, source: str = "<dict>",
                     resolve: bool = True) -> RobotConfig:
    """Build a RobotConfig from a parsed key-value tree."""
    flat = _flatten(data)
    raw_mass_parts = flat.pop("mass_parts", None)
    unknown = sorted(set(flat) - set(_SCHEMA_BY_PATH))
    if unknown:
        raise ConfigError(f"{source}: unknown config key(s): {', '.join(unknown)}")

    values: dict[str, object] = {}
    for key in SCHEMA:
        if key.path in flat:
            values[key.path] = _convert(key, flat[key.path])
        else:
            values[key.path] = key.default
    # giving one member of an exclusive pair suppresses the other's default
    for a, b in _EXCLUSIVE_PAIRS:
        if a in flat and b not in flat:
            values[b] = None
        elif b in flat and a not in flat:
            values[a] = None

    def sec(prefix: str) -> dict:
        plen = len(prefix) + 1
        return {p[plen:]: v for p, v in values.items()
                if p.startswith(prefix + ".")}

    mass_parts = (_parse_mass_parts(raw_mass_parts)
                  if raw_mass_parts is not None else _REFERENCE_MASS_PARTS)

    system = sec("system")
    cfg = RobotConfig(
        wing=WingGeometry(**sec("wing")),
        coil=CoilSpec(**sec("coil")),
        drive=DriveSignal(**sec("drive")),
        field=FieldConfig(**sec("field")),
        ti_spring=SpringSpec(**sec("ti_spring")),
        steel_spring=SpringSpec(**sec("steel_spring")),
        losses=LossModel(**sec("losses")),
        k_coil=system["k_coil"],
        k_con=system["k_con"],
        J_coil=system["J_coil"],
        J_wing=system["J_wing"],
        J_shaft=system["J_shaft"],
        rho_air=system["rho_air"],
        f_wing_target=system["f_wing_target"],
        stiffness_tol=system["stiffness_tol"],
        integrator=IntegratorSettings(**sec("integrator")),
        mass_parts=mass_parts,
    )
    if resolve:
        cfg = resolve_config(cfg)
        violations = [v for v in validate(cfg) if v.severity == "error"]
        if violations:
            raise ConfigValidationError(violations)
    return cfg


def load_config(path, resolve: bool = True) -> RobotConfig:
    """Load, resolve and validate a config file; raises on any hard error."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: could not parse config: {err}") from err
    return config_from_dict(data, source=str(path), resolve=resolve)


def resolve_config(cfg: RobotConfig) -> RobotConfig:
    """Fill in derived quantities that were not given explicitly."""
    J_coil = cfg.J_coil
    if J_coil is None and cfg.coil.mass > 0 and cfg.coil.arm_radius > 0:
        # live coil plus the balancing dead coil at the same radius
        J_coil = 2.0 * cfg.coil.mass * cfg.coil.arm_radius ** 2
    k_coil = cfg.k_coil
    if k_coil is None and J_coil is not None and cfg.drive.f_coil > 0:
        k_coil = springs.resonance_stiffness(J_coil, cfg.drive.f_coil)
    J_wing = cfg.J_wing
    if J_wing is None:
        rod_mass = cfg.wing.n_wings * cfg.wing.mass_per_wing
        J_wing = rod_mass * (2.0 * cfg.wing.R) ** 2 / 12.0
    k_con = cfg.k_con
    if k_con is None and cfg.steel_spring is not None:
        k_con = springs.spring_stiffness(cfg.steel_spring)
    losses = cfg.losses
    if losses.b is None:
        losses = dataclasses.replace(
            losses, b=aero.damping_factor(cfg.wing, cfg.rho_air))
    return dataclasses.replace(
        cfg, J_coil=J_coil, k_coil=k_coil, J_wing=J_wing, k_con=k_con,
        losses=losses)


def reference_config(resolve: bool = True) -> RobotConfig:
    """The built-in reference robot (all schema defaults)."""
    return config_from_dict({}, source="<reference>", resolve=resolve)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

def _positive(out: list[Violation], path: str, value, name: str = "") -> None:
    if value is None or value <= 0.0:
        out.append(Violation(path, f"{name or 'value'} must be positive, "
                                   f"got {value!r}"))


def _spring_violations(out: list[Violation], prefix: str,
                       spec: SpringSpec) -> None:
    _positive(out, f"{prefix}.Y", spec.Y, "Young's modulus")
    if not 0.0 < spec.eps_max < 1.0:
        out.append(Violation(f"{prefix}.eps_max",
                             f"strain limit must be in (0, 1), got {spec.eps_max!r}"))
    _positive(out, f"{prefix}.density", spec.density, "density")
    _positive(out, f"{prefix}.l", spec.l, "beam length")
    _positive(out, f"{prefix}.w", spec.w, "beam width")
    _positive(out, f"{prefix}.t", spec.t, "beam thickness")
    if spec.w <= spec.t:
        out.append(Violation(f"{prefix}.w",
                             "beam width must exceed thickness "
                             "(thin-beam bending regime)"))
    if spec.n_chains < 1:
        out.append(Violation(f"{prefix}.n_chains", "need at least one chain"))
    if spec.n_series < 1:
        out.append(Violation(f"{prefix}.n_series", "need at least one beam"))
    if not 0 <= spec.n_grounded < spec.n_series:
        out.append(Violation(
            f"{prefix}.n_grounded",
            f"must satisfy 0 <= n_grounded < n_series, got "
            f"{spec.n_grounded} of {spec.n_series}"))


def validate(cfg: RobotConfig) -> list[Violation]:
    """Check every invariant; returns violations (possibly with warnings)."""
    out: list[Violation] = []
    w = cfg.wing
    _positive(out, "wing.R", w.R, "wing length")
    _positive(out, "wing.aspect_ratio", w.aspect_ratio, "aspect ratio")
    if not 0.0 < w.alpha < math.pi / 2.0:
        out.append(Violation("wing.alpha",
                             f"angle of attack must be in (0, pi/2) rad, "
                             f"got {w.alpha!r}"))
    if not 0.0 < w.p_hat <= 1.0:
        out.append(Violation("wing.p_hat",
                             f"must be in (0, 1], got {w.p_hat!r}"))
    _positive(out, "wing.mass_per_wing", w.mass_per_wing, "wing mass")
    if w.n_wings != 2:
        out.append(Violation("wing.n_wings",
                             "the force model assumes exactly 2 wings"))

    c = cfg.coil
    if c.n_turns < 1:
        out.append(Violation("coil.n_turns", "need at least one turn"))
    _positive(out, "coil.l_coil", c.l_coil, "turn circumference")
    _positive(out, "coil.resistance", c.resistance, "resistance")
    _positive(out, "coil.mass", c.mass, "coil mass")
    _positive(out, "coil.arm_radius", c.arm_radius, "arm radius")
    _positive(out, "coil.y_max", c.y_max, "stroke half-amplitude")
    if c.arm_radius > 0 and c.y_max >= c.arm_radius * math.pi / 6.0:
        out.append(Violation(
            "coil.y_max",
            f"stroke of {math.degrees(c.y_max / c.arm_radius):.1f} deg reaches "
            "the 30 deg geometric collision limit", severity="warning"))

    d = cfg.drive
    if d.V_max < 0.0:
        out.append(Violation("drive.V_max", "amplitude must be non-negative"))
    _positive(out, "drive.f_coil", d.f_coil, "drive frequency")

    f = cfg.field
    if f.kind not in ("parametric", "tabulated"):
        out.append(Violation("field.kind",
                             f"must be 'parametric' or 'tabulated', got {f.kind!r}"))
    amplitude_given = f.B_peak is not None or f.scale is not None
    if amplitude_given and f.calibrate_P_mech is not None:
        out.append(Violation(
            "field.calibrate_P_mech",
            "give either a field amplitude (B_peak/scale) or a calibration "
            "target, not both"))
    if not amplitude_given and f.calibrate_P_mech is None:
        out.append(Violation("field.B_peak",
                             "field amplitude unknown: give B_peak/scale or "
                             "calibrate_P_mech"))
    if f.kind == "parametric":
        if f.B_peak is not None and f.B_peak < 0.0:
            out.append(Violation("field.B_peak", "must be non-negative"))
        _positive(out, "field.y_p", f.y_p, "lobe center")
        _positive(out, "field.sigma", f.sigma, "lobe width")
    if f.kind == "tabulated" and not f.table_path:
        out.append(Violation("field.table_path",
                             "required when field.kind = 'tabulated'"))
    if f.calibrate_P_mech is not None and f.calibrate_P_mech < 0.0:
        out.append(Violation("field.calibrate_P_mech", "must be non-negative"))

    if cfg.ti_spring is not None:
        _spring_violations(out, "ti_spring", cfg.ti_spring)
    if cfg.steel_spring is not None:
        _spring_violations(out, "steel_spring", cfg.steel_spring)

    lo = cfg.losses
    given = [name for name, v in (("tau_losses", lo.tau_losses),
                                  ("target_loss_power", lo.target_loss_power))
             if v is not None]
    if len(given) != 1:
        out.append(Violation(
            "losses", "exactly one of tau_losses and target_loss_power "
                      f"must be given (got {given or 'neither'})"))
    if lo.tau_losses is not None and lo.tau_losses < 0.0:
        out.append(Violation("losses.tau_losses", "must be non-negative"))
    if lo.target_loss_power is not None and lo.target_loss_power < 0.0:
        out.append(Violation("losses.target_loss_power", "must be non-negative"))
    if lo.b is None or lo.b < 0.0:
        out.append(Violation("losses.b", "must be resolved and non-negative"))

    _positive(out, "system.k_coil", cfg.k_coil, "coil spring stiffness")
    _positive(out, "system.k_con", cfg.k_con, "ratchet spring stiffness")
    _positive(out, "system.J_coil", cfg.J_coil, "coil inertia")
    _positive(out, "system.J_wing", cfg.J_wing, "wing inertia")
    _positive(out, "system.J_shaft", cfg.J_shaft, "shaft inertia")
    _positive(out, "system.rho_air", cfg.rho_air, "air density")
    _positive(out, "system.f_wing_target", cfg.f_wing_target, "target spin rate")
    if not 0.0 < cfg.stiffness_tol < 1.0:
        out.append(Violation("system.stiffness_tol", "must be in (0, 1)"))

    # given stiffness must agree with the beam model when both are present
    for name, k_given, spec in (("k_coil", cfg.k_coil, cfg.ti_spring),
                                ("k_con", cfg.k_con, cfg.steel_spring)):
        if k_given is None or spec is None or k_given <= 0:
            continue
        try:
            k_model = springs.spring_stiffness(spec)
        except ValueError:
            continue
        mismatch = abs(k_given - k_model) / k_model
        if mismatch > cfg.stiffness_tol:
            out.append(Violation(
                f"system.{name}",
                f"differs from the spring-model value {k_model:.4g} N*m/rad "
                f"by {100 * mismatch:.1f}%", severity="warning"))

    it = cfg.integrator
    _positive(out, "integrator.dt", it.dt, "step")
    if cfg.drive.f_coil > 0 and it.dt > 1.0 / (400.0 * cfg.drive.f_coil) * (1 + 1e-12):
        out.append(Violation(
            "integrator.dt",
            f"must give at least 400 steps per coil cycle "
            f"(max {1.0 / (400.0 * cfg.drive.f_coil):.3g} s)"))
    _positive(out, "integrator.eps_event", it.eps_event, "event tolerance")
    _positive(out, "integrator.output_dt", it.output_dt, "output cadence")
    if it.output_dt < it.dt:
        out.append(Violation("integrator.output_dt",
                             "output cadence must not be finer than dt"))
    if it.seed_angle < 0.0:
        out.append(Violation("integrator.seed_angle", "must be non-negative"))
    if it.quasi_samples < 4096:
        out.append(Violation("integrator.quasi_samples",
                             "at least 4096 samples per cycle required"))

    for i, (name, mass) in enumerate(cfg.mass_parts):
        if mass <= 0.0:
            out.append(Violation(f"mass_parts[{i}]",
                                 f"mass of {name!r} must be positive"))
    return out


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def _toml_scalar(value) -> str:
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def serialize_config(cfg: RobotConfig) -> str:
    """Render a config as TOML (SI values). Round-trips through load."""
    sections: dict[str, RobotConfig | object] = {
        "wing": cfg.wing, "coil": cfg.coil, "drive": cfg.drive,
        "field": cfg.field, "ti_spring": cfg.ti_spring,
        "steel_spring": cfg.steel_spring, "losses": cfg.losses,
        "system": cfg, "integrator": cfg.integrator,
    }
    system_attrs = {
        "system.k_coil": "k_coil", "system.k_con": "k_con",
        "system.J_coil": "J_coil", "system.J_wing": "J_wing",
        "system.J_shaft": "J_shaft", "system.rho_air": "rho_air",
        "system.f_wing_target": "f_wing_target",
        "system.stiffness_tol": "stiffness_tol",
    }
    lines = ["# spinning-wing robot configuration (SI values)"]
    parts = ", ".join(f'["{name}", {repr(mass)}]'
                      for name, mass in cfg.mass_parts)
    lines.append(f"mass_parts = [{parts}]")
    current_section = None
    for key in SCHEMA:
        section, field_name = key.path.split(".", 1)
        obj = sections[section]
        if obj is None:
            continue
        attr = system_attrs.get(key.path, field_name)
        value = getattr(obj, attr)
        if value is None:
            continue
        if section != current_section:
            lines.append(f"\n[{section}]")
            current_section = section
        comment = f"  # {key.unit}" if key.unit else ""
        lines.append(f"{field_name} = {_toml_scalar(value)}{comment}")
    return "\n".join(lines) + "\n"


def save_config(cfg: RobotConfig, path) -> None:
    Path(path).write_text(serialize_config(cfg), encoding="utf-8")


def config_sha256(cfg: RobotConfig) -> str:
    """Stable hash of the serialized config (used in manifests and caches)."""
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()


# --------------------------------------------------------------------------
# keyed updates (sweeps and tuning)
# --------------------------------------------------------------------------

_SECTION_ATTRS = {
    "wing": "wing", "coil": "coil", "drive": "drive", "field": "field",
    "ti_spring": "ti_spring", "steel_spring": "steel_spring",
    "losses": "losses", "integrator": "integrator",
}


def with_value(cfg: RobotConfig, path: str, raw_value) -> RobotConfig:
    """Return a copy of cfg with one schema key replaced.

    `raw_value` may be a number (SI) or a unit-suffixed string; it is
    converted exactly like a config-file value.
    """
    key = _SCHEMA_BY_PATH.get(path)
    if key is None:
        raise ConfigError(f"unknown config key: {path}")
    value = _convert(key, raw_value)
    section, field_name = path.split(".", 1)
    if section == "system":
        return dataclasses.replace(cfg, **{field_name: value})
    attr = _SECTION_ATTRS[section]
    sub = getattr(cfg, attr)
    if sub is None:
        raise ConfigError(f"cannot set {path}: section {section} is absent")
    return dataclasses.replace(cfg, **{attr: dataclasses.replace(
        sub, **{field_name: value})})
