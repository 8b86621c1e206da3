"""Magnet-coil Lorentz actuator.

The coil rides a circular arc but is modeled on the linearized path
y = arm_radius * theta_coil. The magnet presents two pole faces, so the
effective field B(y) is odd in y and the square-wave supply runs at twice
the coil oscillation frequency. The circuit is purely resistive:

    V_emf = B(y) * l_coil * n_turns * ydot
    I     = (V_s - V_emf) / R_coil
    F     = B(y) * I * l_coil * n_turns

with P_mech = V_emf*I, P_heat = I^2*R and P_net = V_s*I their sum.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .params import DriveSignal, FieldConfig, RobotConfig


class FieldDomainError(ValueError):
    """Tabulated field queried outside its sampled range."""


class InfeasibleTargetError(ValueError):
    """Requested mechanical power above what the drive can deliver."""

    def __init__(self, message: str, max_achievable: float):
        super().__init__(message)
        self.max_achievable = max_achievable


# --------------------------------------------------------------------------
# field profiles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ParametricField:
    """Two opposed gaussian lobes centered at +/-y_p; odd in y."""

    B_peak: float  # T
    y_p: float     # m
    sigma: float   # m

    def field_at(self, y):
        inv = 1.0 / (2.0 * self.sigma * self.sigma)
        return self.B_peak * (np.exp(-((y - self.y_p) ** 2) * inv)
                              - np.exp(-((y + self.y_p) ** 2) * inv))


@dataclass(frozen=True)
class TabulatedField:
    """Sampled field with linear interpolation; y strictly increasing."""

    y: tuple[float, ...]  # m
    B: tuple[float, ...]  # T

    def field_at(self, y):
        arr = np.asarray(self.y)
        if np.any(np.asarray(y) < arr[0]) or np.any(np.asarray(y) > arr[-1]):
            raise FieldDomainError(
                f"query outside tabulated range [{arr[0]:.6g}, {arr[-1]:.6g}] m"
            )
        out = np.interp(y, arr, np.asarray(self.B))
        return float(out) if np.isscalar(y) else out

    def covers(self, y_max: float) -> bool:
        return self.y[0] <= -y_max and self.y[-1] >= y_max


FieldProfile = ParametricField | TabulatedField


def field_at(profile: FieldProfile, y):
    """Effective field B(y) in tesla; accepts scalars or arrays."""
    return profile.field_at(y)


def scale_profile(profile: FieldProfile, factor: float) -> FieldProfile:
    if isinstance(profile, ParametricField):
        return dataclasses.replace(profile, B_peak=profile.B_peak * factor)
    return TabulatedField(y=profile.y,
                          B=tuple(b * factor for b in profile.B))


def load_field_table(path) -> TabulatedField:
    """Read a two-column CSV table: y in mm, B in T, strictly increasing y."""
    ys: list[float] = []
    bs: list[float] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cols = line.split(",")
        if len(cols) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'y_mm,B_T'")
        try:
            ys.append(float(cols[0]) * 1e-3)
            bs.append(float(cols[1]))
        except ValueError:
            if lineno == 1:  # header row
                continue
            raise ValueError(f"{path}:{lineno}: non-numeric field sample")
    if len(ys) < 2:
        raise ValueError(f"{path}: need at least two field samples")
    if any(b <= a for a, b in zip(ys, ys[1:])):
        raise ValueError(f"{path}: y column must be strictly increasing")
    return TabulatedField(y=tuple(ys), B=tuple(bs))


def build_profile(cfg: RobotConfig) -> FieldProfile:
    """Materialize the configured field profile; amplitude must be resolved."""
    f = cfg.field
    if f.kind == "parametric":
        if f.B_peak is None:
            raise ValueError(
                "field.B_peak is unresolved; run resolve_field() or set it")
        return ParametricField(B_peak=f.B_peak, y_p=f.y_p, sigma=f.sigma)
    table = load_field_table(f.table_path)
    if f.scale is None:
        raise ValueError(
            "field.scale is unresolved; run resolve_field() or set it")
    table = scale_profile(table, f.scale)
    if not table.covers(cfg.coil.y_max):
        raise FieldDomainError(
            f"tabulated field covers [{table.y[0]:.6g}, {table.y[-1]:.6g}] m "
            f"but the stroke needs +/-{cfg.coil.y_max:.6g} m")
    return table


# --------------------------------------------------------------------------
# drive and electrical state
# --------------------------------------------------------------------------

_QUARTER_NUDGE = 1e-9  # keeps exact flip instants on the new quarter


def drive_voltage(drive: DriveSignal, t):
    """Square-wave supply voltage at time t (sign +1 on the first quarter).

    The wave has amplitude V_max and period 1/(2*f_coil), flipping every
    quarter of the coil cycle so, at zero phase, flips land on the stroke
    zero crossings and extremes of y = y_max*sin(2*pi*f_coil*t).
    """
    x = 4.0 * drive.f_coil * np.asarray(t) + drive.phase / math.pi
    quarter = np.floor(x + _QUARTER_NUDGE).astype(np.int64)
    v = np.where(quarter % 2 == 0, drive.V_max, -drive.V_max)
    return float(v) if np.isscalar(t) else v


@dataclass(frozen=True)
class ElectricalState:
    V_s: float
    V_emf: float
    I_current: float
    F_coil: float
    P_mech: float
    P_heat: float
    P_net: float


def electrical_state(cfg: RobotConfig, profile: FieldProfile,
                     y: float, ydot: float, t: float) -> ElectricalState:
    """Instantaneous electrical state at coil position y, velocity ydot."""
    ln = cfg.coil.l_coil * cfg.coil.n_turns
    b_here = float(profile.field_at(y))
    v_s = drive_voltage(cfg.drive, t)
    v_emf = b_here * ln * ydot
    i = (v_s - v_emf) / cfg.coil.resistance
    return ElectricalState(
        V_s=v_s, V_emf=v_emf, I_current=i, F_coil=b_here * i * ln,
        P_mech=v_emf * i, P_heat=i * i * cfg.coil.resistance, P_net=v_s * i)


# --------------------------------------------------------------------------
# prescribed-kinematics cycle and field calibration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CycleReport:
    """One full coil cycle under prescribed sinusoidal kinematics."""

    t: np.ndarray
    y: np.ndarray
    ydot: np.ndarray
    V_s: np.ndarray
    V_emf: np.ndarray
    I_current: np.ndarray
    F_coil: np.ndarray
    P_mech: np.ndarray
    P_heat: np.ndarray
    P_net: np.ndarray
    P_mech_avg: float
    P_heat_avg: float
    P_net_avg: float


def quasi_static_cycle(cfg: RobotConfig, profile: FieldProfile,
                       f_coil: float | None = None,
                       y_max: float | None = None,
                       V_max: float | None = None,
                       samples: int | None = None) -> CycleReport:
    """Average power split for y = y_max*sin(2*pi*f*t) over one cycle.

    The coil is forced along the design stroke (no dynamics); this is the
    sizing view of the actuator. Sampling is midpoint so the square-wave
    flips never land on a sample.
    """
    f = cfg.drive.f_coil if f_coil is None else f_coil
    amp = cfg.coil.y_max if y_max is None else y_max
    v_max = cfg.drive.V_max if V_max is None else V_max
    n = cfg.integrator.quasi_samples if samples is None else samples
    drive = dataclasses.replace(cfg.drive, V_max=v_max, f_coil=f)

    period = 1.0 / f
    t = (np.arange(n) + 0.5) * (period / n)
    w = 2.0 * math.pi * f
    y = amp * np.sin(w * t)
    ydot = amp * w * np.cos(w * t)
    ln = cfg.coil.l_coil * cfg.coil.n_turns
    r_coil = cfg.coil.resistance

    b_arr = profile.field_at(y)
    v_s = drive_voltage(drive, t)
    v_emf = b_arr * ln * ydot
    i = (v_s - v_emf) / r_coil
    return CycleReport(
        t=t, y=y, ydot=ydot, V_s=v_s, V_emf=v_emf, I_current=i,
        F_coil=b_arr * i * ln,
        P_mech=v_emf * i, P_heat=i * i * r_coil, P_net=v_s * i,
        P_mech_avg=float(np.mean(v_emf * i)),
        P_heat_avg=float(np.mean(i * i * r_coil)),
        P_net_avg=float(np.mean(v_s * i)))


def _p_mech_at_scale(cfg: RobotConfig, profile: FieldProfile,
                     scale: float) -> float:
    return quasi_static_cycle(cfg, scale_profile(profile, scale)).P_mech_avg


def calibration_scale(cfg: RobotConfig, profile: FieldProfile,
                      target_P_mech: float, rel_tol: float = 1e-4) -> float:
    """Field multiplier that makes the quasi-static P_mech hit the target.

    P_mech is exactly quadratic (concave) in the field amplitude, so the
    target has two roots; the smaller one, on the rising branch, is found
    by bracketed bisection between zero field and the parabola peak.
    """
    v_max = cfg.drive.V_max
    r_coil = cfg.coil.resistance
    p_theory = (v_max / 2.0) ** 2 / r_coil  # matched-load bound
    if target_P_mech > p_theory * (1.0 + 1e-12):
        raise InfeasibleTargetError(
            f"target {target_P_mech:.6g} W exceeds the drive bound "
            f"(V_max/2)^2/R = {p_theory:.6g} W", max_achievable=p_theory)
    if target_P_mech < 0.0:
        raise ValueError("target mechanical power must be non-negative")
    if target_P_mech == 0.0:
        return 0.0

    # two probes pin the parabola P(s) = a*s - c*s^2 and bracket its peak
    p1 = _p_mech_at_scale(cfg, profile, 1.0)
    p2 = _p_mech_at_scale(cfg, profile, 2.0)
    a = (4.0 * p1 - p2) / 2.0
    c = a - p1
    if c <= 0.0 or a <= 0.0:
        raise InfeasibleTargetError(
            "this field shape extracts no positive mechanical power",
            max_achievable=max(p1, 0.0))
    s_peak = a / (2.0 * c)
    p_peak = _p_mech_at_scale(cfg, profile, s_peak)
    if target_P_mech > p_peak * (1.0 + 1e-9):
        raise InfeasibleTargetError(
            f"target {target_P_mech:.6g} W exceeds the maximum "
            f"{p_peak:.6g} W achievable with this field shape",
            max_achievable=p_peak)

    lo, hi = 0.0, s_peak
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        p_mid = _p_mech_at_scale(cfg, profile, mid)
        if abs(p_mid - target_P_mech) <= rel_tol * target_P_mech:
            return mid
        if p_mid < target_P_mech:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * s_peak:
            break
    mid = 0.5 * (lo + hi)
    if abs(_p_mech_at_scale(cfg, profile, mid) - target_P_mech) \
            > 1e-3 * target_P_mech:
        raise InfeasibleTargetError(
            f"calibration failed to converge on {target_P_mech:.6g} W",
            max_achievable=p_peak)
    return mid


def calibrate_field(cfg: RobotConfig, profile: FieldProfile,
                    target_P_mech: float) -> FieldProfile:
    """Rescale a profile so the quasi-static cycle delivers the target power."""
    return scale_profile(
        profile, calibration_scale(cfg, profile, target_P_mech))


def resolve_field(cfg: RobotConfig) -> RobotConfig:
    """Replace a calibration target with the concrete field amplitude."""
    f = cfg.field
    if f.calibrate_P_mech is None:
        return cfg
    if f.kind == "parametric":
        base = ParametricField(B_peak=1.0, y_p=f.y_p, sigma=f.sigma)
        scale = calibration_scale(cfg, base, f.calibrate_P_mech)
        new_field = dataclasses.replace(f, B_peak=scale, calibrate_P_mech=None)
    else:
        base = load_field_table(f.table_path)
        scale = calibration_scale(cfg, base, f.calibrate_P_mech)
        new_field = dataclasses.replace(f, scale=scale, calibrate_P_mech=None)
    return dataclasses.replace(cfg, field=new_field)
