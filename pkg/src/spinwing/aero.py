"""Quasi-steady aerodynamics of the spinning wing pair.

Each wing is a flat plate at fixed angle of attack; all aerodynamic force
is lumped at the center of pressure, a fraction p_hat of the wing length
from the spin axis. Lift and drag scale with the square of the speed at
that point, so the drag torque about the spin axis reduces to b*omega^2
with a constant damping factor b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .params import WingGeometry


@dataclass(frozen=True)
class AeroForces:
    """Total forces of the wing pair at one spin speed."""

    F_L: float       # total lift, N
    F_D: float       # total drag, N
    P_aero: float    # power absorbed by drag, W
    tau_aero: float  # drag torque about the spin axis, N*m


def coefficients(alpha: float) -> tuple[float, float]:
    """Lift and drag coefficients of a single wing.

    C_L = 1.8*sin(2*alpha), C_D = 1.9 - 1.5*cos(2*alpha), valid for
    0 <= alpha <= pi/2 (rad). Outside that range the flat-plate fit does
    not apply and a ValueError is raised.
    """
    if not 0.0 <= alpha <= math.pi / 2.0:
        raise ValueError(
            f"angle of attack {alpha!r} rad outside [0, pi/2]"
        )
    two_alpha = 2.0 * alpha
    return 1.8 * math.sin(two_alpha), 1.9 - 1.5 * math.cos(two_alpha)


def wing_area(geom: "WingGeometry") -> float:
    """Planform area of one wing, R^2 / aspect_ratio (m^2)."""
    return geom.R * geom.R / geom.aspect_ratio


def force_prefactors(geom: "WingGeometry", rho_air: float) -> tuple[float, float]:
    """Constants (kl, kd) such that F_L = kl*omega^2 and F_D = kd*omega^2."""
    c_l, c_d = coefficients(geom.alpha)
    common = geom.n_wings * 0.5 * rho_air * wing_area(geom) * (geom.p_hat * geom.R) ** 2
    return common * c_l, common * c_d


def forces(geom: "WingGeometry", rho_air: float, omega: float) -> AeroForces:
    """Lift, drag, drag torque and drag power at spin speed omega (rad/s)."""
    if omega < 0.0:
        raise ValueError(f"spin speed must be non-negative, got {omega!r}")
    kl, kd = force_prefactors(geom, rho_air)
    f_l = kl * omega * omega
    f_d = kd * omega * omega
    arm = geom.p_hat * geom.R
    tau = arm * f_d
    return AeroForces(F_L=f_l, F_D=f_d, P_aero=tau * omega, tau_aero=tau)


def damping_factor(geom: "WingGeometry", rho_air: float) -> float:
    """Quadratic damping factor b (N*m*s^2) with b*omega^2 = p_hat*R*F_D."""
    _, kd = force_prefactors(geom, rho_air)
    return geom.p_hat * geom.R * kd
