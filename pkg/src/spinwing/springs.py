"""Serpentine torsion-spring model.

A spring is built from identical straight beams: `n_series` beams joined
end to end form one chain, and `n_chains` chains act in parallel between
the hub and the frame. Gluing (`n_grounded`) rigidifies beams at the
grounded end of every chain, shortening the series count. Each beam is a
moment-loaded thin plate in bending, so its rotational stiffness is
Y*w*t^3/(12*l) and constant-curvature bending puts the surface strain at
(t/2)*(theta/l), which bounds the rotation per beam at the fatigue limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .params import SpringSpec


class SpringDesignError(ValueError):
    """No spring within the given bounds meets the stiffness target."""

    def __init__(self, message: str, closest_k: float | None = None):
        super().__init__(message)
        self.closest_k = closest_k


@dataclass(frozen=True)
class SpringDesign:
    """A spring spec together with its model stiffness and rotation limit."""

    spec: "SpringSpec"
    k: float          # torsional stiffness, N*m/rad
    theta_max: float  # fatigue-limited rotation, rad


@dataclass(frozen=True)
class NaturalFrequencyCheck:
    f_n: float                 # Hz
    ratio: float | None        # f_n / f_drive, when a drive frequency is given
    quasi_static: bool | None  # ratio >= 2


def beam_stiffness(Y: float, w: float, t: float, l: float) -> float:
    """Rotational stiffness Y*w*t^3/(12*l) of one moment-loaded beam."""
    if min(Y, w, t, l) <= 0.0:
        raise ValueError("beam dimensions and modulus must be positive")
    return Y * w * t ** 3 / (12.0 * l)


def n_series_effective(spec: "SpringSpec") -> int:
    """Series beam count per chain after grounding."""
    n_eff = spec.n_series - spec.n_grounded
    if n_eff <= 0:
        raise ValueError(
            f"grounding {spec.n_grounded} of {spec.n_series} beams leaves "
            "no compliant segment"
        )
    return n_eff


def spring_stiffness(spec: "SpringSpec") -> float:
    """Total stiffness: n_chains parallel chains of beams in series."""
    k_b = beam_stiffness(spec.Y, spec.w, spec.t, spec.l)
    return spec.n_chains * k_b / n_series_effective(spec)


def max_rotation(spec: "SpringSpec") -> float:
    """Fatigue-limited rotation: per-beam 2*eps_max*l/t times the series count."""
    return n_series_effective(spec) * 2.0 * spec.eps_max * spec.l / spec.t


def analyze(spec: "SpringSpec") -> SpringDesign:
    """Bundle stiffness and rotation limit for a given spec."""
    return SpringDesign(spec=spec, k=spring_stiffness(spec),
                        theta_max=max_rotation(spec))


def spring_mass(spec: "SpringSpec") -> float:
    """Mass of the compliant beams (kg), grounded segments included."""
    return spec.density * spec.n_chains * spec.n_series * spec.l * spec.w * spec.t


def resonance_stiffness(J: float, f: float) -> float:
    """Stiffness k = J*(2*pi*f)^2 that resonates inertia J at frequency f."""
    if J <= 0.0 or f <= 0.0:
        raise ValueError("inertia and frequency must be positive")
    return J * (2.0 * math.pi * f) ** 2


def natural_frequency(k: float, J: float,
                      f_drive: float | None = None) -> NaturalFrequencyCheck:
    """Natural frequency sqrt(k/J)/(2*pi) plus a quasi-static check.

    When `f_drive` is given, also reports the ratio f_n/f_drive and
    whether the subsystem can be treated as quasi-static (ratio >= 2).
    """
    if k <= 0.0 or J <= 0.0:
        raise ValueError("stiffness and inertia must be positive")
    f_n = math.sqrt(k / J) / (2.0 * math.pi)
    if f_drive is None:
        return NaturalFrequencyCheck(f_n=f_n, ratio=None, quasi_static=None)
    ratio = f_n / f_drive
    return NaturalFrequencyCheck(f_n=f_n, ratio=ratio, quasi_static=ratio >= 2.0)


def design_spring(
    k_target: float,
    Y: float,
    eps_max: float,
    density: float,
    l_bounds: tuple[float, float],
    w_bounds: tuple[float, float],
    t_bounds: tuple[float, float],
    n_chains: int,
    n_series: int,
    n_grounded: int = 0,
    required_swing: float = 0.0,
    rel_tol: float = 0.02,
    grid: int = 48,
) -> SpringDesign:
    """Dimension a spring of stiffness `k_target` within the given bounds.

    Scans a deterministic (w, t) grid; for each point the beam length that
    hits the target exactly is solved in closed form and clamped to
    `l_bounds`. Candidates must satisfy max_rotation >= required_swing.
    Among candidates within `rel_tol` of the target, the lightest wins.
    Raises SpringDesignError (carrying the closest achievable stiffness)
    when no candidate is close enough.
    """
    # local import keeps the runtime dependency one-directional
    from .params import SpringSpec

    if k_target <= 0.0:
        raise ValueError("k_target must be positive")
    n_eff = n_series - n_grounded
    if n_eff <= 0:
        raise ValueError("n_grounded must be smaller than n_series")

    def candidate(w: float, t: float) -> "SpringSpec | None":
        # k = n_chains * Y*w*t^3/(12*l) / n_eff  =>  exact l for the target
        l_exact = n_chains * Y * w * t ** 3 / (12.0 * k_target * n_eff)
        l = min(max(l_exact, l_bounds[0]), l_bounds[1])
        spec = SpringSpec(Y=Y, eps_max=eps_max, density=density,
                          l=l, w=w, t=t, n_chains=n_chains,
                          n_series=n_series, n_grounded=n_grounded)
        if max_rotation(spec) < required_swing:
            return None
        return spec

    best_light: "SpringSpec | None" = None   # within rel_tol, lightest
    best_light_mass = math.inf
    closest_err = math.inf
    closest_k: float | None = None
    n = max(int(grid), 2)
    for i in range(n):
        w = w_bounds[0] + (w_bounds[1] - w_bounds[0]) * i / (n - 1)
        for j in range(n):
            t = t_bounds[0] + (t_bounds[1] - t_bounds[0]) * j / (n - 1)
            if w <= t:  # thin-beam bending regime requires w > t
                continue
            spec = candidate(w, t)
            if spec is None:
                continue
            k = spring_stiffness(spec)
            err = abs(k - k_target) / k_target
            if err < closest_err:
                closest_err, closest_k = err, k
            if err <= rel_tol:
                mass = spring_mass(spec)
                if mass < best_light_mass:
                    best_light, best_light_mass = spec, mass
    if best_light is None:
        raise SpringDesignError(
            f"no spring within bounds reaches k={k_target:.6g} N*m/rad "
            f"(closest achievable: {closest_k!r})",
            closest_k=closest_k,
        )
    return analyze(best_light)
