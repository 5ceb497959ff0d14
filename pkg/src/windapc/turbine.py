"""Quasi-steady rotor aerodynamics and a single-state rigid drivetrain.

The power coefficient surface is the common exponential fit

    Cp = c1 (c2/li - c3*theta - c4) exp(-c5/li) + c6*lam
    1/li = 1/(lam + 0.08 theta) - 0.035

stretched so that its peak sits exactly at ``(lambda_opt, fine_pitch)`` with
value ``cp_max``.  ``cp_max`` itself is obtained from the generator torque
constant of the greedy torque law (see :func:`calibrate_cp_max`), which makes
the region-2 law exactly optimal for this surface.

The thrust coefficient follows from one-dimensional momentum theory: the
induction factor ``a`` is the root of ``Cp = 4a(1-a)^2`` on ``[0, 1/3]`` and
``Ct = 4a(1-a)``.

The usual ``0.035/(theta^3 + 1)`` term is frozen at its zero-pitch value: the
pitch-dependent version puts a spurious bump in Cp between 1 and 3 deg that
breaks monotonicity in pitch above tip-speed ratio 6.  Both forms agree at
fine pitch.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

from scipy.optimize import minimize_scalar

from .errors import CalibrationOutOfRange, RotorStopped

BETZ_LIMIT = 16.0 / 27.0
# Below this rotor speed (rad/s) the aerodynamic torque is not evaluated.
ROTOR_SPEED_GUARD = 0.1

# Surface domain; inputs outside are clamped.
LAMBDA_MIN = 1e-3
LAMBDA_MAX = 30.0
PITCH_MAX = 90.0

_C1, _C2, _C3, _C4, _C5, _C6 = 0.5176, 116.0, 0.4, 5.0, 21.0, 0.0068

RPM_TO_RADS = math.pi / 30.0


class Mode(enum.Enum):
    TRACKING = "Tracking"
    GREEDY_FALLBACK = "GreedyFallback"


@dataclass(frozen=True)
class TurbineParams:
    """Physical and drivetrain constants of one machine (SI units, pitch in deg)."""

    cp_max: float
    rotor_radius: float = 178.3 / 2.0
    gearbox_ratio: float = 50.0
    rotor_inertia: float = 1.6e8
    air_density: float = 1.225
    rated_power: float = 10.0e6
    generator_efficiency: float = 1.0
    lambda_opt: float = 8.0
    fine_pitch: float = 0.75

    def __post_init__(self):
        if not self.rotor_radius > 0:
            raise ValueError("rotor_radius must be positive")
        if not self.gearbox_ratio >= 1:
            raise ValueError("gearbox_ratio must be >= 1")
        if not self.rotor_inertia > 0:
            raise ValueError("rotor_inertia must be positive")
        if not 0 < self.cp_max < BETZ_LIMIT:
            raise ValueError(f"cp_max={self.cp_max} outside (0, Betz limit)")
        if not self.lambda_opt > 0:
            raise ValueError("lambda_opt must be positive")
        if not 0 < self.generator_efficiency <= 1:
            raise ValueError("generator_efficiency must be in (0, 1]")

    @property
    def rotor_area(self) -> float:
        return math.pi * self.rotor_radius**2

    @property
    def rotor_diameter(self) -> float:
        return 2.0 * self.rotor_radius


@dataclass(frozen=True)
class TurbineState:
    rotor_speed: float  # rad/s
    pitch: float  # deg
    gen_torque: float  # N m, generator side
    gen_power: float  # W
    thrust: float = 0.0  # N
    mode: Mode = Mode.TRACKING
    speed_clamped: bool = False

    def gen_speed(self, params: TurbineParams) -> float:
        return self.rotor_speed * params.gearbox_ratio


class AeroPoint(NamedTuple):
    cp: float
    ct: float
    induction: float
    clamped: bool


def calibrate_cp_max(
    k_greedy: float,
    *,
    gearbox_ratio: float = 50.0,
    lambda_opt: float = 8.0,
    air_density: float = 1.225,
    rotor_radius: float = 178.3 / 2.0,
) -> float:
    """Peak power coefficient for which ``k_greedy * w_gen**2`` is the optimal torque.

    Raises:
        CalibrationOutOfRange: if the result is outside (0.40, 0.55).
    """
    area = math.pi * rotor_radius**2
    cp_max = k_greedy * gearbox_ratio**3 * lambda_opt**3 / (0.5 * air_density * area * rotor_radius**3)
    if not 0.40 < cp_max < 0.55:
        raise CalibrationOutOfRange(
            f"calibrated cp_max={cp_max:.4f} outside (0.40, 0.55); "
            f"check lambda_opt={lambda_opt} and gearbox_ratio={gearbox_ratio}"
        )
    return cp_max


def default_params(k_greedy: float = 79.43986, **overrides) -> TurbineParams:
    """DTU 10MW-like parameters with ``cp_max`` calibrated against ``k_greedy``."""
    geometry = {
        key: overrides[key]
        for key in ("gearbox_ratio", "lambda_opt", "air_density", "rotor_radius")
        if key in overrides
    }
    cp_max = calibrate_cp_max(k_greedy, **geometry)
    return TurbineParams(cp_max=cp_max, **overrides)


def _raw_cp(lam: float, theta: float) -> float:
    inv_li = 1.0 / (lam + 0.08 * theta) - 0.035
    return _C1 * (_C2 * inv_li - _C3 * theta - _C4) * math.exp(-_C5 * inv_li) + _C6 * lam


@functools.lru_cache(maxsize=None)
def _raw_peak() -> tuple[float, float]:
    res = minimize_scalar(
        lambda lam: -_raw_cp(lam, 0.0), bounds=(2.0, 20.0), method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x), -float(res.fun)


def induction_from_cp(cp: float) -> float:
    """Root of ``4a(1-a)^2 = cp`` in ``[0, 1/3]`` (trigonometric cubic solution)."""
    if cp <= 0.0:
        return 0.0
    if cp >= BETZ_LIMIT:
        return 1.0 / 3.0
    q = 2.0 / 27.0 - 0.25 * cp
    arg = max(-1.0, min(1.0, -13.5 * q))
    return 2.0 / 3.0 + 2.0 / 3.0 * math.cos(math.acos(arg) / 3.0 - 4.0 * math.pi / 3.0)


def surfaces(lam: float, pitch: float, params: TurbineParams) -> AeroPoint:
    """Power coefficient, thrust coefficient and axial induction at (lam, pitch)."""
    clamped = False
    if not LAMBDA_MIN <= lam <= LAMBDA_MAX:
        lam = min(max(lam, LAMBDA_MIN), LAMBDA_MAX)
        clamped = True
    if not 0.0 <= pitch <= PITCH_MAX:
        pitch = min(max(pitch, 0.0), PITCH_MAX)
        clamped = True
    lam_star, raw_max = _raw_peak()
    theta = pitch - params.fine_pitch
    if theta < 0.0:
        theta = 0.0
    raw = _raw_cp(lam * lam_star / params.lambda_opt, theta)
    cp = raw * params.cp_max / raw_max
    if cp < 0.0:
        cp = 0.0
    a = induction_from_cp(cp)
    return AeroPoint(cp, 4.0 * a * (1.0 - a), a, clamped)


def cp(lam: float, pitch: float, params: TurbineParams) -> float:
    return surfaces(lam, pitch, params).cp


def ct(lam: float, pitch: float, params: TurbineParams) -> float:
    return surfaces(lam, pitch, params).ct


def tip_speed_ratio(rotor_speed: float, wind_speed: float, params: TurbineParams) -> float:
    return rotor_speed * params.rotor_radius / wind_speed


def aero_torque(wind_speed: float, state: TurbineState, params: TurbineParams) -> float:
    """Rotor-side aerodynamic torque from the quasi-steady power balance.

    Raises:
        RotorStopped: if the rotor speed is at or below ``ROTOR_SPEED_GUARD``.
    """
    if state.rotor_speed <= ROTOR_SPEED_GUARD:
        raise RotorStopped(f"rotor speed {state.rotor_speed:.4g} rad/s at or below guard")
    lam = state.rotor_speed * params.rotor_radius / wind_speed
    c = surfaces(lam, state.pitch, params).cp
    return 0.5 * params.air_density * params.rotor_area * c * wind_speed**3 / state.rotor_speed


def thrust(wind_speed: float, state: TurbineState, params: TurbineParams) -> float:
    lam = state.rotor_speed * params.rotor_radius / wind_speed
    c = surfaces(lam, state.pitch, params).ct
    return 0.5 * params.air_density * params.rotor_area * c * wind_speed**2


def step_drivetrain(
    state: TurbineState,
    tau_aero: float,
    tau_gen: float,
    dt: float,
    params: TurbineParams,
    *,
    pitch: float | None = None,
    thrust: float | None = None,
    mode: Mode | None = None,
) -> TurbineState:
    """One explicit Euler step of the rigid drivetrain.

    ``tau_gen`` is held over the step; the returned state's power is
    ``tau_gen * w_gen * eta`` evaluated at the new speed.  Keyword arguments
    carry actuator/bookkeeping values into the new state unchanged.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    omega = state.rotor_speed + dt * (tau_aero - params.gearbox_ratio * tau_gen) / params.rotor_inertia
    clamped = state.speed_clamped
    if omega < 0.0:
        omega = 0.0
        clamped = True
    power = tau_gen * omega * params.gearbox_ratio * params.generator_efficiency
    return TurbineState(
        rotor_speed=omega,
        pitch=state.pitch if pitch is None else pitch,
        gen_torque=tau_gen,
        gen_power=power,
        thrust=state.thrust if thrust is None else thrust,
        mode=state.mode if mode is None else mode,
        speed_clamped=clamped,
    )


def with_power_identity(state: TurbineState, params: TurbineParams) -> TurbineState:
    """Copy of ``state`` whose ``gen_power`` is recomputed from torque and speed."""
    power = state.gen_torque * state.rotor_speed * params.gearbox_ratio * params.generator_efficiency
    return replace(state, gen_power=power)


def available_power(wind_speed: float, params: TurbineParams) -> float:
    """Power greedy control would settle at in steady ``wind_speed``, capped at rated."""
    p = 0.5 * params.air_density * params.rotor_area * params.cp_max * wind_speed**3
    return min(p * params.generator_efficiency, params.rated_power)


def greedy_equilibrium(wind_speed: float, params: TurbineParams, pitch: float | None = None,
                       torque_law=None) -> TurbineState:
    """Steady state at optimal tip-speed ratio, fine pitch and matching torque."""
    omega = params.lambda_opt * wind_speed / params.rotor_radius
    pitch = params.fine_pitch if pitch is None else pitch
    w_gen = omega * params.gearbox_ratio
    tau = torque_law(w_gen) if torque_law is not None else (
        available_power(wind_speed, params) / (w_gen * params.generator_efficiency))
    power = tau * w_gen * params.generator_efficiency
    return TurbineState(rotor_speed=omega, pitch=pitch, gen_torque=tau, gen_power=power)
