"""Per-turbine power-tracking controller.

Generator torque follows either the power-tracking law ``P_dem / (w_gen eta)``
(mode I) or its minimum with the greedy torque curve (mode II).  Collective
pitch runs a gain-scheduled PI loop that regulates the generator speed to the
speed at which the greedy curve would produce the demanded power.

Speeds in :class:`ControllerConfig` are generator-side rpm; every function
here works in rad/s.
"""
from __future__ import annotations

import bisect
import enum
import functools
import math
from dataclasses import dataclass, fields

from scipy.optimize import bisect as scalar_bisect

from .errors import NonMonotonicCurve, RotorStopped
from .turbine import RPM_TO_RADS, Mode


class ControlFlag(enum.Enum):
    MODE_I = "I"
    MODE_II = "II"


@dataclass(frozen=True)
class ControllerConfig:
    k_greedy: float = 79.43986  # N m / (rad/s)^2
    omega_cut_in: float = 200.0  # rpm
    omega_r15_to_2: float = 300.0  # rpm
    omega_r2_to_25: float = 405.0  # rpm
    slip_pct: float = 10.0
    omega_rated: float = 445.67  # rpm
    region3_entry_pct: float = 95.0
    rated_power: float = 10.0e6  # W
    generator_efficiency: float = 1.0
    max_torque_rate: float = 15000.0  # N m / s
    max_pitch_rate: float = 10.0  # deg / s
    theta_fine: float = 0.75  # deg
    theta_switch: float = 1.0  # deg
    theta_max: float = 45.0  # deg
    lpf_corner: float = 0.1798  # Hz
    pid_kp_range: tuple[float, float] = (0.039, 1.41)
    pid_ki_range: tuple[float, float] = (0.067, 0.28)
    pid_kd: float = 0.0
    schedule_pitch_end: float = 25.0  # deg, pitch at which the smallest gains apply
    fallback_exit_ratio: float = 1.02
    fallback_exit_dwell: float = 0.5  # s
    table_points: int = 512
    min_gen_speed: float = 5.0  # rad/s; rotor-speed guard times gearbox ratio

    def __post_init__(self):
        r3 = self.region3_entry_pct / 100.0 * self.omega_rated
        slip_top = self.omega_rated * (1.0 + self.slip_pct / 100.0)
        if not self.omega_cut_in < self.omega_r15_to_2 < self.omega_r2_to_25 < r3 < slip_top:
            raise ValueError("transition speeds must satisfy cut-in < 1.5/2 < 2/2.5 < region-3 entry")
        positive = (
            self.k_greedy, self.rated_power, self.max_torque_rate, self.max_pitch_rate,
            self.lpf_corner, *self.pid_kp_range, *self.pid_ki_range,
        )
        if any(v <= 0 for v in positive):
            raise ValueError("gains, rates and ratings must be strictly positive")
        if self.pid_kd < 0:
            raise ValueError("pid_kd must be non-negative")
        if not self.theta_fine < self.theta_max:
            raise ValueError("theta_fine must be below theta_max")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @property
    def region3_entry(self) -> float:
        """Region 2.5 to 3 transition, rad/s."""
        return self.region3_entry_pct / 100.0 * self.omega_rated * RPM_TO_RADS

    @property
    def rated_speed(self) -> float:
        return self.omega_rated * RPM_TO_RADS


@dataclass(frozen=True)
class GreedyCurve:
    """Five-region torque/speed law; breakpoints in rad/s, torques in N m."""

    k: float
    w_cut_in: float
    w_15_2: float
    w_2_25: float
    w_25_3: float
    rated_power: float
    efficiency: float

    @classmethod
    def from_config(cls, cfg: ControllerConfig) -> GreedyCurve:
        return cls(
            k=cfg.k_greedy,
            w_cut_in=cfg.omega_cut_in * RPM_TO_RADS,
            w_15_2=cfg.omega_r15_to_2 * RPM_TO_RADS,
            w_2_25=cfg.omega_r2_to_25 * RPM_TO_RADS,
            w_25_3=cfg.region3_entry,
            rated_power=cfg.rated_power,
            efficiency=cfg.generator_efficiency,
        )

    @property
    def boundaries(self) -> tuple[float, float, float, float]:
        return (self.w_cut_in, self.w_15_2, self.w_2_25, self.w_25_3)

    def torque(self, w: float) -> float:
        if w < self.w_cut_in:
            return 0.0
        if w < self.w_15_2:
            top = self.k * self.w_15_2**2
            return top * (w - self.w_cut_in) / (self.w_15_2 - self.w_cut_in)
        if w < self.w_2_25:
            return self.k * w * w
        if w < self.w_25_3:
            t2 = self.k * self.w_2_25**2
            t3 = self.rated_power / (self.efficiency * self.w_25_3)
            return t2 + (t3 - t2) * (w - self.w_2_25) / (self.w_25_3 - self.w_2_25)
        return self.rated_power / (self.efficiency * w)

    def power(self, w: float) -> float:
        return self.torque(w) * w * self.efficiency


def greedy_torque(omega_gen: float, cfg: ControllerConfig) -> float:
    return GreedyCurve.from_config(cfg).torque(omega_gen)


def tracking_torque(p_dem: float, omega_gen: float, cfg: ControllerConfig) -> float:
    """Torque that converts the measured generator speed into ``p_dem``."""
    if omega_gen <= cfg.min_gen_speed:
        raise RotorStopped(f"generator speed {omega_gen:.4g} rad/s at or below guard")
    return p_dem / (omega_gen * cfg.generator_efficiency)


def combined_torque(p_dem: float, omega_gen: float, cfg: ControllerConfig,
                    curve: GreedyCurve | None = None) -> float:
    curve = curve or GreedyCurve.from_config(cfg)
    return min(curve.torque(omega_gen), tracking_torque(p_dem, omega_gen, cfg))


class SetpointTable:
    """Generator speed reference as a function of demanded power.

    Each node power is inverted through the greedy power curve by bisection;
    queries interpolate linearly.  Demands at or above rated power map to the
    rated generator speed.
    """

    def __init__(self, powers: list[float], speeds: list[float], rated_power: float,
                 rated_speed: float):
        if any(b <= a for a, b in zip(speeds, speeds[1:])):
            raise NonMonotonicCurve("speed reference is not strictly increasing in power")
        self.powers = powers
        self.speeds = speeds
        self.rated_power = rated_power
        self.rated_speed = rated_speed

    def __call__(self, p_dem: float) -> float:
        if p_dem >= self.rated_power:
            return self.rated_speed
        p = self.powers
        if p_dem <= p[0]:
            return self.speeds[0]
        j = bisect.bisect_right(p, p_dem)
        frac = (p_dem - p[j - 1]) / (p[j] - p[j - 1])
        return self.speeds[j - 1] + frac * (self.speeds[j] - self.speeds[j - 1])


def build_setpoint_table(cfg: ControllerConfig, curve: GreedyCurve | None = None) -> SetpointTable:
    curve = curve or GreedyCurve.from_config(cfg)
    lo, hi = curve.w_cut_in, curve.w_25_3

    # power-vs-speed must be strictly increasing between cut-in and region 3
    probe = [lo + (hi - lo) * i / 4096 for i in range(4097)]
    p_probe = [curve.power(w) for w in probe]
    if any(b <= a for a, b in zip(p_probe, p_probe[1:])):
        raise NonMonotonicCurve("greedy power curve is not strictly increasing below region 3")

    p_top = curve.power(hi)
    n = cfg.table_points
    # quadratic spacing packs nodes where the inverse bends hardest (near cut-in);
    # region breakpoints are exact nodes so kinks fall on grid points
    grid = {p_top * (i / (n - 1)) ** 2 for i in range(n)}
    grid.update(curve.power(w) for w in (curve.w_15_2, curve.w_2_25))
    powers = sorted(grid)
    speeds = [lo]
    for p in powers[1:-1]:
        speeds.append(scalar_bisect(lambda w: curve.power(w) - p, lo, hi, xtol=1e-12, rtol=1e-10))
    speeds.append(hi)
    return SetpointTable(powers, speeds, cfg.rated_power, cfg.rated_speed)


@dataclass(frozen=True)
class PitchPidState:
    integral: float  # deg
    filtered_speed: float  # rad/s
    pitch: float  # deg, previous command
    torque: float = 0.0  # N m, previous command
    error: float = 0.0  # rad/s, previous error (derivative term)


def scheduled_gains(pitch: float, cfg: ControllerConfig) -> tuple[float, float]:
    """(kp, ki) interpolated linearly in pitch, largest at fine pitch."""
    kp_lo, kp_hi = cfg.pid_kp_range
    ki_lo, ki_hi = cfg.pid_ki_range
    span = cfg.schedule_pitch_end - cfg.theta_fine
    x = min(max((pitch - cfg.theta_fine) / span, 0.0), 1.0)
    return kp_hi + (kp_lo - kp_hi) * x, ki_hi + (ki_lo - ki_hi) * x


def lowpass_coefficient(dt: float, corner_hz: float) -> float:
    return 1.0 - math.exp(-2.0 * math.pi * corner_hz * dt)


def pitch_pid_step(pid: PitchPidState, omega_ref: float, omega_meas: float, dt: float,
                   cfg: ControllerConfig) -> tuple[float, PitchPidState]:
    """Advance the pitch loop by one sample; returns (pitch command, new state).

    Gains act on the filtered generator-speed error in rad/s and produce
    degrees of pitch.  Output and integrator share the clamp
    ``[theta_fine, theta_max]``; the output is then rate limited.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    filt = pid.filtered_speed + lowpass_coefficient(dt, cfg.lpf_corner) * (omega_meas - pid.filtered_speed)
    err = filt - omega_ref
    kp, ki = scheduled_gains(pid.pitch, cfg)
    lo, hi = cfg.theta_fine, cfg.theta_max
    integral = min(max(pid.integral + ki * err * dt, lo), hi)
    raw = kp * err + integral + cfg.pid_kd * (err - pid.error) / dt
    target = min(max(raw, lo), hi)
    step = cfg.max_pitch_rate * dt
    pitch = pid.pitch + min(max(target - pid.pitch, -step), step)
    return pitch, PitchPidState(integral, filt, pitch, pid.torque, err)


def update_mode(mode: Mode, pitch: float, omega_gen: float, omega_ref: float,
                cfg: ControllerConfig, *, p_greedy: float, p_dem: float,
                exit_timer: float, dt: float) -> tuple[Mode, float]:
    """Tracking/fallback state machine; returns (mode, exit timer).

    Entry to fallback: pitch at or below the switch angle while the generator
    runs slower than its reference.  Exit: for the whole dwell time the greedy
    power estimate exceeds the demand (with margin) or reaches rated power,
    and the generator runs at or above its reference.
    """
    if mode is Mode.TRACKING:
        if pitch <= cfg.theta_switch and omega_gen < omega_ref:
            return Mode.GREEDY_FALLBACK, 0.0
        return Mode.TRACKING, 0.0
    surplus = p_greedy >= cfg.rated_power or p_greedy > cfg.fallback_exit_ratio * p_dem
    # the rotor must also have caught up, or the entry test fires again on the next sample
    if not surplus or omega_gen < omega_ref:
        return Mode.GREEDY_FALLBACK, 0.0
    exit_timer += dt
    if exit_timer >= cfg.fallback_exit_dwell - 1e-9:
        return Mode.TRACKING, 0.0
    return Mode.GREEDY_FALLBACK, exit_timer


@dataclass(frozen=True)
class ControllerState:
    pid: PitchPidState
    mode: Mode = Mode.TRACKING
    exit_timer: float = 0.0

    @property
    def saturated(self) -> bool:
        return self.mode is Mode.GREEDY_FALLBACK


@dataclass(frozen=True)
class Commands:
    torque: float  # N m
    pitch: float  # deg
    omega_ref: float  # rad/s


@functools.lru_cache(maxsize=16)
def _shared_table(cfg: ControllerConfig) -> SetpointTable:
    return build_setpoint_table(cfg)


class TurbineController:
    """Bundles configuration, greedy curve and speed table for one turbine."""

    def __init__(self, cfg: ControllerConfig | None = None, flag: ControlFlag = ControlFlag.MODE_II):
        self.cfg = cfg or ControllerConfig()
        self.flag = flag
        self.curve = GreedyCurve.from_config(self.cfg)
        self.table = _shared_table(self.cfg)

    def initial_state(self, omega_gen: float, pitch: float, torque: float) -> ControllerState:
        return ControllerState(PitchPidState(integral=max(pitch, self.cfg.theta_fine),
                                             filtered_speed=omega_gen, pitch=pitch, torque=torque))

    def step(self, state: ControllerState, p_dem: float, omega_gen: float, p_greedy: float,
             dt: float) -> tuple[Commands, ControllerState]:
        """One control sample: mode logic, pitch loop, torque law, rate limits."""
        cfg = self.cfg
        omega_ref = self.table(p_dem)
        mode, timer = state.mode, state.exit_timer
        if self.flag is ControlFlag.MODE_II:
            mode, timer = update_mode(mode, state.pid.pitch, omega_gen, omega_ref, cfg,
                                      p_greedy=p_greedy, p_dem=p_dem, exit_timer=timer, dt=dt)

        if mode is Mode.GREEDY_FALLBACK:
            # greedy operation: fine pitch below rated, speed regulation above
            pitch, pid = pitch_pid_step(state.pid, cfg.rated_speed, omega_gen, dt, cfg)
            tau = self.curve.torque(omega_gen)
        else:
            pitch, pid = pitch_pid_step(state.pid, omega_ref, omega_gen, dt, cfg)
            tau = tracking_torque(p_dem, omega_gen, cfg)
            if self.flag is ControlFlag.MODE_II:
                tau = min(tau, self.curve.torque(omega_gen))

        prev = state.pid.torque
        step = cfg.max_torque_rate * dt
        tau = max(prev + min(max(tau - prev, -step), step), 0.0)
        pid = PitchPidState(pid.integral, pid.filtered_speed, pid.pitch, tau, pid.error)
        return Commands(tau, pitch, omega_ref), ControllerState(pid, mode, timer)


def turbine_control_step(controller: TurbineController, state: ControllerState, p_dem: float,
                         omega_gen: float, p_greedy: float, dt: float) -> tuple[Commands, ControllerState]:
    return controller.step(state, p_dem, omega_gen, p_greedy, dt)
