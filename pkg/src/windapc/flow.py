"""Desk-scale wind field: mean inflow, synthetic turbulence and Jensen wakes.

Wakes are top-hat Jensen deficits combined by root-sum-square.  Each
upstream rotor's axial induction travels downstream at the mean wind speed
through a delay line quantised to whole controller steps.  Turbulence is a
single first-order autoregressive series advected through the row (frozen
turbulence), so a turbine at ``x`` sees the perturbation that passed the
front of the row ``x / u_mean`` earlier.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FlowConfig:
    u_mean: float = 9.0  # m/s
    ti: float = 0.0  # turbulence intensity, fraction
    positions: tuple[float, ...] = (0.0, 5.0, 10.0)  # rotor diameters downstream
    rotor_diameter: float = 178.3  # m
    wake_decay: float = 0.05
    correlation_time: float = 10.0  # s
    seed: int = 0
    # piecewise-constant free-stream speed [(t_start, m/s), ...]; empty means u_mean throughout
    wind_schedule: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.u_mean > 0:
            raise ValueError("u_mean must be positive")
        if self.ti < 0:
            raise ValueError("ti must be non-negative")
        if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
            raise ValueError("turbine positions must be strictly increasing")
        if self.correlation_time <= 0:
            raise ValueError("correlation_time must be positive")
        if any(u <= 0 for _, u in self.wind_schedule):
            raise ValueError("scheduled wind speeds must be positive")

    @property
    def n_turbines(self) -> int:
        return len(self.positions)

    def free_stream_mean(self, t: float) -> float:
        u = self.u_mean
        for start, speed in self.wind_schedule:
            if t >= start:
                u = speed
        return u


def advection_steps(distance: float, u_mean: float, dt: float) -> int:
    """Whole steps for a parcel to travel ``distance`` metres at ``u_mean``."""
    steps = distance / u_mean / dt
    return int(math.ceil(round(steps, 9)))


def jensen_deficit(induction: float, x_over_d: float, wake_decay: float) -> float:
    return 2.0 * induction / (1.0 + 2.0 * wake_decay * x_over_d) ** 2


def combined_deficit(terms) -> float:
    return math.sqrt(math.fsum(d * d for d in terms))


class WakeBuffer:
    """Per-turbine history of axial induction, read back with advection delays."""

    def __init__(self, initial: list[float], positions: tuple[float, ...], rotor_diameter: float,
                 u_mean: float, dt: float):
        self.initial = list(initial)
        self.history: list[list[float]] = [[] for _ in initial]
        n = len(positions)
        # delays[i][j]: steps for turbine j's wake to reach turbine i (j upstream of i)
        self.delays = [
            [advection_steps((positions[i] - positions[j]) * rotor_diameter, u_mean, dt) if j < i else 0
             for j in range(n)]
            for i in range(n)
        ]

    def push(self, j: int, induction: float) -> None:
        self.history[j].append(induction)

    def read(self, j: int, k: int, delay: int) -> float:
        idx = k - delay
        if idx < 0:
            return self.initial[j]
        return self.history[j][idx]


def effective_wind(i: int, k: int, free_stream: float, buffer: WakeBuffer, cfg: FlowConfig) -> float:
    """Rotor-averaged wind speed of turbine ``i`` at step ``k``."""
    if i == 0:
        return free_stream
    terms = []
    xi = cfg.positions[i]
    for j in range(i):
        a = buffer.read(j, k, buffer.delays[i][j])
        terms.append(jensen_deficit(a, xi - cfg.positions[j], cfg.wake_decay))
    return free_stream * (1.0 - combined_deficit(terms))


def steady_effective_winds(inductions: list[float], free_stream: float, cfg: FlowConfig) -> list[float]:
    """Effective winds once every delay line has filled with ``inductions``."""
    out = []
    for i in range(cfg.n_turbines):
        terms = [jensen_deficit(inductions[j], cfg.positions[i] - cfg.positions[j], cfg.wake_decay)
                 for j in range(i)]
        out.append(free_stream * (1.0 - combined_deficit(terms)))
    return out


def turbulence_step(x: float, dt: float, ti: float, correlation_time: float, noise: float) -> float:
    """Next value of an AR(1) process with stationary std ``ti``; ``noise`` ~ N(0, 1)."""
    phi = math.exp(-dt / correlation_time)
    return phi * x + ti * math.sqrt(1.0 - phi * phi) * noise


def turbulence_series(n: int, dt: float, ti: float, correlation_time: float, seed: int) -> list[float]:
    """Fractional perturbation sequence of length ``n``; identically zero when ``ti == 0``."""
    if ti == 0.0:
        return [0.0] * n
    noise = np.random.default_rng(seed).standard_normal(n).tolist()
    x = ti * noise[0]
    out = [x]
    for k in range(1, n):
        x = turbulence_step(x, dt, ti, correlation_time, noise[k])
        out.append(x)
    return out


class FreeStream:
    """Free-stream speed at each turbine and step, with frozen-turbulence lags."""

    def __init__(self, cfg: FlowConfig, n_steps: int, dt: float):
        self.cfg = cfg
        self.dt = dt
        x0 = cfg.positions[0]
        self.lags = [advection_steps((x - x0) * cfg.rotor_diameter, cfg.u_mean, dt) for x in cfg.positions]
        self.offset = max(self.lags)
        self.series = turbulence_series(n_steps + self.offset, dt, cfg.ti, cfg.correlation_time, cfg.seed)

    def __call__(self, i: int, k: int) -> float:
        return self.cfg.free_stream_mean(k * self.dt) * (1.0 + self.series[k + self.offset - self.lags[i]])
