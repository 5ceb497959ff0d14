from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import WindowTooShort
from .records import StepRecord

DEFAULT_TRANSIENT = 200.0  # s


@dataclass(frozen=True)
class Metrics:
    mean_power: float  # W
    rms_error: float  # W
    mean_thrust: tuple[float, ...]  # N, per turbine
    saturation_duty: tuple[float, ...]  # fraction of window, per turbine
    pct_change: float | None = None  # % vs baseline mean power
    n_samples: int = 0


def _window(records: Sequence[StepRecord], transient: float) -> list[StepRecord]:
    if not records:
        raise WindowTooShort("no records")
    window = [rec for rec in records if rec.t >= transient - 1e-9]
    if not window:
        raise WindowTooShort(f"no samples after the {transient:g} s transient (last t = {records[-1].t:g} s)")
    return window


def compute_metrics(records: Sequence[StepRecord], baseline: Sequence[StepRecord] | None = None,
                    transient: float = DEFAULT_TRANSIENT) -> Metrics:
    """Table-style tracking metrics over the post-transient window.

    Raises:
        WindowTooShort: if no record falls after ``transient``.
    """
    window = _window(records, transient)
    p_bar = np.array([rec.p_bar for rec in window])
    r = np.array([rec.r for rec in window])
    thrust = np.array([[tr.thrust for tr in rec.turbines] for rec in window])
    sat = np.array([[tr.saturated for tr in rec.turbines] for rec in window], dtype=float)
    mean_power = float(p_bar.mean())
    pct = None
    if baseline is not None:
        base = float(np.mean([rec.p_bar for rec in _window(baseline, transient)]))
        pct = 100.0 * (mean_power - base) / base
    return Metrics(
        mean_power=mean_power,
        rms_error=float(np.sqrt(np.mean((r - p_bar) ** 2))),
        mean_thrust=tuple(float(x) for x in thrust.mean(axis=0)),
        saturation_duty=tuple(float(x) for x in sat.mean(axis=0)),
        pct_change=pct,
        n_samples=len(window),
    )
