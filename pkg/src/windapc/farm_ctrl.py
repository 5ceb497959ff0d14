"""Farm supervisory controller: nominal power split plus an integrating correction.

Each turbine is asked for ``alpha_i * r + du`` where ``du`` is the state of a
pure integrator on the farm tracking error.  With every turbine behaving as a
one-sample delay, the gain ``1 / (N * dt)`` removes an error in one step.
The integrator is cleared as soon as no turbine is saturated.  While all
turbines are saturated it holds (anti-windup) unless the farm is
over-producing, in which case it is allowed to unwind; a plain freeze would
lock a farm that saturated on an integrator overshoot at its greedy output
forever.  It also holds while every unsaturated turbine's demand is pinned at
the clamp the error pushes towards.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import DimensionMismatch, NegativeReference, UnknownCase

log = logging.getLogger(__name__)

ALPHA_TOLERANCE = 1e-9


class CaseSpec(NamedTuple):
    alpha: tuple[float, ...]
    feedback: bool
    greedy: bool


_CASES = {
    0: CaseSpec((1 / 3, 1 / 3, 1 / 3), feedback=False, greedy=False),
    1: CaseSpec((1 / 3, 1 / 3, 1 / 3), feedback=True, greedy=False),
    2: CaseSpec((1 / 2, 1 / 3, 1 / 6), feedback=True, greedy=False),
    3: CaseSpec((1 / 6, 1 / 3, 1 / 2), feedback=True, greedy=False),
    4: CaseSpec((1 / 3, 1 / 3, 1 / 3), feedback=False, greedy=True),
}


def select_case(case_id: int) -> CaseSpec:
    """Nominal split and loop configuration of the five three-turbine cases.

    0 is the open-loop baseline, 1-3 are closed loop with different splits and
    4 is individual greedy operation (no dispatch).
    """
    try:
        return _CASES[case_id]
    except KeyError:
        raise UnknownCase(f"unknown case {case_id!r}; expected one of {sorted(_CASES)}") from None


def normalize_alpha(alpha: Sequence[float]) -> tuple[float, ...]:
    if any(a < 0 for a in alpha):
        raise ValueError("alpha weights must be non-negative")
    total = math.fsum(alpha)
    if total <= 0:
        raise ValueError("alpha weights must not all be zero")
    if abs(total - 1.0) > ALPHA_TOLERANCE:
        log.warning("alpha sums to %.12g; normalising", total)
    return tuple(a / total for a in alpha)


@dataclass(frozen=True)
class FarmDispatchState:
    alpha: tuple[float, ...]
    k_i: float  # 1/s
    dt: float
    rated_power: float
    u: float = 0.0  # W
    e: float = 0.0  # W
    saturated: tuple[bool, ...] = ()
    feedback: bool = True
    # spread the correction over unsaturated turbines only (gain scaled by N / n_unsat)
    rescale_unsaturated: bool = False

    @property
    def n_turbines(self) -> int:
        return len(self.alpha)


def make_dispatch_state(alpha: Sequence[float], dt: float, rated_power: float = 10.0e6, *,
                        feedback: bool = True, rescale_unsaturated: bool = False) -> FarmDispatchState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    alpha = normalize_alpha(alpha)
    n = len(alpha)
    return FarmDispatchState(alpha=alpha, k_i=1.0 / (n * dt), dt=dt, rated_power=rated_power,
                             saturated=(False,) * n, feedback=feedback,
                             rescale_unsaturated=rescale_unsaturated)


def farm_step(r: float, p_gen: Sequence[float], saturated: Sequence[bool],
              state: FarmDispatchState) -> tuple[list[float], FarmDispatchState]:
    """One dispatch sample: returns per-turbine demands and the updated state."""
    n = state.n_turbines
    if len(p_gen) != n or len(saturated) != n:
        raise DimensionMismatch(f"expected {n} turbines, got {len(p_gen)} powers and {len(saturated)} flags")
    if r < 0:
        raise NegativeReference(f"farm reference must be non-negative, got {r}")

    e = r - math.fsum(p_gen)
    n_sat = sum(1 for s in saturated if s)
    u = state.u
    if not state.feedback or n_sat == 0:
        u = 0.0
    elif n_sat < n:
        # an unsaturated turbine whose demand already sits on a clamp cannot absorb
        # more correction in that direction; integrating through it is windup
        free = [a * r + u for a, s in zip(state.alpha, saturated) if not s]
        stuck = (e > 0 and all(d >= state.rated_power for d in free)) or (e < 0 and all(d <= 0.0 for d in free))
        if not stuck:
            gain = state.k_i * n / (n - n_sat) if state.rescale_unsaturated else state.k_i
            u = u + gain * e * state.dt
    elif e < 0:
        # all saturated but over-producing: integrating lowers every demand
        u = u + state.k_i * e * state.dt

    top = state.rated_power
    p_dem = [min(max(a * r + u, 0.0), top) for a in state.alpha]
    new = FarmDispatchState(state.alpha, state.k_i, state.dt, state.rated_power, u, e,
                            tuple(bool(s) for s in saturated), state.feedback, state.rescale_unsaturated)
    return p_dem, new
