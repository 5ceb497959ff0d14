"""Invariant checks over a simulation log."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from ..turbine import Mode
from .config import ScenarioConfig
from .engine import simulate
from .records import StepRecord

RATE_SLACK = 1e-9  # relative, absorbs float rounding in the limiter


@dataclass
class Report:
    violations: list[str] = field(default_factory=list)
    checked: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def fail(self, check: str, k: int, msg: str, limit: int = 5):
        if sum(1 for v in self.violations if v.startswith(check)) < limit:
            self.violations.append(f"{check}: step {k}: {msg}")


def rate_violations(records: Sequence[StepRecord], dt: float, max_torque_rate: float,
                    max_pitch_rate: float) -> list[tuple[int, int, str, float]]:
    """(step, turbine, quantity, rate) for every sample exceeding a rate limit."""
    out = []
    tau_lim = max_torque_rate * dt * (1 + RATE_SLACK)
    pitch_lim = max_pitch_rate * dt * (1 + RATE_SLACK)
    for k in range(1, len(records)):
        for i, (a, b) in enumerate(zip(records[k - 1].turbines, records[k].turbines)):
            if abs(b.tau_gen - a.tau_gen) > tau_lim:
                out.append((k, i, "torque", (b.tau_gen - a.tau_gen) / dt))
            if abs(b.pitch - a.pitch) > pitch_lim:
                out.append((k, i, "pitch", (b.pitch - a.pitch) / dt))
    return out


def check_records(records: Sequence[StepRecord], cfg: ScenarioConfig) -> Report:
    rep = Report()
    ctl = cfg.controller
    params = cfg.turbine_params()
    scale = params.gearbox_ratio * params.generator_efficiency

    rep.checked.append("rate limits")
    for k, i, what, rate in rate_violations(records, cfg.dt, ctl.max_torque_rate, ctl.max_pitch_rate):
        rep.fail("rate limits", k, f"turbine {i + 1} {what} rate {rate:.6g}")

    rep.checked += ["pitch bounds", "power identity", "bookkeeping", "saturation coherence"]
    for k, rec in enumerate(records):
        p_sum = math.fsum(tr.p_gen for tr in rec.turbines)
        if rec.p_bar != p_sum:
            rep.fail("bookkeeping", k, f"P_bar {rec.p_bar!r} != sum P_gen {p_sum!r}")
        if rec.e != rec.r - p_sum:
            rep.fail("bookkeeping", k, f"e {rec.e!r} != r - sum P_gen {rec.r - p_sum!r}")
        for i, tr in enumerate(rec.turbines):
            if not ctl.theta_fine - 1e-9 <= tr.pitch <= ctl.theta_max:
                rep.fail("pitch bounds", k, f"turbine {i + 1} pitch {tr.pitch:.6g}")
            expect = tr.tau_gen * tr.omega_r * scale
            if not math.isclose(tr.p_gen, expect, rel_tol=1e-12, abs_tol=1e-6):
                rep.fail("power identity", k, f"turbine {i + 1} P_gen {tr.p_gen:.9g} vs {expect:.9g}")
            if tr.saturated != (tr.mode is Mode.GREEDY_FALLBACK):
                rep.fail("saturation coherence", k, f"turbine {i + 1} sat={tr.saturated} mode={tr.mode.value}")
    return rep


def validate(cfg: ScenarioConfig) -> Report:
    """Run ``cfg`` twice and check the invariants plus run-to-run determinism."""
    first = simulate(cfg)
    rep = check_records(first, cfg)
    rep.checked.append("determinism")
    second = simulate(cfg)
    if first != second:
        k = next((j for j, (a, b) in enumerate(zip(first, second)) if a != b), min(len(first), len(second)))
        rep.fail("determinism", k, "repeated run differs")
    return rep
