"""Scenario engine.

Per step ``k``: free-stream and wake-deficit wind at each rotor, aerodynamic
state and induction (pushed into the wake delay lines), farm dispatch from the
powers produced at ``k``, per-turbine control, then one drivetrain step.  The
torque commanded at ``k`` is held until ``k + 1`` and the power logged at
``k + 1`` is that torque times the new speed, so an unsaturated turbine
returns ``P_gen[k+1] = P_dem[k] * w[k+1] / w[k]``.
"""
from __future__ import annotations

import math

from ..errors import ModelError, RotorStopped
from ..farm_ctrl import farm_step, make_dispatch_state, select_case
from ..flow import (
    FlowConfig, FreeStream, WakeBuffer, combined_deficit, effective_wind, jensen_deficit,
)
from ..turbine import (
    ROTOR_SPEED_GUARD, Mode, available_power, greedy_equilibrium, step_drivetrain,
    surfaces,
)
from ..turbine_ctrl import ControlFlag, TurbineController
from .config import ScenarioConfig
from .metrics import Metrics, compute_metrics
from .records import StepRecord, TurbineRecord


class SimulationError(ModelError):
    """A model or controller error, tagged with the step at which it happened."""

    def __init__(self, step: int, t: float, cause: Exception):
        super().__init__(f"step {step} (t = {t:.1f} s): {cause}")
        self.step = step
        self.t = t
        self.cause = cause


def _initial_states(cfg: ScenarioConfig, params, controller: TurbineController, free: FreeStream):
    """Greedy equilibria computed front to back, plus the inductions they imply."""
    flow = cfg.flow
    states, inductions = [], []
    for i in range(cfg.n_turbines):
        terms = [jensen_deficit(inductions[j], flow.positions[i] - flow.positions[j], flow.wake_decay)
                 for j in range(i)]
        u0 = free(i, 0) * (1.0 - combined_deficit(terms))
        st = greedy_equilibrium(u0, params, torque_law=controller.curve.torque)
        lam = st.rotor_speed * params.rotor_radius / u0
        inductions.append(surfaces(lam, st.pitch, params).induction)
        states.append(st)
    return states, inductions


def run_scenario(cfg: ScenarioConfig, *, demand_override=None) -> tuple[list[StepRecord], Metrics]:
    """Simulate ``cfg`` and return the step log and its metrics.

    Single-turbine scenarios feed the reference straight through as the
    demand.  ``demand_override(k, t) -> list[W] | None`` replaces the dispatch
    for testing.

    Raises:
        SimulationError: wrapping any model error, with the step index.
    """
    records = simulate(cfg, demand_override=demand_override)
    return records, compute_metrics(records, transient=cfg.transient)


def simulate(cfg: ScenarioConfig, *, demand_override=None) -> list[StepRecord]:
    n = cfg.n_turbines
    dt = cfg.dt
    n_steps = cfg.n_steps
    params = cfg.turbine_params()
    controllers = [TurbineController(cfg.controller, cfg.mode) for _ in range(n)]
    ctl0 = controllers[0]
    free = FreeStream(cfg.flow, n_steps, dt)
    states, inductions = _initial_states(cfg, params, ctl0, free)
    ctrl_states = [c.initial_state(s.gen_speed(params), s.pitch, s.gen_torque)
                   for c, s in zip(controllers, states)]
    wakes = WakeBuffer(inductions, cfg.flow.positions, cfg.flow.rotor_diameter, cfg.flow.u_mean, dt)

    greedy = False
    if n == 1:
        dispatch = None
    else:
        if cfg.case is not None:
            spec = select_case(cfg.case)
            alpha = cfg.alpha if cfg.alpha is not None else spec.alpha
            feedback, greedy = spec.feedback, spec.greedy
        else:
            alpha, feedback = cfg.alpha, True
        dispatch = make_dispatch_state(alpha, dt, cfg.controller.rated_power, feedback=feedback,
                                       rescale_unsaturated=cfg.dispatch_rescale)

    half_rho_a = 0.5 * params.air_density * params.rotor_area
    radius = params.rotor_radius
    gear = params.gearbox_ratio
    rated = cfg.controller.rated_power
    flow: FlowConfig = cfg.flow
    records: list[StepRecord] = []

    for k in range(n_steps):
        t = k * dt
        try:
            r = cfg.reference_at(t)
            winds, points = [], []
            for i in range(n):
                u = effective_wind(i, k, free(i, k), wakes, flow)
                st = states[i]
                pt = surfaces(st.rotor_speed * radius / u, st.pitch, params)
                wakes.push(i, pt.induction)
                winds.append(u)
                points.append(pt)

            p_gen = [s.gen_power for s in states]
            sat = [cs.mode is Mode.GREEDY_FALLBACK for cs in ctrl_states]
            override = demand_override(k, t) if demand_override is not None else None
            if override is not None:
                p_dem, u_int, e = list(override), 0.0, r - math.fsum(p_gen)
            elif dispatch is None:
                p_dem, u_int, e = [r], 0.0, r - math.fsum(p_gen)
            elif greedy:
                p_dem, u_int, e = [rated] * n, 0.0, r - math.fsum(p_gen)
            else:
                p_dem, dispatch = farm_step(r, p_gen, sat, dispatch)
                u_int, e = dispatch.u, dispatch.e

            turb_recs = []
            new_states = []
            for i in range(n):
                st, u, pt = states[i], winds[i], points[i]
                thrust = half_rho_a * pt.ct * u * u
                turb_recs.append(TurbineRecord(u, st.rotor_speed, st.pitch, st.gen_torque, p_dem[i],
                                               st.gen_power, thrust, ctrl_states[i].mode, sat[i]))
                if st.rotor_speed <= ROTOR_SPEED_GUARD:
                    raise RotorStopped(f"turbine {i + 1} rotor speed {st.rotor_speed:.4g} rad/s")
                w_gen = st.rotor_speed * gear
                cmd, ctrl_states[i] = controllers[i].step(ctrl_states[i], p_dem[i], w_gen,
                                                          available_power(u, params), dt)
                tau_aero = half_rho_a * pt.cp * u ** 3 / st.rotor_speed
                new_states.append(step_drivetrain(st, tau_aero, cmd.torque, dt, params, pitch=cmd.pitch,
                                                  thrust=thrust, mode=ctrl_states[i].mode))
            records.append(StepRecord(t, tuple(turb_recs), r, math.fsum(p_gen), e, u_int))
            states = new_states
        except ModelError as exc:
            raise SimulationError(k, t, exc) from exc
    return records


def step_test(cfg: ScenarioConfig, flag: ControlFlag | None = None, ti: float = 0.0) -> list[StepRecord]:
    """Single turbine in uniform inflow following a low-high-low demand schedule."""
    st = cfg.steptest
    flow = FlowConfig(u_mean=st.wind, ti=ti, positions=(0.0,), rotor_diameter=cfg.flow.rotor_diameter,
                      wake_decay=cfg.flow.wake_decay, correlation_time=cfg.flow.correlation_time,
                      seed=cfg.flow.seed)
    single = cfg.replace(n_turbines=1, case=None, alpha=None, flow=flow, reference=st.schedule(),
                         duration=st.duration, mode=flag or cfg.mode)
    return simulate(single)


def step_test_suite(cfg: ScenarioConfig) -> dict[tuple[str, float], list[StepRecord]]:
    """Step test for both control modes at 0 % and 5 % turbulence intensity."""
    out = {}
    for flag in (ControlFlag.MODE_I, ControlFlag.MODE_II):
        for ti in (0.0, 0.05):
            out[(flag.value, ti)] = step_test(cfg, flag, ti)
    return out

