import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windapc.errors import DimensionMismatch, NegativeReference, UnknownCase
from windapc.farm_ctrl import farm_step, make_dispatch_state, normalize_alpha, select_case

THIRD = (1 / 3, 1 / 3, 1 / 3)


def test_gain_and_alpha_normalisation():
    s = make_dispatch_state(THIRD, 0.1)
    assert s.k_i == pytest.approx(1 / 0.3)
    assert math.fsum(s.alpha) == pytest.approx(1.0, abs=1e-15)


def test_alpha_warns_when_renormalised(caplog):
    assert normalize_alpha([2, 1, 1]) == (0.5, 0.25, 0.25)
    assert "normalising" in caplog.text
    with pytest.raises(ValueError):
        normalize_alpha([1, -1, 1])


def test_uniform_split_no_saturation():
    s = make_dispatch_state(THIRD, 0.1)
    p_dem, s = farm_step(10e6, [3e6, 3e6, 3e6], [False] * 3, s)
    assert p_dem == pytest.approx([10e6 / 3] * 3)
    assert s.u == 0.0


def test_integrator_increment_with_one_saturated():
    s = make_dispatch_state(THIRD, 0.1)
    p_dem, s = farm_step(10e6, [3e6, 3e6, 3e6], [True, False, False], s)
    assert s.u == pytest.approx(333_333.33, abs=0.01)
    assert [p - 10e6 / 3 for p in p_dem] == pytest.approx([333_333.33] * 3, abs=0.01)
    # the two unsaturated turbines supply +666.7 kW of it
    assert 2 * s.u == pytest.approx(666_666.67, abs=0.01)


def test_anti_windup_freeze():
    s = make_dispatch_state(THIRD, 0.1)
    _, s = farm_step(10e6, [3e6, 3e6, 3e6], [True, False, False], s)
    frozen = s.u
    for _ in range(100):
        _, s = farm_step(12e6, [3e6, 3e6, 3e6], [True] * 3, s)
        assert s.u == frozen


def test_reset_when_none_saturated():
    s = make_dispatch_state(THIRD, 0.1)
    _, s = farm_step(10e6, [3e6, 3e6, 3e6], [True, False, False], s)
    assert s.u != 0.0
    _, s = farm_step(10e6, [3e6, 3e6, 3e6], [False] * 3, s)
    assert s.u == 0.0


def test_open_loop_ignores_error():
    s = make_dispatch_state((0.5, 1 / 3, 1 / 6), 0.1, feedback=False)
    for sat in ([True, False, False], [True] * 3, [False] * 3):
        p_dem, s = farm_step(9e6, [1e6, 1e6, 1e6], sat, s)
        assert p_dem == [a * 9e6 for a in s.alpha]
        assert s.u == 0.0


def test_demand_clamped():
    s = make_dispatch_state(THIRD, 0.1)
    p_dem, _ = farm_step(40e6, [0.0, 0.0, 0.0], [True, False, False], s)
    assert max(p_dem) == 10e6
    s = make_dispatch_state(THIRD, 0.1)
    p_dem, _ = farm_step(0.0, [5e6, 5e6, 5e6], [True, False, False], s)
    assert min(p_dem) == 0.0


def test_errors():
    s = make_dispatch_state(THIRD, 0.1)
    with pytest.raises(DimensionMismatch):
        farm_step(1e6, [0.0, 0.0], [False] * 3, s)
    with pytest.raises(NegativeReference):
        farm_step(-1.0, [0.0] * 3, [False] * 3, s)


def test_select_case():
    assert select_case(3).alpha == pytest.approx((0.167, 0.333, 0.500), abs=1e-3)
    assert select_case(3).feedback
    assert select_case(4).greedy
    assert not select_case(0).feedback
    assert select_case(2).alpha == pytest.approx((0.5, 0.333, 0.167), abs=1e-3)
    with pytest.raises(UnknownCase):
        select_case(7)


@settings(max_examples=200, deadline=None)
@given(
    r=st.floats(0, 30e6),
    p=st.lists(st.floats(0, 10e6), min_size=3, max_size=3),
    sat=st.lists(st.booleans(), min_size=3, max_size=3),
    u0=st.floats(-5e6, 5e6),
)
def test_bookkeeping_identity(r, p, sat, u0):
    s = dataclasses.replace(make_dispatch_state(THIRD, 0.1), u=u0)
    _, s = farm_step(r, p, sat, s)
    assert s.e == r - math.fsum(p)
    unclamped = [a * r + s.u for a in s.alpha]
    assert math.fsum(unclamped) == pytest.approx(r + 3 * s.u, rel=1e-12, abs=1e-3)


@settings(max_examples=100, deadline=None)
@given(
    pattern=st.lists(st.lists(st.booleans(), min_size=3, max_size=3).filter(lambda x: not all(x)),
                     min_size=1, max_size=200),
    r=st.floats(0, 30e6),
)
def test_bibo_with_unsaturated_turbine(pattern, r):
    """Delay-stub turbines; saturated ones are stuck at 2 MW. u stays bounded."""
    s = make_dispatch_state(THIRD, 0.1)
    p_gen = [0.0, 0.0, 0.0]
    bound = 2 * 30e6 + 1e7
    for sat in pattern:
        p_dem, s = farm_step(r, p_gen, sat, s)
        p_gen = [2e6 if z else d for z, d in zip(sat, p_dem)]
        assert abs(s.u) <= bound


def _delay_stub_errors(refs, sat=(False, False, False), stuck=None):
    """Turbines with P_gen[k+1] = P_dem[k]; a turbine index in ``stuck`` holds its output."""
    s = make_dispatch_state(THIRD, 0.1)
    p_gen = [refs[0] / 3] * 3
    errors = []
    for r in refs:
        p_dem, s = farm_step(r, p_gen, sat, s)
        errors.append(s.e)
        p_gen = [p_gen[i] if stuck is not None and i == stuck else p_dem[i] for i in range(3)]
    return errors


def test_one_step_elimination_against_delay_stub():
    errors = _delay_stub_errors([9e6, 9e6, 10.5e6, 10.5e6, 10.5e6, 7.5e6, 7.5e6])
    assert errors[2] == 1.5e6
    assert errors[3] == 0.0
    assert errors[5] == -3e6
    assert errors[6] == 0.0


@settings(max_examples=200, deadline=None)
@given(r0=st.floats(0, 30e6), r1=st.floats(0, 30e6))
def test_one_step_elimination_random_steps(r0, r1):
    errors = _delay_stub_errors([r0, r0, r1, r1])
    assert abs(errors[3]) <= 4 * math.ulp(max(r1, 1.0))


def test_integrator_rejects_stuck_turbine():
    # turbine 1 is saturated and stuck below its share; the other two absorb the deficit
    s = make_dispatch_state(THIRD, 0.1)
    p_gen = [2e6, 10e6 / 3, 10e6 / 3]
    errors = []
    for _ in range(60):
        p_dem, s = farm_step(10e6, p_gen, [True, False, False], s)
        errors.append(s.e)
        p_gen = [2e6, p_dem[1], p_dem[2]]
    assert errors[0] == pytest.approx(10e6 / 3 - 2e6)
    # geometric decay with ratio 1 - 2/3
    assert errors[1] == pytest.approx(errors[0] / 3, rel=1e-9)
    assert abs(errors[-1]) < 1e-3


def test_hold_when_unsaturated_demands_are_pinned_at_rated():
    s = dataclasses.replace(make_dispatch_state(THIRD, 0.1), u=7e6)
    p_dem, s2 = farm_step(20e6, [10e6, 4e6, 4e6], [False, True, True], s)
    assert p_dem[0] == 10e6
    assert s2.u == 7e6
    # the same error with headroom left on the unsaturated turbine integrates
    s = dataclasses.replace(s, u=1e6)
    _, s3 = farm_step(20e6, [7e6, 4e6, 4e6], [False, True, True], s)
    assert s3.u == pytest.approx(1e6 + 5e6 / 3)


def test_unwinds_when_all_saturated_and_overproducing():
    s = dataclasses.replace(make_dispatch_state(THIRD, 0.1), u=3e6)
    _, s = farm_step(10e6, [4e6, 4e6, 4e6], [True] * 3, s)
    assert s.u == pytest.approx(3e6 - 2e6 / 3)
