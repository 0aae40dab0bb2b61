import numpy as np
import pytest

from fxtadapt.phases import (
    OncomingSchedule,
    PhasePlan,
    PhaseScheduler,
    initial_phase,
    overtake_decision,
    phase_manager,
)
from fxtadapt.schemas import OvertakeConfig

LEAD = np.array([100.0, 1.5, 0.0, 19.0])


def _plan():
    return PhasePlan.from_config(OvertakeConfig())


@pytest.mark.parametrize(
    "T, expected",
    [(20.0, "go-now"), (24.0, "go-now"), (26.80, "go-after-1"), (30.0, "go-after-1"), (30.38, "no-go")],
)
def test_decision_thresholds(T, expected):
    assert overtake_decision(T, OncomingSchedule()) == expected


def test_decision_without_completion_is_no_go():
    assert overtake_decision(None, OncomingSchedule()) == "no-go"


def test_decision_rejects_nonpositive_horizon():
    with pytest.raises(ValueError):
        overtake_decision(0.0, OncomingSchedule())


def test_oncoming_schedule():
    schedule = OncomingSchedule()
    assert schedule.arrival(1) == 24.0
    assert schedule.arrival(2) == 54.0


def test_horizons_sum_and_gains():
    plan = _plan()
    assert sum(plan.horizons) == 20.0
    assert plan.gains(1) == pytest.approx(5.0 * np.pi / 6.0)
    assert plan.gains(3) == pytest.approx(5.0 * np.pi / 14.0)


def test_phase_targets():
    plan = _plan()
    ego = np.array([20.0, 3.0, 0.0, 25.0])
    z = np.concatenate([ego, LEAD])
    s_x = 1.8 * 25.0 + 4.81
    assert plan.s_x(z) == pytest.approx(s_x)

    assert plan.desired_v(1, z) == pytest.approx(21.0)
    assert plan.desired_x(1, z) == pytest.approx(LEAD[0] - s_x - 4.81)
    assert plan.desired_v(2, z) == 29.0
    assert np.isnan(plan.desired_x(2, z))
    assert plan.desired_x(3, z) == pytest.approx(LEAD[0] + 2.0 * s_x)
    assert plan.desired_v(4, z) == 24.0
    assert [goal.y_d for goal in plan.goals] == [1.5, 4.5, 4.5, 1.5]

    slower = LEAD.copy()
    slower[3] = 15.0
    phase = initial_phase(plan, np.concatenate([ego, slower]))
    assert phase.z_d[3] == pytest.approx(17.0)


def test_goal_reached_advances_phase():
    plan = _plan()
    v_d = LEAD[3] + 2.0
    s_x = plan.s_x(np.concatenate([[0, 1.5, 0, v_d], LEAD]))
    ego = np.array([LEAD[0] - s_x - plan.l_c, 1.5, 0.0, v_d])
    phase = initial_phase(plan, np.concatenate([np.array([0.0, 1.5, 0.0, 24.0]), LEAD]))
    assert plan.lyapunov(1).V(np.concatenate([ego, LEAD])) < 0.0
    nxt = phase_manager(phase, ego, LEAD, 2.1, plan)
    assert nxt.index == 2
    assert nxt.entry_time == 2.1
    assert nxt.deadline == pytest.approx(2.1 + 5.0)


def test_deadline_advances_phase():
    plan = _plan()
    far = np.array([-200.0, 1.5, 0.0, 10.0])
    phase = initial_phase(plan, np.concatenate([far, LEAD]))
    assert phase_manager(phase, far, LEAD, 2.0, plan).index == 1
    assert phase_manager(phase, far, LEAD, 3.0, plan).index == 2


def test_completion_requires_passing_lead():
    plan = _plan()
    ego_behind = np.array([LEAD[0] - 50.0, 1.5, 0.0, 24.0])
    ego_ahead = np.array([LEAD[0] + 50.0, 1.5, 0.0, 24.0])
    phase = initial_phase(plan, np.concatenate([ego_behind, LEAD]))
    for t in (1.0, 2.0, 3.0):
        phase = phase_manager(phase, ego_behind, LEAD, t * 10, plan)
    assert phase.index == 4
    assert phase_manager(phase, ego_behind, LEAD, 31.0, plan).completed_at is None
    done = phase_manager(phase, ego_ahead, LEAD, 32.0, plan)
    assert done.completed_at == 32.0
    assert phase_manager(done, ego_ahead, LEAD, 33.0, plan).completed_at == 32.0


def test_scheduler_never_regresses():
    scheduler = PhaseScheduler(_plan())
    scheduler.reset()
    rng = np.random.default_rng(0)
    seen = []
    for k in range(200):
        ego = np.array([rng.uniform(-80, 120), rng.uniform(1, 5), 0.0, rng.uniform(15, 30)])
        _, index = scheduler(0.1 * k, np.concatenate([ego, LEAD]))
        seen.append(index)
    assert all(b >= a for a, b in zip(seen, seen[1:]))
    assert len(scheduler.entry_times) == seen[-1]
    scheduler.reset()
    assert scheduler.completed_at is None
    assert scheduler.entry_times == []
