from __future__ import annotations

from typing import Dict, Optional

import numpy as np

from .phases import OncomingSchedule, overtake_decision
from .scenario import Scenario
from .schemas import RunSummary
from .simulate import SimulationTrace

ENVELOPE_TOL = 1e-6
SETTLING_TOL = 1e-3
SAFETY_TOL = 1e-6


def _column_minima(values: np.ndarray, labels) -> Dict[str, float]:
    if not values.size:
        return {label: float("nan") for label in labels}
    return {label: float(np.nanmin(values[:, i])) for i, label in enumerate(labels)}


def estimation_error(trace: SimulationTrace, theta_true: np.ndarray) -> np.ndarray:
    """Per-sample infinity norm of theta_hat - theta."""
    if not len(trace):
        return np.zeros(0)
    return np.max(np.abs(trace.array("estimates") - theta_true), axis=1)


def envelope_violations(trace: SimulationTrace, theta_true: np.ndarray, tol: float = ENVELOPE_TOL) -> int:
    errors = estimation_error(trace, theta_true)
    if not errors.size:
        return 0
    return int(np.count_nonzero(errors > trace.array("envelope") + tol))


def settling_time(trace: SimulationTrace, theta_true: np.ndarray, tol: float = SETTLING_TOL) -> Optional[float]:
    """Time from activation until the estimate enters and stays in the tol ball."""
    if trace.activation_time is None or not len(trace):
        return None
    times = np.asarray(trace.times)
    errors = estimation_error(trace, theta_true)
    after = times >= trace.activation_time - 1e-12
    outside = np.nonzero(after & (errors > tol))[0]
    if outside.size == 0:
        return 0.0
    last = outside[-1]
    if last + 1 >= len(times):
        return None
    return float(times[last + 1] - trace.activation_time)


def summarize(scenario: Scenario, trace: SimulationTrace) -> RunSummary:
    theta_true = scenario.model.theta_true
    completion = scenario.completion_time(trace)
    check_envelope = scenario.kind != "certainty-equivalent"

    decision = None
    if scenario.scenario == "overtake":
        schedule = scenario.extras.get("schedule") or OncomingSchedule()
        decision = overtake_decision(completion, schedule)

    passed = scenario.extras.get("passed_gap")
    scheduler = scenario.extras.get("scheduler")

    return RunSummary(
        scenario=scenario.scenario,
        controller=scenario.kind,
        theta_bar=scenario.theta_bar,
        dt=scenario.dt,
        completion_time=completion,
        goal_reached=completion is not None,
        min_barrier=_column_minima(trace.array("barrier_values"), trace.barrier_labels),
        min_barrier_margin=_column_minima(trace.array("margin_values"), trace.barrier_labels),
        activation_time=trace.activation_time,
        settling_time=settling_time(trace, theta_true),
        envelope_violations=envelope_violations(trace, theta_true) if check_envelope else 0,
        infeasible_steps=sum(1 for status in trace.qp_statuses if status != "optimal"),
        rate_clamp_count=trace.rate_clamp_count,
        decision=decision,
        termination=trace.termination,
        passed_gap=passed(trace) if passed else None,
        phase_entry_times=list(scheduler.entry_times) if scheduler else [],
        steps=len(trace),
    )


def safety_violated(summary: RunSummary, tol: float = SAFETY_TOL) -> bool:
    minima = [v for v in summary.min_barrier.values() if np.isfinite(v)]
    return summary.envelope_violations > 0 or any(v < -tol for v in minima)
