from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol, Sequence

import numpy as np

from .errors import ConfigError, SimulationDivergenceError
from .estimator import EstimatorView
from .integrate import rk4_step
from .plant import NominalModel, PlantModel, eval_dynamics
from .schemas import InfeasiblePolicy, QPStatus, Termination

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e9


@dataclass(frozen=True)
class ControlOutput:
    u: np.ndarray
    status: QPStatus = "optimal"
    slacks: Optional[np.ndarray] = None
    barrier_values: Optional[np.ndarray] = None
    margin_values: Optional[np.ndarray] = None
    lyapunov_value: float = float("nan")
    phase: Optional[int] = None


class Controller(Protocol):
    def reset(self) -> None: ...

    def compute(self, t: float, x: np.ndarray, view: EstimatorView) -> ControlOutput: ...


class EstimatorPolicy(Protocol):
    def reset(self, nominal: NominalModel, x0: np.ndarray) -> None: ...

    def pack(self) -> np.ndarray: ...

    def rates(self, x: np.ndarray, u: np.ndarray, z: np.ndarray) -> np.ndarray: ...

    def commit(self, t: float, z: np.ndarray, dt: float) -> None: ...

    def view(self, t: float) -> EstimatorView: ...

    def max_step(self) -> float: ...


@dataclass
class SimulationTrace:
    n: int
    m: int
    p: int
    q: int
    dt: float
    barrier_labels: List[str] = field(default_factory=list)
    times: List[float] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    controls: List[np.ndarray] = field(default_factory=list)
    estimates: List[np.ndarray] = field(default_factory=list)
    envelope: List[float] = field(default_factory=list)
    barrier_values: List[np.ndarray] = field(default_factory=list)
    margin_values: List[np.ndarray] = field(default_factory=list)
    lyapunov_values: List[float] = field(default_factory=list)
    qp_statuses: List[str] = field(default_factory=list)
    slacks: List[np.ndarray] = field(default_factory=list)
    phases: List[int] = field(default_factory=list)
    termination: Termination = "completed"
    activation_time: Optional[float] = None
    rate_clamp_count: int = 0

    def __len__(self) -> int:
        return len(self.times)

    def record(self, t: float, x: np.ndarray, u: np.ndarray, view: EstimatorView, out: ControlOutput, status: str) -> None:
        nan_q = np.full(self.q, np.nan)
        self.times.append(float(t))
        self.states.append(np.array(x, dtype=float))
        self.controls.append(np.array(u, dtype=float))
        self.estimates.append(np.array(view.theta_hat, dtype=float))
        self.envelope.append(float(view.eta))
        self.barrier_values.append(nan_q if out.barrier_values is None else np.array(out.barrier_values, dtype=float))
        self.margin_values.append(nan_q if out.margin_values is None else np.array(out.margin_values, dtype=float))
        self.lyapunov_values.append(float(out.lyapunov_value))
        self.qp_statuses.append(status)
        slacks = out.slacks if (out.slacks is not None and status == "optimal") else np.full(self.q + 1, np.nan)
        self.slacks.append(np.array(slacks, dtype=float))
        self.phases.append(0 if out.phase is None else int(out.phase))

    def array(self, name: str) -> np.ndarray:
        return np.array(getattr(self, name), dtype=float)


Observer = Callable[[float, np.ndarray, EstimatorPolicy], None]


def _step_count(t_final: float, dt: float) -> int:
    if dt <= 0 or t_final < 0:
        raise ConfigError("dt must be positive and t_final nonnegative")
    steps = int(round(t_final / dt))
    if abs(steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ConfigError(f"dt={dt} does not divide t_final={t_final}")
    return steps


def substep_count(dt: float, max_step: float) -> int:
    """RK4 sub-steps per control step so that each sub-step is at most max_step."""
    if max_step <= 0:
        raise ConfigError(f"max_step must be positive, got {max_step}")
    return max(1, int(math.ceil(dt / max_step - 1e-9)))


def simulate(
    model: PlantModel,
    controller: Controller,
    estimator: EstimatorPolicy,
    t_final: float,
    dt: float,
    x0: Sequence[float],
    on_infeasible: InfeasiblePolicy = "hold",
    barrier_labels: Optional[List[str]] = None,
    observer: Optional[Observer] = None,
) -> SimulationTrace:
    steps = _step_count(t_final, dt)
    substeps = substep_count(dt, estimator.max_step())
    h = dt / substeps
    if substeps > 1:
        logger.info("dt=%g split into %d RK4 sub-steps of %g", dt, substeps, h)
    labels = list(barrier_labels or [])
    n = model.n
    x = np.asarray(x0, dtype=float).reshape(n)
    nominal = model.nominal()

    estimator.reset(nominal, x)
    controller.reset()
    z = estimator.pack()
    u_prev = np.zeros(model.m)
    trace = SimulationTrace(n=n, m=model.m, p=model.p, q=len(labels), dt=dt, barrier_labels=labels)

    for k in range(steps + 1):
        t = k * dt
        view = estimator.view(t)
        out = controller.compute(t, x.copy(), view)
        status = out.status
        if status == "optimal":
            u = np.clip(np.asarray(out.u, dtype=float), model.u_lo, model.u_hi)
        else:
            logger.warning("qp %s at t=%.4f (%s)", status, t, on_infeasible)
            u = u_prev
        trace.record(t, x, u, view, out, status)
        if status != "optimal" and on_infeasible == "abort":
            trace.termination = "infeasible"
            break
        if k == steps:
            break

        def rate(tau: float, y: np.ndarray) -> np.ndarray:
            xs = y[:n]
            return np.concatenate([eval_dynamics(model, xs, u, tau), estimator.rates(xs, u, y[n:])])

        # u is held over the whole control step
        y = np.concatenate([x, z])
        try:
            for j in range(substeps):
                y = rk4_step(rate, t + j * h, y, h)
        except SimulationDivergenceError as exc:
            logger.error("%s", exc)
            trace.termination = "diverged"
            break
        if np.max(np.abs(y)) > DIVERGENCE_LIMIT:
            logger.error("state exceeded %.0e at t=%.4f", DIVERGENCE_LIMIT, t + dt)
            trace.termination = "diverged"
            break
        x, z = y[:n], y[n:]
        estimator.commit((k + 1) * dt, z, dt)
        u_prev = u
        if observer is not None:
            observer((k + 1) * dt, x, estimator)

    state = getattr(estimator, "state", None)
    trace.activation_time = getattr(state, "t_activate", None)
    trace.rate_clamp_count = int(getattr(estimator, "rate_clamp_count", 0))
    return trace
