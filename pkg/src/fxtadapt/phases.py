"""Four-phase overtake sequencing: approach, merge out, advance, merge back."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .safety import LyapunovFunction
from .schemas import Decision, OvertakeConfig

logger = logging.getLogger(__name__)

# composite state layout: ego (x, y, psi, v) then lead (x, y, psi, v)
XE, YE, PE, VE, XL, YL, PL, VL = range(8)


@dataclass(frozen=True)
class PhaseGoal:
    y_d: float
    v_d: float = 0.0
    psi_d: float = 0.0
    # v_d = v_l + v_lead_offset when set
    v_lead_offset: Optional[float] = None
    # x_d = x_l + x_sign * s_x + x_offset; None leaves x free
    x_sign: Optional[float] = None
    x_offset: float = 0.0


@dataclass(frozen=True)
class PhasePlan:
    goals: Tuple[PhaseGoal, PhaseGoal, PhaseGoal, PhaseGoal]
    horizons: Tuple[float, float, float, float]
    K_V: float
    k_x: float
    k_y: float
    k_theta: float
    k_v: float
    mu: float
    tau: float
    l_c: float

    @classmethod
    def from_config(cls, cfg: OvertakeConfig) -> "PhasePlan":
        goals = (
            PhaseGoal(y_d=cfg.lane_right, v_lead_offset=cfg.approach_margin, x_sign=-1.0, x_offset=-cfg.l_c),
            PhaseGoal(y_d=cfg.lane_left, v_d=cfg.v_cruise),
            PhaseGoal(y_d=cfg.lane_left, v_d=cfg.v_cruise, x_sign=2.0),
            PhaseGoal(y_d=cfg.lane_right, v_d=cfg.v_return),
        )
        return cls(
            goals=goals,
            horizons=tuple(cfg.horizons),
            K_V=cfg.K_V,
            k_x=cfg.k_x,
            k_y=cfg.k_y,
            k_theta=cfg.k_theta,
            k_v=cfg.k_v,
            mu=cfg.mu,
            tau=cfg.tau,
            l_c=cfg.l_c,
        )

    def gains(self, index: int) -> float:
        """c1 = c2 = mu pi / (2 T_k)."""
        return self.mu * np.pi / (2.0 * self.horizons[index - 1])

    def s_x(self, z: np.ndarray) -> float:
        return self.tau * z[VE] * np.cos(z[PE]) + self.l_c

    def desired_x(self, index: int, z: np.ndarray) -> float:
        goal = self.goals[index - 1]
        if goal.x_sign is None:
            return float("nan")
        return float(z[XL] + goal.x_sign * self.s_x(z) + goal.x_offset)

    def desired_v(self, index: int, z: np.ndarray) -> float:
        goal = self.goals[index - 1]
        if goal.v_lead_offset is None:
            return goal.v_d
        return float(z[VL] + goal.v_lead_offset)

    def lyapunov(self, index: int) -> LyapunovFunction:
        goal = self.goals[index - 1]
        plan = self
        k_x = self.k_x if goal.x_sign is not None else 0.0

        def errors(z: np.ndarray) -> Tuple[float, float, float, float]:
            x_bar = 0.0 if goal.x_sign is None else z[XE] - plan.desired_x(index, z)
            return x_bar, z[YE] - goal.y_d, z[PE] - goal.psi_d, z[VE] - plan.desired_v(index, z)

        def V(z: np.ndarray) -> float:
            xb, yb, pb, vb = errors(z)
            return float(
                plan.K_V
                * (k_x * xb**2 + plan.k_y * yb**2 + plan.k_theta * pb**2 + plan.k_v * vb**2 - 1.0)
            )

        def grad_V(z: np.ndarray) -> np.ndarray:
            xb, yb, pb, vb = errors(z)
            grad = np.zeros(8)
            grad[YE] = 2.0 * plan.k_y * yb
            grad[PE] = 2.0 * plan.k_theta * pb
            grad[VE] = 2.0 * plan.k_v * vb
            if goal.v_lead_offset is not None:
                grad[VL] = -2.0 * plan.k_v * vb
            if goal.x_sign is not None:
                # x_bar = x_e - x_l - sign * (tau v cos psi + l_c) - offset
                s = goal.x_sign
                gx = 2.0 * k_x * xb
                grad[XE] += gx
                grad[XL] -= gx
                grad[VE] -= gx * s * plan.tau * np.cos(z[PE])
                grad[PE] += gx * s * plan.tau * z[VE] * np.sin(z[PE])
            return plan.K_V * grad

        c = self.gains(index)
        return LyapunovFunction(
            V=V, grad_V=grad_V, c1=c, c2=c, gamma1=1.0 - 1.0 / self.mu, gamma2=1.0 + 1.0 / self.mu
        )


@dataclass(frozen=True)
class PhaseState:
    index: int
    entry_time: float
    z_d: np.ndarray
    deadline: float
    completed_at: Optional[float] = None


def initial_phase(plan: PhasePlan, z: np.ndarray, t: float = 0.0) -> PhaseState:
    return PhaseState(index=1, entry_time=t, z_d=_z_d(plan, 1, z), deadline=t + plan.horizons[0])


def _z_d(plan: PhasePlan, index: int, z: np.ndarray) -> np.ndarray:
    goal = plan.goals[index - 1]
    return np.array([plan.desired_x(index, z), goal.y_d, goal.psi_d, plan.desired_v(index, z)])


def phase_manager(phase: PhaseState, z_e: np.ndarray, z_l: np.ndarray, t: float, plan: PhasePlan) -> PhaseState:
    z = np.concatenate([z_e, z_l])
    reached = plan.lyapunov(phase.index).V(z) <= 0.0
    if phase.index < 4 and (reached or t >= phase.deadline):
        index = phase.index + 1
        logger.info(
            "phase %d -> %d at t=%.3f (%s)", phase.index, index, t, "goal" if reached else "deadline"
        )
        return PhaseState(
            index=index,
            entry_time=t,
            z_d=_z_d(plan, index, z),
            deadline=t + plan.horizons[index - 1],
        )
    completed_at = phase.completed_at
    if phase.index == 4 and completed_at is None and reached and z_e[0] > z_l[0]:
        completed_at = t
        logger.info("overtake complete at t=%.3f", t)
    return replace(phase, z_d=_z_d(plan, phase.index, z), completed_at=completed_at)


@dataclass
class PhaseScheduler:
    """Per-simulation phase latch feeding the controller its current CLF."""

    plan: PhasePlan
    state: Optional[PhaseState] = None
    entry_times: List[float] = field(default_factory=list)

    def reset(self) -> None:
        self.state = None
        self.entry_times = []

    def __call__(self, t: float, z: np.ndarray) -> Tuple[LyapunovFunction, Optional[int]]:
        if self.state is None:
            self.state = initial_phase(self.plan, z, t)
            self.entry_times = [t]
        else:
            previous = self.state.index
            self.state = phase_manager(self.state, z[:4], z[4:], t, self.plan)
            if self.state.index != previous:
                self.entry_times.append(t)
        return self.plan.lyapunov(self.state.index), self.state.index

    @property
    def completed_at(self) -> Optional[float]:
        return None if self.state is None else self.state.completed_at


@dataclass(frozen=True)
class OncomingSchedule:
    first: float = 24.0
    interval: float = 30.0

    def arrival(self, i: int) -> float:
        """Arrival time of oncoming vehicle i (1-based)."""
        return self.first + self.interval * (i - 1)


def overtake_decision(T_controller: Optional[float], schedule: OncomingSchedule) -> Decision:
    if T_controller is None or not np.isfinite(T_controller):
        return "no-go"
    if T_controller <= 0:
        raise ValueError("overtake horizon must be positive")
    if T_controller <= schedule.first:
        return "go-now"
    if T_controller <= schedule.interval:
        return "go-after-1"
    return "no-go"
