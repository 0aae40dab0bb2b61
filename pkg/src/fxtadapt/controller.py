from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .estimator import AdaptationGains, EstimatorView, ParameterEstimator
from .plant import Box, NominalModel
from .qp import QuadraticProgram, solve
from .safety import BarrierFunction, DecisionLayout, LyapunovFunction, fxt_clf_row, racbf_row
from .schemas import ControllerKind, EstimatorConfig
from .simulate import ControlOutput

logger = logging.getLogger(__name__)

# (adapt theta_hat, envelope mode) per controller kind
ESTIMATOR_MODES = {
    "proposed": (True, "envelope"),
    "robust-baseline": (False, "frozen"),
    "certainty-equivalent": (True, "none"),
}


class ClfSource(Protocol):
    def reset(self) -> None: ...

    def __call__(self, t: float, x: np.ndarray) -> Tuple[LyapunovFunction, Optional[int]]: ...


@dataclass
class StaticClf:
    lf: LyapunovFunction

    def reset(self) -> None:
        return None

    def __call__(self, t: float, x: np.ndarray) -> Tuple[LyapunovFunction, Optional[int]]:
        return self.lf, None


@dataclass
class CbfQpController:
    """CLF-CBF-QP over w = [u; delta_0; delta_1..delta_q].

    Cost 1/2 u^T Q u + p0 delta_0^2 + sum p_i delta_i^2, one fixed-time CLF row,
    one robust-adaptive barrier row per barrier, input box on u and
    delta_min <= delta_i <= delta_max.
    """

    nominal: NominalModel
    barriers: List[BarrierFunction]
    clf: ClfSource
    Q: np.ndarray
    p0: float
    p: Sequence[float]
    delta_min: float = 1.0
    delta_max: float = 1e6
    max_iter_factor: int = 100
    _warm: Tuple[int, ...] = field(init=False, default=(), repr=False)

    def __post_init__(self) -> None:
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if len(self.p) != len(self.barriers):
            raise ValueError("one slack weight per barrier required")
        self.layout = DecisionLayout(self.nominal.m, len(self.barriers))
        d, m = self.layout.d, self.layout.m
        H = np.zeros((d, d))
        H[:m, :m] = self.Q
        H[m, m] = 2.0 * self.p0
        for i, weight in enumerate(self.p):
            H[self.layout.delta(i), self.layout.delta(i)] = 2.0 * weight
        self._H = H
        q = len(self.barriers)
        self._lb = np.concatenate([self.nominal.u_lo, [-np.inf], np.full(q, self.delta_min)])
        self._ub = np.concatenate([self.nominal.u_hi, [np.inf], np.full(q, self.delta_max)])

    def reset(self) -> None:
        self._warm = ()
        self.clf.reset()

    def build_qp(self, t: float, x: np.ndarray, view: EstimatorView):
        lf, phase = self.clf(t, x)
        rows = [fxt_clf_row(lf, x, self.nominal, view, self.layout)]
        rows += [
            racbf_row(bf, x, self.nominal, view, self.layout, i)
            for i, bf in enumerate(self.barriers)
        ]
        qp = QuadraticProgram(
            H=self._H,
            c=np.zeros(self.layout.d),
            A=np.array([r.coef for r in rows]),
            b=np.array([r.rhs for r in rows]),
            lb=self._lb,
            ub=self._ub,
        )
        return qp, rows, phase

    def compute(self, t: float, x: np.ndarray, view: EstimatorView) -> ControlOutput:
        qp, rows, phase = self.build_qp(t, x, view)
        sol = solve(qp, warm_start=self._warm, max_iter=self.max_iter_factor * self.layout.d)
        m = self.layout.m
        if sol.ok:
            self._warm = sol.working_set
            capped = sol.w_star[m + 1 :] >= self.delta_max * (1.0 - 1e-12)
            if np.any(capped):
                logger.warning("delta cap %.3g binding at t=%.4f", self.delta_max, t)
        else:
            self._warm = ()
        return ControlOutput(
            u=sol.w_star[:m].copy(),
            status=sol.status,
            slacks=sol.w_star[m:].copy(),
            barrier_values=np.array([r.value for r in rows[1:]]),
            margin_values=np.array([r.margin_value for r in rows[1:]]),
            lyapunov_value=rows[0].value,
            phase=phase,
        )


def full_box_view(gains: AdaptationGains, box: Box) -> EstimatorView:
    """Estimator view covering the whole admissible box with no adaptation."""
    return EstimatorView(
        theta_hat=box.center,
        eta=box.vartheta,
        eta_dot=0.0,
        Gamma=gains.Gamma,
        theta_box=box,
        activated=False,
    )


def robust_baseline_controller(
    controller: CbfQpController, t: float, x: np.ndarray, gains: AdaptationGains
) -> np.ndarray:
    """Worst-case control: the same QP evaluated over the entire box at all times."""
    out = controller.compute(t, x, full_box_view(gains, controller.nominal.theta_box))
    return out.u


def initial_estimate(cfg: EstimatorConfig, box: Box, seed: int) -> np.ndarray:
    if cfg.theta_hat0 == "center":
        return box.center
    if cfg.theta_hat0 == "random":
        return box.sample(np.random.default_rng(seed))
    theta = np.asarray(cfg.theta_hat0, dtype=float)
    if theta.shape != box.lo.shape:
        raise ValueError(f"theta_hat0 must have {box.p} entries")
    return theta


def build_estimator(
    kind: ControllerKind,
    cfg: EstimatorConfig,
    box: Box,
    gamma: float,
    seed: int = 0,
) -> ParameterEstimator:
    adapt, mode = ESTIMATOR_MODES[kind]
    gains = AdaptationGains(
        Gamma=gamma * np.eye(box.p),
        c1e=cfg.c1e,
        c2e=cfg.c2e,
        mu_e=cfg.mu_e,
        sigma=cfg.sigma,
        vartheta=box.vartheta,
    )
    return ParameterEstimator(
        gains=gains,
        theta_box=box,
        theta_hat0=initial_estimate(cfg, box, seed),
        k_e=cfg.k_e,
        ell_e=cfg.ell_e,
        law=cfg.law,
        adapt=adapt,
        envelope_mode=mode,
        substep_fraction=cfg.substep_fraction,
        max_substeps=cfg.max_substeps,
        dead_zone=cfg.dead_zone,
        rate_clamp=cfg.rate_clamp,
        cond_max=cfg.cond_max,
    )
