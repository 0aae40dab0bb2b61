"""Shoot the Gap: a single integrator with sinusoidal uncertainty must slip
between two long ellipses whose tips almost touch on its way to the origin."""

from __future__ import annotations

from typing import List, Optional

import numpy as np

from .controller import CbfQpController, StaticClf, build_estimator
from .errors import ConfigError
from .estimator import auto_gamma
from .plant import Box, PlantModel
from .safety import BarrierFunction, LyapunovFunction
from .scenario import Scenario
from .schemas import ControllerKind, ExperimentConfig, GapConfig
from .simulate import SimulationTrace

TWO_PI = 2.0 * np.pi


def gap_model(cfg: GapConfig, theta_bar: float) -> PlantModel:
    K, f1, f2 = cfg.K_delta, cfg.f1, cfg.f2

    def f(x: np.ndarray) -> np.ndarray:
        return np.zeros(2)

    def g(x: np.ndarray) -> np.ndarray:
        return np.eye(2)

    def delta(x: np.ndarray) -> np.ndarray:
        return K * np.diag(
            [
                1.0 + np.sin(TWO_PI * f1 * x[0]) ** 2,
                1.0 + np.cos(TWO_PI * f2 * x[1]) ** 2,
            ]
        )

    u_max = np.asarray(cfg.u_max, dtype=float)
    return PlantModel(
        n=2,
        m=2,
        p=2,
        f=f,
        g=g,
        delta=delta,
        theta_true=np.asarray(cfg.theta_true, dtype=float),
        theta_box=Box.symmetric(theta_bar, 2),
        u_lo=-u_max,
        u_hi=u_max,
        name="gap",
    )


def ellipse_barrier(xc: float, yc: float, a: float, b: float, label: str) -> BarrierFunction:
    def h(x: np.ndarray) -> float:
        return float(((x[0] - xc) / a) ** 2 + ((x[1] - yc) / b) ** 2 - 1.0)

    def grad_h(x: np.ndarray) -> np.ndarray:
        return np.array([2.0 * (x[0] - xc) / a**2, 2.0 * (x[1] - yc) / b**2])

    return BarrierFunction(h=h, grad_h=grad_h, label=label)


def gap_barriers(cfg: GapConfig) -> List[BarrierFunction]:
    return [
        ellipse_barrier(cfg.x1, cfg.y1, cfg.a, cfg.b, "h1"),
        ellipse_barrier(cfg.x2, cfg.y2, cfg.a, cfg.b, "h2"),
    ]


def gap_clf(cfg: GapConfig) -> LyapunovFunction:
    K_V = cfg.K_V

    def V(x: np.ndarray) -> float:
        return float(K_V * (x[0] ** 2 + x[1] ** 2))

    def grad_V(x: np.ndarray) -> np.ndarray:
        return 2.0 * K_V * np.asarray(x[:2], dtype=float)

    return LyapunovFunction.fixed_time(V, grad_V, T=cfg.T, mu=cfg.mu)


def passed_gap(trace: SimulationTrace, cfg: GapConfig) -> bool:
    """Whether any sample sits in the channel between the two ellipse tips."""
    if not len(trace):
        return False
    states = trace.array("states")
    lo_y, hi_y = cfg.y1 + cfg.b, cfg.y2 - cfg.b
    in_x = (states[:, 0] > cfg.x1 - cfg.a) & (states[:, 0] < cfg.x1 + cfg.a)
    in_y = (states[:, 1] > lo_y) & (states[:, 1] < hi_y)
    return bool(np.any(in_x & in_y))


def goal_time(trace: SimulationTrace, tol: float) -> Optional[float]:
    if not len(trace):
        return None
    states = trace.array("states")
    hits = np.nonzero(np.linalg.norm(states[:, :2], axis=1) <= tol)[0]
    return float(trace.times[hits[0]]) if hits.size else None


def build_gap(
    config: ExperimentConfig,
    controller_kind: Optional[ControllerKind] = None,
    theta_bar: Optional[float] = None,
) -> Scenario:
    cfg = config.gap
    kind = controller_kind or config.experiment.controller
    bar = config.theta_bar() if theta_bar is None else theta_bar
    model = gap_model(cfg, bar)
    barriers = gap_barriers(cfg)
    x0 = np.asarray(cfg.x0, dtype=float)

    h0 = [bf.h(x0) for bf in barriers]
    for bf, value in zip(barriers, h0):
        if value <= 0.0:
            raise ConfigError(f"gap.x0 {x0.tolist()} lies inside obstacle {bf.label} (h={value:.3g})")

    est_cfg = config.estimator
    box = model.theta_box
    if est_cfg.gamma == "auto":
        gamma = auto_gamma(box.vartheta, model.p, min(h0), est_cfg.gamma_margin)
    else:
        gamma = float(est_cfg.gamma)
    estimator = build_estimator(kind, est_cfg, box, gamma, seed=config.experiment.seed)

    controller = CbfQpController(
        nominal=model.nominal(),
        barriers=barriers,
        clf=StaticClf(gap_clf(cfg)),
        Q=np.diag(cfg.Q),
        p0=cfg.p0,
        p=cfg.p,
        delta_min=config.qp.delta_min,
        delta_max=config.qp.delta_max,
        max_iter_factor=config.qp.max_iter_factor,
    )
    return Scenario(
        scenario="gap",
        kind=kind,
        theta_bar=bar,
        model=model,
        controller=controller,
        estimator=estimator,
        x0=x0,
        t_final=config.t_final(),
        dt=config.experiment.dt,
        barrier_labels=[bf.label for bf in barriers],
        on_infeasible=config.experiment.on_infeasible,
        completion=lambda trace: goal_time(trace, cfg.goal_tol),
        extras={"gamma": gamma, "passed_gap": lambda trace: passed_gap(trace, cfg)},
    )
