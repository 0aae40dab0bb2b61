"""Highway overtake with two kinematic bicycles.

The ego steers (omega) and pushes (a / M); the lead vehicle has no input and
drifts by Delta_l(z) theta, which the ego learns from the composite state.
"""

from __future__ import annotations

from typing import List, Optional

import numpy as np

from .controller import CbfQpController, build_estimator
from .errors import ConfigError
from .estimator import auto_gamma
from .phases import (
    PE,
    VE,
    VL,
    XE,
    XL,
    YE,
    YL,
    PL,
    OncomingSchedule,
    PhasePlan,
    PhaseScheduler,
)
from .plant import Box, PlantModel
from .safety import BarrierFunction
from .scenario import Scenario
from .schemas import ControllerKind, ExperimentConfig, OvertakeConfig

TWO_PI = 2.0 * np.pi


def overtake_model(cfg: OvertakeConfig, theta_bar: float) -> PlantModel:
    M = cfg.M

    def f(z: np.ndarray) -> np.ndarray:
        return np.array(
            [
                z[VE] * np.cos(z[PE]),
                z[VE] * np.sin(z[PE]),
                0.0,
                0.0,
                z[VL] * np.cos(z[PL]),
                z[VL] * np.sin(z[PL]),
                0.0,
                0.0,
            ]
        )

    G = np.zeros((8, 2))
    G[PE, 0] = 1.0
    G[VE, 1] = 1.0 / M

    def g(z: np.ndarray) -> np.ndarray:
        return G

    def delta(z: np.ndarray) -> np.ndarray:
        D = np.zeros((8, 2))
        D[XL, 0] = 1.0 + 0.5 * (1.0 - np.cos(TWO_PI * cfg.f_l1 * z[XL]))
        D[YL, 1] = 0.1 + 0.05 * (1.0 - np.sin(TWO_PI * cfg.f_l2 * z[XL]))
        return D

    return PlantModel(
        n=8,
        m=2,
        p=2,
        f=f,
        g=g,
        delta=delta,
        theta_true=np.asarray(cfg.theta_true, dtype=float),
        theta_box=Box.symmetric(theta_bar, 2),
        u_lo=np.array([-cfg.omega_max, -cfg.a_max]),
        u_hi=np.array([cfg.omega_max, cfg.a_max]),
        name="overtake",
    )


def _road_edges(cfg: OvertakeConfig, psi: float, v: float):
    """Braking-aware road edges and their (psi, v) partials."""
    w = cfg.omega_max
    A = cfg.a_max / cfg.M
    s, c = np.sin(psi), np.cos(psi)
    q = psi * psi / (2.0 * w * w)
    dq = psi / (w * w)

    E_R = cfg.e_r + psi * v * s / w - q * (A * s + v * w * c)
    E_L = cfg.e_l - psi * v * s / w - q * (A * s - v * w * c)
    dER_dpsi = v * (s + psi * c) / w - dq * (A * s + v * w * c) - q * (A * c - v * w * s)
    dEL_dpsi = -v * (s + psi * c) / w - dq * (A * s - v * w * c) - q * (A * c + v * w * s)
    dER_dv = psi * s / w - q * w * c
    dEL_dv = -psi * s / w + q * w * c
    return E_R, E_L, dER_dpsi, dEL_dpsi, dER_dv, dEL_dv


def road_barrier(cfg: OvertakeConfig) -> BarrierFunction:
    K = cfg.K_s

    def h(z: np.ndarray) -> float:
        E_R, E_L, *_ = _road_edges(cfg, z[PE], z[VE])
        return float(K * (z[YE] - E_R) * (E_L - z[YE]))

    def grad_h(z: np.ndarray) -> np.ndarray:
        E_R, E_L, dR_p, dL_p, dR_v, dL_v = _road_edges(cfg, z[PE], z[VE])
        lower = z[YE] - E_R
        upper = E_L - z[YE]
        grad = np.zeros(8)
        grad[YE] = K * (upper - lower)
        grad[PE] = K * (-dR_p * upper + lower * dL_p)
        grad[VE] = K * (-dR_v * upper + lower * dL_v)
        return grad

    return BarrierFunction(h=h, grad_h=grad_h, label="road")


def speed_barrier(cfg: OvertakeConfig) -> BarrierFunction:
    def h(z: np.ndarray) -> float:
        return float(cfg.L - z[VE])

    def grad_h(z: np.ndarray) -> np.ndarray:
        grad = np.zeros(8)
        grad[VE] = -1.0
        return grad

    return BarrierFunction(h=h, grad_h=grad_h, label="speed")


def headway_margins(cfg: OvertakeConfig, z: np.ndarray):
    s_x = cfg.tau * z[VE] * np.cos(z[PE]) + cfg.l_c
    s_y = cfg.w_c + 0.75
    return s_x, s_y


def vehicle_barrier(cfg: OvertakeConfig) -> BarrierFunction:
    def h(z: np.ndarray) -> float:
        s_x, s_y = headway_margins(cfg, z)
        return float(((z[XE] - z[XL]) / s_x) ** 2 + ((z[YE] - z[YL]) / s_y) ** 2 - 1.0)

    def grad_h(z: np.ndarray) -> np.ndarray:
        s_x, s_y = headway_margins(cfg, z)
        dx = z[XE] - z[XL]
        dy = z[YE] - z[YL]
        gx = 2.0 * dx / s_x**2
        gy = 2.0 * dy / s_y**2
        ds = -2.0 * dx * dx / s_x**3
        grad = np.zeros(8)
        grad[XE], grad[XL] = gx, -gx
        grad[YE], grad[YL] = gy, -gy
        grad[VE] = ds * cfg.tau * np.cos(z[PE])
        grad[PE] = ds * (-cfg.tau * z[VE] * np.sin(z[PE]))
        return grad

    return BarrierFunction(h=h, grad_h=grad_h, label="vehicle")


def overtake_barriers(cfg: OvertakeConfig) -> List[BarrierFunction]:
    return [road_barrier(cfg), speed_barrier(cfg), vehicle_barrier(cfg)]


def build_overtake(
    config: ExperimentConfig,
    controller_kind: Optional[ControllerKind] = None,
    theta_bar: Optional[float] = None,
) -> Scenario:
    cfg = config.overtake
    kind = controller_kind or config.experiment.controller
    bar = config.theta_bar() if theta_bar is None else theta_bar
    model = overtake_model(cfg, bar)
    barriers = overtake_barriers(cfg)
    x0 = np.concatenate([np.asarray(cfg.ego0, dtype=float), np.asarray(cfg.lead0, dtype=float)])

    h0 = [bf.h(x0) for bf in barriers]
    for bf, value in zip(barriers, h0):
        if value <= 0.0:
            raise ConfigError(f"overtake initial state violates {bf.label} (h={value:.3g})")

    est_cfg = config.estimator
    if est_cfg.gamma == "auto":
        # one gain for the whole sweep: size it on the widest box considered
        widest = Box.symmetric(max(list(cfg.theta_bars) + [bar]), model.p)
        gamma = auto_gamma(widest.vartheta, model.p, min(h0), est_cfg.gamma_margin)
    else:
        gamma = float(est_cfg.gamma)
    estimator = build_estimator(kind, est_cfg, model.theta_box, gamma, seed=config.experiment.seed)

    scheduler = PhaseScheduler(PhasePlan.from_config(cfg))
    controller = CbfQpController(
        nominal=model.nominal(),
        barriers=barriers,
        clf=scheduler,
        Q=np.diag([1.0 / cfg.omega_max**2, 1.0 / cfg.a_max**2]),
        p0=cfg.p0,
        p=cfg.p,
        delta_min=config.qp.delta_min,
        delta_max=config.qp.delta_max,
        max_iter_factor=config.qp.max_iter_factor,
    )
    return Scenario(
        scenario="overtake",
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
        completion=lambda trace: scheduler.completed_at,
        extras={
            "gamma": gamma,
            "scheduler": scheduler,
            "schedule": OncomingSchedule(cfg.oncoming_first, cfg.oncoming_interval),
        },
    )
