from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .estimator import EstimatorView
from .plant import Box, NominalModel, project_box

logger = logging.getLogger(__name__)

ScalarMap = Callable[[np.ndarray], float]
VectorMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BarrierFunction:
    h: ScalarMap
    grad_h: VectorMap
    label: str


@dataclass(frozen=True)
class LyapunovFunction:
    V: ScalarMap
    grad_V: VectorMap
    c1: float
    c2: float
    gamma1: float = 0.8
    gamma2: float = 1.2

    @classmethod
    def fixed_time(cls, V: ScalarMap, grad_V: VectorMap, T: float, mu: float) -> "LyapunovFunction":
        """Gains c1 = c2 = mu pi / (2 T) with exponents 1 -/+ 1/mu settle within T."""
        c = mu * np.pi / (2.0 * T)
        return cls(V=V, grad_V=grad_V, c1=c, c2=c, gamma1=1.0 - 1.0 / mu, gamma2=1.0 + 1.0 / mu)


@dataclass(frozen=True)
class RobustTermInputs:
    L_delta: np.ndarray
    theta_hat: np.ndarray
    eta: float
    theta_box: Box
    Gamma: Optional[np.ndarray] = None
    eta_dot: float = 0.0


def _interval_ends(inp: RobustTermInputs):
    C = np.asarray(inp.L_delta, dtype=float).ravel()
    lo = project_box(inp.theta_hat - inp.eta, inp.theta_box)
    hi = project_box(inp.theta_hat + inp.eta, inp.theta_box)
    return C * lo, C * hi


def psi_worst_case(inp: RobustTermInputs) -> float:
    """Smallest value of L_delta . theta over the clamped interval box."""
    a, b = _interval_ends(inp)
    return float(np.sum(np.minimum(a, b)))


def phi_worst_case(inp: RobustTermInputs) -> float:
    a, b = _interval_ends(inp)
    return float(np.sum(np.maximum(a, b)))


@dataclass(frozen=True)
class DecisionLayout:
    """w = [u (m); delta_0; delta_1..delta_q]."""

    m: int
    q: int

    @property
    def d(self) -> int:
        return self.m + 1 + self.q

    @property
    def delta0(self) -> int:
        return self.m

    def delta(self, i: int) -> int:
        return self.m + 1 + i


@dataclass(frozen=True)
class ConstraintRow:
    """coef . w <= rhs."""

    coef: np.ndarray
    rhs: float
    value: float
    margin_value: float
    worst_case: float


def racbf_row(
    bf: BarrierFunction,
    x: np.ndarray,
    nominal: NominalModel,
    view: EstimatorView,
    layout: DecisionLayout,
    index: int,
    alpha_gain: Optional[float] = None,
) -> ConstraintRow:
    """Robust-adaptive barrier row

        L_f h + L_g h u + Psi - Tr(Gamma^-1) eta eta_dot >= -delta_i h_r,
        h_r = h - 1/2 eta^T Gamma^-1 eta.

    With `alpha_gain` the class-K gain is fixed instead of using delta_i.
    """
    grad = np.asarray(bf.grad_h(x), dtype=float)
    h = float(bf.h(x))
    Lf = float(grad @ nominal.f(x))
    Lg = grad @ nominal.g(x)
    L_delta = grad @ nominal.delta(x)
    psi = psi_worst_case(
        RobustTermInputs(L_delta, view.theta_hat, view.eta, view.theta_box, view.Gamma, view.eta_dot)
    )
    trace_inv = float(np.sum(1.0 / np.diag(view.Gamma)))
    h_r = h - view.margin
    if h_r < 0.0:
        logger.warning("safety margin violated for %s: h_r=%.3g", bf.label, h_r)

    coef = np.zeros(layout.d)
    coef[: layout.m] = -Lg
    rhs = Lf + psi - trace_inv * view.eta * view.eta_dot
    if alpha_gain is None:
        coef[layout.delta(index)] = -h_r
    else:
        rhs += alpha_gain * h_r
    return ConstraintRow(coef=coef, rhs=float(rhs), value=h, margin_value=h_r, worst_case=psi)


def fxt_clf_row(
    lf: LyapunovFunction,
    x: np.ndarray,
    nominal: NominalModel,
    view: EstimatorView,
    layout: DecisionLayout,
) -> ConstraintRow:
    """L_f V + L_g V u + phi <= delta_0 - c1 V^g1 - c2 V^g2."""
    grad = np.asarray(lf.grad_V(x), dtype=float)
    V = float(lf.V(x))
    Lf = float(grad @ nominal.f(x))
    Lg = grad @ nominal.g(x)
    L_delta = grad @ nominal.delta(x)
    phi = phi_worst_case(
        RobustTermInputs(L_delta, view.theta_hat, view.eta, view.theta_box, view.Gamma, view.eta_dot)
    )
    Vp = max(V, 0.0)
    decay = lf.c1 * Vp**lf.gamma1 + lf.c2 * Vp**lf.gamma2

    coef = np.zeros(layout.d)
    coef[: layout.m] = Lg
    coef[layout.delta0] = -1.0
    rhs = -Lf - phi - decay
    return ConstraintRow(coef=coef, rhs=float(rhs), value=V, margin_value=V, worst_case=phi)


def numerical_gradient(func: ScalarMap, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.shape[0]):
        step = eps * max(1.0, abs(x[i]))
        up = x.copy()
        dn = x.copy()
        up[i] += step
        dn[i] -= step
        grad[i] = (func(up) - func(dn)) / (2.0 * step)
    return grad
