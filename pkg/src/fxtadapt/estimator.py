from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Tuple

import numpy as np

from .envelope import eta, eta_dot
from .errors import ConfigError, EstimatorSingularityError
from .filters import AuxiliaryMemory, FilterBank, aux_rates, filter_rates
from .plant import Box, NominalModel, project_box

logger = logging.getLogger(__name__)

EnvelopeMode = Literal["envelope", "frozen", "none"]


@dataclass(frozen=True)
class AdaptationGains:
    Gamma: np.ndarray
    c1e: float = 50.0
    c2e: float = 50.0
    mu_e: float = 5.0
    sigma: float = 1e-4
    vartheta: float = 0.0

    def __post_init__(self) -> None:
        Gamma = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        if np.any(Gamma != np.diag(np.diag(Gamma))) or np.any(np.diag(Gamma) <= 0):
            raise ConfigError("Gamma must be diagonal with positive entries")
        if self.c1e <= 0 or self.c2e <= 0 or self.mu_e <= 1 or self.sigma <= 0:
            raise ConfigError("adaptation gains need c1e, c2e, sigma > 0 and mu_e > 1")
        object.__setattr__(self, "Gamma", Gamma)

    @property
    def gamma1(self) -> float:
        return 1.0 - 1.0 / self.mu_e

    @property
    def gamma2(self) -> float:
        return 1.0 + 1.0 / self.mu_e

    @property
    def Gamma_inv(self) -> np.ndarray:
        return np.diag(1.0 / np.diag(self.Gamma))


def auto_gamma(vartheta: float, p: int, h_min: float, margin: float = 1.1) -> float:
    """Scalar gain so that the initial state clears the uncertainty margin 1/2 vartheta^T Gamma^-1 vartheta."""
    if vartheta <= 0:
        return 1.0
    if h_min <= 0:
        raise ConfigError(f"initial state must be strictly safe to size Gamma (min h = {h_min:.3g})")
    return margin * p * vartheta * vartheta / (2.0 * h_min)


@dataclass
class EstimatorState:
    filter: FilterBank
    aux: AuxiliaryMemory
    theta_hat: np.ndarray
    gains: AdaptationGains
    activated: bool = False
    t_activate: Optional[float] = None


def compute_W(aux: AuxiliaryMemory, theta_hat: np.ndarray) -> np.ndarray:
    return aux.P @ theta_hat - aux.Q


def lambda_min(P: np.ndarray) -> float:
    if P.shape == (1, 1):
        return float(P[0, 0])
    if P.shape == (2, 2):
        a, b, d = P[0, 0], 0.5 * (P[0, 1] + P[1, 0]), P[1, 1]
        return float(0.5 * (a + d) - math.hypot(0.5 * (a - d), b))
    return float(np.linalg.eigvalsh(P)[0])


def _checked_solve(P: np.ndarray, W: np.ndarray, cond_max: float) -> np.ndarray:
    cond = np.linalg.cond(P)
    if not np.isfinite(cond) or cond > cond_max:
        raise EstimatorSingularityError(f"P condition number {cond:.3g} above {cond_max:.3g}")
    return np.linalg.solve(P, W)


def fxts_terms(state: EstimatorState, cond_max: float = 1e12) -> Tuple[np.ndarray, float, float, float]:
    """(W, nu, W^T P^-1 W, F(nu)) of the fixed-time law."""
    g = state.gains
    W = compute_W(state.aux, state.theta_hat)
    PinvW = _checked_solve(state.aux.P, W, cond_max)
    nu = 0.5 * float(PinvW @ g.Gamma_inv @ PinvW)
    quad = float(W @ PinvW)
    F = g.c1e * nu**g.gamma1 + g.c2e * nu**g.gamma2
    return W, nu, quad, F


def fxts_update(state: EstimatorState, dead_zone: float = 1e-10, cond_max: float = 1e12) -> np.ndarray:
    W = compute_W(state.aux, state.theta_hat)
    if np.linalg.norm(W) <= dead_zone:
        return np.zeros_like(W)
    W, _nu, quad, F = fxts_terms(state, cond_max)
    if quad <= 0.0:
        return np.zeros_like(W)
    return state.gains.Gamma @ W * (-F / quad)


def ft_update_baseline(state: EstimatorState, dead_zone: float = 1e-10, cond_max: float = 1e12) -> np.ndarray:
    W = compute_W(state.aux, state.theta_hat)
    norm_W = float(np.linalg.norm(W))
    if norm_W <= dead_zone:
        return np.zeros_like(W)
    _checked_solve(state.aux.P, W, cond_max)
    return -state.gains.Gamma @ state.aux.P.T @ W / norm_W


def check_activation(state: EstimatorState, t: float) -> bool:
    if not state.activated and lambda_min(state.aux.P) >= state.gains.sigma:
        state.activated = True
        state.t_activate = float(t)
        logger.info("estimator activated at t=%.4f", t)
    return state.activated


@dataclass(frozen=True)
class EstimatorView:
    """Everything a controller may read from the estimator."""

    theta_hat: np.ndarray
    eta: float
    eta_dot: float
    Gamma: np.ndarray
    theta_box: Box
    activated: bool = False

    @property
    def margin(self) -> float:
        """1/2 eta^T Gamma^-1 eta for eta = eta * ones."""
        return 0.5 * self.eta * self.eta * float(np.sum(1.0 / np.diag(self.Gamma)))


@dataclass
class ParameterEstimator:
    """Filter bank, auxiliary memory and sub-stepped adaptation of theta_hat."""

    gains: AdaptationGains
    theta_box: Box
    theta_hat0: np.ndarray
    k_e: float = 0.001
    ell_e: float = 100.0
    law: Literal["fxts", "ft"] = "fxts"
    adapt: bool = True
    envelope_mode: EnvelopeMode = "envelope"
    substep_fraction: float = 0.1
    max_substeps: int = 10000
    dead_zone: float = 1e-10
    rate_clamp: float = 1e6
    cond_max: float = 1e12
    state: EstimatorState = field(init=False)
    rate_clamp_count: int = field(init=False, default=0)
    _nominal: Optional[NominalModel] = field(init=False, default=None, repr=False)
    _x0: Optional[np.ndarray] = field(init=False, default=None, repr=False)

    def reset(self, nominal: NominalModel, x0: np.ndarray) -> None:
        theta_hat = project_box(np.asarray(self.theta_hat0, dtype=float), self.theta_box)
        self._nominal = nominal
        self._x0 = np.asarray(x0, dtype=float).copy()
        self.state = EstimatorState(
            filter=FilterBank.zeros(nominal.n, nominal.p, self.k_e),
            aux=AuxiliaryMemory.zeros(nominal.p, self.ell_e),
            theta_hat=theta_hat,
            gains=self.gains,
        )
        self.rate_clamp_count = 0

    def size(self) -> int:
        return self.state.filter.size() + self.state.aux.size()

    def max_step(self) -> float:
        """Largest RK4 step for the filter and memory states (fastest pole is -1/k_e)."""
        return min(self.k_e, 1.0 / self.ell_e)

    def pack(self) -> np.ndarray:
        return np.concatenate([self.state.filter.pack(), self.state.aux.pack()])

    def _unpack(self, z: np.ndarray) -> Tuple[FilterBank, AuxiliaryMemory]:
        nb = self.state.filter.size()
        return self.state.filter.unpack(z[:nb]), self.state.aux.unpack(z[nb:])

    def rates(self, x: np.ndarray, u: np.ndarray, z: np.ndarray) -> np.ndarray:
        bank, aux = self._unpack(z)
        nominal = self._nominal
        phi = nominal.phi(x, u)
        Phi = nominal.delta(x)
        # displacement keeps the zero initial conditions consistent with x(0) != 0
        parts = filter_rates(bank, x - self._x0, phi, Phi)
        Pdot, Qdot = aux_rates(aux, bank)
        return np.concatenate([r.ravel() for r in parts] + [Pdot.ravel(), Qdot])

    def commit(self, t: float, z: np.ndarray, dt: float) -> None:
        """Store the integrated filter state at t and advance theta_hat over dt."""
        bank, aux = self._unpack(z)
        self.state.filter = bank
        self.state.aux = aux
        if not check_activation(self.state, t) or not self.adapt:
            return
        try:
            self._advance(dt)
        except EstimatorSingularityError as exc:
            logger.warning("holding theta_hat at t=%.4f: %s", t, exc)

    def _rate_and_stiffness(self) -> Tuple[np.ndarray, float]:
        state = self.state
        W = compute_W(state.aux, state.theta_hat)
        norm_W = float(np.linalg.norm(W))
        if norm_W <= self.dead_zone:
            return np.zeros_like(W), 0.0
        GP = state.gains.Gamma @ state.aux.P
        if self.law == "ft":
            rate = ft_update_baseline(state, self.dead_zone, self.cond_max)
            rho = float(np.max(np.abs(np.linalg.eigvals(GP @ state.aux.P)))) / norm_W
            return rate, rho
        _W, _nu, quad, F = fxts_terms(state, self.cond_max)
        if quad <= 0.0:
            return np.zeros_like(W), 0.0
        rate = state.gains.Gamma @ W * (-F / quad)
        rho = F / quad * float(np.max(np.abs(np.linalg.eigvals(GP))))
        return rate, rho

    def _advance(self, dt: float) -> None:
        remaining = dt
        substeps = 0
        while remaining > 0.0:
            if substeps >= self.max_substeps:
                logger.warning("adaptation substep cap %d reached", self.max_substeps)
                break
            rate, rho = self._rate_and_stiffness()
            if not np.any(rate):
                break
            peak = float(np.max(np.abs(rate)))
            if peak > self.rate_clamp:
                rate = rate * (self.rate_clamp / peak)
                self.rate_clamp_count += 1
                logger.warning("adaptation rate clamped from %.3g", peak)
            h = remaining if rho <= 0.0 else min(remaining, self.substep_fraction / rho)
            self.state.theta_hat = project_box(self.state.theta_hat + h * rate, self.theta_box)
            remaining -= h
            substeps += 1

    def view(self, t: float) -> EstimatorView:
        state = self.state
        if self.envelope_mode == "none":
            e, ed = 0.0, 0.0
        elif self.envelope_mode == "frozen" or not state.activated:
            e, ed = self.gains.vartheta, 0.0
        else:
            tau = max(0.0, t - state.t_activate)
            e = eta(tau, self.gains, self.gains.vartheta)
            ed = eta_dot(tau, self.gains, self.gains.vartheta)
            # theta_hat stays in the box, so the box diameter is always a valid bound
            if e >= self.gains.vartheta:
                e, ed = self.gains.vartheta, 0.0
        return EstimatorView(
            theta_hat=state.theta_hat.copy(),
            eta=e,
            eta_dot=ed,
            Gamma=self.gains.Gamma,
            theta_box=self.theta_box,
            activated=state.activated,
        )
