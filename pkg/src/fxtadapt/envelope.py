"""Closed-form error envelope and settling-time bounds of the fixed-time law.

With V = 1/2 e^T Gamma^-1 e decaying as V' = -c1 V^(1-1/mu) - c2 V^(1+1/mu),
separation of variables in x = V^(1/mu) gives

    V(t) = ((1/N) tan(arctan(N V0^(1/mu)) - N c1 t / mu))^mu,   N = sqrt(c2/c1)

and ||e||_inf <= sqrt(2 lambda_max(Gamma) V).
"""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from .errors import DomainError


def _check_t(t: float) -> None:
    if t < 0 or not math.isfinite(t):
        raise DomainError(f"envelope time must be finite and nonnegative, got {t}")


def _n_ratio(c1: float, c2: float) -> float:
    return math.sqrt(c2 / c1)


def initial_lyapunov(gains, eta0: float) -> float:
    """1/2 eta0^T Gamma^-1 eta0 with eta0 = eta0 * ones."""
    inv_diag = 1.0 / np.diag(gains.Gamma)
    return 0.5 * eta0 * eta0 * float(np.sum(inv_diag))


def xi(gains, eta0: float) -> float:
    N = _n_ratio(gains.c1e, gains.c2e)
    V0 = initial_lyapunov(gains, eta0)
    return math.atan(N * V0 ** (1.0 / gains.mu_e))


def _angle(t: float, gains, eta0: float) -> float:
    N = _n_ratio(gains.c1e, gains.c2e)
    return xi(gains, eta0) - N * gains.c1e * t / gains.mu_e


def eta(t: float, gains, eta0: float) -> float:
    _check_t(t)
    angle = _angle(t, gains, eta0)
    if angle <= 0.0:
        return 0.0
    N = _n_ratio(gains.c1e, gains.c2e)
    M = 2.0 * float(np.max(np.diag(gains.Gamma)))
    return math.sqrt(M * (math.tan(angle) / N) ** gains.mu_e)


def eta_dot(t: float, gains, eta0: float) -> float:
    _check_t(t)
    angle = _angle(t, gains, eta0)
    if angle <= 0.0:
        return 0.0
    N = _n_ratio(gains.c1e, gains.c2e)
    M = 2.0 * float(np.max(np.diag(gains.Gamma)))
    base = math.tan(angle) / N
    sec2 = 1.0 / math.cos(angle) ** 2
    return -0.5 * math.sqrt(M) * gains.c1e * base ** (0.5 * gains.mu_e - 1.0) * sec2


def settling_bounds(gains) -> Tuple[float, float]:
    """(T_b, T_tight); T_tight uses the box diameter as initial error bound."""
    gamma1 = 1.0 - 1.0 / gains.mu_e
    gamma2 = 1.0 + 1.0 / gains.mu_e
    T_b = 1.0 / (gains.c1e * (1.0 - gamma1)) + 1.0 / (gains.c2e * (gamma2 - 1.0))
    T_tight = gains.mu_e * xi(gains, gains.vartheta) / math.sqrt(gains.c1e * gains.c2e)
    return T_b, T_tight


def lyapunov_closed_form(t: float, V0: float, c1: float, c2: float, mu: float) -> float:
    _check_t(t)
    if V0 <= 0.0:
        return 0.0
    N = _n_ratio(c1, c2)
    angle = math.atan(N * V0 ** (1.0 / mu)) - N * c1 * t / mu
    if angle <= 0.0:
        return 0.0
    return (math.tan(angle) / N) ** mu


def lyapunov_settling_time(V0: float, c1: float, c2: float, mu: float) -> float:
    if V0 <= 0.0:
        return 0.0
    N = _n_ratio(c1, c2)
    return mu * math.atan(N * V0 ** (1.0 / mu)) / math.sqrt(c1 * c2)


def ft_settling_bound(theta_err0: np.ndarray, Gamma: np.ndarray, sigma: float) -> float:
    """Settling bound of the finite-time law: ||e0|| lambda_max(Gamma^-1) / sigma."""
    lam_max_inv = 1.0 / float(np.min(np.linalg.eigvalsh(Gamma)))
    return float(np.linalg.norm(theta_err0)) * lam_max_inv / sigma
