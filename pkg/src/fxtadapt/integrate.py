from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DomainError, SimulationDivergenceError

RateFn = Callable[[float, np.ndarray], np.ndarray]


def _checked(value: np.ndarray, t: float) -> np.ndarray:
    if not np.all(np.isfinite(value)):
        raise SimulationDivergenceError(t, f"non-finite RK4 stage at t={t:.6g}")
    return value


def rk4_step(rate: RateFn, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    """Classical fourth-order Runge-Kutta step."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    y = np.asarray(y, dtype=float)
    half = 0.5 * dt
    k1 = _checked(np.asarray(rate(t, y), dtype=float), t)
    k2 = _checked(np.asarray(rate(t + half, y + half * k1), dtype=float), t + half)
    k3 = _checked(np.asarray(rate(t + half, y + half * k2), dtype=float), t + half)
    k4 = _checked(np.asarray(rate(t + dt, y + dt * k3), dtype=float), t + dt)
    return _checked(y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), t + dt)
