from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import ConfigError, DomainError, SimulationDivergenceError

StateMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Box:
    """Axis-aligned parameter box."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.lo, dtype=float).ravel()
        hi = np.asarray(self.hi, dtype=float).ravel()
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ConfigError("box bounds must have equal shape with lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def symmetric(cls, bound: float, p: int) -> "Box":
        return cls(-bound * np.ones(p), bound * np.ones(p))

    @property
    def p(self) -> int:
        return self.lo.shape[0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def vartheta(self) -> float:
        """Largest infinity-norm distance between two points of the box."""
        return float(np.max(self.hi - self.lo)) if self.p else 0.0

    def contains(self, theta: np.ndarray, tol: float = 0.0) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.lo - tol) and np.all(theta <= self.hi + tol))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo, self.hi)


def project_box(theta: np.ndarray, box: Box) -> np.ndarray:
    return np.clip(np.asarray(theta, dtype=float), box.lo, box.hi)


@dataclass(frozen=True)
class NominalModel:
    """What a controller or estimator may know about the plant."""

    n: int
    m: int
    p: int
    f: StateMap
    g: StateMap
    delta: StateMap
    theta_box: Box
    u_lo: np.ndarray
    u_hi: np.ndarray

    def phi(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.f(x) + self.g(x) @ u


@dataclass(frozen=True)
class PlantModel:
    n: int
    m: int
    p: int
    f: StateMap
    g: StateMap
    delta: StateMap
    theta_true: np.ndarray
    theta_box: Box
    u_lo: np.ndarray = field(default=None)
    u_hi: np.ndarray = field(default=None)
    name: str = "plant"

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta_true, dtype=float).reshape(self.p)
        object.__setattr__(self, "theta_true", theta)
        u_lo = -np.inf * np.ones(self.m) if self.u_lo is None else np.asarray(self.u_lo, dtype=float)
        u_hi = np.inf * np.ones(self.m) if self.u_hi is None else np.asarray(self.u_hi, dtype=float)
        object.__setattr__(self, "u_lo", u_lo)
        object.__setattr__(self, "u_hi", u_hi)
        if self.theta_box.p != self.p:
            raise ConfigError(f"{self.name}: theta box has {self.theta_box.p} entries, expected {self.p}")
        if not self.theta_box.contains(theta):
            raise ConfigError(f"{self.name}: theta_true {theta.tolist()} outside the admissible box")

    def nominal(self) -> NominalModel:
        return NominalModel(
            n=self.n,
            m=self.m,
            p=self.p,
            f=self.f,
            g=self.g,
            delta=self.delta,
            theta_box=self.theta_box,
            u_lo=self.u_lo,
            u_hi=self.u_hi,
        )


def eval_dynamics(model: PlantModel, x: np.ndarray, u: np.ndarray, t: float = float("nan")) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(u < model.u_lo - 1e-9) or np.any(u > model.u_hi + 1e-9):
        raise DomainError(f"input {u.tolist()} outside the input box")
    xdot = model.f(x) + model.g(x) @ u + model.delta(x) @ model.theta_true
    if not np.all(np.isfinite(xdot)):
        raise SimulationDivergenceError(t, f"non-finite dynamics at t={t:.6g}")
    return xdot


def pe_margin(delta: StateMap, states: Iterable[np.ndarray]) -> float:
    """Smallest eigenvalue of delta^T delta over the sampled states."""
    margin = np.inf
    for x in states:
        D = delta(np.asarray(x, dtype=float))
        margin = min(margin, float(np.linalg.eigvalsh(D.T @ D)[0]))
    return float(margin)
