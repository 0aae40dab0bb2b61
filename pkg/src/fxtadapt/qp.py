"""Dense convex QP solver for the per-step CLF-CBF controller.

Problems have the form

    minimize    1/2 w^T H w + c^T w
    subject to  A w <= b,  lb <= w <= ub

and are tiny (a handful of variables), dense and solved once per simulation
step. The solver is a dual active-set iteration (Goldfarb-Idnani) that starts
at the unconstrained minimizer, adds one violated constraint at a time and
drops blocking constraints from the working set. Every subproblem is an
equality-constrained QP solved through the Cholesky factor of H.

This is a dual method, not a primal one: iterates are primal infeasible
until the last constraint enters. A warm start only changes which violated
constraint enters first; the iteration still begins at the unconstrained
minimizer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import QPError
from .schemas import QPStatus

logger = logging.getLogger(__name__)

_FEAS_TOL = 1e-10
_PIVOT_TOL = 1e-14


@dataclass(frozen=True)
class QuadraticProgram:
    H: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self) -> None:
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        d = H.shape[0]
        c = np.asarray(self.c, dtype=float).reshape(d)
        A = np.asarray(self.A, dtype=float).reshape(-1, d)
        b = np.asarray(self.b, dtype=float).reshape(A.shape[0])
        lb = np.asarray(self.lb, dtype=float).reshape(d)
        ub = np.asarray(self.ub, dtype=float).reshape(d)
        if H.shape != (d, d):
            raise QPError(f"H must be square, got {H.shape}")
        scale = max(1.0, float(np.max(np.abs(H))))
        if np.max(np.abs(H - H.T)) > 1e-12 * scale:
            raise QPError("H must be symmetric")
        if np.linalg.eigvalsh(H)[0] < -1e-10 * scale:
            raise QPError("H must be positive semidefinite")
        if np.any(lb > ub):
            raise QPError("lower bound above upper bound")
        for name, value in (("H", H), ("c", c), ("A", A), ("b", b)):
            if not np.all(np.isfinite(value)):
                raise QPError(f"{name} has non-finite entries")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)

    @property
    def d(self) -> int:
        return self.H.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[0]

    def objective(self, w: np.ndarray) -> float:
        return float(0.5 * w @ self.H @ w + self.c @ w)


@dataclass(frozen=True)
class Multipliers:
    rows: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def zeros(cls, qp: QuadraticProgram) -> "Multipliers":
        return cls(np.zeros(qp.k), np.zeros(qp.d), np.zeros(qp.d))


@dataclass(frozen=True)
class QPSolution:
    w_star: np.ndarray
    status: QPStatus
    objective: float
    active_set: Tuple[int, ...]
    multipliers: Multipliers
    kkt_residual: float
    iterations: int = 0
    # combined indices (rows, then lower bounds, then upper bounds); feeds warm starts
    working_set: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _max_or_zero(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.max(values)) if values.size else 0.0


def kkt_residual(qp: QuadraticProgram, w: np.ndarray, multipliers: Multipliers) -> float:
    w = np.asarray(w, dtype=float)
    mu_r, mu_lo, mu_up = multipliers.rows, multipliers.lower, multipliers.upper

    stationarity = qp.H @ w + qp.c + qp.A.T @ mu_r - mu_lo + mu_up
    row_slack = qp.b - qp.A @ w
    lo_slack = w - qp.lb
    up_slack = qp.ub - w

    primal = max(
        _max_or_zero(-row_slack),
        _max_or_zero(-lo_slack),
        _max_or_zero(-up_slack),
        0.0,
    )
    dual = max(
        _max_or_zero(-mu_r),
        _max_or_zero(-mu_lo),
        _max_or_zero(-mu_up),
        0.0,
    )
    # multipliers of infinite bounds must vanish
    lo_comp = np.where(np.isfinite(qp.lb), mu_lo * np.where(np.isfinite(lo_slack), lo_slack, 0.0), mu_lo)
    up_comp = np.where(np.isfinite(qp.ub), mu_up * np.where(np.isfinite(up_slack), up_slack, 0.0), mu_up)
    complementarity = max(
        _max_or_zero(np.abs(mu_r * row_slack)),
        _max_or_zero(np.abs(lo_comp)),
        _max_or_zero(np.abs(up_comp)),
    )
    return max(_max_or_zero(np.abs(stationarity)), primal, dual, complementarity)


def _factor(H: np.ndarray):
    try:
        return cho_factor(H, lower=True)
    except LinAlgError:
        eps = 1e-10 * max(1.0, float(np.trace(H)))
        logger.debug("H not positive definite, regularizing by %.3g", eps)
        return cho_factor(H + eps * np.eye(H.shape[0]), lower=True)


class _Constraints:
    """All constraints of a scaled problem in `n_j . y >= e_j` form."""

    def __init__(self, qp: QuadraticProgram, scale: np.ndarray) -> None:
        d, k = qp.d, qp.k
        normals: List[np.ndarray] = []
        rhs: List[float] = []
        tol: List[float] = []
        enabled: List[bool] = []
        for j in range(k):
            normals.append(-qp.A[j] * scale)
            rhs.append(-qp.b[j])
            tol.append(_FEAS_TOL * (1.0 + abs(qp.b[j])))
            enabled.append(True)
        for i in range(d):
            unit = np.zeros(d)
            unit[i] = 1.0
            finite = bool(np.isfinite(qp.lb[i]))
            normals.append(unit)
            rhs.append(qp.lb[i] / scale[i] if finite else 0.0)
            tol.append(_FEAS_TOL * (1.0 + abs(qp.lb[i])) / scale[i] if finite else 0.0)
            enabled.append(finite)
        for i in range(d):
            unit = np.zeros(d)
            unit[i] = -1.0
            finite = bool(np.isfinite(qp.ub[i]))
            normals.append(unit)
            rhs.append(-qp.ub[i] / scale[i] if finite else 0.0)
            tol.append(_FEAS_TOL * (1.0 + abs(qp.ub[i])) / scale[i] if finite else 0.0)
            enabled.append(finite)
        self.N = np.array(normals).reshape(len(normals), d)
        self.e = np.array(rhs, dtype=float)
        self.tol = np.array(tol, dtype=float)
        self.enabled = np.array(enabled, dtype=bool)
        self.norms = np.maximum(np.linalg.norm(self.N, axis=1), 1e-300)

    def __len__(self) -> int:
        return self.e.shape[0]

    def slack(self, y: np.ndarray) -> np.ndarray:
        return self.N @ y - self.e


def _pick_violated(
    cons: _Constraints,
    y: np.ndarray,
    active: Sequence[int],
    preferred: List[int],
) -> Optional[int]:
    slack = cons.slack(y)
    violated = cons.enabled & (slack < -cons.tol)
    for idx in active:
        violated[idx] = False
    while preferred:
        idx = preferred.pop(0)
        if violated[idx]:
            return idx
    if not np.any(violated):
        return None
    score = np.where(violated, -slack / cons.norms, -np.inf)
    return int(np.argmax(score))


def solve(
    qp: QuadraticProgram,
    warm_start: Optional[Iterable[int]] = None,
    max_iter: Optional[int] = None,
) -> QPSolution:
    d, k = qp.d, qp.k
    max_iter = max_iter if max_iter is not None else 100 * d

    diag = np.diag(qp.H).copy()
    diag[diag <= 0] = 1.0
    scale = 1.0 / np.sqrt(diag)
    Hs = qp.H * np.outer(scale, scale)
    cs = qp.c * scale
    factor = _factor(Hs)
    cons = _Constraints(qp, scale)

    y = -cho_solve(factor, cs)
    active: List[int] = []
    lam: List[float] = []
    preferred = [int(j) for j in (warm_start or []) if 0 <= int(j) < len(cons)]
    iterations = 0
    status: QPStatus = "optimal"

    while True:
        p = _pick_violated(cons, y, active, preferred)
        if p is None:
            break
        n_p = cons.N[p]
        lam_p = 0.0
        added = False
        while not added:
            iterations += 1
            if iterations > max_iter:
                status = "max-iterations"
                break
            hn = cho_solve(factor, n_p)
            if active:
                Na = cons.N[active].T
                HNa = cho_solve(factor, Na)
                r = np.linalg.solve(Na.T @ HNa, Na.T @ hn)
                z = hn - HNa @ r
            else:
                r = np.zeros(0)
                z = hn

            # largest dual step keeping working-set multipliers nonnegative
            t1 = np.inf
            drop = -1
            for pos, (r_j, lam_j) in enumerate(zip(r, lam)):
                if r_j > _PIVOT_TOL:
                    ratio = lam_j / r_j
                    if ratio < t1 or (ratio == t1 and active[pos] < active[drop]):
                        t1 = ratio
                        drop = pos

            zn = float(z @ n_p)
            t2 = np.inf
            if zn > _PIVOT_TOL * max(1.0, float(n_p @ hn)):
                t2 = -float(n_p @ y - cons.e[p]) / zn

            if not np.isfinite(t1) and not np.isfinite(t2):
                status = "infeasible"
                break

            if not np.isfinite(t2):
                lam = [lj - t1 * rj for lj, rj in zip(lam, r)]
                lam_p += t1
                del active[drop]
                del lam[drop]
                continue

            t = min(t1, t2)
            y = y + t * z
            lam = [lj - t * rj for lj, rj in zip(lam, r)]
            lam_p += t
            if t2 <= t1:
                active.append(p)
                lam.append(lam_p)
                added = True
            else:
                del active[drop]
                del lam[drop]
        if status != "optimal":
            break

    w = scale * y
    mu_r = np.zeros(k)
    mu_lo = np.zeros(d)
    mu_up = np.zeros(d)
    for idx, value in zip(active, lam):
        value = max(value, 0.0)
        if idx < k:
            mu_r[idx] = value
        elif idx < k + d:
            mu_lo[idx - k] = value / scale[idx - k]
        else:
            mu_up[idx - k - d] = value / scale[idx - k - d]
    multipliers = Multipliers(mu_r, mu_lo, mu_up)

    if status != "optimal":
        logger.debug("qp %s after %d iterations", status, iterations)

    return QPSolution(
        w_star=w,
        status=status,
        objective=qp.objective(w),
        active_set=tuple(sorted(idx for idx in active if idx < k)),
        multipliers=multipliers,
        kkt_residual=kkt_residual(qp, w, multipliers),
        iterations=iterations,
        working_set=tuple(active),
    )
