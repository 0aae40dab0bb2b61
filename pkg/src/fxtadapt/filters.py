"""Filter bank and auxiliary regressor memory.

Each channel is a critically damped second-order low-pass

    k_e^2 b_f'' + 2 k_e b_f' + b_f = b,   b_f(0) = b_f'(0) = 0

applied to the state, the known dynamics phi = f + g u and the regressor Phi.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class FilterBank:
    k_e: float
    x_f: np.ndarray
    xdot_f: np.ndarray
    phi_f: np.ndarray
    phidot_f: np.ndarray
    Phi_f: np.ndarray
    Phidot_f: np.ndarray

    @classmethod
    def zeros(cls, n: int, p: int, k_e: float) -> "FilterBank":
        if k_e <= 0:
            raise ValueError("k_e must be positive")
        return cls(
            k_e=float(k_e),
            x_f=np.zeros(n),
            xdot_f=np.zeros(n),
            phi_f=np.zeros(n),
            phidot_f=np.zeros(n),
            Phi_f=np.zeros((n, p)),
            Phidot_f=np.zeros((n, p)),
        )

    @property
    def n(self) -> int:
        return self.x_f.shape[0]

    @property
    def p(self) -> int:
        return self.Phi_f.shape[1]

    def size(self) -> int:
        return 4 * self.n + 2 * self.n * self.p

    def pack(self) -> np.ndarray:
        return np.concatenate(
            [
                self.x_f,
                self.xdot_f,
                self.phi_f,
                self.phidot_f,
                self.Phi_f.ravel(),
                self.Phidot_f.ravel(),
            ]
        )

    def unpack(self, vec: np.ndarray) -> "FilterBank":
        n, p = self.n, self.p
        parts = np.split(np.asarray(vec, dtype=float), np.cumsum([n, n, n, n, n * p])[:5])
        return replace(
            self,
            x_f=parts[0],
            xdot_f=parts[1],
            phi_f=parts[2],
            phidot_f=parts[3],
            Phi_f=parts[4].reshape(n, p),
            Phidot_f=parts[5].reshape(n, p),
        )


def _second_order(k: float, signal, out, outdot):
    return outdot, (signal - out - 2.0 * k * outdot) / (k * k)


def filter_rates(
    bank: FilterBank, x: np.ndarray, phi: np.ndarray, Phi: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Rates of (x_f, xdot_f, phi_f, phidot_f, Phi_f, Phidot_f)."""
    k = bank.k_e
    if k <= 0:
        raise ValueError("k_e must be positive")
    xd, xdd = _second_order(k, np.asarray(x, dtype=float), bank.x_f, bank.xdot_f)
    pd, pdd = _second_order(k, np.asarray(phi, dtype=float), bank.phi_f, bank.phidot_f)
    Pd, Pdd = _second_order(k, np.asarray(Phi, dtype=float), bank.Phi_f, bank.Phidot_f)
    return xd, xdd, pd, pdd, Pd, Pdd


def first_order_filter_rates(k: float, signal: np.ndarray, out: np.ndarray) -> np.ndarray:
    """k b_f' + b_f = b; kept for comparing settling against the second-order bank."""
    return (np.asarray(signal, dtype=float) - out) / k


@dataclass(frozen=True)
class AuxiliaryMemory:
    ell_e: float
    P: np.ndarray
    Q: np.ndarray

    @classmethod
    def zeros(cls, p: int, ell_e: float) -> "AuxiliaryMemory":
        return cls(ell_e=float(ell_e), P=np.zeros((p, p)), Q=np.zeros(p))

    @property
    def p(self) -> int:
        return self.Q.shape[0]

    def size(self) -> int:
        return self.p * self.p + self.p

    def pack(self) -> np.ndarray:
        return np.concatenate([self.P.ravel(), self.Q])

    def unpack(self, vec: np.ndarray) -> "AuxiliaryMemory":
        p = self.p
        vec = np.asarray(vec, dtype=float)
        P = vec[: p * p].reshape(p, p)
        return replace(self, P=0.5 * (P + P.T), Q=vec[p * p :].copy())


def aux_rates(aux: AuxiliaryMemory, bank: FilterBank) -> Tuple[np.ndarray, np.ndarray]:
    Phi_f = bank.Phi_f
    Pdot = -aux.ell_e * aux.P + Phi_f.T @ Phi_f
    Qdot = -aux.ell_e * aux.Q + Phi_f.T @ (bank.xdot_f - bank.phi_f)
    return Pdot, Qdot
