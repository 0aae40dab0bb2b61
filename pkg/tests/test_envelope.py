import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from fxtadapt.envelope import (
    eta,
    eta_dot,
    ft_settling_bound,
    lyapunov_closed_form,
    lyapunov_settling_time,
    settling_bounds,
)
from fxtadapt.errors import DomainError
from fxtadapt.estimator import AdaptationGains


def _gains(gamma=1.0, vartheta=2.0, c1=50.0, c2=50.0, mu=5.0, p=2):
    return AdaptationGains(Gamma=gamma * np.eye(p), c1e=c1, c2e=c2, mu_e=mu, vartheta=vartheta)


def test_table_gains_settling_bound():
    T_b, T_tight = settling_bounds(_gains())
    assert T_b == pytest.approx(0.2, abs=1e-15)
    assert 0.0 < T_tight <= T_b


def test_tight_bound_never_exceeds_loose_bound():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        gains = _gains(
            gamma=float(rng.uniform(0.1, 1000.0)),
            vartheta=float(rng.uniform(0.01, 50.0)),
            c1=float(rng.uniform(0.1, 100.0)),
            c2=float(rng.uniform(0.1, 100.0)),
            mu=float(rng.uniform(1.1, 10.0)),
        )
        T_b, T_tight = settling_bounds(gains)
        limit = gains.mu_e * math.pi / (2.0 * math.sqrt(gains.c1e * gains.c2e))
        assert T_tight <= limit + 1e-12
        assert T_tight <= T_b + 1e-12


def test_eta_vanishes_at_tight_bound():
    gains = _gains()
    _, T_tight = settling_bounds(gains)
    assert eta(T_tight, gains, gains.vartheta) <= 1e-12
    assert eta(2 * T_tight, gains, gains.vartheta) == 0.0
    assert eta_dot(2 * T_tight, gains, gains.vartheta) == 0.0


def test_eta_strictly_decreasing():
    gains = _gains(gamma=684.0, vartheta=20.0)
    _, T_tight = settling_bounds(gains)
    grid = np.linspace(0.0, 0.999 * T_tight, 400)
    values = [eta(t, gains, gains.vartheta) for t in grid]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_eta_dot_matches_finite_difference():
    gains = _gains()
    _, T_tight = settling_bounds(gains)
    h = 1e-7 * T_tight
    for t in np.linspace(h, 0.9 * T_tight, 60):
        fd = (eta(t + h, gains, gains.vartheta) - eta(t - h, gains, gains.vartheta)) / (2 * h)
        analytic = eta_dot(t, gains, gains.vartheta)
        assert analytic <= 0.0
        assert analytic == pytest.approx(fd, rel=1e-4)


def test_eta_dot_finite_near_root():
    gains = _gains()
    _, T_tight = settling_bounds(gains)
    for frac in (0.9, 0.95, 0.99):
        assert math.isfinite(eta_dot(frac * T_tight, gains, gains.vartheta))


@pytest.mark.parametrize("t", [-1e-9, -1.0, float("nan"), float("inf")])
def test_envelope_rejects_bad_time(t):
    gains = _gains()
    with pytest.raises(DomainError):
        eta(t, gains, gains.vartheta)
    with pytest.raises(ValueError):
        eta_dot(t, gains, gains.vartheta)


def test_closed_form_matches_integration():
    c1 = c2 = 50.0
    mu = 5.0
    g1, g2 = 1.0 - 1.0 / mu, 1.0 + 1.0 / mu

    def rhs(t, y):
        V = max(y[0], 0.0)
        return [-c1 * V**g1 - c2 * V**g2]

    rng = np.random.default_rng(1)
    for V0 in 10.0 ** rng.uniform(-3.0, 3.0, size=20):
        T = lyapunov_settling_time(V0, c1, c2, mu)
        assert T < 0.2
        times = np.linspace(0.0, T, 200)
        sol = solve_ivp(rhs, (0.0, T), [V0], method="DOP853", t_eval=times, rtol=1e-12, atol=1e-16)
        for t, V_num in zip(sol.t, sol.y[0]):
            V_exact = lyapunov_closed_form(t, V0, c1, c2, mu)
            if V_exact < 1e-8:
                break
            assert V_num == pytest.approx(V_exact, rel=1e-4)
        assert lyapunov_closed_form(T, V0, c1, c2, mu) <= 1e-12


def test_closed_form_zero_start():
    assert lyapunov_closed_form(0.1, 0.0, 50.0, 50.0, 5.0) == 0.0
    assert lyapunov_settling_time(0.0, 50.0, 50.0, 5.0) == 0.0


def test_ft_settling_bound_arithmetic():
    bound = ft_settling_bound(np.array([3.0, 4.0]), 2.0 * np.eye(2), 0.5)
    assert bound == pytest.approx(5.0 * 0.5 / 0.5)
