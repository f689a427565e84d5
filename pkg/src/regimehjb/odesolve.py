"""Numerical integration of the f(t) terminal-value equation.

Second, closed-form-free route to f(t): classical fixed-step RK4 on the
linear equation, run backward from f(T) = 0. Kept deliberately independent
of `closedform.f_closed_form` so the two can cross-check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closedform import FCoefficientVariant, f_ode_coefficients
from .model import FCurve, MarketParams


@dataclass(frozen=True)
class OdeConfig:
    """Fixed-step integrator settings.

    The step is adjusted downward so that it divides the horizon into an
    integer number of intervals (count rounded up).
    """

    step: float = 1e-4
    method: str = "rk4"

    def __post_init__(self):
        if self.step <= 0.0:
            raise ValueError("step must be positive")
        if self.method.lower() != "rk4":
            raise ValueError("only the rk4 method is available")

    def n_intervals(self, horizon: float) -> int:
        # the -1e-9 guard keeps e.g. step=1e-4, T=1 at exactly 10000 intervals
        # despite binary rounding of T/step
        return max(1, math.ceil(horizon / self.step - 1e-9))


def solve_f_backward(params: MarketParams,
                     variant: FCoefficientVariant = FCoefficientVariant.DERIVED,
                     cfg: OdeConfig = OdeConfig()) -> FCurve:
    """Integrate f'(t) = h f(t) - K - r - h r (T - t) backward from f(T) = 0.

    Reparameterized as forward integration in the remaining horizon
    s = T - t, so a single RK4 kernel handles the terminal-value problem:

        g(s) = f(T - s),   g'(s) = -h g(s) + K + r + h r s,   g(0) = 0.

    Returns an FCurve on the uniform grid including t = 0 and t = T.
    """
    k, _ = f_ode_coefficients(params, variant)
    h, r, T = params.h, params.r, params.horizon_T

    def rhs(s, g):
        return -h * g + k + r + h * r * s

    n = cfg.n_intervals(T)
    ds = T / n
    values = np.empty(n + 1)
    values[0] = 0.0
    g = 0.0
    for i in range(n):
        s = i * ds
        k1 = rhs(s, g)
        k2 = rhs(s + 0.5 * ds, g + 0.5 * ds * k1)
        k3 = rhs(s + 0.5 * ds, g + 0.5 * ds * k2)
        k4 = rhs(s + ds, g + ds * k3)
        g += ds * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        values[i + 1] = g

    times = np.linspace(0.0, T, n + 1)
    return FCurve(times=times, values=values[::-1].copy())
