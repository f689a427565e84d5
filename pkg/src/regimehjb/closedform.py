"""Analytic results for the defaultable-stock log-utility problem.

Everything here is exact arithmetic on the market parameters: the optimal
constant stock weight, the all-cash continuation value, the linear ODE for
the time component f(t) of the pre-default value J(W, t) = f(t) + log W,
its explicit solution, and a closed-form integral for the expected log
utility of any constant policy (the independent oracle used to cross-check
the other solution routes).
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Tuple

import numpy as np

from .model import DefaultLossModel, MarketParams

# Below this hazard the exact f(t) is replaced by its h -> 0 limit to avoid
# catastrophic cancellation in (1 - exp(-h s)) / h.
H_ZERO_THRESHOLD = 1e-10


class FCoefficientVariant(Enum):
    """Two forms of the constant K in the f(t) equation.

    PAPER keeps the (2 - sigma^2)/2 prefactor: K = (mu-r-h)^2 (2-sigma^2) / (2 sigma^2).
    DERIVED uses the 1/2 prefactor that follows from substituting the optimal
    weight into the drift expansion: K = (mu-r-h)^2 / (2 sigma^2).
    The two coincide exactly when sigma^2 = 1; only DERIVED reproduces the
    exact-integral oracle for general sigma.
    """

    PAPER = "paper"
    DERIVED = "derived"


def optimal_weight(params: MarketParams) -> float:
    """Optimal constant stock weight (mu - r - h) / sigma^2.

    With h = 0 this reduces, bitwise, to the classical (mu - r) / sigma^2.
    """
    return (params.mu - params.r - params.h) / (params.sigma * params.sigma)


def j_after(params: MarketParams, w: float, t: float) -> float:
    """All-cash log-utility continuation value r*(t - T) + log(w).

    Note the rate term is signed by t - T (non-positive before maturity);
    the numerical verification legs use the forward-growth convention
    r*(T - t) which differs by 2 r (T - t).
    """
    if w <= 0.0:
        raise ValueError("wealth must be positive")
    if not 0.0 <= t <= params.horizon_T:
        raise ValueError("t must lie in [0, horizon_T]")
    return params.r * (t - params.horizon_T) + math.log(w)


def f_ode_coefficients(params: MarketParams,
                       variant: FCoefficientVariant = FCoefficientVariant.DERIVED,
                       ) -> Tuple[float, float]:
    """Constants (K, g) of the linear terminal-value equation for f(t).

    The equation is  f'(t) - h f(t) = -K - r - h r (T - t)  with f(T) = 0;
    g = -K is the composite constant of its shifted form.
    """
    m = params.mu - params.r - params.h
    sig2 = params.sigma * params.sigma
    if variant is FCoefficientVariant.PAPER:
        k = m * m * (2.0 - sig2) / (2.0 * sig2)
    else:
        k = m * m / (2.0 * sig2)
    return k, -k


def f_closed_form(params: MarketParams, t: float,
                  variant: FCoefficientVariant = FCoefficientVariant.DERIVED,
                  ) -> float:
    """Explicit solution of the f(t) terminal-value equation.

    For h above the zero threshold:

        f(t) = r (T - t) + (K / h) * (1 - exp(-h (T - t))),

    and the h -> 0 limit (K + r) (T - t) below it. f(T) = 0 exactly in
    both branches.
    """
    if not 0.0 <= t <= params.horizon_T:
        raise ValueError("t must lie in [0, horizon_T]")
    k, _ = f_ode_coefficients(params, variant)
    s = params.horizon_T - t
    h = params.h
    if h <= H_ZERO_THRESHOLD:
        return (k + params.r) * s
    return params.r * s + (k / h) * (-math.expm1(-h * s))


def policy_log_drift(params: MarketParams, pi) -> float:
    """Log-wealth drift r + pi (mu - r) - pi^2 sigma^2 / 2 of a constant policy."""
    pi = np.asarray(pi, dtype=float)
    out = params.r + pi * (params.mu - params.r) - 0.5 * pi * pi * params.sigma ** 2
    return float(out) if out.ndim == 0 else out


def expected_log_utility_exact(params: MarketParams, pi,
                               loss: DefaultLossModel = DefaultLossModel.EXPONENTIAL):
    """Expected terminal log wealth of a constant policy, in closed form.

    Integrates the defaulted branch against the exponential default-time
    density: with alpha the policy log drift and L the log drop at default,

        E = log w0 + exp(-h T) alpha T
            + int_0^T h exp(-h tau) (alpha tau + L + r (T - tau)) dtau,

    which collapses to  log w0 + r T + (1 - exp(-h T)) ((alpha - r)/h + L).
    h = 0 returns log w0 + alpha T. Accepts scalar or array pi.
    """
    pi_arr = np.asarray(pi, dtype=float)
    drop = loss.log_wealth_drop(pi_arr)
    alpha = np.asarray(policy_log_drift(params, pi_arr))
    log_w0 = math.log(params.w0)
    T = params.horizon_T
    if params.h == 0.0:
        out = log_w0 + alpha * T
    else:
        weight = -math.expm1(-params.h * T)
        out = log_w0 + params.r * T + weight * ((alpha - params.r) / params.h + drop)
    return float(out) if out.ndim == 0 else out
