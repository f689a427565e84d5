"""Explicit finite-difference solver for the coupled two-regime system.

The value function splits into a post-switch surface (a plain one-regime
dynamic-programming PDE) and a pre-switch surface whose equation carries the
hazard coupling term h * (V_after(jump target) - V_pre). Both are stepped
backward in time with an explicit monotone scheme: first derivatives
upwinded by drift sign, central second derivatives, one-sided first
derivatives and zero curvature at the state boundaries (linear
extrapolation), pointwise exhaustive minimization over a fixed control
grid. Jump targets are evaluated on the post-switch surface by linear
interpolation, clamped to the grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .model import RegimeControlProblem

# hazard * dt above this triggers a warning: the scheme drops the
# O((h dt)^2) correction of the switch probability over one step
HAZARD_DT_WARN = 0.1


class CflViolationError(ValueError):
    """Explicit-scheme stability bound dt <= dx^2 / max(vol^2) is violated."""

    def __init__(self, message: str, min_n_t: int):
        super().__init__(message)
        self.min_n_t = min_n_t


class NumericalError(RuntimeError):
    """Non-finite quantity encountered during a solve."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform time/state grid plus the discrete control set.

    n_x state nodes on [x_min, x_max], n_t time steps (n_t + 1 rows),
    control_nodes ascending and inside the problem's control bounds
    (checked when grid and problem meet, at solve time -- the CFL bound
    needs the problem's coefficients too).
    """

    x_min: float
    x_max: float
    n_x: int
    n_t: int
    control_nodes: np.ndarray

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")
        if self.n_x < 3:
            raise ValueError("need at least 3 state nodes")
        if self.n_t < 1:
            raise ValueError("need at least 1 time step")
        nodes = np.asarray(self.control_nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size == 0:
            raise ValueError("control_nodes must be a non-empty 1-D array")
        if nodes.size > 1 and not np.all(np.diff(nodes) > 0.0):
            raise ValueError("control_nodes must be strictly ascending")
        nodes.setflags(write=False)
        object.__setattr__(self, "control_nodes", nodes)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def x_nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    def dt(self, horizon: float) -> float:
        return horizon / self.n_t

    def times(self, horizon: float) -> np.ndarray:
        return np.linspace(0.0, horizon, self.n_t + 1)

    def interior_mask(self, margin_lo: float, margin_hi: float) -> np.ndarray:
        """Nodes at least margin_lo above x_min and margin_hi below x_max."""
        x = self.x_nodes
        return (x >= self.x_min + margin_lo) & (x <= self.x_max - margin_hi)


@dataclass(frozen=True)
class ValueSurface:
    """Solved surfaces: (n_t+1, n_x) values per regime plus the policy grid."""

    v_pre: np.ndarray
    v_after: np.ndarray
    policy: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        shape = (self.grid.n_t + 1, self.grid.n_x)
        for name in ("v_pre", "v_after", "policy"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _eval_coeff(fn, t, x_col, u_row, shape) -> np.ndarray:
    out = np.asarray(fn(t, x_col, u_row), dtype=float)
    return np.broadcast_to(out, shape)


def _max_sq_vol(problem: RegimeControlProblem, grid: GridSpec, regime: str) -> float:
    fn = problem.vol_pre if regime == "pre" else problem.vol_post
    x_col = grid.x_nodes[:, None]
    u_row = grid.control_nodes[None, :]
    shape = (grid.n_x, grid.control_nodes.size)
    worst = 0.0
    for t in (0.0, 0.5 * problem.horizon, problem.horizon):
        vol = _eval_coeff(fn, t, x_col, u_row, shape)
        worst = max(worst, float(np.max(vol * vol)))
    return worst


def validate_grid_for(problem: RegimeControlProblem, grid: GridSpec, regime: str) -> None:
    """Control-bounds membership plus the explicit-scheme CFL bound.

    Raises CflViolationError naming the minimal admissible n_t when
    dt > dx^2 / max(vol^2) for the requested regime's diffusion.
    """
    lo, hi = problem.control_bounds
    nodes = grid.control_nodes
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    if nodes[0] < lo - tol or nodes[-1] > hi + tol:
        raise ValueError("control_nodes fall outside the problem's control_bounds")

    sq = _max_sq_vol(problem, grid, regime)
    if sq <= 0.0:
        return
    dt = grid.dt(problem.horizon)
    limit = grid.dx ** 2 / sq
    if dt > limit:
        min_n_t = int(np.ceil(problem.horizon * sq / grid.dx ** 2))
        raise CflViolationError(
            f"CFL violation for the {regime} regime: dt={dt:.3e} exceeds "
            f"dx^2/max(vol^2)={limit:.3e}; need n_t >= {min_n_t}",
            min_n_t=min_n_t,
        )


def _one_sided_derivatives(v_row: np.ndarray, dx: float):
    """Forward/backward first differences and the central second difference.

    At the boundary where a stencil arm is missing, the available one-sided
    difference is used for both directions and the second difference is set
    to zero (linear extrapolation of the solution beyond the grid).
    """
    d_fwd = np.empty_like(v_row)
    d_bwd = np.empty_like(v_row)
    d_fwd[:-1] = (v_row[1:] - v_row[:-1]) / dx
    d_fwd[-1] = (v_row[-1] - v_row[-2]) / dx
    d_bwd[1:] = (v_row[1:] - v_row[:-1]) / dx
    d_bwd[0] = (v_row[1] - v_row[0]) / dx
    d2 = np.zeros_like(v_row)
    d2[1:-1] = (v_row[2:] - 2.0 * v_row[1:-1] + v_row[:-2]) / (dx * dx)
    return d_fwd, d_bwd, d2


def post_hamiltonian(problem: RegimeControlProblem, grid: GridSpec, t: float,
                     v_row: np.ndarray) -> np.ndarray:
    """Discrete post-switch Hamiltonian on the (state, control) mesh."""
    x = grid.x_nodes
    x_col = x[:, None]
    u_row = grid.control_nodes[None, :]
    shape = (grid.n_x, grid.control_nodes.size)
    drift = _eval_coeff(problem.drift_post, t, x_col, u_row, shape)
    vol = _eval_coeff(problem.vol_post, t, x_col, u_row, shape)
    cost = _eval_coeff(problem.running_cost, t, x_col, u_row, shape)
    d_fwd, d_bwd, d2 = _one_sided_derivatives(v_row, grid.dx)
    dv = np.where(drift >= 0.0, d_fwd[:, None], d_bwd[:, None])
    return drift * dv + 0.5 * vol * vol * d2[:, None] + cost


def pre_hamiltonian(problem: RegimeControlProblem, grid: GridSpec, t: float,
                    v_pre_row: np.ndarray, v_after_row: np.ndarray) -> np.ndarray:
    """Discrete pre-switch Hamiltonian including the hazard coupling term.

    The post-switch surface is read at the jump target by linear
    interpolation in x; targets outside the grid clamp to the boundary
    node. With zero hazard the coupling (and the jump map) is never
    evaluated, so the pre solve is bitwise independent of the post regime.
    """
    x = grid.x_nodes
    x_col = x[:, None]
    u_row = grid.control_nodes[None, :]
    shape = (grid.n_x, grid.control_nodes.size)
    drift = _eval_coeff(problem.drift_pre, t, x_col, u_row, shape)
    vol = _eval_coeff(problem.vol_pre, t, x_col, u_row, shape)
    cost = _eval_coeff(problem.running_cost, t, x_col, u_row, shape)
    d_fwd, d_bwd, d2 = _one_sided_derivatives(v_pre_row, grid.dx)
    dv = np.where(drift >= 0.0, d_fwd[:, None], d_bwd[:, None])
    ham = drift * dv + 0.5 * vol * vol * d2[:, None] + cost
    if problem.hazard > 0.0:
        targets = _eval_coeff(problem.jump_map, t, x_col, u_row, shape)
        if not np.isfinite(targets).all():
            raise NumericalError("jump_map produced a non-finite target")
        coupled = np.interp(targets.ravel(), x, v_after_row).reshape(shape)
        ham = ham + problem.hazard * (coupled - v_pre_row[:, None])
    return ham


def _terminal_row(problem: RegimeControlProblem, grid: GridSpec) -> np.ndarray:
    row = np.asarray(problem.terminal_cost(grid.x_nodes), dtype=float)
    return np.broadcast_to(row, (grid.n_x,)).copy()


def solve_after(problem: RegimeControlProblem, grid: GridSpec) -> np.ndarray:
    """Backward explicit solve of the post-switch surface.

    Each step reads the known later row: v[i] = v[i+1] + dt * min_u H,
    with coefficients evaluated at the known row's time.
    """
    validate_grid_for(problem, grid, "post")
    dt = grid.dt(problem.horizon)
    times = grid.times(problem.horizon)
    v = np.empty((grid.n_t + 1, grid.n_x))
    v[-1] = _terminal_row(problem, grid)
    for i in range(grid.n_t - 1, -1, -1):
        ham = post_hamiltonian(problem, grid, times[i + 1], v[i + 1])
        v[i] = v[i + 1] + dt * ham.min(axis=1)
    return v


def solve_pre(problem: RegimeControlProblem, v_after: np.ndarray,
              grid: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Backward explicit solve of the coupled pre-switch surface.

    Returns (v_pre, policy); policy[i] holds the per-node minimizing
    control chosen while stepping onto row i (argmin ties resolve to the
    smallest control), and the terminal row's policy is the minimizer of
    the Hamiltonian evaluated on the terminal data itself.
    """
    validate_grid_for(problem, grid, "pre")
    v_after = np.asarray(v_after, dtype=float)
    if v_after.shape != (grid.n_t + 1, grid.n_x):
        raise ValueError("v_after was not produced on this grid")
    dt = grid.dt(problem.horizon)
    if problem.hazard * dt > HAZARD_DT_WARN:
        warnings.warn(
            f"hazard*dt = {problem.hazard * dt:.3g} > {HAZARD_DT_WARN}; the one-step "
            "switch probability is too coarse for the explicit coupling",
            RuntimeWarning,
        )
    times = grid.times(problem.horizon)
    nodes = grid.control_nodes
    v = np.empty((grid.n_t + 1, grid.n_x))
    policy = np.empty_like(v)
    v[-1] = _terminal_row(problem, grid)
    ham_T = pre_hamiltonian(problem, grid, times[-1], v[-1], v_after[-1])
    policy[-1] = nodes[np.argmin(ham_T, axis=1)]
    for i in range(grid.n_t - 1, -1, -1):
        ham = pre_hamiltonian(problem, grid, times[i + 1], v[i + 1], v_after[i + 1])
        v[i] = v[i + 1] + dt * ham.min(axis=1)
        policy[i] = nodes[np.argmin(ham, axis=1)]
    return v, policy


def solve_system(problem: RegimeControlProblem, grid: GridSpec) -> ValueSurface:
    """Post-switch solve followed by the coupled pre-switch solve."""
    validate_grid_for(problem, grid, "post")
    validate_grid_for(problem, grid, "pre")
    v_after = solve_after(problem, grid)
    v_pre, policy = solve_pre(problem, v_after, grid)
    return ValueSurface(v_pre=v_pre, v_after=v_after, policy=policy, grid=grid)


def utility_view(surface: ValueSurface) -> Tuple[np.ndarray, np.ndarray]:
    """Maximization view of a minimization solve: (J_pre, J_after) = (-v_pre, -v_after)."""
    return -surface.v_pre, -surface.v_after
