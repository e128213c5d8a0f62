"""Euler scheme and fixed-point operator for neutral stochastic delay dynamics.

The state solves
    d[X(t) - Q(t, X_t)] = b(t, X_t) dt + gamma(t, X_t) d<B>_t + sigma(t, X_t) dB_t
with X = eta on [-tau, 0]. One Euler step advances the difference of the
neutral term with increments of time, quadratic variation and the driving
path; the new neutral value makes the step implicit and is resolved by
fixed-point iteration (the neutral Lipschitz constant is below 1/4, so the
iteration contracts). Everything runs on (batch, nodes) matrices; the
single-path entry points wrap batches of one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InputError, StepError
from .functionals import CoeffSet
from .grids import BatchSegmentView, Path, TimeGrid, trapezoid_weights
from .scenarios import GBMPath


@dataclass(frozen=True)
class EulerConfig:
    """Neutral-solve tolerance/limit and the divergence clamp."""

    fp_tol: float = 1e-12
    fp_max_iter: int = 50
    state_clamp: float = 1e8


def history_values(eta, grid: TimeGrid, batch: int | None = None) -> np.ndarray:
    """Resolve eta (Path, callable, scalar, or node array) to history node values.

    Returns shape (n_hist+1,) or, when batch is given and eta is a matrix,
    (batch, n_hist+1).
    """
    nh = grid.n_hist
    if isinstance(eta, Path):
        if abs(eta.grid.h - grid.h) > 1e-12 or eta.grid.n_hist < nh:
            raise InputError("history path does not match the grid")
        return eta.values[eta.grid.n_hist - nh : eta.grid.n_hist + 1].copy()
    if callable(eta):
        return np.asarray([float(eta(t)) for t in grid.nodes[: nh + 1]])
    arr = np.asarray(eta, dtype=float)
    if arr.ndim == 0:
        return np.full(nh + 1, float(arr))
    if arr.ndim == 1 and arr.shape == (nh + 1,):
        return arr.copy()
    if arr.ndim == 2 and batch is not None and arr.shape == (batch, nh + 1):
        return arr.copy()
    raise InputError(f"cannot interpret history of shape {arr.shape}")


def _step_controls(control, grid: TimeGrid):
    """Per-step action table: None, ('strict', u) or ('relaxed', atoms, W)."""
    if control is None:
        return None
    return control.step_table(grid)


def _coeff_step(f, t, seg, table, k):
    """Evaluate one coefficient at step k under the resolved control table.

    A strict table row may hold one action per batch path; a relaxed table
    row may hold one weight row per batch path.
    """
    if table is None or not f.is_controlled:
        return f.eval(t, seg)
    if table[0] == "strict":
        u = table[1][k]
        return f.eval(t, seg, float(u) if np.ndim(u) == 0 else u)
    _, atoms, weights = table
    return f.eval_relaxed(t, seg, atoms, weights[k])


def simulate_batch(coeffs: CoeffSet, eta, db: np.ndarray, dqv: np.ndarray,
                   grid: TimeGrid, control=None, cfg: EulerConfig | None = None) -> np.ndarray:
    """Euler march for a batch of driving-path increments.

    db, dqv: (batch, n_fwd) increments of the path and its quadratic
    variation. Returns the full (batch, n+1) node-value matrix including the
    history block.
    """
    if cfg is None:
        cfg = EulerConfig()
    db = np.atleast_2d(np.asarray(db, dtype=float))
    dqv = np.atleast_2d(np.asarray(dqv, dtype=float))
    if db.shape != dqv.shape or db.shape[1] != grid.n_fwd:
        raise InputError(f"increment shapes {db.shape}/{dqv.shape} do not match the grid")
    batch = db.shape[0]
    hist = history_values(eta, grid, batch)

    v = np.empty((batch, grid.n + 1))
    v[:, : grid.n_hist + 1] = hist
    w = trapezoid_weights(grid)
    table = _step_controls(control, grid)
    h = grid.h
    nh = grid.n_hist
    neutral_static = coeffs.neutral.scale == 0.0

    for i in range(nh, grid.n):
        k = i - nh
        t_i = k * h
        seg = BatchSegmentView(grid, v, i, w)
        q_old = coeffs.neutral.eval(t_i, seg)
        rhs = (
            v[:, i]
            - q_old
            + _coeff_step(coeffs.drift, t_i, seg, table, k) * h
            + _coeff_step(coeffs.qv_drift, t_i, seg, table, k) * dqv[:, k]
            + coeffs.diffusion.eval(t_i, seg) * db[:, k]
        )
        t_next = (k + 1) * h
        v[:, i + 1] = v[:, i]
        seg_next = BatchSegmentView(grid, v, i + 1, w)
        if neutral_static:
            v[:, i + 1] = rhs + coeffs.neutral.eval(t_next, seg_next)
        else:
            for _ in range(cfg.fp_max_iter):
                z = rhs + coeffs.neutral.eval(t_next, seg_next)
                delta = float(np.max(np.abs(z - v[:, i + 1])))
                v[:, i + 1] = z
                if delta <= cfg.fp_tol * max(1.0, float(np.max(np.abs(z)))):
                    break
            else:
                raise StepError(f"neutral fixed point stalled at step {k + 1}", step=k + 1)
        worst = float(np.max(np.abs(v[:, i + 1])))
        if not np.isfinite(worst) or worst > cfg.state_clamp:
            raise DivergenceError(
                f"state magnitude {worst:.3e} exceeded the clamp at step {k + 1}",
                step=k + 1,
            )
    return v


def simulate_nsfde(coeffs: CoeffSet, eta, gbm: GBMPath, control=None,
                   cfg: EulerConfig | None = None) -> Path:
    """Single-path Euler solution driven by one sampled scenario path."""
    v = simulate_batch(coeffs, eta, gbm.db[None, :], gbm.dqv[None, :],
                       gbm.grid, control, cfg)
    return Path(gbm.grid, v[0])


def picard_apply_batch(values: np.ndarray, coeffs: CoeffSet, eta,
                       db: np.ndarray, dqv: np.ndarray, grid: TimeGrid,
                       control=None) -> np.ndarray:
    """One application of the solution operator to frozen input paths.

    Theta(X)(t) = eta(0) + Q(t, X_t) - Q(0, X_0) + sum of drift, qv-drift and
    diffusion increments read off the input path (left endpoints). The input
    history block is overwritten with eta before evaluation, and the image
    keeps eta as its history.
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    db = np.atleast_2d(np.asarray(db, dtype=float))
    dqv = np.atleast_2d(np.asarray(dqv, dtype=float))
    batch = values.shape[0]
    if values.shape[1] != grid.n + 1:
        raise InputError("input path matrix does not match the grid")
    hist = history_values(eta, grid, batch)

    x = values.copy()
    x[:, : grid.n_hist + 1] = hist
    w = trapezoid_weights(grid)
    table = _step_controls(control, grid)
    h = grid.h
    nh = grid.n_hist

    q = np.empty((batch, grid.n_fwd + 1))
    incr = np.zeros((batch, grid.n_fwd))
    for i in range(nh, grid.n + 1):
        k = i - nh
        seg = BatchSegmentView(grid, x, i, w)
        q[:, k] = coeffs.neutral.eval(k * h, seg)
        if i < grid.n:
            incr[:, k] = (
                _coeff_step(coeffs.drift, k * h, seg, table, k) * h
                + _coeff_step(coeffs.qv_drift, k * h, seg, table, k) * dqv[:, k]
                + coeffs.diffusion.eval(k * h, seg) * db[:, k]
            )
    out = np.empty_like(x)
    out[:, : nh + 1] = hist
    x0 = out[:, nh].copy()
    sums = np.concatenate([np.zeros((batch, 1)), np.cumsum(incr, axis=1)], axis=1)
    fwd = x0[:, None] + q - q[:, [0]] + sums
    out[:, nh:] = fwd
    return out


def picard_apply(x: Path, coeffs: CoeffSet, eta, gbm: GBMPath, control=None) -> Path:
    out = picard_apply_batch(x.values[None, :], coeffs, eta,
                             gbm.db[None, :], gbm.dqv[None, :], gbm.grid, control)
    return Path(gbm.grid, out[0])


@dataclass(frozen=True)
class NCNormConfig:
    """Exponential weight rate C of the discounted L2 path norm."""

    c_rate: float

    @classmethod
    def from_constants(cls, k1: float, horizon: float, var_max: float,
                       doob_const: float = 4.0) -> "NCNormConfig":
        return cls(8.0 * k1**2 * (horizon + horizon * var_max + doob_const))


def _fwd_matrix(x, grid: TimeGrid) -> np.ndarray:
    """(batch, n_fwd+1) forward-node values from a Path, array or matrix."""
    if isinstance(x, Path):
        arr = x.values[None, :]
    else:
        arr = np.atleast_2d(np.asarray(x, dtype=float))
    if arr.shape[1] == grid.n + 1:
        return arr[:, grid.n_hist :]
    if arr.shape[1] == grid.n_fwd + 1:
        return arr
    raise InputError(f"cannot interpret path values of shape {arr.shape}")


def _as_groups(x, grid: TimeGrid):
    """Normalise Path | matrix | list-of-groups input to a list of matrices."""
    if isinstance(x, (list, tuple)):
        groups = []
        for g in x:
            if isinstance(g, (list, tuple)):
                groups.append(np.vstack([_fwd_matrix(p, grid) for p in g]))
            else:
                groups.append(_fwd_matrix(g, grid))
        return groups
    return [_fwd_matrix(x, grid)]


def nc_norm(x, y, grid: TimeGrid, cfg: NCNormConfig) -> float:
    """Discounted L2 distance (int_0^T e^{-2Cs} E|X-Y|^2 ds)^{1/2}.

    x, y: single paths, (batch, nodes) matrices, or lists of per-policy
    groups of either. The worst-case expectation at each time is the max over
    groups of the within-group mean; single paths degenerate to the pointwise
    squared gap.
    """
    gx = _as_groups(x, grid)
    gy = _as_groups(y, grid)
    if len(gx) != len(gy):
        raise InputError("x and y must have the same group structure")
    sq = []
    for mx, my in zip(gx, gy):
        if mx.shape != my.shape:
            raise InputError("matched ensembles must have equal shapes")
        sq.append(np.mean((mx - my) ** 2, axis=0))
    e_sq = np.max(np.vstack(sq), axis=0)
    s = grid.fwd_nodes
    integrand = np.exp(-2.0 * cfg.c_rate * s) * e_sq
    tw = np.full(grid.n_fwd + 1, grid.h)
    tw[0] = tw[-1] = grid.h / 2.0
    return float(np.sqrt(integrand @ tw))


def contraction_ratio(x, y, coeffs: CoeffSet, noise, eta, grid: TimeGrid,
                      cfg: NCNormConfig, control=None) -> float:
    """nc_norm(Theta x, Theta y) / nc_norm(x, y) on matched noise ensembles.

    noise: list of (db, dqv) pairs, one per group, frozen across both
    applications. A denominator below 1e-9 is rejected.
    """
    gx = _as_groups(x, grid)
    gy = _as_groups(y, grid)
    if not (len(gx) == len(gy) == len(noise)):
        raise InputError("x, y and noise must have the same group structure")

    def lift(groups):
        full = []
        for g in groups:
            m = np.empty((g.shape[0], grid.n + 1))
            m[:, grid.n_hist :] = g
            m[:, : grid.n_hist + 1] = history_values(eta, grid)
            full.append(m)
        return full

    tx = [picard_apply_batch(m, coeffs, eta, db, dqv, grid, control)
          for m, (db, dqv) in zip(lift(gx), noise)]
    ty = [picard_apply_batch(m, coeffs, eta, db, dqv, grid, control)
          for m, (db, dqv) in zip(lift(gy), noise)]
    den = nc_norm(gx, gy, grid, cfg)
    if den < 1e-9:
        raise InputError("input ensembles are numerically identical")
    return nc_norm(tx, ty, grid, cfg) / den
