"""Time grids, discrete paths and path segments.

A path lives on a uniform grid over [-tau, T] that contains 0 as a node; the
delay window [t - tau, t] of any node t >= 0 is again made of grid nodes.
Segments view the trailing window of a path and interpolate linearly between
nodes, which is all the coefficient functionals ever need.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError

# Relative slack for "exact multiple" grid checks.
_ALIGN_TOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_i = (i - n_hist) * h, i = 0..n, spanning [-tau, T].

    n_hist is the number of history steps, so t_0 = -tau, t_{n_hist} = 0
    (exactly, by construction) and t_n = T. tau and T must both be integer
    multiples of the step h = (T + tau) / n.
    """

    tau: float
    horizon: float
    n: int
    h: float = field(init=False)
    n_hist: int = field(init=False)

    def __post_init__(self):
        if not (self.horizon > 0.0):
            raise ConfigurationError("horizon must be positive", field="grid.horizon")
        if self.tau < 0.0:
            raise ConfigurationError("delay must be nonnegative", field="grid.tau")
        if self.n < 1:
            raise ConfigurationError("need at least one step", field="grid.n")
        h = (self.horizon + self.tau) / self.n
        n_hist = round(self.tau / h) if self.tau > 0.0 else 0
        if abs(n_hist * h - self.tau) > _ALIGN_TOL * max(1.0, self.tau):
            raise ConfigurationError(
                f"delay {self.tau} is not an integer multiple of the step {h}",
                field="grid.n",
            )
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "n_hist", n_hist)

    @property
    def n_fwd(self) -> int:
        """Number of steps in [0, T]."""
        return self.n - self.n_hist

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.n + 1) - self.n_hist) * self.h

    @property
    def fwd_nodes(self) -> np.ndarray:
        return np.arange(self.n_fwd + 1) * self.h

    def index_of(self, t: float) -> int:
        """Index of the grid node at time t; t must sit on the grid."""
        i = round(t / self.h) + self.n_hist
        if i < 0 or i > self.n or abs((i - self.n_hist) * self.h - t) > _ALIGN_TOL * max(1.0, abs(t)):
            raise InputError(f"time {t} is not a node of the grid")
        return i


class Path:
    """Immutable values on the nodes of a TimeGrid."""

    def __init__(self, grid: TimeGrid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n + 1,):
            raise InputError(
                f"expected {grid.n + 1} node values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InputError("path values must be finite")
        self.grid = grid
        self.values = values.copy()
        self.values.setflags(write=False)

    def value_at(self, t: float) -> float:
        return float(self.values[self.grid.index_of(t)])

    def segment(self, t: float) -> "Segment":
        return Segment(self, self.grid.index_of(t))

    def __repr__(self):
        return f"Path(n={self.grid.n}, range=[{self.values.min():.4g}, {self.values.max():.4g}])"


class Segment:
    """Trailing window view X_t(lam) = X(t + lam), lam in [-tau, 0].

    Evaluation interpolates linearly between the two bracketing nodes; node
    hits return the stored value. Indices that would fall before the first
    grid node read the first node's value (the pre-history padding rule).
    """

    def __init__(self, path: Path, anchor: int):
        grid = path.grid
        if anchor < grid.n_hist or anchor > grid.n:
            raise InputError(f"segment anchor index {anchor} is before time 0")
        self.path = path
        self.anchor = anchor

    @property
    def t(self) -> float:
        return (self.anchor - self.path.grid.n_hist) * self.path.grid.h

    def value_at_zero(self) -> float:
        return float(self.path.values[self.anchor])

    def eval(self, lam: float) -> float:
        grid = self.path.grid
        if lam > _ALIGN_TOL or lam < -grid.tau - _ALIGN_TOL * max(1.0, grid.tau):
            raise InputError(f"segment offset {lam} outside [-{grid.tau}, 0]")
        rel = lam / grid.h if grid.h > 0 else 0.0
        rel = min(0.0, max(rel, -float(grid.n_hist)))
        j = int(np.floor(rel))
        frac = rel - j
        lo = max(self.anchor + j, 0)
        hi = max(self.anchor + j + 1, 0)
        v = self.path.values
        return float(v[lo] + frac * (v[min(hi, grid.n)] - v[lo]))

    def window_integral(self) -> float:
        """Trapezoid integral of X over [t - tau, t] on the grid nodes."""
        grid = self.path.grid
        if grid.n_hist == 0:
            return 0.0
        window = self.path.values[self.anchor - grid.n_hist : self.anchor + 1]
        return float(window @ trapezoid_weights(grid))


def segment_eval(seg: Segment, lam: float) -> float:
    return seg.eval(lam)


def integral_functional(seg: Segment) -> float:
    return seg.window_integral()


class BatchSegmentView:
    """Vectorized counterpart of Segment over a (batch, nodes) value matrix.

    Exposes the same two probes the coefficient functionals use. Kept in this
    module so the scalar and batched readings cannot drift apart silently.
    """

    def __init__(self, grid: TimeGrid, values: np.ndarray, anchor: int, trapz_w: np.ndarray):
        self.grid = grid
        self.values = values
        self.anchor = anchor
        self._trapz_w = trapz_w

    def value_at_zero(self) -> np.ndarray:
        return self.values[:, self.anchor]

    def window_integral(self) -> np.ndarray:
        nh = self.grid.n_hist
        if nh == 0:
            return np.zeros(self.values.shape[0])
        return self.values[:, self.anchor - nh : self.anchor + 1] @ self._trapz_w


def trapezoid_weights(grid: TimeGrid) -> np.ndarray:
    """Node weights of the trapezoid rule over the delay window."""
    nh = grid.n_hist
    w = np.full(nh + 1, grid.h)
    if nh > 0:
        w[0] = w[-1] = grid.h / 2.0
    return w
