"""Nonlinear heat equation du/dt = G(d2u/dx2) and the distributions it generates.

G(a) = 0.5 * (sigma_max^2 * a_plus - sigma_min^2 * a_minus) is the sublinear
generator of a centered distribution with variance uncertainty in
[sigma_min^2, sigma_max^2]. The solver is an explicit monotone finite
difference march with frozen Dirichlet boundaries; u(t, 0) with a smoothed
half-line indicator as initial data yields the worst-case distribution
function, and its y-derivative the plotted density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError

_EPS = 1e-12


@dataclass(frozen=True)
class VolBounds:
    """Volatility band 0 < sigma_min <= sigma_max."""

    sigma_min: float
    sigma_max: float

    def __post_init__(self):
        if not (0.0 < self.sigma_min <= self.sigma_max):
            raise ConfigurationError(
                f"need 0 < sigma_min <= sigma_max, got ({self.sigma_min}, {self.sigma_max})",
                field="bounds",
            )

    @property
    def var_min(self) -> float:
        return self.sigma_min**2

    @property
    def var_max(self) -> float:
        return self.sigma_max**2


def g_of(a, bounds: VolBounds):
    """Generator G(a) = 0.5*(var_max*a^+ - var_min*a^-); works elementwise."""
    a = np.asarray(a, dtype=float)
    out = 0.5 * (bounds.var_max * np.maximum(a, 0.0) - bounds.var_min * np.maximum(-a, 0.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform x-grid with nx interior points; boundaries carried separately."""

    x_min: float
    x_max: float
    nx: int

    def __post_init__(self):
        if not (self.x_min < 0.0 < self.x_max):
            raise ConfigurationError("spatial domain must contain 0 in its interior", field="space")
        if self.nx < 3:
            raise ConfigurationError("need at least 3 interior points", field="space.nx")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx + 1)

    @property
    def points(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx + 2)

    @classmethod
    def symmetric(cls, half_width: float, dx: float) -> "SpatialGrid":
        """Symmetric grid around 0 with node spacing dx (0 is a node)."""
        m = int(np.ceil(half_width / dx - _EPS))
        return cls(-m * dx, m * dx, 2 * m - 1)


class GHeatSolution:
    """March result: value field per stored time level on the grid points."""

    def __init__(self, space: SpatialGrid, bounds: VolBounds, times, field):
        self.space = space
        self.bounds = bounds
        self.times = np.asarray(times, dtype=float)
        self.field = np.asarray(field, dtype=float)

    @property
    def final(self) -> np.ndarray:
        return self.field[-1]

    def value_at(self, x: float, level: int = -1) -> float:
        """Linear interpolation of the stored level at position x."""
        pts = self.space.points
        if x < pts[0] - _EPS or x > pts[-1] + _EPS:
            raise InputError(f"x={x} outside the spatial domain")
        s = (x - pts[0]) / self.space.dx
        j = int(np.clip(np.floor(s), 0, len(pts) - 2))
        frac = s - j
        row = self.field[level]
        return float(row[j] + frac * (row[j + 1] - row[j]))


def stable_dt(space: SpatialGrid, bounds: VolBounds) -> float:
    """Largest explicit step keeping the march monotone: dx^2 / (2 var_max)."""
    return space.dx**2 / (2.0 * bounds.var_max)


def solve_g_heat(phi, bounds: VolBounds, t_end: float, space: SpatialGrid,
                 dt: float | None = None, keep_history: bool = False) -> GHeatSolution:
    """Explicit march of du/dt = G(u_xx) from u(0, x) = phi(x) up to t_end.

    Boundary values stay frozen at phi(x_min), phi(x_max). dt defaults to the
    stability bound and is refined to divide t_end exactly; a dt above the
    bound is rejected rather than silently clipped.
    """
    if t_end < 0.0:
        raise ConfigurationError("t_end must be nonnegative", field="t_end")
    dt_max = stable_dt(space, bounds)
    if dt is None:
        dt = dt_max
    elif dt > dt_max * (1.0 + 1e-9):
        raise ConfigurationError(
            f"dt={dt} violates the stability bound {dt_max:.3e}", field="dt"
        )
    pts = space.points
    u = np.asarray([phi(x) for x in pts], dtype=float)
    if not np.all(np.isfinite(u)):
        raise InputError("initial data must be finite on the grid")

    if t_end == 0.0:
        return GHeatSolution(space, bounds, [0.0], u[None, :])

    n_steps = max(1, int(np.ceil(t_end / dt - 1e-9)))
    dt_eff = t_end / n_steps
    inv_dx2 = 1.0 / space.dx**2

    levels = [u.copy()]
    times = [0.0]
    for j in range(n_steps):
        d2 = (u[2:] - 2.0 * u[1:-1] + u[:-2]) * inv_dx2
        u[1:-1] += dt_eff * g_of(d2, bounds)
        if keep_history:
            levels.append(u.copy())
            times.append((j + 1) * dt_eff)
    if not keep_history:
        levels.append(u.copy())
        times.append(t_end)
    return GHeatSolution(space, bounds, times, np.asarray(levels))


def _ramp(center: float, eps: float, sense: int = -1):
    """Smoothed half-line indicator: 1 on the `sense` side, linear over 2*eps."""

    def phi(x):
        if sense < 0:
            return float(np.clip((center + eps - x) / (2.0 * eps), 0.0, 1.0))
        return float(np.clip((x - center + eps) / (2.0 * eps), 0.0, 1.0))

    return phi


def _cdf_domain(bounds: VolBounds, t: float, reach: float, dx: float) -> SpatialGrid:
    half = reach + 6.0 * bounds.sigma_max * np.sqrt(max(t, dx**2)) + 2.0 * dx
    return SpatialGrid.symmetric(half, dx)


def g_normal_upper_cdf(y: float, bounds: VolBounds, t: float = 1.0,
                       eps: float | None = None, dx: float = 0.02,
                       lower: bool = False) -> float:
    """Worst-case distribution function at y after time t.

    Solves the march with a smoothed indicator of (-inf, y] (ramp half-width
    eps, default 2*dx) and reads u(t, 0), clipped into [0, 1]. With
    lower=True returns the best-case variant -E[-indicator] instead.
    """
    if eps is None:
        eps = 2.0 * dx
    if eps <= 0.0:
        raise ConfigurationError("smoothing width must be positive", field="eps")
    space = _cdf_domain(bounds, t, abs(y), dx)
    ramp = _ramp(y, eps)
    if lower:
        sol = solve_g_heat(lambda x: -ramp(x), bounds, t, space)
        val = -sol.value_at(0.0)
    else:
        sol = solve_g_heat(ramp, bounds, t, space)
        val = sol.value_at(0.0)
    return float(np.clip(val, 0.0, 1.0))


def g_normal_cdf_table(y_grid, bounds: VolBounds, t: float = 1.0,
                       eps: float | None = None, dx: float = 0.02,
                       lower: bool = False) -> np.ndarray:
    """Distribution function on a whole y-grid from a single march.

    The generator has no x-dependence, so translating the ramp by y equals
    reading the ramp-at-0 solution at -y: one solve serves every y.
    """
    y_grid = np.asarray(y_grid, dtype=float)
    if eps is None:
        eps = 2.0 * dx
    space = _cdf_domain(bounds, t, float(np.max(np.abs(y_grid), initial=0.0)), dx)
    ramp = _ramp(0.0, eps)
    if lower:
        sol = solve_g_heat(lambda x: -ramp(x), bounds, t, space)
        vals = np.asarray([-sol.value_at(-y) for y in y_grid])
    else:
        sol = solve_g_heat(ramp, bounds, t, space)
        vals = np.asarray([sol.value_at(-y) for y in y_grid])
    return np.clip(vals, 0.0, 1.0)


def g_normal_density(y_grid, bounds: VolBounds, t: float = 1.0,
                     eps: float | None = None, dx: float = 0.02,
                     lower: bool = False) -> np.ndarray:
    """Centered y-derivative of the distribution table, clipped at 0.

    The y-grid must be uniform; the difference stencil uses the grid spacing.
    """
    y_grid = np.asarray(y_grid, dtype=float)
    if y_grid.size < 2:
        raise InputError("need at least two y values")
    dy = np.diff(y_grid)
    if not np.allclose(dy, dy[0], rtol=1e-9, atol=1e-12):
        raise InputError("y grid must be uniform")
    step = float(dy[0])
    y_ext = np.concatenate(([y_grid[0] - step], y_grid, [y_grid[-1] + step]))
    cdf = g_normal_cdf_table(y_ext, bounds, t, eps=eps, dx=dx, lower=lower)
    dens = (cdf[2:] - cdf[:-2]) / (2.0 * step)
    return np.maximum(dens, 0.0)
