"""Scenario-based sampling of paths with uncertain volatility.

A volatility policy picks a per-step variance rate c_i inside
[var_min, var_max]; a path is built from increments dB_i = sqrt(c_i h) xi_i
with iid standard normal xi and carries its quadratic variation
d<B>_i = c_i h alongside. Worst-case functionals are estimated by maximising
Monte Carlo means over a finite policy family with common random numbers,
which lower-bounds the true supremum over all adapted scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EstimationError, InputError
from .gheat import VolBounds
from .grids import TimeGrid

# Stream tags keeping the xi draws, policy randomisation and history draws
# on disjoint, reproducible substreams of one root seed.
XI_STREAM = 101
POLICY_STREAM = 202
HISTORY_STREAM = 303


def _rng(*keys) -> np.random.Generator:
    return np.random.default_rng([int(k) & 0xFFFFFFFF for k in keys])


class VolPolicy:
    """Base class: produces per-step variance rates for a grid's [0, T] part."""

    label = "policy"

    def rates(self, grid: TimeGrid, sample_index: int = 0) -> np.ndarray:
        raise NotImplementedError

    def rates_batch(self, grid: TimeGrid, n_samples: int, first_index: int = 0) -> np.ndarray:
        return np.stack([self.rates(grid, first_index + k) for k in range(n_samples)])

    def check_band(self, c: np.ndarray, bounds: VolBounds):
        if c.min() < bounds.var_min - 1e-12 or c.max() > bounds.var_max + 1e-12:
            raise ConfigurationError(
                f"policy {self.label} leaves the variance band", field="family"
            )


@dataclass(frozen=True)
class Constant(VolPolicy):
    c: float

    def __post_init__(self):
        if self.c <= 0.0:
            raise ConfigurationError("variance rate must be positive", field="policy.c")

    @property
    def label(self):
        return f"const({self.c:g})"

    def rates(self, grid, sample_index=0):
        return np.full(grid.n_fwd, self.c)

    def rates_batch(self, grid, n_samples, first_index=0):
        return np.full((n_samples, grid.n_fwd), self.c)


@dataclass(frozen=True)
class PiecewiseConstant(VolPolicy):
    """Deterministic step function: level[j] on [breaks[j], breaks[j+1])."""

    breaks: tuple
    levels: tuple

    def __post_init__(self):
        if len(self.levels) != len(self.breaks) + 1:
            raise ConfigurationError("need one more level than breakpoints", field="policy")
        if any(b2 <= b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ConfigurationError("breakpoints must increase", field="policy.breaks")

    @property
    def label(self):
        return f"steps({len(self.levels)})"

    def rates(self, grid, sample_index=0):
        t = grid.fwd_nodes[:-1]
        idx = np.searchsorted(np.asarray(self.breaks), t, side="right")
        return np.asarray(self.levels, dtype=float)[idx]

    def rates_batch(self, grid, n_samples, first_index=0):
        return np.broadcast_to(self.rates(grid), (n_samples, grid.n_fwd)).copy()


@dataclass(frozen=True)
class RandomSwitch(VolPolicy):
    """Markov switching between levels at exponential rate, seeded per sample.

    Discretised per step: switch with probability 1 - exp(-rate*h), new level
    uniform among `levels`. The randomisation stream is derived from the
    policy seed and the sample index, independent of the xi stream.
    """

    rate: float
    levels: tuple
    seed: int

    def __post_init__(self):
        if self.rate <= 0.0:
            raise ConfigurationError("switch rate must be positive", field="policy.rate")
        if len(self.levels) < 2:
            raise ConfigurationError("need at least two levels", field="policy.levels")

    @property
    def label(self):
        return f"switch(rate={self.rate:g}, seed={self.seed})"

    def rates(self, grid, sample_index=0):
        return self.rates_batch(grid, 1, sample_index)[0]

    def rates_batch(self, grid, n_samples, first_index=0):
        n_steps = grid.n_fwd
        levels = np.asarray(self.levels, dtype=float)
        p = 1.0 - np.exp(-self.rate * grid.h)
        out = np.empty((n_samples, n_steps))
        for k in range(n_samples):
            rng = _rng(self.seed, POLICY_STREAM, first_index + k)
            sel = rng.integers(0, len(levels), size=n_steps + 1)
            switch = np.concatenate(([True], rng.random(n_steps) < p))
            # forward-fill the level chosen at the most recent switch
            step_idx = np.where(switch, np.arange(n_steps + 1), -1)
            last = np.maximum.accumulate(step_idx)
            out[k] = levels[sel[last]][:-1]
        return out


@dataclass(frozen=True)
class GBMPath:
    """One sampled path: values on the grid's [0, T] nodes.

    b[0] = qv[0] = 0; qv is nondecreasing with increments c * h.
    """

    grid: TimeGrid
    b: np.ndarray
    qv: np.ndarray
    c: np.ndarray

    @property
    def t(self) -> np.ndarray:
        return self.grid.fwd_nodes

    @property
    def db(self) -> np.ndarray:
        return np.diff(self.b)

    @property
    def dqv(self) -> np.ndarray:
        return np.diff(self.qv)


def sample_increments(policy: VolPolicy, grid: TimeGrid, n_samples: int, seed: int,
                      bounds: VolBounds | None = None):
    """(db, dqv) matrices for n_samples paths; xi stream shared across policies.

    The xi draws depend only on (seed, sample index), so two policies sampled
    with the same seed see identical driving noise (common random numbers).
    """
    xi = _rng(seed, XI_STREAM).standard_normal((n_samples, grid.n_fwd))
    c = policy.rates_batch(grid, n_samples)
    if bounds is not None:
        policy.check_band(c, bounds)
    dqv = c * grid.h
    db = np.sqrt(dqv) * xi
    return db, dqv, c


def sample_gbm(policy: VolPolicy, grid: TimeGrid, seed: int) -> GBMPath:
    """Single path under `policy`, deterministic in (policy, seed)."""
    db, dqv, c = sample_increments(policy, grid, 1, seed)
    b = np.concatenate(([0.0], np.cumsum(db[0])))
    qv = np.concatenate(([0.0], np.cumsum(dqv[0])))
    return GBMPath(grid, b, qv, c[0])


@dataclass(frozen=True)
class PolicyEstimate:
    label: str
    mean: float
    se: float
    n: int
    rejected: int


@dataclass(frozen=True)
class ScenarioFamily:
    """Finite policy family; must contain both constant extremes of the band."""

    bounds: VolBounds
    policies: tuple
    samples_per_policy: int = 2000
    base_seed: int = 0
    clamp: float = 1e12

    def __post_init__(self):
        cs = [p.c for p in self.policies if isinstance(p, Constant)]
        has_min = any(abs(c - self.bounds.var_min) < 1e-12 for c in cs)
        has_max = any(abs(c - self.bounds.var_max) < 1e-12 for c in cs)
        if not (has_min and has_max):
            raise ConfigurationError(
                "family must contain the constant extreme policies", field="family.policies"
            )
        if self.samples_per_policy < 2:
            raise ConfigurationError("need at least two samples per policy", field="family")


def default_family(bounds: VolBounds, seed: int = 0, n_switchers: int = 8,
                   samples_per_policy: int = 2000, switch_rate: float = 4.0) -> ScenarioFamily:
    """Two constant extremes plus independently seeded two-level switchers."""
    levels = (bounds.var_min, bounds.var_max)
    policies = [Constant(bounds.var_min), Constant(bounds.var_max)]
    for j in range(n_switchers):
        policies.append(RandomSwitch(switch_rate, levels, seed=seed * 1000 + j))
    return ScenarioFamily(bounds, tuple(policies), samples_per_policy, seed)


def upper_expectation(f, family: ScenarioFamily, grid: TimeGrid):
    """max over policies of the Monte Carlo mean of f(path).

    Returns (estimate, table) where table holds one PolicyEstimate per policy.
    The estimate is a lower bound of the supremum over all adapted scenarios;
    non-finite evaluations are rejected (more than 1% of them is an error),
    finite ones are clipped at the family clamp.
    """
    table = []
    best = -np.inf
    for policy in family.policies:
        db, dqv, c = sample_increments(policy, grid, family.samples_per_policy,
                                       family.base_seed, family.bounds)
        vals = np.empty(family.samples_per_policy)
        for k in range(family.samples_per_policy):
            b = np.concatenate(([0.0], np.cumsum(db[k])))
            qv = np.concatenate(([0.0], np.cumsum(dqv[k])))
            vals[k] = f(GBMPath(grid, b, qv, c[k]))
        finite = np.isfinite(vals)
        rejected = int((~finite).sum())
        if rejected > 0.01 * family.samples_per_policy:
            raise EstimationError(
                f"{rejected} non-finite evaluations under {policy.label}"
            )
        ok = np.clip(vals[finite], -family.clamp, family.clamp)
        mean = float(ok.mean())
        se = float(ok.std(ddof=1) / np.sqrt(len(ok)))
        table.append(PolicyEstimate(policy.label, mean, se, len(ok), rejected))
        best = max(best, mean)
    return best, table


def check_qv_identity(path: GBMPath) -> float:
    """Max node deviation of <B> from B^2 - 2 * (left-endpoint integral of B dB)."""
    b, qv = path.b, path.qv
    stoch = np.concatenate(([0.0], np.cumsum(b[:-1] * np.diff(b))))
    return float(np.max(np.abs(qv - (b**2 - 2.0 * stoch))))


def _step_values(eta, grid: TimeGrid) -> np.ndarray:
    """Per-step integrand values: array, callable of t, or constant."""
    if callable(eta):
        return np.asarray([float(eta(t)) for t in grid.fwd_nodes[:-1]])
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 0:
        return np.full(grid.n_fwd, float(eta))
    if eta.shape != (grid.n_fwd,):
        raise InputError(f"expected {grid.n_fwd} integrand steps, got {eta.shape}")
    return eta


def check_isometry(eta, policy: VolPolicy, grid: TimeGrid, n_samples: int, seed: int = 0):
    """Compare E[(int eta dB)^2] with E[int eta^2 d<B>] by simulation.

    Left-endpoint sums on the grid; returns (lhs, rhs, gap_se) where gap_se is
    the standard error of the per-sample difference, the right scale for
    judging lhs - rhs.
    """
    ev = _step_values(eta, grid)
    db, dqv, _ = sample_increments(policy, grid, n_samples, seed)
    lhs_k = (db @ ev) ** 2
    rhs_k = dqv @ ev**2
    d = lhs_k - rhs_k
    return (float(lhs_k.mean()), float(rhs_k.mean()),
            float(d.std(ddof=1) / np.sqrt(n_samples)))


def check_bdg(eta, policy: VolPolicy, grid: TimeGrid, n_samples: int, seed: int = 0,
              doob_const: float = 4.0):
    """One-sided second-moment maximal inequality with the L^2 Doob constant.

    Returns (lhs, bound, slack_se): lhs = E[max_k (int_0^{t_k} eta dB)^2],
    bound = doob_const * E[int eta^2 d<B>], slack_se = SE of lhs_k - bound_k.
    """
    ev = _step_values(eta, grid)
    db, dqv, _ = sample_increments(policy, grid, n_samples, seed)
    partial = np.cumsum(db * ev, axis=1)
    lhs_k = np.max(np.concatenate([np.zeros((n_samples, 1)), partial], axis=1) ** 2, axis=1)
    bound_k = doob_const * (dqv @ ev**2)
    d = lhs_k - bound_k
    return (float(lhs_k.mean()), float(bound_k.mean()),
            float(d.std(ddof=1) / np.sqrt(n_samples)))
