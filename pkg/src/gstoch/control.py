"""Strict and relaxed controls, chattering approximation, worst-case costs.

A strict control is piecewise constant with values in a finite action set; a
relaxed control carries a probability row over the atoms per block. Relaxed
dynamics weight-average the controlled coefficients; relaxed running costs
weight-average the cost at each atom. Worst-case cost maximises Monte Carlo
means over a scenario family with common random numbers, and the optimizers
enumerate the (finite) candidate sets exhaustively.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError
from .functionals import CoeffSet, CostSpec
from .grids import BatchSegmentView, TimeGrid, trapezoid_weights
from .nsfde import EulerConfig, simulate_batch
from .scenarios import PolicyEstimate, ScenarioFamily, sample_increments

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class ActionGrid:
    """Sorted finite action set within a bounding interval."""

    atoms: tuple
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if len(self.atoms) < 1:
            raise ConfigurationError("need at least one atom", field="actions.atoms")
        if any(b <= a for a, b in zip(self.atoms, self.atoms[1:])):
            raise ConfigurationError("atoms must be strictly increasing", field="actions.atoms")
        lo = self.atoms[0] if self.lo is None else self.lo
        hi = self.atoms[-1] if self.hi is None else self.hi
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if self.atoms[0] < self.lo or self.atoms[-1] > self.hi:
            raise ConfigurationError("atoms must lie inside [lo, hi]", field="actions")

    @property
    def m(self) -> int:
        return len(self.atoms)

    @property
    def interval(self) -> tuple:
        return (self.lo, self.hi)


def _check_edges(edges) -> np.ndarray:
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2:
        raise ConfigurationError("need at least one block", field="control.edges")
    if np.any(np.diff(edges) <= 0.0):
        raise ConfigurationError("block edges must increase", field="control.edges")
    if abs(edges[0]) > WEIGHT_TOL:
        raise ConfigurationError("first block must start at 0", field="control.edges")
    return edges


def _block_of(edges: np.ndarray, t: np.ndarray) -> np.ndarray:
    # half-open blocks [e_j, e_{j+1}); an exact edge hit belongs to the right
    nudge = 1e-9 * (edges[-1] - edges[0]) / max(len(edges) - 1, 1)
    idx = np.searchsorted(edges, t + nudge, side="right") - 1
    return np.clip(idx, 0, len(edges) - 2)


@dataclass(frozen=True)
class StrictControl:
    """Atom index per block of a piecewise-constant control on [0, T]."""

    actions: ActionGrid
    edges: tuple
    atom_idx: tuple

    def __post_init__(self):
        edges = _check_edges(self.edges)
        if len(self.atom_idx) != len(edges) - 1:
            raise ConfigurationError("need one atom per block", field="control.atom_idx")
        if any(j < 0 or j >= self.actions.m for j in self.atom_idx):
            raise ConfigurationError("atom index out of range", field="control.atom_idx")

    @classmethod
    def uniform(cls, actions: ActionGrid, horizon: float, atom_idx) -> "StrictControl":
        k = len(atom_idx)
        edges = tuple(horizon * j / k for j in range(k + 1))
        return cls(actions, edges, tuple(atom_idx))

    @property
    def horizon(self) -> float:
        return self.edges[-1]

    @property
    def n_blocks(self) -> int:
        return len(self.atom_idx)

    def value_at(self, t: float) -> float:
        j = int(_block_of(np.asarray(self.edges), np.asarray([t]))[0])
        return float(self.actions.atoms[self.atom_idx[j]])

    def step_table(self, grid: TimeGrid):
        t = grid.fwd_nodes[:-1]
        blocks = _block_of(np.asarray(self.edges), t)
        atoms = np.asarray(self.actions.atoms, dtype=float)
        idx = np.asarray(self.atom_idx)
        return ("strict", atoms[idx[blocks]])

    def occupancy(self, window: tuple, atom_index: int) -> float:
        """Continuous-time fraction of `window` spent at the given atom."""
        lo, hi = window
        total = 0.0
        edges = np.asarray(self.edges)
        for j, a in enumerate(self.atom_idx):
            if a != atom_index:
                continue
            total += max(0.0, min(hi, edges[j + 1]) - max(lo, edges[j]))
        return total / (hi - lo)


@dataclass(frozen=True)
class RelaxedControl:
    """Probability row over the atoms per block; rows sum to one."""

    actions: ActionGrid
    edges: tuple
    weights: tuple  # tuple of per-block weight tuples

    def __post_init__(self):
        edges = _check_edges(self.edges)
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(edges) - 1, self.actions.m):
            raise ConfigurationError(
                f"weights must be (blocks, atoms) = ({len(edges) - 1}, {self.actions.m})",
                field="control.weights",
            )
        if np.any(w < 0.0):
            raise ConfigurationError("weights must be nonnegative", field="control.weights")
        if np.max(np.abs(w.sum(axis=1) - 1.0)) > WEIGHT_TOL:
            raise ConfigurationError("weight rows must sum to 1", field="control.weights")

    @classmethod
    def uniform(cls, actions: ActionGrid, horizon: float, weights) -> "RelaxedControl":
        k = len(weights)
        edges = tuple(horizon * j / k for j in range(k + 1))
        return cls(actions, edges, tuple(tuple(row) for row in weights))

    @property
    def horizon(self) -> float:
        return self.edges[-1]

    @property
    def n_blocks(self) -> int:
        return len(self.weights)

    def weight_matrix(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def step_table(self, grid: TimeGrid):
        t = grid.fwd_nodes[:-1]
        blocks = _block_of(np.asarray(self.edges), t)
        w = self.weight_matrix()[blocks]
        return ("relaxed", np.asarray(self.actions.atoms, dtype=float), w)


def dirac_embed(u: StrictControl) -> RelaxedControl:
    """Point-mass relaxed control sitting on u's atom in every block."""
    rows = []
    for j in u.atom_idx:
        row = [0.0] * u.actions.m
        row[j] = 1.0
        rows.append(tuple(row))
    return RelaxedControl(u.actions, u.edges, tuple(rows))


def chattering_approx(mu: RelaxedControl, n: int, h: float | None = None) -> StrictControl:
    """Strict control occupying each block's atoms in proportion to the weights.

    Every block is cut into n micro-slots; within a micro-slot the atoms (in
    ascending order) receive contiguous sub-slots proportional to the block's
    weight row. If a simulation step h is supplied, micro-slots narrower than
    h are rejected (the sampled control could not resolve them).
    """
    if n < 1:
        raise ConfigurationError("need at least one micro-slot", field="chattering.n")
    edges_out = [0.0]
    idx_out = []
    atoms_idx = range(mu.actions.m)
    for j in range(mu.n_blocks):
        lo, hi = mu.edges[j], mu.edges[j + 1]
        width = (hi - lo) / n
        if h is not None and width < h - WEIGHT_TOL:
            raise ConfigurationError(
                f"micro-slot {width:g} narrower than the grid step {h:g}; "
                "use a finer simulation grid or fewer micro-slots",
                field="chattering.n",
            )
        w = np.asarray(mu.weights[j], dtype=float)
        cuts = np.concatenate(([0.0], np.cumsum(w)))
        cuts[-1] = 1.0
        for i in range(n):
            start = lo + i * width
            for k in atoms_idx:
                if w[k] <= 0.0:
                    continue
                right = start + width * cuts[k + 1]
                if idx_out and idx_out[-1] == k:
                    edges_out[-1] = right
                else:
                    edges_out.append(right)
                    idx_out.append(k)
    edges_out[-1] = mu.edges[-1]
    return StrictControl(mu.actions, tuple(edges_out), tuple(idx_out))


def _monomial_block_integral(p: int, lo: float, hi: float) -> float:
    return (hi ** (p + 1) - lo ** (p + 1)) / (p + 1)


DEFAULT_MONOMIALS = tuple((p, q) for p in range(3) for q in range(3))


def stable_convergence_gap(mu: RelaxedControl, u: StrictControl,
                           monomials=DEFAULT_MONOMIALS) -> float:
    """Max deviation of the two time-action integrals over test monomials.

    Integrates f(t, xi) = t^p xi^q exactly against the relaxed measure and
    against the point masses of the strict control; returns the largest
    absolute gap over the monomial family.
    """
    if abs(mu.horizon - u.horizon) > WEIGHT_TOL:
        raise InputError("controls live on different horizons")
    atoms_mu = np.asarray(mu.actions.atoms, dtype=float)
    atoms_u = np.asarray(u.actions.atoms, dtype=float)
    w = mu.weight_matrix()
    worst = 0.0
    for p, q in monomials:
        relaxed = 0.0
        for j in range(mu.n_blocks):
            tint = _monomial_block_integral(p, mu.edges[j], mu.edges[j + 1])
            relaxed += tint * float(w[j] @ atoms_mu**q)
        strict = 0.0
        for j, a in enumerate(u.atom_idx):
            tint = _monomial_block_integral(p, u.edges[j], u.edges[j + 1])
            strict += tint * atoms_u[a] ** q
        worst = max(worst, abs(relaxed - strict))
    return worst


def _running_costs(values: np.ndarray, control, cost: CostSpec, grid: TimeGrid) -> np.ndarray:
    """Left-endpoint time sum of the running cost along a batch of paths."""
    w = trapezoid_weights(grid)
    table = control.step_table(grid) if control is not None else None
    total = np.zeros(values.shape[0])
    for k in range(grid.n_fwd):
        seg = BatchSegmentView(grid, values, grid.n_hist + k, w)
        t_k = k * grid.h
        if table is None:
            total += cost.running(t_k, seg, 0.0)
        elif table[0] == "strict":
            u = table[1][k]
            total += cost.running(t_k, seg, float(u) if np.ndim(u) == 0 else u)
        else:
            total += cost.running_relaxed(t_k, seg, table[1], table[2][k])
    return total * grid.h


def _cost_samples(control, db, dqv, coeffs: CoeffSet, cost: CostSpec, eta,
                  grid: TimeGrid, cfg: EulerConfig | None) -> np.ndarray:
    v = simulate_batch(coeffs, eta, db, dqv, grid, control, cfg)
    return _running_costs(v, control, cost, grid) + cost.terminal(v[:, -1])


def cost_under_p(control, policy, coeffs: CoeffSet, cost: CostSpec, eta,
                 grid: TimeGrid, n_samples: int, seed: int = 0,
                 cfg: EulerConfig | None = None):
    """(mean, se) of the pathwise cost under one volatility policy."""
    db, dqv, _ = sample_increments(policy, grid, n_samples, seed)
    vals = _cost_samples(control, db, dqv, coeffs, cost, eta, grid, cfg)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_samples))


def _family_noise(family: ScenarioFamily, grid: TimeGrid):
    """Pre-sampled (db, dqv) per policy with the shared xi stream."""
    out = []
    for policy in family.policies:
        db, dqv, _ = sample_increments(policy, grid, family.samples_per_policy,
                                       family.base_seed, family.bounds)
        out.append((db, dqv))
    return out


def _cost_with_noise(control, noise, family, coeffs, cost_spec, eta, grid, cfg):
    table = []
    best = -math.inf
    best_se = 0.0
    for policy, (db, dqv) in zip(family.policies, noise):
        vals = _cost_samples(control, db, dqv, coeffs, cost_spec, eta, grid, cfg)
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / np.sqrt(len(vals)))
        table.append(PolicyEstimate(policy.label, mean, se, len(vals), 0))
        if mean > best:
            best, best_se = mean, se
    return best, best_se, table


def cost(control, family: ScenarioFamily, coeffs: CoeffSet, cost_spec: CostSpec,
         eta, grid: TimeGrid, cfg: EulerConfig | None = None):
    """Worst-case cost over the family: (max mean, per-policy table).

    The xi stream is shared across policies and does not depend on the
    control, so candidate comparisons ride common random numbers.
    """
    best, _, table = _cost_with_noise(control, _family_noise(family, grid),
                                      family, coeffs, cost_spec, eta, grid, cfg)
    return best, table


def stability_gap(mu: RelaxedControl, n: int, family: ScenarioFamily,
                  coeffs: CoeffSet, eta, grid: TimeGrid,
                  cfg: EulerConfig | None = None):
    """Worst-case mean of sup_t |X^{u_n}(t) - X^mu(t)|^2 on shared noise.

    Returns (estimate, se, u_n) where se belongs to the maximising policy.
    """
    u_n = chattering_approx(mu, n, grid.h)
    best = -math.inf
    best_se = 0.0
    for policy, (db, dqv) in zip(family.policies, _family_noise(family, grid)):
        v_mu = simulate_batch(coeffs, eta, db, dqv, grid, mu, cfg)
        v_n = simulate_batch(coeffs, eta, db, dqv, grid, u_n, cfg)
        gap = np.max((v_n[:, grid.n_hist :] - v_mu[:, grid.n_hist :]) ** 2, axis=1)
        mean = float(gap.mean())
        if mean > best:
            best = mean
            best_se = float(gap.std(ddof=1) / np.sqrt(len(gap)))
    return best, best_se, u_n


@dataclass(frozen=True)
class OptResult:
    control: object
    value: float
    se: float
    table: tuple
    n_evaluated: int


def _budget_check(n_candidates: int, budget: int):
    if n_candidates > budget:
        raise ConfigurationError(
            f"{n_candidates} candidates exceed the search budget {budget}",
            field="optimizer.budget",
        )


class _TableControl:
    """Control resolved to a fixed per-step table (used to stack candidates)."""

    def __init__(self, table):
        self._table = table

    def step_table(self, grid: TimeGrid):
        return self._table


# Candidate chunks are sized so that chunk * samples stays near this row count.
_CHUNK_ROWS = 32768


def _uniform_blocks(grid: TimeGrid, n_blocks: int) -> np.ndarray:
    edges = np.asarray([grid.horizon * j / n_blocks for j in range(n_blocks + 1)])
    return _block_of(edges, grid.fwd_nodes[:-1])


def _sweep_candidates(tables_for, n_cand, noise, family, coeffs, cost_spec, eta,
                      grid, cfg):
    """Evaluate stacked candidate tables on shared noise.

    tables_for(lo, hi, n_samples) must yield the step table for candidates
    [lo, hi) expanded to n_samples consecutive rows per candidate. Returns
    (per-candidate worst-case mean, se of the maximising policy, index of the
    first minimiser, per-policy means of that minimiser).
    """
    ns = family.samples_per_policy
    chunk = max(1, _CHUNK_ROWS // max(ns, 1))
    best_idx, best_val, best_se, best_means = -1, math.inf, 0.0, None
    for lo in range(0, n_cand, chunk):
        hi = min(lo + chunk, n_cand)
        means = np.empty((len(noise), hi - lo))
        ses = np.empty_like(means)
        for pi, (db, dqv) in enumerate(noise):
            n_samples = db.shape[0]
            ctrl = _TableControl(tables_for(lo, hi, n_samples))
            vals = _cost_samples(ctrl, np.tile(db, (hi - lo, 1)),
                                 np.tile(dqv, (hi - lo, 1)),
                                 coeffs, cost_spec, eta, grid, cfg)
            vals = vals.reshape(hi - lo, n_samples)
            means[pi] = vals.mean(axis=1)
            ses[pi] = vals.std(axis=1, ddof=1) / np.sqrt(n_samples)
        worst = means.max(axis=0)
        arg = int(np.argmin(worst))
        if worst[arg] < best_val:
            best_idx = lo + arg
            best_val = float(worst[arg])
            best_se = float(ses[int(np.argmax(means[:, arg])), arg])
            best_means = (means[:, arg].copy(), ses[:, arg].copy())
    table = tuple(
        PolicyEstimate(p.label, float(m), float(s), family.samples_per_policy, 0)
        for p, m, s in zip(family.policies, best_means[0], best_means[1])
    )
    return best_idx, best_val, best_se, table


def optimize_strict(family: ScenarioFamily, coeffs: CoeffSet, cost_spec: CostSpec,
                    eta, grid: TimeGrid, actions: ActionGrid, n_blocks: int,
                    cfg: EulerConfig | None = None, budget: int = 100_000) -> OptResult:
    """Exhaustive search over atom assignments on the uniform macro-partition.

    Candidates are enumerated lexicographically; exact ties resolve to the
    first candidate. Candidates ride the same noise draws (per policy), and
    chunks of them are evaluated as one stacked batch.
    """
    n_cand = actions.m**n_blocks
    _budget_check(n_cand, budget)
    noise = _family_noise(family, grid)
    assigns = np.asarray(list(itertools.product(range(actions.m), repeat=n_blocks)),
                         dtype=int)
    atoms = np.asarray(actions.atoms, dtype=float)
    blocks = _uniform_blocks(grid, n_blocks)
    u_steps = atoms[assigns[:, blocks]]  # (n_cand, n_fwd)

    def tables_for(lo, hi, n_samples):
        return ("strict", np.repeat(u_steps[lo:hi], n_samples, axis=0).T)

    idx, val, se, table = _sweep_candidates(tables_for, n_cand, noise, family,
                                            coeffs, cost_spec, eta, grid, cfg)
    cand = StrictControl.uniform(actions, grid.horizon,
                                 tuple(int(a) for a in assigns[idx]))
    return OptResult(cand, val, se, table, n_cand)


def simplex_rows(m: int, resolution: int) -> list:
    """All weight rows with entries k/resolution summing to 1, lexicographic."""
    if resolution < 1:
        raise ConfigurationError("resolution must be >= 1", field="optimizer.resolution")
    rows = []
    for comp in itertools.product(range(resolution + 1), repeat=m):
        if sum(comp) == resolution:
            rows.append(tuple(c / resolution for c in comp))
    return rows


def optimize_relaxed(family: ScenarioFamily, coeffs: CoeffSet, cost_spec: CostSpec,
                     eta, grid: TimeGrid, actions: ActionGrid, n_blocks: int,
                     resolution: int = 2, cfg: EulerConfig | None = None,
                     budget: int = 100_000) -> OptResult:
    """Exhaustive search over per-block simplex-grid weight rows.

    The row grid contains all unit rows, so the strict candidates embed into
    the search and the relaxed minimum can only improve on the strict one.
    """
    rows = simplex_rows(actions.m, resolution)
    n_cand = len(rows) ** n_blocks
    _budget_check(n_cand, budget)
    noise = _family_noise(family, grid)
    combos = np.asarray(list(itertools.product(range(len(rows)), repeat=n_blocks)),
                        dtype=int)
    row_arr = np.asarray(rows, dtype=float)
    atoms = np.asarray(actions.atoms, dtype=float)
    blocks = _uniform_blocks(grid, n_blocks)
    w_steps = row_arr[combos[:, blocks]]  # (n_cand, n_fwd, m)

    def tables_for(lo, hi, n_samples):
        w = np.repeat(w_steps[lo:hi], n_samples, axis=0)
        return ("relaxed", atoms, np.swapaxes(w, 0, 1))

    idx, val, se, table = _sweep_candidates(tables_for, n_cand, noise, family,
                                            coeffs, cost_spec, eta, grid, cfg)
    cand = RelaxedControl.uniform(actions, grid.horizon,
                                  tuple(rows[j] for j in combos[idx]))
    return OptResult(cand, val, se, table, n_cand)
