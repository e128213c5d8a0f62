"""Bundled demo configurations shared by the CLI and the acceptance tests.

The window coefficient set (neutral 0.3, drift 10, qv-drift 0.4, diffusion 5,
all trapezoid window integrals over the delay) and the volatility band
(0.65 with upper value 1 or 3) drive the trajectory presets; three small
control problems exercise the strict/relaxed optimizers and the chattering
machinery at desk scale.
"""

from __future__ import annotations

import numpy as np

from .control import ActionGrid, RelaxedControl
from .functionals import ZERO, CoeffFunctional, CoeffSet, CostSpec
from .gheat import VolBounds
from .grids import TimeGrid
from .scenarios import HISTORY_STREAM, Constant, RandomSwitch, ScenarioFamily, _rng


def window_coeffs(tau: float = 0.1, neutral: float = 0.3, drift: float = 10.0,
                  qv_drift: float = 0.4, diffusion: float = 5.0,
                  drift_c2: float = 0.0, action_interval=None) -> CoeffSet:
    """Window-integral coefficient set; optional additive control on the drift."""
    return CoeffSet(
        neutral=CoeffFunctional("integral", neutral),
        drift=CoeffFunctional("integral", drift, c2=drift_c2),
        qv_drift=CoeffFunctional("integral", qv_drift),
        diffusion=CoeffFunctional("integral", diffusion),
        tau=tau,
        action_interval=action_interval,
    )


def small_family(bounds: VolBounds, seed: int, n_switchers: int = 2,
                 samples_per_policy: int = 200, switch_rate: float = 4.0) -> ScenarioFamily:
    levels = (bounds.var_min, bounds.var_max)
    policies = [Constant(bounds.var_min), Constant(bounds.var_max)]
    for j in range(n_switchers):
        policies.append(RandomSwitch(switch_rate, levels, seed=seed * 1000 + j))
    return ScenarioFamily(bounds, tuple(policies), samples_per_policy, seed)


# Distribution sweeps: (name, kind, sigma pairs)
DENSITY_SWEEP_UP = tuple((0.8, s) for s in (1.0, 1.1, 1.2, 1.3))
DENSITY_SWEEP_DOWN = tuple((s, 1.3) for s in (0.8, 0.9, 1.0, 1.1))

GNORMAL_PRESETS = {
    "paper-fig1": {"kind": "density", "pairs": DENSITY_SWEEP_UP},
    "paper-fig2": {"kind": "cdf", "pairs": DENSITY_SWEEP_UP},
    "paper-fig3": {"kind": "density", "pairs": DENSITY_SWEEP_DOWN},
    "paper-fig4": {"kind": "cdf", "pairs": DENSITY_SWEEP_DOWN},
}

TRAJECTORY_PRESETS = {
    "paper-fig5": {"sigma_max": 1.0, "history": "bm"},
    "paper-fig6": {"sigma_max": 3.0, "history": "bm"},
    "paper-fig7": {"sigma_max": 1.0, "history": "exp"},
    "paper-fig8": {"sigma_max": 1.0, "history": "const"},
}

TRAJECTORY_BASE = {
    "tau": 0.1,
    "horizon": 1.0,
    "steps": 220,
    "sigma_min": 0.65,
    "paths": 20,
    "switch_rate": 4.0,
}


def bundle_policies(bounds: VolBounds, n_paths: int, seed: int,
                    switch_rate: float = 4.0):
    """Path k rides: the two constant extremes for k < 2, switchers after."""
    levels = (bounds.var_min, bounds.var_max)
    out = [Constant(bounds.var_min), Constant(bounds.var_max)]
    for k in range(2, n_paths):
        out.append(RandomSwitch(switch_rate, levels, seed=seed * 777 + k))
    return out[:n_paths]


def bundle_history(kind: str, grid: TimeGrid, seed: int, path_index: int):
    """History node values for one trajectory of a preset bundle."""
    nh = grid.n_hist
    nodes = grid.nodes[: nh + 1]
    if kind == "exp":
        return np.exp(nodes)
    if kind == "const":
        rng = _rng(seed, HISTORY_STREAM, path_index)
        return np.full(nh + 1, rng.uniform(-0.2, 0.2))
    if kind == "bm":
        rng = _rng(seed, HISTORY_STREAM, path_index)
        steps = rng.standard_normal(nh) * np.sqrt(grid.h)
        return np.concatenate(([0.0], np.cumsum(steps)))
    raise ValueError(f"unknown history kind {kind!r}")


def mixture_example(seed: int = 0, samples: int = 256):
    """Two-atom 50/50 mixture with window coefficients and additive drift control.

    The grid step divides the chattering sub-slots for 2, 8 and 32 micro-slot
    splits of the single block (sub-slot = 1/64 = 2h at the finest), so the
    step-sampled approximations keep the exact 50/50 occupancy.
    """
    grid = TimeGrid(0.125, 1.0, 144)
    actions = ActionGrid((-1.0, 1.0))
    coeffs = window_coeffs(tau=grid.tau, drift_c2=2.0,
                           action_interval=actions.interval)
    bounds = VolBounds(0.65, 1.0)
    family = small_family(bounds, seed, n_switchers=2, samples_per_policy=samples)
    cost = CostSpec(q=1.0, s=0.5, p=1.0, clamp_l=1e4, clamp_psi=1e4)
    mu = RelaxedControl.uniform(actions, grid.horizon, [(0.5, 0.5)])
    return {
        "grid": grid, "actions": actions, "coeffs": coeffs, "family": family,
        "cost": cost, "mu": mu, "eta": 1.0,
    }


def affine_problem(seed: int = 0, samples: int = 160):
    """Additive control in the drift, state-linear cost, constant diffusion.

    Each pathwise cost then splits into a deterministic part affine in the
    relaxed weights plus a noise-only part, so the worst-case objective is
    affine on the weight simplex and a point-mass control attains the
    relaxed minimum.
    """
    grid = TimeGrid(0.1, 1.0, 110)
    actions = ActionGrid((-1.0, 0.0, 1.0))
    coeffs = CoeffSet(
        neutral=CoeffFunctional("integral", 0.3),
        drift=CoeffFunctional("integral", 1.0, c2=2.0),
        qv_drift=ZERO,
        diffusion=CoeffFunctional("affine", 0.0, offset=0.5),
        tau=grid.tau,
        action_interval=actions.interval,
    )
    bounds = VolBounds(0.65, 1.0)
    family = small_family(bounds, seed, n_switchers=2, samples_per_policy=samples)
    # clamps sit far outside the reachable cost range, so the affine
    # structure of the sample costs is untouched
    cost = CostSpec(q_lin=1.0, r=0.5, s=0.3, p_lin=1.0,
                    clamp_l=100.0, clamp_psi=100.0)
    return {
        "grid": grid, "actions": actions, "coeffs": coeffs, "family": family,
        "cost": cost, "eta": 0.0, "n_blocks": 4, "resolution": 2,
    }


def concave_problem(seed: int = 0, samples: int = 192):
    """Strictly concave running action cost with purely control-driven drift.

    The balanced mixture holds the state at zero while every strict control
    on the macro partition pays for its drift excursions, so the relaxed
    optimum strictly mixes; its chattering approximations close the gap at
    rate 1/n^2. The grid step (1/512) divides the 50/50 sub-slots of 32
    micro-slots per quarter block (1/256), keeping the step-sampled
    chattering occupancy exact.
    """
    grid = TimeGrid(0.125, 1.0, 576)
    actions = ActionGrid((-1.0, 1.0))
    coeffs = CoeffSet(
        neutral=ZERO,
        drift=CoeffFunctional("affine", 0.0, c2=2.0),
        qv_drift=ZERO,
        diffusion=CoeffFunctional("affine", 0.0, offset=0.2),
        tau=grid.tau,
        action_interval=actions.interval,
    )
    bounds = VolBounds(0.65, 1.0)
    family = small_family(bounds, seed, n_switchers=2, samples_per_policy=samples)
    cost = CostSpec(q=1.0, r=-0.5, p=0.5, clamp_l=100.0, clamp_psi=100.0)
    return {
        "grid": grid, "actions": actions, "coeffs": coeffs, "family": family,
        "cost": cost, "eta": 0.0, "n_blocks": 4, "resolution": 2,
    }


# Step integrands for the stochastic-integral checks, defined on [0, 1].
STEP_INTEGRANDS = {
    "one": lambda t: 1.0,
    "first-half": lambda t: 1.0 if t < 0.5 else 0.0,
    "two-level": lambda t: 1.0 if t < 0.5 else 2.0,
}
