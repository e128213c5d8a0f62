"""Coefficient functionals on path segments, and cost specifications.

Every dynamic coefficient is built from a small closed family of base maps
of the segment (value at the right end, trapezoid window integral, or an
affine function of the right-end value), an affine control coupling
(c0 + c1*u) * base + c2*u, and an optional symmetric clamp. The closed form
keeps Lipschitz constants computable instead of estimated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, InputError
from .grids import TimeGrid

KINDS = ("pointwise", "integral", "affine")

# The fixed-point estimates need the neutral coefficient's Lipschitz constant
# strictly below this bound.
NEUTRAL_LIPSCHITZ_BOUND = 0.25


def _atom_weights(atoms, weights):
    """Pair each atom with its weight: a scalar for a weight row, a column
    for a (batch, atoms) weight matrix."""
    w = np.asarray(weights, dtype=float)
    if w.ndim == 1:
        return [(float(a), w[j]) for j, a in enumerate(atoms)]
    return [(float(a), w[:, j]) for j, a in enumerate(atoms)]


@dataclass(frozen=True)
class CoeffFunctional:
    """(c0 + c1*u) * base(segment) + c2*u, optionally clamped to [-clamp, clamp].

    kind "pointwise": base = scale * x(0)
    kind "integral":  base = scale * trapezoid of x over the delay window
    kind "affine":    base = scale * x(0) + offset
    """

    kind: str
    scale: float
    offset: float = 0.0
    c0: float = 1.0
    c1: float = 0.0
    c2: float = 0.0
    clamp: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown coefficient kind {self.kind!r}", field="kind")
        if self.kind != "affine" and self.offset != 0.0:
            raise ConfigurationError("offset only applies to the affine kind", field="offset")
        if self.clamp is not None and self.clamp <= 0.0:
            raise ConfigurationError("clamp must be positive", field="clamp")

    @property
    def is_controlled(self) -> bool:
        return self.c1 != 0.0 or self.c2 != 0.0

    def base_value(self, seg):
        """Base map on a Segment or a batched segment view."""
        if self.kind == "pointwise":
            return self.scale * seg.value_at_zero()
        if self.kind == "integral":
            return self.scale * seg.window_integral()
        return self.scale * seg.value_at_zero() + self.offset

    def eval(self, t: float, seg, u: float | None = None):
        """Coefficient value at time t on the segment, with action u.

        u must be supplied exactly when the functional is controlled.
        """
        if self.is_controlled and u is None:
            raise InputError("controlled functional evaluated without an action")
        if not self.is_controlled and u is not None:
            raise InputError("uncontrolled functional evaluated with an action")
        base = self.base_value(seg)
        if u is None:
            val = self.c0 * base
        else:
            val = (self.c0 + self.c1 * u) * base + self.c2 * u
        if self.clamp is not None:
            val = np.clip(val, -self.clamp, self.clamp)
        return float(val) if np.ndim(val) == 0 else val

    def eval_relaxed(self, t: float, seg, atoms, weights):
        """Weight-average of eval over the atoms (clamp applied per atom).

        weights is a row over the atoms, or a (batch, atoms) matrix holding
        one row per path in a batched evaluation.
        """
        if not self.is_controlled:
            return self.eval(t, seg)
        total = 0.0
        for a, w in _atom_weights(atoms, weights):
            if np.any(w != 0.0):
                total = total + w * self.eval(t, seg, a)
        return total

    def lipschitz(self, tau: float, action_interval=None) -> float:
        """Lipschitz constant in the segment sup-norm, worst case over actions."""
        width = tau if self.kind == "integral" else 1.0
        gain = abs(self.c0)
        if self.c1 != 0.0:
            if action_interval is None:
                raise ConfigurationError(
                    "multiplicative control coupling needs an action interval",
                    field="action_interval",
                )
            lo, hi = action_interval
            gain = max(abs(self.c0 + self.c1 * lo), abs(self.c0 + self.c1 * hi))
        return abs(self.scale) * width * gain

    def is_bounded(self) -> bool:
        """Structurally bounded: clamped, or constant in the state."""
        return self.clamp is not None or self.scale == 0.0


def eval_coeff(f: CoeffFunctional, t: float, seg, u: float | None = None):
    return f.eval(t, seg, u)


ZERO = CoeffFunctional("affine", 0.0)


def constant_coeff(value: float) -> CoeffFunctional:
    return CoeffFunctional("affine", 0.0, offset=value)


@dataclass(frozen=True)
class CoeffSet:
    """Dynamic coefficients (neutral, drift, qv-drift, diffusion) plus constants.

    The neutral coefficient and the diffusion must be uncontrolled. The
    neutral Lipschitz constant k0 must stay below 1/4 unless explicitly
    overridden, in which case the set is marked assumption-violating.
    """

    neutral: CoeffFunctional
    drift: CoeffFunctional
    qv_drift: CoeffFunctional
    diffusion: CoeffFunctional
    tau: float
    action_interval: tuple | None = None
    allow_violation: bool = False

    def __post_init__(self):
        if self.neutral.is_controlled:
            raise ConfigurationError("neutral coefficient cannot be controlled", field="coeffs.neutral")
        if self.diffusion.is_controlled:
            raise ConfigurationError("diffusion cannot be controlled", field="coeffs.diffusion")
        if self.tau < 0.0:
            raise ConfigurationError("delay must be nonnegative", field="coeffs.tau")
        if self.k0 >= NEUTRAL_LIPSCHITZ_BOUND and not self.allow_violation:
            raise ConfigurationError(
                f"neutral Lipschitz constant {self.k0:g} is not below "
                f"{NEUTRAL_LIPSCHITZ_BOUND}; pass allow_violation=True to proceed",
                field="coeffs.neutral.scale",
            )

    @property
    def k0(self) -> float:
        return self.neutral.lipschitz(self.tau)

    @property
    def k1(self) -> float:
        return max(
            self.drift.lipschitz(self.tau, self.action_interval),
            self.qv_drift.lipschitz(self.tau, self.action_interval),
            self.diffusion.lipschitz(self.tau),
        )

    @property
    def assumption_violating(self) -> bool:
        return self.k0 >= NEUTRAL_LIPSCHITZ_BOUND


@dataclass(frozen=True)
class LipschitzReport:
    k0: float
    k1: float
    k0_ok: bool
    contraction_root: float

    @property
    def contracts(self) -> bool:
        return self.contraction_root < 1.0


def lipschitz_constants(coeffs: CoeffSet) -> LipschitzReport:
    """Declared constants and the fixed-point ratio bound sqrt(8 k0^2 + 1/2)."""
    k0 = coeffs.k0
    return LipschitzReport(
        k0=k0,
        k1=coeffs.k1,
        k0_ok=k0 < NEUTRAL_LIPSCHITZ_BOUND,
        contraction_root=float(np.sqrt(8.0 * k0**2 + 0.5)),
    )


@dataclass(frozen=True)
class CostSpec:
    """Quadratic cost pair on the state and the action.

    Running cost  q*base(X_t)^2 + q_lin*base(X_t) + r*u^2 + s*u + l0,
    terminal cost p*X(T)^2 + p_lin*X(T) + psi0. Both pieces may be clamped
    symmetrically (clamp_l, clamp_psi); boundedness of the pair is what the
    validation report calls the cost assumption.
    """

    q: float = 0.0
    r: float = 0.0
    s: float = 0.0
    l0: float = 0.0
    p: float = 0.0
    psi0: float = 0.0
    q_lin: float = 0.0
    p_lin: float = 0.0
    clamp_l: float | None = None
    clamp_psi: float | None = None
    base: CoeffFunctional = CoeffFunctional("pointwise", 1.0)

    def __post_init__(self):
        if self.base.is_controlled:
            raise ConfigurationError("cost base must be uncontrolled", field="cost.base")
        for name in ("clamp_l", "clamp_psi"):
            v = getattr(self, name)
            if v is not None and v <= 0.0:
                raise ConfigurationError("clamp must be positive", field=f"cost.{name}")

    def running(self, t: float, seg, u: float):
        b = self.base.base_value(seg)
        val = self.q * b**2 + self.q_lin * b + self.r * u**2 + self.s * u + self.l0
        if self.clamp_l is not None:
            val = np.clip(val, -self.clamp_l, self.clamp_l)
        return val

    def running_relaxed(self, t: float, seg, atoms, weights):
        total = 0.0
        for a, w in _atom_weights(atoms, weights):
            if np.any(w != 0.0):
                total = total + w * self.running(t, seg, a)
        return total

    def terminal(self, x_t):
        x = np.asarray(x_t, dtype=float)
        val = self.p * x**2 + self.p_lin * x + self.psi0
        if self.clamp_psi is not None:
            val = np.clip(val, -self.clamp_psi, self.clamp_psi)
        return val

    def is_bounded(self) -> bool:
        state_free = self.q == 0.0 and self.q_lin == 0.0
        running_ok = self.clamp_l is not None or state_free or self.base.scale == 0.0
        terminal_ok = self.clamp_psi is not None or (self.p == 0.0 and self.p_lin == 0.0)
        return bool(running_ok and terminal_ok)


@dataclass(frozen=True)
class AssumptionReport:
    """Probe-based and structural checks of the standing assumptions."""

    worst_ratios: dict
    lipschitz_ok: bool
    k0_ok: bool
    coeffs_bounded: bool
    cost_bounded: bool
    flags: tuple

    @property
    def all_ok(self) -> bool:
        return self.lipschitz_ok and self.k0_ok and self.coeffs_bounded and self.cost_bounded


def validate_assumptions(coeffs: CoeffSet, cost: CostSpec | None = None,
                         n_probes: int = 200, seed: int = 7, grid: TimeGrid | None = None) -> AssumptionReport:
    """Check declared Lipschitz constants on random segment pairs; flag unboundedness.

    Probes are rough random paths on a small grid over [-tau, tau or 1]; each
    pair's coefficient deviation is compared against K * sup|x - y|. The
    boundedness checks are structural (clamps present where needed).
    """
    from .grids import Path

    if grid is None:
        horizon = coeffs.tau if coeffs.tau > 0 else 1.0
        steps = 8 if coeffs.tau > 0 else 4
        grid = TimeGrid(coeffs.tau, horizon, 2 * steps if coeffs.tau > 0 else steps)
    rng = np.random.default_rng(seed)
    roles = {
        "neutral": (coeffs.neutral, coeffs.k0),
        "drift": (coeffs.drift, coeffs.drift.lipschitz(coeffs.tau, coeffs.action_interval)),
        "qv_drift": (coeffs.qv_drift, coeffs.qv_drift.lipschitz(coeffs.tau, coeffs.action_interval)),
        "diffusion": (coeffs.diffusion, coeffs.diffusion.lipschitz(coeffs.tau)),
    }
    worst = {name: 0.0 for name in roles}
    actions = [0.0]
    if coeffs.action_interval is not None:
        actions = [coeffs.action_interval[0], coeffs.action_interval[1]]
    for _ in range(n_probes):
        xv = rng.normal(size=grid.n + 1).cumsum()
        yv = xv + rng.normal(size=grid.n + 1)
        sx = Path(grid, xv).segment(grid.fwd_nodes[-1])
        sy = Path(grid, yv).segment(grid.fwd_nodes[-1])
        gap = float(np.max(np.abs(xv[grid.n - grid.n_hist :] - yv[grid.n - grid.n_hist :])))
        if gap < 1e-12:
            continue
        for name, (f, k) in roles.items():
            if f.is_controlled:
                dev = max(
                    abs(f.eval(0.0, sx, a) - f.eval(0.0, sy, a)) for a in actions
                )
            else:
                dev = abs(f.eval(0.0, sx) - f.eval(0.0, sy))
            worst[name] = max(worst[name], dev / gap / max(k, 1e-300))
    flags = []
    coeffs_bounded = all(
        f.is_bounded() for f in (coeffs.drift, coeffs.qv_drift, coeffs.diffusion)
    )
    if not coeffs_bounded:
        flags.append("unbounded coefficients (no clamp on drift/qv-drift/diffusion)")
    cost_bounded = True
    if cost is not None:
        cost_bounded = cost.is_bounded()
        if not cost_bounded:
            flags.append("unbounded cost (missing clamp with nonzero q or p)")
    lipschitz_ok = all(v <= 1.0 + 1e-9 for v in worst.values())
    return AssumptionReport(
        worst_ratios=worst,
        lipschitz_ok=lipschitz_ok,
        k0_ok=coeffs.k0 < NEUTRAL_LIPSCHITZ_BOUND,
        coeffs_bounded=coeffs_bounded,
        cost_bounded=cost_bounded,
        flags=tuple(flags),
    )


def coeff_from_config(cfg: dict, path: str) -> CoeffFunctional:
    """Build one coefficient from a config mapping; errors carry field paths."""
    if not isinstance(cfg, dict):
        raise ConfigurationError("coefficient entry must be a mapping", field=path)
    allowed = {"kind", "scale", "offset", "c0", "c1", "c2", "clamp"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigurationError(f"unknown keys {sorted(unknown)}", field=path)
    try:
        return CoeffFunctional(
            kind=cfg.get("kind", "affine"),
            scale=float(cfg.get("scale", 0.0)),
            offset=float(cfg.get("offset", 0.0)),
            c0=float(cfg.get("c0", 1.0)),
            c1=float(cfg.get("c1", 0.0)),
            c2=float(cfg.get("c2", 0.0)),
            clamp=None if cfg.get("clamp") is None else float(cfg["clamp"]),
        )
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), field=f"{path}.{exc.field}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc), field=path) from exc


def coeff_set_from_config(cfg: dict, tau: float, action_interval=None,
                          allow_violation: bool = False) -> CoeffSet:
    roles = {"neutral": ZERO, "drift": ZERO, "qv_drift": ZERO, "diffusion": ZERO}
    if not isinstance(cfg, dict):
        raise ConfigurationError("coeffs must be a mapping", field="coeffs")
    unknown = set(cfg) - set(roles)
    if unknown:
        raise ConfigurationError(f"unknown coefficient roles {sorted(unknown)}", field="coeffs")
    for role in cfg:
        roles[role] = coeff_from_config(cfg[role], f"coeffs.{role}")
    return CoeffSet(roles["neutral"], roles["drift"], roles["qv_drift"],
                    roles["diffusion"], tau, action_interval, allow_violation)


def cost_from_config(cfg: dict) -> CostSpec:
    if not isinstance(cfg, dict):
        raise ConfigurationError("cost must be a mapping", field="cost")
    allowed = {"q", "r", "s", "l0", "p", "psi0", "q_lin", "p_lin",
               "clamp_l", "clamp_psi", "base"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigurationError(f"unknown keys {sorted(unknown)}", field="cost")
    base = CoeffFunctional("pointwise", 1.0)
    if "base" in cfg:
        base = coeff_from_config(cfg["base"], "cost.base")
    try:
        return CostSpec(
            q=float(cfg.get("q", 0.0)),
            r=float(cfg.get("r", 0.0)),
            s=float(cfg.get("s", 0.0)),
            l0=float(cfg.get("l0", 0.0)),
            p=float(cfg.get("p", 0.0)),
            psi0=float(cfg.get("psi0", 0.0)),
            q_lin=float(cfg.get("q_lin", 0.0)),
            p_lin=float(cfg.get("p_lin", 0.0)),
            clamp_l=None if cfg.get("clamp_l") is None else float(cfg["clamp_l"]),
            clamp_psi=None if cfg.get("clamp_psi") is None else float(cfg["clamp_psi"]),
            base=base,
        )
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), field=f"cost.{exc.field}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc), field="cost") from exc
