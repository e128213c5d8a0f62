"""Command line interface.

Subcommands cover the distribution solver (gnormal), scenario path dumps
(sample-paths), trajectory simulation (nsfde-sim), the integral checks
(qv-check, isometry-check, picard-check) and the control machinery
(chattering, control-opt). Every output CSV starts with a comment header
echoing the effective configuration and the root seed, and fixed seeds
reproduce byte-identical files. Exit codes: 0 success, 2 invalid
configuration (error line names the field), 3 numerical divergence (error
line names the step).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path as FsPath

import numpy as np

from . import presets
from .control import chattering_approx, cost, optimize_relaxed, optimize_strict, stability_gap
from .errors import ConfigurationError, EstimationError, GstochError, InputError, StepError
from .functionals import coeff_set_from_config, cost_from_config, lipschitz_constants, validate_assumptions
from .gheat import VolBounds, g_normal_cdf_table, g_normal_density
from .grids import TimeGrid
from .nsfde import NCNormConfig, nc_norm, picard_apply_batch, simulate_batch
from .scenarios import (Constant, RandomSwitch, check_bdg, check_isometry,
                        check_qv_identity, sample_gbm, sample_increments)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: FsPath, command: str, config: dict, seed: int, columns, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# gstoch {command}\n")
        fh.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
        fh.write(f"# seed: {seed}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    print(path)


def _policy_from_name(name: str, bounds: VolBounds, seed: int, rate: float):
    if name == "const-min":
        return Constant(bounds.var_min)
    if name == "const-max":
        return Constant(bounds.var_max)
    if name == "switch":
        return RandomSwitch(rate, (bounds.var_min, bounds.var_max), seed=seed)
    raise ConfigurationError(f"unknown policy {name!r}", field="policy")


def cmd_gnormal(args) -> int:
    out = FsPath(args.out_dir)
    if args.preset:
        spec = presets.GNORMAL_PRESETS.get(args.preset)
        if spec is None:
            raise ConfigurationError(f"unknown preset {args.preset!r}", field="preset")
        pairs, kind = spec["pairs"], spec["kind"]
    else:
        pairs = [(args.sigma_min, args.sigma_max)]
        kind = args.kind
    y = np.arange(args.y_min, args.y_max + args.dy / 2, args.dy)
    for smin, smax in pairs:
        bounds = VolBounds(smin, smax)
        cfg = {
            "command": "gnormal", "kind": kind, "sigma_min": smin, "sigma_max": smax,
            "t": args.t, "dx": args.dx, "dy": args.dy, "y_min": args.y_min,
            "y_max": args.y_max, "lower": args.lower, "preset": args.preset,
        }
        if kind == "cdf":
            vals = g_normal_cdf_table(y, bounds, args.t, dx=args.dx, lower=args.lower)
        else:
            vals = g_normal_density(y, bounds, args.t, dx=args.dx, lower=args.lower)
        name = f"{kind}_smin{smin:g}_smax{smax:g}.csv"
        write_csv(out / name, "gnormal", cfg, args.seed, ["y", kind],
                  zip(y.tolist(), vals.tolist()))
    return 0


def cmd_sample_paths(args) -> int:
    grid = TimeGrid(0.0, args.horizon, args.steps)
    bounds = VolBounds(args.sigma_min, args.sigma_max)
    cfg = {
        "command": "sample-paths", "policy": args.policy, "rate": args.rate,
        "horizon": args.horizon, "steps": args.steps, "paths": args.paths,
        "sigma_min": args.sigma_min, "sigma_max": args.sigma_max,
    }
    rows = []
    for k in range(args.paths):
        policy = _policy_from_name(args.policy, bounds, args.seed * 31 + k, args.rate)
        p = sample_gbm(policy, grid, seed=args.seed * 1009 + k)
        c_rows = np.append(p.c, p.c[-1])  # repeat last step's rate on the final node
        for t, b, qv, c in zip(p.t, p.b, p.qv, c_rows):
            rows.append((k, t, b, qv, c))
    write_csv(FsPath(args.out_dir) / "paths.csv", "sample-paths", cfg, args.seed,
              ["path", "t", "B", "QV", "c"], rows)
    return 0


def _sim_config_from_file(path: str):
    try:
        raw = json.loads(FsPath(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config: {exc}", field="config") from exc
    grid_cfg = raw.get("grid", {})
    try:
        grid = TimeGrid(float(grid_cfg.get("tau", 0.1)), float(grid_cfg.get("horizon", 1.0)),
                        int(grid_cfg.get("steps", 220)))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc), field="grid") from exc
    b = raw.get("bounds", {})
    bounds = VolBounds(float(b.get("sigma_min", 0.65)), float(b.get("sigma_max", 1.0)))
    coeffs = coeff_set_from_config(raw.get("coeffs", {}), grid.tau)
    cost_spec = cost_from_config(raw.get("cost", {}))
    return raw, grid, bounds, coeffs, cost_spec


def cmd_nsfde_sim(args) -> int:
    if args.config:
        raw, grid, bounds, coeffs, cost_spec = _sim_config_from_file(args.config)
        history = raw.get("history", "const-one")
        n_paths = int(raw.get("paths", args.paths))
        rate = float(raw.get("switch_rate", 4.0))
        cfg_echo = dict(raw)
    elif args.preset:
        spec = presets.TRAJECTORY_PRESETS.get(args.preset)
        if spec is None:
            raise ConfigurationError(f"unknown preset {args.preset!r}", field="preset")
        base = presets.TRAJECTORY_BASE
        steps = args.steps or base["steps"]
        grid = TimeGrid(base["tau"], base["horizon"], steps)
        bounds = VolBounds(base["sigma_min"], spec["sigma_max"])
        coeffs = presets.window_coeffs(base["tau"])
        history = spec["history"]
        n_paths = args.paths or base["paths"]
        rate = base["switch_rate"]
        cfg_echo = {"preset": args.preset, "steps": steps, "paths": n_paths,
                    "sigma_min": bounds.sigma_min, "sigma_max": bounds.sigma_max,
                    "history": history, "tau": grid.tau, "horizon": grid.horizon}
    else:
        raise ConfigurationError("need --preset or --config", field="preset")

    report = validate_assumptions(coeffs, None)
    for flag in report.flags:
        print(f"# note: {flag}", file=sys.stderr)

    rows = []
    policies = presets.bundle_policies(bounds, n_paths, args.seed, rate)
    for k in range(n_paths):
        eta = _history_values_for(history, grid, args.seed, k)
        gbm = sample_gbm(policies[k], grid, seed=args.seed * 1009 + k)
        path = simulate_batch(coeffs, eta, gbm.db[None, :], gbm.dqv[None, :], grid)[0]
        for i in range(grid.n_hist, grid.n + 1):
            rows.append((k, (i - grid.n_hist) * grid.h, path[i]))
    cfg_echo["command"] = "nsfde-sim"
    name = f"trajectories_{args.preset or 'config'}.csv"
    write_csv(FsPath(args.out_dir) / name, "nsfde-sim", cfg_echo, args.seed,
              ["path", "t", "X"], rows)
    return 0


def _history_values_for(kind: str, grid: TimeGrid, seed: int, path_index: int):
    if kind == "const-one":
        return 1.0
    try:
        return presets.bundle_history(kind, grid, seed, path_index)
    except ValueError as exc:
        raise ConfigurationError(str(exc), field="history") from exc


def cmd_qv_check(args) -> int:
    bounds = VolBounds(args.sigma_min, args.sigma_max)
    cfg = {
        "command": "qv-check", "policy": args.policy, "steps": args.steps,
        "refine": args.refine, "paths": args.paths, "horizon": args.horizon,
        "sigma_min": args.sigma_min, "sigma_max": args.sigma_max, "rate": args.rate,
    }
    rows = []
    for steps in (args.steps, args.steps * args.refine):
        grid = TimeGrid(0.0, args.horizon, steps)
        for k in range(args.paths):
            policy = _policy_from_name(args.policy, bounds, args.seed * 31 + k, args.rate)
            p = sample_gbm(policy, grid, seed=args.seed * 1009 + k)
            b, qv = p.b, p.qv
            stoch = np.concatenate(([0.0], np.cumsum(b[:-1] * np.diff(b))))
            resid = qv - (b**2 - 2.0 * stoch)
            rows.append((steps, k, abs(float(resid[-1])), float(np.max(np.abs(resid)))))
    write_csv(FsPath(args.out_dir) / "qv_residuals.csv", "qv-check", cfg, args.seed,
              ["steps", "path", "terminal_abs_residual", "max_abs_residual"], rows)
    return 0


def cmd_isometry_check(args) -> int:
    bounds = VolBounds(args.sigma_min, args.sigma_max)
    grid = TimeGrid(0.0, 1.0, args.steps)
    cfg = {
        "command": "isometry-check", "steps": args.steps, "samples": args.samples,
        "sigma_min": args.sigma_min, "sigma_max": args.sigma_max,
    }
    policies = [Constant(bounds.var_min), Constant(bounds.var_max),
                RandomSwitch(4.0, (bounds.var_min, bounds.var_max), seed=args.seed)]
    rows = []
    for name, eta in presets.STEP_INTEGRANDS.items():
        for policy in policies:
            lhs, rhs, gse = check_isometry(eta, policy, grid, args.samples, args.seed)
            blhs, bbound, bse = check_bdg(eta, policy, grid, args.samples, args.seed)
            rows.append((name, policy.label, lhs, rhs, lhs - rhs, gse,
                         blhs, bbound, bse))
    write_csv(FsPath(args.out_dir) / "isometry.csv", "isometry-check", cfg, args.seed,
              ["integrand", "policy", "lhs", "rhs", "gap", "gap_se",
               "bdg_lhs", "bdg_bound", "bdg_slack_se"], rows)
    return 0


def cmd_picard_check(args) -> int:
    grid = TimeGrid(0.1, 1.0, 110)
    bounds = VolBounds(0.65, 1.0)
    coeffs = presets.window_coeffs()
    rep = lipschitz_constants(coeffs)
    nc_cfg = NCNormConfig.from_constants(rep.k1, grid.horizon, bounds.var_max)
    cfg = {
        "command": "picard-check", "pairs": args.paths, "iterations": args.iterations,
        "sigma_min": bounds.sigma_min, "sigma_max": bounds.sigma_max,
        "c_rate": nc_cfg.c_rate, "k0": rep.k0, "k1": rep.k1,
    }
    db, dqv, _ = sample_increments(Constant(bounds.var_max), grid, args.paths, args.seed)
    eta = 1.0
    rows = [("contraction_bound", 0, rep.contraction_root)]
    cur = np.zeros((args.paths, grid.n + 1))
    cur[:, : grid.n_hist + 1] = 1.0
    for m in range(1, args.iterations + 1):
        nxt = picard_apply_batch(cur, coeffs, eta, db, dqv, grid)
        d = nc_norm([cur], [nxt], grid, nc_cfg)
        rows.append(("iterate_gap", m, d))
        cur = nxt
        if d < 1e-6 and m >= 2:
            break
    write_csv(FsPath(args.out_dir) / "picard.csv", "picard-check", cfg, args.seed,
              ["kind", "index", "value"], rows)
    return 0


def cmd_chattering(args) -> int:
    ex = presets.mixture_example(args.seed, args.samples)
    cfg = {
        "command": "chattering", "n_list": args.n_list, "samples": args.samples,
        "blocks": ex["mu"].n_blocks, "atoms": list(ex["actions"].atoms),
    }
    j_mu, _ = cost(ex["mu"], ex["family"], ex["coeffs"], ex["cost"], ex["eta"], ex["grid"])
    rows = [("mixture", 0, j_mu, 0.0)]
    for n in (int(s) for s in args.n_list.split(",")):
        gap, se, u_n = stability_gap(ex["mu"], n, ex["family"], ex["coeffs"],
                                     ex["eta"], ex["grid"])
        j_n, _ = cost(u_n, ex["family"], ex["coeffs"], ex["cost"], ex["eta"], ex["grid"])
        rows.append(("stability_gap", n, gap, se))
        rows.append(("cost_gap", n, abs(j_n - j_mu), se))
    write_csv(FsPath(args.out_dir) / "chattering.csv", "chattering", cfg, args.seed,
              ["kind", "n", "value", "se"], rows)
    return 0


def cmd_control_opt(args) -> int:
    if args.problem == "affine":
        prob = presets.affine_problem(args.seed, args.samples)
    elif args.problem == "concave":
        prob = presets.concave_problem(args.seed, args.samples)
    else:
        raise ConfigurationError(f"unknown problem {args.problem!r}", field="problem")
    validate_assumptions(prob["coeffs"], prob["cost"])
    cfg = {
        "command": "control-opt", "problem": args.problem, "samples": args.samples,
        "blocks": prob["n_blocks"], "resolution": prob["resolution"],
        "atoms": list(prob["actions"].atoms),
    }
    s = optimize_strict(prob["family"], prob["coeffs"], prob["cost"], prob["eta"],
                        prob["grid"], prob["actions"], prob["n_blocks"])
    r = optimize_relaxed(prob["family"], prob["coeffs"], prob["cost"], prob["eta"],
                         prob["grid"], prob["actions"], prob["n_blocks"],
                         prob["resolution"])
    rows = [
        ("strict", s.value, s.se, s.n_evaluated, json.dumps(list(s.control.atom_idx))),
        ("relaxed", r.value, r.se, r.n_evaluated,
         json.dumps([list(row) for row in r.control.weights])),
    ]
    n_chat = 32
    block_width = prob["grid"].horizon / prob["n_blocks"]
    while n_chat > 1 and block_width / n_chat < prob["grid"].h:
        n_chat //= 2
    u_chat = chattering_approx(r.control, n_chat, prob["grid"].h)
    j_chat, _ = cost(u_chat, prob["family"], prob["coeffs"], prob["cost"],
                     prob["eta"], prob["grid"])
    rows.append((f"chattering{n_chat}", j_chat, r.se, 1, ""))
    write_csv(FsPath(args.out_dir) / f"control_{args.problem}.csv", "control-opt",
              cfg, args.seed, ["kind", "value", "se", "evaluated", "detail"], rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gstoch", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
        p.add_argument("--out-dir", default="out", help="output directory")

    p = sub.add_parser("gnormal", help="worst-case distribution tables")
    common(p)
    p.add_argument("--preset", choices=sorted(presets.GNORMAL_PRESETS))
    p.add_argument("--kind", choices=["density", "cdf"], default="density")
    p.add_argument("--sigma-min", type=float, default=1.0)
    p.add_argument("--sigma-max", type=float, default=1.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--dx", type=float, default=0.02)
    p.add_argument("--dy", type=float, default=0.02)
    p.add_argument("--y-min", type=float, default=-4.0)
    p.add_argument("--y-max", type=float, default=4.0)
    p.add_argument("--lower", action="store_true", help="best-case variant")
    p.set_defaults(fn=cmd_gnormal)

    p = sub.add_parser("sample-paths", help="dump scenario paths (t, B, QV, c)")
    common(p)
    p.add_argument("--policy", choices=["const-min", "const-max", "switch"], default="switch")
    p.add_argument("--rate", type=float, default=4.0)
    p.add_argument("--paths", type=int, default=10)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--sigma-min", type=float, default=0.65)
    p.add_argument("--sigma-max", type=float, default=1.0)
    p.set_defaults(fn=cmd_sample_paths)

    p = sub.add_parser("nsfde-sim", help="simulate trajectory bundles")
    common(p)
    p.add_argument("--preset", choices=sorted(presets.TRAJECTORY_PRESETS))
    p.add_argument("--config", help="JSON problem description")
    p.add_argument("--steps", type=int, default=0, help="override grid steps")
    p.add_argument("--paths", type=int, default=0, help="override path count")
    p.set_defaults(fn=cmd_nsfde_sim)

    p = sub.add_parser("qv-check", help="quadratic-variation identity residuals")
    common(p)
    p.add_argument("--policy", choices=["const-min", "const-max", "switch"], default="const-max")
    p.add_argument("--rate", type=float, default=4.0)
    p.add_argument("--paths", type=int, default=100)
    p.add_argument("--steps", type=int, default=64)
    p.add_argument("--refine", type=int, default=4)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--sigma-min", type=float, default=0.65)
    p.add_argument("--sigma-max", type=float, default=1.0)
    p.set_defaults(fn=cmd_qv_check)

    p = sub.add_parser("isometry-check", help="second-moment integral identities")
    common(p)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--sigma-min", type=float, default=0.65)
    p.add_argument("--sigma-max", type=float, default=1.0)
    p.set_defaults(fn=cmd_isometry_check)

    p = sub.add_parser("picard-check", help="fixed-point iteration diagnostics")
    common(p)
    p.add_argument("--paths", type=int, default=200)
    p.add_argument("--iterations", type=int, default=20)
    p.set_defaults(fn=cmd_picard_check)

    p = sub.add_parser("chattering", help="mixture-vs-chattering gaps")
    common(p)
    p.add_argument("--n-list", default="2,8,32")
    p.add_argument("--samples", type=int, default=256)
    p.set_defaults(fn=cmd_chattering)

    p = sub.add_parser("control-opt", help="exhaustive strict/relaxed optimization")
    common(p)
    p.add_argument("--problem", choices=["affine", "concave"], default="affine")
    p.add_argument("--samples", type=int, default=160)
    p.set_defaults(fn=cmd_control_opt)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigurationError, InputError) as exc:
        field = getattr(exc, "field", None)
        print(f"error: config field={field or 'n/a'}: {exc}", file=sys.stderr)
        return 2
    except StepError as exc:
        print(f"error: divergence step={exc.step}: {exc}", file=sys.stderr)
        return 3
    except EstimationError as exc:
        print(f"error: estimation: {exc}", file=sys.stderr)
        return 2
    except GstochError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
