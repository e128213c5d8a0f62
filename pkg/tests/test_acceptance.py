"""Acceptance suite: one test per shipped guarantee.

Every test measures the advertised quantity at the stated scale, prints a
single ``criterion NN: PASS/FAIL`` line with the numbers, then asserts, so
the pytest log doubles as the acceptance report. Tolerances live here, not
in the library.
"""

import math
import time

import numpy as np

from gstoch import presets
from gstoch.cli import main as cli_main
from gstoch.control import chattering_approx, cost, optimize_relaxed, optimize_strict, stability_gap
from gstoch.functionals import lipschitz_constants
from gstoch.gheat import SpatialGrid, VolBounds, g_normal_cdf_table, solve_g_heat
from gstoch.grids import TimeGrid
from gstoch.nsfde import NCNormConfig, contraction_ratio, nc_norm, picard_apply_batch, simulate_batch
from gstoch.scenarios import (Constant, RandomSwitch, check_bdg, check_isometry,
                              default_family, sample_gbm, sample_increments,
                              upper_expectation)


def report(num, ok, detail):
    print(f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num:02d}: {detail}"


def normal_cdf(y):
    return 0.5 * (1.0 + math.erf(y / math.sqrt(2.0)))


def quadratic_value(sign, bounds):
    space = SpatialGrid.symmetric(8.0, 0.05)
    sol = solve_g_heat(lambda x: sign * x * x, bounds, 1.0, space)
    return sol.value_at(0.0)


def test_criterion_01_classical_reduction():
    t0 = time.monotonic()
    y = np.arange(-4.0, 4.0 + 0.01, 0.02)
    table = g_normal_cdf_table(y, VolBounds(1.0, 1.0), 1.0, dx=0.02)
    err = float(np.max(np.abs(table - np.vectorize(normal_cdf)(y))))
    elapsed = time.monotonic() - t0
    ok = err <= 2e-3 and elapsed <= 30.0
    report(1, ok, f"max_abs_err={err:.2e} (tol 2e-03), runtime={elapsed:.1f}s (limit 30s)")


def test_criterion_02_moment_bounds():
    bounds = VolBounds(0.8, 1.3)
    up = quadratic_value(+1.0, bounds)
    lo = quadratic_value(-1.0, bounds)
    ok = abs(up - 1.69) <= 1e-2 and abs(lo - (-0.64)) <= 1e-2
    report(2, ok, f"upper={up:.4f} (want 1.69±1e-2), lower={lo:.4f} (want -0.64±1e-2)")


def test_criterion_03_dual_consistency():
    bounds = VolBounds(0.8, 1.3)
    pde = quadratic_value(+1.0, bounds)
    grid = TimeGrid(0.0, 1.0, 200)
    fam = default_family(bounds, seed=1, n_switchers=2, samples_per_policy=10_000)
    est, table = upper_expectation(lambda p: float(p.b[-1]) ** 2, fam, grid)
    se = max(table, key=lambda r: r.mean).se
    gap = abs(est - pde)
    ok = gap <= 3.0 * se
    report(3, ok, f"mc={est:.4f}, pde={pde:.4f}, |gap|={gap:.4f} <= 3*se={3 * se:.4f}")


def test_criterion_04_qv_identity_rate():
    bounds = VolBounds(0.65, 1.0)
    levels = (bounds.var_min, bounds.var_max)

    def rms_resid(steps):
        grid = TimeGrid(0.0, 1.0, steps)
        acc = 0.0
        for k in range(100):
            p = sample_gbm(RandomSwitch(4.0, levels, seed=31 * k), grid, seed=1009 * k)
            stoch = np.cumsum(p.b[:-1] * np.diff(p.b))
            resid = p.qv[-1] - (p.b[-1] ** 2 - 2.0 * stoch[-1])
            acc += resid * resid
        return math.sqrt(acc / 100.0)

    r64, r256 = rms_resid(64), rms_resid(256)
    ratio = r64 / r256
    ok = ratio >= 1.7
    report(4, ok, f"rms(h)={r64:.4f}, rms(h/4)={r256:.4f}, ratio={ratio:.2f} >= 1.7")


def test_criterion_05_isometry_and_bdg():
    bounds = VolBounds(0.65, 1.0)
    grid = TimeGrid(0.0, 1.0, 200)
    policies = [Constant(bounds.var_min), Constant(bounds.var_max),
                RandomSwitch(4.0, (bounds.var_min, bounds.var_max), seed=5)]
    worst_iso, worst_bdg = 0.0, -np.inf
    ok = True
    for name, eta in presets.STEP_INTEGRANDS.items():
        for j, pol in enumerate(policies):
            lhs, rhs, gap_se = check_isometry(eta, pol, grid, 10_000, seed=7 + j)
            z = abs(lhs - rhs) / gap_se
            worst_iso = max(worst_iso, z)
            ok = ok and z <= 3.0
            blhs, bound, slack_se = check_bdg(eta, pol, grid, 10_000, seed=7 + j)
            excess = blhs - bound
            worst_bdg = max(worst_bdg, excess / slack_se)
            ok = ok and excess <= 3.0 * slack_se
    report(5, ok, f"worst isometry |z|={worst_iso:.2f} (<=3), "
                  f"worst bdg excess={worst_bdg:.2f} se (<=3)")


def test_criterion_06_contraction_and_picard():
    grid = TimeGrid(0.1, 1.0, 110)
    bounds = VolBounds(0.65, 1.0)
    coeffs = presets.window_coeffs(grid.tau)
    rep = lipschitz_constants(coeffs)
    cfg = NCNormConfig.from_constants(rep.k1, grid.horizon, bounds.var_max)
    target = math.sqrt(8.0 * rep.k0**2 + 0.5) + 0.05

    db, dqv, _ = sample_increments(Constant(bounds.var_max), grid, 1000, seed=12)
    rng = np.random.default_rng(9)
    x = rng.normal(size=(1000, grid.n + 1)).cumsum(axis=1) * 0.1
    y = x + rng.normal(size=(1000, grid.n + 1)) * 0.1
    ratio = contraction_ratio([x], [y], coeffs, [(db, dqv)], 1.0, grid, cfg)

    cur = np.zeros((1000, grid.n + 1))
    cur[:, : grid.n_hist + 1] = 1.0
    gap, iters = np.inf, 0
    for m in range(1, 21):
        nxt = picard_apply_batch(cur, coeffs, 1.0, db, dqv, grid)
        gap = nc_norm([cur], [nxt], grid, cfg)
        cur, iters = nxt, m
        if gap < 1e-6:
            break
    ok = ratio <= target and gap < 1e-6 and iters <= 20
    report(6, ok, f"ratio={ratio:.4f} <= {target:.4f}, picard gap={gap:.2e} "
                  f"after {iters} iterations (<1e-6 within 20)")


def test_criterion_07_euler_convergence():
    tau, horizon = 0.1, 1.5
    finest = TimeGrid(tau, horizon, 4096)
    coeffs = presets.window_coeffs(tau)
    db_f, dqv_f, _ = sample_increments(Constant(1.0), finest, 100, seed=2026)

    def terminal(total_steps):
        g = TimeGrid(tau, horizon, total_steps)
        k = finest.n_fwd // g.n_fwd
        db = db_f.reshape(100, g.n_fwd, k).sum(axis=2)
        dqv = dqv_f.reshape(100, g.n_fwd, k).sum(axis=2)
        return simulate_batch(coeffs, lambda t: math.exp(t), db, dqv, g)[:, -1]

    hs, errs = [], []
    for n in (64, 128, 256):
        diff = terminal(n) - terminal(n * 16)
        errs.append(float(np.sqrt(np.mean(diff**2))))
        hs.append((horizon + tau) / n)
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    ok = slope >= 0.4
    report(7, ok, f"rms errors={[f'{e:.3e}' for e in errs]} at h={hs}, "
                  f"slope={slope:.2f} >= 0.4")


def test_criterion_08_chattering_stability():
    ex = presets.mixture_example(seed=0, samples=256)
    args = (ex["family"], ex["coeffs"], ex["cost"], ex["eta"], ex["grid"])
    j_mu, tbl = cost(ex["mu"], *args)
    se_mu = max(tbl, key=lambda r: r.mean).se
    sg, cg, sg_se, cg_se = {}, {}, {}, {}
    for n in (2, 8, 32):
        g, s, u_n = stability_gap(ex["mu"], n, ex["family"], ex["coeffs"],
                                  ex["eta"], ex["grid"])
        j_n, tbl_n = cost(u_n, *args)
        sg[n], sg_se[n] = g, s
        cg[n] = abs(j_n - j_mu)
        cg_se[n] = se_mu + max(tbl_n, key=lambda r: r.mean).se
    ok = True
    for a, b in ((2, 8), (8, 32)):
        ok = ok and sg[b] <= sg[a] + 3.0 * (sg_se[a] + sg_se[b])
        ok = ok and cg[b] <= cg[a] + 3.0 * (cg_se[a] + cg_se[b])
    ok = ok and sg[32] <= 0.1 * sg[2] and cg[32] <= 0.1 * cg[2]
    report(8, ok, f"stability gaps={[f'{sg[n]:.4f}' for n in (2, 8, 32)]}, "
                  f"cost gaps={[f'{cg[n]:.4f}' for n in (2, 8, 32)]}, "
                  f"n=32 at {100 * sg[32] / sg[2]:.1f}% / {100 * cg[32] / cg[2]:.1f}% of n=2")


def test_criterion_09_relaxation_theorem():
    t0 = time.monotonic()
    aff = presets.affine_problem(seed=0, samples=160)
    s = optimize_strict(aff["family"], aff["coeffs"], aff["cost"], aff["eta"],
                        aff["grid"], aff["actions"], aff["n_blocks"])
    r = optimize_relaxed(aff["family"], aff["coeffs"], aff["cost"], aff["eta"],
                         aff["grid"], aff["actions"], aff["n_blocks"],
                         aff["resolution"])
    affine_gap = abs(s.value - r.value)
    affine_ok = affine_gap <= 3.0 * (s.se + r.se)

    con = presets.concave_problem(seed=0, samples=192)
    cs = optimize_strict(con["family"], con["coeffs"], con["cost"], con["eta"],
                         con["grid"], con["actions"], con["n_blocks"])
    cr = optimize_relaxed(con["family"], con["coeffs"], con["cost"], con["eta"],
                          con["grid"], con["actions"], con["n_blocks"],
                          con["resolution"])
    u32 = chattering_approx(cr.control, 32, con["grid"].h)
    j32, _ = cost(u32, con["family"], con["coeffs"], con["cost"], con["eta"], con["grid"])
    closure = (cs.value - j32) / (cs.value - cr.value)
    concave_ok = cr.value < cs.value and closure >= 0.9
    elapsed = time.monotonic() - t0
    ok = affine_ok and concave_ok and elapsed <= 600.0
    report(9, ok, f"affine |strict-relaxed|={affine_gap:.2e} <= 3*se={3 * (s.se + r.se):.2e}; "
                  f"concave strict={cs.value:.4f} > relaxed={cr.value:.4f}, "
                  f"chattering32 closes {100 * closure:.1f}% (>=90%); "
                  f"runtime={elapsed:.0f}s (limit 600s)")


def test_criterion_10_preset_reproduction(tmp_path):
    ok = True
    details = []
    for preset in ("paper-fig5", "paper-fig6", "paper-fig7", "paper-fig8"):
        a, b = tmp_path / f"{preset}-a", tmp_path / f"{preset}-b"
        for out in (a, b):
            code = cli_main(["nsfde-sim", "--preset", preset, "--out-dir", str(out)])
            ok = ok and code == 0
        name = f"trajectories_{preset}.csv"
        blob_a, blob_b = (a / name).read_bytes(), (b / name).read_bytes()
        lines = [ln for ln in blob_a.decode().splitlines()
                 if ln and not ln.startswith("#") and not ln.startswith("path,")]
        paths = {ln.split(",")[0] for ln in lines}
        finite = all(math.isfinite(float(ln.split(",")[2])) for ln in lines)
        ok = ok and len(paths) == 20 and finite and blob_a == blob_b
        details.append(f"{preset}: {len(paths)} paths, finite={finite}, "
                       f"identical={blob_a == blob_b}")
    report(10, ok, "; ".join(details))
