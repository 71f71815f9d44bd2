"""Acceptance suite: closed-form-oracle equivalence and property checks
at full scale, one printed pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as
they complete.  Every tolerance is fixed here, from the module contracts;
nothing is calibrated after the fact.
"""

import math
import time

import numpy as np

from mfsde import parallel
from mfsde.coefficients import check_example26_case1, make_coefficients, smallest_passing_C
from mfsde.girsanov import martingale_mean_check, tv_stability_check
from mfsde.lyapunov import (
    check_C_conditions,
    generator_margin,
    monitor_expectation,
    polynomial_growth_certificate,
    quadratic_certificate,
)
from mfsde.measure import (
    DiscreteSignedMeasure,
    WeightFunction,
    hahn_split,
    weighted_tv,
)
from mfsde.mollify import MollifierSpec, lp_distance_on_ball, mollify_coefficient, sup_distance_on_ball
from mfsde.oracle import ScalarLawProblem, oracle_compare, solve_g
from mfsde.solver import InitialLaw, SimConfig, simulate


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def announce(num, name, passed, detail, elapsed, limit):
    status = "PASS" if passed else "FAIL"
    print(f"\nCRITERION {num:2d} {name}: {status} - {detail} [{elapsed:.1f}s / limit {limit:.0f}s]")


def test_criterion_01_weighted_tv_exactness():
    limit = 1.0
    rng = np.random.default_rng(101)
    with Timer() as tm:
        worst_rel = 0.0
        hahn_exact = True
        for _ in range(100):
            d = int(rng.integers(1, 4))
            n = int(rng.integers(1, 51))
            mu = DiscreteSignedMeasure(rng.normal(size=(n, d)) * 3, rng.normal(size=n))
            alpha = float(rng.uniform(0, 3))
            phi = WeightFunction.polynomial(alpha)
            val = weighted_tv(mu, phi)
            oracle = math.fsum(
                (1.0 + math.sqrt(sum(v * v for v in p)) ** alpha) * abs(w)
                for p, w in zip(mu.positions, mu.weights)
            )
            worst_rel = max(worst_rel, abs(val - oracle) / oracle)
            pos, neg = hahn_split(mu)
            back = pos - neg
            order = np.lexsort(mu.positions.T)
            merged = mu.merged()
            order_m = np.lexsort(merged.positions.T)
            order_b = np.lexsort(back.positions.T)
            hahn_exact &= np.array_equal(
                back.positions[order_b], merged.positions[order_m]
            ) and np.array_equal(back.weights[order_b], merged.weights[order_m])
    passed = worst_rel <= 1e-12 and hahn_exact and tm.elapsed < limit
    announce(1, "weighted-TV exactness", passed,
             f"worst rel err {worst_rel:.2e}, hahn exact: {hahn_exact}", tm.elapsed, limit)
    assert worst_rel <= 1e-12
    assert hahn_exact
    assert tm.elapsed < limit


def test_criterion_02_lower_semicontinuity_probe():
    limit = 1.0
    phi = WeightFunction.polynomial(2.0)
    with Timer() as tm:
        lim_val = weighted_tv(DiscreteSignedMeasure([0.0], [1.0]), phi)
        tail_point = min(
            weighted_tv(DiscreteSignedMeasure([1.0 / n], [1.0]), phi) for n in range(1, 1000)
        )
        tail_escape = min(
            weighted_tv(
                DiscreteSignedMeasure([0.0, float(n)], [1.0 - 1.0 / n, 1.0 / n]), phi
            )
            for n in range(2, 1000)
        )
        ok = lim_val <= tail_point + 1e-12 and lim_val <= tail_escape + 1e-12
    passed = ok and tm.elapsed < limit
    announce(2, "lower-semicontinuity probe", passed,
             f"limit {lim_val:.1f} <= tails ({tail_point:.6f}, {tail_escape:.6f})",
             tm.elapsed, limit)
    assert ok
    assert tm.elapsed < limit


def test_criterion_03_mean_drift_oracle_equivalence():
    limit = 60.0
    with Timer() as tm:
        problem = ScalarLawProblem.make(np.sign, (1.0, 10.0), 1.0, 1.0, breakpoints=(0.0,))
        g_path = solve_g(problem, 1e-3)
        cs = make_coefficients("sign")
        cfg = SimConfig(N=50_000, dt=1e-3, T=1.0, seed=2024)
        ens = simulate(cs, InitialLaw.point(1.0), cfg)
        rep = oracle_compare(problem, ens, g_path)
    passed = rep.passed and tm.elapsed < limit
    announce(3, "mean-drift oracle equivalence", passed,
             f"sup err {rep.sup_error:.4f} <= bound {rep.bound:.4f}", tm.elapsed, limit)
    assert rep.passed
    assert tm.elapsed < limit


def test_criterion_04_mean_field_ou_variance():
    limit = 90.0
    target = (1.0 - math.exp(-2.0)) / 2.0
    with Timer() as tm:
        cs = make_coefficients("linear-meanfield", theta=1.0, sigma=1.0)
        cfg = SimConfig(N=100_000, dt=1e-3, T=1.0, seed=2024)
        ens = simulate(cs, InitialLaw.point(0.0), cfg)
        var_T = float(ens.variance_series()[-1, 0])
        se = var_T * math.sqrt(2.0 / (cfg.N - 1))
    ok = abs(var_T - target) <= 3.0 * se
    passed = ok and tm.elapsed < limit
    announce(4, "mean-field OU closed form", passed,
             f"var {var_T:.5f} vs {target:.5f} (3SE {3*se:.5f})", tm.elapsed, limit)
    assert ok
    assert tm.elapsed < limit


def test_criterion_05_lyapunov_moment_bound():
    limit = 90.0
    with Timer() as tm:
        cert = quadratic_certificate(C=1.0)
        grid = np.arange(-5.0, 5.0 + 0.005, 0.01)
        margin = generator_margin(
            cert, lambda t, X: -X, lambda t, X: np.array([[1.0]]), [0.0], grid
        )
        ens = simulate(
            make_coefficients("ou-attraction", theta=1.0, sigma=1.0),
            InitialLaw.point(0.0),
            SimConfig(N=100_000, dt=1e-3, T=1.0, seed=7),
        )
        mon_ok = monitor_expectation(ens, cert)
        del ens
        bad = simulate(
            make_coefficients("ou-attraction", theta=-1.0, sigma=0.0),
            InitialLaw.point(1.0),
            SimConfig(N=8, dt=1e-3, T=1.0, seed=7),
        )
        mon_bad = monitor_expectation(bad, quadratic_certificate(C=0.0))
    ok = (
        margin.passed
        and mon_ok.passed
        and (not mon_bad.passed)
        and mon_bad.first_flag_time is not None
        and mon_bad.first_flag_time <= 0.5
    )
    passed = ok and tm.elapsed < limit
    announce(5, "Lyapunov a priori bound", passed,
             f"certified C=1 clean; false C=0 flagged at t={mon_bad.first_flag_time}",
             tm.elapsed, limit)
    assert margin.passed and mon_ok.passed
    assert not mon_bad.passed and mon_bad.first_flag_time <= 0.5
    assert tm.elapsed < limit


def test_criterion_06_martingale_mean():
    limit = 30.0
    with Timer() as tm:
        rep = martingale_mean_check(c=0.5, n_paths=100_000, dt=1e-3, T=1.0, seed=1234)
    passed = rep.passed and tm.elapsed < limit
    announce(6, "stochastic exponential martingale", passed,
             f"mean M_T {rep.final_mean:.5f} (3SE {3*rep.final_se:.5f})", tm.elapsed, limit)
    assert rep.passed
    assert tm.elapsed < limit


def gaussian_tv_oracle(m1, v1, m2, v2, phi, half_width=8.0, n=2_000_001):
    lo = min(m1, m2) - half_width
    hi = max(m1, m2) + half_width
    y = np.linspace(lo, hi, n)
    f1 = np.exp(-((y - m1) ** 2) / (2 * v1)) / np.sqrt(2 * np.pi * v1)
    f2 = np.exp(-((y - m2) ** 2) / (2 * v2)) / np.sqrt(2 * np.pi * v2)
    return float(np.trapezoid(phi(y) * np.abs(f1 - f2), y))


def discrete_gaussian_params(shift, dt, n_steps):
    m = v = 0.0
    for _ in range(n_steps):
        m = (1.0 - dt) * m + shift * dt
        v = (1.0 - dt) ** 2 * v + dt
    return m, v


def test_criterion_07_tv_stability_inequality():
    limit = 180.0
    cell = 0.05
    with Timer() as tm:
        cs1 = make_coefficients("ou-attraction", theta=1.0, sigma=1.0)
        cs2 = make_coefficients("ou-attraction", theta=1.0, sigma=1.0, shift=0.2)
        cfg = SimConfig(N=100_000, dt=1e-3, T=1.0, seed=555, estimator=("grid", cell))
        phi = WeightFunction.polynomial(2.0)
        rep = tv_stability_check(cs1, cs2, InitialLaw.point(0.0), cfg, phi,
                                 [0.25, 0.5, 1.0])
        oracle_ok = True
        details = []
        for entry in rep.entries:
            t = entry["t"]
            k = int(round(t / cfg.dt))
            m1, v1 = discrete_gaussian_params(0.0, cfg.dt, k)
            m2, v2 = discrete_gaussian_params(0.2, cfg.dt, k)
            tv = gaussian_tv_oracle(m1, v1, m2, v2, lambda y: 1.0 + y**2)
            gap = abs(entry["lhs"] - tv)
            tol = entry["lhs_allowance"] + 1.0 * cell
            oracle_ok &= gap <= tol
            details.append(f"t={t:g}: lhs={entry['lhs']:.4f} rhs={entry['rhs']:.4f} "
                           f"oracle={tv:.4f} gap={gap:.4f}<={tol:.4f}")
    ok = rep.passed and oracle_ok
    passed = ok and tm.elapsed < limit
    announce(7, "TV stability inequality", passed, "; ".join(details), tm.elapsed, limit)
    assert rep.passed
    assert oracle_ok
    assert tm.elapsed < limit


def test_criterion_08_mollification_convergence():
    limit = 30.0
    with Timer() as tm:
        raw = lambda t, z: np.sign(z[..., 0])
        dists = []
        for r in (5.0, 10.0, 20.0, 40.0):
            smooth = mollify_coefficient(raw, MollifierSpec(n=2, r=r, dim=1), power=2)
            dists.append(lp_distance_on_ball(raw, smooth, p=6, R=1.0, T=1.0,
                                             resolution=801, t_resolution=2))
        monotone = all(b < a for a, b in zip(dists, dists[1:]))

        ident = lambda t, z: z[..., 0]
        smooth_id = mollify_coefficient(ident, MollifierSpec(n=2, r=10.0, dim=1), power=2)
        sup_id = sup_distance_on_ball(ident, smooth_id, R=1.0, resolution=201)
        sup_ok = sup_id <= 1.0 / 10.0
    ok = monotone and sup_ok
    passed = ok and tm.elapsed < limit
    announce(8, "mollification convergence", passed,
             f"L6 dists {['%.4f' % d for d in dists]}, sup(identity) {sup_id:.2e} <= 0.1",
             tm.elapsed, limit)
    assert monotone
    assert sup_ok
    assert tm.elapsed < limit


def test_criterion_09_certificate_checkers():
    limit = 10.0
    grid = np.arange(-5.0, 5.0 + 0.005, 0.01)
    coarse = np.arange(-5.0, 5.0 + 0.025, 0.05)
    with Timer() as tm:
        ou = make_coefficients("ou-attraction", theta=1.0, sigma=1.0)
        c_best, rep_best = smallest_passing_C(
            lambda C: check_example26_case1(ou.drift, 2.0, 3.0, C, [0.0], grid, grid[::25]),
            c_init=1.0,
        )
        search_ok = rep_best.passed and c_best is not None and c_best <= 2.0

        # case-1 instantiation of the weight family on the OU interaction
        from mfsde.coefficients import DelayedInteractionDrift, DispersionSpec

        inter = DelayedInteractionDrift(
            beta=lambda t, s, w, y: np.broadcast_to(
                -w.state, np.broadcast_shapes(w.state.shape, np.shape(y))
            ),
            kappa=((0.0, 1.0),),
            tau=0.0,
        )
        disp = DispersionSpec(fn=lambda t, w: np.array([[1.0]]))
        cert = polynomial_growth_certificate(alpha=2.0, C=12.0)
        inst = check_C_conditions(inter, disp, cert, [0.0], coarse, coarse,
                                  np.linspace(-1, 1, 100))

        cubic = make_coefficients("cubic", sigma=1.0)
        growth_fail = check_example26_case1(cubic.drift, 2.0, 3.0, 10.0, [0.0],
                                            grid, [0.0])
        diss = growth_fail.condition("dissipativity")
        cubic_ok = (not diss.passed) and diss.worst_margin > 0 and abs(diss.argmax["x"]) == 5.0

        bad_cert = quadratic_certificate(
            C=10.0,
            weight=lambda t, y: np.ones(len(np.atleast_2d(y))),
            eta=lambda t, y: 1.0 + np.linalg.norm(np.atleast_2d(y), axis=-1),
        )
        zero_inter = DelayedInteractionDrift(
            beta=lambda t, s, w, y: np.zeros_like(w.state), kappa=((0.0, 1.0),), tau=0.0
        )
        mismatch = check_C_conditions(zero_inter, DispersionSpec(fn=lambda t, w: np.zeros((1, 1))),
                                      bad_cert, [0.0], coarse, coarse, [0.0])
        wv = mismatch.condition("weight-vs-V")
        mismatch_ok = (not wv.passed) and wv.worst_margin > 0 and abs(wv.argmax["y"]) == 5.0
    ok = search_ok and inst.passed and cubic_ok and mismatch_ok
    passed = ok and tm.elapsed < limit
    announce(9, "certificate checkers", passed,
             f"smallest C {c_best:.4f} <= 2; instantiation pass; designed failures fail at edges",
             tm.elapsed, limit)
    assert search_ok
    assert inst.passed
    assert cubic_ok
    assert mismatch_ok
    assert tm.elapsed < limit


def test_criterion_10_thread_count_determinism(tmp_path):
    from mfsde.cli import main, write_csv

    def run_cli(args, threads):
        code = main(args + ["--threads", str(threads)])
        assert code == 0

    oracle_cfg = tmp_path / "oracle.cfg"
    oracle_cfg.write_text(
        "oracle.h=sign\nN=50000\ndt=0.001\nT=1.0\nseed=2024\n"
        "init.kind=point\ninit.value=1\n"
    )
    sim_cfg = tmp_path / "sim.cfg"
    sim_cfg.write_text(
        "coefficients.name=linear-meanfield\nN=100000\ndt=0.001\nT=1.0\nseed=2024\n"
        "init.kind=point\ninit.value=0\n"
    )
    with Timer() as tm:
        pairs = []
        for sub, cfg, csv_name in (
            ("oracle", oracle_cfg, "oracle_series.csv"),
            ("simulate", sim_cfg, "simulate_summary.csv"),
        ):
            for threads, outdir in ((1, tmp_path / f"{sub}_t1"), (8, tmp_path / f"{sub}_t8")):
                run_cli([sub, "--config", str(cfg), "--out", str(outdir)], threads)
            a = (tmp_path / f"{sub}_t1" / csv_name).read_bytes()
            b = (tmp_path / f"{sub}_t8" / csv_name).read_bytes()
            pairs.append((sub, a == b))

        # martingale run re-executed under both worker caps
        reports = {}
        for threads in (1, 8):
            parallel.set_max_threads(threads)
            try:
                rep = martingale_mean_check(c=0.5, n_paths=100_000, dt=1e-3, T=1.0, seed=1234)
            finally:
                parallel.set_max_threads(1)
            out = tmp_path / f"martingale_t{threads}.csv"
            write_csv(out, {"subcommand": "martingale", "seed": "1234"},
                      [("t", rep.times), ("mean_m", rep.mean_m), ("se_m", rep.se_m)])
            reports[threads] = out.read_bytes()
        pairs.append(("martingale", reports[1] == reports[8]))
    ok = all(same for _, same in pairs)
    announce(10, "thread-count determinism", ok,
             ", ".join(f"{name}: {'identical' if same else 'DIFFERS'}" for name, same in pairs),
             tm.elapsed, 600.0)
    assert ok
