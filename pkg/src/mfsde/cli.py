"""Configuration-driven experiment runner.

Configs are flat text files, one ``key=value`` per line with ``#``
comments; unknown keys are rejected.  Every run writes a JSON report
carrying the artifact version, the fully resolved config, the seed and
the verdicts, plus CSV series whose comment header echoes the same
resolved config, so any output can be re-run byte-identically from its
own header.

Exit codes: 0 on success/pass, 1 on a failed check (certificate
violation, stability violation, oracle mismatch, simulation blowup),
2 on usage or config errors.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, parallel
from .coefficients import (
    DelayedInteractionDrift,
    DispersionSpec,
    PairwiseMeanFieldSpec,
    make_coefficients,
    smallest_passing_C,
)
from .errors import ConfigError, SimulationBlowup
from .girsanov import tv_stability_check
from .lyapunov import (
    exponential_growth_certificate,
    generator_margin,
    monitor_expectation,
    polynomial_growth_certificate,
    quadratic_certificate,
    check_C_conditions,
)
from .measure import WeightFunction
from .mollify import MollifierSpec, mollify_coefficient
from .oracle import ScalarLawProblem, oracle_compare, solve_g
from .solver import InitialLaw, SimConfig, integrability_report, simulate

SUBCOMMANDS = (
    "simulate",
    "oracle",
    "stability",
    "check-certificate",
    "check-conditions",
    "mollify-inspect",
)

_COEFF_KEYS = {
    "coefficients.name",
    "coefficients.theta",
    "coefficients.sigma",
    "coefficients.shift",
    "coefficients.scale",
    "coefficients.drift",
    "coefficients.kappa",
}
_COEFF2_KEYS = {k.replace("coefficients.", "coefficients2.") for k in _COEFF_KEYS}
_INIT_KEYS = {"init.kind", "init.value", "init.mean", "init.std", "init.weights", "init.means", "init.stds"}
_SIM_KEYS = {"N", "dt", "T", "tau", "seed", "estimator.kind", "estimator.cell_width"}
_OUT_KEYS = {"output.path", "output.trajectory"}
_CERT_KEYS = {"certificate.V", "certificate.C", "certificate.alpha", "certificate.p", "certificate.search"}
_GRID_KEYS = {"grid.lo", "grid.hi", "grid.step", "times"}

ALLOWED_KEYS = {
    "simulate": _COEFF_KEYS | _INIT_KEYS | _SIM_KEYS | _OUT_KEYS,
    "oracle": {"oracle.h", "oracle.growth_C", "oracle.growth_T"} | _INIT_KEYS | _SIM_KEYS | _OUT_KEYS,
    "stability": _COEFF_KEYS | _COEFF2_KEYS | _INIT_KEYS | _SIM_KEYS | _OUT_KEYS
    | {"weight.kind", "weight.alpha", "weight.p", "times"},
    "check-certificate": _COEFF_KEYS | _INIT_KEYS | _SIM_KEYS | _OUT_KEYS | _CERT_KEYS | _GRID_KEYS,
    "check-conditions": _COEFF_KEYS | _INIT_KEYS | _SIM_KEYS | _OUT_KEYS | _CERT_KEYS | _GRID_KEYS,
    "mollify-inspect": _COEFF_KEYS | _OUT_KEYS
    | {"mollify.n", "mollify.r", "mollify.power", "mollify.n_quad",
       "section.lo", "section.hi", "section.num", "seed"},
}


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------


def parse_config(path):
    """Flat key=value config; # starts a comment, duplicates are errors."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = val
    return out


def validate_keys(cfg, subcommand):
    allowed = ALLOWED_KEYS[subcommand]
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown config key(s) for {subcommand}: {', '.join(unknown)}")


def _get(cfg, key, cast=str, default=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    try:
        return cast(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from exc


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def coefficients_from_config(cfg, prefix="coefficients"):
    name = _get(cfg, f"{prefix}.name", required=True)
    params = {}
    for pkey in ("theta", "sigma", "shift", "scale", "drift"):
        val = _get(cfg, f"{prefix}.{pkey}", float)
        if val is not None:
            params[pkey] = val
    kappa = _get(cfg, f"{prefix}.kappa")
    if kappa is not None:
        params["kappa"] = kappa
    try:
        return make_coefficients(name, **params)
    except (KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def init_from_config(cfg):
    kind = _get(cfg, "init.kind", default="point")
    if kind == "point":
        return InitialLaw.point(_get(cfg, "init.value", float, default=0.0))
    if kind == "gaussian":
        return InitialLaw.gaussian(
            _get(cfg, "init.mean", float, default=0.0), _get(cfg, "init.std", float, default=1.0)
        )
    if kind == "mixture":
        return InitialLaw.mixture(
            _floats(_get(cfg, "init.weights", required=True)),
            _floats(_get(cfg, "init.means", required=True)),
            _floats(_get(cfg, "init.stds", required=True)),
        )
    raise ConfigError(f"unknown init.kind {kind!r}")


def simconfig_from_config(cfg, seed_override=None):
    seed = seed_override if seed_override is not None else _get(cfg, "seed", int, default=0)
    est_kind = _get(cfg, "estimator.kind", default="atoms")
    if est_kind == "grid":
        estimator = ("grid", _get(cfg, "estimator.cell_width", float, required=True))
    elif est_kind == "atoms":
        estimator = ("atoms",)
    else:
        raise ConfigError(f"unknown estimator.kind {est_kind!r}")
    try:
        return SimConfig(
            N=_get(cfg, "N", int, required=True),
            dt=_get(cfg, "dt", float, required=True),
            T=_get(cfg, "T", float, required=True),
            tau=_get(cfg, "tau", float, default=0.0),
            seed=seed,
            estimator=estimator,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def weight_from_config(cfg):
    kind = _get(cfg, "weight.kind", default="polynomial")
    alpha = _get(cfg, "weight.alpha", float, default=2.0)
    if kind == "polynomial":
        return WeightFunction.polynomial(alpha)
    if kind == "exponential":
        return WeightFunction.exponential(alpha, _get(cfg, "weight.p", float, default=1.0))
    raise ConfigError(f"unknown weight.kind {kind!r}")


def certificate_from_config(cfg):
    family = _get(cfg, "certificate.V", default="quadratic")
    C = _get(cfg, "certificate.C", float, default=1.0)
    alpha = _get(cfg, "certificate.alpha", float, default=2.0)
    p = _get(cfg, "certificate.p", float, default=1.0)
    if family == "quadratic":
        cert = quadratic_certificate(C=C)
        return cert, polynomial_growth_certificate(alpha, C=C)
    if family == "polynomial":
        cert = polynomial_growth_certificate(alpha, C=C)
        return cert, cert
    if family == "exponential":
        cert = exponential_growth_certificate(alpha, p, C=C)
        return cert, cert
    raise ConfigError(f"unknown certificate.V {family!r}")


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------


def resolved_config(cfg, subcommand, seed):
    echo = dict(sorted(cfg.items()))
    echo["seed"] = str(seed)
    echo["subcommand"] = subcommand
    return echo


def write_csv(path, echo, columns):
    """CSV with a config-echo comment header; floats printed as %.17g."""
    names = [name for name, _ in columns]
    arrays = [np.asarray(arr) for _, arr in columns]
    with open(path, "w") as fh:
        fh.write(f"# mfsde-version={__version__}\n")
        for key, val in echo.items():
            fh.write(f"# {key}={val}\n")
        fh.write(",".join(names) + "\n")
        for row in zip(*arrays):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    return f"{float(v):.17g}"


def header_to_config(csv_path):
    """Recover the resolved config dict from a CSV comment header."""
    out = {}
    with open(csv_path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" in body:
                key, val = body.split("=", 1)
                out[key] = val
    out.pop("mfsde-version", None)
    return out


def write_report(path, subcommand, seed, echo, verdict, checks=None, series=None, **extras):
    doc = {
        "artifact": "mfsde",
        "version": __version__,
        "subcommand": subcommand,
        "seed": int(seed),
        "threads": parallel.get_max_threads(),
        "config": echo,
        "verdict": verdict,
        "checks": checks or [],
        "series_files": [str(s) for s in (series or [])],
    }
    doc.update(extras)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc


def _out_base(cfg, outdir, default):
    base = _get(cfg, "output.path", default=default)
    out = Path(outdir) / base
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommand runners (return process exit codes)
# ---------------------------------------------------------------------------


def run_simulate(cfg, outdir, seed_override):
    coeffs = coefficients_from_config(cfg)
    init = init_from_config(cfg)
    sim = simconfig_from_config(cfg, seed_override)
    echo = resolved_config(cfg, "simulate", sim.seed)
    base = _out_base(cfg, outdir, "simulate")
    try:
        ens = simulate(coeffs, init, sim)
    except SimulationBlowup as exc:
        write_report(
            base.with_suffix(".json"), "simulate", sim.seed, echo, "fail",
            checks=[{"name": "finite-states", "passed": False,
                     "particle": exc.particle, "step": exc.step}],
        )
        print(f"simulate: {exc}", file=sys.stderr)
        return 1

    k0 = ens.n_delay
    times = ens.times[k0:]
    means = ens.mean_series()[k0:]
    vars_ = ens.variance_series()[k0:] if ens.N > 1 else np.zeros_like(means)
    v_mom = np.array([np.mean(1.0 + np.sum(ens.states(k) ** 2, axis=-1))
                      for k in range(k0, ens.n_times)])
    columns = [("t", times)]
    for j in range(ens.d):
        columns.append((f"mean_{j}", means[:, j]))
    for j in range(ens.d):
        columns.append((f"var_{j}", vars_[:, j]))
    columns.append(("v_moment", v_mom))
    summary_csv = base.with_name(base.name + "_summary.csv")
    write_csv(summary_csv, echo, columns)

    series = [summary_csv]
    thin = _get(cfg, "output.trajectory", int, default=0)
    if thin:
        rows_t, rows_id, rows_x = [], [], []
        for k in range(k0, ens.n_times, thin):
            st = ens.states(k)
            rows_t.append(np.full(ens.N, ens.times[k]))
            rows_id.append(np.arange(ens.N))
            rows_x.append(st)
        traj_csv = base.with_name(base.name + "_trajectory.csv")
        cols = [("t", np.concatenate(rows_t)), ("particle", np.concatenate(rows_id))]
        X = np.vstack(rows_x)
        for j in range(ens.d):
            cols.append((f"x{j}", X[:, j]))
        write_csv(traj_csv, echo, cols)
        series.append(traj_csv)

    integ = integrability_report(ens)
    write_report(
        base.with_suffix(".json"), "simulate", sim.seed, echo, "pass",
        checks=[{"name": "finite-states", "passed": True},
                {"name": "integrability", "passed": bool(integ.passed), **integ.to_dict()}],
        series=series,
        summary={
            "t": times.tolist(),
            "mean": means[:, 0].tolist() if ens.d == 1 else means.tolist(),
            "variance": vars_[:, 0].tolist() if ens.d == 1 else vars_.tolist(),
            "v_moment": v_mom.tolist(),
        },
    )
    return 0


_ORACLE_H = {
    "sign": (np.sign, (0.0,)),
    "identity": (lambda x: x, ()),
    "constant": (lambda x: np.ones_like(x), ()),
}


def run_oracle(cfg, outdir, seed_override):
    h_name = _get(cfg, "oracle.h", default="sign")
    if h_name not in _ORACLE_H:
        raise ConfigError(f"unknown oracle.h {h_name!r}; choose from {sorted(_ORACLE_H)}")
    h, breakpoints = _ORACLE_H[h_name]
    init = init_from_config(cfg)
    sim = simconfig_from_config(cfg, seed_override)
    growth_T = _get(cfg, "oracle.growth_T", float, default=4.0 * sim.T)
    growth_C = _get(cfg, "oracle.growth_C", float, default=1.0)
    if init.kind == "point":
        mu0 = ([1.0], [float(init.params["value"][0])], [0.0])
    elif init.kind == "gaussian":
        mu0 = ([1.0], [init.params["mean"]], [init.params["std"]])
    elif init.kind == "mixture":
        mu0 = (init.params["weights"], init.params["means"], init.params["stds"])
    else:
        raise ConfigError("oracle needs a point, gaussian or mixture initial law")
    problem = ScalarLawProblem.make(h, (growth_C, growth_T), mu0, sim.T, breakpoints)

    def mean_b(t, X, members, w):
        ww = np.full(len(members), 1.0 / len(members)) if w is None else np.asarray(w) / np.sum(w)
        avg = float(np.sum(ww * h(members[:, 0])))
        return np.full_like(X, avg)

    spec = PairwiseMeanFieldSpec(
        b=lambda t, X, Y: np.broadcast_to(h(Y), np.broadcast_shapes(X.shape, Y.shape)),
        sigma=lambda t, X, Y: np.array([[1.0]]),
        mean_b=mean_b,
        mean_sigma=lambda t, X, m, w: np.array([[1.0]]),
    )
    from .coefficients import CoefficientSet

    coeffs = CoefficientSet(f"mean-drift({h_name})", spec)
    echo = resolved_config(cfg, "oracle", sim.seed)
    base = _out_base(cfg, outdir, "oracle")
    g_path = solve_g(problem, sim.dt)
    try:
        ens = simulate(coeffs, init, sim)
    except SimulationBlowup as exc:
        print(f"oracle: {exc}", file=sys.stderr)
        write_report(base.with_suffix(".json"), "oracle", sim.seed, echo, "fail",
                     checks=[{"name": "finite-states", "passed": False}])
        return 1
    report = oracle_compare(problem, ens, g_path)

    csv_path = base.with_name(base.name + "_series.csv")
    per_t_bound = 3.0 * report.se + report.dt_bias_coeff * report.dt
    write_csv(
        csv_path, echo,
        [("t", report.times), ("g", g_path.values), ("empirical_mean", report.empirical),
         ("se", report.se), ("bound", per_t_bound)],
    )
    verdict = "pass" if report.passed else "fail"
    write_report(
        base.with_suffix(".json"), "oracle", sim.seed, echo, verdict,
        checks=[{"name": "mean-path", "passed": bool(report.passed), **report.to_dict()}],
        series=[csv_path],
    )
    return 0 if report.passed else 1


def run_stability(cfg, outdir, seed_override):
    cs1 = coefficients_from_config(cfg, "coefficients")
    cs2 = coefficients_from_config(cfg, "coefficients2")
    init = init_from_config(cfg)
    sim = simconfig_from_config(cfg, seed_override)
    phi = weight_from_config(cfg)
    t_grid = _floats(_get(cfg, "times", default=str(sim.T)))
    echo = resolved_config(cfg, "stability", sim.seed)
    base = _out_base(cfg, outdir, "stability")
    report = tv_stability_check(cs1, cs2, init, sim, phi, t_grid)
    csv_path = base.with_name(base.name + "_series.csv")
    cols = ["t", "lhs", "rhs", "lhs_allowance", "rhs_se", "slack", "passed"]
    write_csv(csv_path, echo, [(c, np.array([e[c] for e in report.entries])) for c in cols])
    verdict = "pass" if report.passed else "fail"
    write_report(
        base.with_suffix(".json"), "stability", sim.seed, echo, verdict,
        checks=[{"name": f"tv-bound@t={e['t']:g}", "passed": e["passed"],
                 "lhs": e["lhs"], "rhs": e["rhs"], "slack": e["slack"]}
                for e in report.entries],
        series=[csv_path],
        stability=report.to_dict(),
    )
    return 0 if report.passed else 1


def _margin_b_sigma(coeffs):
    """Drift and dispersion of a set as maps of (t, states) for margin scans.

    Pairwise kernels are sampled on the diagonal y = x.
    """
    drift = coeffs.drift
    if isinstance(drift, PairwiseMeanFieldSpec):
        return (
            lambda t, X: np.broadcast_to(np.asarray(drift.b(t, X, X), dtype=float), X.shape),
            lambda t, X: np.asarray(drift.sigma(t, X, X), dtype=float),
        )
    if isinstance(drift, DelayedInteractionDrift):
        raise ConfigError("use check-conditions for delayed interaction drifts")
    from .coefficients import StaticPathWindow

    return (
        lambda t, X: drift.drift(t, StaticPathWindow(X, t), None),
        lambda t, X: drift.sigma(t, StaticPathWindow(X, t)),
    )


def run_check_certificate(cfg, outdir, seed_override):
    coeffs = coefficients_from_config(cfg)
    cert, _ = certificate_from_config(cfg)
    lo = _get(cfg, "grid.lo", float, default=-5.0)
    hi = _get(cfg, "grid.hi", float, default=5.0)
    step = _get(cfg, "grid.step", float, default=0.01)
    t_vals = _floats(_get(cfg, "times", default="0"))
    points = np.arange(lo, hi + step / 2, step)
    b_fn, s_fn = _margin_b_sigma(coeffs)
    margin = generator_margin(cert, b_fn, s_fn, t_vals, points)
    checks = [c.to_dict() | {"name": f"generator:{c.name}"} for c in margin.conditions]

    seed = seed_override if seed_override is not None else _get(cfg, "seed", int, default=0)
    echo = resolved_config(cfg, "check-certificate", seed)
    base = _out_base(cfg, outdir, "check_certificate")
    monitor_ok = True
    extras = {"generator_margin": margin.to_dict()}
    if "N" in cfg:
        init = init_from_config(cfg)
        sim = simconfig_from_config(cfg, seed_override)
        ens = simulate(coeffs, init, sim)
        mon = monitor_expectation(ens, cert)
        monitor_ok = mon.passed
        checks.append({"name": "moment-bound", "passed": bool(mon.passed), **mon.to_dict()})
        extras["monitor"] = mon.to_dict()
        csv_path = base.with_name(base.name + "_series.csv")
        write_csv(csv_path, echo,
                  [("t", mon.times), ("mean_V", mon.mean_V), ("se_V", mon.se_V),
                   ("bound", mon.bound), ("flag", mon.flags.astype(int))])
        extras["series"] = [str(csv_path)]
    passed = margin.passed and monitor_ok
    write_report(base.with_suffix(".json"), "check-certificate", seed, echo,
                 "pass" if passed else "fail", checks=checks, **extras)
    return 0 if passed else 1


def _as_interaction(coeffs):
    """View a coefficient set as (interaction kernel, dispersion).

    Pairwise sets become an interaction with kappa concentrated at 0 and
    kernel btilde(t, x, y); their dispersion is sampled on the diagonal.
    """
    drift = coeffs.drift
    if isinstance(drift, DelayedInteractionDrift):
        return drift, coeffs.dispersion
    if isinstance(drift, PairwiseMeanFieldSpec):
        inter = DelayedInteractionDrift(
            beta=lambda t, s, window, y: drift.btilde_values(t, window.state, y),
            kappa=((0.0, 1.0),),
            tau=0.0,
            d1=drift.d1,
        )
        disp = DispersionSpec(
            fn=lambda t, window: np.asarray(
                drift.sigma(t, window.state, window.state), dtype=float
            ),
            d=drift.d,
            d1=drift.d1,
        )
        return inter, disp
    raise ConfigError("check-conditions needs a delayed or pairwise coefficient set")


def run_check_conditions(cfg, outdir, seed_override):
    coeffs = coefficients_from_config(cfg)
    _, cert = certificate_from_config(cfg)
    inter, disp = _as_interaction(coeffs)
    lo = _get(cfg, "grid.lo", float, default=-5.0)
    hi = _get(cfg, "grid.hi", float, default=5.0)
    step = _get(cfg, "grid.step", float, default=0.05)
    t_vals = _floats(_get(cfg, "times", default="0"))
    points = np.arange(lo, hi + step / 2, step)
    seed = seed_override if seed_override is not None else _get(cfg, "seed", int, default=0)
    init = init_from_config(cfg)
    from .solver import noise_stream

    sample = init.sample_history(_get(cfg, "N", int, default=1000), 1,
                                 noise_stream(seed, 1, 0))[0]

    def run_at(C):
        return check_C_conditions(inter, disp, cert, t_vals, points, points, sample, C=C)

    report = run_at(cert.C)
    extras = {"conditions": report.to_dict()}
    if _get(cfg, "certificate.search", default="off") == "on":
        c_best, rep_best = smallest_passing_C(run_at, c_init=max(cert.C, 1e-6))
        extras["smallest_C"] = c_best
        if c_best is not None:
            report = rep_best
    echo = resolved_config(cfg, "check-conditions", seed)
    base = _out_base(cfg, outdir, "check_conditions")
    write_report(base.with_suffix(".json"), "check-conditions", seed, echo,
                 "pass" if report.passed else "fail",
                 checks=[c.to_dict() for c in report.conditions], **extras)
    return 0 if report.passed else 1


def run_mollify_inspect(cfg, outdir, seed_override):
    coeffs = coefficients_from_config(cfg)
    if not isinstance(coeffs.drift, PairwiseMeanFieldSpec):
        raise ConfigError("mollify-inspect expects a pairwise coefficient set")
    n = _get(cfg, "mollify.n", int, default=2)
    r = _get(cfg, "mollify.r", float, default=10.0)
    power = _get(cfg, "mollify.power", int, default=2)
    n_quad = _get(cfg, "mollify.n_quad", int, default=21)
    lo = _get(cfg, "section.lo", float, default=-2.0)
    hi = _get(cfg, "section.hi", float, default=2.0)
    num = _get(cfg, "section.num", int, default=201)
    spec = MollifierSpec(n=n, r=r, dim=1, n_quad=n_quad)

    drift = coeffs.drift

    def raw(t, z):  # the inspected 1-D section is the diagonal drift kernel
        zz = z[..., 0]
        return np.asarray(drift.b(t, zz, zz), dtype=float)

    smooth = mollify_coefficient(raw, spec, power=power)
    pts = np.linspace(lo, hi, num)
    raw_vals = np.asarray(drift.b(0.0, pts, pts), dtype=float)
    smooth_vals = smooth(0.0, pts)
    seed = seed_override if seed_override is not None else _get(cfg, "seed", int, default=0)
    echo = resolved_config(cfg, "mollify-inspect", seed)
    base = _out_base(cfg, outdir, "mollify_inspect")
    csv_path = base.with_name(base.name + "_section.csv")
    write_csv(csv_path, echo,
              [("point", pts), ("raw", raw_vals), ("mollified", smooth_vals)])
    write_report(base.with_suffix(".json"), "mollify-inspect", seed, echo, "pass",
                 checks=[{"name": "section", "passed": True,
                          "sup_change": float(np.max(np.abs(raw_vals - smooth_vals)))}],
                 series=[csv_path])
    return 0


RUNNERS = {
    "simulate": run_simulate,
    "oracle": run_oracle,
    "stability": run_stability,
    "check-certificate": run_check_certificate,
    "check-conditions": run_check_conditions,
    "mollify-inspect": run_mollify_inspect,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="mfsde", description=__doc__)
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="flat key=value config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=1, help="worker cap (results unaffected)")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
        validate_keys(cfg, args.subcommand)
        parallel.set_max_threads(args.threads)
        return RUNNERS[args.subcommand](cfg, args.out, args.seed)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"mfsde {args.subcommand}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
