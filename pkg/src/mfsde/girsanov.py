"""Stochastic exponentials and the weighted-TV stability check.

The likelihood process along a path is M_t = exp(int b . dW - int |b|^2
ds / 2); the stability check compares the phi-weighted total variation
between the time-t laws of two drifts sharing one dispersion against the
empirical version of the bound

    sum_i E[phi(X_t^i) int_0^t |db|^2 ds]
    + sum_i sqrt(E[phi^2(X_t^i)]) sqrt(E[int_0^t |db|^2 ds]),

with db the difference of the two reduced drifts.  Both sides are Monte
Carlo estimates, so the verdict allows a declared statistical slack plus
a binning slack proportional to the histogram cell width; a violation
beyond the slack signals a bug, tightness is not asserted.  Per-path
quantities vectorize over paths and reductions are plain (pairwise)
numpy sums, identical for any worker cap.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .coefficients import (
    FactoredDriftSpec,
    PairwiseMeanFieldSpec,
    StaticPathWindow,
    _mean_over_members,
)
from .errors import ConfigError, EvaluationError
from .measure import bin_to_grid, empirical_from_particles, weighted_tv
from .solver import _KIND_STEP, child_seed, noise_stream, simulate

__all__ = [
    "LikelihoodPath",
    "stochastic_exponential",
    "difference_functional",
    "martingale_mean_check",
    "tv_stability_rhs",
    "tv_stability_check",
    "bound_btilde",
    "StabilityReport",
]

_LOG_MAX = 700.0  # exp overflows just above this


@dataclass(frozen=True)
class LikelihoodPath:
    """Cumulative log-integrands of the stochastic exponential.

    ``stoch[k]`` holds sum_{j<k} b_j . dW_j and ``quad[k]`` holds
    sum_{j<k} |b_j|^2 dt, so log M_k = stoch[k] - quad[k] / 2 with
    M_0 = 1 exactly.
    """

    times: np.ndarray
    stoch: np.ndarray  # (n_steps + 1, n_paths)
    quad: np.ndarray

    @property
    def log_m(self):
        return self.stoch - 0.5 * self.quad

    @property
    def m(self):
        return np.exp(self.log_m)

    @property
    def n_paths(self):
        return self.stoch.shape[1]

    def difference_to(self, other):
        """The difference functional against another path, per step."""
        return difference_functional(self, other)


def stochastic_exponential(btilde_vals, noise_increments, dt):
    """Likelihood path from per-step drift values and noise increments.

    ``btilde_vals`` and ``noise_increments`` broadcast to a common shape
    (n_steps, n_paths, d1); increments are actual dW (already scaled).
    Overflow of M is an error reporting the first offending step.
    """
    b = np.asarray(btilde_vals, dtype=float)
    dw = np.asarray(noise_increments, dtype=float)
    if b.ndim == 2:
        b = b[:, None, :]
    if dw.ndim == 2:
        dw = dw[:, None, :]
    b, dw = np.broadcast_arrays(b, dw)
    n_steps, n_paths, _ = b.shape
    stoch = np.zeros((n_steps + 1, n_paths))
    quad = np.zeros((n_steps + 1, n_paths))
    np.cumsum(np.sum(b * dw, axis=-1), axis=0, out=stoch[1:])
    np.cumsum(np.sum(b * b, axis=-1) * dt, axis=0, out=quad[1:])
    log_m = stoch - 0.5 * quad
    if np.any(log_m > _LOG_MAX):
        k = int(np.argmax(np.any(log_m > _LOG_MAX, axis=1)))
        raise EvaluationError(f"stochastic exponential overflows at step {k}")
    times = dt * np.arange(n_steps + 1)
    return LikelihoodPath(times, stoch, quad)


def difference_functional(lp1, lp2):
    """|int (b1 - b2).dW - (int |b1|^2 - |b2|^2 ds)/2| per step and path."""
    return np.abs((lp1.stoch - lp2.stoch) - 0.5 * (lp1.quad - lp2.quad))


@dataclass
class MartingaleReport:
    times: np.ndarray
    mean_m: np.ndarray
    se_m: np.ndarray
    drift_value: float
    seed: int

    @property
    def final_mean(self):
        return float(self.mean_m[-1])

    @property
    def final_se(self):
        return float(self.se_m[-1])

    @property
    def passed(self):
        return abs(self.final_mean - 1.0) <= 3.0 * self.final_se

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "final_mean": self.final_mean,
            "final_se": self.final_se,
            "drift_value": self.drift_value,
            "seed": self.seed,
        }


def martingale_mean_check(c, n_paths, dt, T, seed, record_every=1):
    """Sample-mean trajectory of M_t for the constant drift b = c.

    Streams one noise slab per step from the counter-based generator, so
    memory stays O(n_paths) and results are independent of any worker
    cap.  Passes when the final mean lies within three standard errors
    of one.
    """
    n_steps = int(round(T / dt))
    c = float(c)
    stoch = np.zeros(n_paths)
    rec_idx = list(range(0, n_steps + 1, record_every))
    if rec_idx[-1] != n_steps:
        rec_idx.append(n_steps)
    times, means, ses = [], [], []

    def record(k):
        log_m = c * stoch - 0.5 * c * c * (k * dt)
        m = np.exp(log_m)
        times.append(k * dt)
        means.append(m.mean())
        ses.append(m.std(ddof=1) / np.sqrt(n_paths))

    record(0)
    sqrt_dt = np.sqrt(dt)
    nxt = 1
    for k in range(n_steps):
        xi = noise_stream(seed, _KIND_STEP, k).standard_normal(n_paths)
        stoch += sqrt_dt * xi
        if nxt < len(rec_idx) and k + 1 == rec_idx[nxt]:
            record(k + 1)
            nxt += 1
    return MartingaleReport(np.array(times), np.array(means), np.array(ses), c, seed)


def bound_btilde(cs, flow):
    """Reduced drift of a coefficient set as a map of (t, states).

    Law-dependent drifts are frozen at the supplied flow (their own
    ensemble's empirical law), matching the role of the two fixed drift
    functionals in the stability bound.
    """
    drift = cs.drift
    if isinstance(drift, PairwiseMeanFieldSpec):
        if drift.btilde_state is not None:
            return lambda t, S: np.broadcast_to(
                np.asarray(drift.btilde_state(t, S), dtype=float), (len(S), drift.d1)
            )

        def bt(t, S):
            pos, w = flow.atoms_at(t)
            return _mean_over_members(drift.btilde_values, t, S, pos, w, (drift.d1,))

        return bt
    if isinstance(drift, FactoredDriftSpec):
        return lambda t, S: np.broadcast_to(
            np.asarray(drift.btilde(t, StaticPathWindow(S, t), flow), dtype=float),
            (len(S), drift.d1),
        )
    raise ConfigError(f"stability check does not support drift form {type(drift).__name__}")


def _integrated_drift_gap(ensemble, btilde1, btilde2, t_checkpoints):
    """int_0^t |b1 - b2|^2 ds along stored paths (left sums), per particle."""
    cfg = ensemble.cfg
    acc = np.zeros(ensemble.N)
    out = {}
    remaining = sorted(t_checkpoints)
    j = 0
    for k in range(cfg.n_steps):
        idx = ensemble.n_delay + k
        t = float(ensemble.times[idx])
        while j < len(remaining) and remaining[j] <= t + 1e-12:
            out[remaining[j]] = acc.copy()
            j += 1
        S = ensemble.states(idx)
        diff = btilde1(t, S) - btilde2(t, S)
        acc += np.sum(diff * diff, axis=-1) * cfg.dt
    while j < len(remaining):
        out[remaining[j]] = acc.copy()
        j += 1
    return out


def tv_stability_rhs(ens1, ens2, btilde1, btilde2, phi, t):
    """Empirical right-hand side of the stability bound at time t.

    Returns (value, standard_error, breakdown).  Identical drifts give
    exactly zero.
    """
    value = 0.0
    se = 0.0
    breakdown = {}
    for tag, ens in (("1", ens1), ("2", ens2)):
        gap = _integrated_drift_gap(ens, btilde1, btilde2, [t])[t]
        X = ens.state_at(t)
        ph = np.asarray(phi(X[:, 0] if ens.d == 1 else X), dtype=float)
        n = ens.N
        prod = ph * gap
        term1 = float(prod.mean())
        se1 = float(prod.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        a = float(np.mean(ph**2))
        b = float(np.mean(gap))
        term2 = float(np.sqrt(a) * np.sqrt(b))
        se_a = float(np.std(ph**2, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        se_b = float(np.std(gap, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        se2 = 0.5 * term2 * (se_a / a + se_b / b) if term2 > 0 else 0.0
        value += term1 + term2
        se += se1 + se2
        breakdown[f"term1_{tag}"] = term1
        breakdown[f"term2_{tag}"] = term2
    return value, se, breakdown


def _binned_laws(ens1, ens2, t, origin, cell_width):
    g1 = bin_to_grid(empirical_from_particles(ens1.state_at(t)), origin, cell_width)
    g2 = bin_to_grid(empirical_from_particles(ens2.state_at(t)), origin, cell_width)
    return g1, g2


def _lhs_noise_allowance(g1, g2, phi, n):
    """l1 aggregate of per-cell standard deviations of the binned difference."""
    cells = {}
    for g, slot in ((g1, 0), (g2, 1)):
        for k, mass in zip(map(tuple, g.indices), g.masses):
            cells.setdefault(k, [0.0, 0.0])[slot] = mass
    total = 0.0
    for k, (p1, p2) in cells.items():
        center = g1.origin + (np.array(k) + 0.5) * g1.cell_width
        w = float(phi(center if len(center) > 1 else center[0]))
        var = p1 * (1 - p1) + p2 * (1 - p2)
        total += w * np.sqrt(max(var, 0.0) / n)
    return total


@dataclass
class StabilityReport:
    """Per-time comparison of measured LHS against the empirical bound."""

    entries: list
    cell_width: float
    bin_slack_coeff: float
    seeds: tuple
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(e["passed"] for e in self.entries)

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "cell_width": self.cell_width,
            "bin_slack_coeff": self.bin_slack_coeff,
            "seeds": list(self.seeds),
            "entries": self.entries,
            **self.extras,
        }


def _probe_sigma(cs, t, states):
    drift = cs.drift
    if isinstance(drift, PairwiseMeanFieldSpec):
        val = np.asarray(drift.sigma(t, states, states), dtype=float)
        return np.broadcast_to(val, (len(states), drift.d, drift.d1))
    window = StaticPathWindow(states, t)
    val = cs.dispersion(t, window)
    return np.broadcast_to(val, (len(states), cs.d, cs.d1))


def tv_stability_check(
    cs1,
    cs2,
    init,
    cfg,
    phi,
    t_grid,
    bin_origin=0.0,
    bin_slack_coeff=1.0,
    ens1=None,
    ens2=None,
):
    """Simulate both coefficient sets and test LHS <= RHS + slack per time.

    The two runs share the initial law and the dispersion (mismatched
    dispersions are rejected) but use independent derived seeds.  The
    slack sums the LHS sampling allowance, three standard errors of the
    RHS and a binning slack proportional to the cell width; all three
    are reported.
    """
    if cfg.estimator[0] != "grid":
        raise ConfigError("stability check needs a grid law estimator (cell width)")
    cell = float(cfg.estimator[1])
    probe = np.linspace(-1.0, 1.0, 5)[:, None] * np.ones((1, cs1.d))
    for t_probe in (0.0, cfg.T / 2):
        s1 = _probe_sigma(cs1, t_probe, probe)
        s2 = _probe_sigma(cs2, t_probe, probe)
        if not np.allclose(s1, s2):
            raise ConfigError("stability check requires identical dispersion specifications")

    if ens1 is None:
        ens1 = simulate(cs1, init, replace(cfg, seed=child_seed(cfg.seed, 1)))
    if ens2 is None:
        ens2 = simulate(cs2, init, replace(cfg, seed=child_seed(cfg.seed, 2)))

    bt1 = bound_btilde(cs1, ens1.flow)
    bt2 = bound_btilde(cs2, ens2.flow)

    entries = []
    for t in t_grid:
        g1, g2 = _binned_laws(ens1, ens2, t, bin_origin, cell)
        lhs = weighted_tv(g1 - g2, phi)
        allow = _lhs_noise_allowance(g1, g2, phi, cfg.N)
        rhs, rhs_se, breakdown = tv_stability_rhs(ens1, ens2, bt1, bt2, phi, t)
        slack = allow + 3.0 * rhs_se + bin_slack_coeff * cell
        entries.append(
            {
                "t": float(t),
                "lhs": float(lhs),
                "rhs": float(rhs),
                "lhs_allowance": float(allow),
                "rhs_se": float(rhs_se),
                "slack": float(slack),
                "passed": bool(lhs <= rhs + slack),
                **{k: float(v) for k, v in breakdown.items()},
            }
        )
    return StabilityReport(
        entries,
        cell,
        bin_slack_coeff,
        (ens1.cfg.seed, ens2.cfg.seed),
        extras={"N": cfg.N, "dt": cfg.dt},
    )
