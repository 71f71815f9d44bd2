"""Interacting-particle Euler-Maruyama integration with delay segments.

The law dependence of the drift is realized by the simulated ensemble's
own empirical measure: at each step every particle sees the measure formed
by all particle positions, frozen at the step start (synchronous update).
Noise is drawn from counter-based streams keyed by (seed, step); particle
i reads row i of the step slab, making every increment a pure function of
(seed, particle, step) that is independent of the worker count.

History segments on [-tau, 0] live on the same uniform grid as [0, T];
delayed law lookups use the nearest grid slice at or below the requested
time, so delay atoms that are multiples of dt are hit exactly (config
validation warns otherwise).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .coefficients import (
    DelayedInteractionDrift,
    FactoredDriftSpec,
    PairwiseMeanFieldSpec,
    eval_drift_interaction,
    eval_pairwise_mean_field,
)
from .errors import ConfigError, EvaluationError, SimulationBlowup
from .measure import MeasureFlow, empirical_from_particles

__all__ = [
    "InitialLaw",
    "SimConfig",
    "ParticleEnsemble",
    "PathWindow",
    "simulate",
    "step",
    "integrability_report",
    "noise_stream",
    "child_seed",
]

_MASK64 = (1 << 64) - 1

# stream kinds encoded in the high byte of the second Philox key word
_KIND_INIT = 1
_KIND_STEP = 2
_KIND_AUX = 3


def noise_stream(seed, kind, index):
    """Counter-based generator keyed by (seed, kind, index)."""
    tag = (int(kind) << 56) | int(index)
    key = np.array([int(seed) & _MASK64, tag & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def child_seed(seed, index):
    """Derived seed for an auxiliary run (e.g. the second ensemble of a pair)."""
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


class InitialLaw:
    """Sampler for initial paths on the delay window [-tau, 0].

    Catalog: a constant path at a fixed point, a constant path at a
    Gaussian or Gaussian-mixture draw, or an explicit table of paths.
    """

    def __init__(self, kind, params):
        self.kind = kind
        self.params = params

    @classmethod
    def point(cls, value):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls("point", {"value": value})

    @classmethod
    def gaussian(cls, mean=0.0, std=1.0):
        return cls("gaussian", {"mean": float(mean), "std": float(std)})

    @classmethod
    def mixture(cls, weights, means, stds):
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ConfigError("mixture weights must be positive and sum to 1")
        return cls(
            "mixture",
            {
                "weights": w,
                "means": np.asarray(means, dtype=float),
                "stds": np.asarray(stds, dtype=float),
            },
        )

    @classmethod
    def table(cls, paths):
        paths = np.asarray(paths, dtype=float)
        return cls("table", {"paths": paths})

    @property
    def d(self):
        if self.kind == "point":
            return len(self.params["value"])
        if self.kind == "table":
            p = self.params["paths"]
            return p.shape[-1] if p.ndim >= 2 else 1
        return 1

    def mean(self):
        if self.kind == "point":
            return self.params["value"].copy()
        if self.kind == "gaussian":
            return np.array([self.params["mean"]])
        if self.kind == "mixture":
            return np.array([float(np.sum(self.params["weights"] * self.params["means"]))])
        raise ValueError(f"no closed-form mean for initial law kind {self.kind!r}")

    def describe(self):
        if self.kind == "point":
            return f"point({','.join(f'{v:g}' for v in self.params['value'])})"
        if self.kind == "gaussian":
            return f"gaussian({self.params['mean']:g},{self.params['std']:g})"
        if self.kind == "mixture":
            return "mixture(" + ";".join(
                f"{w:g}:{m:g}:{s:g}"
                for w, m, s in zip(self.params["weights"], self.params["means"], self.params["stds"])
            ) + ")"
        return "table"

    def sample_history(self, n, n_hist, rng):
        """Draw n paths on the delay grid; returns (n_hist, n, d)."""
        if self.kind == "point":
            v = self.params["value"]
            out = np.tile(v, (n_hist, n, 1))
        elif self.kind == "gaussian":
            vals = self.params["mean"] + self.params["std"] * rng.standard_normal(n)
            out = np.tile(vals[None, :, None], (n_hist, 1, 1))
        elif self.kind == "mixture":
            comp = rng.choice(len(self.params["weights"]), size=n, p=self.params["weights"])
            vals = self.params["means"][comp] + self.params["stds"][comp] * rng.standard_normal(n)
            out = np.tile(vals[None, :, None], (n_hist, 1, 1))
        elif self.kind == "table":
            paths = self.params["paths"]
            if paths.ndim == 2:  # constant paths given as (n, d) values
                if len(paths) != n:
                    raise ConfigError(f"table holds {len(paths)} paths but N={n}")
                out = np.tile(paths[None, :, :], (n_hist, 1, 1))
            else:
                if paths.shape[0] != n or paths.shape[1] != n_hist:
                    raise ConfigError(
                        f"table shape {paths.shape} incompatible with N={n}, history length {n_hist}"
                    )
                out = np.transpose(paths, (1, 0, 2)).copy()
        else:
            raise ConfigError(f"unknown initial law kind {self.kind!r}")
        if not np.all(np.isfinite(out)):
            raise EvaluationError("initial sampler produced non-finite values")
        return out


@dataclass(frozen=True)
class SimConfig:
    """Particle count, grid and seed for one simulation run."""

    N: int
    dt: float
    T: float
    tau: float = 0.0
    seed: int = 0
    scheme: str = "euler-maruyama"
    estimator: tuple = ("atoms",)  # or ("grid", cell_width)

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError("N must be >= 1")
        if self.dt <= 0 or self.T <= 0:
            raise ConfigError("dt and T must be positive")
        if self.scheme != "euler-maruyama":
            raise ConfigError(f"unsupported scheme {self.scheme!r}")
        if abs(self.T / self.dt - round(self.T / self.dt)) > 1e-9:
            raise ConfigError("T must be an integer multiple of dt")
        if self.tau < 0:
            raise ConfigError("tau must be >= 0")
        if abs(self.tau / self.dt - round(self.tau / self.dt)) > 1e-9:
            warnings.warn("tau is not a multiple of dt; delayed lookups will snap to the grid")
        if self.estimator[0] not in ("atoms", "grid"):
            raise ConfigError(f"unknown law estimator {self.estimator[0]!r}")

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    @property
    def n_delay(self):
        return int(round(self.tau / self.dt))


class PathWindow:
    """Read-only view of the ensemble history up to the current step."""

    def __init__(self, data, times, k_now):
        self._data = data
        self._times = times
        self._k_now = k_now

    @property
    def t(self):
        return float(self._times[self._k_now])

    @property
    def state(self):
        return self._data[self._k_now]

    def at(self, s):
        """Positions at the nearest stored time at or below s."""
        j = int(np.searchsorted(self._times[: self._k_now + 1], s + 1e-12, side="right")) - 1
        if j < 0:
            raise EvaluationError(
                f"path window has no slice at or below t={s} (history starts at {self._times[0]})"
            )
        return self._data[j]


class ParticleEnsemble:
    """N simulated paths on [-tau, T] with seeded noise provenance."""

    def __init__(self, data, times, n_delay, cfg, coeffs, init_descriptor):
        self._data = data  # (n_times, N, d), immutable after simulation
        self.times = times
        self.n_delay = n_delay
        self.cfg = cfg
        self.coeffs = coeffs
        self.init_descriptor = init_descriptor
        self._data.flags.writeable = False
        est = ("atoms",) if cfg.estimator[0] == "atoms" else ("grid", 0.0, cfg.estimator[1])
        self.flow = MeasureFlow.from_trajectory(times, data, cfg.tau, cfg.T, estimator=est)

    @property
    def positions(self):
        """(N, n_times, d) view of the stored trajectories."""
        return np.transpose(self._data, (1, 0, 2))

    @property
    def noise_provenance(self):
        """Stream keying: particle i reads row i of the (seed, step) slab."""
        return {
            "generator": "philox",
            "seed": self.cfg.seed,
            "init_stream": (_KIND_INIT, 0),
            "step_streams": (_KIND_STEP, 0, self.cfg.n_steps),
        }

    @property
    def N(self):
        return self._data.shape[1]

    @property
    def d(self):
        return self._data.shape[2]

    @property
    def n_times(self):
        return self._data.shape[0]

    def states(self, k):
        """(N, d) positions at time index k (0 = start of history)."""
        return self._data[k]

    def state_at(self, t):
        return self._data[self.flow.index_at(t)]

    def window(self, k):
        return PathWindow(self._data, self.times, k)

    def initial_segment(self):
        return self._data[: self.n_delay + 1]

    def measure_at(self, t):
        return self.flow.measure_at(t)

    def mean_series(self):
        return self._data.mean(axis=1)

    def variance_series(self, ddof=1):
        return self._data.var(axis=1, ddof=ddof)

    def __repr__(self):
        return (
            f"ParticleEnsemble(N={self.N}, d={self.d}, steps={self.n_times - 1}, "
            f"seed={self.cfg.seed})"
        )


def _eval_coeffs(coeffs, t, window, flow):
    """Effective drift (N, d) and dispersion ((d, d1) or (N, d, d1)) at time t."""
    drift_spec = coeffs.drift
    if isinstance(drift_spec, PairwiseMeanFieldSpec):
        return eval_pairwise_mean_field(drift_spec, t, window.state, window.state)
    if isinstance(drift_spec, DelayedInteractionDrift):
        drift = eval_drift_interaction(drift_spec, coeffs.dispersion, t, window, flow)
        return drift, coeffs.dispersion(t, window)
    if isinstance(drift_spec, FactoredDriftSpec):
        return drift_spec.drift(t, window, flow), drift_spec.sigma(t, window)
    raise TypeError(f"unsupported drift specification {type(drift_spec).__name__}")


def step(coeffs, window, flow, t, dt, noise_slab):
    """One synchronous Euler-Maruyama step.

    Deterministic in its inputs: identical (state, slab) give bitwise
    identical outputs.  The slab holds one standard-normal row per
    particle, shape (N, d1).
    """
    noise_slab = np.asarray(noise_slab, dtype=float)
    if noise_slab.shape[0] != len(window.state):
        raise ValueError("noise slab must have one row per particle")
    drift, disp = _eval_coeffs(coeffs, t, window, flow)
    incr = np.sqrt(dt) * noise_slab
    if disp.ndim == 2:
        shake = incr @ disp.T
    else:
        shake = np.einsum("nij,nj->ni", disp, incr)
    return window.state + drift * dt + shake


def simulate(coeffs, init, cfg, noise_fn=None):
    """Integrate the interacting particle system on [-tau, T].

    ``noise_fn(k, n, d1) -> (n, d1)`` overrides the built-in seeded
    streams (used by tests); by default step k draws from the
    counter-based stream keyed by (seed, k).  Raises SimulationBlowup at
    the first non-finite particle state.
    """
    if isinstance(coeffs.drift, DelayedInteractionDrift):
        if coeffs.drift.tau > cfg.tau + 1e-12:
            raise ConfigError(
                f"delay drift needs tau >= {coeffs.drift.tau}, config has tau={cfg.tau}"
            )
    d, d1 = coeffs.d, coeffs.d1
    if init.d != d:
        raise ConfigError(f"initial law dimension {init.d} != coefficient dimension {d}")
    n_delay, n_steps = cfg.n_delay, cfg.n_steps
    n_times = n_delay + n_steps + 1
    times = (np.arange(n_times) - n_delay) * cfg.dt

    data = np.empty((n_times, cfg.N, d))
    rng = noise_stream(cfg.seed, _KIND_INIT, 0)
    data[: n_delay + 1] = init.sample_history(cfg.N, n_delay + 1, rng)

    est = ("atoms",) if cfg.estimator[0] == "atoms" else ("grid", 0.0, cfg.estimator[1])
    flow = MeasureFlow.from_trajectory(times, data, cfg.tau, cfg.T, estimator=est)

    sqrt_dt = np.sqrt(cfg.dt)
    for k in range(n_steps):
        idx = n_delay + k
        t = float(times[idx])
        window = PathWindow(data, times, idx)
        if noise_fn is not None:
            slab = np.asarray(noise_fn(k, cfg.N, d1), dtype=float)
        else:
            slab = noise_stream(cfg.seed, _KIND_STEP, k).standard_normal((cfg.N, d1))
        with np.errstate(over="ignore", invalid="ignore"):
            drift, disp = _eval_coeffs(coeffs, t, window, flow)
            incr = sqrt_dt * slab
            if disp.ndim == 2:
                shake = incr @ disp.T
            else:
                shake = np.einsum("nij,nj->ni", disp, incr)
            new = window.state + drift * cfg.dt + shake
        if not np.all(np.isfinite(new)):
            bad = np.argwhere(~np.isfinite(new))[0]
            raise SimulationBlowup(particle=bad[0], step=k + 1, value=new[tuple(bad)])
        data[idx + 1] = new

    return ParticleEnsemble(data, times, n_delay, cfg, coeffs, init.describe())


@dataclass
class IntegrabilityReport:
    """Discrete path integrals of |b| and |sigma|^2 per particle."""

    drift_integral: np.ndarray
    dispersion_integral: np.ndarray
    threshold: float
    flagged: np.ndarray = field(default=None)

    def __post_init__(self):
        finite = np.isfinite(self.drift_integral) & np.isfinite(self.dispersion_integral)
        over = (self.drift_integral > self.threshold) | (
            self.dispersion_integral > self.threshold
        )
        self.flagged = np.flatnonzero(~finite | over)

    @property
    def passed(self):
        return len(self.flagged) == 0

    def to_dict(self):
        return {
            "max_drift_integral": float(np.max(self.drift_integral)),
            "max_dispersion_integral": float(np.max(self.dispersion_integral)),
            "threshold": self.threshold,
            "n_flagged": int(len(self.flagged)),
            "passed": bool(self.passed),
        }


def integrability_report(ensemble, coeffs=None, threshold=np.inf):
    """Approximate per-particle integrals of |b| ds and |sigma|^2 ds on [0, T].

    Re-evaluates the coefficients along the stored trajectory with
    left-endpoint sums; flags particles whose integrals are non-finite or
    exceed the threshold.
    """
    coeffs = coeffs if coeffs is not None else ensemble.coeffs
    cfg = ensemble.cfg
    drift_acc = np.zeros(ensemble.N)
    disp_acc = np.zeros(ensemble.N)
    for k in range(cfg.n_steps):
        idx = ensemble.n_delay + k
        window = ensemble.window(idx)
        t = float(ensemble.times[idx])
        drift, disp = _eval_coeffs(coeffs, t, window, ensemble.flow)
        drift_acc += np.linalg.norm(drift, axis=-1) * cfg.dt
        if disp.ndim == 2:
            disp_acc += np.sum(disp * disp) * cfg.dt
        else:
            disp_acc += np.sum(disp * disp, axis=(-2, -1)) * cfg.dt
    return IntegrabilityReport(drift_acc, disp_acc, float(threshold))


def empirical_flow_consistent(ensemble, k):
    """True when the stored flow slice equals the empirical measure at index k."""
    mu = empirical_from_particles(ensemble.states(k))
    nu = ensemble.flow.measure_at(ensemble.times[k])
    if hasattr(nu, "positions"):
        return np.array_equal(mu.positions, nu.positions) and np.allclose(mu.weights, nu.weights)
    return True
