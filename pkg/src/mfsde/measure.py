"""Signed measures with a weighted total-variation norm.

Measures live on R^d and come in two finitely-supported representations:
weighted atoms (`DiscreteSignedMeasure`) and histogram cells
(`GridSignedMeasure`).  Both carry the phi-weighted total-variation norm

    ||mu||_phi = integral of phi d|mu|

for a strictly positive weight function phi, evaluated at atom positions
respectively cell centers.  Laws of simulated particle systems are
represented empirically (atoms) and distances between two laws are
estimated after binning both onto a common grid; cells are half-open
``[origin + k*w, origin + (k+1)*w)`` so every atom lands in exactly one
cell.

All measure values are immutable after construction and safe to share
across threads.
"""

import numpy as np

from .errors import EvaluationError

__all__ = [
    "WeightFunction",
    "DiscreteSignedMeasure",
    "GridSignedMeasure",
    "MeasureFlow",
    "weighted_tv",
    "hahn_split",
    "empirical_from_particles",
    "bin_to_grid",
    "grid_difference",
    "measure_to_csv",
    "measure_from_csv",
]


class WeightFunction:
    """Strictly positive weight phi on R^d.

    Built-in kinds:
      * polynomial(alpha):    phi(y) = 1 + |y|^alpha
      * exponential(alpha,p): phi(y) = exp(alpha * |y|^p),  p in [0, 2]
      * custom(fn):           any continuous, strictly positive map

    Instances are callables mapping an (..., d) array of points (or a
    plain (...,) array in dimension one) to a (...,) array of weights.
    """

    def __init__(self, kind, fn, params=None):
        self.kind = kind
        self._fn = fn
        self.params = dict(params or {})

    @classmethod
    def polynomial(cls, alpha):
        alpha = float(alpha)
        if alpha < 0:
            raise ValueError("polynomial weight needs alpha >= 0")
        return cls("polynomial", lambda r: 1.0 + r**alpha, {"alpha": alpha})

    @classmethod
    def exponential(cls, alpha, p):
        alpha, p = float(alpha), float(p)
        if alpha < 0 or not (0.0 <= p <= 2.0):
            raise ValueError("exponential weight needs alpha >= 0 and p in [0,2]")
        return cls("exponential", lambda r: np.exp(alpha * r**p), {"alpha": alpha, "p": p})

    @classmethod
    def custom(cls, fn):
        return cls("custom", fn)

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        if self.kind == "custom":
            vals = np.asarray(self._fn(points), dtype=float)
        else:
            r = np.abs(points) if points.ndim <= 1 else np.linalg.norm(points, axis=-1)
            vals = self._fn(r)
        bad = ~np.isfinite(vals) | (vals <= 0.0)
        if np.any(bad):
            where = np.argwhere(np.atleast_1d(bad))[0]
            pt = np.atleast_1d(points)[tuple(where[: max(points.ndim - 1, 1)])]
            raise EvaluationError(f"weight evaluated to a non-positive or non-finite value at {pt}")
        return vals


def _as_points(positions):
    """Coerce positions to a (n, d) float array."""
    pos = np.asarray(positions, dtype=float)
    if pos.ndim == 0:
        pos = pos.reshape(1, 1)
    elif pos.ndim == 1:
        pos = pos[:, None]
    elif pos.ndim != 2:
        raise ValueError(f"positions must be (n,) or (n, d), got shape {pos.shape}")
    return pos


class DiscreteSignedMeasure:
    """Finitely many weighted atoms; weights may carry either sign."""

    def __init__(self, positions, weights):
        pos = _as_points(positions)
        w = np.asarray(weights, dtype=float).reshape(-1)
        if len(w) != len(pos):
            raise ValueError("positions and weights must have equal length")
        if not np.all(np.isfinite(pos)):
            raise EvaluationError("non-finite atom position")
        if not np.all(np.isfinite(w)):
            raise EvaluationError("non-finite atom weight")
        self.positions = pos
        self.weights = w
        self.positions.flags.writeable = False
        self.weights.flags.writeable = False

    @property
    def d(self):
        return self.positions.shape[1]

    @property
    def n_atoms(self):
        return len(self.weights)

    def total_mass(self):
        return float(self.weights.sum())

    def merged(self):
        """Combine atoms sharing the exact same position."""
        uniq, inverse = np.unique(self.positions, axis=0, return_inverse=True)
        w = np.zeros(len(uniq))
        np.add.at(w, inverse.reshape(-1), self.weights)
        return DiscreteSignedMeasure(uniq, w)

    def __add__(self, other):
        if not isinstance(other, DiscreteSignedMeasure):
            return NotImplemented
        return DiscreteSignedMeasure(
            np.vstack([self.positions, other.positions]),
            np.concatenate([self.weights, other.weights]),
        ).merged()

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return DiscreteSignedMeasure(self.positions, -self.weights)

    def __mul__(self, c):
        return DiscreteSignedMeasure(self.positions, float(c) * self.weights)

    __rmul__ = __mul__

    def __repr__(self):
        return f"DiscreteSignedMeasure({self.n_atoms} atoms, d={self.d})"


class GridSignedMeasure:
    """Signed masses on the cells of a rectangular grid.

    Cells are indexed by integer multi-indices k; cell k occupies the
    half-open box ``[origin + k*w, origin + (k+1)*w)`` with per-axis
    widths w.  Only finitely many cells carry mass.
    """

    def __init__(self, origin, cell_width, indices, masses):
        origin = np.atleast_1d(np.asarray(origin, dtype=float))
        width = np.atleast_1d(np.asarray(cell_width, dtype=float))
        if width.shape != origin.shape:
            width = np.broadcast_to(width, origin.shape).copy()
        if np.any(width <= 0):
            raise ValueError("cell widths must be positive")
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim == 1:
            idx = idx[:, None]
        m = np.asarray(masses, dtype=float).reshape(-1)
        if len(m) != len(idx):
            raise ValueError("indices and masses must have equal length")
        if not np.all(np.isfinite(m)):
            raise EvaluationError("non-finite cell mass")
        if idx.shape[1] != len(origin):
            raise ValueError("index dimension does not match origin")
        # canonical form: lexicographically sorted, duplicates merged, zeros kept out
        if len(idx):
            uniq, inverse = np.unique(idx, axis=0, return_inverse=True)
            mm = np.zeros(len(uniq))
            np.add.at(mm, inverse.reshape(-1), m)
            keep = mm != 0.0
            idx, m = uniq[keep], mm[keep]
        self.origin = origin
        self.cell_width = width
        self.indices = idx
        self.masses = m
        for a in (self.origin, self.cell_width, self.indices, self.masses):
            a.flags.writeable = False

    @property
    def d(self):
        return len(self.origin)

    @property
    def n_cells(self):
        return len(self.masses)

    def centers(self):
        return self.origin + (self.indices + 0.5) * self.cell_width

    def total_mass(self):
        return float(self.masses.sum())

    def __neg__(self):
        return GridSignedMeasure(self.origin, self.cell_width, self.indices, -self.masses)

    def __mul__(self, c):
        return GridSignedMeasure(self.origin, self.cell_width, self.indices, float(c) * self.masses)

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, GridSignedMeasure):
            return NotImplemented
        _require_same_layout(self, other)
        return GridSignedMeasure(
            self.origin,
            self.cell_width,
            np.vstack([self.indices, other.indices]),
            np.concatenate([self.masses, other.masses]),
        )

    def __sub__(self, other):
        return self + (-other)

    def __repr__(self):
        return f"GridSignedMeasure({self.n_cells} cells, d={self.d})"


def _require_same_layout(a, b):
    if not (np.allclose(a.origin, b.origin) and np.allclose(a.cell_width, b.cell_width)):
        raise ValueError("grid measures have different origin or cell width")


def grid_difference(a, b):
    """a - b for two grid measures on the same layout."""
    return a - b


def weighted_tv(mu, phi):
    """phi-weighted total variation of a discrete or grid measure.

    Sums phi at atom positions (resp. cell centers) against absolute
    weights (resp. masses).  Nonnegative; zero exactly when the measure
    carries no mass.
    """
    if isinstance(mu, DiscreteSignedMeasure):
        if mu.n_atoms == 0:
            return 0.0
        return float(np.sum(phi(mu.positions) * np.abs(mu.weights)))
    if isinstance(mu, GridSignedMeasure):
        if mu.n_cells == 0:
            return 0.0
        return float(np.sum(phi(mu.centers()) * np.abs(mu.masses)))
    raise TypeError(f"unsupported measure type {type(mu).__name__}")


def hahn_split(mu):
    """Split a signed measure into its nonnegative positive and negative parts.

    Returns (pos, neg) with disjoint supports such that pos - neg
    reproduces mu atomwise / cellwise (atoms of weight zero vanish).
    """
    if isinstance(mu, DiscreteSignedMeasure):
        up = mu.weights > 0
        dn = mu.weights < 0
        pos = DiscreteSignedMeasure(mu.positions[up], mu.weights[up])
        neg = DiscreteSignedMeasure(mu.positions[dn], -mu.weights[dn])
        return pos, neg
    if isinstance(mu, GridSignedMeasure):
        up = mu.masses > 0
        dn = mu.masses < 0
        pos = GridSignedMeasure(mu.origin, mu.cell_width, mu.indices[up], mu.masses[up])
        neg = GridSignedMeasure(mu.origin, mu.cell_width, mu.indices[dn], -mu.masses[dn])
        return pos, neg
    raise TypeError(f"unsupported measure type {type(mu).__name__}")


def empirical_from_particles(positions, weights=None):
    """Empirical measure of a particle cloud.

    With the default weights 1/N the result is a probability measure.
    """
    pos = _as_points(positions)
    if len(pos) == 0:
        raise ValueError("empirical measure needs at least one particle")
    if weights is None:
        weights = np.full(len(pos), 1.0 / len(pos))
    return DiscreteSignedMeasure(pos, weights)


def bin_to_grid(mu, origin, cell_width):
    """Assign each atom of a discrete measure to its half-open grid cell.

    Mass preserving: the cell masses sum to the total atom weight.
    """
    if not isinstance(mu, DiscreteSignedMeasure):
        raise TypeError("bin_to_grid expects a DiscreteSignedMeasure")
    origin = np.atleast_1d(np.asarray(origin, dtype=float))
    width = np.broadcast_to(np.atleast_1d(np.asarray(cell_width, dtype=float)), origin.shape)
    if np.any(width <= 0):
        raise ValueError("cell widths must be positive")
    idx = np.floor((mu.positions - origin) / width).astype(np.int64)
    return GridSignedMeasure(origin, width, idx, mu.weights)


class MeasureFlow:
    """Time-indexed family of measures on a grid covering [-tau, T].

    Lookups use the nearest grid slice at or below the requested time.
    Trajectory-backed flows wrap a (n_times, N, d) position array without
    copying, materializing measures on demand.
    """

    def __init__(self, times, tau, horizon, *, measures=None, trajectory=None, estimator=None):
        self.times = np.asarray(times, dtype=float)
        self.tau = float(tau)
        self.horizon = float(horizon)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("flow time grid must be strictly increasing")
        tol = 1e-9 * max(1.0, self.horizon)
        if self.times[0] > -self.tau + tol or self.times[-1] < self.horizon - tol:
            raise ValueError("flow time grid must cover [-tau, T]")
        self._measures = measures
        self._traj = trajectory
        self._estimator = estimator or ("atoms",)
        if (measures is None) == (trajectory is None):
            raise ValueError("provide exactly one of measures or trajectory")
        if measures is not None and len(measures) != len(self.times):
            raise ValueError("one measure per grid time required")
        if trajectory is not None and len(trajectory) != len(self.times):
            raise ValueError("trajectory must have one slice per grid time")

    @classmethod
    def from_measures(cls, times, measures, tau, horizon):
        return cls(times, tau, horizon, measures=list(measures))

    @classmethod
    def from_trajectory(cls, times, trajectory, tau, horizon, estimator=("atoms",)):
        return cls(times, tau, horizon, trajectory=trajectory, estimator=estimator)

    def index_at(self, t):
        """Index of the nearest grid slice at or below t."""
        j = int(np.searchsorted(self.times, t + 1e-12, side="right")) - 1
        if j < 0:
            raise EvaluationError(f"flow has no slice at or below t={t} (grid starts at {self.times[0]})")
        return j

    def atoms_at(self, t):
        """Positions and weights of the slice at or below t (trajectory-backed flows)."""
        j = self.index_at(t)
        if self._traj is not None:
            pos = self._traj[j]
            return pos, None  # uniform weights 1/N
        mu = self._measures[j]
        if not isinstance(mu, DiscreteSignedMeasure):
            raise EvaluationError(f"flow slice at t={t} is not atom-backed")
        return mu.positions, mu.weights

    def measure_at(self, t):
        j = self.index_at(t)
        if self._measures is not None:
            return self._measures[j]
        mu = empirical_from_particles(self._traj[j])
        if self._estimator[0] == "grid":
            _, origin, width = self._estimator
            return bin_to_grid(mu, origin, width)
        return mu


def measure_to_csv(mu, path):
    """Serialize a measure to CSV.

    Discrete: one row per atom, columns x_0..x_{d-1}, weight.
    Grid: one row per cell, columns i_0..i_{d-1}, mass; origin and cell
    widths travel in a comment header.
    """
    with open(path, "w") as fh:
        if isinstance(mu, DiscreteSignedMeasure):
            fh.write(f"# kind=discrete d={mu.d}\n")
            fh.write(",".join(f"x{i}" for i in range(mu.d)) + ",weight\n")
            for p, w in zip(mu.positions, mu.weights):
                fh.write(",".join(f"{v:.17g}" for v in p) + f",{w:.17g}\n")
        elif isinstance(mu, GridSignedMeasure):
            fh.write(f"# kind=grid d={mu.d}\n")
            fh.write("# origin=" + ",".join(f"{v:.17g}" for v in mu.origin) + "\n")
            fh.write("# cell_width=" + ",".join(f"{v:.17g}" for v in mu.cell_width) + "\n")
            fh.write(",".join(f"i{i}" for i in range(mu.d)) + ",mass\n")
            for k, m in zip(mu.indices, mu.masses):
                fh.write(",".join(str(v) for v in k) + f",{m:.17g}\n")
        else:
            raise TypeError(f"unsupported measure type {type(mu).__name__}")


def measure_from_csv(path):
    """Inverse of :func:`measure_to_csv`."""
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if "=" in token:
                        key, val = token.split("=", 1)
                        meta[key] = val
                if line[1:].strip().startswith(("origin=", "cell_width=")):
                    key, val = line[1:].strip().split("=", 1)
                    meta[key] = val
                continue
            if line[0].isalpha() or line.startswith("x") or line.startswith("i"):
                continue  # header row
            rows.append([float(v) for v in line.split(",")])
    data = np.asarray(rows, dtype=float)
    if meta.get("kind") == "discrete":
        return DiscreteSignedMeasure(data[:, :-1], data[:, -1])
    if meta.get("kind") == "grid":
        origin = [float(v) for v in meta["origin"].split(",")]
        width = [float(v) for v in meta["cell_width"].split(",")]
        return GridSignedMeasure(origin, width, data[:, :-1].astype(np.int64), data[:, -1])
    raise ValueError(f"{path}: missing or unknown measure kind")
