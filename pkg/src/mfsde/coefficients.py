"""Drift and dispersion specifications and their growth checkers.

Three structural forms are supported:

* factored path-dependent: the drift is the composition ``b = sigma @ btilde``
  of the dispersion with a reduced drift taking (t, path window, law flow);
* delayed interaction: ``b(t, x, mu) = sigma(t, x) . sum_s kappa({s}) *
  average_y beta(t, s, x, y)`` with y running over the atoms of the law
  slice at time t+s and kappa a finitely supported probability measure on
  [-tau, 0];
* pairwise mean-field: plain maps b(t, x, y), sigma(t, x, y) whose
  interaction is realized by averaging over ensemble members y.

Evaluables are vectorized: point arguments are (..., d) arrays, a path
argument is a window object exposing ``state`` (the (N, d) positions at
the current time) and ``at(s)`` (positions at the nearest stored time at
or below s), and t is a scalar or an array broadcasting against the
leading axes.  Dispersion values may be returned as a constant (d, d1)
matrix or per-point (..., d, d1) arrays.

All growth conditions are checked on finite sample sets only; a report
carries the worst sampled margin and where it occurred, never a proof.
Specifications are immutable and may be evaluated concurrently; margin
scans split the sample set into fixed chunks so that the reported argmax
does not depend on the worker count.
"""

from dataclasses import dataclass, field

import numpy as np

from . import parallel
from .errors import EvaluationError
from .reports import CheckReport, condition_from_margins

__all__ = [
    "DispersionSpec",
    "FactoredDriftSpec",
    "DelayedInteractionDrift",
    "PairwiseMeanFieldSpec",
    "CoefficientSet",
    "StaticPathWindow",
    "eval_drift_interaction",
    "eval_pairwise_mean_field",
    "check_example26_case1",
    "check_example26_case2",
    "check_H_growth",
    "check_nondegeneracy",
    "smallest_passing_C",
    "make_coefficients",
    "register_coefficients",
    "catalog_names",
]

# memory cap (floats) for one broadcast block in pairwise averaging
_BLOCK = 1 << 22


class StaticPathWindow:
    """Constant-path shim: presents plain states as a path window.

    Used by checkers that sample paths through their time-t value only;
    ``at(s)`` returns the same states for every s.
    """

    def __init__(self, states, t=0.0):
        self.state = np.atleast_2d(np.asarray(states, dtype=float))
        self.t = float(t)

    def at(self, s):
        return self.state


@dataclass(frozen=True)
class DispersionSpec:
    """Path-dependent dispersion sigma(t, x) with output shape (d, d1)."""

    fn: callable
    d: int = 1
    d1: int = 1
    adapted: bool = True

    def __call__(self, t, window):
        out = np.asarray(self.fn(t, window), dtype=float)
        if out.shape[-2:] != (self.d, self.d1):
            raise EvaluationError(
                f"dispersion returned trailing shape {out.shape[-2:]}, expected {(self.d, self.d1)}"
            )
        return out


@dataclass(frozen=True)
class FactoredDriftSpec:
    """Drift given as the composition b = sigma @ btilde.

    ``btilde(t, window, flow)`` returns (N, d1); the composed drift is
    computed on demand, never stored separately.
    """

    btilde: callable
    sigma: DispersionSpec

    @property
    def d(self):
        return self.sigma.d

    @property
    def d1(self):
        return self.sigma.d1

    def drift(self, t, window, flow):
        bt = np.asarray(self.btilde(t, window, flow), dtype=float)
        bt = np.broadcast_to(bt, (len(window.state), self.d1))
        sig = self.sigma(t, window)
        if sig.ndim == 2:
            return bt @ sig.T
        return np.einsum("nij,nj->ni", sig, bt)


@dataclass(frozen=True)
class DelayedInteractionDrift:
    """Interaction drift averaging a kernel over delayed law slices.

    ``beta(t, s, window, y)`` must broadcast over y given as (..., d) and
    return (..., d1) values for the reduced kernel (the dispersion factor
    is applied outside).  ``kappa`` is a finite list of (s, weight) atoms
    with s in [-tau, 0], nonnegative weights summing to one.  An optional
    ``mean_beta(t, s, window, positions, weights)`` short-circuits the
    average over the law slice for kernels with a closed-form mean.
    """

    beta: callable
    kappa: tuple
    tau: float
    d1: int = 1
    mean_beta: callable = None

    def __post_init__(self):
        w = np.array([wt for _, wt in self.kappa], dtype=float)
        s = np.array([sv for sv, _ in self.kappa], dtype=float)
        if len(w) == 0 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("kappa weights must be nonnegative and sum to 1")
        if np.any(s < -self.tau - 1e-12) or np.any(s > 1e-12):
            raise ValueError("kappa atoms must lie in [-tau, 0]")


@dataclass(frozen=True)
class PairwiseMeanFieldSpec:
    """Pairwise coefficients b(t, x, y) and sigma(t, x, y).

    Optional fast paths:
      * ``mean_b(t, X, members, weights)`` -> (N, d): the member average
        of b in closed form;
      * ``mean_sigma(t, X, members, weights)`` -> (N, d, d1) or (d, d1);
      * ``btilde(t, X, Y)``: reduced drift with b = sigma @ btilde.  When
        absent and sigma is an isotropic constant s*I, btilde = b/s is
        derived automatically.
      * ``btilde_state(t, X)``: btilde for kernels not depending on y.
    """

    b: callable
    sigma: callable
    d: int = 1
    d1: int = 1
    mean_b: callable = None
    mean_sigma: callable = None
    btilde: callable = None
    btilde_state: callable = None

    def btilde_values(self, t, X, Y):
        if self.btilde is not None:
            return np.asarray(self.btilde(t, X, Y), dtype=float)
        sig = np.asarray(self.sigma(t, X, Y), dtype=float)
        bvals = np.asarray(self.b(t, X, Y), dtype=float)
        if sig.shape[-2:] == (self.d, self.d1) and self.d == self.d1:
            diag = np.diagonal(sig, axis1=-2, axis2=-1)
            iso = np.allclose(sig, diag[..., None] * np.eye(self.d)) and np.allclose(
                diag, diag[..., :1]
            )
            s0 = diag[..., 0]
            if iso and np.all(np.abs(s0) > 0):
                return bvals / s0[..., None]
        raise EvaluationError("cannot derive btilde: provide it explicitly or use isotropic sigma")


@dataclass(frozen=True)
class CoefficientSet:
    """Named drift/dispersion pair in one of the three structural forms.

    ``dispersion`` is None exactly when the drift is pairwise (the
    pairwise spec carries its own sigma).
    """

    name: str
    drift: object
    dispersion: DispersionSpec = None
    params: dict = field(default_factory=dict)

    @property
    def d(self):
        if isinstance(self.drift, PairwiseMeanFieldSpec):
            return self.drift.d
        return self.dispersion.d

    @property
    def d1(self):
        if isinstance(self.drift, PairwiseMeanFieldSpec):
            return self.drift.d1
        return self.dispersion.d1


def _member_weights(members, weights):
    if weights is None:
        return np.full(len(members), 1.0 / len(members))
    w = np.asarray(weights, dtype=float)
    return w / w.sum()


def _mean_over_members(fn, t, X, members, weights, out_trailing):
    """Weighted member average of fn(t, x_i, y_j) for every row x_i.

    Chunked twice: fixed chunks over the x rows (dispatched to workers,
    results concatenated in chunk order) and over the members (to bound
    the broadcast block size).  out_trailing is the trailing shape of a
    single fn value, e.g. (d,) for drifts and (d, d1) for dispersions.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    members = np.atleast_2d(np.asarray(members, dtype=float))
    n, m = len(X), len(members)
    if m == 0:
        raise ValueError("empty ensemble")
    w = _member_weights(members, weights)
    trail = int(np.prod(out_trailing, dtype=int))
    mchunk = max(1, _BLOCK // max(1, trail) // max(1, n))

    def run(a, b):
        Xc = X[a:b]
        acc = np.zeros((b - a, *out_trailing))
        for ma, mb in parallel.chunk_ranges(m, mchunk):
            Yc = members[ma:mb]
            vals = np.asarray(fn(t, Xc[:, None, :], Yc[None, :, :]), dtype=float)
            vals = np.broadcast_to(vals, (b - a, mb - ma, *out_trailing))
            acc += np.einsum("nm...,m->n...", vals, w[ma:mb])
        return acc

    parts = parallel.map_chunks(run, n)
    return np.concatenate(parts, axis=0)


def eval_pairwise_mean_field(spec, t, x, members, weights=None):
    """Member averages of b(t, x, .) and sigma(t, x, .).

    ``x`` may be a single point (d,) or a batch (N, d); the returned
    drift is (N, d) and the dispersion (N, d, d1) (constant dispersions
    may come back as (d, d1)).
    """
    X = np.atleast_2d(np.asarray(x, dtype=float))
    members = np.atleast_2d(np.asarray(members, dtype=float))
    if len(members) == 0:
        raise ValueError("empty ensemble")
    if spec.mean_b is not None:
        drift = np.asarray(spec.mean_b(t, X, members, weights), dtype=float)
        drift = np.broadcast_to(drift, (len(X), spec.d))
    else:
        drift = _mean_over_members(spec.b, t, X, members, weights, (spec.d,))
    if spec.mean_sigma is not None:
        disp = np.asarray(spec.mean_sigma(t, X, members, weights), dtype=float)
    else:
        disp = _mean_over_members(spec.sigma, t, X, members, weights, (spec.d, spec.d1))
    return drift, disp


def eval_drift_interaction(spec, sigma, t, window, flow):
    """Delayed-interaction drift sigma(t,x) . sum_s kappa({s}) avg_y beta.

    ``flow`` must provide ``atoms_at(t+s)`` for every kappa atom s; a
    missing slice raises an EvaluationError naming it.  The generic
    average chunks over the law atoms only, so kernels reading the path
    window stay row-aligned with its state.
    """
    X = window.state
    n = len(X)
    acc = np.zeros((n, spec.d1))
    for s, wt in spec.kappa:
        if wt == 0.0:
            continue
        pos, pw = flow.atoms_at(t + s)
        if spec.mean_beta is not None:
            avg = np.asarray(spec.mean_beta(t, s, window, pos, pw), dtype=float)
            avg = np.broadcast_to(avg, (n, spec.d1))
        else:
            pos = np.atleast_2d(np.asarray(pos, dtype=float))
            m = len(pos)
            if m == 0:
                raise ValueError("empty law slice")
            w = _member_weights(pos, pw)
            avg = np.zeros((n, spec.d1))
            mchunk = max(1, _BLOCK // max(1, spec.d1) // max(1, n))
            for ma, mb in parallel.chunk_ranges(m, mchunk):
                vals = np.asarray(spec.beta(t, s, window, pos[None, ma:mb, :]), dtype=float)
                vals = np.broadcast_to(vals, (n, mb - ma, spec.d1))
                avg += np.einsum("nm...,m->n...", vals, w[ma:mb])
        acc += wt * avg
    sig = sigma(t, window)
    if sig.ndim == 2:
        return acc @ sig.T
    return np.einsum("nij,nj->ni", sig, acc)


# ---------------------------------------------------------------------------
# growth / non-degeneracy checkers
# ---------------------------------------------------------------------------


def txy_grid(t_vals, x_vals, y_vals):
    """Flattened product sample set over (t, x, y); d = 1 per axis array,
    or pass (m, d) point clouds for x and y."""
    t_vals = np.atleast_1d(np.asarray(t_vals, dtype=float))
    Xv = _as_pointcloud(x_vals)
    Yv = _as_pointcloud(y_vals)
    T, IX, IY = np.meshgrid(
        t_vals, np.arange(len(Xv)), np.arange(len(Yv)), indexing="ij"
    )
    return T.reshape(-1), Xv[IX.reshape(-1)], Yv[IY.reshape(-1)]


def _as_pointcloud(vals):
    vals = np.asarray(vals, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    return vals


def _scan_margins(name, margin_fn, T, X, Y, strict=False):
    """Chunked margin scan; reduction over chunks is worker-independent."""
    n = len(T)

    def run(a, b):
        return np.asarray(margin_fn(T[a:b], X[a:b], Y[a:b]), dtype=float).reshape(-1)

    margins = np.concatenate(parallel.map_chunks(run, n))
    return condition_from_margins(
        name,
        margins,
        {"t": T, "x": X[:, 0] if X.shape[1] == 1 else X, "y": Y[:, 0] if Y.shape[1] == 1 else Y},
        strict=strict,
    )


def _norms(spec, T, X, Y):
    bvals = np.asarray(spec.b(T[:, None] if np.ndim(T) else T, X, Y), dtype=float)
    bvals = np.broadcast_to(bvals, (*X.shape[:-1], spec.d))
    sig = np.asarray(spec.sigma(T[:, None] if np.ndim(T) else T, X, Y), dtype=float)
    sig = np.broadcast_to(sig, (*X.shape[:-1], spec.d, spec.d1))
    return bvals, sig


def check_example26_case1(spec, alpha, q, C, t_vals, x_vals, y_vals):
    """Polynomial-growth sufficient conditions, first variant.

    Margins (pass when every sampled value is <= 0):
      dissipativity: |x|^2 (2<x,b> + |s|^2) + (alpha-2) |s^T x|^2 - C (1 + |x|^4)
      kernel growth: |btilde| - C (1 + |y|^(alpha/2)) (1 + |x|^(alpha/4))
    """
    alpha, q, C = float(alpha), float(q), float(C)
    if C <= 0:
        raise ValueError("C must be positive")
    if q <= 2:
        raise ValueError("q must exceed 2")
    T, X, Y = txy_grid(t_vals, x_vals, y_vals)

    def m_diss(t, x, y):
        b, sig = _norms(spec, t, x, y)
        xx = np.sum(x * x, axis=-1)
        xb = np.sum(x * b, axis=-1)
        sf = np.sum(sig * sig, axis=(-2, -1))
        stx = np.einsum("...ij,...i->...j", sig, x)
        return xx * (2.0 * xb + sf) + (alpha - 2.0) * np.sum(stx * stx, axis=-1) - C * (1.0 + xx**2)

    def m_growth(t, x, y):
        bt = spec.btilde_values(t, x, y)
        bt = np.broadcast_to(bt, (*x.shape[:-1], spec.d1))
        rx = np.linalg.norm(x, axis=-1)
        ry = np.linalg.norm(y, axis=-1)
        return np.linalg.norm(bt, axis=-1) - C * (1.0 + ry ** (alpha / 2)) * (1.0 + rx ** (alpha / 4))

    report = CheckReport(
        "example26-case1",
        [
            _scan_margins("dissipativity", m_diss, T, X, Y),
            _scan_margins("kernel-growth", m_growth, T, X, Y),
        ],
        extras={"alpha": alpha, "q": q, "C": C, "samples": len(T)},
    )
    return report


def check_example26_case2(spec, alpha, p, q, C, t_vals, x_vals, y_vals):
    """Exponential-growth sufficient conditions, second variant.

    Margins:
      dissipativity: |x|^2 (2<x,b> + |s|^2) + (alpha p |x|^p + p - 2) |s^T x|^2
                     - C (1 + |x|^(4-p))
      kernel growth: |btilde| - C exp(alpha |y|^p / 2 + alpha |x|^p / 4)
    """
    alpha, p, q, C = float(alpha), float(p), float(q), float(C)
    if C <= 0:
        raise ValueError("C must be positive")
    if not (1.0 <= p <= 2.0):
        raise ValueError("p must lie in [1, 2]")
    if q <= 2:
        raise ValueError("q must exceed 2")
    T, X, Y = txy_grid(t_vals, x_vals, y_vals)

    def m_diss(t, x, y):
        b, sig = _norms(spec, t, x, y)
        xx = np.sum(x * x, axis=-1)
        rx = np.sqrt(xx)
        xb = np.sum(x * b, axis=-1)
        sf = np.sum(sig * sig, axis=(-2, -1))
        stx = np.einsum("...ij,...i->...j", sig, x)
        return (
            xx * (2.0 * xb + sf)
            + (alpha * p * rx**p + p - 2.0) * np.sum(stx * stx, axis=-1)
            - C * (1.0 + rx ** (4.0 - p))
        )

    def m_growth(t, x, y):
        bt = spec.btilde_values(t, x, y)
        bt = np.broadcast_to(bt, (*x.shape[:-1], spec.d1))
        rx = np.linalg.norm(x, axis=-1)
        ry = np.linalg.norm(y, axis=-1)
        return np.linalg.norm(bt, axis=-1) - C * np.exp(alpha / 2 * ry**p + alpha / 4 * rx**p)

    return CheckReport(
        "example26-case2",
        [
            _scan_margins("dissipativity", m_diss, T, X, Y),
            _scan_margins("kernel-growth", m_growth, T, X, Y),
        ],
        extras={"alpha": alpha, "p": p, "q": q, "C": C, "samples": len(T)},
    )


def check_H_growth(spec, cert, q, t_vals, x_vals, y_vals):
    """Joint q-th power growth of (b, sigma) against the product V(x)V(y).

    Margin |b|^q + |sigma|^q - V(x) V(y); passes only when strictly
    negative on every sample.
    """
    q = float(q)
    if q <= 2:
        raise ValueError("q must exceed 2")
    T, X, Y = txy_grid(t_vals, x_vals, y_vals)

    def m(t, x, y):
        b, sig = _norms(spec, t, x, y)
        vb = np.linalg.norm(b, axis=-1)
        vs = np.sqrt(np.sum(sig * sig, axis=(-2, -1)))
        Vx = np.asarray(cert.V(x), dtype=float)
        Vy = np.asarray(cert.V(y), dtype=float)
        if np.any(Vx <= 0) or np.any(Vy <= 0):
            raise EvaluationError("V must be strictly positive on the sample set")
        return vb**q + vs**q - Vx * Vy

    return CheckReport(
        "joint-growth",
        [_scan_margins("q-growth", m, T, X, Y, strict=True)],
        extras={"q": q, "samples": len(T)},
    )


def check_nondegeneracy(spec, R, t_vals, n_points=21):
    """Smallest directional value of sigma sigma^T over a sample grid.

    Samples (t, x, y) with x, y on a uniform grid of the cube [-R, R]^d
    and returns the minimum eigenvalue found; passes when it is > 0.
    """
    axes = [np.linspace(-R, R, n_points)] * spec.d
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    T, X, Y = txy_grid(t_vals, pts, pts)

    n = len(T)

    def run(a, b):
        sig = np.asarray(spec.sigma(T[a:b, None], X[a:b], Y[a:b]), dtype=float)
        sig = np.broadcast_to(sig, (b - a, spec.d, spec.d1))
        if not np.all(np.isfinite(sig)):
            raise EvaluationError("non-finite dispersion entry in non-degeneracy scan")
        gram = np.einsum("nij,nkj->nik", sig, sig)
        return np.linalg.eigvalsh(gram)[:, 0]

    smallest = np.concatenate(parallel.map_chunks(run, n))
    k = int(np.argmin(smallest))
    value = float(smallest[k])
    cond = condition_from_margins(
        "uniform-ellipticity",
        -smallest,  # pass (margin < 0) iff smallest eigenvalue > 0
        {"t": T, "x": X[:, 0] if spec.d == 1 else X, "y": Y[:, 0] if spec.d == 1 else Y},
        strict=True,
    )
    return CheckReport(
        "non-degeneracy",
        [cond],
        extras={"min_eigenvalue": value, "R": float(R), "samples": n},
    )


def smallest_passing_C(check, c_init=1.0, c_max=1e12, rtol=1e-6):
    """Bisection for the smallest constant C accepted by a checker.

    ``check`` maps C to a CheckReport and must be monotone: once passing,
    larger C keeps passing.  Returns (C, report) at the accepted value, or
    (None, report) when no C up to c_max passes.
    """
    hi = float(c_init)
    lo = 0.0
    rep = check(hi)
    while not rep.passed:
        lo = hi
        hi *= 2.0
        if hi > c_max:
            return None, rep
        rep = check(hi)
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        rep_mid = check(mid)
        if rep_mid.passed:
            hi, rep = mid, rep_mid
        else:
            lo = mid
    return hi, rep


# ---------------------------------------------------------------------------
# built-in coefficient catalog
# ---------------------------------------------------------------------------

_CATALOG = {}


def register_coefficients(name, builder):
    """Register a coefficient factory addressable by name in config files."""
    _CATALOG[name] = builder


def catalog_names():
    return sorted(_CATALOG)


def make_coefficients(name, **params):
    if name not in _CATALOG:
        raise KeyError(f"unknown coefficient set {name!r}; known: {', '.join(catalog_names())}")
    return _CATALOG[name](**params)


def _const_sigma_pairwise(s):
    mat = np.array([[float(s)]])
    return lambda t, X, Y: mat


def _wmean(members, weights, values):
    w = _member_weights(members, weights)
    return np.einsum("m...,m->...", values, w)


def _pairwise_set(name, b, sigma_const, params, mean_b=None, btilde_state=None, btilde=None):
    s = float(sigma_const)
    if btilde is None and s != 0:
        btilde = lambda t, X, Y: np.asarray(b(t, X, Y), dtype=float) / s
    spec = PairwiseMeanFieldSpec(
        b=b,
        sigma=_const_sigma_pairwise(s),
        mean_b=mean_b,
        mean_sigma=lambda t, X, members, w: np.array([[s]]),
        btilde=btilde,
        btilde_state=btilde_state,
    )
    return CoefficientSet(name, spec, params=params)


def _build_zero(sigma=0.0):
    zero = lambda t, X, Y: np.zeros(np.broadcast_shapes(X.shape, Y.shape))
    return _pairwise_set(
        "zero",
        zero,
        sigma,
        {"sigma": float(sigma)},
        mean_b=lambda t, X, m, w: np.zeros_like(X),
        btilde_state=lambda t, X: np.zeros_like(X),
        btilde=zero,
    )


def _build_constant(drift=1.0, sigma=1.0):
    c = float(drift)
    return _pairwise_set(
        "constant",
        lambda t, X, Y: np.broadcast_to(c, np.broadcast_shapes(X.shape, Y.shape)),
        sigma,
        {"drift": c, "sigma": float(sigma)},
        mean_b=lambda t, X, m, w: np.full_like(X, c),
        btilde_state=(lambda t, X: np.full_like(X, c / float(sigma))) if sigma else None,
    )


def _build_linear_meanfield(theta=1.0, sigma=1.0):
    th = float(theta)

    def mean_b(t, X, members, w):
        mbar = _wmean(members, w, members)
        return th * (mbar - X)

    return _pairwise_set(
        "linear-meanfield",
        lambda t, X, Y: th * (Y - X),
        sigma,
        {"theta": th, "sigma": float(sigma)},
        mean_b=mean_b,
    )


def _build_ou_attraction(theta=1.0, sigma=1.0, shift=0.0):
    th, sh, s = float(theta), float(shift), float(sigma)
    return _pairwise_set(
        "ou-attraction",
        lambda t, X, Y: np.broadcast_to(-th * X + sh, np.broadcast_shapes(X.shape, Y.shape)),
        s,
        {"theta": th, "sigma": s, "shift": sh},
        mean_b=lambda t, X, m, w: -th * X + sh,
        btilde_state=(lambda t, X: (-th * X + sh) / s) if s else None,
    )


def _build_cubic(scale=1.0, sigma=1.0):
    sc, s = float(scale), float(sigma)
    return _pairwise_set(
        "cubic",
        lambda t, X, Y: np.broadcast_to(sc * X**3, np.broadcast_shapes(X.shape, Y.shape)),
        s,
        {"scale": sc, "sigma": s},
        mean_b=lambda t, X, m, w: sc * X**3,
        btilde_state=(lambda t, X: sc * X**3 / s) if s else None,
    )


def _build_sign(sigma=1.0):
    def mean_b(t, X, members, w):
        avg = _wmean(members, w, np.sign(members))
        return np.broadcast_to(avg, X.shape)

    return _pairwise_set(
        "sign",
        lambda t, X, Y: np.broadcast_to(np.sign(Y), np.broadcast_shapes(X.shape, Y.shape)),
        sigma,
        {"sigma": float(sigma)},
        mean_b=mean_b,
    )


def _build_sin_product(scale=1.0, sigma=1.0):
    sc = float(scale)

    def mean_b(t, X, members, w):
        from . import _kernels

        ww = _member_weights(members, w)
        out = _kernels.sin_product_mean(X[:, 0], members[:, 0], ww, sc)
        return out[:, None]

    return _pairwise_set(
        "sin-product",
        lambda t, X, Y: np.sin(sc * X * Y),
        sigma,
        {"scale": sc, "sigma": float(sigma)},
        mean_b=mean_b,
    )


def _parse_kappa(kappa):
    if isinstance(kappa, str):
        atoms = []
        for tok in kappa.split(","):
            sv, wv = tok.split(":")
            atoms.append((float(sv), float(wv)))
        return tuple(atoms)
    return tuple((float(s), float(w)) for s, w in kappa)


def _build_delayed_mean(sigma=1.0, kappa=((0.0, 1.0),), tau=0.0):
    atoms = _parse_kappa(kappa)
    tau = max(float(tau), max(-s for s, _ in atoms))
    drift = DelayedInteractionDrift(
        beta=lambda t, s, window, y: y,
        kappa=atoms,
        tau=tau,
        mean_beta=lambda t, s, window, pos, w: _wmean(pos, w, pos),
    )
    disp = DispersionSpec(fn=lambda t, window: np.array([[float(sigma)]]))
    return CoefficientSet(
        "delayed-mean", drift, disp, params={"sigma": float(sigma), "kappa": atoms, "tau": tau}
    )


register_coefficients("zero", _build_zero)
register_coefficients("constant", _build_constant)
register_coefficients("linear-meanfield", _build_linear_meanfield)
register_coefficients("ou-attraction", _build_ou_attraction)
register_coefficients("cubic", _build_cubic)
register_coefficients("sign", _build_sign)
register_coefficients("sin-product", _build_sin_product)
register_coefficients("delayed-mean", _build_delayed_mean)
