"""Cutoff-and-convolution smoothing of measurable coefficients.

A mollified map is built from a raw map f by

    g(t, z) = cutoff(z / n)^power * int f(t, z + u / r) bump(u) du,

with a smooth radial cutoff equal to one on the unit ball and zero
outside radius two, and a smooth unit-mass bump supported on the unit
ball (sharpness r shrinks its effective support to radius 1/r).  Drifts
use power 2, dispersions power 1.  The convolution is a fixed tensor-grid
quadrature over the bump support with on-grid normalized weights, so
mollified maps stay cheap, lazily evaluable and exactly reproduce
constants; the result vanishes identically outside |z| <= 2 n.

Mollified maps are pure and reentrant; evaluation points are independent.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError

__all__ = [
    "MollifierSpec",
    "mollify_coefficient",
    "sup_distance_on_ball",
    "lp_distance_on_ball",
    "smooth_cutoff",
    "mollify_pairwise",
]

_BLOCK = 1 << 21


def _bump_profile(u2):
    """Radial bump exp(1 - 1/(1 - |u|^2)) on |u| < 1 (unnormalized)."""
    out = np.zeros_like(u2)
    inside = u2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u2[inside]))
    return out


def _transition(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)

    def B(v):
        out = np.zeros_like(v)
        pos = v > 0
        out[pos] = np.exp(-1.0 / v[pos])
        return out

    num = B(x)
    return num / (num + B(1.0 - x))


def smooth_cutoff(z, n=1):
    """Radial cutoff: exactly 1 for |z| <= n, exactly 0 for |z| >= 2 n."""
    z = np.asarray(z, dtype=float)
    rho = np.abs(z) if z.ndim <= 1 else np.linalg.norm(z, axis=-1)
    return _transition(2.0 - rho / float(n))


@dataclass(frozen=True)
class MollifierSpec:
    """Cutoff radius scale n, bump sharpness r and quadrature resolution.

    The tensor quadrature grid covers the bump support [-1, 1]^dim with
    ``n_quad`` midpoints per axis; weights are the bump values normalized
    on that grid, hence they sum to one to machine precision.
    """

    n: int
    r: float
    dim: int = 1
    n_quad: int = 21
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1 or self.r <= 0 or self.n_quad < 3 or self.dim < 1:
            raise ValueError("need n >= 1, r > 0, dim >= 1, n_quad >= 3")
        axis = (np.arange(self.n_quad) + 0.5) / self.n_quad * 2.0 - 1.0
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        nodes = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        w = _bump_profile(np.sum(nodes * nodes, axis=-1))
        keep = w > 0
        nodes, w = nodes[keep], w[keep]
        w = w / w.sum()
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)
        self.nodes.flags.writeable = False
        self.weights.flags.writeable = False

    def cutoff(self, z):
        return smooth_cutoff(z, self.n)


def mollify_coefficient(f, spec, power=1):
    """Smooth a raw map by cutoff and bump convolution.

    ``f(t, z)`` must accept (..., dim) point arrays and return values of
    a fixed trailing shape (scalars per point are fine).  The returned
    map has the same signature, is exactly zero for |z| >= 2 n, and
    raises an EvaluationError naming the first offending point if f
    produces non-finite values inside the bump support.
    """
    if power not in (1, 2):
        raise ValueError("power must be 1 (dispersion) or 2 (drift)")
    offsets = spec.nodes / spec.r  # (Q, dim)
    wts = spec.weights
    support = 2.0 * spec.n

    def mollified(t, z):
        z = np.asarray(z, dtype=float)
        scalar_in = z.ndim <= 1 and spec.dim == 1
        pts = z.reshape(-1, 1) if z.ndim <= 1 else z.reshape(-1, z.shape[-1])
        if pts.shape[-1] != spec.dim:
            raise ValueError(f"points have dimension {pts.shape[-1]}, spec has {spec.dim}")
        m = len(pts)
        rho = np.linalg.norm(pts, axis=-1)
        live = rho < support
        psi = smooth_cutoff(pts, spec.n) ** power

        out = None
        chunk = max(1, _BLOCK // len(offsets))
        idx_live = np.flatnonzero(live)
        for a in range(0, len(idx_live), chunk):
            rows = idx_live[a : a + chunk]
            shifted = pts[rows][:, None, :] + offsets[None, :, :]
            vals = np.asarray(f(t, shifted), dtype=float)
            if not np.all(np.isfinite(vals)):
                bad = np.argwhere(~np.isfinite(vals.reshape(len(rows), len(offsets), -1)))[0]
                raise EvaluationError(
                    f"raw map non-finite at {shifted[bad[0], bad[1]]} inside the bump support"
                )
            conv = np.einsum("mq...,q->m...", vals, wts)
            if out is None:
                out = np.zeros((m, *conv.shape[1:]))
            out[rows] = conv
        if out is None:  # every point outside the cutoff support
            probe = np.asarray(f(t, pts[:1][:, None, :] * 0.0), dtype=float)
            out = np.zeros((m, *probe.shape[2:]))
        out = out * psi.reshape(m, *([1] * (out.ndim - 1)))
        trailing = out.shape[1:]
        if scalar_in:
            res = out.reshape(*z.shape, *trailing) if z.ndim else out.reshape(trailing or ())
        else:
            res = out.reshape(*z.shape[:-1], *trailing)
        return res

    return mollified


def _cube_midpoints(R, resolution, dim):
    axis = -R + (np.arange(resolution) + 0.5) / resolution * 2.0 * R
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=-1)


def sup_distance_on_ball(f, g, R, resolution=101, dim=1, t=0.0):
    """Max of |f - g| over a midpoint tensor grid of the cube [-R, R]^dim."""
    pts = _cube_midpoints(R, resolution, dim)
    diff = np.abs(
        np.asarray(f(t, pts), dtype=float) - np.asarray(g(t, pts), dtype=float)
    )
    return float(np.max(diff))


def lp_distance_on_ball(f, g, p, R, T, resolution=101, dim=1, t_resolution=None):
    """(sum |f - g|^p cell volume)^(1/p) over a (t, z) midpoint tensor grid.

    The spatial domain is the cube [-R, R]^dim, the time domain [0, T];
    with midpoint cells a constant difference c on a unit-volume domain
    gives exactly |c|.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    t_resolution = t_resolution or resolution
    t_axis = (np.arange(t_resolution) + 0.5) / t_resolution * T
    pts = _cube_midpoints(R, resolution, dim)
    cell_vol = (T / t_resolution) * (2.0 * R / resolution) ** dim
    total = 0.0
    for t in t_axis:
        diff = np.abs(
            np.asarray(f(t, pts), dtype=float) - np.asarray(g(t, pts), dtype=float)
        )
        total += float(np.sum(diff**p)) * cell_vol
    return total ** (1.0 / p)


def mollify_pairwise(spec_b, spec_sigma, mspec_drift, mspec_disp=None):
    """Mollify a pairwise coefficient pair on the doubled state space.

    ``spec_b(t, x, y)`` and ``spec_sigma(t, x, y)`` are wrapped as maps of
    z = (x, y), smoothed with power 2 (drift) respectively 1 (dispersion),
    and returned as callables of (t, x, y) again.  One-dimensional x, y.
    """
    mspec_disp = mspec_disp or mspec_drift
    if mspec_drift.dim != 2 or mspec_disp.dim != 2:
        raise ValueError("pairwise mollification needs dim = 2 mollifier specs")

    def as_z(fn):
        def wrapped(t, z):
            return fn(t, z[..., 0], z[..., 1])

        return wrapped

    b_m = mollify_coefficient(as_z(spec_b), mspec_drift, power=2)
    s_m = mollify_coefficient(as_z(spec_sigma), mspec_disp, power=1)

    def b(t, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        z = np.stack([x.reshape(-1), y.reshape(-1)], axis=-1)
        return b_m(t, z).reshape(x.shape)

    def sigma(t, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        z = np.stack([x.reshape(-1), y.reshape(-1)], axis=-1)
        return s_m(t, z).reshape(x.shape)

    return b, sigma
