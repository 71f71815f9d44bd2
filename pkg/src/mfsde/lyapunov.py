"""Lyapunov functions, generator-margin checks and moment monitoring.

A certificate bundles a nonnegative C^2 function V with its derivatives,
the growth constant C and the auxiliary maps (time-indexed weight phi,
eta, optional path functional psi, growth modulus g).  The catalog
provides three V families:

* quadratic: V(y) = 1 + |y|^2;
* polynomial(alpha): V(y) = 1 + |y|^alpha for |y| >= 1, matched inside
  the unit ball by a C^2 cubic in u = |y|^2 with q'(0) = 0;
* exponential(alpha, p): V(y) = exp(alpha |y|^p) for |y| >= 1, matched
  the same way.

The closed forms only pin V down outside the unit ball; the spline keeps
V twice continuously differentiable everywhere, which the generator
inequality needs.  Margin scans run on finite sample sets in fixed chunk
order (worker-count independent argmax, ties to the lowest index).
"""

from dataclasses import dataclass

import numpy as np

from . import parallel
from .coefficients import StaticPathWindow
from .reports import CheckReport, ConditionReport, condition_from_margins

__all__ = [
    "LyapunovCertificate",
    "quadratic_certificate",
    "polynomial_certificate",
    "exponential_certificate",
    "polynomial_growth_certificate",
    "exponential_growth_certificate",
    "generator_margin",
    "monitor_expectation",
    "check_C_conditions",
    "MonitorReport",
]


def _identity(u):
    return u


@dataclass(frozen=True)
class LyapunovCertificate:
    """V with derivatives, the growth constant and auxiliary maps."""

    V: callable  # (..., d) -> (...,)
    grad: callable  # (..., d) -> (..., d)
    hess: callable  # (..., d) -> (..., d, d)
    C: float = 1.0
    dt_V: callable = None  # optional time derivative (t, y) -> (...,)
    weight: callable = None  # phi_t: (t, y) -> (...,), strictly positive
    eta: callable = None  # (t, y) -> (...,) nonnegative
    psi_path: callable = None  # (t, window) -> (...,) nonnegative
    modulus: callable = _identity  # increasing positive g; Osgood condition asserted
    label: str = "custom"

    def with_constant(self, C):
        return LyapunovCertificate(
            self.V, self.grad, self.hess, float(C), self.dt_V, self.weight,
            self.eta, self.psi_path, self.modulus, self.label,
        )


def _as_points(y):
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        return y.reshape(1, 1)
    if y.ndim == 1:
        return y[:, None]
    return y


def _spline_coeffs(f1, d1v, d2v):
    """Cubic q(u) = a + c u^2 + e u^3 with q'(0)=0 matching value, slope
    and curvature at u = 1."""
    e = (d2v - d1v) / 3.0
    c = (d1v - 3.0 * e) / 2.0
    a = f1 - c - e
    return a, c, e


def _matched_certificate(outer_V, outer_hess_coefs, f1, d1v, d2v):
    """Assemble a smooth-matched radial V from its outer closed form.

    The outer branch is a function of the radius r = |y| (used verbatim
    for |y| >= 1); the inner branch is the C^2 matching cubic in
    u = |y|^2.  Gradients use the radial forms grad V = g1 * y and
    D^2 V = g1 I + g2 y y^T, with (g1, g2) = outer_hess_coefs(r).
    """
    a, c, e = _spline_coeffs(f1, d1v, d2v)

    def q(u):
        return a + c * u**2 + e * u**3

    def qp(u):
        return 2.0 * c * u + 3.0 * e * u**2

    def qpp(u):
        return 2.0 * c + 6.0 * e * u

    def V(y):
        y = _as_points(y)
        u = np.sum(y * y, axis=-1)
        r = np.sqrt(np.maximum(u, 1.0))
        return np.where(u >= 1.0, outer_V(r), q(np.minimum(u, 1.0)))

    def grad(y):
        y = _as_points(y)
        u = np.sum(y * y, axis=-1)
        r = np.sqrt(np.maximum(u, 1.0))
        g1 = np.where(u >= 1.0, outer_hess_coefs(r)[0], 2.0 * qp(np.minimum(u, 1.0)))
        return g1[..., None] * y

    def hess(y):
        y = _as_points(y)
        d = y.shape[-1]
        u = np.sum(y * y, axis=-1)
        r = np.sqrt(np.maximum(u, 1.0))
        go1, go2 = outer_hess_coefs(r)
        gi1 = 2.0 * qp(np.minimum(u, 1.0))
        gi2 = 4.0 * qpp(np.minimum(u, 1.0))
        inner = u < 1.0
        g1 = np.where(inner, gi1, go1)
        g2 = np.where(inner, gi2, go2)
        eye = np.eye(d)
        return g1[..., None, None] * eye + g2[..., None, None] * (y[..., :, None] * y[..., None, :])

    return V, grad, hess


def quadratic_certificate(C=1.0, **aux):
    """V(y) = 1 + |y|^2."""

    def V(y):
        y = _as_points(y)
        return 1.0 + np.sum(y * y, axis=-1)

    def grad(y):
        return 2.0 * _as_points(y)

    def hess(y):
        y = _as_points(y)
        d = y.shape[-1]
        return np.broadcast_to(2.0 * np.eye(d), (*y.shape[:-1], d, d)).copy()

    return LyapunovCertificate(V, grad, hess, C=float(C), label="quadratic", **aux)


def polynomial_certificate(alpha, C=1.0, **aux):
    """Smooth-matched V equal to 1 + |y|^alpha outside the unit ball."""
    alpha = float(alpha)

    def outer_V(r):
        return 1.0 + r**alpha

    def outer_hess_coefs(r):
        g1 = alpha * r ** (alpha - 2.0)
        g2 = alpha * (alpha - 2.0) * r ** (alpha - 4.0)
        return g1, g2

    # value, slope and curvature of 1 + u^(alpha/2) in u = |y|^2 at u = 1
    h = alpha / 2.0
    V, grad, hess = _matched_certificate(outer_V, outer_hess_coefs, 2.0, h, h * (h - 1.0))
    return LyapunovCertificate(V, grad, hess, C=float(C), label=f"polynomial({alpha:g})", **aux)


def exponential_certificate(alpha, p, C=1.0, **aux):
    """Smooth-matched V equal to exp(alpha |y|^p) outside the unit ball."""
    alpha, p = float(alpha), float(p)

    def outer_V(r):
        return np.exp(alpha * r**p)

    def outer_hess_coefs(r):
        Vr = outer_V(r)
        g1 = Vr * alpha * p * r ** (p - 2.0)
        g2 = Vr * (alpha * p * (p - 2.0) * r ** (p - 4.0) + (alpha * p) ** 2 * r ** (2.0 * p - 4.0))
        return g1, g2

    # derivatives of exp(alpha u^(p/2)) in u = |y|^2 at u = 1
    h = p / 2.0
    f1 = float(np.exp(alpha))
    d1v = f1 * alpha * h
    d2v = f1 * (alpha * h * (h - 1.0) + (alpha * h) ** 2)
    V, grad, hess = _matched_certificate(outer_V, outer_hess_coefs, f1, d1v, d2v)
    return LyapunovCertificate(
        V, grad, hess, C=float(C), label=f"exponential({alpha:g},{p:g})", **aux
    )


def polynomial_growth_certificate(alpha, C=1.0):
    """Polynomial certificate dressed with its matching weight family.

    phi(y) = 1 + |y|^(alpha/2) and eta(y) = 1 + |y|^(alpha/4), both
    constant in time; V is the smooth-matched 1 + |y|^alpha.
    """
    alpha = float(alpha)

    def weight(t, y):
        r = np.linalg.norm(_as_points(y), axis=-1)
        return 1.0 + r ** (alpha / 2.0)

    def eta(t, y):
        r = np.linalg.norm(_as_points(y), axis=-1)
        return 1.0 + r ** (alpha / 4.0)

    return polynomial_certificate(alpha, C=C, weight=weight, eta=eta)


def exponential_growth_certificate(alpha, p, C=1.0):
    """Exponential certificate with phi = exp(alpha |y|^p / 2), eta = exp(alpha |y|^p / 4)."""
    alpha, p = float(alpha), float(p)

    def weight(t, y):
        r = np.linalg.norm(_as_points(y), axis=-1)
        return np.exp(alpha / 2.0 * r**p)

    def eta(t, y):
        r = np.linalg.norm(_as_points(y), axis=-1)
        return np.exp(alpha / 4.0 * r**p)

    return exponential_certificate(alpha, p, C=C, weight=weight, eta=eta)


def _generator_values(cert, b_vals, sig_vals, X, t_vals=None):
    """generator of V: dt_V + <grad V, b> + tr(sigma^T D2V sigma)/2."""
    grad = cert.grad(X)
    H = cert.hess(X)
    sig_vals = np.asarray(sig_vals, dtype=float)
    if sig_vals.ndim == 2:
        sig_vals = np.broadcast_to(sig_vals, (len(X), *sig_vals.shape))
    quad = 0.5 * np.einsum("...aj,...ab,...bj->...", sig_vals, H, sig_vals)
    out = np.sum(grad * b_vals, axis=-1) + quad
    if cert.dt_V is not None and t_vals is not None:
        out = out + np.asarray(cert.dt_V(t_vals, X), dtype=float)
    return out


def generator_margin(cert, b, sigma, t_vals, points, C=None):
    """Worst sampled generator margin of V against C V.

    ``b(t, X) -> (M, d)`` and ``sigma(t, X) -> (d, d1) | (M, d, d1)`` are
    evaluated on the product of t_vals and the sample points; the report
    carries the worst margin and the sample attaining it.
    """
    C = cert.C if C is None else float(C)
    t_vals = np.atleast_1d(np.asarray(t_vals, dtype=float))
    X = _as_points(points)
    margins = []
    ts = []
    xs = []
    for t in t_vals:
        def run(a, bnd, t=t):
            Xc = X[a:bnd]
            bv = np.broadcast_to(np.asarray(b(t, Xc), dtype=float), Xc.shape)
            sv = sigma(t, Xc)
            gen = _generator_values(cert, bv, sv, Xc, np.full(len(Xc), t))
            return gen - C * cert.V(Xc)

        margins.append(np.concatenate(parallel.map_chunks(run, len(X))))
        ts.append(np.full(len(X), t))
        xs.append(X[:, 0] if X.shape[1] == 1 else X)
    cond = condition_from_margins(
        "generator",
        np.concatenate(margins),
        {"t": np.concatenate(ts), "x": np.concatenate(xs)},
    )
    return CheckReport("generator-margin", [cond], extras={"C": C, "samples": len(X) * len(t_vals)})


@dataclass
class MonitorReport:
    """Empirical mean of V along an ensemble against its a priori bound."""

    times: np.ndarray
    mean_V: np.ndarray
    se_V: np.ndarray
    bound: np.ndarray
    flags: np.ndarray
    C: float
    slack_coeff: float = 1.0

    @property
    def passed(self):
        return not bool(np.any(self.flags))

    @property
    def first_flag_time(self):
        idx = np.flatnonzero(self.flags)
        return float(self.times[idx[0]]) if len(idx) else None

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "C": self.C,
            "slack_coeff": self.slack_coeff,
            "first_flag_time": self.first_flag_time,
            "n_flags": int(np.sum(self.flags)),
            "max_mean_V": float(np.max(self.mean_V)),
        }


def monitor_expectation(ensemble, cert, slack_coeff=1.0):
    """Compare mean V(X_t) per step with exp(C t) times the initial mean.

    A time is flagged when the empirical mean exceeds the bound by more
    than three standard errors plus a dt-proportional discretization
    slack (the a priori inequality concerns the exact process, the
    ensemble follows its Euler discretization).
    """
    k0 = ensemble.n_delay
    times = ensemble.times[k0:]
    n = ensemble.N
    means = np.empty(len(times))
    ses = np.empty(len(times))
    for j, k in enumerate(range(k0, ensemble.n_times)):
        vals = cert.V(ensemble.states(k))
        means[j] = vals.mean()
        ses[j] = vals.std(ddof=1) / np.sqrt(n) if n > 1 else 0.0
    rel = times - times[0]
    bound = np.exp(cert.C * rel) * means[0]
    slack = slack_coeff * ensemble.cfg.dt * bound
    flags = means - 3.0 * ses > bound + slack
    return MonitorReport(times, means, ses, bound, flags, cert.C, slack_coeff)


def check_C_conditions(interaction, sigma, cert, t_vals, x_points, y_points, initial_sample, C=None):
    """Certificate report for a delayed-interaction drift.

    Sub-reports (margins pass when <= 0 on the sample set):
      generator:       generator of V driven by beta = sigma . beta_kernel
      kernel-bound:    |beta_kernel| - C phi(t+s, y) eta(t+s, x)
      weight-vs-V:     eta^4(t, y) + phi^2(t, y) - C V(y)
      initial-moment:  empirical mean of V over the initial sample (finiteness)

    Paths are sampled through their time-t point only; s runs over the
    delay atoms of the interaction.
    """
    C = cert.C if C is None else float(C)
    if cert.weight is None or cert.eta is None:
        raise ValueError("certificate must carry weight and eta maps for this check")
    t_vals = np.atleast_1d(np.asarray(t_vals, dtype=float))
    X = _as_points(x_points)
    Y = _as_points(y_points)
    s_vals = np.array([s for s, _ in interaction.kappa])

    # product sample set over (x, y) per (t, s) group, scanned in fixed order
    IX, IY = np.meshgrid(np.arange(len(X)), np.arange(len(Y)), indexing="ij")
    Xf, Yf = X[IX.reshape(-1)], Y[IY.reshape(-1)]
    m = len(Xf)

    gen_margins, ker_margins, args = [], [], {"t": [], "s": [], "x": [], "y": []}
    for t in t_vals:
        for s in s_vals:
            def run(a, b, t=t, s=s):
                Xc, Yc = Xf[a:b], Yf[a:b]
                wloc = StaticPathWindow(Xc, t)
                bt = np.asarray(interaction.beta(t, s, wloc, Yc), dtype=float)
                bt = np.broadcast_to(bt, (len(Xc), interaction.d1))
                sg = sigma(t, wloc)
                if sg.ndim == 2:
                    beta_full = bt @ sg.T
                    sgb = np.broadcast_to(sg, (len(Xc), *sg.shape))
                else:
                    beta_full = np.einsum("nij,nj->ni", sg, bt)
                    sgb = sg
                gen = _generator_values(cert, beta_full, sgb, Xc, np.full(len(Xc), t))
                g_marg = gen - C * cert.V(Xc)
                phi_y = np.asarray(cert.weight(t + s, Yc), dtype=float)
                eta_x = np.asarray(cert.eta(t + s, Xc), dtype=float)
                k_marg = np.linalg.norm(bt, axis=-1) - C * phi_y * eta_x
                return g_marg, k_marg

            parts = parallel.map_chunks(run, m)
            gen_margins.append(np.concatenate([p[0] for p in parts]))
            ker_margins.append(np.concatenate([p[1] for p in parts]))
            args["t"].append(np.full(m, t))
            args["s"].append(np.full(m, s))
            args["x"].append(Xf[:, 0] if Xf.shape[1] == 1 else Xf)
            args["y"].append(Yf[:, 0] if Yf.shape[1] == 1 else Yf)

    flat_args = {k: np.concatenate(v) for k, v in args.items()}
    gen_cond = condition_from_margins("generator", np.concatenate(gen_margins), flat_args)
    ker_cond = condition_from_margins("kernel-bound", np.concatenate(ker_margins), flat_args)

    # weight-vs-V margin over (t, y)
    wv_margins, wv_args = [], {"t": [], "y": []}
    for t in t_vals:
        eta_y = np.asarray(cert.eta(t, Y), dtype=float)
        phi_y = np.asarray(cert.weight(t, Y), dtype=float)
        wv_margins.append(eta_y**4 + phi_y**2 - C * cert.V(Y))
        wv_args["t"].append(np.full(len(Y), t))
        wv_args["y"].append(Y[:, 0] if Y.shape[1] == 1 else Y)
    wv_cond = condition_from_margins(
        "weight-vs-V",
        np.concatenate(wv_margins),
        {k: np.concatenate(v) for k, v in wv_args.items()},
    )

    v0 = np.asarray(cert.V(_as_points(initial_sample)), dtype=float)
    mean_v0 = float(np.mean(v0))
    init_cond = ConditionReport(
        "initial-moment",
        worst_margin=-1.0 if np.isfinite(mean_v0) else np.inf,
        argmax={},
        passed=bool(np.isfinite(mean_v0)),
    )

    return CheckReport(
        "certificate-conditions",
        [gen_cond, ker_cond, wv_cond, init_cond],
        extras={"C": C, "initial_mean_V": mean_v0},
    )
