import math

import numpy as np
import pytest

from mfsde.coefficients import (
    DispersionSpec,
    FactoredDriftSpec,
    PairwiseMeanFieldSpec,
    StaticPathWindow,
    check_example26_case1,
    check_example26_case2,
    check_H_growth,
    check_nondegeneracy,
    eval_drift_interaction,
    eval_pairwise_mean_field,
    make_coefficients,
    smallest_passing_C,
)
from mfsde.measure import DiscreteSignedMeasure, MeasureFlow


class _V:
    def __init__(self, fn):
        self.V = fn


def atom_flow(slices, tau, dt):
    """Trajectory-like flow from explicit atom lists per time."""
    times = np.array([-tau + k * dt for k in range(len(slices))])
    measures = [DiscreteSignedMeasure(s, np.full(len(s), 1 / len(s))) for s in slices]
    return MeasureFlow.from_measures(times, measures, tau, times[-1])


# --- delayed interaction drift ------------------------------------------------


def test_interaction_zero_kernel():
    cs = make_coefficients("delayed-mean")
    zero = type(cs.drift)(
        beta=lambda t, s, w, y: np.zeros_like(y),
        kappa=((0.0, 1.0),),
        tau=0.0,
        mean_beta=None,
    )
    flow = atom_flow([[1.0, 2.0, 3.0]], 0.0, 1.0)
    window = StaticPathWindow([[0.0]])
    out = eval_drift_interaction(zero, cs.dispersion, 0.0, window, flow)
    assert np.allclose(out, 0.0)


def test_interaction_mean_at_zero_delay():
    cs = make_coefficients("delayed-mean")  # beta = y, kappa = delta_0, sigma = 1
    flow = atom_flow([[1.0, 2.0, 3.0]], 0.0, 1.0)
    window = StaticPathWindow([[0.0]])
    out = eval_drift_interaction(cs.drift, cs.dispersion, 0.0, window, flow)
    assert np.allclose(out, [[2.0]])


def test_interaction_two_atom_kappa_matches_double_sum():
    tau = 0.5
    cs = make_coefficients("delayed-mean", kappa="0:0.5,-0.5:0.5", tau=tau)
    past = [4.0, 6.0, 8.0]
    now = [1.0, 2.0, 3.0]
    flow = atom_flow([past, now], tau, tau)
    window = StaticPathWindow([[0.0], [1.0]])
    out = eval_drift_interaction(cs.drift, cs.dispersion, 0.0, window, flow)
    # independent brute-force double sum over kappa atoms and flow atoms
    expect = math.fsum(
        0.5 * (1 / 3) * y for y in now
    ) + math.fsum(0.5 * (1 / 3) * y for y in past)
    assert np.allclose(out, expect)
    assert expect == (np.mean(now) + np.mean(past)) / 2


def test_interaction_missing_slice_names_it():
    cs = make_coefficients("delayed-mean", kappa="-0.5:1.0", tau=0.5)
    flow = atom_flow([[1.0]], 0.0, 1.0)  # only covers t = 0
    window = StaticPathWindow([[0.0]])
    with pytest.raises(Exception, match="at or below"):
        eval_drift_interaction(cs.drift, cs.dispersion, 0.0, window, flow)


def test_interaction_linear_in_flow():
    cs = make_coefficients("delayed-mean")
    a = atom_flow([[0.0, 2.0]], 0.0, 1.0)
    b = atom_flow([[10.0, 14.0]], 0.0, 1.0)
    mix_atoms = DiscreteSignedMeasure([0.0, 2.0, 10.0, 14.0], [0.25, 0.25, 0.25, 0.25])
    mix = MeasureFlow.from_measures(np.array([0.0]), [mix_atoms], 0.0, 0.0)
    window = StaticPathWindow([[0.0]])
    va = eval_drift_interaction(cs.drift, cs.dispersion, 0.0, window, a)
    vb = eval_drift_interaction(cs.drift, cs.dispersion, 0.0, window, b)
    vmix = eval_drift_interaction(cs.drift, cs.dispersion, 0.0, window, mix)
    assert np.allclose(vmix, 0.5 * (va + vb))


# --- pairwise mean field ------------------------------------------------------


def test_pairwise_attraction_to_mean():
    spec = PairwiseMeanFieldSpec(
        b=lambda t, X, Y: Y - X, sigma=lambda t, X, Y: np.array([[1.0]])
    )
    members = np.array([[0.0], [1.0], [5.0]])
    drift, disp = eval_pairwise_mean_field(spec, 0.0, [[1.0]], members)
    assert np.allclose(drift, [[2.0 - 1.0]])
    assert np.allclose(disp, [[1.0]])


def test_pairwise_constant_sigma():
    mat = np.array([[2.0, 0.5]])
    spec = PairwiseMeanFieldSpec(
        b=lambda t, X, Y: np.zeros(np.broadcast_shapes(X.shape, Y.shape)),
        sigma=lambda t, X, Y: mat,
        d=1,
        d1=2,
    )
    _, disp = eval_pairwise_mean_field(spec, 0.0, [[0.0]], np.zeros((4, 1)))
    assert np.allclose(np.broadcast_to(disp, (1, 1, 2)), mat)


def test_pairwise_sin_matches_direct_sum():
    rng = np.random.default_rng(100)
    members = rng.normal(size=(100, 1))
    x = rng.normal(size=(7, 1))
    spec = make_coefficients("sin-product").drift
    drift, _ = eval_pairwise_mean_field(spec, 0.0, x, members)
    # independent direct-summation oracle
    for i, xi in enumerate(x[:, 0]):
        oracle = math.fsum(math.sin(xi * yj) for yj in members[:, 0]) / len(members)
        assert drift[i, 0] == pytest.approx(oracle, abs=1e-14)


def test_pairwise_single_member_is_pointwise():
    spec = make_coefficients("sin-product").drift
    y = np.array([[0.7]])
    drift, _ = eval_pairwise_mean_field(spec, 0.0, [[1.3]], y)
    assert drift[0, 0] == pytest.approx(np.sin(1.3 * 0.7), rel=1e-15)


def test_pairwise_empty_ensemble_rejected():
    spec = make_coefficients("sign").drift
    with pytest.raises(ValueError, match="empty"):
        eval_pairwise_mean_field(spec, 0.0, [[0.0]], np.zeros((0, 1)))


def test_factored_identity_sigma_composition():
    disp = DispersionSpec(fn=lambda t, w: np.eye(1), d=1, d1=1)
    spec = FactoredDriftSpec(btilde=lambda t, w, flow: -w.state, sigma=disp)
    window = StaticPathWindow([[2.0], [-3.0]])
    out = spec.drift(0.0, window, None)
    assert np.allclose(out, -window.state)


# --- growth checkers ----------------------------------------------------------


GRID = np.arange(-5.0, 5.0 + 0.005, 0.01)


def test_case1_zero_coefficients_pass():
    cs = make_coefficients("zero")
    rep = check_example26_case1(cs.drift, alpha=2.0, q=3.0, C=1.0, t_vals=[0.0],
                                x_vals=GRID[::10], y_vals=GRID[::10])
    assert rep.passed
    assert rep.condition("dissipativity").worst_margin <= -1.0  # <= -C


def test_case1_ou_passes_with_C2():
    cs = make_coefficients("ou-attraction", theta=1.0, sigma=1.0)
    rep = check_example26_case1(cs.drift, alpha=2.0, q=3.0, C=2.0, t_vals=[0.0],
                                x_vals=GRID, y_vals=[0.0])
    assert rep.passed
    # dissipativity margin is x^2(-2x^2+1) - 2(1+x^4), maximal near x = 0
    m = rep.condition("dissipativity")
    assert m.worst_margin <= 0.0


def test_case1_cubic_fails_at_grid_edge():
    cs = make_coefficients("cubic", sigma=1.0)
    rep = check_example26_case1(cs.drift, alpha=2.0, q=3.0, C=10.0, t_vals=[0.0],
                                x_vals=GRID, y_vals=[0.0])
    diss = rep.condition("dissipativity")
    assert not diss.passed
    assert diss.worst_margin > 0
    assert abs(diss.argmax["x"]) == pytest.approx(5.0)


def test_case1_monotone_in_C():
    cs = make_coefficients("ou-attraction")
    base = check_example26_case1(cs.drift, 2.0, 3.0, 2.0, [0.0], GRID[::5], [0.0])
    assert base.passed
    higher = check_example26_case1(cs.drift, 2.0, 3.0, 5.0, [0.0], GRID[::5], [0.0])
    assert higher.passed


def test_case1_smallest_C_search():
    cs = make_coefficients("ou-attraction", theta=1.0, sigma=1.0)
    c_best, rep = smallest_passing_C(
        lambda C: check_example26_case1(cs.drift, 2.0, 3.0, C, [0.0], GRID, GRID[::20]),
        c_init=1.0,
    )
    assert rep.passed
    assert c_best is not None and c_best <= 2.0
    # bisection tightness: slightly smaller C must fail
    assert not check_example26_case1(
        cs.drift, 2.0, 3.0, c_best * (1 - 1e-4), [0.0], GRID, GRID[::20]
    ).passed


def test_case2_zero_pass_and_ou_sweep():
    zero = make_coefficients("zero")
    assert check_example26_case2(zero.drift, alpha=1.0, p=1.0, q=3.0, C=1.0,
                                 t_vals=[0.0], x_vals=GRID[::10], y_vals=[0.0]).passed
    ou = make_coefficients("ou-attraction")
    rep = check_example26_case2(ou.drift, alpha=1.0, p=1.0, q=3.0, C=4.0,
                                t_vals=[0.0], x_vals=GRID, y_vals=[0.0])
    assert rep.passed  # grid sweep decides; margins reported either way
    assert np.isfinite(rep.condition("dissipativity").worst_margin)


def test_case2_exponential_kernel_equality_counts():
    # kernel exp(|y|) with C = 1, alpha = 2, p = 1: margin hits 0 at x = 0
    spec = PairwiseMeanFieldSpec(
        b=lambda t, X, Y: np.exp(np.abs(Y)),
        sigma=lambda t, X, Y: np.array([[1.0]]),
        btilde=lambda t, X, Y: np.exp(np.abs(Y)),
    )
    rep = check_example26_case2(spec, alpha=2.0, p=1.0, q=3.0, C=1.0,
                                t_vals=[0.0], x_vals=[0.0], y_vals=GRID[::10])
    growth = rep.condition("kernel-growth")
    assert growth.passed
    assert growth.worst_margin == pytest.approx(0.0, abs=1e-9)


def test_H_growth_trivial_and_bounded():
    zero = make_coefficients("zero")
    rep = check_H_growth(zero.drift, _V(lambda y: 1.0 + np.sum(np.atleast_2d(y) ** 2, axis=-1)),
                         q=3.0, t_vals=[0.0], x_vals=GRID[::10], y_vals=GRID[::10])
    assert rep.passed

    spec = PairwiseMeanFieldSpec(
        b=lambda t, X, Y: np.tanh(X * Y),  # bounded by 1
        sigma=lambda t, X, Y: np.zeros((1, 1)),
    )
    V4 = _V(lambda y: 1.0 + np.sum(np.atleast_2d(y) ** 4, axis=-1))
    rep2 = check_H_growth(spec, V4, q=3.0, t_vals=[0.0], x_vals=GRID[::10], y_vals=GRID[::10])
    assert rep2.passed


def test_H_growth_product_kernel_grid_sweep():
    grid10 = np.arange(-10.0, 10.0 + 0.05, 0.1)
    spec = PairwiseMeanFieldSpec(
        b=lambda t, X, Y: X * Y,
        sigma=lambda t, X, Y: np.zeros((1, 1)),
    )
    V6 = _V(lambda y: 1.0 + np.sum(np.atleast_2d(y) ** 6, axis=-1))
    rep = check_H_growth(spec, V6, q=3.0, t_vals=[0.0], x_vals=grid10, y_vals=grid10)
    assert rep.passed


def test_nondegeneracy_identity_and_rank_deficient():
    ident = PairwiseMeanFieldSpec(
        b=lambda t, X, Y: np.zeros_like(X), sigma=lambda t, X, Y: np.eye(2), d=2, d1=2
    )
    rep = check_nondegeneracy(ident, R=2.0, t_vals=[0.0], n_points=5)
    assert rep.passed
    assert rep.extras["min_eigenvalue"] == pytest.approx(1.0)

    degenerate = PairwiseMeanFieldSpec(
        b=lambda t, X, Y: np.zeros_like(X),
        sigma=lambda t, X, Y: np.diag([1.0, 0.0]),
        d=2,
        d1=2,
    )
    rep2 = check_nondegeneracy(degenerate, R=2.0, t_vals=[0.0], n_points=5)
    assert not rep2.passed
    assert rep2.extras["min_eigenvalue"] == pytest.approx(0.0, abs=1e-12)


def test_nondegeneracy_symmetric_matrix():
    # sigma sigma^T = [[5,4],[4,5]] has eigenvalues 9 and 1
    mat = np.array([[2.0, 1.0], [1.0, 2.0]])
    spec = PairwiseMeanFieldSpec(
        b=lambda t, X, Y: np.zeros_like(X), sigma=lambda t, X, Y: mat, d=2, d1=2
    )
    rep = check_nondegeneracy(spec, R=1.0, t_vals=[0.0], n_points=3)
    assert rep.passed
    assert rep.extras["min_eigenvalue"] == pytest.approx(1.0, rel=1e-12)


def test_catalog_names_and_unknown():
    from mfsde.coefficients import catalog_names

    for name in ("zero", "constant", "linear-meanfield", "cubic", "sign",
                 "sin-product", "ou-attraction"):
        assert name in catalog_names()
    with pytest.raises(KeyError):
        make_coefficients("no-such-entry")


def test_interaction_path_dependent_kernel_chunked(monkeypatch):
    # kernel reads the path window (attraction toward each law atom);
    # force tiny member chunks to exercise the chunked accumulation
    from mfsde import coefficients as C

    monkeypatch.setattr(C, "_BLOCK", 8)
    inter = C.DelayedInteractionDrift(
        beta=lambda t, s, window, y: y - window.state[:, None, :],
        kappa=((0.0, 1.0),),
        tau=0.0,
    )
    disp = C.DispersionSpec(fn=lambda t, w: np.array([[1.0]]))
    atoms = np.linspace(-2.0, 3.0, 11)
    flow = atom_flow([atoms], 0.0, 1.0)
    states = np.array([[0.5], [-1.0], [2.0]])
    out = eval_drift_interaction(inter, disp, 0.0, StaticPathWindow(states), flow)
    expect = atoms.mean() - states
    assert np.allclose(out, expect, atol=1e-14)


def test_checker_argmax_in_two_dimensions():
    # drift grows along the first axis only; the argmax must report the
    # full 2-D sample point
    spec = PairwiseMeanFieldSpec(
        b=lambda t, X, Y: np.stack([X[..., 0] ** 3, np.zeros_like(X[..., 0])], axis=-1),
        sigma=lambda t, X, Y: np.zeros((2, 2)),
        btilde=lambda t, X, Y: np.stack(
            [X[..., 0] ** 3, np.zeros_like(X[..., 0])], axis=-1
        ),
        d=2,
        d1=2,
    )
    axis = np.linspace(-3.0, 3.0, 7)
    pts = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    rep = check_example26_case1(spec, alpha=2.0, q=3.0, C=1.0, t_vals=[0.0],
                                x_vals=pts, y_vals=pts[:1])
    diss = rep.condition("dissipativity")
    assert not diss.passed
    assert np.shape(diss.argmax["x"]) == (2,)
    assert abs(diss.argmax["x"][0]) == pytest.approx(3.0)
