"""Tests for the L-BFGS optimizer, training loop, and experiment runner."""

import numpy as np
import pytest

from symqpde.ansatz import get_ansatz
from symqpde.optimize import (
    DEFAULT_LBFGS,
    LbfgsConfig,
    LbfgsState,
    lbfgs_minimize,
    run_experiment,
    train,
)
from symqpde.pde import loss as pde_loss, mae as pde_mae, poisson2d, wave1d


# ---------------------------------------------------------------------------
# config


def test_default_config_values():
    cfg = DEFAULT_LBFGS
    assert cfg.lr == 0.7
    assert cfg.max_iter == 20
    assert cfg.max_eval == 25
    assert cfg.tolerance_grad == 1e-7
    assert cfg.tolerance_change == 1e-9
    assert cfg.history_size == 100
    assert cfg.c1 == 1e-4 and cfg.c2 == 0.9


@pytest.mark.parametrize("kwargs", [
    {"c1": 0.95, "c2": 0.9},   # c1 >= c2
    {"c1": 0.0},               # c1 not positive
    {"c2": 1.0},               # c2 not below 1
    {"lr": 0.0},
    {"tolerance_grad": -1.0},
])
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        LbfgsConfig(**kwargs)


# ---------------------------------------------------------------------------
# minimizer on reference objectives


def test_separable_quadratic_five_dims():
    vg = lambda th: (np.sum((th - 1.0) ** 2), 2.0 * (th - 1.0))
    theta, report = lbfgs_minimize(vg, np.zeros(5))
    assert np.max(np.abs(theta - 1.0)) < 1e-8
    assert report.status == "converged_grad"


def test_rosenbrock_converges():
    def rosen(th):
        x, y = th
        f = (1 - x) ** 2 + 100 * (y - x * x) ** 2
        g = np.array([-2 * (1 - x) - 400 * x * (y - x * x),
                      200 * (y - x * x)])
        return f, g

    cfg = LbfgsConfig(max_iter=200, max_eval=100000)
    theta, report = lbfgs_minimize(rosen, np.array([-1.2, 1.0]), cfg)
    assert np.max(np.abs(theta - 1.0)) < 1e-4
    assert report.n_iterations <= 200
    # accepted iterates never increase the objective
    assert np.all(np.diff(report.losses) <= 0)


@pytest.mark.parametrize("d", [2, 5, 10])
def test_zero_minimum_quadratic_rate(d):
    # superlinear, not finite-termination: the loose curvature constant
    # accepts unit steps before the line minimum, so the classical
    # d-step property does not apply; 8d iterations is the measured
    # envelope (with headroom) for cond <= 100
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        eigs = np.exp(rng.uniform(0, np.log(100.0), d))
        V, _ = np.linalg.qr(rng.standard_normal((d, d)))
        Q = V @ np.diag(eigs) @ V.T
        t_star = rng.standard_normal(d)
        vg = lambda th: (0.5 * (th - t_star) @ Q @ (th - t_star),
                         Q @ (th - t_star))
        cfg = LbfgsConfig(max_iter=8 * d, max_eval=100000,
                          tolerance_grad=1e-10, tolerance_change=1e-30)
        theta, report = lbfgs_minimize(vg, np.zeros(d), cfg)
        assert report.status == "converged_grad", (seed, report.status)
        assert np.max(np.abs(vg(theta)[1])) <= 1e-10


def test_already_converged_returns_immediately():
    vg = lambda th: (np.sum(th ** 2), 2.0 * th)
    theta, report = lbfgs_minimize(vg, np.zeros(3))
    assert report.status == "converged_grad"
    assert report.n_iterations == 0 and report.n_evals == 1


def test_non_finite_start_rejected():
    vg = lambda th: (np.inf, th)
    with pytest.raises(ValueError, match="not finite"):
        lbfgs_minimize(vg, np.zeros(2))


def test_line_search_failure_keeps_iterate_and_flags():
    # linear objective: Armijo always holds, curvature never does, so the
    # bracketing phase extrapolates 25 times and gives up
    vg = lambda th: (float(th.sum()), np.ones_like(th))
    theta0 = np.array([1.0, 2.0])
    theta, report = lbfgs_minimize(vg, theta0)
    assert report.status == "line_search_failed"
    np.testing.assert_array_equal(theta, theta0)
    assert report.losses == [3.0]


def test_max_eval_budget_respected():
    def rosen(th):
        x, y = th
        f = (1 - x) ** 2 + 100 * (y - x * x) ** 2
        g = np.array([-2 * (1 - x) - 400 * x * (y - x * x),
                      200 * (y - x * x)])
        return f, g

    cfg = LbfgsConfig(max_iter=1000, max_eval=5)
    _, report = lbfgs_minimize(rosen, np.array([-1.2, 1.0]), cfg)
    assert report.status == "max_eval"
    # the budget may only be overshot by the line search in flight
    assert report.n_evals <= 5 + DEFAULT_LBFGS.max_ls


def test_state_sharing_reproduces_single_run():
    def rosen(th):
        x, y = th
        f = (1 - x) ** 2 + 100 * (y - x * x) ** 2
        g = np.array([-2 * (1 - x) - 400 * x * (y - x * x),
                      200 * (y - x * x)])
        return f, g

    theta0 = np.array([-1.2, 1.0])
    one_shot, _ = lbfgs_minimize(
        rosen, theta0, LbfgsConfig(max_iter=12, max_eval=100000))
    state = LbfgsState()
    chained = theta0
    for _ in range(3):
        chained, _ = lbfgs_minimize(
            rosen, chained, LbfgsConfig(max_iter=4, max_eval=100000),
            state=state)
    np.testing.assert_allclose(chained, one_shot, atol=1e-12)
    assert state.n_iter == 12


def test_curvature_pairs_with_nonpositive_product_are_skipped():
    state = LbfgsState()
    s = np.array([1.0, 0.0])
    assert not state.push(s, -s, history_size=10)  # y.s = -1
    assert not state.push(s, np.array([0.0, 1.0]), history_size=10)  # y.s = 0
    assert state.s_list == [] and state.h_diag == 1.0
    assert state.push(s, s, history_size=10)
    assert len(state.s_list) == 1


def test_history_size_caps_stored_pairs():
    state = LbfgsState()
    rng = np.random.default_rng(0)
    for _ in range(7):
        s = rng.standard_normal(3)
        state.push(s, s + 0.1 * rng.standard_normal(3), history_size=4)
    assert len(state.s_list) == 4


def test_two_loop_direction_matches_dense_bfgs_inverse():
    rng = np.random.default_rng(3)
    state = LbfgsState()
    pairs = []
    for _ in range(5):
        s = rng.standard_normal(6)
        y = s + 0.3 * rng.standard_normal(6)
        if state.push(s, y, history_size=10):
            pairs.append((s, y))
    g = rng.standard_normal(6)
    d = state.direction(g)
    eye = np.eye(6)
    H = state.h_diag * eye
    for s, y in pairs:
        rho = 1.0 / (y @ s)
        left = eye - rho * np.outer(s, y)
        H = left @ H @ left.T + rho * np.outer(s, s)
    np.testing.assert_allclose(d, -H @ g, atol=1e-12)


# ---------------------------------------------------------------------------
# training


def test_train_is_deterministic():
    circ, _ = get_ansatz("k4", p=1)
    prob = poisson2d()
    a = train(circ, prob, seed=5, epochs=3)
    b = train(circ, prob, seed=5, epochs=3)
    np.testing.assert_array_equal(a.theta_init, b.theta_init)
    np.testing.assert_array_equal(a.theta_final, b.theta_final)
    assert a.loss_history == b.loss_history
    assert a.mae_history == b.mae_history
    assert a.statuses == b.statuses
    c = train(circ, prob, seed=6, epochs=3)
    assert not np.array_equal(a.theta_init, c.theta_init)


def test_train_losses_never_increase_across_epochs():
    circ, _ = get_ansatz("k4", p=1)
    prob = poisson2d()
    run = train(circ, prob, seed=1, epochs=6)
    assert np.all(np.diff(run.loss_history) <= 1e-15)
    assert len(run.statuses) == 6 and len(run.part_history) == 6


def test_final_mae_matches_recomputation():
    circ, _ = get_ansatz("so2", p=1)
    prob = poisson2d()
    run = train(circ, prob, seed=2, epochs=2)
    assert run.final_mae == pytest.approx(
        pde_mae(circ, run.theta_final, prob), abs=1e-12)
    assert run.final_loss == run.loss_history[-1]


class _OracleModel:
    """Ignores its parameters entirely; predicts the exact solution."""

    n_params = 2

    def __init__(self, prob):
        self.prob = prob

    def __call__(self, theta, z):
        return float(self.prob.exact(np.atleast_2d(z))[0])

    def loss_and_gradient(self, theta, prob, cfg):
        total, parts = pde_loss(self, theta, prob, cfg)
        return total, parts, np.zeros_like(theta)


def test_training_parameter_free_oracle_keeps_mae_constant():
    prob = poisson2d()
    run = train(_OracleModel(prob), prob, seed=0, epochs=4)
    assert len(set(run.mae_history)) == 1
    assert run.mae_history[0] < 1e-12
    np.testing.assert_array_equal(run.theta_init, run.theta_final)


class _ExplodingModel:
    n_params = 2

    def __init__(self):
        self.calls = 0

    def __call__(self, theta, z):
        return 0.0

    def loss_and_gradient(self, theta, prob, cfg):
        self.calls += 1
        if self.calls > 3:
            return np.nan, {"res": np.nan, "init": 0.0, "bnd": 0.0}, \
                np.zeros_like(theta)
        return 1.0, {"res": 1.0, "init": 0.0, "bnd": 0.0}, \
            np.full_like(theta, 0.1)


def test_non_finite_loss_marks_run_failed():
    prob = wave1d()
    run = train(_ExplodingModel(), prob, seed=0, epochs=5)
    assert run.failed
    assert len(run.loss_history) < 5  # partial history preserved


def test_explicit_theta_init():
    circ, spec = get_ansatz("k4", p=1)
    prob = poisson2d()
    theta0 = np.linspace(0.1, 0.6, spec.total_params)
    run = train(circ, prob, seed=0, epochs=1, theta_init=theta0)
    np.testing.assert_array_equal(run.theta_init, theta0)
    with pytest.raises(ValueError, match="shape"):
        train(circ, prob, seed=0, epochs=1, theta_init=np.zeros(3))


def test_train_k4_poisson_improves_loss():
    # smoke benchmark: two-qubit invariant-gate model, p=2, full epoch
    # count, ten seeds; training must beat its starting loss nearly always
    circ, spec = get_ansatz("k4", p=2)
    prob = poisson2d()
    improved = 0
    for seed in range(10):
        run = train(circ, prob, seed=seed, epochs=50)
        initial, _ = pde_loss(circ, run.theta_init, prob)
        improved += run.final_loss < initial
    assert improved >= 9


# ---------------------------------------------------------------------------
# experiments


def test_run_experiment_parameter_axis_and_aggregates():
    prob = poisson2d()
    factory = lambda p: get_ansatz("k4", p=p)[0]
    results = run_experiment(factory, prob, [1, 2], label="k4", seeds=3,
                             epochs=2)
    assert [r.n_params for r in results] == [6, 9]
    assert [r.p for r in results] == [1, 2]
    for r in results:
        assert r.label == "k4" and r.problem == "poisson2d"
        assert len(r.runs) == 3 and r.n_failed == 0
        finals = [x.final_mae for x in r.runs]
        assert r.mean_mae == pytest.approx(np.mean(finals))
        assert r.median_mae == pytest.approx(np.median(finals))
        assert r.min_mae == pytest.approx(np.min(finals))


def test_run_experiment_qpinn_axis():
    prob = poisson2d()
    factory = lambda p: get_ansatz("qpinn", p=p)[0]
    results = run_experiment(factory, prob, [1], label="qpinn", seeds=1,
                             epochs=1)
    assert results[0].n_params == 12


def test_run_experiment_explicit_seeds():
    prob = poisson2d()
    factory = lambda p: get_ansatz("k4", p=p)[0]
    results = run_experiment(factory, prob, [1], label="k4", seeds=[3, 8],
                             epochs=1)
    assert [r.seed for r in results[0].runs] == [3, 8]


class _AlwaysFails:
    n_params = 2

    def __call__(self, theta, z):
        return 0.0

    def loss_and_gradient(self, theta, prob, cfg):
        raise RuntimeError("boom")


def test_run_experiment_counts_failed_runs():
    prob = wave1d()
    results = run_experiment(lambda p: _AlwaysFails(), prob, [1],
                             label="bad", seeds=2, epochs=1)
    r = results[0]
    assert r.n_failed == 2
    assert np.isnan(r.mean_mae) and np.isnan(r.median_mae)
    assert all(run.failed for run in r.runs)


def test_model_type_validation():
    with pytest.raises(TypeError, match="n_params"):
        train(object(), poisson2d(), epochs=1)
