"""L-BFGS with strong-Wolfe line search, epoch training, experiment runner.

The optimizer follows the reference semantics of the widely used
deep-learning implementation: a bounded number of inner iterations and
function evaluations per call, curvature history that persists across calls
(so warm-started epochs keep their quasi-Newton memory), the learning rate
applied to the very first trial step only, and cubic-interpolation
bracketing for the strong Wolfe conditions.  One "epoch" of training is one
such call; a training run chains 50 of them from a seeded uniform
initialization.
"""

from __future__ import annotations

import dataclasses
import time

import numpy as np

from .autodiff import DEFAULT_STENCIL
from .pde import loss_and_gradient, mae
from .simulator import Circuit

__all__ = [
    "LbfgsConfig", "DEFAULT_LBFGS", "LbfgsState", "MinimizeReport",
    "lbfgs_minimize", "TrainRun", "train", "ExperimentResult",
    "run_experiment",
]

_EPOCHS = 50


@dataclasses.dataclass(frozen=True)
class LbfgsConfig:
    lr: float = 0.7
    max_iter: int = 20
    max_eval: int = 25
    tolerance_grad: float = 1e-7
    tolerance_change: float = 1e-9
    history_size: int = 100
    c1: float = 1e-4
    c2: float = 0.9
    max_ls: int = 25

    def __post_init__(self):
        if not (0.0 < self.c1 < self.c2 < 1.0):
            raise ValueError("need 0 < c1 < c2 < 1")
        for field in ("lr", "tolerance_grad", "tolerance_change"):
            if not getattr(self, field) > 0:
                raise ValueError(f"{field} must be positive")


DEFAULT_LBFGS = LbfgsConfig()


class LbfgsState:
    """Curvature memory carried across warm-started calls."""

    def __init__(self):
        self.s_list = []
        self.y_list = []
        self.rho_list = []
        self.h_diag = 1.0
        self.n_iter = 0  # lifetime iteration counter

    def push(self, s, y, history_size):
        ys = float(np.dot(y, s))
        if ys <= 1e-10:  # skip non-positive curvature pairs
            return False
        if len(self.s_list) >= history_size:
            self.s_list.pop(0)
            self.y_list.pop(0)
            self.rho_list.pop(0)
        self.s_list.append(s)
        self.y_list.append(y)
        self.rho_list.append(1.0 / ys)
        self.h_diag = ys / float(np.dot(y, y))
        return True

    def direction(self, grad):
        q = -grad
        alphas = []
        for s, y, rho in zip(reversed(self.s_list), reversed(self.y_list),
                             reversed(self.rho_list)):
            a = rho * np.dot(s, q)
            alphas.append(a)
            q = q - a * y
        r = self.h_diag * q
        for (s, y, rho), a in zip(zip(self.s_list, self.y_list,
                                      self.rho_list), reversed(alphas)):
            b = rho * np.dot(y, r)
            r = r + (a - b) * s
        return r


@dataclasses.dataclass
class MinimizeReport:
    losses: list
    n_iterations: int
    n_evals: int
    status: str


def _cubic_interpolate(x1, f1, g1, x2, f2, g2, bounds=None):
    if bounds is not None:
        xmin_bound, xmax_bound = bounds
    else:
        xmin_bound, xmax_bound = (x1, x2) if x1 <= x2 else (x2, x1)
    d1 = g1 + g2 - 3 * (f1 - f2) / (x1 - x2)
    d2_square = d1 * d1 - g1 * g2
    if d2_square >= 0:
        d2 = np.sqrt(d2_square)
        with np.errstate(divide="ignore", invalid="ignore"):
            if x1 <= x2:
                min_pos = x2 - (x2 - x1) * ((g2 + d2 - d1)
                                            / (g2 - g1 + 2 * d2))
            else:
                min_pos = x1 - (x1 - x2) * ((g1 + d2 - d1)
                                            / (g1 - g2 + 2 * d2))
        if np.isfinite(min_pos):
            return min(max(min_pos, xmin_bound), xmax_bound)
    return (xmin_bound + xmax_bound) / 2.0


def _strong_wolfe(fn, x, t, d, f0, g0, gtd0, cfg):
    """Bracket + zoom line search; returns (f, g, t, evals, both_conditions)."""
    d_norm = np.abs(d).max()
    f_new, g_new = fn(x + t * d)
    evals = 1
    gtd_new = float(np.dot(g_new, d))

    t_prev, f_prev, g_prev, gtd_prev = 0.0, f0, g0, gtd0
    bracket = None
    done = False
    ls_iter = 0
    while ls_iter < cfg.max_ls:
        if f_new > f0 + cfg.c1 * t * gtd0 or (ls_iter > 1 and f_new >= f_prev):
            bracket = [t_prev, t]
            bracket_f = [f_prev, f_new]
            bracket_g = [g_prev, g_new]
            bracket_gtd = [gtd_prev, gtd_new]
            break
        if abs(gtd_new) <= -cfg.c2 * gtd0:
            return f_new, g_new, t, evals, True
        if gtd_new >= 0:
            bracket = [t_prev, t]
            bracket_f = [f_prev, f_new]
            bracket_g = [g_prev, g_new]
            bracket_gtd = [gtd_prev, gtd_new]
            break
        min_step = t + 0.01 * (t - t_prev)
        max_step = t * 10.0
        tmp = t
        t = _cubic_interpolate(t_prev, f_prev, gtd_prev, t, f_new, gtd_new,
                               bounds=(min_step, max_step))
        t_prev, f_prev, g_prev, gtd_prev = tmp, f_new, g_new, gtd_new
        f_new, g_new = fn(x + t * d)
        evals += 1
        gtd_new = float(np.dot(g_new, d))
        ls_iter += 1
    if bracket is None:  # ran out of extrapolation steps
        return f_new, g_new, t, evals, False

    # zoom: shrink the bracket until the curvature condition holds
    insuf_progress = False
    low, high = (0, 1) if bracket_f[0] <= bracket_f[1] else (1, 0)
    while not done and ls_iter < cfg.max_ls:
        if abs(bracket[1] - bracket[0]) * d_norm < cfg.tolerance_change:
            break
        t = _cubic_interpolate(bracket[0], bracket_f[0], bracket_gtd[0],
                               bracket[1], bracket_f[1], bracket_gtd[1])
        eps = 0.1 * (max(bracket) - min(bracket))
        if min(max(bracket) - t, t - min(bracket)) < eps:
            if insuf_progress or t >= max(bracket) or t <= min(bracket):
                t = (max(bracket) - eps
                     if abs(t - max(bracket)) < abs(t - min(bracket))
                     else min(bracket) + eps)
                insuf_progress = False
            else:
                insuf_progress = True
        else:
            insuf_progress = False
        f_new, g_new = fn(x + t * d)
        evals += 1
        gtd_new = float(np.dot(g_new, d))
        ls_iter += 1
        if f_new > f0 + cfg.c1 * t * gtd0 or f_new >= bracket_f[low]:
            bracket[high] = t
            bracket_f[high] = f_new
            bracket_g[high] = g_new
            bracket_gtd[high] = gtd_new
            low, high = (0, 1) if bracket_f[0] <= bracket_f[1] else (1, 0)
        else:
            if abs(gtd_new) <= -cfg.c2 * gtd0:
                done = True
            elif gtd_new * (bracket[high] - bracket[low]) >= 0:
                bracket[high] = bracket[low]
                bracket_f[high] = bracket_f[low]
                bracket_g[high] = bracket_g[low]
                bracket_gtd[high] = bracket_gtd[low]
            bracket[low] = t
            bracket_f[low] = f_new
            bracket_g[low] = g_new
            bracket_gtd[low] = gtd_new
    if done:
        return f_new, g_new, t, evals, True
    return bracket_f[low], bracket_g[low], bracket[low], evals, False


def lbfgs_minimize(value_and_grad, theta0, cfg=DEFAULT_LBFGS, state=None):
    """One bounded L-BFGS call.  ``value_and_grad(theta) -> (f, g)``.

    Returns (theta, report).  Pass the same ``state`` across calls to keep
    the curvature history (warm-started epochs)."""
    state = LbfgsState() if state is None else state
    theta = np.asarray(theta0, dtype=float).copy()

    def fn(x):
        f, g = value_and_grad(x)
        return float(f), np.asarray(g, dtype=float)

    f, g = fn(theta)
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the starting point")
    evals = 1
    losses = [f]
    if np.abs(g).max() <= cfg.tolerance_grad:
        return theta, MinimizeReport(losses, 0, evals, "converged_grad")

    status = None
    n_local = 0
    while n_local < cfg.max_iter and evals < cfg.max_eval:
        n_local += 1
        state.n_iter += 1
        d = state.direction(g)
        gtd = float(np.dot(g, d))
        if gtd > -cfg.tolerance_change:
            status = "converged_change"
            break
        # the learning rate scales only the very first trial step, before
        # any curvature information exists; later trials start at 1
        if state.n_iter == 1:
            t0 = min(1.0, 1.0 / np.abs(g).sum()) * cfg.lr
        else:
            t0 = 1.0
        f_new, g_new, t, ls_evals, ok = _strong_wolfe(
            fn, theta, t0, d, f, g, gtd, cfg)
        evals += ls_evals
        if not ok or not np.isfinite(f_new):
            status = "line_search_failed"  # keep the pre-step iterate
            break
        # both Wolfe conditions hold for every accepted step
        slack = 1e-12 * max(1.0, abs(f))
        assert f_new <= f + cfg.c1 * t * gtd + slack
        assert abs(np.dot(g_new, d)) <= -cfg.c2 * gtd + 1e-12 * max(1.0, -gtd)
        s = t * d
        theta = theta + s
        state.push(s, g_new - g, cfg.history_size)
        delta_f = abs(f_new - f)
        f, g = f_new, g_new
        losses.append(f)
        if np.abs(g).max() <= cfg.tolerance_grad:
            status = "converged_grad"
            break
        if np.abs(s).max() <= cfg.tolerance_change:
            status = "converged_change"
            break
        if delta_f < cfg.tolerance_change:
            status = "converged_change"
            break
    if status is None:
        status = "max_iter" if n_local >= cfg.max_iter else "max_eval"
    return theta, MinimizeReport(losses, n_local, evals, status)


# ---------------------------------------------------------------------------
# training


class _CircuitModel:
    """Adapter giving a Circuit the training interface (n_params,
    loss_and_gradient, for_eval)."""

    def __init__(self, circuit):
        self.circuit = circuit
        self.n_params = circuit.n_params
        self.for_eval = circuit

    def loss_and_gradient(self, theta, prob, cfg):
        return loss_and_gradient(self.circuit, theta, prob, cfg)


def _adapt(model):
    if isinstance(model, Circuit):
        return _CircuitModel(model)
    if hasattr(model, "n_params") and hasattr(model, "loss_and_gradient"):
        return model
    raise TypeError(
        "model must be a Circuit or expose n_params/loss_and_gradient")


@dataclasses.dataclass(eq=False)
class TrainRun:
    seed: int
    theta_init: np.ndarray
    theta_final: np.ndarray
    loss_history: list  # total per epoch (after the epoch's call)
    part_history: list  # {'res','init','bnd'} per epoch
    mae_history: list
    statuses: list
    final_loss: float
    final_mae: float
    wall_time: float
    failed: bool = False


def train(model, prob, opt_cfg=DEFAULT_LBFGS, stencil_cfg=DEFAULT_STENCIL,
          seed=0, epochs=_EPOCHS, theta_init=None):
    """Train a model on a PDE problem: seeded uniform [0, 2pi) init, then
    ``epochs`` warm-started bounded L-BFGS calls sharing curvature memory."""
    adapted = _adapt(model)
    for_eval = getattr(adapted, "for_eval", adapted)
    rng = np.random.default_rng(seed)
    if theta_init is None:
        if hasattr(adapted, "init_theta"):
            theta = adapted.init_theta(rng)
        else:
            theta = rng.uniform(0.0, 2.0 * np.pi, adapted.n_params)
    else:
        theta = np.asarray(theta_init, dtype=float).copy()
        if theta.shape != (adapted.n_params,):
            raise ValueError("theta_init has the wrong shape")
    theta_init_record = theta.copy()

    last_parts = {}

    def value_and_grad(th):
        nonlocal last_parts
        total, parts, grad = adapted.loss_and_gradient(th, prob, stencil_cfg)
        last_parts = parts
        return total, grad

    t_start = time.perf_counter()
    state = LbfgsState()
    loss_history, part_history, mae_history, statuses = [], [], [], []
    failed = False
    for _ in range(epochs):
        try:
            theta_new, report = lbfgs_minimize(
                value_and_grad, theta, opt_cfg, state=state)
        except Exception:
            failed = True
            break
        if not np.isfinite(report.losses[-1]):
            failed = True
            break
        theta = theta_new
        loss_history.append(report.losses[-1])
        part_history.append(dict(last_parts))
        mae_history.append(mae(for_eval, theta, prob))
        statuses.append(report.status)
    wall = time.perf_counter() - t_start
    return TrainRun(
        seed=seed, theta_init=theta_init_record, theta_final=theta,
        loss_history=loss_history, part_history=part_history,
        mae_history=mae_history, statuses=statuses,
        final_loss=loss_history[-1] if loss_history else np.nan,
        final_mae=mae_history[-1] if mae_history else np.nan,
        wall_time=wall, failed=failed)


@dataclasses.dataclass(eq=False)
class ExperimentResult:
    label: str
    problem: str
    p: int
    n_params: int
    runs: list
    mean_mae: float
    median_mae: float
    min_mae: float
    n_failed: int


def _aggregate(label, problem_name, p, n_params, runs):
    good = [r.final_mae for r in runs if not r.failed]
    n_failed = len(runs) - len(good)
    if good:
        mean_v, med_v, min_v = (float(np.mean(good)), float(np.median(good)),
                                float(np.min(good)))
    else:
        mean_v = med_v = min_v = np.nan
    return ExperimentResult(label, problem_name, p, n_params, runs,
                            mean_v, med_v, min_v, n_failed)


def run_experiment(model_factory, prob, p_values, label, seeds=10,
                   opt_cfg=DEFAULT_LBFGS, stencil_cfg=DEFAULT_STENCIL,
                   epochs=_EPOCHS):
    """Train ``model_factory(p)`` for every p in the grid over several seeds.

    ``seeds`` is an int (uses 0..seeds-1) or an explicit iterable.  Failed
    runs are kept in ``runs`` and counted but left out of the aggregates."""
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    results = []
    for p in p_values:
        model = model_factory(p)
        adapted = _adapt(model)
        runs = [train(model, prob, opt_cfg, stencil_cfg, seed=s,
                      epochs=epochs) for s in seed_list]
        results.append(_aggregate(label, prob.name, p, adapted.n_params, runs))
    return results
