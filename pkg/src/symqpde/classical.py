"""Classical baselines: a single-hidden-layer tanh network, and its
symmetry-invariant variant that averages the input over a finite group
before the hidden layer.

The invariant network replaces tanh(W1 x + b1) with the group mean
(1/|G|) sum_g tanh(W1 V_g x + b1), which makes the output exactly invariant
under the group at no cost in parameter count.  Input derivatives are
analytic (one hidden layer keeps them in closed form); parameter gradients
go through the shared central-difference machinery, so these models train
with the same loss and optimizer as the quantum circuits.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .autodiff import DEFAULT_STENCIL, param_gradient
from .pde import evaluate_terms
from .symmetry import CoordinateAction, k4_rep

__all__ = [
    "MlpParams", "SiPinnSpec", "mlp_forward", "sipinn_forward",
    "mlp_input_partials", "PinnModel", "SiPinnModel",
]


@dataclasses.dataclass(frozen=True, eq=False)
class MlpParams:
    """One hidden layer: output = w2 . tanh(W1 x + b1) + b2."""

    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def __post_init__(self):
        m, n = self.W1.shape
        if self.b1.shape != (m,) or self.w2.shape != (m,):
            raise ValueError("inconsistent hidden-layer shapes")

    @property
    def m(self):
        return self.W1.shape[0]

    @property
    def n(self):
        return self.W1.shape[1]

    def flatten(self):
        return np.concatenate(
            [self.W1.ravel(), self.b1, self.w2, [self.b2]])

    @classmethod
    def unflatten(cls, theta, m, n):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (n * m + 2 * m + 1,):
            raise ValueError(
                f"expected {n * m + 2 * m + 1} parameters, got {theta.shape}")
        W1 = theta[:n * m].reshape(m, n)
        b1 = theta[n * m:n * m + m]
        w2 = theta[n * m + m:n * m + 2 * m]
        return cls(W1, b1, w2, float(theta[-1]))


def _linear_action_matrices(action, dim):
    """Matrices of the (linear) coordinate maps of a finite action."""
    if action.kind != "finite":
        raise ValueError("group averaging needs a finite coordinate action")
    basis = np.eye(dim)
    mats = []
    for _, fn in action.maps:
        M = np.column_stack([np.asarray(fn(*basis[i]), dtype=float)
                             for i in range(dim)])
        probe = np.arange(1.0, dim + 1.0) / 3.0
        if not np.allclose(np.asarray(fn(*probe)), M @ probe, atol=1e-12):
            raise ValueError("coordinate map is not linear")
        mats.append(M)
    return mats


@dataclasses.dataclass(frozen=True, eq=False)
class SiPinnSpec:
    base: MlpParams
    group: CoordinateAction

    def __post_init__(self):
        if self.group.kind != "finite":
            raise ValueError("invariant averaging needs a finite group")


def mlp_forward(p, x):
    x = np.asarray(x, dtype=float)
    return float(p.w2 @ np.tanh(p.W1 @ x + p.b1) + p.b2)


def sipinn_forward(s, x):
    x = np.asarray(x, dtype=float)
    mats = _linear_action_matrices(s.group, s.base.n)
    h = np.zeros(s.base.m)
    for M in mats:
        h += np.tanh(s.base.W1 @ (M @ x) + s.base.b1)
    return float(s.base.w2 @ (h / len(mats)) + s.base.b2)


def _slot_batch(p, Z, slots, mats):
    """Analytic slot values of the (possibly group-averaged) network over a
    point batch: slot 'u' or (axis, order<=2)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    acc = {slot: np.zeros(Z.shape[0]) for slot in slots}
    for M in mats:
        Weff = p.W1 @ M
        T = np.tanh(Z @ Weff.T + p.b1)
        Tp = 1.0 - T * T
        for slot in slots:
            if slot == "u":
                acc["u"] += T @ p.w2
            else:
                axis, order = slot
                if order == 1:
                    acc[slot] += (Tp * Weff[:, axis]) @ p.w2
                elif order == 2:
                    acc[slot] += (-2.0 * T * Tp * Weff[:, axis] ** 2) @ p.w2
                else:
                    raise ValueError("input derivatives supported to order 2")
    for slot in slots:
        acc[slot] /= len(mats)
    if "u" in acc:
        acc["u"] = acc["u"] + p.b2
    return acc


def mlp_input_partials(model, x, axis, order):
    """Closed-form d^order / dx_axis^order of the network output."""
    if isinstance(model, SiPinnSpec):
        p = model.base
        mats = _linear_action_matrices(model.group, p.n)
    else:
        p = model
        mats = [np.eye(p.n)]
    if not 0 <= axis < p.n:
        raise ValueError(f"axis {axis} out of range for {p.n} inputs")
    vals = _slot_batch(p, np.asarray(x, dtype=float), ((axis, order),), mats)
    return float(vals[(axis, order)][0])


class _TanhNetModel:
    """Training adapter shared by the plain and invariant networks."""

    def __init__(self, m, n, mats):
        if m < 1:
            raise ValueError("need at least one hidden node")
        self.m = m
        self.n_inputs = n
        self.n_params = n * m + 2 * m + 1
        self._mats = mats

    def params(self, theta):
        return MlpParams.unflatten(theta, self.m, self.n_inputs)

    def init_theta(self, rng):
        # bounded symmetric initialization suits the tanh hidden layer
        return rng.uniform(-1.0, 1.0, self.n_params)

    def __call__(self, theta, z):
        vals = _slot_batch(self.params(theta), z, ("u",), self._mats)
        return float(vals["u"][0])

    def _provider(self, theta):
        p = self.params(theta)

        def provider(term):
            return _slot_batch(p, term.points, term.slots, self._mats)

        return provider

    def loss_and_gradient(self, theta, prob, cfg=DEFAULT_STENCIL):
        total, parts, _ = evaluate_terms(prob, self._provider(theta))

        def scalar_loss(th):
            return evaluate_terms(prob, self._provider(th))[0]

        grad = param_gradient(scalar_loss, theta, cfg)
        return total, parts, grad

    def loss(self, theta, prob):
        total, parts, _ = evaluate_terms(prob, self._provider(theta))
        return total, parts


class PinnModel(_TanhNetModel):
    def __init__(self, m, n=2):
        super().__init__(m, n, [np.eye(n)])


class SiPinnModel(_TanhNetModel):
    def __init__(self, m, n=2, action=None):
        if action is None:
            if n != 2:
                raise ValueError("default symmetry group acts on 2 inputs")
            action = k4_rep(2)[1]
        super().__init__(m, n, _linear_action_matrices(action, n))
        self.action = action
