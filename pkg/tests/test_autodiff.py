"""Finite-difference stencils and the adjoint circuit gradient."""

import numpy as np
import pytest

from symqpde.ansatz import get_ansatz
from symqpde.autodiff import (
    StencilConfig,
    circuit_forward,
    circuit_gradient,
    input_partial,
    model_values_and_gradient,
    param_gradient,
)
from symqpde.errors import NumericIntegrityError
from symqpde.pauli import parse_pauli_sum
from symqpde.simulator import Circuit, model_eval, rot_op

RNG = np.random.default_rng(77)


def _cos_model():
    gen = parse_pauli_sum("Y1", 1)
    c = Circuit(1, [], [rot_op(gen, ("input", 0))], parse_pauli_sum("Z1", 1), 1)
    return lambda theta, z: model_eval(c, theta, z)


def test_input_partial_orders_on_cosine():
    f = _cos_model()
    assert abs(input_partial(f, [], [0.0], 0, 1)) < 1e-8
    assert input_partial(f, [], [0.0], 0, 2) == pytest.approx(-1.0, abs=1e-5)
    x = 0.6
    assert input_partial(f, [], [x], 0, 1) == pytest.approx(-np.sin(x), abs=1e-6)


def test_input_partial_exact_on_quadratics():
    f = lambda theta, z: 3.0 * z[0] ** 2 + 2.0 * z[0] + 1.0
    assert input_partial(f, [], [0.4], 0, 2) == pytest.approx(6.0, abs=1e-8)
    assert input_partial(f, [], [0.4], 0, 1) == pytest.approx(2.0 + 6.0 * 0.4, abs=1e-9)


def test_input_partial_validates_arguments():
    f = lambda theta, z: 0.0
    with pytest.raises(ValueError, match="axis"):
        input_partial(f, [], [0.0], 1, 1)
    with pytest.raises(ValueError, match="order"):
        input_partial(f, [], [0.0], 0, 3)
    with pytest.raises(ValueError, match="h_input"):
        StencilConfig(h_input=1e-13)


def test_first_derivative_error_shrinks_quadratically():
    f = lambda theta, z: np.cos(z[0])
    x = 0.7
    exact = -np.sin(x)
    e1 = abs(input_partial(f, [], [x], 0, 1, StencilConfig(h_input=0.1)) - exact)
    e2 = abs(input_partial(f, [], [x], 0, 1, StencilConfig(h_input=0.05)) - exact)
    assert 3.5 < e1 / e2 < 4.5


def test_param_gradient_on_quadratic():
    loss = lambda th: float(np.sum(np.square(th)))
    g = param_gradient(loss, np.array([1.0, 2.0]))
    assert np.allclose(g, [2.0, 4.0], atol=1e-8)


def test_param_gradient_of_constant_is_zero():
    g = param_gradient(lambda th: 3.25, np.zeros(5))
    assert np.all(np.abs(g) < 1e-10)


def test_param_gradient_at_circuit_stationary_point():
    gen = parse_pauli_sum("Y1", 1)
    c = Circuit(1, [], [rot_op(gen, ("theta", 0))], parse_pauli_sum("Z1", 1), 1)
    loss = lambda th: -model_eval(c, th, [0.0])  # minimized at theta = 0
    g = param_gradient(loss, np.array([0.0]))
    assert np.linalg.norm(g) < 1e-6


def test_param_gradient_flags_non_finite_loss():
    def loss(th):
        return np.nan if th[1] != 0.5 else 1.0

    with pytest.raises(NumericIntegrityError, match="parameter 1"):
        param_gradient(loss, np.array([0.0, 0.5]))


# ---------------------------------------------------------------------------
# adjoint gradient vs finite-difference reference


@pytest.mark.parametrize("name,n,p", [
    ("qpinn", 2, 2), ("qpinn", 3, 1), ("k4", 2, 2), ("so2", 2, 2),
    ("so2_time", 3, 1), ("z2", 2, 2), ("k4_4q", 4, 1), ("so2_4q", 4, 1),
])
def test_adjoint_matches_fd_single_point(name, n, p):
    circuit, spec = get_ansatz(name, p=p, n=n)
    for _ in range(3):
        theta = RNG.uniform(0, 2 * np.pi, circuit.n_params)
        z = RNG.uniform(-0.7, 0.7, spec.input_dim)
        if spec.input_dim == 3:
            z[2] = RNG.uniform(0, 1)
        adj = circuit_gradient(circuit, theta, z.reshape(1, -1))
        fd = param_gradient(lambda th: model_eval(circuit, th, z), theta)
        assert np.allclose(adj, fd, rtol=1e-6, atol=1e-7), (name, adj - fd)


def test_adjoint_matches_fd_weighted_batch():
    circuit, spec = get_ansatz("so2", p=3)
    for _ in range(5):
        theta = RNG.uniform(0, 2 * np.pi, circuit.n_params)
        Z = RNG.uniform(-0.7, 0.7, size=(8, 2))
        w = RNG.normal(size=8)
        adj = circuit_gradient(circuit, theta, Z, weights=w)

        def loss(th):
            return float(sum(wi * model_eval(circuit, th, z)
                             for wi, z in zip(w, Z)))

        fd = param_gradient(loss, theta)
        assert np.allclose(adj, fd, rtol=1e-6, atol=1e-7)


def test_adjoint_handles_shared_parameter_slots():
    gx = parse_pauli_sum("X1", 1)
    gy = parse_pauli_sum("Y1", 1)
    ops = [rot_op(gx, ("theta", 0)), rot_op(gy, ("theta", 1)),
           rot_op(gx, ("theta", 0))]  # slot 0 appears twice
    c = Circuit(1, [], ops, parse_pauli_sum("Z1", 1), 1)
    for _ in range(5):
        theta = RNG.uniform(0, 2 * np.pi, 2)
        adj = circuit_gradient(c, theta, np.zeros((1, 1)))
        fd = param_gradient(lambda th: model_eval(c, th, [0.0]), theta)
        assert np.allclose(adj, fd, rtol=1e-6, atol=1e-8)


def test_forward_cache_reuse_and_values():
    circuit, spec = get_ansatz("k4", p=2)
    theta = RNG.uniform(0, 2 * np.pi, circuit.n_params)
    Z = RNG.uniform(-0.5, 0.5, size=(6, 2))
    values, cache = circuit_forward(circuit, theta, Z)
    expected = [model_eval(circuit, theta, z) for z in Z]
    assert np.allclose(values, expected, atol=1e-12)
    g1 = circuit_gradient(circuit, theta, Z, cache=cache)
    g2 = circuit_gradient(circuit, theta, Z)
    assert np.array_equal(g1, g2)
    v2, g3 = model_values_and_gradient(circuit, theta, Z)
    assert np.allclose(v2, values) and np.array_equal(g3, g2)


def test_gradients_are_pure():
    circuit, _ = get_ansatz("z2", p=1)
    theta = RNG.uniform(0, 2 * np.pi, circuit.n_params)
    Z = np.array([[0.3, 0.6]])
    a = circuit_gradient(circuit, theta, Z)
    b = circuit_gradient(circuit, theta, Z)
    assert np.array_equal(a, b)
