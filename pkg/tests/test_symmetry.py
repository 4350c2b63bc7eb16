"""Twirling, group representations, and equivariant generator sets."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symqpde.pauli import (
    PauliSum,
    commutator_norm,
    exp_generator,
    parse_pauli_sum,
    to_dense,
)
from symqpde.symmetry import (
    SEED_POOL_2Q,
    SEED_POOL_4Q,
    SEED_POOL_4Q_K4,
    GroupRepresentation,
    check_invariant_observable,
    check_invariant_state,
    equivariant_generator_set,
    k4_rep,
    k4_twirl_group,
    so2_rep,
    twirl,
    twirl_continuous,
    twirl_finite,
    validate_representation,
    z2_rep,
)

K4, K4_ACTION = k4_rep(2)
SO2, SO2_ACTION = so2_rep(2)
Z2, Z2_ACTION = z2_rep()


def _ps(text, n):
    return parse_pauli_sum(text, n)


def _assert_same_generators(got, expected_texts, n):
    expected = [_ps(t, n) for t in expected_texts]
    assert len(got) == len(expected)
    for e in expected:
        hits = [g for g in got if set(g.terms) == set(e.terms) and all(
            abs(g.terms[k] - e.terms[k]) < 1e-12 for k in e.terms)]
        assert len(hits) == 1, f"generator {e!r} not reproduced"


# ---------------------------------------------------------------------------
# twirling basics


def test_twirl_finite_symmetrizes_x1():
    out = twirl_finite(_ps("X1", 2), K4)
    assert out.allclose(_ps("0.5*X1 + 0.5*X2", 2), tol=1e-12)


def test_twirl_finite_kills_y1():
    assert twirl_finite(_ps("Y1", 2), K4).is_zero()


def test_twirl_under_trivial_group_is_identity_map():
    trivial = GroupRepresentation(kind="finite", n=2,
                                  elements=(("e", np.eye(4, dtype=complex)),))
    h = _ps("0.3*X1 - 1.2*Z1Z2 + 0.25*Y2", 2)
    assert twirl_finite(h, trivial).allclose(h, tol=1e-15)


def test_twirl_continuous_mixes_xx_and_yy():
    out = twirl_continuous(_ps("X1X2", 2), SO2, 64)
    assert out.allclose(_ps("0.5*X1X2 + 0.5*Y1Y2", 2), tol=1e-12)


def test_twirl_continuous_fixes_z_and_kills_x():
    assert twirl_continuous(_ps("Z1", 2), SO2, 64).allclose(_ps("Z1", 2), tol=1e-12)
    assert twirl_continuous(_ps("X1", 2), SO2, 64).is_zero()


def test_twirl_continuous_rejects_too_few_nodes():
    with pytest.raises(ValueError, match="quadrature nodes"):
        twirl_continuous(_ps("X1X2", 2), SO2, nodes=4)


def test_twirl_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        twirl_finite(_ps("X1", 1), K4)


def test_node_count_independence():
    for seed in SEED_POOL_2Q:
        a = twirl_continuous(seed, SO2, 64)
        b = twirl_continuous(seed, SO2, 128)
        assert a.allclose(b, tol=1e-12)


# ---------------------------------------------------------------------------
# published generator sets


def test_k4_2q_generator_set():
    gens = equivariant_generator_set(SEED_POOL_2Q, K4)
    _assert_same_generators(gens, ["0.5*X1 + 0.5*X2", "X1X2", "Y1Y2", "Z1Z2"], 2)
    # symmetrized single-qubit generator comes first (from seed X1)
    assert gens[0].allclose(_ps("0.5*X1 + 0.5*X2", 2), tol=1e-12)


def test_so2_2q_generator_set():
    gens = equivariant_generator_set(SEED_POOL_2Q, SO2)
    _assert_same_generators(
        gens, ["Z1", "Z2", "Z1Z2", "0.5*X1X2 + 0.5*Y1Y2"], 2)


def test_z2_generator_set():
    gens = equivariant_generator_set(SEED_POOL_2Q, Z2)
    _assert_same_generators(gens, ["X1", "X2", "Y2", "Z2", "X1X2"], 2)
    assert [next(iter(g.terms)) for g in gens] == ["XI", "IX", "IY", "IZ", "XX"]


def test_k4_4q_generator_set():
    gens = equivariant_generator_set(SEED_POOL_4Q_K4, k4_twirl_group(4))
    _assert_same_generators(gens, [
        "0.5*X1 + 0.5*X2",
        "0.5*X3 + 0.5*X4",
        "Y1Y2",
        "Y3Y4",
        "Z1Z2",
        "Z3Z4",
        "0.25*X2X3 + 0.25*X1X3 + 0.25*X2X4 + 0.25*X1X4",
    ], 4)


def test_so2_4q_generator_set():
    gens = equivariant_generator_set(SEED_POOL_4Q, so2_rep(4)[0])
    _assert_same_generators(gens, [
        "Z1", "Z2", "Z3", "Z4",
        "Z1Z2", "Z2Z3", "Z3Z4",
        "0.5*X1X2 + 0.5*Y1Y2",
        "0.5*X2X3 + 0.5*Y2Y3",
        "0.5*X3X4 + 0.5*Y3Y4",
    ], 4)


def test_published_k4_4q_set_commutes_with_strict_representation():
    rep, _ = k4_rep(4)
    gens = equivariant_generator_set(SEED_POOL_4Q_K4, k4_twirl_group(4))
    for g in gens:
        dense = to_dense(g, 4)
        for _, u in rep.elements:
            assert commutator_norm(dense, u) < 1e-10


# ---------------------------------------------------------------------------
# representations


def test_k4_rep_structure():
    assert len(K4.elements) == 4
    validate_representation(K4)
    validate_representation(k4_rep(4)[0])
    validate_representation(k4_twirl_group(4))
    assert len(k4_twirl_group(4).elements) == 8


def test_k4_coordinate_action_matches_group_table():
    maps = dict(K4_ACTION.maps)
    x, y = 0.3, -0.7
    assert maps["e"](x, y) == (x, y)
    assert maps["s"](x, y) == (y, x)
    assert maps["p"](x, y) == (-x, -y)
    assert maps["sp"](x, y) == (-y, -x)
    # composition: s after p equals sp
    assert maps["s"](*maps["p"](x, y)) == maps["sp"](x, y)


def test_so2_rep_periodicity_and_identity():
    validate_representation(SO2)
    validate_representation(so2_rep(1)[0])
    validate_representation(so2_rep(4)[0])
    assert np.allclose(so2_rep(1)[0].family(0.0), np.eye(2))


def test_so2_bloch_conjugation_identity():
    rep1, action = so2_rep(1)
    rng = np.random.default_rng(5)
    for _ in range(8):
        x, y = rng.uniform(-1, 1, 2)
        phi = rng.uniform(0, 2 * np.pi)
        xr, yr = action.family(phi)(x, y)
        u = exp_generator(PauliSum({"X": x, "Y": y}, n=1), 1.0, 1)
        u_rot = exp_generator(PauliSum({"X": xr, "Y": yr}, n=1), 1.0, 1)
        rz = rep1.family(phi)
        assert np.abs(u_rot - rz @ u @ rz.conj().T).max() < 1e-12


def test_so2_pi_fixes_psi_plus_basis_state():
    psi01 = np.zeros(4, dtype=complex)
    psi01[0b01] = 1.0
    out = SO2.family(np.pi) @ psi01
    overlap = np.vdot(psi01, out)
    assert abs(abs(overlap) - 1.0) < 1e-12


def test_z2_rep_and_observable_flip():
    assert len(Z2.elements) == 2
    validate_representation(Z2)
    maps = dict(Z2_ACTION.maps)
    assert maps["p"](0.4, 0.9) == (-0.4, 0.9)
    o = to_dense(_ps("Z1Z2 + Y1Z2", 2), 2)
    up = dict(Z2.elements)["p"]
    assert np.abs(up.conj().T @ o @ up + o).max() < 1e-12


def test_unsupported_qubit_counts():
    with pytest.raises(ValueError):
        k4_rep(3)
    with pytest.raises(ValueError):
        so2_rep(3)
    with pytest.raises(ValueError):
        k4_twirl_group(3)


# ---------------------------------------------------------------------------
# invariance checks


def test_invariant_states():
    phi_plus = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    psi_plus = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
    zero_zero = np.array([1, 0, 0, 0], dtype=complex)
    assert check_invariant_state(phi_plus, K4)
    assert check_invariant_state(psi_plus, SO2)
    assert not check_invariant_state(zero_zero, K4)


def test_invariant_observables():
    assert check_invariant_observable(_ps("X1 + X2", 2), K4)
    assert check_invariant_observable(_ps("0.5*X1X2 + 0.5*Y1Y2", 2), SO2)
    assert not check_invariant_observable(_ps("Z1", 2), K4)


def test_generator_sets_satisfy_commutation_invariant():
    cases = [
        (equivariant_generator_set(SEED_POOL_2Q, K4), K4),
        (equivariant_generator_set(SEED_POOL_2Q, SO2), SO2),
        (equivariant_generator_set(SEED_POOL_2Q, Z2), Z2),
        (equivariant_generator_set(SEED_POOL_4Q, so2_rep(4)[0]), so2_rep(4)[0]),
    ]
    for gens, rep in cases:
        for g in gens:
            assert check_invariant_observable(g, rep)


def test_coordinate_actions_preserve_domains():
    rng = np.random.default_rng(12)
    pts = rng.uniform(-1, 1, size=(50, 2))
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) < 1.0]
    for _, m in K4_ACTION.maps:
        for x, y in pts:
            xr, yr = m(x, y)
            assert np.hypot(xr, yr) < 1.0 + 1e-12
    for phi in np.linspace(0, 2 * np.pi, 9):
        m = SO2_ACTION.family(phi)
        for x, y in pts:
            xr, yr = m(x, y)
            assert abs(np.hypot(xr, yr) - np.hypot(x, y)) < 1e-12
    for x, t in rng.uniform((-1, 0), (1, 1), size=(20, 2)):
        xr, tr = dict(Z2_ACTION.maps)["p"](x, t)
        assert -1 <= xr <= 1 and tr == t


# ---------------------------------------------------------------------------
# algebraic properties of the twirl


@st.composite
def random_pauli_sums(draw, n=2):
    import itertools

    strings = ["".join(p) for p in itertools.product("IXYZ", repeat=n)]
    k = draw(st.integers(1, 5))
    idx = draw(st.lists(st.integers(0, len(strings) - 1),
                        min_size=k, max_size=k, unique=True))
    coeffs = draw(st.lists(
        st.floats(-2, 2, allow_nan=False, allow_infinity=False),
        min_size=k, max_size=k))
    return PauliSum({strings[i]: c for i, c in zip(idx, coeffs)}, n=n)


@settings(max_examples=50, deadline=None)
@given(h=random_pauli_sums())
def test_twirl_is_idempotent(h):
    for rep in (K4, Z2, SO2):
        once = twirl(h, rep)
        twice = twirl(once, rep)
        assert twice.allclose(once, tol=1e-11)


@settings(max_examples=50, deadline=None)
@given(h1=random_pauli_sums(), h2=random_pauli_sums(),
       a=st.floats(-3, 3, allow_nan=False), b=st.floats(-3, 3, allow_nan=False))
def test_twirl_is_linear(h1, h2, a, b):
    for rep in (K4, SO2):
        lhs = twirl(a * h1 + b * h2, rep)
        rhs = a * twirl(h1, rep) + b * twirl(h2, rep)
        assert lhs.allclose(rhs, tol=1e-11)


def test_twirl_idempotent_over_many_draws():
    rng = np.random.default_rng(99)
    import itertools

    strings = ["".join(p) for p in itertools.product("IXYZ", repeat=2)]
    for _ in range(100):
        k = rng.integers(1, 6)
        chosen = rng.choice(len(strings), size=k, replace=False)
        h = PauliSum({strings[i]: rng.uniform(-2, 2) for i in chosen}, n=2)
        for rep in (K4, SO2, Z2):
            once = twirl(h, rep)
            assert twirl(once, rep).allclose(once, tol=1e-11)
