"""Circuit builders: the baseline re-uploading ansatz and the five
symmetry-constrained variants.

Every model is a data re-uploading circuit

    W_{p+1} · U(z) · W_p · ... · W_2 · U(z) · W_1 |psi_0>

with p encoding layers U(z) sandwiched between p+1 trainable blocks W_i,
followed by measurement of a fixed observable.  The symmetric variants use
twirled generators in their trainable blocks, a group-invariant initial
state, and a group-invariant observable, which makes the scalar output
invariant (or, for the parity model, anti-invariant) under the coordinate
action of the group.
"""

from __future__ import annotations

import dataclasses

from .pauli import PauliSum, parse_pauli_sum
from .simulator import Circuit, bloch_op, fixed_op, rot_op

ANSATZ_NAMES = ("qpinn", "k4", "so2", "so2_time", "z2", "k4_4q", "so2_4q")


@dataclasses.dataclass(frozen=True)
class AnsatzSpec:
    """Accounting record for a built circuit."""

    name: str
    n: int
    p: int
    params_per_block: int
    input_dim: int

    @property
    def total_params(self):
        return (self.p + 1) * self.params_per_block


def _single(letter, q, n):
    s = "".join(letter if i == q else "I" for i in range(1, n + 1))
    return PauliSum({s: 1.0}, n=n)


def _check_p(p):
    p = int(p)
    if p < 1:
        raise ValueError(f"layer count must be >= 1, got {p}")
    return p


def _finalize(name, n, p, ppb, input_dim, prep, ops, obs):
    circuit = Circuit(n, prep, ops, obs, input_dim)
    spec = AnsatzSpec(name=name, n=n, p=p, params_per_block=ppb,
                      input_dim=input_dim)
    if circuit.n_params != spec.total_params:
        raise RuntimeError(
            f"{name}: built {circuit.n_params} parameters, "
            f"expected {spec.total_params}")
    return circuit, spec


def build_qpinn(n, p, rotations_per_qubit=3):
    """Baseline hardware-efficient ansatz: per-qubit R_X, R_Y, R_Z followed
    by a CNOT ring, with R_Y(z_i) encodings (one coordinate per qubit; the
    last qubit carries time in the 3-qubit version) and observable sum_i Z_i.

    ``rotations_per_qubit=4`` switches to an R_X,R_Y,R_Z,R_Y block (12
    parameters per block at n=3) for comparison runs."""
    if n not in (2, 3):
        raise ValueError(f"baseline ansatz supports n in {{2, 3}}, got {n}")
    p = _check_p(p)
    if rotations_per_qubit == 3:
        axes = "XYZ"
    elif rotations_per_qubit == 4:
        axes = "XYZY"
    else:
        raise ValueError("rotations_per_qubit must be 3 or 4")
    ops = []
    k = 0
    def block(k):
        for q in range(1, n + 1):
            for ax in axes:
                ops.append(rot_op(_single(ax, q, n), ("theta", k)))
                k += 1
        for q in range(1, n + 1):
            ops.append(fixed_op("CNOT", q, q % n + 1))
        return k

    k = block(k)
    for _ in range(p):
        for q in range(1, n + 1):
            ops.append(rot_op(_single("Y", q, n), ("input", q - 1)))
        k = block(k)
    obs = parse_pauli_sum(" + ".join(f"Z{q}" for q in range(1, n + 1)), n)
    return _finalize("qpinn", n, p, len(axes) * n, n, [], ops, obs)


def build_k4(p):
    """Coordinate-exchange/sign-flip symmetric 2-qubit model: Bell-pair
    start, blocks of R_ZZ, R_YY and a shared X rotation on both qubits,
    R_Y(x) x R_Y(y) encoding, observable X1 + X2."""
    p = _check_p(p)
    n = 2
    prep = [fixed_op("H", 1), fixed_op("CNOT", 1, 2)]
    zz = parse_pauli_sum("Z1Z2", n)
    yy = parse_pauli_sum("Y1Y2", n)
    x_shared = parse_pauli_sum("0.5*X1 + 0.5*X2", n)
    ops = []
    k = 0
    def block(k):
        for gen in (zz, yy, x_shared):
            ops.append(rot_op(gen, ("theta", k)))
            k += 1
        return k

    k = block(k)
    for _ in range(p):
        ops.append(rot_op(_single("Y", 1, n), ("input", 0)))
        ops.append(rot_op(_single("Y", 2, n), ("input", 1)))
        k = block(k)
    return _finalize("k4", n, p, 3, 2, prep, ops,
                     parse_pauli_sum("X1 + X2", n))


def build_so2(p):
    """Rotation-invariant 2-qubit model: (|01>+|10>)/sqrt(2) start, blocks
    of R_ZZ, an exchange rotation with generator (X1X2+Y1Y2)/2, and per-qubit
    R_Z; Bloch encoding of (x,y) on both qubits; exchange observable."""
    p = _check_p(p)
    n = 2
    prep = [fixed_op("H", 1), fixed_op("X", 2), fixed_op("CNOT", 1, 2)]
    zz = parse_pauli_sum("Z1Z2", n)
    xxyy = parse_pauli_sum("0.5*X1X2 + 0.5*Y1Y2", n)
    ops = []
    k = 0
    def block(k):
        for gen in (zz, xxyy, _single("Z", 1, n), _single("Z", 2, n)):
            ops.append(rot_op(gen, ("theta", k)))
            k += 1
        return k

    k = block(k)
    for _ in range(p):
        ops.append(bloch_op(1, 0, 1))
        ops.append(bloch_op(2, 0, 1))
        k = block(k)
    return _finalize("so2", n, p, 4, 2, prep, ops, xxyy)


def build_so2_time(p):
    """Rotation-invariant model with a third qubit carrying time through an
    R_Z(t) encoding; nine parameters per block couple the spatial pair and
    the time qubit with ZZ rotations."""
    p = _check_p(p)
    n = 3
    prep = [fixed_op("H", 1), fixed_op("X", 2), fixed_op("CNOT", 1, 2)]
    gens = (
        _single("Z", 1, n),
        _single("Z", 2, n),
        parse_pauli_sum("0.5*X1X2 + 0.5*Y1Y2", n),
        parse_pauli_sum("Z1Z2", n),
        _single("Z", 3, n),
        _single("Y", 3, n),
        _single("X", 3, n),
        parse_pauli_sum("Z1Z3", n),
        parse_pauli_sum("Z2Z3", n),
    )
    ops = []
    k = 0
    def block(k):
        for gen in gens:
            ops.append(rot_op(gen, ("theta", k)))
            k += 1
        return k

    k = block(k)
    for _ in range(p):
        ops.append(bloch_op(1, 0, 1))
        ops.append(bloch_op(2, 0, 1))
        ops.append(rot_op(_single("Z", 3, n), ("input", 2)))
        k = block(k)
    obs = parse_pauli_sum("0.5*X1X2 + 0.5*Y1Y2 + Z3", n)
    return _finalize("so2_time", n, p, 9, 3, prep, ops, obs)


def build_z2(p):
    """Parity-equivariant 2-qubit model for (x,t) problems: H on the first
    qubit, blocks of R_XX, R_X(q1), R_Y(q2), R_Z(q2), encodings R_Y(x) on
    q1 and R_Y(t) on q2, observable (Z1+Y1)Z2.  The output is an odd
    function of x."""
    p = _check_p(p)
    n = 2
    prep = [fixed_op("H", 1)]
    gens = (
        parse_pauli_sum("X1X2", n),
        _single("X", 1, n),
        _single("Y", 2, n),
        _single("Z", 2, n),
    )
    ops = []
    k = 0
    def block(k):
        for gen in gens:
            ops.append(rot_op(gen, ("theta", k)))
            k += 1
        return k

    k = block(k)
    for _ in range(p):
        ops.append(rot_op(_single("Y", 1, n), ("input", 0)))
        ops.append(rot_op(_single("Y", 2, n), ("input", 1)))
        k = block(k)
    obs = parse_pauli_sum("Z1Z2 + Y1Z2", n)
    return _finalize("z2", n, p, 4, 2, prep, ops, obs)


def build_k4_4q(p):
    """4-qubit coordinate-exchange model: two Bell pairs, the seven
    twirled generators per block, R_Y encodings in (x,y,x,y) order, and
    observable sum_i X_i."""
    p = _check_p(p)
    n = 4
    prep = [fixed_op("H", 1), fixed_op("CNOT", 1, 2),
            fixed_op("H", 3), fixed_op("CNOT", 3, 4)]
    gens = (
        parse_pauli_sum("0.5*X1 + 0.5*X2", n),
        parse_pauli_sum("0.5*X3 + 0.5*X4", n),
        parse_pauli_sum("Y1Y2", n),
        parse_pauli_sum("Y3Y4", n),
        parse_pauli_sum("Z1Z2", n),
        parse_pauli_sum("Z3Z4", n),
        parse_pauli_sum("0.25*X2X3 + 0.25*X1X3 + 0.25*X2X4 + 0.25*X1X4", n),
    )
    ops = []
    k = 0
    def block(k):
        for gen in gens:
            ops.append(rot_op(gen, ("theta", k)))
            k += 1
        return k

    k = block(k)
    for _ in range(p):
        for q, coord in ((1, 0), (2, 1), (3, 0), (4, 1)):
            ops.append(rot_op(_single("Y", q, n), ("input", coord)))
        k = block(k)
    obs = parse_pauli_sum("X1 + X2 + X3 + X4", n)
    return _finalize("k4_4q", n, p, 7, 2, prep, ops, obs)


def build_so2_4q(p):
    """4-qubit rotation-invariant model: two exchange-symmetric pairs, the
    ten twirled generators per block, Bloch encoding of (x,y) on every
    qubit, and the summed pairwise exchange observable."""
    p = _check_p(p)
    n = 4
    prep = [fixed_op("H", 1), fixed_op("X", 2), fixed_op("CNOT", 1, 2),
            fixed_op("H", 3), fixed_op("X", 4), fixed_op("CNOT", 3, 4)]
    gens = (
        _single("Z", 1, n),
        _single("Z", 2, n),
        _single("Z", 3, n),
        _single("Z", 4, n),
        parse_pauli_sum("Z1Z2", n),
        parse_pauli_sum("Z2Z3", n),
        parse_pauli_sum("Z3Z4", n),
        parse_pauli_sum("0.5*X1X2 + 0.5*Y1Y2", n),
        parse_pauli_sum("0.5*X2X3 + 0.5*Y2Y3", n),
        parse_pauli_sum("0.5*X3X4 + 0.5*Y3Y4", n),
    )
    ops = []
    k = 0
    def block(k):
        for gen in gens:
            ops.append(rot_op(gen, ("theta", k)))
            k += 1
        return k

    k = block(k)
    for _ in range(p):
        for q in range(1, n + 1):
            ops.append(bloch_op(q, 0, 1))
        k = block(k)
    obs = parse_pauli_sum("0.5*X1X2 + 0.5*Y1Y2 + 0.5*X3X4 + 0.5*Y3Y4", n)
    return _finalize("so2_4q", n, p, 10, 2, prep, ops, obs)


def get_ansatz(name, p, n=2, rotations_per_qubit=3):
    """Build a circuit by name.  Returns (circuit, spec)."""
    if name == "qpinn":
        return build_qpinn(n, p, rotations_per_qubit)
    builders = {
        "k4": build_k4,
        "so2": build_so2,
        "so2_time": build_so2_time,
        "z2": build_z2,
        "k4_4q": build_k4_4q,
        "so2_4q": build_so2_4q,
    }
    if name not in builders:
        raise ValueError(f"unknown ansatz {name!r}; choose from {ANSATZ_NAMES}")
    return builders[name](p)
