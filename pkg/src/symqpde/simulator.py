"""Dense statevector simulation of small parametrized circuits.

Circuits act on n <= ~6 qubits, so states are plain complex vectors of
length 2**n and gates are dense matrices.  Qubit 1 is the most significant
bit of the computational-basis index: |q1 q2 ... qn>.

A circuit is a preparation layer (parameter-free), followed by an ordered
list of operations, followed by measurement of a fixed observable.  Three
operation flavours exist:

* fixed gates        -- H, X, CNOT, SWAP on named qubits
* generator rotations -- exp(-i*angle/2 * G) for a Hermitian Pauli-sum G,
  with the angle bound to a constant, a trainable parameter slot, or an
  input coordinate
* Bloch encodings    -- exp(-i*(x*X + y*Y)/2) on one qubit, consuming two
  input coordinates at once

Evaluation is batched over input points: point-independent stretches of the
circuit are fused into one dense matrix per parameter vector, and
data-dependent single-qubit operations are applied with closed-form 2x2
blocks across the whole batch.
"""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from .errors import NumericIntegrityError
from .pauli import PauliSum, pauli_weight, to_dense

_I2 = np.eye(2, dtype=complex)
_H2 = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
_X2 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_Y2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_Z2 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_LETTER2 = {"X": _X2, "Y": _Y2, "Z": _Z2}

_FIXED_ARITY = {"H": 1, "X": 1, "CNOT": 2, "SWAP": 2}

NORM_TOL = 1e-12
IMAG_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class CircuitOp:
    """One operation in a circuit.  Build these with the factory helpers
    ``fixed_op`` / ``rot_op`` / ``bloch_op`` rather than by hand."""

    kind: str  # 'fixed' | 'rot' | 'bloch'
    name: str = ""
    targets: tuple = ()
    generator: Optional[PauliSum] = None
    binding: tuple = ()
    coords: tuple = ()


def fixed_op(name, *targets):
    """A parameter-free named gate (H, X, CNOT, SWAP) on 1-based qubits."""
    if name not in _FIXED_ARITY:
        raise ValueError(f"unknown fixed gate {name!r}")
    if len(targets) != _FIXED_ARITY[name]:
        raise ValueError(f"{name} takes {_FIXED_ARITY[name]} target(s), got {len(targets)}")
    if len(set(targets)) != len(targets):
        raise ValueError(f"{name} targets must be distinct: {targets}")
    return CircuitOp(kind="fixed", name=name, targets=tuple(int(t) for t in targets))


def rot_op(generator, binding, name=""):
    """exp(-i*angle/2 * generator), with ``binding`` one of
    ``('const', value)``, ``('theta', k)``, ``('input', j)``."""
    if not isinstance(generator, PauliSum):
        raise TypeError("generator must be a PauliSum")
    tag = binding[0]
    if tag == "const":
        binding = ("const", float(binding[1]))
    elif tag in ("theta", "input"):
        idx = int(binding[1])
        if idx < 0:
            raise ValueError(f"{tag} index must be non-negative, got {idx}")
        binding = (tag, idx)
    else:
        raise ValueError(f"unknown binding {binding!r}")
    return CircuitOp(kind="rot", name=name, generator=generator, binding=binding)


def bloch_op(qubit, coord_x, coord_y):
    """exp(-i*(z_jx*X + z_jy*Y)/2) on one qubit; consumes two input coords."""
    return CircuitOp(kind="bloch", targets=(int(qubit),),
                     coords=(int(coord_x), int(coord_y)))


def _check_qubits(op, n):
    for q in op.targets:
        if not 1 <= q <= n:
            raise ValueError(f"qubit {q} out of range for n={n} in {op.name or op.kind}")


class Circuit:
    """Immutable circuit: preparation ops, main ops, observable.

    ``n_params`` is inferred from the theta bindings (indices must cover a
    contiguous range 0..P-1); ``input_dim`` is declared by the caller and
    every input binding must fall inside it.
    """

    __slots__ = ("n", "prep", "ops", "observable", "input_dim", "n_params", "_compiled")

    def __init__(self, n, prep, ops, observable, input_dim):
        n = int(n)
        prep = tuple(prep)
        ops = tuple(ops)
        if not isinstance(observable, PauliSum):
            raise TypeError("observable must be a PauliSum")
        if observable.n != n:
            raise ValueError(f"observable acts on {observable.n} qubits, circuit has {n}")
        theta_idx = set()
        for op in prep:
            if op.kind != "fixed" and not (op.kind == "rot" and op.binding[0] == "const"):
                raise ValueError("preparation layer must be parameter-free")
            _check_qubits(op, n)
        for op in ops:
            _check_qubits(op, n)
            if op.kind == "rot":
                if op.generator.n != n:
                    raise ValueError(
                        f"generator of {op.name or 'rot'} acts on {op.generator.n} "
                        f"qubits, circuit has {n}")
                tag, idx = op.binding[0], op.binding[1]
                if tag == "theta":
                    theta_idx.add(idx)
                elif tag == "input" and idx >= input_dim:
                    raise ValueError(f"input coord {idx} >= input_dim {input_dim}")
            elif op.kind == "bloch":
                for j in op.coords:
                    if j >= input_dim:
                        raise ValueError(f"input coord {j} >= input_dim {input_dim}")
        n_params = (max(theta_idx) + 1) if theta_idx else 0
        if theta_idx != set(range(n_params)):
            missing = sorted(set(range(n_params)) - theta_idx)
            raise ValueError(f"theta indices not contiguous; missing {missing}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "prep", prep)
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "observable", observable)
        object.__setattr__(self, "input_dim", int(input_dim))
        object.__setattr__(self, "n_params", n_params)
        object.__setattr__(self, "_compiled", None)

    def __setattr__(self, *_):
        raise AttributeError("Circuit is immutable")

    @property
    def dim(self):
        return 2 ** self.n

    @property
    def compiled(self):
        if self._compiled is None:
            object.__setattr__(self, "_compiled", _compile(self))
        return self._compiled


# ---------------------------------------------------------------------------
# dense embeddings of fixed gates


def _embed_1q(mat2, q, n):
    out = np.ones((1, 1), dtype=complex)
    for i in range(1, n + 1):
        out = np.kron(out, mat2 if i == q else _I2)
    return out


def _permutation(n, index_map):
    dim = 2 ** n
    mat = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        mat[index_map(i), i] = 1.0
    return mat


def _bit(i, q, n):
    return (i >> (n - q)) & 1


def _fixed_matrix(op, n):
    if op.name == "H":
        return _embed_1q(_H2, op.targets[0], n)
    if op.name == "X":
        return _embed_1q(_X2, op.targets[0], n)
    if op.name == "CNOT":
        c, t = op.targets

        def flip(i):
            return i ^ (1 << (n - t)) if _bit(i, c, n) else i

        return _permutation(n, flip)
    if op.name == "SWAP":
        a, b = op.targets

        def swap(i):
            ba, bb = _bit(i, a, n), _bit(i, b, n)
            if ba == bb:
                return i
            return i ^ (1 << (n - a)) ^ (1 << (n - b))

        return _permutation(n, swap)
    raise ValueError(f"unknown fixed gate {op.name!r}")


# ---------------------------------------------------------------------------
# compilation: fuse point-independent stretches, precompute spectra

def _single_qubit_pauli(generator):
    """If the generator is c*P with P weight-1, return (qubit, letter, c)."""
    if len(generator.terms) != 1:
        return None
    ((s, c),) = generator.terms.items()
    if pauli_weight(s) != 1:
        return None
    for q, letter in enumerate(s, start=1):
        if letter != "I":
            return (q, letter, c)
    return None


class _RotSpec:
    """Cached spectral data for one rotation op."""

    __slots__ = ("op", "dense", "eigvals", "eigvecs", "single")

    def __init__(self, op, n):
        self.op = op
        dense = to_dense(op.generator, n)
        self.dense = dense
        w, v = np.linalg.eigh(dense)
        self.eigvals = w
        self.eigvecs = v
        self.single = _single_qubit_pauli(op.generator)

    def matrix(self, angle):
        phases = np.exp(-0.5j * angle * self.eigvals)
        return (self.eigvecs * phases) @ self.eigvecs.conj().T


class _DenseSegment:
    """A maximal run of point-independent ops (fixed gates, const/theta
    rotations), collapsed into a single matrix per parameter vector."""

    kind = "dense"

    def __init__(self, parts):
        self.parts = parts  # list of ('mat', matrix) | ('rot', _RotSpec)
        self.theta_indices = sorted({
            spec.op.binding[1] for tag, spec in parts
            if tag == "rot" and spec.op.binding[0] == "theta"})

    def op_matrices(self, theta):
        mats = []
        for tag, item in self.parts:
            if tag == "mat":
                mats.append(item)
            else:
                binding = item.op.binding
                angle = binding[1] if binding[0] == "const" else theta[binding[1]]
                mats.append(item.matrix(angle))
        return mats

    def matrix(self, theta):
        out = None
        for m in self.op_matrices(theta):
            out = m if out is None else m @ out
        return out


class _DataSegment:
    """One data-dependent op (input-bound rotation or Bloch encoding),
    applied in closed form across a batch of points."""

    kind = "data"

    def __init__(self, op, n, spec=None):
        self.op = op
        self.n = n
        self.spec = spec  # _RotSpec fallback for multi-qubit input rotations

    def _u2(self, Z, inverse):
        """Per-sample 2x2 blocks (u00,u01,u10,u11) each shaped (B,) plus
        the target qubit."""
        op = self.op
        if op.kind == "bloch":
            x = Z[:, op.coords[0]]
            y = Z[:, op.coords[1]]
            r = np.hypot(x, y)
            c = np.cos(0.5 * r)
            # sin(r/2)/r, with the r->0 limit 1/2 taken via a series branch
            small = r < 1e-6
            rs = np.where(small, 1.0, r)
            s_over_r = np.where(small, 0.5 - r * r / 48.0, np.sin(0.5 * rs) / rs)
            if inverse:
                s_over_r = -s_over_r
            # -i*(x*X + y*Y) * s_over_r contributes the off-diagonal blocks
            u01 = -1j * s_over_r * (x - 1j * y)
            u10 = -1j * s_over_r * (x + 1j * y)
            return op.targets[0], c, u01, u10, c
        q, letter, coeff = self.spec.single
        angle = coeff * Z[:, op.binding[1]]
        if inverse:
            angle = -angle
        c = np.cos(0.5 * angle)
        s = -1j * np.sin(0.5 * angle)
        if letter == "X":
            return q, c, s, s, c
        if letter == "Y":
            return q, c, -1j * s, 1j * s, c
        return q, c + s, None, None, c - s  # Z: diag(e^{-ia/2}, e^{+ia/2})

    def apply(self, states, Z, inverse=False):
        op = self.op
        if op.kind == "rot" and self.spec.single is None:
            angles = Z[:, op.binding[1]]
            if inverse:
                angles = -angles
            return _apply_rot_per_sample(states, self.spec, angles)
        q, u00, u01, u10, u11 = self._u2(Z, inverse)
        return _apply_1q(states, self.n, q, u00, u01, u10, u11)


def _apply_1q(states, n, q, u00, u01, u10, u11):
    B = states.shape[0]
    lead = 2 ** (q - 1)
    trail = 2 ** (n - q)
    s = states.reshape(B, lead, 2, trail)
    s0 = s[:, :, 0, :]
    s1 = s[:, :, 1, :]
    out = np.empty_like(s)
    w = (slice(None), None, None)  # broadcast (B,) over (B, lead, trail)
    if u01 is None:  # diagonal op
        out[:, :, 0, :] = u00[w] * s0
        out[:, :, 1, :] = u11[w] * s1
    else:
        out[:, :, 0, :] = u00[w] * s0 + u01[w] * s1
        out[:, :, 1, :] = u10[w] * s0 + u11[w] * s1
    return out.reshape(B, lead * 2 * trail)


def _apply_rot_per_sample(states, spec, angles):
    """exp(-i*angles[b]/2 * G) applied to row b, via the eigenbasis of G."""
    coeff = states @ spec.eigvecs.conj()
    coeff *= np.exp(-0.5j * np.outer(angles, spec.eigvals))
    return coeff @ spec.eigvecs.T


class _Compiled:
    __slots__ = ("circuit", "prep_state", "segments", "obs_dense", "rot_specs")

    def __init__(self, circuit, prep_state, segments, obs_dense, rot_specs):
        self.circuit = circuit
        self.prep_state = prep_state
        self.segments = segments
        self.obs_dense = obs_dense
        self.rot_specs = rot_specs


def _compile(circuit):
    n = circuit.n
    dim = circuit.dim
    state = np.zeros(dim, dtype=complex)
    state[0] = 1.0
    for op in circuit.prep:
        if op.kind == "fixed":
            state = _fixed_matrix(op, n) @ state
        else:  # const rotation
            state = _RotSpec(op, n).matrix(op.binding[1]) @ state

    segments = []
    pending = []
    rot_specs = {}

    def flush():
        if pending:
            segments.append(_DenseSegment(list(pending)))
            pending.clear()

    for op in circuit.ops:
        if op.kind == "fixed":
            pending.append(("mat", _fixed_matrix(op, n)))
        elif op.kind == "rot":
            spec = _RotSpec(op, n)
            if op.binding[0] == "input":
                flush()
                segments.append(_DataSegment(op, n, spec))
            else:
                pending.append(("rot", spec))
                if op.binding[0] == "theta":
                    rot_specs.setdefault(op.binding[1], []).append(spec)
        else:  # bloch
            flush()
            segments.append(_DataSegment(op, n))
    flush()
    return _Compiled(circuit, state, segments, to_dense(circuit.observable, n), rot_specs)


# ---------------------------------------------------------------------------
# execution


def _check_norms(states, where):
    norms = np.linalg.norm(states, axis=-1)
    worst = float(np.max(np.abs(norms - 1.0))) if norms.size else 0.0
    if not np.isfinite(worst) or worst > NORM_TOL:
        raise NumericIntegrityError(
            f"state norm drifted by {worst:.3e} after {where}")


def run(circuit, theta, z):
    """Run the circuit at one input point; returns the final state vector.

    The norm is checked after every operation (the batched entry points
    check once at the end instead)."""
    theta = np.asarray(theta, dtype=float)
    z = np.asarray(z, dtype=float).reshape(1, -1)
    comp = circuit.compiled
    states = comp.prep_state[None, :].copy()
    _check_norms(states, "preparation")
    for seg in comp.segments:
        if seg.kind == "dense":
            for m in seg.op_matrices(theta):
                states = states @ m.T
                _check_norms(states, "a fused gate")
        else:
            states = seg.apply(states, z)
            _check_norms(states, "an encoding gate")
    return states[0]


def run_batch(circuit, theta, Z):
    """Run the circuit on a batch of input points with one shared parameter
    vector.  Returns states of shape (B, 2**n)."""
    theta = np.asarray(theta, dtype=float)
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    comp = circuit.compiled
    B = Z.shape[0]
    states = np.broadcast_to(comp.prep_state, (B, circuit.dim)).copy()
    for seg in comp.segments:
        if seg.kind == "dense":
            states = states @ seg.matrix(theta).T
        else:
            states = seg.apply(states, Z)
    _check_norms(states, "the final gate (batched)")
    return states


def run_batch_per_sample(circuit, Thetas, Z):
    """Run the circuit with a *different* parameter vector per input point
    (used for sampling state ensembles).  Thetas is (B, P), Z is (B, d)."""
    Thetas = np.atleast_2d(np.asarray(Thetas, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Thetas.shape[0] != Z.shape[0]:
        raise ValueError("Thetas and Z must have the same batch size")
    comp = circuit.compiled
    B = Z.shape[0]
    states = np.broadcast_to(comp.prep_state, (B, circuit.dim)).copy()
    for seg in comp.segments:
        if seg.kind == "dense":
            for tag, item in seg.parts:
                if tag == "mat":
                    states = states @ item.T
                elif item.op.binding[0] == "const":
                    states = states @ item.matrix(item.op.binding[1]).T
                else:
                    states = _apply_rot_per_sample(
                        states, item, Thetas[:, item.op.binding[1]])
        else:
            states = seg.apply(states, Z)
    _check_norms(states, "the final gate (per-sample batch)")
    return states


def expectation(state, observable, n=None):
    """<state| observable |state> as a real float.  ``observable`` may be a
    PauliSum or a dense Hermitian matrix."""
    state = np.asarray(state, dtype=complex)
    if isinstance(observable, PauliSum):
        if n is None:
            n = observable.n
        observable = to_dense(observable, n)
    val = state.conj() @ (observable @ state)
    return _realize(np.array([val]))[0]


def expectation_batch(states, obs_dense):
    vals = np.einsum("bi,bi->b", states.conj(), states @ obs_dense.T)
    return _realize(vals)


def _realize(vals):
    worst = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    if not np.isfinite(worst) or worst > IMAG_TOL:
        raise NumericIntegrityError(
            f"expectation has imaginary part {worst:.3e}")
    return vals.real.copy()


def model_eval(circuit, theta, z):
    """The scalar model output <psi(theta,z)| O |psi(theta,z)> at one point."""
    state = run(circuit, theta, z)
    return expectation(state, circuit.compiled.obs_dense)


def model_eval_batch(circuit, theta, Z):
    """Model outputs over a batch of points, shape (B,)."""
    states = run_batch(circuit, theta, Z)
    return expectation_batch(states, circuit.compiled.obs_dense)
