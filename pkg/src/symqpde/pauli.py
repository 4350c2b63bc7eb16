"""Operator algebra over n-qubit Pauli strings.

A Pauli string is held as a plain ``str`` of letters from ``IXYZ`` (qubit 1 is
the leftmost letter and the most significant bit of the statevector index).
:class:`PauliSum` wraps a real-coefficient dictionary over such strings and is
the Hermitian-generator currency of the whole package: symmetry averaging
produces PauliSums, circuit blocks exponentiate them, and observables are
measured as them.

Dense realizations live on at most 2^8-dimensional spaces; everything here is
exact double-precision linear algebra, no truncation.
"""
from __future__ import annotations

import re
from typing import Dict, Iterable, Mapping, Tuple, Union

import numpy as np

__all__ = [
    "PRUNE_TOL",
    "PauliSum",
    "to_dense",
    "pauli_product",
    "commutator_norm",
    "exp_generator",
    "pauli_weight",
    "parse_pauli_sum",
    "format_pauli_sum",
]

#: coefficients with magnitude below this are dropped on construction;
#: group averaging produces exact zeros contaminated only by roundoff.
PRUNE_TOL = 1e-12

_LETTERS = "IXYZ"

_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

# single-qubit multiplication table: (a, b) -> (phase, c) with a·b = phase·c
_PROD: Dict[Tuple[str, str], Tuple[complex, str]] = {}
for _p in _LETTERS:
    _PROD[("I", _p)] = (1.0 + 0.0j, _p)
    _PROD[(_p, "I")] = (1.0 + 0.0j, _p)
    _PROD[(_p, _p)] = (1.0 + 0.0j, "I")
_PROD[("X", "Y")] = (1.0j, "Z")
_PROD[("Y", "X")] = (-1.0j, "Z")
_PROD[("Y", "Z")] = (1.0j, "X")
_PROD[("Z", "Y")] = (-1.0j, "X")
_PROD[("Z", "X")] = (1.0j, "Y")
_PROD[("X", "Z")] = (-1.0j, "Y")


def _check_string(s: str, n: int | None = None) -> str:
    if not isinstance(s, str) or not s or any(c not in _LETTERS for c in s):
        raise ValueError(f"not a Pauli string: {s!r}")
    if n is not None and len(s) != n:
        raise ValueError(f"Pauli string {s!r} has length {len(s)}, expected {n}")
    return s


def pauli_weight(s: str) -> int:
    """Number of non-identity letters in a Pauli string."""
    return sum(1 for c in s if c != "I")


TermsLike = Union[Mapping[str, float], Iterable[Tuple[str, float]]]


class PauliSum:
    """Real-weighted sum of Pauli strings on ``n`` qubits.

    Canonical on construction: duplicate strings are merged, coefficients with
    magnitude below ``prune`` are dropped, and coefficients must be real
    (Hermiticity).  Instances are immutable and hashable-by-identity; compare
    with :meth:`allclose` for numerical work or ``==`` for exact equality.
    """

    __slots__ = ("n", "terms")

    def __init__(self, terms: TermsLike, n: int | None = None, prune: float = PRUNE_TOL):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: Dict[str, float] = {}
        for s, c in items:
            _check_string(s, n)
            if n is None:
                n = len(s)
            if isinstance(c, complex):
                if abs(c.imag) > PRUNE_TOL:
                    raise ValueError(f"non-real coefficient {c!r} for {s}")
                c = c.real
            acc[s] = acc.get(s, 0.0) + float(c)
        if n is None:
            raise ValueError("cannot infer qubit count from an empty term list")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(
            self, "terms", {s: c for s, c in acc.items() if abs(c) > prune}
        )

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("PauliSum is immutable")

    # -- algebra ----------------------------------------------------------
    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n != self.n:
            raise ValueError("qubit-count mismatch")
        merged = dict(self.terms)
        for s, c in other.terms.items():
            merged[s] = merged.get(s, 0.0) + c
        return PauliSum(merged, n=self.n)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "PauliSum":
        return PauliSum({s: c * scalar for s, c in self.terms.items()}, n=self.n)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliSum)
            and other.n == self.n
            and other.terms == self.terms
        )

    def __hash__(self):
        return hash((self.n, tuple(sorted(self.terms.items()))))

    def allclose(self, other: "PauliSum", tol: float = 1e-12) -> bool:
        """True when both sums have the same strings with coefficients within tol."""
        if not isinstance(other, PauliSum) or other.n != self.n:
            return False
        keys = set(self.terms) | set(other.terms)
        return all(
            abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) <= tol for k in keys
        )

    def is_zero(self) -> bool:
        return not self.terms

    def max_weight(self) -> int:
        return max((pauli_weight(s) for s in self.terms), default=0)

    def __repr__(self):
        return f"PauliSum({format_pauli_sum(self)!r}, n={self.n})"


def to_dense(H: "PauliSum | str", n: int | None = None) -> np.ndarray:
    """Dense 2^n x 2^n Hermitian matrix of a PauliSum (or a bare string)."""
    if isinstance(H, str):
        H = PauliSum({_check_string(H): 1.0})
    if n is None:
        n = H.n
    elif n != H.n:
        raise ValueError(f"PauliSum is on {H.n} qubits, requested n={n}")
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for s, c in H.terms.items():
        m = np.array([[c]], dtype=complex)
        for letter in s:
            m = np.kron(m, _MATS[letter])
        out += m
    return out


def pauli_product(a: str, b: str) -> Tuple[complex, str]:
    """Product of two Pauli strings: a·b = phase·c with phase in {±1, ±i}."""
    _check_string(a)
    _check_string(b, n=len(a))
    phase = 1.0 + 0.0j
    out = []
    for ca, cb in zip(a, b):
        ph, c = _PROD[(ca, cb)]
        phase *= ph
        out.append(c)
    return phase, "".join(out)


def commutator_norm(A: np.ndarray, B: np.ndarray) -> float:
    """Max-abs entry of AB - BA."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return float(np.abs(A @ B - B @ A).max())


def exp_generator(H: PauliSum, theta: float, n: int | None = None) -> np.ndarray:
    """Half-angle rotation generated by a Hermitian PauliSum: e^{-i(theta/2)H}.

    Circuit gates labeled R_H(theta) in the ansatz figures are exactly this,
    matching R_Y(s) = e^{-isY/2} for a single letter.  For a single Pauli
    string the closed form cos(theta/2)I - i sin(theta/2)P is used; general
    sums go through a dense Hermitian eigendecomposition (dimension <= 16 in
    practice, so this is exact to roundoff).
    """
    if n is None:
        n = H.n
    if len(H.terms) == 1:
        ((s, c),) = H.terms.items()
        half = 0.5 * theta * c
        return np.cos(half) * np.eye(2**n) - 1.0j * np.sin(half) * to_dense(
            PauliSum({s: 1.0}), n
        )
    M = to_dense(H, n)
    w, V = np.linalg.eigh(M)
    return (V * np.exp(-0.5j * theta * w)) @ V.conj().T


# -- textual syntax -------------------------------------------------------
#
# One term: optional real coefficient and '*', then either 'I' or a run of
# letter+index factors with 1-based qubit indices, identity implicit
# elsewhere, e.g.  0.5*X1X2 + 0.5*Y1Y2  or  Z2 - 0.25*I.

_FACTOR = re.compile(r"([XYZ])(\d+)")
_TERM = re.compile(
    r"^(?:([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\*)?([XYZ0-9]+|I)$"
)


def parse_pauli_sum(text: str, n: int | None = None) -> PauliSum:
    """Parse the textual Pauli-sum syntax used by the CLI and config files."""
    src = text.replace(" ", "")
    if not src:
        raise ValueError("empty Pauli-sum text")
    # split into signed terms
    pieces = re.split(r"(?=[+-])(?<![eE*])", src)
    pieces = [p for p in pieces if p and p not in "+-"]
    raw: list[tuple[float, dict[int, str]]] = []
    max_idx = 0
    for piece in pieces:
        sign = 1.0
        while piece and piece[0] in "+-":
            if piece[0] == "-":
                sign = -sign
            piece = piece[1:]
        m = _TERM.match(piece)
        if not m:
            raise ValueError(f"cannot parse Pauli term {piece!r} in {text!r}")
        coeff = sign * (float(m.group(1)) if m.group(1) else 1.0)
        body = m.group(2)
        factors: dict[int, str] = {}
        if body != "I":
            consumed = 0
            for fm in _FACTOR.finditer(body):
                consumed += len(fm.group(0))
                idx = int(fm.group(2))
                if idx < 1:
                    raise ValueError(f"qubit indices are 1-based: {piece!r}")
                if idx in factors:
                    raise ValueError(f"repeated qubit {idx} in term {piece!r}")
                factors[idx] = fm.group(1)
                max_idx = max(max_idx, idx)
            if consumed != len(body):
                raise ValueError(f"cannot parse Pauli term {piece!r} in {text!r}")
        raw.append((coeff, factors))
    if n is None:
        n = max(max_idx, 1)
    elif max_idx > n:
        raise ValueError(f"term references qubit {max_idx} but n={n}")
    terms = []
    for coeff, factors in raw:
        letters = "".join(factors.get(q, "I") for q in range(1, n + 1))
        terms.append((letters, coeff))
    return PauliSum(terms, n=n)


def _format_term(s: str, c: float) -> str:
    if all(ch == "I" for ch in s):
        body = "I"
    else:
        body = "".join(f"{ch}{q + 1}" for q, ch in enumerate(s) if ch != "I")
    if c == 1.0:
        return body
    return f"{c!r}*{body}"


def format_pauli_sum(H: PauliSum) -> str:
    """Inverse of :func:`parse_pauli_sum`; round-trips exactly.

    Terms are emitted in lexicographic string order so output is deterministic.
    """
    if not H.terms:
        return "0.0*I"
    parts = []
    for s in sorted(H.terms):
        c = H.terms[s]
        frag = _format_term(s, abs(c))
        if not parts:
            parts.append(frag if c > 0 else f"-{frag}")
        else:
            parts.append(f"+ {frag}" if c > 0 else f"- {frag}")
    return " ".join(parts)
