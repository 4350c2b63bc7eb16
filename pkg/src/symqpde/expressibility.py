"""Fidelity-distribution sampling and KL divergence against the Haar
baseline.

A circuit family's expressibility is probed by drawing pairs of fully
independent configurations — trainable parameters uniform on [0, 2pi) and
data inputs uniform on the problem domain — and histogramming the pairwise
state fidelities |<psi1|psi2>|^2.  The reference is the fidelity density of
Haar-random pure states in dimension N, P(F) = (N-1)(1-F)^(N-2), integrated
exactly over each bin.  Lower KL against that reference means the family
explores state space more uniformly.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .ansatz import get_ansatz
from .errors import NumericIntegrityError
from .simulator import run_batch_per_sample

__all__ = [
    "FidelityHistogram", "KlReport", "DOMAIN_SAMPLERS", "domain_for_ansatz",
    "sample_domain", "fidelities", "sample_fidelities", "haar_bin_mass",
    "kl_divergence", "expressibility_report",
]

DEFAULT_PAIRS = 5000
DEFAULT_BINS = 75


@dataclasses.dataclass(frozen=True, eq=False)
class FidelityHistogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int

    def __post_init__(self):
        if int(self.counts.sum()) != self.total:
            raise ValueError("histogram counts do not sum to the total")
        widths = np.diff(self.edges)
        if not np.allclose(widths, widths[0], atol=1e-12):
            raise ValueError("bin edges must be uniform on [0, 1]")

    @property
    def frequencies(self):
        return self.counts / self.total


@dataclasses.dataclass(frozen=True)
class KlReport:
    ansatz: str
    p: int
    kl: float
    pairs: int
    bin_count: int
    seed: int
    dim: int


# ---------------------------------------------------------------------------
# domain sampling


def _sample_disk(rng, count):
    out = np.empty((0, 2))
    while out.shape[0] < count:
        draw = rng.uniform(-1.0, 1.0, size=(2 * count + 16, 2))
        out = np.vstack([out, draw[np.hypot(draw[:, 0], draw[:, 1]) < 1.0]])
    return out[:count]


def _sample_disk_time(rng, count):
    xy = _sample_disk(rng, count)
    return np.column_stack([xy, rng.uniform(0.0, 0.5, count)])


def _sample_rect_time(rng, count):
    return np.column_stack([rng.uniform(-1.0, 1.0, count),
                            rng.uniform(0.0, 1.0, count)])


DOMAIN_SAMPLERS = {
    "disk": _sample_disk,
    "disk_time": _sample_disk_time,
    "rect_time": _sample_rect_time,
}


def domain_for_ansatz(name, n=2):
    """The data domain each circuit family reads from."""
    if name == "z2":
        return "rect_time"
    if name == "so2_time" or (name == "qpinn" and n == 3):
        return "disk_time"
    return "disk"


def sample_domain(domain, rng, count):
    if domain not in DOMAIN_SAMPLERS:
        raise ValueError(
            f"unknown domain {domain!r}; choose from {sorted(DOMAIN_SAMPLERS)}")
    return DOMAIN_SAMPLERS[domain](rng, count)


# ---------------------------------------------------------------------------
# fidelities


def fidelities(states_a, states_b):
    """|<a_i|b_i>|^2 row by row."""
    overlaps = np.einsum("ij,ij->i", np.conj(states_a), states_b)
    return np.abs(overlaps) ** 2


def sample_fidelities(circuit, domain, pairs=DEFAULT_PAIRS, seed=0,
                      bin_count=DEFAULT_BINS):
    """Histogram of state fidelities over independently drawn (theta, z)
    pairs: parameters uniform on [0, 2pi), inputs uniform on the domain."""
    if pairs < 1:
        raise ValueError("need at least one pair")
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(0.0, 2.0 * np.pi, size=(2 * pairs, circuit.n_params))
    Z = sample_domain(domain, rng, 2 * pairs)[:, :circuit.input_dim]
    states = run_batch_per_sample(circuit, thetas, Z)
    f = fidelities(states[0::2], states[1::2])
    if f.min() < -1e-12 or f.max() > 1.0 + 1e-12:
        raise NumericIntegrityError("fidelity outside [0, 1]")
    f = np.clip(f, 0.0, 1.0)
    edges = np.linspace(0.0, 1.0, bin_count + 1)
    counts, _ = np.histogram(f, bins=edges)
    return FidelityHistogram(edges=edges, counts=counts, total=pairs)


def haar_bin_mass(edges, N):
    """Exact Haar-fidelity probability of each bin: the density
    (N-1)(1-F)^(N-2) integrates to (1-a)^(N-1) - (1-b)^(N-1) on [a, b]."""
    if N < 2:
        raise ValueError("Hilbert dimension must be at least 2")
    edges = np.asarray(edges, dtype=float)
    cdf_tail = (1.0 - edges) ** (N - 1)
    return cdf_tail[:-1] - cdf_tail[1:]


def kl_divergence(h, q):
    """Sum of p ln(p/q) over bins with p > 0 (0 ln 0 = 0); p is empirical."""
    p = h.frequencies if isinstance(h, FidelityHistogram) else \
        np.asarray(h, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("histogram and reference have different bin counts")
    mask = p > 0
    if np.any(q[mask] == 0):
        raise NumericIntegrityError(
            "reference mass is zero on a populated bin")
    value = float(np.sum(p[mask] * np.log(p[mask] / q[mask])))
    assert value > -1e-12  # Gibbs' inequality up to roundoff
    return max(value, 0.0)


def expressibility_report(ansatz_name, p, pairs=DEFAULT_PAIRS, seed=0, n=2,
                          bin_count=DEFAULT_BINS, rotations_per_qubit=3):
    circuit, spec = get_ansatz(ansatz_name, p=p, n=n,
                               rotations_per_qubit=rotations_per_qubit)
    domain = domain_for_ansatz(ansatz_name, n=spec.n if ansatz_name == "qpinn"
                               else n)
    hist = sample_fidelities(circuit, domain, pairs=pairs, seed=seed,
                             bin_count=bin_count)
    dim = 2 ** spec.n
    kl = kl_divergence(hist, haar_bin_mass(hist.edges, dim))
    return KlReport(ansatz=ansatz_name, p=p, kl=kl, pairs=pairs,
                    bin_count=bin_count, seed=seed, dim=dim)
