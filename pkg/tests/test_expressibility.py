"""Tests for fidelity sampling and the Haar-baseline KL divergence."""

import numpy as np
import pytest

from symqpde.ansatz import get_ansatz
from symqpde.errors import NumericIntegrityError
from symqpde.expressibility import (
    FidelityHistogram,
    domain_for_ansatz,
    expressibility_report,
    fidelities,
    haar_bin_mass,
    kl_divergence,
    sample_domain,
    sample_fidelities,
)


# ---------------------------------------------------------------------------
# fidelity basics


def test_self_fidelity_is_one():
    rng = np.random.default_rng(0)
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    v /= np.linalg.norm(v)
    assert fidelities(v[None, :], v[None, :])[0] == pytest.approx(1.0,
                                                                  abs=1e-14)


def test_orthogonal_states_have_zero_fidelity():
    a = np.array([[1.0, 0.0, 0.0, 0.0]], dtype=complex)
    b = np.array([[0.0, 0.0, 1.0, 0.0]], dtype=complex)
    assert fidelities(a, b)[0] == 0.0


def test_sampled_fidelities_land_in_unit_interval():
    circ, _ = get_ansatz("k4", p=1)
    hist = sample_fidelities(circ, "disk", pairs=5000, seed=1)
    assert hist.total == 5000
    assert int(hist.counts.sum()) == 5000
    assert hist.counts.min() >= 0
    np.testing.assert_allclose(hist.edges, np.linspace(0, 1, 76), atol=1e-15)


def test_sampling_is_deterministic_given_seed():
    circ, _ = get_ansatz("so2", p=2)
    a = sample_fidelities(circ, "disk", pairs=400, seed=7)
    b = sample_fidelities(circ, "disk", pairs=400, seed=7)
    c = sample_fidelities(circ, "disk", pairs=400, seed=8)
    np.testing.assert_array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def test_sample_count_validation():
    circ, _ = get_ansatz("k4", p=1)
    with pytest.raises(ValueError, match="at least one"):
        sample_fidelities(circ, "disk", pairs=0)


def test_histogram_invariants_enforced():
    edges = np.linspace(0, 1, 4)
    with pytest.raises(ValueError, match="sum"):
        FidelityHistogram(edges=edges, counts=np.array([1, 1, 1]), total=5)
    with pytest.raises(ValueError, match="uniform"):
        FidelityHistogram(edges=np.array([0.0, 0.5, 0.6, 1.0]),
                          counts=np.array([1, 1, 1]), total=3)


# ---------------------------------------------------------------------------
# domains


def test_disk_domain_is_inside_unit_circle():
    pts = sample_domain("disk", np.random.default_rng(0), 500)
    assert pts.shape == (500, 2)
    assert np.all(np.hypot(pts[:, 0], pts[:, 1]) < 1.0)


def test_disk_time_domain_ranges():
    pts = sample_domain("disk_time", np.random.default_rng(1), 500)
    assert pts.shape == (500, 3)
    assert np.all(np.hypot(pts[:, 0], pts[:, 1]) < 1.0)
    assert pts[:, 2].min() >= 0.0 and pts[:, 2].max() <= 0.5


def test_rect_time_domain_ranges():
    pts = sample_domain("rect_time", np.random.default_rng(2), 500)
    assert np.all((pts[:, 0] >= -1) & (pts[:, 0] <= 1))
    assert np.all((pts[:, 1] >= 0) & (pts[:, 1] <= 1))
    with pytest.raises(ValueError, match="unknown domain"):
        sample_domain("torus", np.random.default_rng(0), 5)


def test_domain_assignment_per_ansatz():
    assert domain_for_ansatz("k4") == "disk"
    assert domain_for_ansatz("so2") == "disk"
    assert domain_for_ansatz("qpinn", n=2) == "disk"
    assert domain_for_ansatz("qpinn", n=3) == "disk_time"
    assert domain_for_ansatz("so2_time") == "disk_time"
    assert domain_for_ansatz("z2") == "rect_time"
    assert domain_for_ansatz("k4_4q") == "disk"


# ---------------------------------------------------------------------------
# Haar reference


@pytest.mark.parametrize("N", [2, 4, 8, 16])
def test_haar_masses_sum_to_one(N):
    edges = np.linspace(0, 1, 76)
    q = haar_bin_mass(edges, N)
    assert q.shape == (75,)
    assert np.all(q > 0)
    assert q.sum() == pytest.approx(1.0, abs=1e-14)


def test_haar_n2_is_uniform():
    q = haar_bin_mass(np.linspace(0, 1, 76), 2)
    np.testing.assert_allclose(q, np.full(75, 1 / 75), atol=1e-15)


def test_haar_mean_fidelity_is_one_over_n():
    edges = np.linspace(0, 1, 76)
    mids = 0.5 * (edges[:-1] + edges[1:])
    q = haar_bin_mass(edges, 4)
    assert float(mids @ q) == pytest.approx(0.25, abs=1e-3)


def test_haar_requires_dimension_two():
    with pytest.raises(ValueError, match="at least 2"):
        haar_bin_mass(np.linspace(0, 1, 76), 1)


# ---------------------------------------------------------------------------
# KL divergence


def test_kl_of_identical_distributions_is_zero():
    q = haar_bin_mass(np.linspace(0, 1, 76), 4)
    assert kl_divergence(q, q) == 0.0


def test_kl_against_empirical_haar_samples_is_small():
    rng = np.random.default_rng(3)
    n = 5000
    a = rng.standard_normal((n, 4)) + 1j * rng.standard_normal((n, 4))
    b = rng.standard_normal((n, 4)) + 1j * rng.standard_normal((n, 4))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    f = fidelities(a, b)
    edges = np.linspace(0, 1, 76)
    counts, _ = np.histogram(f, bins=edges)
    hist = FidelityHistogram(edges=edges, counts=counts, total=n)
    kl = kl_divergence(hist, haar_bin_mass(edges, 4))
    assert 0.0 <= kl < 0.02


def test_point_mass_histogram_has_large_kl():
    edges = np.linspace(0, 1, 76)
    counts = np.zeros(75, dtype=int)
    counts[-1] = 5000
    hist = FidelityHistogram(edges=edges, counts=counts, total=5000)
    kl = kl_divergence(hist, haar_bin_mass(edges, 4))
    # all mass in the last bin: KL = ln(1/q_last) = 3 ln 75
    assert kl == pytest.approx(3 * np.log(75), rel=1e-12)
    assert kl > 5


def test_kl_flags_zero_reference_on_populated_bin():
    p = np.array([0.5, 0.5])
    q = np.array([1.0, 0.0])
    with pytest.raises(NumericIntegrityError, match="zero"):
        kl_divergence(p, q)
    with pytest.raises(ValueError, match="bin counts"):
        kl_divergence(np.array([1.0]), np.array([0.5, 0.5]))


def test_kl_nonnegative_on_random_histograms():
    rng = np.random.default_rng(4)
    q = haar_bin_mass(np.linspace(0, 1, 76), 4)
    for _ in range(25):
        counts = rng.multinomial(1000, q)
        hist = FidelityHistogram(edges=np.linspace(0, 1, 76), counts=counts,
                                 total=1000)
        assert kl_divergence(hist, q) >= 0.0


# ---------------------------------------------------------------------------
# reports


def test_report_fields_and_determinism():
    r1 = expressibility_report("k4", p=1, pairs=300, seed=5)
    r2 = expressibility_report("k4", p=1, pairs=300, seed=5)
    assert r1 == r2
    assert r1.ansatz == "k4" and r1.p == 1 and r1.dim == 4
    assert r1.pairs == 300 and r1.bin_count == 75
    assert r1.kl >= 0.0


def test_report_uses_three_qubit_dimension_for_time_ansatz():
    r = expressibility_report("so2_time", p=1, pairs=200, seed=0)
    assert r.dim == 8


def test_baseline_scores_lower_kl_than_invariant_family():
    # the unconstrained family explores state space more uniformly
    base = expressibility_report("qpinn", p=2, pairs=2000, seed=11)
    inv = expressibility_report("k4", p=2, pairs=2000, seed=11)
    assert base.kl < inv.kl
