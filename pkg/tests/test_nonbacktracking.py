"""Directed-edge operator: exact small-graph spectra, identities, clustering."""

import numpy as np
import pytest

from blocklab import (
    SbmParams,
    build_graph,
    build_nb,
    bulk_fraction,
    count_triangles,
    full_spectrum,
    leading_spectrum,
    nb_cluster,
    overlap,
    sample_sbm,
)


def _triangle():
    return build_graph(3, [[0, 1], [1, 2], [0, 2]])


def _k4():
    return build_graph(4, [[i, j] for i in range(4) for j in range(i + 1, 4)])


def test_triangle_spectrum_exact():
    # the triangle's operator is two disjoint directed 3-cycles: its six
    # eigenvalues are the cube roots of unity, each twice
    g = _triangle()
    vals = full_spectrum(build_nb(g), g)
    w = np.exp(2j * np.pi / 3)
    expected = np.array([1, 1, w, w, np.conj(w), np.conj(w)])
    got = np.sort_complex(np.round(vals, 10))
    want = np.sort_complex(np.round(expected, 10))
    assert np.allclose(got, want, atol=1e-8)


def test_path_operator_is_nilpotent():
    # on a path every walk without backtracking falls off the end
    g = build_graph(4, [[0, 1], [1, 2], [2, 3]])
    op = build_nb(g)
    b = op.to_dense()
    assert np.allclose(np.linalg.matrix_power(b, 6), 0.0)
    vals = full_spectrum(op, g)
    assert np.max(np.abs(vals)) < 1e-8


def test_k4_leading_eigenvalue_is_degree_minus_one():
    g = _k4()
    spec = leading_spectrum(build_nb(g), g, k=2)
    assert spec.eigenvalues[0].real == pytest.approx(2.0, abs=1e-10)
    assert abs(spec.eigenvalues[0].imag) < 1e-10
    assert spec.method == "dense-companion"
    assert spec.residuals[0] < 1e-10


def test_matvec_matches_dense():
    p = SbmParams.symmetric(q=2, n=40, c_in=6, c_out=2)
    g, _ = sample_sbm(p, seed=0)
    op = build_nb(g)
    b = op.to_dense()
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.standard_normal(op.narcs)
        assert np.allclose(op.matvec(x), b @ x, atol=1e-12)


def test_trace_identities():
    # tr B = 0, tr B^2 = 0 (simple graph), tr B^3 = 6 * #triangles
    p = SbmParams.symmetric(q=2, n=60, c_in=8, c_out=2)
    g, _ = sample_sbm(p, seed=3)
    b = build_nb(g).to_dense()
    assert abs(np.trace(b)) < 1e-12
    assert abs(np.trace(b @ b)) < 1e-12
    assert np.trace(b @ b @ b) == pytest.approx(6 * count_triangles(g), abs=1e-8)


def test_companion_matches_direct_arc_solve():
    # same graph, both code paths, same eigenvalue multiset
    p = SbmParams.symmetric(q=2, n=50, c_in=6, c_out=1)
    g, _ = sample_sbm(p, seed=5)
    assert g.m > g.n  # companion path applies and must append ±1 pairs
    op = build_nb(g)
    via_companion = np.sort_complex(np.round(full_spectrum(op, g), 8))
    direct = np.sort_complex(np.round(np.linalg.eigvals(op.to_dense()), 8))
    assert via_companion.shape == direct.shape
    assert np.allclose(via_companion, direct, atol=1e-6)


def test_forest_uses_direct_path():
    g = build_graph(5, [[0, 1], [1, 2], [1, 3], [3, 4]])
    spec = leading_spectrum(build_nb(g), g, k=2)
    assert spec.method == "dense-direct"
    assert np.max(np.abs(spec.eigenvalues)) < 1e-8


def test_eigenvector_residuals_small():
    p = SbmParams.symmetric(q=2, n=200, c_in=5, c_out=1)
    g, _ = sample_sbm(p, seed=2)
    spec = leading_spectrum(build_nb(g), g, k=2)
    for j in range(2):
        if spec.edge_vectors[j] is not None:
            assert spec.residuals[j] < 1e-8


def test_spectrum_deterministic():
    p = SbmParams.symmetric(q=2, n=800, c_in=5, c_out=1)
    g, _ = sample_sbm(p, seed=4)
    s1 = leading_spectrum(build_nb(g), g, k=3, seed=11)
    s2 = leading_spectrum(build_nb(g), g, k=3, seed=11)
    assert np.array_equal(s1.eigenvalues, s2.eigenvalues)
    for a, b in zip(s1.edge_vectors, s2.edge_vectors):
        assert (a is None) == (b is None)
        if a is not None:
            assert np.array_equal(a, b)


def test_leading_spectrum_validation():
    g = _triangle()
    with pytest.raises(ValueError):
        leading_spectrum(build_nb(g), g, k=0)
    with pytest.raises(ValueError):
        leading_spectrum(build_nb(g), g, k=7)
    with pytest.raises(ValueError):
        full_spectrum(build_nb(g), build_graph(501, [[0, 1]]))


def test_vector_accessor_raises_for_missing():
    p = SbmParams.symmetric(q=2, n=30, c_in=6, c_out=2)
    g, _ = sample_sbm(p, seed=1)
    spec = leading_spectrum(build_nb(g), g, k=2 * g.m)
    missing = [j for j, v in enumerate(spec.edge_vectors) if v is None]
    assert missing  # the ±1 block carries no vectors
    with pytest.raises(ValueError):
        spec.vector(missing[0])


def test_cluster_two_cliques():
    # two K5s joined by one edge: the second eigenvector splits the cliques
    edges = [[i, j] for i in range(5) for j in range(i + 1, 5)]
    edges += [[5 + i, 5 + j] for i in range(5) for j in range(i + 1, 5)]
    edges += [[0, 5]]
    g = build_graph(10, edges)
    spec = leading_spectrum(build_nb(g), g, k=2)
    res = nb_cluster(g, 2, spec, seed=0)
    truth = np.array([0] * 5 + [1] * 5)
    assert overlap(res.labels, truth, 2) == 1.0
    assert not res.low_confidence


def test_cluster_below_threshold_flags_low_confidence():
    p = SbmParams.symmetric(q=2, n=2000, c_in=3.8, c_out=2.2)  # c*lam^2 = 0.2
    g, truth = sample_sbm(p, seed=0)
    spec = leading_spectrum(build_nb(g), g, k=2, seed=0)
    res = nb_cluster(g, 2, spec, seed=0)
    assert res.low_confidence
    assert abs(overlap(res.labels, truth, 2)) < 0.1


def test_cluster_validation():
    g = _k4()
    spec = leading_spectrum(build_nb(g), g, k=2)
    with pytest.raises(ValueError):
        nb_cluster(g, 1, spec)
    with pytest.raises(ValueError):
        nb_cluster(g, 5, spec)  # spectrum only has 2 eigenvalues


def test_bulk_fraction():
    vals = np.array([3.0, 2.0, 1.0 + 0.5j, -0.8, 0.1j])
    # radius (1+0.05)*sqrt(3) ≈ 1.815: 3 of 5 inside
    assert bulk_fraction(vals, c=3.0) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        bulk_fraction(np.empty(0), c=3.0)
    with pytest.raises(ValueError):
        bulk_fraction(vals, c=-1.0)
