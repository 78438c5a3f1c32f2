"""Block-model parameters, derived quantities, and sampling."""

import numpy as np
import pytest

from blocklab import (
    SbmParams,
    count_triangles,
    derive_params,
    expected_triangles_sbm,
    it_bound_check,
    ks_check,
    sample_sbm,
)


def test_derived_quantities_frozen_values():
    # q=2, c_in=5, c_out=1: c = 3, lam = 2/3, mu = 2, c*lam^2 = 4/3
    d = derive_params(SbmParams.symmetric(q=2, n=100, c_in=5, c_out=1))
    assert d.c == 3.0
    assert d.lam == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert d.mu == pytest.approx(2.0, abs=1e-15)
    assert d.ks_ratio == pytest.approx(4.0 / 3.0, abs=1e-15)
    assert d.coupling == pytest.approx(np.log(5.0), abs=1e-15)


def test_derived_quantities_planted_coloring():
    # c_in=0, q=5: lam = -1/(q-1), threshold at c = (q-1)^2 = 16
    p = SbmParams.symmetric(q=5, n=100, c_in=0, c_out=20)
    d = derive_params(p)
    assert d.c == 16.0
    assert d.lam == pytest.approx(-0.25, abs=1e-15)
    assert d.ks_ratio == pytest.approx(1.0, abs=1e-12)
    assert d.coupling is None
    assert ks_check(p)[0] == "critical"


def test_ks_check_sides():
    above = SbmParams.symmetric(q=2, n=100, c_in=5, c_out=1)
    below = SbmParams.symmetric(q=2, n=100, c_in=3, c_out=2)
    assert ks_check(above) == ("above", pytest.approx(1.0 / 3.0, abs=1e-15))
    verdict, margin = ks_check(below)
    assert verdict == "below" and margin < 0


def test_it_bound_check():
    # q=5 window: bound = 2 ln 4 / 4 ≈ 0.6931; pick c*lam^2 on each side
    inside = SbmParams.symmetric(q=5, n=1000, c_in=0, c_out=12.5)  # c=10, ratio 0.625
    assert derive_params(inside).ks_ratio == pytest.approx(0.625, abs=1e-15)
    assert it_bound_check(inside) == "undetectable-by-bound"
    outside = SbmParams.symmetric(q=5, n=1000, c_in=0, c_out=15)  # c=12, ratio 0.75
    assert it_bound_check(outside) == "inconclusive"
    with pytest.raises(ValueError):
        it_bound_check(SbmParams.symmetric(q=2, n=10, c_in=3, c_out=1))


def test_params_validation():
    with pytest.raises(ValueError):
        SbmParams.symmetric(q=1, n=10, c_in=1, c_out=1)
    with pytest.raises(ValueError):
        SbmParams.symmetric(q=2, n=10, c_in=-1, c_out=1)
    with pytest.raises(ValueError):
        SbmParams.symmetric(q=2, n=10, c_in=10, c_out=1)
    with pytest.raises(ValueError):
        SbmParams.general(10, [[1, 2], [3, 1]])  # not symmetric
    with pytest.raises(ValueError):
        derive_params(SbmParams.general(10, [[1, 2], [2, 1]]))


def test_affinity_matrix_symmetric_mode():
    p = SbmParams.symmetric(q=3, n=10, c_in=4, c_out=1)
    a = p.affinity_matrix()
    assert a.tolist() == [[4, 1, 1], [1, 4, 1], [1, 1, 4]]


def test_sample_sbm_determinism_and_assortativity():
    p = SbmParams.symmetric(q=2, n=3000, c_in=8, c_out=1)
    g1, t1 = sample_sbm(p, seed=11)
    g2, t2 = sample_sbm(p, seed=11)
    assert np.array_equal(g1.edges, g2.edges)
    assert np.array_equal(t1, t2)
    # with c_in >> c_out most edges are within-group
    same = (t1[g1.edges[:, 0]] == t1[g1.edges[:, 1]]).mean()
    assert same > 0.7


def test_sample_sbm_planted_coloring_has_no_monochromatic_edges():
    p = SbmParams.symmetric(q=3, n=2000, c_in=0, c_out=6)
    g, t = sample_sbm(p, seed=5)
    assert g.m > 0
    assert not np.any(t[g.edges[:, 0]] == t[g.edges[:, 1]])


def test_sample_sbm_balanced_mode():
    p = SbmParams.symmetric(q=4, n=400, c_in=3, c_out=1)
    _, t = sample_sbm(p, seed=0, balanced=True)
    assert np.bincount(t).tolist() == [100, 100, 100, 100]
    with pytest.raises(ValueError):
        sample_sbm(SbmParams.symmetric(q=3, n=100, c_in=3, c_out=1), seed=0,
                   balanced=True)


def test_sample_sbm_general_mode_block_rates():
    # strongly heterogeneous affinities show up in the realized block counts
    a = [[0.0, 9.0], [9.0, 0.0]]
    p = SbmParams.general(4000, a)
    g, t = sample_sbm(p, seed=2)
    assert not np.any(t[g.edges[:, 0]] == t[g.edges[:, 1]])
    # expected edge count: n0*n1 * 9/n
    n0 = int((t == 0).sum())
    expect = n0 * (4000 - n0) * 9.0 / 4000
    assert abs(g.m - expect) < 5 * expect**0.5


def test_expected_triangles_formula_frozen_values():
    # q=2, c_in=5, c_out=1: (27/6)(1 + (2/3)^3) = 4.5 * 35/27 = 35/6
    p = SbmParams.symmetric(q=2, n=500, c_in=5, c_out=1)
    assert expected_triangles_sbm(p) == pytest.approx(35.0 / 6.0, abs=1e-12)
    # lam = 0 reduces to the ER value c^3/6
    er_like = SbmParams.symmetric(q=2, n=500, c_in=3, c_out=3)
    assert expected_triangles_sbm(er_like) == pytest.approx(4.5, abs=1e-12)


def test_triangle_count_mean_tracks_formula():
    # cheap version of the statistics check: 40 samples, loose 4-sigma band
    p = SbmParams.symmetric(q=2, n=500, c_in=5, c_out=1)
    counts = [count_triangles(sample_sbm(p, seed=s)[0]) for s in range(40)]
    mean = float(np.mean(counts))
    se = float(np.std(counts, ddof=1)) / len(counts) ** 0.5
    assert abs(mean - 35.0 / 6.0) < 4 * se
