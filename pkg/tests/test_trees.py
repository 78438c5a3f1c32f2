"""Broadcast trees and root reconstruction."""

import itertools

import numpy as np
import pytest

from blocklab import (
    ABSTAIN,
    bp_root_estimate,
    broadcast,
    faithful_fraction,
    majority_estimate,
    reconstruction_curve,
)
from blocklab.trees import _channel


def _enumerate_root_posterior(t):
    """Exact root posterior by summing over all interior color assignments.

    Independent oracle for bp_root_estimate: walks every joint coloring of
    the non-leaf nodes with the leaf colors clamped to their observed
    values and accumulates channel weights edge by edge.
    """
    q = t.q
    tmat = _channel(q, t.lam)
    interior_levels = list(range(t.depth))  # leaves are level t.depth
    sizes = [t.colors[d].shape[0] for d in interior_levels]
    post = np.zeros(q)
    for assign in itertools.product(range(q), repeat=sum(sizes)):
        # unpack the flat assignment into per-level color arrays
        level_colors = []
        at = 0
        for sz in sizes:
            level_colors.append(np.array(assign[at : at + sz], dtype=np.int64))
            at += sz
        level_colors.append(t.leaf_colors)
        w = 1.0
        for d in range(1, t.depth + 1):
            pc = level_colors[d - 1][t.parents[d]]
            w *= np.prod(tmat[pc, level_colors[d]])
        post[level_colors[0][0]] += w
    return post / post.sum()


def test_bp_root_estimate_matches_enumeration():
    rng = np.random.default_rng(0)
    cases = [(2, 2, 0.6, 2, "fixed"), (2, 3, 0.4, 2, "fixed"),
             (3, 2, 0.7, 2, "fixed"), (2, 2, 0.5, 3, "poisson")]
    for c, q, lam, depth, model in cases:
        for _ in range(3):
            t = broadcast(c, lam, q, depth, model=model,
                          seed=int(rng.integers(0, 2**31)))
            if not t.survived or t.n_nodes - t.leaf_colors.shape[0] > 8:
                continue
            exact = _enumerate_root_posterior(t)
            assert np.abs(bp_root_estimate(t) - exact).max() < 1e-12


def test_one_edge_posterior_closed_form():
    # depth 1, one child that copied: P(root = child color) = lam + (1-lam)/q
    for _ in range(20):
        t = broadcast(1, 0.3, 2, 1, seed=_)
        post = bp_root_estimate(t)
        child = int(t.leaf_colors[0])
        assert post[child] == pytest.approx(0.3 + 0.7 / 2, abs=1e-12)


def test_broadcast_structure_and_determinism():
    t = broadcast(3, 0.5, 2, 4, seed=9)
    assert [lvl.shape[0] for lvl in t.colors] == [1, 3, 9, 27, 81]
    assert t.n_nodes == 121
    t2 = broadcast(3, 0.5, 2, 4, seed=9)
    for a, b in zip(t.colors, t2.colors):
        assert np.array_equal(a, b)
    # copied flags consistent with colors
    for d in range(1, 5):
        pc = t.colors[d - 1][t.parents[d]]
        assert np.all(t.colors[d][t.copied[d]] == pc[t.copied[d]])


def test_broadcast_validation():
    with pytest.raises(ValueError):
        broadcast(2, 1.5, 2, 3)
    with pytest.raises(ValueError):
        broadcast(2, 0.5, 1, 3)
    with pytest.raises(ValueError):
        broadcast(2.5, 0.5, 2, 3, model="fixed")
    with pytest.raises(ValueError):
        broadcast(2, 0.5, 2, -1)
    with pytest.raises(ValueError):
        broadcast(2, 0.5, 2, 3, model="geometric")


def test_lambda_one_copies_exactly():
    t = broadcast(2, 1.0, 3, 6, seed=1)
    assert np.all(t.leaf_colors == t.root_color)
    assert majority_estimate(t) == t.root_color
    assert faithful_fraction(t) == 1.0
    post = bp_root_estimate(t)
    assert post[t.root_color] == pytest.approx(1.0, abs=1e-12)


def test_lambda_zero_gives_uniform_posterior():
    t = broadcast(2, 0.0, 2, 5, seed=3)
    assert np.abs(bp_root_estimate(t) - 0.5).max() < 1e-12


def test_majority_ties_go_to_lowest_color():
    t = broadcast(2, 0.5, 3, 1, seed=0)
    # force a tie by hand: two leaves, colors {2, 1}
    t.colors[1][:] = [2, 1]
    assert majority_estimate(t) == 1


def test_poisson_extinction_handling():
    # offspring rate 0.2: most trees die before depth 5
    t = None
    for s in range(50):
        t = broadcast(0.2, 0.5, 2, 5, model="poisson", seed=s)
        if not t.survived:
            break
    assert t is not None and not t.survived
    assert majority_estimate(t) == ABSTAIN
    assert np.allclose(bp_root_estimate(t), 0.5)
    assert np.isnan(faithful_fraction(t))


def test_chain_majority_equals_bp():
    # with one child per level both estimators read the single leaf
    for s in range(30):
        t = broadcast(1, 0.7, 2, 6, seed=s)
        assert majority_estimate(t) == int(np.argmax(bp_root_estimate(t)))


def test_reconstruction_curve_fields_and_se():
    pts = reconstruction_curve(2, 0.9, 2, [1, 3], 400, estimator="bp", seed=5)
    assert [p.depth for p in pts] == [1, 3]
    for p in pts:
        assert p.estimator == "bp"
        assert p.trials == 400 and p.survival_rate == 1.0
        assert p.p_hat == p.successes / p.trials
        expect_se = (p.p_hat * (1 - p.p_hat) / p.trials) ** 0.5
        assert p.std_err == pytest.approx(expect_se, abs=1e-15)
    # deeper + strong signal: success stays high
    assert pts[1].p_hat > 0.8


def test_reconstruction_curve_survival_conditioning():
    pts = reconstruction_curve(1.2, 0.8, 2, [4], 500, estimator="majority",
                               seed=0, model="poisson")
    (pt,) = pts
    assert 0.0 < pt.survival_rate < 1.0
    assert pt.trials == round(pt.survival_rate * 500)
    assert pt.successes <= pt.trials


def test_reconstruction_curve_validation():
    with pytest.raises(ValueError):
        reconstruction_curve(2, 0.5, 2, [3], 50)
    with pytest.raises(ValueError):
        reconstruction_curve(2, 0.5, 2, [3], 200, estimator="guess")


def test_reconstruction_deterministic():
    a = reconstruction_curve(2, 0.28, 2, [6], 300, seed=7)
    b = reconstruction_curve(2, 0.28, 2, [6], 300, seed=7)
    assert a[0].successes == b[0].successes
