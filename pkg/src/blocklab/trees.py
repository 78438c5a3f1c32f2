"""Broadcast on trees and root-color reconstruction.

A root color is drawn uniformly from [0, q); each child copies its
parent's color with probability lam and otherwise draws uniformly.  The
channel on one edge is T = lam * I + (1 - lam) * J/q.  Reconstructing the
root from the colors of generation ell succeeds (better than chance, as
ell grows) exactly when c * lam^2 > 1, where c is the mean offspring
number; reconstruction_curve measures this empirically for the plurality
estimator and for exact Bayesian inference up the tree.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LabeledTree",
    "ReconstructionPoint",
    "broadcast",
    "majority_estimate",
    "bp_root_estimate",
    "reconstruction_curve",
    "faithful_fraction",
]

log = logging.getLogger(__name__)

ABSTAIN = -1


@dataclass(frozen=True)
class LabeledTree:
    """A colored broadcast tree, stored level by level.

    colors[d] holds the colors of generation d; parents[d][i] is the
    index (within generation d-1) of node i's parent; copied[d][i] says
    whether node i copied its parent's color rather than resampling.
    parents[0] and copied[0] are empty (the root has no parent).
    """

    q: int
    lam: float
    depth: int
    model: str
    offspring: float
    colors: list[np.ndarray]
    parents: list[np.ndarray]
    copied: list[np.ndarray]

    @property
    def root_color(self) -> int:
        return int(self.colors[0][0])

    @property
    def leaf_colors(self) -> np.ndarray:
        return self.colors[self.depth]

    @property
    def survived(self) -> bool:
        return self.leaf_colors.shape[0] > 0

    @property
    def n_nodes(self) -> int:
        return sum(level.shape[0] for level in self.colors)


def broadcast(
    c: float,
    lam: float,
    q: int,
    depth: int,
    model: str = "fixed",
    seed: int | np.random.SeedSequence = 0,
) -> LabeledTree:
    """Grow a depth-`depth` broadcast tree with copy probability lam.

    model="fixed" gives every node exactly c children (c must be a
    positive integer); model="poisson" draws each node's offspring count
    as Poisson(c), so the tree can die out.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"copy probability must be in [0, 1], got {lam}")
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    if model == "fixed":
        if c < 1 or c != int(c):
            raise ValueError(f"fixed offspring count must be a positive integer, got {c}")
    elif model == "poisson":
        if c < 0:
            raise ValueError(f"offspring rate must be >= 0, got {c}")
    else:
        raise ValueError(f"model must be 'fixed' or 'poisson', got {model!r}")

    rng = np.random.default_rng(seed)
    colors = [rng.integers(0, q, size=1, dtype=np.int64)]
    parents = [np.empty(0, dtype=np.int64)]
    copied = [np.empty(0, dtype=bool)]
    for _ in range(depth):
        prev = colors[-1]
        k = prev.shape[0]
        if k == 0:
            counts = np.empty(0, dtype=np.int64)
        elif model == "fixed":
            counts = np.full(k, int(c), dtype=np.int64)
        else:
            counts = rng.poisson(c, size=k).astype(np.int64)
        par = np.repeat(np.arange(k, dtype=np.int64), counts)
        nkids = par.shape[0]
        copy_mask = rng.random(nkids) < lam
        fresh = rng.integers(0, q, size=nkids, dtype=np.int64)
        kid_colors = np.where(copy_mask, prev[par], fresh)
        colors.append(kid_colors)
        parents.append(par)
        copied.append(copy_mask)
    return LabeledTree(
        q=q,
        lam=float(lam),
        depth=depth,
        model=model,
        offspring=float(c),
        colors=colors,
        parents=parents,
        copied=copied,
    )


def majority_estimate(t: LabeledTree) -> int:
    """Plurality color of the deepest generation; ties go to the lowest
    color index.  Returns ABSTAIN (-1) if that generation is empty."""
    if t.depth < 1:
        raise ValueError("majority needs depth >= 1")
    leaves = t.leaf_colors
    if leaves.shape[0] == 0:
        return ABSTAIN
    return int(np.argmax(np.bincount(leaves, minlength=t.q)))


def _channel(q: int, lam: float) -> np.ndarray:
    return lam * np.eye(q) + (1.0 - lam) * np.full((q, q), 1.0 / q)


def bp_root_estimate(t: LabeledTree) -> np.ndarray:
    """Exact posterior over the root color given the deepest generation.

    Interior colors are summed out by a leaf-to-root pass; log-space
    throughout, since deep trees multiply thousands of per-edge factors.
    An extinct tree carries no evidence and yields the uniform posterior.
    """
    q = t.q
    tmat = _channel(q, t.lam)
    leaves = t.leaf_colors
    if leaves.shape[0] == 0:
        return np.full(q, 1.0 / q)
    # log-likelihood of observed descendants per (node, own color)
    loglik = np.where(
        np.arange(q)[None, :] == leaves[:, None], 0.0, -np.inf
    )
    for d in range(t.depth, 0, -1):
        shift = loglik.max(axis=1, keepdims=True)
        w = np.exp(loglik - shift) @ tmat.T
        with np.errstate(divide="ignore"):
            msg = np.log(w) + shift
        up = np.zeros((t.colors[d - 1].shape[0], q))
        np.add.at(up, t.parents[d], msg)
        loglik = up
    root = loglik[0]
    root = root - root.max()
    post = np.exp(root)
    return post / post.sum()


def faithful_fraction(t: LabeledTree) -> float:
    """Fraction of the deepest generation connected to the root by an
    unbroken chain of copy events.  Diagnostic only; NaN if extinct."""
    if not t.survived:
        return float("nan")
    faithful = np.ones(1, dtype=bool)
    for d in range(1, t.depth + 1):
        faithful = faithful[t.parents[d]] & t.copied[d]
    return float(faithful.mean())


@dataclass(frozen=True)
class ReconstructionPoint:
    """Success rate of one estimator at one depth."""

    depth: int
    estimator: str
    successes: int
    trials: int
    p_hat: float
    std_err: float
    survival_rate: float


def reconstruction_curve(
    c: float,
    lam: float,
    q: int,
    depths: list[int],
    trials: int,
    estimator: str = "majority",
    seed: int = 0,
    model: str = "fixed",
) -> list[ReconstructionPoint]:
    """Monte Carlo success probability of root reconstruction per depth.

    Success means the estimator returns exactly the root color; exact
    ties inside an estimator resolve to the lowest color index and only
    count when that happens to match.  Extinct trees (possible under the
    poisson model) are excluded from both numerator and denominator; the
    survival rate is reported and logged.
    """
    if trials < 100:
        raise ValueError(f"trials must be >= 100, got {trials}")
    if estimator not in ("majority", "bp"):
        raise ValueError(f"estimator must be 'majority' or 'bp', got {estimator!r}")
    root_ss = np.random.SeedSequence(seed)
    trial_seeds = root_ss.spawn(len(depths) * trials)
    points = []
    for di, depth in enumerate(depths):
        successes = 0
        used = 0
        for j in range(trials):
            t = broadcast(
                c, lam, q, depth, model=model, seed=trial_seeds[di * trials + j]
            )
            if not t.survived:
                continue
            used += 1
            if estimator == "majority":
                guess = majority_estimate(t)
            else:
                guess = int(np.argmax(bp_root_estimate(t)))
            if guess == t.root_color:
                successes += 1
        p_hat = successes / used if used else float("nan")
        se = math.sqrt(p_hat * (1.0 - p_hat) / used) if used else float("nan")
        survival = used / trials
        if survival < 1.0:
            log.info(
                "depth %d: %d/%d trials survived (%.3f)",
                depth,
                used,
                trials,
                survival,
            )
        points.append(
            ReconstructionPoint(
                depth=depth,
                estimator=estimator,
                successes=successes,
                trials=used,
                p_hat=p_hat,
                std_err=se,
                survival_rate=survival,
            )
        )
    return points
