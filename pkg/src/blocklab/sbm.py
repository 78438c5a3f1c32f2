"""Planted-partition (block model) sampling and threshold arithmetic.

Supports the symmetric two-parameter family (``c_in``/``c_out``, including
planted colorings with ``c_in = 0``) and a general symmetric affinity matrix.
Derived quantities follow the sparse parameterization ``p_rs = c_rs / n``:

* mean degree          ``c  = (c_in + (q-1) c_out) / q``
* channel eigenvalue   ``λ  = (c_in - c_out) / (q c)``
* informative NB value ``μ  = c λ = (c_in - c_out) / q``

with the detectability (Kesten–Stigum) threshold at ``c λ² = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Graph, _rng, _sample_pair_indices, _triangular_unrank, \
    build_graph

__all__ = [
    "SbmParams",
    "DerivedParams",
    "derive_params",
    "ks_check",
    "it_bound_check",
    "sample_sbm",
    "expected_triangles_sbm",
]


# ---------------------------------------------------------------------------
# parameter types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SbmParams:
    """Block model parameters.

    Symmetric mode stores ``(q, n, c_in, c_out)``; general mode stores a
    symmetric nonnegative ``q×q`` matrix of scaled affinities ``c_rs`` (edge
    probabilities are ``c_rs / n``).  Use the :meth:`symmetric` /
    :meth:`general` constructors.
    """

    q: int
    n: int
    c_in: float | None = None
    c_out: float | None = None
    affinity: np.ndarray | None = None

    @classmethod
    def symmetric(cls, q: int, n: int, c_in: float, c_out: float) -> "SbmParams":
        if q < 2:
            raise ValueError(f"need at least two groups, got q={q}")
        if n < 1:
            raise ValueError(f"need at least one vertex, got n={n}")
        if c_in < 0 or c_out < 0:
            raise ValueError("c_in and c_out must be nonnegative")
        if max(c_in, c_out) >= n:
            raise ValueError(
                f"affinity {max(c_in, c_out)} >= n={n} gives an edge "
                "probability >= 1")
        return cls(q=q, n=n, c_in=float(c_in), c_out=float(c_out))

    @classmethod
    def general(cls, n: int, affinity) -> "SbmParams":
        a = np.asarray(affinity, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
            raise ValueError("affinity must be a q×q matrix with q >= 2")
        if not np.array_equal(a, a.T):
            raise ValueError("affinity matrix must be symmetric")
        if a.min() < 0:
            raise ValueError("affinity entries must be nonnegative")
        if n < 1:
            raise ValueError(f"need at least one vertex, got n={n}")
        if a.max() >= n:
            raise ValueError("affinity entry >= n gives an edge probability >= 1")
        return cls(q=a.shape[0], n=n, affinity=a)

    @property
    def is_symmetric_mode(self) -> bool:
        return self.affinity is None

    def affinity_matrix(self) -> np.ndarray:
        """The full ``q×q`` matrix of scaled affinities ``c_rs``."""
        if self.affinity is not None:
            return self.affinity
        a = np.full((self.q, self.q), self.c_out, dtype=np.float64)
        np.fill_diagonal(a, self.c_in)
        return a


@dataclass(frozen=True)
class DerivedParams:
    """Quantities derived from symmetric-mode parameters.

    ``coupling`` (``ln(p_in/p_out)``) is ``None`` whenever one of the edge
    probabilities vanishes; ``ks_ratio`` is ``cλ²`` and ``ks_margin`` is
    ``cλ² - 1`` (positive strictly above the detectability threshold).
    """

    c: float
    lam: float
    mu: float
    coupling: float | None
    ks_ratio: float
    ks_margin: float


def _require_symmetric(p: SbmParams, what: str) -> None:
    if not p.is_symmetric_mode:
        raise ValueError(f"{what} requires symmetric-mode parameters")


def derive_params(p: SbmParams) -> DerivedParams:
    """Mean degree, channel eigenvalue, and threshold margins for ``p``."""
    _require_symmetric(p, "derive_params")
    q, c_in, c_out = p.q, p.c_in, p.c_out
    c = (c_in + (q - 1) * c_out) / q
    lam = (c_in - c_out) / (q * c) if c > 0 else 0.0
    mu = (c_in - c_out) / q
    coupling = None
    if c_in > 0 and c_out > 0:
        coupling = float(np.log(c_in / c_out))
    ks_ratio = c * lam * lam
    return DerivedParams(c=c, lam=lam, mu=mu, coupling=coupling,
                         ks_ratio=ks_ratio, ks_margin=ks_ratio - 1.0)


_CRITICAL_TOL = 1e-12


def ks_check(p: SbmParams) -> tuple[str, float]:
    """Position of ``p`` relative to the detectability threshold.

    Returns ``(verdict, margin)`` with verdict in ``{"above", "below",
    "critical"}`` and ``margin = cλ² - 1``; ``critical`` means
    ``|cλ² - 1| < 1e-12``.
    """
    d = derive_params(p)
    if abs(d.ks_margin) < _CRITICAL_TOL:
        return "critical", d.ks_margin
    return ("above" if d.ks_margin > 0 else "below"), d.ks_margin


def it_bound_check(p: SbmParams) -> str:
    """Second-moment contiguity bound check for ``q >= 3``.

    Returns ``"undetectable-by-bound"`` when ``cλ² < 2 ln(q-1)/(q-1)`` (the
    planted model is contiguous with the null model, so no test can tell
    them apart), else ``"inconclusive"``.  For ``q = 2`` the bound coincides
    with the ``cλ² = 1`` threshold; use :func:`ks_check` there.
    """
    _require_symmetric(p, "it_bound_check")
    if p.q < 3:
        raise ValueError("it_bound_check needs q >= 3; for q=2 use ks_check")
    d = derive_params(p)
    bound = 2.0 * np.log(p.q - 1) / (p.q - 1)
    return "undetectable-by-bound" if d.ks_ratio < bound else "inconclusive"


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_sbm(p: SbmParams, seed: int,
               balanced: bool = False) -> tuple[Graph, np.ndarray]:
    """Sample a graph and its planted labels.

    Labels are i.i.d. uniform on ``[0, q)`` (or an exactly balanced random
    assignment when ``balanced=True``, requiring ``q | n``); each vertex pair
    ``(i, j)`` is then an edge independently with probability
    ``c_{σ_i σ_j} / n``.  Runs in O(m) expected time via per-block
    geometric-gap skipping.  Deterministic given ``seed``.
    """
    n, q = p.n, p.q
    a = p.affinity_matrix()
    rng = _rng(seed)
    if balanced:
        if n % q != 0:
            raise ValueError(f"balanced mode requires q | n, got n={n}, q={q}")
        labels = rng.permutation(np.repeat(np.arange(q, dtype=np.int64), n // q))
    else:
        labels = rng.integers(0, q, size=n, dtype=np.int64)

    order = np.argsort(labels, kind="stable")
    sizes = np.bincount(labels, minlength=q)
    starts = np.zeros(q + 1, dtype=np.int64)
    np.cumsum(sizes, out=starts[1:])
    members = [order[starts[r]: starts[r + 1]] for r in range(q)]

    chunks = []
    for r in range(q):
        for s in range(r, q):
            prob = a[r, s] / n
            if r == s:
                sz = sizes[r]
                lin = _sample_pair_indices(sz * (sz - 1) // 2, prob, rng)
                iu, iv = _triangular_unrank(lin, int(sz))
                u, v = members[r][iu], members[r][iv]
            else:
                lin = _sample_pair_indices(int(sizes[r] * sizes[s]), prob, rng)
                u = members[r][lin // sizes[s]]
                v = members[s][lin % sizes[s]]
            if u.size:
                chunks.append(np.column_stack([u, v]))

    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    return build_graph(n, edges), labels


def expected_triangles_sbm(p: SbmParams) -> float:
    """Expected triangle count ``(c³/6)(1 + (q-1)λ³)`` in the sparse limit."""
    d = derive_params(p)
    return (d.c ** 3 / 6.0) * (1.0 + (p.q - 1) * d.lam ** 3)
