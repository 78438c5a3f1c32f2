"""Sparse undirected graphs with a canonical directed-arc index.

Graphs are stored once as a sorted edge list (``u < v``) and once as a CSR
adjacency structure whose arc ordering is lexicographic in ``(source,
target)``.  That arc order is the canonical directed-edge index used by the
message-passing and non-backtracking code: arc ``t`` runs from ``arc_src[t]``
to ``indices[t]`` and ``rev[t]`` is the opposite arc, so ``rev`` is an
involution without fixed points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Graph",
    "DegreeStats",
    "build_graph",
    "degree_stats",
    "count_triangles",
    "sample_er",
    "sample_regular",
    "adjacency_matrix",
    "read_edge_list",
    "write_edge_list",
    "read_labels",
    "write_labels",
]


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with a canonical arc index.

    Attributes
    ----------
    n : int
        Number of vertices (labelled ``0 .. n-1``).
    edges : np.ndarray
        ``(m, 2)`` int64 array, each row ``u < v``, rows sorted
        lexicographically.
    indptr, indices : np.ndarray
        CSR adjacency; the 2m arcs appear in lexicographic ``(src, dst)``
        order, so ``indices[indptr[v]:indptr[v+1]]`` is sorted.
    arc_src : np.ndarray
        Source vertex of each arc (length 2m).
    rev : np.ndarray
        ``rev[t]`` is the arc opposite to ``t``; ``rev[rev] == identity``.
    """

    n: int
    edges: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    arc_src: np.ndarray
    rev: np.ndarray

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]


@dataclass(frozen=True)
class DegreeStats:
    degrees: np.ndarray = field(repr=False)
    mean: float
    max: int
    min: int


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def build_graph(n: int, edge_list) -> Graph:
    """Build a :class:`Graph` from an iterable of vertex pairs.

    Parameters
    ----------
    n : int
        Vertex count; endpoints must lie in ``[0, n)``.
    edge_list : array-like
        ``(m, 2)`` pairs in any order/orientation.  Self-loops and duplicate
        edges (in either orientation) are rejected with ``ValueError``.
    """
    if n < 0:
        raise ValueError(f"vertex count must be nonnegative, got {n}")
    edges = np.asarray(edge_list, dtype=np.int64).reshape(-1, 2)
    m = edges.shape[0]
    if m > 0:
        if edges.min() < 0 or edges.max() >= n:
            raise ValueError("edge endpoint out of range [0, n)")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self-loops are not allowed")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        order = np.lexsort((hi, lo))
        edges = np.column_stack([lo[order], hi[order]])
        key = edges[:, 0] * n + edges[:, 1]
        if np.any(np.diff(key) == 0):
            raise ValueError("duplicate edges are not allowed")
    else:
        edges = edges.reshape(0, 2)

    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.lexsort((dst, src))
    arc_src = src[order]
    indices = dst[order]
    degrees = np.bincount(arc_src, minlength=n).astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=indptr[1:])

    # The arc list is sorted by (src, dst), so the reverse arc of t is found
    # by one vectorized binary search on the packed keys.
    fwd_key = arc_src * n + indices
    rev_key = indices * n + arc_src
    rev = np.searchsorted(fwd_key, rev_key).astype(np.int64)
    return Graph(n=n, edges=edges, indptr=indptr, indices=indices,
                 arc_src=arc_src, rev=rev)


def degree_stats(g: Graph) -> DegreeStats:
    """Degree sequence summary of ``g``."""
    d = g.degrees
    if g.n == 0:
        return DegreeStats(degrees=d, mean=0.0, max=0, min=0)
    return DegreeStats(degrees=d, mean=float(d.mean()), max=int(d.max()),
                       min=int(d.min()))


def adjacency_matrix(g: Graph) -> sp.csr_matrix:
    """0/1 adjacency matrix of ``g`` as CSR."""
    data = np.ones(2 * g.m, dtype=np.int64)
    return sp.csr_matrix((data, g.indices, g.indptr), shape=(g.n, g.n))


def count_triangles(g: Graph) -> int:
    """Number of triangles in ``g`` (each counted once)."""
    if g.m < 3:
        return 0
    a = adjacency_matrix(g)
    # (A @ A) ∘ A sums, over adjacent pairs, their common neighbours: each
    # triangle contributes 6.  Integer arithmetic, so the division is exact.
    paths = (a @ a).multiply(a).sum()
    return int(paths // 6)


# ---------------------------------------------------------------------------
# random graph samplers
# ---------------------------------------------------------------------------


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _sample_pair_indices(num_pairs: int, p: float,
                         rng: np.random.Generator) -> np.ndarray:
    """Indices of an i.i.d. Bernoulli(p) subset of ``range(num_pairs)``.

    Runs in O(expected hits) by skipping geometric gaps, so sparse graphs are
    sampled in O(m) expected time rather than O(num_pairs).
    """
    if num_pairs <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(num_pairs, dtype=np.int64)
    out = []
    pos = -1
    chunk = max(64, int(num_pairs * p * 1.1) + 64)
    while pos < num_pairs:
        gaps = rng.geometric(p, size=chunk)
        hits = pos + np.cumsum(gaps)
        out.append(hits)
        pos = int(hits[-1])
    hits = np.concatenate(out)
    return hits[hits < num_pairs]


def _triangular_unrank(lin: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices to pairs ``(a, b)``, ``a < b < s``, lexicographic."""
    if lin.size == 0:
        return lin, lin
    # offset(a) = a*(2s-1-a)/2 counts pairs whose first element is < a; invert
    # the quadratic in floats, then fix rounding with integer comparisons.
    lf = lin.astype(np.float64)
    t = 2 * s - 1
    a = np.floor((t - np.sqrt(t * t - 8.0 * lf)) / 2.0).astype(np.int64)
    a = np.clip(a, 0, s - 2)

    def offset(x):
        return x * (2 * s - 1 - x) // 2

    a = np.where(offset(a) > lin, a - 1, a)
    a = np.where(offset(a + 1) <= lin, a + 1, a)
    b = a + 1 + (lin - offset(a))
    return a, b


def sample_er(n: int, c: float, seed: int) -> Graph:
    """Erdős–Rényi graph ``G(n, p)`` with edge probability ``p = c/n``.

    Parameters
    ----------
    n : int
        Vertex count.
    c : float
        Target mean degree; must satisfy ``0 <= c <= n``.
    seed : int
        RNG seed; identical seeds give identical graphs.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not 0.0 <= c <= n or (n == 0 and c > 0):
        raise ValueError(f"mean degree c={c} outside [0, n]")
    p = c / n if n > 0 else 0.0
    lin = _sample_pair_indices(n * (n - 1) // 2, p, _rng(seed))
    u, v = _triangular_unrank(lin, n)
    return build_graph(n, np.column_stack([u, v]))


def sample_regular(n: int, d: int, seed: int, max_tries: int = 2000) -> Graph:
    """Uniform-ish random simple ``d``-regular graph on ``n`` vertices.

    Pairs stubs uniformly at random (configuration model) and rejects the
    whole pairing whenever it contains a self-loop or a multi-edge, retrying
    until a simple graph appears.

    Raises
    ------
    ValueError
        If ``n*d`` is odd or ``d`` is out of range.
    RuntimeError
        If no simple pairing is found within ``max_tries`` attempts.
    """
    if n < 0 or d < 0 or d >= max(n, 1):
        raise ValueError(f"degree d={d} out of range for n={n}")
    if (n * d) % 2 != 0:
        raise ValueError("n*d must be even")
    if d == 0 or n == 0:
        return build_graph(n, np.empty((0, 2), dtype=np.int64))
    rng = _rng(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    for _ in range(max_tries):
        perm = rng.permutation(stubs)
        u, v = perm[0::2], perm[1::2]
        if np.any(u == v):
            continue
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        key = lo * n + hi
        if np.unique(key).size != key.size:
            continue
        return build_graph(n, np.column_stack([lo, hi]))
    raise RuntimeError(
        f"no simple {d}-regular pairing on {n} vertices after {max_tries} tries")


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def write_edge_list(g: Graph, path) -> None:
    """Write ``g`` as a text edge list: ``n m`` header then one ``u v`` line
    per edge with ``u < v``, in lexicographic order."""
    with open(path, "w") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def read_edge_list(path) -> Graph:
    """Read a graph written by :func:`write_edge_list`."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected 'n m' header")
        n, m = int(header[0]), int(header[1])
        edges = np.loadtxt(fh, dtype=np.int64, ndmin=2) if m > 0 else \
            np.empty((0, 2), dtype=np.int64)
    if edges.shape != (m, 2):
        raise ValueError(f"{path}: expected {m} edge lines, got {edges.shape}")
    return build_graph(n, edges)


def write_labels(labels: np.ndarray, path) -> None:
    """Write one integer label per line."""
    with open(path, "w") as fh:
        for x in np.asarray(labels, dtype=np.int64):
            fh.write(f"{x}\n")


def read_labels(path) -> np.ndarray:
    """Read a label file written by :func:`write_labels`."""
    with open(path) as fh:
        text = fh.read().split()
    if not text:
        return np.empty(0, dtype=np.int64)
    try:
        return np.asarray([int(x) for x in text], dtype=np.int64)
    except ValueError as exc:
        raise ValueError(f"{path}: malformed label file: {exc}") from None
