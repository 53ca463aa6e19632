"""Directed acyclic graphs over nodes ``0..p-1``.

A DAG is stored as a tuple of sorted parent tuples.  Its canonical
encoding is the row-major bitmask of the adjacency matrix: the edge
``k -> j`` sets bit ``k * p + j``.  Enumeration order, deduplication and
every tie-break in the package use this integer.
"""

from __future__ import annotations

import functools
import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InvalidInputError, ResourceCapError

#: Default largest p accepted by :func:`enumerate_dags` (3,781,503 DAGs).
DEFAULT_ENUMERATION_CAP = 6
# p*p bits must fit a signed 64-bit integer
_HARD_ENUMERATION_LIMIT = 7

#: Number of labelled DAGs on p nodes (OEIS A003024).
KNOWN_DAG_COUNTS = {1: 1, 2: 3, 3: 25, 4: 543, 5: 29281, 6: 3781503}


@dataclass(frozen=True)
class Dag:
    """Parent-set representation of a DAG.

    ``parents[j]`` is the sorted tuple of parents of node ``j``.
    Construction validates range, self-loops and acyclicity.
    """

    p: int
    parents: tuple

    def __post_init__(self):
        p = int(self.p)
        if p < 1:
            raise InvalidInputError(f"node count must be positive, got {p}")
        if len(self.parents) != p:
            raise InvalidInputError(
                f"expected {p} parent sets, got {len(self.parents)}")
        norm = []
        for j, pa in enumerate(self.parents):
            pa = tuple(sorted({int(k) for k in pa}))
            for k in pa:
                if not 0 <= k < p:
                    raise InvalidInputError(f"parent {k} of node {j} out of range")
                if k == j:
                    raise InvalidInputError(f"self-loop at node {j}")
            norm.append(pa)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "parents", tuple(norm))
        if not is_acyclic(self.adjacency()):
            raise InvalidInputError("graph contains a directed cycle")

    @classmethod
    def _trusted(cls, p: int, parents: tuple) -> "Dag":
        # skips validation; callers guarantee sorted, acyclic parent tuples
        obj = object.__new__(cls)
        object.__setattr__(obj, "p", p)
        object.__setattr__(obj, "parents", parents)
        return obj

    @classmethod
    def empty(cls, p: int) -> "Dag":
        return cls(p, tuple(() for _ in range(p)))

    @classmethod
    def from_edges(cls, p: int, edges: Iterable[Sequence[int]]) -> "Dag":
        parents = [set() for _ in range(p)]
        for e in edges:
            if len(e) != 2:
                raise InvalidInputError(f"edge must be a pair, got {e!r}")
            k, j = int(e[0]), int(e[1])
            if not (0 <= k < p and 0 <= j < p):
                raise InvalidInputError(f"edge {k}->{j} out of range for p={p}")
            parents[j].add(k)
        return cls(p, tuple(tuple(s) for s in parents))

    @classmethod
    def from_adjacency(cls, adjacency) -> "Dag":
        a = np.asarray(adjacency, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInputError("adjacency must be a square matrix")
        p = a.shape[0]
        return cls(p, tuple(tuple(np.flatnonzero(a[:, j])) for j in range(p)))

    @classmethod
    def from_mask(cls, p: int, mask: int) -> "Dag":
        mask = int(mask)
        if mask < 0 or mask >> (p * p):
            raise InvalidInputError(f"mask {mask} out of range for p={p}")
        parents = tuple(
            tuple(k for k in range(p) if mask >> (k * p + j) & 1) for j in range(p))
        return cls(p, parents)

    @property
    def mask(self) -> int:
        m = 0
        for j, pa in enumerate(self.parents):
            for k in pa:
                m |= 1 << (k * self.p + j)
        return m

    @property
    def edges(self) -> list:
        """Edges ``(from, to)`` sorted lexicographically."""
        return sorted((k, j) for j, pa in enumerate(self.parents) for k in pa)

    @property
    def edge_count(self) -> int:
        return sum(len(pa) for pa in self.parents)

    def parent_mask(self, j: int) -> int:
        m = 0
        for k in self.parents[j]:
            m |= 1 << k
        return m

    def adjacency(self) -> np.ndarray:
        """Boolean matrix with ``a[k, j]`` true for the edge ``k -> j``."""
        a = np.zeros((self.p, self.p), dtype=bool)
        for j, pa in enumerate(self.parents):
            a[list(pa), j] = True
        return a

    def to_dict(self) -> dict:
        return {"p": self.p, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, d: dict) -> "Dag":
        try:
            return cls.from_edges(int(d["p"]), d.get("edges", []))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed DAG object: {d!r}") from exc

    def __str__(self):
        return "".join(
            f"[{j}|{','.join(map(str, pa))}]" if pa else f"[{j}]"
            for j, pa in enumerate(self.parents))


@dataclass(frozen=True)
class CausalOrder:
    """A permutation of the nodes; ``order[i]`` is the node at position ``i``."""

    order: tuple
    position: tuple = field(init=False, repr=False)

    def __post_init__(self):
        order = tuple(int(v) for v in self.order)
        if sorted(order) != list(range(len(order))):
            raise InvalidInputError(f"not a permutation: {order}")
        pos = [0] * len(order)
        for i, v in enumerate(order):
            pos[v] = i
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "position", tuple(pos))

    @property
    def p(self) -> int:
        return len(self.order)

    def permutation_matrix(self) -> np.ndarray:
        """Matrix ``P`` with ``(P x)[i] = x[order[i]]``."""
        P = np.zeros((self.p, self.p))
        P[np.arange(self.p), self.order] = 1.0
        return P


def is_acyclic(adjacency) -> bool:
    """Kahn peeling on a boolean adjacency matrix (``a[k, j]`` for ``k -> j``)."""
    a = np.asarray(adjacency, dtype=bool)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError("adjacency must be a square matrix")
    if a.diagonal().any():
        raise InvalidInputError(
            f"self-loop at node {int(np.flatnonzero(a.diagonal())[0])}")
    indeg = a.sum(axis=0)
    stack = [j for j in range(a.shape[0]) if indeg[j] == 0]
    seen = 0
    while stack:
        k = stack.pop()
        seen += 1
        for j in np.flatnonzero(a[k]):
            indeg[j] -= 1
            if indeg[j] == 0:
                stack.append(int(j))
    return seen == a.shape[0]


def topological_order(dag: Dag) -> CausalOrder:
    """Topological order; among available sources the smallest index goes first."""
    p = dag.p
    indeg = [len(pa) for pa in dag.parents]
    children = [[] for _ in range(p)]
    for j, pa in enumerate(dag.parents):
        for k in pa:
            children[k].append(j)
    heap = [j for j in range(p) if indeg[j] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        k = heapq.heappop(heap)
        out.append(k)
        for j in children[k]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, j)
    if len(out) != p:
        raise AssertionError("cycle in a Dag instance")
    return CausalOrder(tuple(out))


def is_supergraph(big: Dag, small: Dag) -> bool:
    """True iff every edge of ``small`` is an edge of ``big``."""
    if big.p != small.p:
        raise InvalidInputError(f"node count mismatch: {big.p} vs {small.p}")
    return all(set(s) <= set(b) for b, s in zip(big.parents, small.parents))


def nd_under_order(order: CausalOrder, j: int) -> frozenset:
    """Nodes placed strictly before ``j`` in ``order``."""
    if not 0 <= j < order.p:
        raise InvalidInputError(f"node {j} out of range for p={order.p}")
    return frozenset(order.order[: order.position[j]])


def complete_dag_from_order(order: CausalOrder) -> Dag:
    parents = tuple(tuple(sorted(nd_under_order(order, j))) for j in range(order.p))
    return Dag._trusted(order.p, parents)


def all_orders(p: int) -> Iterator[CausalOrder]:
    for perm in itertools.permutations(range(p)):
        yield CausalOrder(perm)


def _check_cap(p: int, cap: int):
    if p < 1:
        raise InvalidInputError(f"node count must be positive, got {p}")
    cap = min(int(cap), _HARD_ENUMERATION_LIMIT)
    if p > cap:
        raise ResourceCapError(
            f"enumerating all DAGs on p={p} nodes exceeds the cap p<={cap}; "
            "use exact_dp_bic or greedy_hill_climb instead")


@functools.lru_cache(maxsize=8)
def _dag_masks(p: int) -> np.ndarray:
    # Rows are filled from node p-1 down to node 0.  Adding the out-edges of
    # node i closes a cycle iff one of its targets is already an ancestor of
    # i, so each partial graph extends by exactly the rows avoiding them.
    full = (1 << p) - 1
    masks = np.zeros(1, dtype=np.int64)
    rows = np.arange(1 << p, dtype=np.int64)
    for i in range(p - 1, -1, -1):
        children = [(masks >> (k * p)) & full for k in range(p)]
        anc = np.zeros_like(masks)
        for k in range(p):
            anc |= ((children[k] >> i) & 1) << k
        for _ in range(p):
            grown = anc.copy()
            for k in range(p):
                grown |= ((children[k] & anc) != 0).astype(np.int64) << k
            if np.array_equal(grown, anc):
                break
            anc = grown
        parts = []
        for r in rows[(rows >> i) & 1 == 0]:
            keep = (anc & r) == 0
            parts.append(masks[keep] | (r << (i * p)))
        masks = np.concatenate(parts)
    masks.sort()
    masks.setflags(write=False)
    return masks


def dag_masks(p: int, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Canonical masks of every DAG on ``p`` nodes, ascending (read-only array)."""
    _check_cap(p, cap)
    return _dag_masks(p)


def enumerate_dags(p: int, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[Dag]:
    """Yield each DAG on ``p`` nodes exactly once, by ascending canonical mask."""
    masks = dag_masks(p, cap)
    for m in masks:
        m = int(m)
        parents = tuple(
            tuple(k for k in range(p) if m >> (k * p + j) & 1) for j in range(p))
        yield Dag._trusted(p, parents)


def parent_masks(masks: np.ndarray, p: int) -> np.ndarray:
    """Per-node parent bitmasks, shape ``(len(masks), p)``."""
    masks = np.asarray(masks, dtype=np.int64)
    out = np.zeros((masks.size, p), dtype=np.int64)
    for j in range(p):
        for k in range(p):
            if k != j:
                out[:, j] |= ((masks >> (k * p + j)) & 1) << k
    return out


def edge_counts(masks: np.ndarray) -> np.ndarray:
    masks = np.asarray(masks, dtype=np.int64)
    counts = np.zeros(masks.shape, dtype=np.int64)
    m = masks.copy()
    while m.any():
        counts += m & 1
        m >>= 1
    return counts


def random_dag(p: int, edge_prob: float, rng) -> Dag:
    """Random DAG: random node order, each forward pair joined with ``edge_prob``."""
    if isinstance(rng, (int, np.integer)) or rng is None:
        rng = np.random.default_rng(rng)
    order = rng.permutation(p)
    parents = [[] for _ in range(p)]
    for a in range(p):
        for b in range(a + 1, p):
            if rng.random() < edge_prob:
                parents[order[b]].append(int(order[a]))
    return Dag(p, tuple(tuple(pa) for pa in parents))
