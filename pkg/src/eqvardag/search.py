"""Structure search.

Three strategies over the same cached node scores:

* :func:`exhaustive_best` scores every DAG (small p).  It is the only exact
  method for the Bayesian evidence, which does not split over nodes.
* :func:`exact_dp_bic` minimises the decomposable BIC-type score exactly
  with the subset recursion (best parents per candidate set, best sink per
  subset, backtrack).  Memory grows as ``p 2^p``.
* :func:`greedy_hill_climb` is a seeded multi-restart local search with no
  optimality guarantee.

All ties are reported in ascending canonical-mask order.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import InvalidInputError, ResourceCapError
from .graph import DEFAULT_ENUMERATION_CAP, Dag, is_acyclic, random_dag
from .scoring import (
    NodeScoreTable, bic_from_totals, exhaustive_totals, log_marginal_from_totals,
)
from .sem import Dataset

CRITERIA = ("bic", "log_marginal")
DEFAULT_DP_MEMORY = 2 << 30


def _tie_tol(best: float) -> float:
    return 1e-9 * max(1.0, abs(best))


@dataclass
class SearchResult:
    best_dags: list
    best_score: float
    method: str
    criterion: str = "bic"
    stats: dict = field(default_factory=dict)

    @property
    def best(self) -> Dag:
        return self.best_dags[0]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "criterion": self.criterion,
            "best_score": self.best_score,
            "map": [d.to_dict() for d in self.best_dags],
            "stats": self.stats,
        }


def _as_table(source: Union[Dataset, NodeScoreTable], lazy=False) -> NodeScoreTable:
    if isinstance(source, NodeScoreTable):
        return source
    if isinstance(source, Dataset):
        return NodeScoreTable.from_data(source, lazy=lazy)
    raise InvalidInputError(f"expected a Dataset or NodeScoreTable, got {type(source).__name__}")


def _check_criterion(criterion):
    if criterion not in CRITERIA:
        raise InvalidInputError(f"criterion must be one of {CRITERIA}, got {criterion!r}")


def dag_score(table: NodeScoreTable, dag: Dag, criterion: str = "bic",
              g: Optional[float] = None) -> float:
    """Score of one DAG in the criterion's natural orientation."""
    _check_criterion(criterion)
    r = table.r_n(dag)
    if criterion == "bic":
        return float(bic_from_totals(r, dag.edge_count, table.n))
    g = float(table.n) if g is None else float(g)
    vn = sum(table.get(j, ()) for j in range(table.p))
    return float(log_marginal_from_totals(r, dag.edge_count, table.n, table.p, g, vn))


def exhaustive_best(source, criterion: str = "bic", g: Optional[float] = None,
                    cap: int = DEFAULT_ENUMERATION_CAP) -> SearchResult:
    """Best DAG(s) over the full space: BIC minimised, log evidence maximised."""
    _check_criterion(criterion)
    t0 = time.perf_counter()
    table = _as_table(source)
    masks, r, e = exhaustive_totals(table, cap)
    n, p = table.n, table.p
    if criterion == "bic":
        vals = bic_from_totals(r, e, n)
        best = float(vals.min())
        idx = np.flatnonzero(vals <= best + _tie_tol(best))
    else:
        g = float(n) if g is None else float(g)
        vn = sum(table.get(j, ()) for j in range(p))
        vals = log_marginal_from_totals(r, e, n, p, g, vn)
        best = float(vals.max())
        idx = np.flatnonzero(vals >= best - _tie_tol(best))
    return SearchResult(
        best_dags=[Dag.from_mask(p, int(m)) for m in masks[idx]],
        best_score=best,
        method="exhaustive",
        criterion=criterion,
        stats={"scored_dags": int(len(masks)), "node_scores": len(table),
               "wall_time": time.perf_counter() - t0},
    )


def dp_memory_estimate(p: int) -> int:
    """Bytes used by the dense arrays of :func:`exact_dp_bic`."""
    return (2 * p + 3) * (1 << p) * 8


def _submask_min(a: np.ndarray, p: int) -> np.ndarray:
    # out[m] = min over submasks s of m of a[s]
    out = a.copy()
    for k in range(p):
        v = out.reshape(-1, 2, 1 << k)
        np.minimum(v[:, 1, :], v[:, 0, :], out=v[:, 1, :])
    return out


def exact_dp_bic(source, max_parents: Optional[int] = None,
                 memory_budget: int = DEFAULT_DP_MEMORY,
                 max_optima: int = 1000) -> SearchResult:
    """Exact minimiser of ``n R_n + |G| log n`` among DAGs with in-degree ``<= max_parents``.

    ``max_parents=None`` means unrestricted up to p = 8 and 5 beyond that.
    """
    t0 = time.perf_counter()
    table = _as_table(source, lazy=True)
    n, p = table.n, table.p
    if max_parents is None:
        cap = p - 1 if p <= 8 else min(p - 1, 5)
    else:
        cap = min(int(max_parents), p - 1)
        if cap < 0:
            raise InvalidInputError(f"max_parents must be >= 0, got {max_parents}")
    need = dp_memory_estimate(p)
    if need > memory_budget:
        raise ResourceCapError(
            f"exact DP on p={p} nodes needs about {need / 2**20:.0f} MiB, over the "
            f"{memory_budget / 2**20:.0f} MiB budget; reduce p, raise the budget "
            "or use greedy_hill_climb")

    size = 1 << p
    logn = math.log(n)
    local = np.full((p, size), np.inf)
    for j in range(p):
        others = [k for k in range(p) if k != j]
        for c in range(cap + 1):
            for pa in itertools.combinations(others, c):
                m = sum(1 << k for k in pa)
                local[j, m] = n * table.get(j, pa) + c * logn
    bps = np.stack([_submask_min(local[j], p) for j in range(p)])

    allm = np.arange(size, dtype=np.int64)
    pop = np.zeros(size, dtype=np.int64)
    for k in range(p):
        pop += (allm >> k) & 1
    best = np.full(size, np.inf)
    best[0] = 0.0
    for c in range(1, p + 1):
        layer = allm[pop == c]
        acc = np.full(layer.size, np.inf)
        for j in range(p):
            bit = 1 << j
            has = (layer & bit) != 0
            rest = layer[has] ^ bit
            acc[has] = np.minimum(acc[has], best[rest] + bps[j, rest])
        best[layer] = acc
    full = size - 1
    best_score = float(best[full])
    tol = _tie_tol(best_score)

    found = set()

    def backtrack(S, parents):
        if len(found) >= max_optima:
            return
        if S == 0:
            found.add(Dag._trusted(p, tuple(tuple(pa) for pa in parents)).mask)
            return
        for j in range(p):
            bit = 1 << j
            if not S & bit:
                continue
            rest = S ^ bit
            if best[rest] + bps[j, rest] > best[S] + tol:
                continue
            choices = np.flatnonzero(((allm & ~rest) == 0) & (local[j] <= bps[j, rest] + tol))
            for m in choices:
                parents[j] = [k for k in range(p) if int(m) >> k & 1]
                backtrack(rest, parents)
            parents[j] = []

    backtrack(full, [[] for _ in range(p)])
    dags = [Dag.from_mask(p, m) for m in sorted(found)]
    return SearchResult(
        best_dags=dags,
        best_score=best_score,
        method="dp",
        criterion="bic",
        stats={"node_scores": len(table), "subsets": size, "max_parents": cap,
               "wall_time": time.perf_counter() - t0},
    )


def _moves(a: np.ndarray):
    p = a.shape[0]
    for i in range(p):
        for j in range(p):
            if i == j:
                continue
            if a[i, j]:
                yield "delete", i, j
                yield "reverse", i, j
            elif not a[j, i]:
                yield "add", i, j


def _apply(a, move):
    kind, i, j = move
    b = a.copy()
    if kind == "add":
        b[i, j] = True
    elif kind == "delete":
        b[i, j] = False
    else:
        b[i, j] = False
        b[j, i] = True
    return b


def greedy_hill_climb(source, criterion: str = "bic", restarts: int = 10, seed: int = 0,
                      g: Optional[float] = None, start: Optional[Dag] = None,
                      reference_score: Optional[float] = None, edge_prob: float = 0.5,
                      max_steps: int = 100_000) -> SearchResult:
    """First-improvement local search over add/delete/reverse moves.

    Restart ``r`` starts from a random DAG drawn from ``seed`` and ``r``;
    ``start`` replaces the first of them.  With ``reference_score`` (e.g.
    the exhaustive or DP optimum) the result records how many restarts
    reached it.
    """
    _check_criterion(criterion)
    if restarts < 1:
        raise InvalidInputError("restarts must be >= 1")
    t0 = time.perf_counter()
    table = _as_table(source, lazy=True)
    p = table.p
    sign = 1.0 if criterion == "bic" else -1.0

    def objective(a):
        return sign * dag_score(table, Dag.from_adjacency(a), criterion, g)

    optima = []
    trajectory = []
    steps = 0
    for r in range(restarts):
        if r == 0 and start is not None:
            if start.p != p:
                raise InvalidInputError("start graph has the wrong node count")
            a = start.adjacency()
        else:
            a = random_dag(p, edge_prob, np.random.default_rng([seed, r])).adjacency()
        cur = objective(a)
        path = [Dag.from_adjacency(a).mask]
        improved = True
        while improved and steps < max_steps:
            improved = False
            for move in _moves(a):
                b = _apply(a, move)
                if not is_acyclic(b):
                    continue
                val = objective(b)
                steps += 1
                if val < cur - 1e-12 * max(1.0, abs(cur)):
                    a, cur, improved = b, val, True
                    if not is_acyclic(a):
                        raise AssertionError("hill climbing produced a cycle")
                    path.append(Dag.from_adjacency(a).mask)
                    break
        optima.append((cur, Dag.from_adjacency(a)))
        trajectory.append(path)

    best = min(v for v, _ in optima)
    tol = _tie_tol(best)
    masks = sorted({d.mask for v, d in optima if v <= best + tol})
    stats = {"restarts": restarts, "evaluations": steps, "node_scores": len(table),
             "trajectories": trajectory, "wall_time": time.perf_counter() - t0}
    if reference_score is not None:
        ref = sign * float(reference_score)
        stats["hits"] = sum(1 for v, _ in optima if v <= ref + _tie_tol(ref))
    return SearchResult(
        best_dags=[Dag.from_mask(p, m) for m in masks],
        best_score=sign * best,
        method="greedy",
        criterion=criterion,
        stats=stats,
    )
