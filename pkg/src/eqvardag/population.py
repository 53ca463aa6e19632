"""Exact population scores computed from a covariance matrix.

The population score of node ``j`` with parent set ``pa`` is the residual
variance of the best linear predictor of ``X_j`` from ``X_pa``, i.e. the
Schur complement ``S_jj - S_j,pa S_pa,pa^{-1} S_pa,j``.  Summed over nodes
it is minimised exactly by the supergraphs of the true graph when the SEM
errors share a common variance; :func:`verify_theorem1` checks this by
brute force.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCovarianceError, DeltaStarUndefinedError, InvalidInputError
from .graph import (
    CausalOrder, Dag, DEFAULT_ENUMERATION_CAP, all_orders, dag_masks, nd_under_order, parent_masks,
)
from .sem import SemSpec, implied_covariance

COND_LIMIT = 1e12
THEOREM_RTOL = 1e-9
CHOLESKY_RTOL = 1e-10


@dataclass(frozen=True)
class PopulationScore:
    per_node: tuple
    total: float


def _mask_to_set(mask: int) -> list:
    return [k for k in range(mask.bit_length()) if mask >> k & 1]


def population_node_score(cov, j: int, pa) -> float:
    S = np.asarray(cov, dtype=float)
    pa = sorted(int(k) for k in pa)
    if j in pa:
        raise InvalidInputError(f"node {j} cannot be its own parent")
    if not pa:
        return float(S[j, j])
    block = S[np.ix_(pa, pa)]
    cond = np.linalg.cond(block)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DegenerateCovarianceError(
            f"covariance block of parents {pa} is numerically singular (cond={cond:.3g})")
    cross = S[pa, j]
    return float(S[j, j] - cross @ np.linalg.solve(block, cross))


def population_graph_score(cov, dag: Dag) -> PopulationScore:
    per = tuple(population_node_score(cov, j, pa) for j, pa in enumerate(dag.parents))
    return PopulationScore(per, float(sum(per)))


def node_score_table(cov) -> np.ndarray:
    """``T[j, m]`` = population score of node ``j`` with parent mask ``m``.

    Entries whose mask contains ``j`` are NaN.
    """
    S = np.asarray(cov, dtype=float)
    p = S.shape[0]
    T = np.full((p, 1 << p), np.nan)
    for j in range(p):
        for m in range(1 << p):
            if not m >> j & 1:
                T[j, m] = population_node_score(S, j, _mask_to_set(m))
    return T


def cholesky_diagonal_check(cov, order: CausalOrder) -> np.ndarray:
    """Squared Cholesky diagonal of the covariance permuted by ``order``.

    Entry ``i`` belongs to node ``order.order[i]``.  Each value is
    recomputed as the residual variance of that node regressed on its
    predecessors in the order; disagreement beyond 1e-10 relative raises.
    """
    S = np.asarray(cov, dtype=float)
    P = order.permutation_matrix()
    try:
        W = np.linalg.cholesky(P @ S @ P.T)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovarianceError("covariance is not positive definite") from exc
    w2 = np.diag(W) ** 2
    for i, node in enumerate(order.order):
        r = population_node_score(S, node, nd_under_order(order, node))
        if abs(r - w2[i]) > CHOLESKY_RTOL * abs(w2[i]):
            raise AssertionError(
                f"Cholesky diagonal {w2[i]!r} disagrees with regression residual "
                f"{r!r} for node {node} under order {order.order}")
    return w2


@dataclass
class Theorem1Report:
    min_total: float
    argmin_set: list
    supergraph_set: list
    verdict: bool
    target: float
    det_identity_ok: bool = True
    delta_star: float | None = None

    def to_dict(self) -> dict:
        return {
            "min_total": self.min_total,
            "argmin": [d.to_dict() for d in self.argmin_set],
            "supergraphs": [d.to_dict() for d in self.supergraph_set],
            "verdict": self.verdict,
            "delta_star": self.delta_star,
        }


def _graph_totals(cov, p, cap):
    masks = dag_masks(p, cap)
    T = node_score_table(cov)
    pm = parent_masks(masks, p)
    totals = T[np.arange(p), pm].sum(axis=1)
    return masks, totals


def verify_theorem1(spec: SemSpec, cap: int = DEFAULT_ENUMERATION_CAP,
                    rtol: float = THEOREM_RTOL) -> Theorem1Report:
    """Brute-force check of the supergraph characterisation of the minimum."""
    p = spec.p
    S = implied_covariance(spec)
    masks, totals = _graph_totals(S, p, cap)
    target = p * spec.sigma2
    min_total = float(totals.min())
    argmin = masks[np.abs(totals - min_total) <= rtol * abs(min_total)]
    star = spec.gamma_star.mask
    supers = masks[(masks & star) == star]

    det = np.linalg.det(S)
    det_ok = True
    for order in all_orders(p):
        w2 = cholesky_diagonal_check(S, order)
        if abs(np.prod(w2) - det) > rtol * abs(det):
            det_ok = False
            break

    verdict = (abs(min_total - target) <= rtol * target
               and np.array_equal(argmin, supers) and det_ok)
    try:
        ds = _delta_star_from(masks, totals, star, target)
    except DeltaStarUndefinedError:
        ds = None
    return Theorem1Report(
        min_total=min_total,
        argmin_set=[Dag.from_mask(p, m) for m in argmin],
        supergraph_set=[Dag.from_mask(p, m) for m in supers],
        verdict=bool(verdict),
        target=target,
        det_identity_ok=det_ok,
        delta_star=ds,
    )


def _delta_star_from(masks, totals, star, target):
    outside = (masks & star) != star
    if not outside.any():
        raise DeltaStarUndefinedError(
            "the true graph is empty, so every DAG is a supergraph of it")
    return float(np.log(totals[outside].min()) - np.log(target))


def delta_star(spec: SemSpec, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """Smallest log-gap ``log r - log(p sigma2)`` over graphs missing a true edge."""
    S = implied_covariance(spec)
    masks, totals = _graph_totals(S, spec.p, cap)
    ds = _delta_star_from(masks, totals, spec.gamma_star.mask, spec.p * spec.sigma2)
    if not ds > 0:
        raise AssertionError(f"non-positive separation gap {ds!r}")
    return ds


def consistent_orders(dag: Dag):
    """Every causal order compatible with ``dag`` (brute force, small p)."""
    for perm in itertools.permutations(range(dag.p)):
        pos = {v: i for i, v in enumerate(perm)}
        if all(pos[k] < pos[j] for j, pa in enumerate(dag.parents) for k in pa):
            yield CausalOrder(perm)
