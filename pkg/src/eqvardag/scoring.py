"""Data-level scores for DAGs.

The working model is a Gaussian linear SEM with a common error variance,
a g-prior on every node's regression coefficients and the Jeffreys prior
on the variance.  Its evidence has the closed form::

    log m(D | G) = -(n p / 2) log(V_n + g R_n(G)) + ((n p - |G|) / 2) log(1 + g)

where ``R_n(G)`` is the sum over nodes of the no-intercept least-squares
residual sum of squares divided by ``n`` and ``V_n`` the summed uncentred
second moments.  The constant that does not depend on ``G`` is dropped, so
differences of log evidences are exact log Bayes factors.

The closed form is not node-decomposable (the sum sits inside a log), so
posteriors are computed by full enumeration.  The BIC-type score
``n R_n(G) + |G| log n`` is decomposable; see :mod:`eqvardag.search`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import (
    CollinearDataError, IncompatibleScoreError, IncompleteTableError,
    InsufficientSampleError, InvalidInputError,
)
from .graph import DEFAULT_ENUMERATION_CAP, Dag, dag_masks, edge_counts, parent_masks
from .sem import Dataset

RANK_TOL = 1e-10


def _pa_key(pa) -> tuple:
    return tuple(sorted(int(k) for k in pa))


def node_rss(data: Dataset, j: int, pa) -> float:
    """Residual sum of squares of ``X_j`` on ``X_pa`` (no intercept), over ``n``.

    Uses a QR factorisation of ``[X_pa | X_j]``: the last diagonal entry of
    ``R`` is the residual norm.
    """
    X = data.values
    n = X.shape[0]
    pa = _pa_key(pa)
    if j in pa:
        raise InvalidInputError(f"node {j} cannot be its own parent")
    y = X[:, j]
    if not pa:
        return float(y @ y) / n
    k = len(pa)
    if n <= k:
        raise InsufficientSampleError(
            f"n={n} observations cannot support {k} regressors for node {j}")
    R = np.linalg.qr(np.column_stack([X[:, list(pa)], y]), mode="r")
    d = np.abs(np.diag(R)[:k])
    bad = d < RANK_TOL * d.max() if d.max() > 0 else np.ones(k, dtype=bool)
    if bad.any():
        cols = [pa[i] for i in np.flatnonzero(bad)]
        raise CollinearDataError(
            f"regressors {list(pa)} of node {j} are collinear (offending columns {cols})",
            cols)
    return float(R[k, k] ** 2) / n


def v_n(data: Dataset) -> float:
    X = data.values
    return float(np.einsum("ij,ij->", X, X)) / X.shape[0]


class NodeScoreTable:
    """Cache of ``R_{j,n}(pa)`` keyed by ``(j, sorted pa)``.

    With ``data`` attached the table fills missing entries on demand;
    :meth:`freeze` detaches it, after which lookups of absent keys raise
    :class:`IncompleteTableError`.
    """

    def __init__(self, n: int, p: int, data: Optional[Dataset] = None):
        self.n = n
        self.p = p
        self.scores: dict = {}
        self._data = data

    @classmethod
    def from_data(cls, data: Dataset, max_parents: Optional[int] = None,
                  lazy: bool = False) -> "NodeScoreTable":
        """Table holding every parent set of size ``<= max_parents`` (default all)."""
        table = cls(data.n, data.p, data)
        if not lazy:
            table.fill_all(max_parents)
        return table

    def fill_all(self, max_parents: Optional[int] = None):
        if self._data is None:
            raise IncompleteTableError("table is frozen")
        top = self.p - 1 if max_parents is None else min(max_parents, self.p - 1)
        for j in range(self.p):
            others = [k for k in range(self.p) if k != j]
            for size in range(top + 1):
                for pa in itertools.combinations(others, size):
                    self.get(j, pa)
        return self

    def freeze(self) -> "NodeScoreTable":
        self._data = None
        return self

    @property
    def frozen(self) -> bool:
        return self._data is None

    @property
    def coverage(self) -> set:
        return set(self.scores)

    def __contains__(self, key) -> bool:
        j, pa = key
        return (j, _pa_key(pa)) in self.scores

    def __len__(self):
        return len(self.scores)

    def get(self, j: int, pa) -> float:
        key = (int(j), _pa_key(pa))
        try:
            return self.scores[key]
        except KeyError:
            if self._data is None:
                raise IncompleteTableError(
                    f"no score for node {key[0]} with parents {list(key[1])}") from None
        value = node_rss(self._data, *key)
        self.scores[key] = value
        return value

    def r_n(self, dag: Dag) -> float:
        return sum(self.get(j, pa) for j, pa in enumerate(dag.parents))

    def dense(self) -> np.ndarray:
        """Array ``T[j, mask]``; NaN where the entry is absent or undefined."""
        T = np.full((self.p, 1 << self.p), np.nan)
        for (j, pa), v in self.scores.items():
            T[j, sum(1 << k for k in pa)] = v
        return T


def _check_g(g) -> float:
    g = float(g)
    if not g > 0:
        raise InvalidInputError(f"g must be positive, got {g}")
    return g


def log_marginal_from_totals(r_n, edge_count, n, p, g, vn):
    """Vectorisable closed form; ``r_n`` and ``edge_count`` may be arrays."""
    npp = n * p
    return (-0.5 * npp * np.log(vn + g * np.asarray(r_n))
            + 0.5 * (npp - np.asarray(edge_count)) * math.log1p(g))


def bic_from_totals(r_n, edge_count, n):
    return n * np.asarray(r_n) + np.asarray(edge_count) * math.log(n)


def log_marginal(table: NodeScoreTable, dag: Dag, g: float, vn: float) -> float:
    g = _check_g(g)
    r = table.r_n(dag)
    if not vn + g * r > 0:
        raise InvalidInputError("V_n + g R_n must be positive")
    return float(log_marginal_from_totals(r, dag.edge_count, table.n, table.p, g, vn))


def log_marginal_direct(data: Dataset, dag: Dag, g: float) -> float:
    """Evidence evaluated before simplification, with dense ``n x n`` algebra.

    For each node, ``X_j ~ N(0, theta (g P + I))`` with ``P`` the projector
    on the parent columns; integrating ``theta`` against ``1/theta`` gives
    ``(sum_j X_j' (gP+I)^{-1} X_j)^{-np/2} / prod_j det(gP+I)^{1/2}``.
    Adding ``(np/2) log n`` matches the constant convention of
    :func:`log_marginal`.
    """
    g = _check_g(g)
    X = data.values
    n, p = X.shape
    quad = 0.0
    logdet = 0.0
    eye = np.eye(n)
    for j, pa in enumerate(dag.parents):
        x = X[:, j]
        if pa:
            if n <= len(pa):
                raise InsufficientSampleError(
                    f"n={n} observations cannot support {len(pa)} regressors")
            D = X[:, list(pa)]
            if np.linalg.matrix_rank(D) < len(pa):
                raise CollinearDataError(f"regressors {list(pa)} of node {j} are collinear", pa)
            P = D @ np.linalg.solve(D.T @ D, D.T)
            P = (P + P.T) / 2.0
            quad += float(x @ np.linalg.solve(g * P + eye, x))
            logdet += float(np.sum(np.log1p(g * np.linalg.eigvalsh(P))))
        else:
            quad += float(x @ x)
    npp = n * p
    return -0.5 * npp * math.log(quad) - 0.5 * logdet + 0.5 * npp * math.log(n)


def bic_score(table: NodeScoreTable, dag: Dag, n: Optional[int] = None) -> float:
    """``n R_n + |G| log n``; lower is better."""
    n = table.n if n is None else int(n)
    return float(bic_from_totals(table.r_n(dag), dag.edge_count, n))


@dataclass(frozen=True)
class DagScore:
    log_marginal: float
    bic: float
    r_n_total: float
    edge_count: int
    g: float
    n: int
    p: int


def score_dag(table: NodeScoreTable, dag: Dag, g: Optional[float] = None,
              vn: Optional[float] = None) -> DagScore:
    g = float(table.n) if g is None else _check_g(g)
    if vn is None:
        vn = sum(table.get(j, ()) for j in range(table.p))
    r = table.r_n(dag)
    return DagScore(
        log_marginal=float(log_marginal_from_totals(r, dag.edge_count, table.n, table.p, g, vn)),
        bic=float(bic_from_totals(r, dag.edge_count, table.n)),
        r_n_total=r,
        edge_count=dag.edge_count,
        g=g, n=table.n, p=table.p,
    )


def log_bayes_factor(score1: DagScore, score2: DagScore) -> float:
    if (score1.n, score1.p, score1.g) != (score2.n, score2.p, score2.g):
        raise IncompatibleScoreError(
            f"scores computed under different (n, p, g): "
            f"{(score1.n, score1.p, score1.g)} vs {(score2.n, score2.p, score2.g)}")
    return score1.log_marginal - score2.log_marginal


@dataclass(frozen=True)
class DagPrior:
    """Prior over DAGs depending only on the edge count.

    ``kind="uniform"`` is flat; ``kind="edge"`` gives each of the
    ``p(p-1)/2`` possible edges independent inclusion probability ``q``.
    Both are strictly positive on every DAG.
    """

    kind: str = "uniform"
    q: float = 0.5

    def __post_init__(self):
        if self.kind not in ("uniform", "edge"):
            raise InvalidInputError(f"unknown prior kind {self.kind!r}")
        if self.kind == "edge" and not 0 < self.q < 1:
            raise InvalidInputError(f"edge prior needs 0 < q < 1, got {self.q}")

    @classmethod
    def parse(cls, text) -> "DagPrior":
        if isinstance(text, cls):
            return text
        if text is None or text == "uniform":
            return cls()
        if isinstance(text, str) and text.startswith("edge:"):
            try:
                return cls("edge", float(text[5:]))
            except ValueError:
                pass
        raise InvalidInputError(f"cannot parse prior {text!r}; use 'uniform' or 'edge:q'")

    def log_prior(self, edge_count, p: int):
        """Unnormalised log prior (normalisation cancels in the posterior)."""
        e = np.asarray(edge_count, dtype=float)
        if self.kind == "uniform":
            return np.zeros_like(e)
        pairs = p * (p - 1) / 2
        return e * math.log(self.q) + (pairs - e) * math.log1p(-self.q)

    def describe(self) -> str:
        return "uniform" if self.kind == "uniform" else f"edge:{self.q!r}"


def exhaustive_totals(table: NodeScoreTable, cap: int = DEFAULT_ENUMERATION_CAP):
    """``(masks, R_n, |G|)`` arrays over every DAG on ``table.p`` nodes."""
    p = table.p
    masks = dag_masks(p, cap)
    if not table.frozen:
        table.fill_all()
    T = table.dense()
    r = T[np.arange(p), parent_masks(masks, p)].sum(axis=1)
    if np.isnan(r).any():
        raise IncompleteTableError("table is missing parent sets needed for enumeration")
    return masks, r, edge_counts(masks)


def _near_max(values, atol=1e-10):
    top = values.max()
    return np.flatnonzero(values >= top - atol * max(1.0, abs(top)))


@dataclass
class PosteriorResult:
    """Posterior over every DAG on ``p`` nodes, indexed by ascending canonical mask."""

    n: int
    p: int
    g: float
    prior_kind: str
    masks: np.ndarray
    log_marginal: np.ndarray
    bic: np.ndarray
    r_n_total: np.ndarray
    edge_count: np.ndarray
    log_prior: np.ndarray
    posterior: np.ndarray
    log_posterior: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.masks)

    def index_of(self, dag: Dag) -> int:
        i = int(np.searchsorted(self.masks, dag.mask))
        if i >= len(self.masks) or self.masks[i] != dag.mask:
            raise InvalidInputError(f"{dag} not in the posterior support")
        return i

    def dag(self, i: int) -> Dag:
        return Dag.from_mask(self.p, int(self.masks[i]))

    @property
    def dags(self) -> list:
        return [self.dag(i) for i in range(len(self))]

    @property
    def map_dags(self) -> list:
        return [self.dag(i) for i in _near_max(self.log_posterior)]

    def dag_score(self, i: int) -> DagScore:
        return DagScore(float(self.log_marginal[i]), float(self.bic[i]),
                        float(self.r_n_total[i]), int(self.edge_count[i]),
                        self.g, self.n, self.p)

    @property
    def dag_scores(self) -> list:
        return [self.dag_score(i) for i in range(len(self))]

    def probability(self, dag: Dag) -> float:
        return float(self.posterior[self.index_of(dag)])

    def rank(self, dag: Dag) -> int:
        """1 + number of DAGs with strictly larger posterior."""
        lp = self.log_posterior[self.index_of(dag)]
        return 1 + int(np.sum(self.log_posterior > lp))

    def ranking(self) -> np.ndarray:
        """Indices by decreasing posterior, ties by canonical mask."""
        return np.lexsort((self.masks, -self.log_posterior))

    def to_dict(self, top_k: Optional[int] = None) -> dict:
        idx = self.ranking()
        if top_k is not None:
            idx = idx[:top_k]
        return {
            "g": self.g,
            "prior": self.prior_kind,
            "n": self.n,
            "p": self.p,
            "dags": [
                {
                    "edges": [list(e) for e in self.dag(i).edges],
                    "log_marginal": float(self.log_marginal[i]),
                    "log_prior": float(self.log_prior[i]),
                    "posterior": float(self.posterior[i]),
                }
                for i in idx
            ],
            "map": [d.to_dict() for d in self.map_dags],
        }


def posterior_over_dags(data: Dataset, prior=None, g: Optional[float] = None,
                        cap: int = DEFAULT_ENUMERATION_CAP,
                        table: Optional[NodeScoreTable] = None) -> PosteriorResult:
    """Exact posterior over every DAG; ``g`` defaults to ``n``."""
    prior = DagPrior.parse(prior)
    n, p = data.n, data.p
    g = float(n) if g is None else _check_g(g)
    dag_masks(p, cap)  # refuse oversize requests before any regression
    if table is None:
        table = NodeScoreTable.from_data(data)
    table.freeze()
    vn = v_n(data)
    masks, r, e = exhaustive_totals(table, cap)
    lm = log_marginal_from_totals(r, e, n, p, g, vn)
    lp = prior.log_prior(e, p)
    post_log = lm + lp
    post_log = post_log - logsumexp(post_log)
    return PosteriorResult(
        n=n, p=p, g=g, prior_kind=prior.describe(), masks=masks,
        log_marginal=lm, bic=bic_from_totals(r, e, n), r_n_total=r,
        edge_count=e, log_prior=lp, posterior=np.exp(post_log), log_posterior=post_log,
    )
