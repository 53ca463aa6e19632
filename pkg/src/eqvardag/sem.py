"""Linear recursive SEMs with equal error variances.

Each variable is a linear function of its parents plus an independent,
mean-zero error whose variance ``sigma2`` is shared by all nodes.  The
error law may be Gaussian, Laplace or uniform.

Random numbers come from numpy's Philox counter-based generator.  The
errors of node ``j`` are drawn from the stream keyed by ``(seed, j)``, so
adding nodes to a spec never changes the draws of existing columns.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError
from .graph import Dag, topological_order


class ErrorFamily(enum.Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    UNIFORM = "uniform"

    @classmethod
    def parse(cls, value) -> "ErrorFamily":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidInputError(
                f"unknown error family {value!r}; expected one of "
                f"{[f.value for f in cls]}") from None

    def sample(self, rng: np.random.Generator, size, sigma2: float) -> np.ndarray:
        """Mean-zero draws with variance ``sigma2``."""
        if self is ErrorFamily.GAUSSIAN:
            return rng.normal(0.0, np.sqrt(sigma2), size)
        if self is ErrorFamily.LAPLACE:
            return rng.laplace(0.0, np.sqrt(sigma2 / 2.0), size)
        half = np.sqrt(3.0 * sigma2)
        return rng.uniform(-half, half, size)


def node_stream(seed: int, j: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(j)])))


@dataclass(frozen=True)
class SemSpec:
    """True data-generating SEM.

    ``coefficients[j]`` is aligned with ``gamma_star.parents[j]``.
    """

    gamma_star: Dag
    coefficients: tuple
    sigma2: float = 1.0
    error_family: ErrorFamily = ErrorFamily.GAUSSIAN

    def __post_init__(self):
        g = self.gamma_star
        if len(self.coefficients) != g.p:
            raise InvalidInputError(
                f"need {g.p} coefficient vectors, got {len(self.coefficients)}")
        coefs = []
        for j, (pa, beta) in enumerate(zip(g.parents, self.coefficients)):
            beta = tuple(float(b) for b in np.atleast_1d(beta)) if len(pa) else ()
            if len(beta) != len(pa):
                raise InvalidInputError(
                    f"node {j}: {len(pa)} parents but {len(beta)} coefficients")
            if any(b == 0.0 or not np.isfinite(b) for b in beta):
                raise InvalidInputError(f"node {j}: coefficients must be finite and non-zero")
            coefs.append(beta)
        sigma2 = float(self.sigma2)
        if not (sigma2 > 0 and np.isfinite(sigma2)):
            raise InvalidInputError(f"sigma2 must be positive, got {self.sigma2}")
        object.__setattr__(self, "coefficients", tuple(coefs))
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "error_family", ErrorFamily.parse(self.error_family))

    @property
    def p(self) -> int:
        return self.gamma_star.p

    @classmethod
    def from_edge_weights(cls, p: int, weights: dict, sigma2: float = 1.0,
                          error_family="gaussian") -> "SemSpec":
        """Build from ``{(k, j): beta}``."""
        dag = Dag.from_edges(p, weights.keys())
        coefs = tuple(tuple(weights[(k, j)] for k in pa) for j, pa in enumerate(dag.parents))
        return cls(dag, coefs, sigma2, ErrorFamily.parse(error_family))

    def coefficient_matrix(self) -> np.ndarray:
        """``B`` with ``B[j, k]`` the coefficient of parent ``k`` in equation ``j``."""
        B = np.zeros((self.p, self.p))
        for j, (pa, beta) in enumerate(zip(self.gamma_star.parents, self.coefficients)):
            B[j, list(pa)] = beta
        return B

    def to_dict(self, seed: Optional[int] = None) -> dict:
        edges = self.gamma_star.edges
        B = self.coefficient_matrix()
        return {
            "p": self.p,
            "edges": [list(e) for e in edges],
            "coefficients": [B[j, k] for k, j in edges],
            "sigma2": self.sigma2,
            "family": self.error_family.value,
            "seed": seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SemSpec":
        try:
            edges = [tuple(e) for e in d.get("edges", [])]
            coefs = d.get("coefficients", [])
            if len(coefs) != len(edges):
                raise InvalidInputError("coefficients must align with edges")
            p = int(d["p"]) if "p" in d else 1 + max((max(e) for e in edges), default=0)
            return cls.from_edge_weights(
                p, {(int(k), int(j)): float(b) for (k, j), b in zip(edges, coefs)},
                float(d.get("sigma2", 1.0)), d.get("family", "gaussian"))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed SEM spec: {exc}") from exc


@dataclass(frozen=True)
class Dataset:
    """``n x p`` observation matrix, one row per observation."""

    values: np.ndarray
    column_names: Optional[tuple] = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise InvalidInputError(f"dataset must be a non-empty 2-d array, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise InvalidInputError("dataset contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.column_names is not None:
            names = tuple(str(c) for c in self.column_names)
            if len(names) != v.shape[1]:
                raise InvalidInputError(
                    f"{len(names)} column names for {v.shape[1]} columns")
            object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def centered(self) -> "Dataset":
        means = self.values.mean(axis=0)
        meta = dict(self.metadata, centered=True, column_means=means.tolist())
        return Dataset(self.values - means, self.column_names, meta)


def implied_covariance(spec: SemSpec) -> np.ndarray:
    """``sigma2 (I - B)^{-1} (I - B)^{-T}``."""
    p = spec.p
    A = np.eye(p) - spec.coefficient_matrix()
    # unit triangular after a topological permutation, hence invertible
    Linv = np.linalg.solve(A, np.eye(p))
    S = spec.sigma2 * Linv @ Linv.T
    return (S + S.T) / 2.0


def simulate(spec: SemSpec, n: int, seed: int) -> Dataset:
    """Draw ``n`` iid observations from ``spec``."""
    n = int(n)
    if n < 1:
        raise InvalidInputError(f"sample count must be positive, got {n}")
    p = spec.p
    X = np.empty((n, p))
    for j in topological_order(spec.gamma_star).order:
        eps = spec.error_family.sample(node_stream(seed, j), n, spec.sigma2)
        pa = spec.gamma_star.parents[j]
        if pa:
            X[:, j] = X[:, list(pa)] @ np.asarray(spec.coefficients[j]) + eps
        else:
            X[:, j] = eps
    return Dataset(X, metadata={"seed": int(seed), "family": spec.error_family.value})


def random_sem(p: int, gamma_star: Dag, coef_range: Sequence[float] = (0.5, 2.0),
               sigma2: float = 1.0, error_family="gaussian", seed: int = 0) -> SemSpec:
    """Coefficients uniform on ``[-hi, -lo] U [lo, hi]`` with a fair-coin sign."""
    lo, hi = (float(v) for v in coef_range)
    if not 0 < lo <= hi:
        raise InvalidInputError(f"coefficient range must satisfy 0 < lo <= hi, got {coef_range}")
    if gamma_star.p != p:
        raise InvalidInputError(f"gamma_star has {gamma_star.p} nodes, expected {p}")
    rng = np.random.default_rng(seed)
    coefs = []
    for pa in gamma_star.parents:
        mag = rng.uniform(lo, hi, len(pa))
        sign = np.where(rng.random(len(pa)) < 0.5, -1.0, 1.0)
        coefs.append(tuple(sign * mag))
    return SemSpec(gamma_star, tuple(coefs), sigma2, ErrorFamily.parse(error_family))
