import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eqvardag import (
    CausalOrder, Dag, DegenerateCovarianceError, DeltaStarUndefinedError, SemSpec,
    cholesky_diagonal_check, delta_star, enumerate_dags, implied_covariance,
    is_supergraph, population_graph_score, population_node_score, random_dag, random_sem,
    verify_theorem1,
)
from eqvardag.graph import all_orders
from eqvardag.population import consistent_orders

S2 = np.array([[1.0, 1.0], [1.0, 2.0]])


def mixing_matrix(spec):
    """A with X = A eps, cov(eps) = I."""
    return np.sqrt(spec.sigma2) * np.linalg.inv(np.eye(spec.p) - spec.coefficient_matrix())


def oracle_node_score(spec, j, pa):
    """min_beta E(X_j - beta' X_pa)^2 as a least-squares problem in the error basis."""
    A = mixing_matrix(spec)
    if not pa:
        return float(A[j] @ A[j])
    beta, *_ = np.linalg.lstsq(A[list(pa)].T, A[j], rcond=None)
    resid = A[j] - A[list(pa)].T @ beta
    return float(resid @ resid)


def oracle_total(spec, dag):
    return sum(oracle_node_score(spec, j, pa) for j, pa in enumerate(dag.parents))


class TestNodeScore:
    def test_child_on_parent(self):
        assert population_node_score(S2, 1, [0]) == pytest.approx(1.0, abs=1e-15)

    def test_no_parents(self):
        assert population_node_score(S2, 1, []) == 2.0

    def test_parent_on_child(self):
        assert population_node_score(S2, 0, [1]) == pytest.approx(0.5, abs=1e-15)

    def test_singular_block(self):
        S = np.array([[1.0, 1.0, 0.5], [1.0, 1.0, 0.5], [0.5, 0.5, 1.0]])
        with pytest.raises(DegenerateCovarianceError):
            population_node_score(S, 2, [0, 1])

    def test_matches_least_squares_oracle(self):
        for s in range(20):
            spec = random_sem(4, random_dag(4, 0.6, s), (0.5, 2.0), 0.7, seed=s)
            S = implied_covariance(spec)
            for j in range(4):
                others = [k for k in range(4) if k != j]
                for c in range(4):
                    for pa in itertools.combinations(others, c):
                        assert population_node_score(S, j, pa) == pytest.approx(
                            oracle_node_score(spec, j, pa), rel=1e-10)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 10**6), j=st.integers(0, 3),
           sub=st.sets(st.integers(0, 3)), extra=st.sets(st.integers(0, 3)))
    def test_monotone_in_parent_set(self, seed, j, sub, extra):
        spec = random_sem(4, random_dag(4, 0.5, seed), (0.5, 2.0), 1.0, seed=seed)
        S = implied_covariance(spec)
        small = sorted(sub - {j})
        big = sorted((sub | extra) - {j})
        assert (population_node_score(S, j, big)
                <= population_node_score(S, j, small) * (1 + 1e-12))


class TestGraphScore:
    def test_true_graph(self):
        assert population_graph_score(S2, Dag.from_edges(2, [(0, 1)])).total == pytest.approx(2.0)

    def test_empty(self):
        assert population_graph_score(S2, Dag.empty(2)).total == pytest.approx(3.0)

    def test_reversed(self):
        s = population_graph_score(S2, Dag.from_edges(2, [(1, 0)]))
        assert s.total == pytest.approx(2.5)
        assert s.per_node == pytest.approx((0.5, 2.0))


class TestCholesky:
    def test_identity(self):
        for o in all_orders(3):
            np.testing.assert_allclose(cholesky_diagonal_check(np.eye(3), o), 1.0)

    def test_natural_order(self):
        np.testing.assert_allclose(cholesky_diagonal_check(S2, CausalOrder((0, 1))), [1, 1])

    def test_reversed_order(self):
        np.testing.assert_allclose(cholesky_diagonal_check(S2, CausalOrder((1, 0))), [2, 0.5])

    def test_not_positive_definite(self):
        with pytest.raises(DegenerateCovarianceError):
            cholesky_diagonal_check(np.array([[1.0, 2.0], [2.0, 1.0]]), CausalOrder((0, 1)))

    def test_determinant_identity_all_orders(self):
        for s in range(25):
            p = 2 + s % 3
            spec = random_sem(p, random_dag(p, 0.5, s), (0.5, 2.0), [0.25, 1.0, 4.0][s % 3], seed=s)
            S = implied_covariance(spec)
            det = np.linalg.det(S)
            assert det == pytest.approx(spec.sigma2 ** p, rel=1e-9)
            for o in all_orders(p):
                assert np.prod(cholesky_diagonal_check(S, o)) == pytest.approx(det, rel=1e-9)

    def test_true_order_gives_equal_diagonal(self):
        spec = random_sem(4, Dag.from_edges(4, [(2, 0), (0, 1), (2, 3), (1, 3)]), seed=3,
                          sigma2=4.0)
        S = implied_covariance(spec)
        for o in consistent_orders(spec.gamma_star):
            np.testing.assert_allclose(cholesky_diagonal_check(S, o), 4.0, rtol=1e-10)


class TestTheorem1:
    def test_two_node_chain(self, chain2):
        r = verify_theorem1(chain2)
        assert r.verdict
        assert r.min_total == pytest.approx(2.0, rel=1e-12)
        assert [d.edges for d in r.argmin_set] == [[(0, 1)]]

    def test_three_node_chain(self, chain3):
        r = verify_theorem1(chain3)
        assert r.verdict
        assert r.min_total == pytest.approx(3.0, rel=1e-12)
        assert sorted(d.edges for d in r.argmin_set) == [[(0, 1), (0, 2), (1, 2)], [(0, 1), (1, 2)]]

    def test_empty_truth(self):
        spec = SemSpec(Dag.empty(3), ((), (), ()), 1.0)
        r = verify_theorem1(spec)
        assert r.verdict
        assert len(r.argmin_set) == 25
        assert r.min_total == pytest.approx(3.0)
        assert r.delta_star is None

    def test_brute_force_against_oracle(self):
        for s in range(10):
            p = 2 + s % 3
            spec = random_sem(p, random_dag(p, 0.5, 100 + s), (0.5, 2.0), 1.0, seed=s)
            r = verify_theorem1(spec)
            totals = {d.mask: oracle_total(spec, d) for d in enumerate_dags(p)}
            best = min(totals.values())
            oracle_arg = sorted(m for m, v in totals.items() if v <= best * (1 + 1e-9))
            supers = sorted(d.mask for d in enumerate_dags(p) if is_supergraph(d, spec.gamma_star))
            assert oracle_arg == supers == [d.mask for d in r.argmin_set]
            assert r.verdict

    def test_equality_node_by_node_on_supergraphs(self):
        for s in range(10):
            p = 2 + s % 3
            sigma2 = [0.25, 1.0, 4.0][s % 3]
            spec = random_sem(p, random_dag(p, 0.5, s), (0.5, 2.0), sigma2, seed=s)
            S = implied_covariance(spec)
            for d in enumerate_dags(p):
                if is_supergraph(d, spec.gamma_star):
                    per = population_graph_score(S, d).per_node
                    np.testing.assert_allclose(per, sigma2, rtol=1e-9)

    def test_report_json_shape(self, chain2):
        d = verify_theorem1(chain2).to_dict()
        assert set(d) == {"min_total", "argmin", "supergraphs", "verdict", "delta_star"}
        assert d["argmin"] == [{"p": 2, "edges": [[0, 1]]}]


class TestDeltaStar:
    def test_two_node_chain(self, chain2):
        assert delta_star(chain2) == pytest.approx(math.log(2.5) - math.log(2), rel=1e-12)
        assert delta_star(chain2) == pytest.approx(0.2231, abs=1e-4)

    def test_empty_undefined(self):
        with pytest.raises(DeltaStarUndefinedError):
            delta_star(SemSpec(Dag.empty(2), ((), ()), 1.0))

    def test_three_node_chain_oracle(self, chain3):
        outside = [d for d in enumerate_dags(3) if not is_supergraph(d, chain3.gamma_star)]
        assert len(outside) == 23
        expected = min(math.log(oracle_total(chain3, d)) for d in outside) - math.log(3.0)
        assert expected > 0
        assert delta_star(chain3) == pytest.approx(expected, rel=1e-10)


@settings(max_examples=1000, deadline=None)
@given(a=st.floats(1e-6, 1e6), b=st.floats(1e-6, 1e6), t=st.floats(0, 1e8))
def test_log_shift_contracts(a, b, t):
    assert abs(math.log(a + t) - math.log(b + t)) <= abs(math.log(a) - math.log(b)) + 1e-12
