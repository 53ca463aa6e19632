"""
Which graphs minimise the population least-squares score?
==========================================================

For a linear SEM whose errors share one variance, regress every variable
on its parents in a candidate DAG and add up the residual variances.
This script brute-forces that sum over every DAG on three nodes and shows
that the minimum is ``p * sigma2``, reached exactly by the supergraphs of
the true graph.
"""

import numpy as np

from eqvardag import (
    CausalOrder, SemSpec, cholesky_diagonal_check, delta_star, enumerate_dags,
    implied_covariance, is_supergraph, population_graph_score, verify_theorem1,
)

# A 3-node chain 0 -> 1 -> 2 with unit coefficients and unit error variance
spec = SemSpec.from_edge_weights(3, {(0, 1): 1.0, (1, 2): 1.0}, sigma2=1.0)
S = implied_covariance(spec)
print("implied covariance:\n", S)

##############################################################################
# Score every DAG and list the ten best

rows = []
for dag in enumerate_dags(3):
    total = population_graph_score(S, dag).total
    rows.append((total, str(dag), is_supergraph(dag, spec.gamma_star)))
rows.sort()
for total, name, sup in rows[:10]:
    print(f"{total:8.4f}  {name:<22} supergraph of truth: {sup}")

##############################################################################
# The same conclusion, packaged

report = verify_theorem1(spec)
print("verdict:", report.verdict, " min:", report.min_total)
print("gap to the best non-supergraph (log scale):", delta_star(spec))

##############################################################################
# Squared Cholesky diagonals are residual variances along an order, and
# their product is det(S) whatever the order

for order in [(0, 1, 2), (2, 1, 0), (1, 0, 2)]:
    w2 = cholesky_diagonal_check(S, CausalOrder(order))
    print(order, np.round(w2, 4), "product", np.prod(w2), "det", np.linalg.det(S))
