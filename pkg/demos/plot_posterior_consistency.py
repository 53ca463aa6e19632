"""
Posterior concentration on the true DAG
=======================================

Simulate a 3-node chain with Gaussian, Laplace and uniform errors of equal
variance and compute the exact posterior over all 25 DAGs using the
closed-form g-prior evidence with ``g = n``.  The posterior mass of the
true graph grows with the sample size for every error law.
"""

from eqvardag import SemSpec, posterior_over_dags, simulate
from eqvardag.experiments import ExperimentConfig, run_consistency_experiment

spec = SemSpec.from_edge_weights(3, {(0, 1): 1.0, (1, 2): 1.0})

##############################################################################
# One dataset, full ranking

post = posterior_over_dags(simulate(spec, 2000, seed=0))
for i in post.ranking()[:5]:
    print(f"{post.posterior[i]:.4f}  {post.dag(i)}")

##############################################################################
# A seeded sweep over sample sizes and error laws

cfg = ExperimentConfig(spec, n_grid=(100, 1000, 10000), seeds=30,
                       families=("gaussian", "laplace", "uniform"))
report = run_consistency_experiment(cfg)
print(f"{'family':<9} {'n':>6} {'median pi(true)':>16} {'MAP rate':>9}")
for a in report.aggregates:
    print(f"{a['family']:<9} {a['n']:>6} {a['median_posterior_true']:16.4f} {a['map_rate']:9.2f}")
