"""Command line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical degeneracy,
4 refused by a resource cap.
"""

from __future__ import annotations

import argparse
import sys

from . import io
from .errors import EqvarError, InvalidInputError, NumericalError, ResourceCapError
from .experiments import ExperimentConfig, run_consistency_experiment
from .graph import DEFAULT_ENUMERATION_CAP
from .population import verify_theorem1
from .scoring import NodeScoreTable, posterior_over_dags, score_dag, v_n
from .search import DEFAULT_DP_MEMORY, exact_dp_bic, greedy_hill_climb
from .sem import simulate

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_RESOURCE = 0, 2, 3, 4


def _global_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--g", type=float, default=None, help="g-prior scale (default n)")
    common.add_argument("--prior", default="uniform", help="DAG prior: uniform or edge:q")
    common.add_argument("--center", action="store_true", help="subtract column means first")
    common.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP,
                        help="largest p allowed for full enumeration")
    common.add_argument("--out", default=None, help="write the JSON result here")
    return common


def _data_options(p: argparse.ArgumentParser):
    p.add_argument("data", help="CSV file, one observation per row")
    p.add_argument("--has-header", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = argparse.ArgumentParser(prog="eqvardag", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="draw data from a SEM spec")
    p.add_argument("--spec", required=True, help="SEM spec JSON")
    p.add_argument("-n", "--n", type=int, required=True)
    p.add_argument("--csv", required=True, help="output CSV path")

    p = sub.add_parser("verify-theorem1", parents=[common],
                       help="brute-force check of the population score minimisers")
    p.add_argument("--spec", required=True)

    p = sub.add_parser("score", parents=[common], help="score one DAG or all DAGs")
    _data_options(p)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--dag", help="DAG JSON file")
    mode.add_argument("--all", action="store_true", help="posterior over every DAG")
    mode.add_argument("--dp", action="store_true", help="exact DP on the BIC score")
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--max-parents", type=int, default=None)

    p = sub.add_parser("posterior", parents=[common], help="posterior over every DAG")
    _data_options(p)
    p.add_argument("--top-k", type=int, default=None)

    p = sub.add_parser("search-dp", parents=[common], help="exact DP on the BIC score")
    _data_options(p)
    p.add_argument("--max-parents", type=int, default=None)
    p.add_argument("--memory-mb", type=float, default=DEFAULT_DP_MEMORY / 2**20)

    p = sub.add_parser("search-greedy", parents=[common], help="multi-restart hill climbing")
    _data_options(p)
    p.add_argument("--criterion", choices=("bic", "log_marginal"), default="bic")
    p.add_argument("--restarts", type=int, default=10)

    p = sub.add_parser("experiment", parents=[common], help="posterior consistency sweep")
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--spec", help="SEM spec JSON (instead of the config's spec)")
    p.add_argument("--n-grid", type=int, nargs="+", default=None)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--families", nargs="+", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timestamp", action="store_true")
    return parser


def _emit(obj, args):
    text = io.to_json_text(obj)
    if args.out:
        io.write_json(obj, args.out)
    return text


def _load(args):
    return io.load_csv(args.data, has_header=args.has_header, center=args.center)


def _print_ranking(post, top_k):
    idx = post.ranking()[: top_k or len(post)]
    print(f"{'rank':>4}  {'posterior':>12}  {'log_marginal':>16}  edges")
    for r, i in enumerate(idx, 1):
        edges = " ".join(f"{a}->{b}" for a, b in post.dag(i).edges) or "(empty)"
        print(f"{r:>4}  {post.posterior[i]:12.6g}  {post.log_marginal[i]:16.10g}  {edges}")


def _posterior(args, data):
    post = posterior_over_dags(data, args.prior, args.g, cap=args.cap)
    _print_ranking(post, args.top_k)
    _emit(post.to_dict(args.top_k), args)


def _dp(args, data):
    budget = getattr(args, "memory_mb", DEFAULT_DP_MEMORY / 2**20) * 2**20
    res = exact_dp_bic(NodeScoreTable.from_data(data, lazy=True), args.max_parents, budget)
    print(f"best BIC {res.best_score:.10g}")
    for d in res.best_dags:
        print("  " + (" ".join(f"{a}->{b}" for a, b in d.edges) or "(empty)"))
    _emit(res.to_dict(), args)


def cmd_simulate(args):
    spec = io.load_spec(args.spec)
    data = simulate(spec, args.n, args.seed)
    if args.center:
        data = data.centered()
    io.save_csv(data, args.csv)
    print(f"wrote {data.n} x {data.p} observations to {args.csv}")


def cmd_verify(args):
    spec = io.load_spec(args.spec)
    report = verify_theorem1(spec, cap=args.cap)
    out = report.to_dict()
    print(f"verdict: {report.verdict}")
    print(f"min total score: {report.min_total!r} (p*sigma2 = {report.target!r})")
    print(f"argmin set ({len(report.argmin_set)} DAGs):")
    for d in report.argmin_set:
        print("  " + (" ".join(f"{a}->{b}" for a, b in d.edges) or "(empty)"))
    print(f"delta_star: {report.delta_star!r}" if report.delta_star is not None
          else "delta_star: null (true graph is empty)")
    _emit(out, args)


def cmd_score(args):
    data = _load(args)
    if args.all:
        return _posterior(args, data)
    if args.dp:
        return _dp(args, data)
    dag = io.load_dag(args.dag)
    if dag.p != data.p:
        raise InvalidInputError(f"DAG has {dag.p} nodes but the data has {data.p} columns")
    table = NodeScoreTable.from_data(data, lazy=True)
    s = score_dag(table, dag, args.g, v_n(data))
    per_node = [table.get(j, pa) for j, pa in enumerate(dag.parents)]
    out = {"dag": dag.to_dict(), "n": s.n, "p": s.p, "g": s.g,
           "log_marginal": s.log_marginal, "bic": s.bic, "r_n": s.r_n_total,
           "edge_count": s.edge_count, "r_jn": per_node}
    print(f"log_marginal {s.log_marginal:.10g}  bic {s.bic:.10g}  R_n {s.r_n_total:.10g}")
    for j, r in enumerate(per_node):
        print(f"  node {j}: R_jn {r:.10g}")
    _emit(out, args)


def cmd_posterior(args):
    _posterior(args, _load(args))


def cmd_search_dp(args):
    _dp(args, _load(args))


def cmd_search_greedy(args):
    data = _load(args)
    res = greedy_hill_climb(data, args.criterion, args.restarts, args.seed, g=args.g)
    res.stats.pop("trajectories", None)
    print(f"best {args.criterion} {res.best_score:.10g}")
    for d in res.best_dags:
        print("  " + (" ".join(f"{a}->{b}" for a, b in d.edges) or "(empty)"))
    _emit(res.to_dict(), args)


def cmd_experiment(args):
    raw = io.read_json(args.config) if args.config else {}
    spec = io.load_spec(args.spec) if args.spec else None
    overrides = {"n_grid": args.n_grid, "seeds": args.seeds, "families": args.families}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    raw.setdefault("master_seed", args.seed)
    raw.setdefault("prior", args.prior)
    raw.setdefault("center", args.center)
    if args.g is not None:
        raw["g_policy"] = args.g
    if args.out:
        raw["out_dir"] = args.out
    cfg = ExperimentConfig.from_dict(raw, spec)
    report = run_consistency_experiment(cfg, workers=args.workers,
                                        timestamp=not args.no_timestamp)
    print(f"{'family':<9} {'n':>7} {'median pi*':>11} {'MAP rate':>9}")
    for a in report.aggregates:
        print(f"{a['family']:<9} {a['n']:>7} {a['median_posterior_true']:11.4f} "
              f"{a['map_rate']:9.2f}")
    if not args.out:
        sys.stdout.write(report.to_json())


COMMANDS = {
    "simulate": cmd_simulate,
    "verify-theorem1": cmd_verify,
    "score": cmd_score,
    "posterior": cmd_posterior,
    "search-dp": cmd_search_dp,
    "search-greedy": cmd_search_greedy,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (EqvarError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
