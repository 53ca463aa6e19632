"""Seeded simulation sweeps of posterior concentration on the true DAG.

Every cell ``(family, n, seed index)`` draws its own dataset from a seed
derived from ``(master_seed, family, n, seed index)``, so extending the
grid never changes existing cells.  Cells run independently (optionally in
a process pool); results are merged in ``(family, n, seed)`` order, which
makes reports byte-identical across worker counts apart from the
``created`` timestamp.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime
import io
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import DeltaStarUndefinedError, InvalidInputError
from .io import to_json_text, write_json
from .population import delta_star
from .scoring import DagPrior, posterior_over_dags
from .sem import ErrorFamily, SemSpec, simulate

CSV_HEADER = ("family", "n", "seed", "posterior_true", "map_correct", "rank_true")


@dataclass(frozen=True)
class ExperimentConfig:
    spec: SemSpec
    n_grid: tuple = (100, 1000, 10000)
    seeds: int = 100
    master_seed: int = 0
    families: tuple = ("gaussian",)
    g_policy: Union[str, float] = "n"
    prior: str = "uniform"
    center: bool = False
    out_dir: Optional[str] = None

    def __post_init__(self):
        grid = tuple(int(v) for v in self.n_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
            raise InvalidInputError(f"n_grid must be positive and strictly increasing: {grid}")
        if int(self.seeds) < 1:
            raise InvalidInputError("seeds must be >= 1")
        fams = tuple(ErrorFamily.parse(f).value for f in self.families)
        if self.g_policy != "n":
            try:
                if not float(self.g_policy) > 0:
                    raise ValueError
            except (TypeError, ValueError):
                raise InvalidInputError(f"g policy must be 'n' or a positive number, "
                                        f"got {self.g_policy!r}") from None
        DagPrior.parse(self.prior)
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "seeds", int(self.seeds))
        object.__setattr__(self, "families", fams)

    def g_for(self, n: int) -> float:
        return float(n) if self.g_policy == "n" else float(self.g_policy)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "n_grid": list(self.n_grid),
            "seeds": self.seeds,
            "master_seed": self.master_seed,
            "families": list(self.families),
            "g_policy": self.g_policy,
            "prior": self.prior,
            "center": self.center,
        }

    @classmethod
    def from_dict(cls, d: dict, spec: Optional[SemSpec] = None) -> "ExperimentConfig":
        if spec is None:
            if "spec" not in d:
                raise InvalidInputError("experiment config needs a 'spec'")
            spec = SemSpec.from_dict(d["spec"])
        keys = {f.name for f in dataclasses.fields(cls)} - {"spec"}
        return cls(spec=spec, **{k: v for k, v in d.items() if k in keys})


def cell_seed(master_seed: int, family: str, n: int, index: int) -> int:
    ss = np.random.SeedSequence([int(master_seed), zlib.crc32(family.encode()), int(n), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def bound_term_log(n, p: int, delta: float, true_edges: int):
    """Log of ``exp(-(n p / 2) delta) (1 + n)^(|G*| / 2)``."""
    n = np.asarray(n, dtype=float)
    return -0.5 * n * p * delta + 0.5 * true_edges * np.log1p(n)


def _run_cell(job):
    spec, family, n, index, master, g, prior, center = job
    data = simulate(dataclasses.replace(spec, error_family=ErrorFamily(family)), n,
                    cell_seed(master, family, n, index))
    if center:
        data = data.centered()
    post = posterior_over_dags(data, prior, g)
    truth = spec.gamma_star
    return {
        "family": family,
        "n": n,
        "seed": index,
        "posterior_true": post.probability(truth),
        "map_correct": post.map_dags == [truth],
        "rank_true": post.rank(truth),
    }


@dataclass
class ConsistencyReport:
    config: ExperimentConfig
    rows: list
    delta_star: Optional[float]
    aggregates: list = field(default_factory=list)
    created: str = ""

    def __post_init__(self):
        if not self.aggregates:
            self.aggregates = aggregate_rows(self.rows, self.config, self.delta_star)

    def to_dict(self) -> dict:
        return {
            "created": self.created,
            "config": self.config.to_dict(),
            "delta_star": self.delta_star,
            "aggregates": self.aggregates,
            "runs": self.rows,
        }

    def to_json(self) -> str:
        return to_json_text(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r["family"], r["n"], r["seed"], repr(float(r["posterior_true"])),
                        int(r["map_correct"]), r["rank_true"]])
        return buf.getvalue()

    def aggregate(self, family: str, n: int) -> dict:
        for a in self.aggregates:
            if a["family"] == family and a["n"] == n:
                return a
        raise KeyError((family, n))

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json())
        (out / "runs.csv").write_text(self.to_csv())
        _write_manifest(out, self.rows, self.config, complete=True)


def aggregate_rows(rows, config: ExperimentConfig, delta: Optional[float]) -> list:
    """Per ``(family, n)`` summaries; recomputable from the flat CSV rows."""
    spec = config.spec
    out = []
    for fam in config.families:
        for n in config.n_grid:
            cell = [r for r in rows if r["family"] == fam and int(r["n"]) == n]
            if not cell:
                continue
            post = np.array([float(r["posterior_true"]) for r in cell])
            hit = np.array([bool(int(r["map_correct"])) for r in cell])
            agg = {
                "family": fam,
                "n": n,
                "runs": len(cell),
                "mean_posterior_true": float(post.mean()),
                "median_posterior_true": float(np.median(post)),
                "map_rate": float(hit.mean()),
                "mean_one_minus_posterior": float((1.0 - post).mean()),
            }
            if delta is not None:
                lb = float(bound_term_log(n, spec.p, delta, spec.gamma_star.edge_count))
                agg["bound_term_log"] = lb
                agg["bound_term"] = math.exp(lb) if lb < 700 else None
            out.append(agg)
    return out


def _write_manifest(out: Path, rows, config, complete: bool, error: str = None):
    done = sorted({(r["family"], r["n"], r["seed"]) for r in rows})
    write_json({"complete": complete, "error": error,
                "cells_total": len(config.families) * len(config.n_grid) * config.seeds,
                "cells_done": [list(c) for c in done]}, out / "manifest.json")


def _jobs(config: ExperimentConfig):
    for fam in config.families:
        for n in config.n_grid:
            for i in range(config.seeds):
                yield (config.spec, fam, n, i, config.master_seed, config.g_for(n),
                       config.prior, config.center)


def run_consistency_experiment(config: ExperimentConfig, workers: int = 1,
                               timestamp: bool = True) -> ConsistencyReport:
    try:
        ds = delta_star(config.spec)
    except DeltaStarUndefinedError:
        ds = None
    rows = []
    jobs = list(_jobs(config))
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for row in pool.map(_run_cell, jobs, chunksize=max(1, len(jobs) // (8 * workers))):
                    rows.append(row)
        else:
            for job in jobs:
                rows.append(_run_cell(job))
    except Exception as exc:
        if config.out_dir is not None:
            out = Path(config.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            partial = ConsistencyReport(config, rows, ds)
            (out / "runs.csv").write_text(partial.to_csv())
            _write_manifest(out, rows, config, complete=False, error=repr(exc))
        raise
    created = datetime.datetime.now(datetime.timezone.utc).isoformat() if timestamp else ""
    report = ConsistencyReport(config, rows, ds, created=created)
    if config.out_dir is not None:
        report.write(config.out_dir)
    return report


def read_runs_csv(text: str) -> list:
    """Parse the flat per-run CSV produced by :meth:`ConsistencyReport.to_csv`."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise InvalidInputError(f"unexpected runs header {reader.fieldnames}")
    return [
        {"family": r["family"], "n": int(r["n"]), "seed": int(r["seed"]),
         "posterior_true": float(r["posterior_true"]), "map_correct": bool(int(r["map_correct"])),
         "rank_true": int(r["rank_true"])}
        for r in reader
    ]
