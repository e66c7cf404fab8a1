"""Experiment orchestration: data generation, scoring runs and their analysis.

All randomness flows from one master seed. Dataset ``i`` is generated from
``default_rng([seed, i])``, its subset plan from ``default_rng([seed, i, 1])``
and the interventional score from ``default_rng([seed, i, 2])``, so any
single dataset can be regenerated on its own.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .dataset import Dataset
from .discovery import handle_from_spec
from .graph import Graph, decode, to_json
from .projection import project
from .scm import random_dag, random_linear_scm, sample
from .scores import SubsetPlan, sample_subsets, self_compat_report, shd
from .stats import partial_correlation_analysis

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunRecord",
    "generate_dataset",
    "cmd_generate",
    "score_dataset",
    "cmd_score",
    "cmd_correlate",
    "cmd_select",
    "read_records",
    "write_records",
]

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    n_obs: int = 10
    n_hidden: int = 0
    expected_degree: float = 2.0
    noise_kind: str = "gaussian"
    n_samples: int = 1000
    n_datasets: int = 100
    subset_size: int = 5
    subset_count: int = 40
    algorithms: list = field(default_factory=lambda: [{"type": "pc", "alpha": 0.01}])
    scores: list = field(default_factory=lambda: ["kappa_g", "kappa_i"])
    level: float = 0.001
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc)

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(isinstance(self.n_obs, int) and self.n_obs >= 1, "n_obs must be a positive integer")
        need(isinstance(self.n_hidden, int) and self.n_hidden >= 0, "n_hidden must be >= 0")
        total = self.n_obs + self.n_hidden
        need(0 <= self.expected_degree <= max(total - 1, 0), "expected_degree out of range")
        need(self.noise_kind in ("gaussian", "uniform"), "noise_kind must be gaussian or uniform")
        need(isinstance(self.n_samples, int) and self.n_samples > self.n_obs + 3, "n_samples too small")
        need(isinstance(self.n_datasets, int) and self.n_datasets >= 1, "n_datasets must be positive")
        need(1 <= self.subset_size <= self.n_obs, "subset_size must lie in [1, n_obs]")
        need(self.subset_count >= 1, "subset_count must be positive")
        need(0 < self.level < 1, "level must lie in (0, 1)")
        need(set(self.scores) <= {"kappa_g", "kappa_i"}, "scores must be kappa_g and/or kappa_i")
        need(isinstance(self.algorithms, list) and self.algorithms, "algorithms must be a non-empty list")
        labels = []
        for spec in self.algorithms:
            need(isinstance(spec, dict) and "type" in spec, f"bad algorithm entry {spec!r}")
            try:
                h = handle_from_spec(spec, truth=_PLACEHOLDER)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            labels.append(h.label)
        need(len(set(labels)) == len(labels), f"algorithm labels must be unique: {labels}")

    def to_dict(self) -> dict:
        return asdict(self)


_PLACEHOLDER = Graph("DAG", ["_"])


@dataclass
class RunRecord:
    dataset_id: int
    algorithm: str
    kappa_g: float | str | None
    kappa_i: float | str | None
    normalizer_c: int
    bot_count: int
    shd_to_truth: int | None
    avg_true_degree: float
    seconds: float
    warning: str = ""


# ---------------------------------------------------------------------------
# generation


def generate_dataset(cfg: ExperimentConfig, i: int) -> tuple[Graph, frozenset, Dataset]:
    rng = np.random.default_rng([cfg.seed, i])
    dag, observed = random_dag(cfg.n_obs, cfg.n_hidden, cfg.expected_degree, rng)
    scm = random_linear_scm(dag, cfg.noise_kind, rng, observed)
    return dag, observed, sample(scm, cfg.n_samples, rng)


def subset_plan(cfg: ExperimentConfig, i: int, columns: Sequence[str]) -> SubsetPlan:
    return sample_subsets(columns, cfg.subset_size, cfg.subset_count, np.random.default_rng([cfg.seed, i, 1]))


def _name(i: int) -> str:
    return f"d{i:04d}"


def cmd_generate(cfg: ExperimentConfig, out: str | Path) -> dict:
    """Write one CSV and one truth graph per dataset plus ``manifest.json``."""
    out = Path(out)
    (out / "data").mkdir(parents=True, exist_ok=True)
    (out / "truth").mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(cfg.n_datasets):
        dag, observed, data = generate_dataset(cfg, i)
        csv_path = out / "data" / f"{_name(i)}.csv"
        truth_path = out / "truth" / f"{_name(i)}.json"
        data.to_csv(csv_path)
        truth_path.write_text(to_json(dag))
        entries.append({
            "id": i,
            "seed": [cfg.seed, i],
            "csv": f"data/{_name(i)}.csv",
            "truth": f"truth/{_name(i)}.json",
            "observed": sorted(observed),
        })
    manifest = {"config": cfg.to_dict(), "datasets": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def load_dataset(root: str | Path, entry: dict) -> tuple[Graph, frozenset, Dataset]:
    root = Path(root)
    truth = decode(json.loads((root / entry["truth"]).read_text()))
    data = Dataset.from_csv(root / entry["csv"])
    return truth, frozenset(entry["observed"]), data


# ---------------------------------------------------------------------------
# scoring


def avg_degree(g: Graph) -> float:
    return 2.0 * len(g.skeleton_pairs()) / len(g.nodes)


def score_dataset(cfg: ExperimentConfig, i: int, truth: Graph, observed: frozenset,
                  data: Dataset) -> list[tuple[RunRecord, dict]]:
    """Score every configured algorithm on dataset ``i``."""
    plan = subset_plan(cfg, i, data.columns)
    rows = []
    for spec in cfg.algorithms:
        handle = handle_from_spec(spec, truth)
        t0 = time.perf_counter()
        try:
            report = self_compat_report(handle, data, plan, cfg.level, np.random.default_rng([cfg.seed, i, 2]),
                                        with_kappa_i="kappa_i" in cfg.scores)
        except Exception as exc:  # a failed run is recorded, the study goes on
            log.warning("dataset %d, %s: run failed: %s", i, handle.label, exc)
            rec = RunRecord(i, handle.label, None, None, 0, 0, None, avg_degree(truth),
                            time.perf_counter() - t0, f"error: {exc}")
            rows.append((rec, {"error": str(exc)}))
            continue
        shd_truth = None
        if report.joint is not None:
            joint = decode(report.joint)
            shd_truth = shd(project(truth, observed, joint.kind), joint)
        doc = report.to_dict()
        rec = RunRecord(
            i,
            handle.label,
            doc["kappa_g"] if "kappa_g" in cfg.scores else None,
            doc["kappa_i"],
            report.normalizer_c,
            report.bot_count,
            shd_truth,
            avg_degree(truth),
            time.perf_counter() - t0,
            report.warning or "",
        )
        rows.append((rec, doc))
    return rows


def _score_one(args):
    cfg, root, entry = args
    truth, observed, data = load_dataset(root, entry)
    return score_dataset(cfg, entry["id"], truth, observed, data)


def cmd_score(cfg: ExperimentConfig, data_dir: str | Path, out: str | Path, jobs: int = 1) -> list[RunRecord]:
    """Score all datasets listed in ``data_dir/manifest.json``.

    Writes ``records.csv``, ``records.json`` and one report per run under
    ``reports/``.
    """
    data_dir, out = Path(data_dir), Path(out)
    try:
        manifest = json.loads((data_dir / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest in {data_dir}: {exc}") from exc
    tasks = [(cfg, data_dir, e) for e in manifest["datasets"]]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_score_one, tasks))
    else:
        results = [_score_one(t) for t in tasks]
    (out / "reports").mkdir(parents=True, exist_ok=True)
    records = []
    for rows in results:
        for rec, doc in rows:
            records.append(rec)
            path = out / "reports" / f"{_name(rec.dataset_id)}_{rec.algorithm}.json"
            path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n")
    write_records(records, out)
    return records


_COLUMNS = [f.name for f in fields(RunRecord)]


def write_records(records: Sequence[RunRecord], out: str | Path) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "records.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([c for c in _COLUMNS if c != "seconds"])
        for r in records:
            d = asdict(r)
            w.writerow(["" if d[c] is None else d[c] for c in _COLUMNS if c != "seconds"])
    (out / "records.json").write_text(json.dumps([asdict(r) for r in records], indent=1) + "\n")


def _num(v):
    if v in ("", None):
        return None
    try:
        return float(v)
    except (TypeError, ValueError):
        return v


def read_records(path: str | Path) -> list[RunRecord]:
    path = Path(path)
    if path.suffix == ".json":
        rows = json.loads(path.read_text())
    else:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        shd_v = _num(r.get("shd_to_truth"))
        out.append(RunRecord(
            int(r["dataset_id"]), str(r["algorithm"]), _num(r.get("kappa_g")), _num(r.get("kappa_i")),
            int(float(r.get("normalizer_c") or 0)), int(float(r.get("bot_count") or 0)),
            None if shd_v is None else int(shd_v), float(r["avg_true_degree"]),
            float(r.get("seconds") or 0.0), r.get("warning") or "",
        ))
    return out


# ---------------------------------------------------------------------------
# analysis


def cmd_correlate(records: Sequence[RunRecord], scores: Sequence[str] = ("kappa_g", "kappa_i")) -> dict:
    """Correlation of each score with the SHD to the truth.

    Reports Pearson and Spearman coefficients and the partial correlation
    given the average degree of the true graph.
    """
    out = {}
    for score in scores:
        rows = [r for r in records
                if isinstance(getattr(r, score), (int, float)) and r.shd_to_truth is not None]
        if not rows:
            continue
        if len(rows) < 10:
            raise ValueError(f"{score}: need at least 10 records with truth, got {len(rows)}")
        k = np.array([float(getattr(r, score)) for r in rows])
        s = np.array([float(r.shd_to_truth) for r in rows])
        deg = np.array([r.avg_true_degree for r in rows])
        entry = {"n": len(rows)}
        if np.ptp(k) == 0 or np.ptp(s) == 0:
            entry.update(pearson=None, pearson_p=None, spearman=None, spearman_p=None, partial_r=None, partial_p=None)
        else:
            pr = sps.pearsonr(k, s)
            sr = sps.spearmanr(k, s)
            entry.update(pearson=float(pr[0]), pearson_p=float(pr[1]),
                         spearman=float(sr[0]), spearman_p=float(sr[1]))
            controls = deg if np.ptp(deg) > 0 else ()
            r, p = partial_correlation_analysis(k, s, controls)
            entry.update(partial_r=r, partial_p=p)
        out[score] = entry
    return out


def cmd_select(records: Sequence[RunRecord], label_a: str, label_b: str, score: str = "kappa_g") -> dict:
    """Pick per dataset the algorithm with the lower score and compare SHDs.

    A dataset where the two scores tie counts as ``tie``. Otherwise the
    pick is ``better``, ``equal`` or ``worse`` by its SHD to the truth
    relative to the other algorithm.
    """
    by = {}
    for r in records:
        by.setdefault(r.dataset_id, {})[r.algorithm] = r
    rows = []
    for ds in sorted(by):
        pair = by[ds]
        if label_a not in pair or label_b not in pair:
            raise ValueError(f"dataset {ds} lacks a record for {label_a} or {label_b}")
        ra, rb = pair[label_a], pair[label_b]
        ka, kb = _score_value(getattr(ra, score)), _score_value(getattr(rb, score))
        if ra.shd_to_truth is None or rb.shd_to_truth is None:
            raise ValueError(f"dataset {ds} lacks an SHD to the truth")
        if ka == kb:
            win, lose, outcome = ra, rb, "tie"
        else:
            win, lose = (ra, rb) if ka < kb else (rb, ra)
            if win.shd_to_truth < lose.shd_to_truth:
                outcome = "better"
            elif win.shd_to_truth > lose.shd_to_truth:
                outcome = "worse"
            else:
                outcome = "equal"
        rows.append({"dataset_id": ds, "winner": win.algorithm if outcome != "tie" else "tie",
                     "winner_shd": win.shd_to_truth, "loser_shd": lose.shd_to_truth, "outcome": outcome,
                     f"{label_a}_{score}": ka, f"{label_b}_{score}": kb})
    n = len(rows)
    count = {k: sum(r["outcome"] == k for r in rows) for k in ("better", "equal", "worse", "tie")}
    tie_same = sum(r["outcome"] == "tie" and r["winner_shd"] == r["loser_shd"] for r in rows)
    summary = {k: count[k] / n for k in count}
    summary["better_or_equal"] = (count["better"] + count["equal"] + tie_same) / n
    summary["n"] = n
    return {"summary": summary, "rows": rows}


def _score_value(v) -> float:
    # the failure token ranks as the worst possible score
    if isinstance(v, (int, float)) and not (isinstance(v, float) and math.isnan(v)):
        return float(v)
    return math.inf
