"""Command line interface.

Exit codes: 0 success, 1 configuration error, 2 runtime failure, 3 a fixture
check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .adjustment import (
    canonical_adjustment_set,
    forbidden_set,
    identifiable_in_admg,
    is_valid_adjustment,
    parent_adjustment_valid,
)
from .dataset import Dataset, DatasetError
from .discovery import BOT, handle_from_spec, run_algorithm
from .fixtures import run_fixtures
from .graph import GraphError, Kind, ancestors, from_json, parents, possible_descendants, to_json
from .harness import ConfigError, ExperimentConfig, cmd_correlate, cmd_generate, cmd_score, cmd_select, read_records
from .projection import project
from .separation import definite_status_open_paths, is_m_separated

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_FIXTURE = 0, 1, 2, 3


def _split(text: str | None) -> list[str]:
    return [t.strip() for t in (text or "").split(",") if t.strip()]


def _load_graph(path: str):
    try:
        return from_json(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _emit(doc, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()
    return cfg


def run_generate(args) -> int:
    cfg = _config(args)
    manifest = cmd_generate(cfg, args.out or "out")
    print(f"wrote {len(manifest['datasets'])} datasets to {args.out or 'out'}")
    return EXIT_OK


def run_discover(args) -> int:
    data = Dataset.from_csv(args.data)
    spec = {"type": args.algorithm.replace("-", "_"), "alpha": args.alpha}
    if args.command:
        spec["command"] = args.command
    try:
        handle = handle_from_spec(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    g = run_algorithm(handle, data, _split(args.subset) or None)
    if g is BOT:
        text = "BOT\n"
    else:
        text = to_json(g)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def run_project(args) -> int:
    g = _load_graph(args.input)
    out = project(g, _split(args.keep), Kind(args.as_kind.upper()))
    text = to_json(out)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def run_adjust(args) -> int:
    g = _load_graph(args.graph)
    x, y = args.treatment, args.outcome
    doc = {"treatment": x, "outcome": y}
    if g.kind in (Kind.DAG, Kind.ADMG):
        valid, pa = parent_adjustment_valid(g, x, y)
        doc.update(parent_adjustment_valid=valid, parents=sorted(pa),
                   identifiable=identifiable_in_admg(g, x, y))
    if g.kind is not Kind.ADMG:
        doc.update(forbidden=sorted(forbidden_set(g, x, y)), canonical=sorted(canonical_adjustment_set(g, x, y)))
        if args.set is not None:
            doc["candidate"] = _split(args.set)
            doc["valid"] = is_valid_adjustment(g, x, y, _split(args.set))
    _emit(doc, args.out)
    return EXIT_OK


def run_query(args) -> int:
    g = _load_graph(args.graph)
    doc = {}
    if args.x and args.y:
        given = _split(args.given)
        if g.kind in (Kind.DAG, Kind.ADMG, Kind.MAG):
            doc["m_separated"] = is_m_separated(g, args.x, args.y, given)
        if g.kind is not Kind.ADMG:
            doc["definite_status_open_noncausal_path"] = definite_status_open_paths(g, args.x, args.y, given)
    if args.x:
        doc["ancestors"] = sorted(ancestors(g, args.x))
        doc["parents"] = sorted(parents(g, args.x))
        doc["possible_descendants"] = sorted(possible_descendants(g, args.x))
    if not doc:
        from .graph import validate

        doc["violations"] = validate(g)
    _emit(doc, args.out)
    return EXIT_OK


def run_score(args) -> int:
    cfg = _config(args)
    records = cmd_score(cfg, args.data, args.out or "out", jobs=args.jobs)
    print(f"scored {len(records)} runs; records in {args.out or 'out'}/records.csv")
    return EXIT_OK


def run_correlate(args) -> int:
    records = read_records(args.records)
    _emit(cmd_correlate(records), args.out)
    return EXIT_OK


def run_select(args) -> int:
    records = read_records(args.records)
    labels = _split(args.pair)
    if len(labels) != 2:
        raise ConfigError("--pair needs two comma separated labels")
    res = cmd_select(records, labels[0], labels[1], args.score)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        import csv

        with open(out / "selection.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(res["rows"][0]))
            w.writeheader()
            w.writerows(res["rows"])
        _emit(res["summary"], str(out / "summary.json"))
    print(json.dumps(res["summary"], indent=2))
    return EXIT_OK


def run_fixtures_cmd(args) -> int:
    results = run_fixtures()
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FIXTURE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="master seed, overrides the config")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="selfcompat", description="Self-compatibility scores for causal discovery.")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("generate", parents=[common], help="sample synthetic datasets and ground truths")
    s.set_defaults(func=run_generate)

    s = sub.add_parser("discover", parents=[common], help="run a discovery algorithm on a CSV")
    s.add_argument("--data", required=True)
    s.add_argument("--algorithm", default="pc", choices=["pc", "entropy-dag", "entropy-admg", "external"])
    s.add_argument("--alpha", type=float, default=0.01)
    s.add_argument("--command", help="command template for --algorithm external")
    s.add_argument("--subset", help="comma separated columns")
    s.set_defaults(func=run_discover)

    s = sub.add_parser("project", parents=[common], help="latent projection of a graph")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--keep", required=True)
    s.add_argument("--as", dest="as_kind", required=True, choices=["dag", "admg", "mag", "cpdag", "pag"])
    s.set_defaults(func=run_project)

    s = sub.add_parser("adjust", parents=[common], help="adjustment sets for a treatment/outcome pair")
    s.add_argument("--graph", required=True)
    s.add_argument("--treatment", required=True)
    s.add_argument("--outcome", required=True)
    s.add_argument("--set", help="candidate adjustment set to check")
    s.set_defaults(func=run_adjust)

    s = sub.add_parser("query", parents=[common], help="separation and ancestry queries")
    s.add_argument("--graph", required=True)
    s.add_argument("--x")
    s.add_argument("--y")
    s.add_argument("--given")
    s.set_defaults(func=run_query)

    s = sub.add_parser("score", parents=[common], help="score algorithms on generated datasets")
    s.add_argument("--data", required=True, help="directory written by 'generate'")
    s.set_defaults(func=run_score)

    s = sub.add_parser("correlate", parents=[common], help="correlate scores with SHD to the truth")
    s.add_argument("--records", required=True)
    s.set_defaults(func=run_correlate)

    s = sub.add_parser("select", parents=[common], help="pick between two algorithms by score")
    s.add_argument("--records", required=True)
    s.add_argument("--pair", required=True, help="two algorithm labels, comma separated")
    s.add_argument("--score", default="kappa_g", choices=["kappa_g", "kappa_i"])
    s.set_defaults(func=run_select)

    s = sub.add_parser("fixtures", parents=[common], help="check the reference constructions")
    s.set_defaults(func=run_fixtures_cmd)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GraphError, DatasetError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
