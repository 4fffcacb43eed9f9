"""Command-line interface.

    banditix run    --config cfg.json [--jobs N] [--out DIR]
    banditix verify --suite {lemma1|lemma2|lemma4|optimism|resampling|all}
                    [--cases N] [--seed S]
    banditix alpha  --graph FILE [--exact]

``run`` executes an experiment config and writes ``results.csv`` and
``summary.json``; ``verify`` runs the randomized guarantee suites and exits
nonzero if any assertion fails; ``alpha`` reports independence numbers of a
graph file.
"""

import argparse
import os
import sys

from .graphs import GraphSizeError, independence_number_exact, independence_number_greedy, load_graph
from .harness import (
    BoundViolationError,
    ConfigError,
    ExperimentConfig,
    emit_csv,
    emit_summary,
    run_experiment,
)
from .verify import SUITES, run_suites


def _cmd_run(args):
    try:
        config = ExperimentConfig.from_json_file(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        result = run_experiment(config, jobs=args.jobs)
    except BoundViolationError as exc:
        print(f"BOUND VIOLATION: {exc}", file=sys.stderr)
        return 1
    out_dir = args.out or "out"
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "results.csv")
    summary_path = os.path.join(out_dir, "summary.json")
    emit_csv(result, csv_path)
    summary = emit_summary(result, summary_path)
    print(
        f"{config.policy}: d={config.d} T={config.horizon} "
        f"reps={config.replications} backend={result.backend} "
        f"elapsed={result.elapsed:.2f}s"
    )
    for entry in summary["checkpoints"]:
        print(
            f"  round {entry['round']:>7}: mean regret {entry['mean_regret']:10.3f}"
            f" (se {entry['se_regret']:.3f})"
        )
    for name, info in summary["bounds"].items():
        status = "holds" if info["holds_on_mean"] else "EXCEEDED"
        print(
            f"  bound {name}: mean value {info['mean_value']:.3f} vs "
            f"mean regret {info['mean_final_regret']:.3f} -> {status}"
        )
    if "lemma2" in summary["checks"]:
        info = summary["checks"]["lemma2"]
        print(
            f"  stability check: {info['checked_reps']} rep(s), "
            f"max Q/bound = {info['max_ratio']:.4f}"
        )
    print(f"wrote {csv_path} and {summary_path}")
    return 0


def _cmd_verify(args):
    reports = run_suites(args.suite, cases=args.cases, seed=args.seed)
    ok = True
    for report in reports:
        print(report.line())
        for failure in report.failures[:10]:
            print(f"    {failure}")
        ok &= report.passed
    return 0 if ok else 1


def _cmd_alpha(args):
    try:
        graph = load_graph(args.graph)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"d={graph.d}")
    print(f"alpha_greedy={independence_number_greedy(graph)}")
    if args.exact:
        try:
            print(f"alpha_exact={independence_number_exact(graph)}")
        except GraphSizeError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="banditix",
        description="Adversarial bandits with graph-structured side observations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a JSON config")
    run_p.add_argument("--config", required=True, help="path to the JSON config")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run_p.add_argument("--out", default=None, help="output directory (default: out)")
    run_p.set_defaults(func=_cmd_run)

    verify_p = sub.add_parser("verify", help="run randomized guarantee suites")
    verify_p.add_argument("--suite", required=True, choices=list(SUITES) + ["all"])
    verify_p.add_argument("--cases", type=int, default=None)
    verify_p.add_argument("--seed", type=int, default=0)
    verify_p.set_defaults(func=_cmd_verify)

    alpha_p = sub.add_parser("alpha", help="independence numbers of a graph file")
    alpha_p.add_argument("--graph", required=True, help="path to a graph text file")
    alpha_p.add_argument("--exact", action="store_true", help="also compute exact alpha")
    alpha_p.set_defaults(func=_cmd_alpha)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
