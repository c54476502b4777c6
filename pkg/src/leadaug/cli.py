"""Command-line interface.

Subcommands: estimate-graph, augment, synth, policy-search,
attack-eval, plus score-linear (the reference implementation of the
subprocess scorer protocol). Structured results go to files as JSON or
CSV; human-readable summaries go to stderr.

Every run is a pure function of its inputs, flags, and seed: there is
no wall-clock or entropy anywhere, and --shards changes scheduling but
never bytes. Omitting --seed falls back to the policy file's seed where
one is involved, and to 0 otherwise.

Exit codes: 0 success, 2 unreadable or malformed input files, 3
semantically incompatible inputs, 4 numerical failure during training.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import shlex
import shutil
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .classifier import DivergenceError
from .container import (
    ContainerError,
    labels_for,
    labels_path,
    load_container,
    load_labels,
    save_container,
    save_labels,
)
from .experiments import HarnessConfig, compare_policies
from .graph import LeadGraph, estimate_graph
from .policy import AugmentPolicy, augment_records
from .search import LinearScorer, SearchGrid, SubprocessScorer, policy_search
from .synth import SOURCE_MODES, SynthSpec, synth_dataset

log = logging.getLogger("leadaug")


def _seed_or(args, fallback: int) -> int:
    return args.seed if args.seed is not None else fallback


def _load_dataset(path):
    """Container plus labels from the sibling .labels.csv file."""
    records = load_container(path)
    labels = labels_for(records, load_labels(labels_path(path)))
    return records, labels


def _policy_mapper(shards: int):
    """Order-preserving map, threaded when shards > 1."""
    if shards <= 1:
        return map

    def mapper(func, items):
        with ThreadPoolExecutor(max_workers=shards) as pool:
            return list(pool.map(func, items))

    return mapper


# -- subcommands -------------------------------------------------------


def cmd_estimate_graph(args) -> int:
    records = []
    for path in args.inputs:
        loaded = load_container(path)
        log.info("read %d records from %s", len(loaded), path)
        records.extend(loaded)
    graph, degenerate = estimate_graph(records, mapper=_policy_mapper(args.shards))
    graph.save_json(args.output)
    if args.csv:
        graph.save_csv(args.csv)
    log.info(
        "estimated %d-lead graph from %d records -> %s",
        len(graph.lead_names), graph.record_count, args.output,
    )
    if degenerate:
        log.warning("%d degenerate (constant) lead observations contributed zeros", degenerate)
    return 0


def cmd_augment(args) -> int:
    policy = AugmentPolicy.load_json(args.policy)
    graph = LeadGraph.load_json(args.graph) if args.graph else None
    if policy.graph is not None and graph is None:
        raise ValueError("policy includes the graph stage; pass --graph")
    records = load_container(args.input)
    seed = _seed_or(args, policy.seed)
    augmented = augment_records(records, graph, policy, seed=seed,
                                mapper=_policy_mapper(args.shards))
    save_container(augmented, args.output)
    source_labels = labels_path(args.input)
    if source_labels.exists():
        shutil.copyfile(source_labels, labels_path(args.output))
        log.info("copied labels to %s", labels_path(args.output))
    log.info("augmented %d records (seed %d) -> %s", len(augmented), seed, args.output)
    return 0


def _split_names(n_parts: int) -> list[str]:
    if n_parts == 2:
        return ["train", "val"]
    if n_parts == 3:
        return ["train", "val", "test"]
    raise ValueError(f"--split takes 2 or 3 comma-separated counts, got {n_parts}")


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_records=args.n_records,
        n_leads=args.n_leads,
        n_samples=args.n_samples,
        n_classes=args.n_classes,
        source=args.source,
        noise_level=args.noise_level,
        amplitude_jitter=args.amplitude_jitter,
        sample_rate=args.sample_rate,
        seed=_seed_or(args, 0),
    )
    records, labels = synth_dataset(spec)

    def write_part(part_records, part_labels, path: Path):
        save_container(part_records, path)
        save_labels(part_records, part_labels, labels_path(path))
        log.info("wrote %d records -> %s", len(part_records), path)

    prefix = Path(args.output)
    if args.split:
        counts = [int(c) for c in args.split.split(",")]
        if any(c < 1 for c in counts):
            raise ValueError(f"--split counts must be positive, got {counts}")
        if sum(counts) != spec.n_records:
            raise ValueError(
                f"--split counts sum to {sum(counts)} but --n-records is {spec.n_records}"
            )
        names = _split_names(len(counts))
        start = 0
        for name, count in zip(names, counts):
            part = records[start:start + count]
            part_labels = labels[start:start + count]
            write_part(part, part_labels, prefix.with_name(f"{prefix.name}_{name}.mwv"))
            start += count
    else:
        write_part(records, labels, prefix.with_name(prefix.name + ".mwv"))
    return 0


def cmd_policy_search(args) -> int:
    train_records, train_labels = _load_dataset(args.train)
    val_records, val_labels = _load_dataset(args.val)
    grid = SearchGrid.load_json(args.grid) if args.grid else SearchGrid()
    if args.trials is not None:
        from dataclasses import replace

        grid = replace(grid, trials=args.trials)

    graph = None
    if any(cell.graph is not None for cell in grid.cells()):
        if args.graph:
            graph = LeadGraph.load_json(args.graph)
        else:
            graph, _ = estimate_graph(train_records)
            log.info("estimated lead graph from %d training records", len(train_records))

    if args.scorer_cmd:
        scorer = SubprocessScorer(tuple(shlex.split(args.scorer_cmd)))
    else:
        scorer = LinearScorer(downsample=args.downsample, n_steps=args.train_steps,
                              learning_rate=args.learning_rate)

    report = policy_search(
        grid, scorer, train_records, train_labels, val_records, val_labels,
        graph=graph, seed=_seed_or(args, 0), repeats=args.repeats,
        progress=lambda cell, mean: log.info(
            "cell %d (%s): mean macro-F1 %.4f", cell.index, cell.describe(), mean
        ),
    )
    report.save_json(args.output)
    if args.best_policy:
        report.best_policy().save_json(args.best_policy)
    log.info(
        "best cell %d (%s), mean macro-F1 %.4f -> %s",
        report.best.cell.index, report.best.cell.describe(), report.best.mean,
        args.output,
    )
    return 0


def _write_curve_csv(path: Path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(rows[0])
        writer.writerows(rows[1:])


def cmd_attack_eval(args) -> int:
    train_records, train_labels = _load_dataset(args.train)
    test_records, test_labels = _load_dataset(args.test)

    policies = []
    for path in args.policy:
        policies.append((Path(path).stem, AugmentPolicy.load_json(path)))

    graph = None
    if any(policy.graph is not None for _, policy in policies):
        if args.graph:
            graph = LeadGraph.load_json(args.graph)
        else:
            graph, _ = estimate_graph(train_records)
            log.info("estimated lead graph from %d training records", len(train_records))

    epsilons = tuple(float(e) for e in args.epsilons.split(","))
    config = HarnessConfig(
        epsilons=epsilons, repeats=args.repeats, downsample=args.downsample,
        train_steps=args.train_steps, learning_rate=args.learning_rate,
        attack_steps=args.attack_steps, random_start=not args.no_random_start,
    )
    seed = _seed_or(args, 0)
    curves = compare_policies(policies, train_records, train_labels,
                              test_records, test_labels, graph, config, seed=seed)

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_test = len(test_records)
    comparison = [["policy", "epsilon", "macro_f1", "n_records", "seed"]]
    for result in curves:
        rows = [["epsilon", "macro_f1", "n_records", "seed"]]
        for eps, score in result.curve:
            rows.append([repr(eps), repr(score), n_test, seed])
            comparison.append([result.name, repr(eps), repr(score), n_test, seed])
        _write_curve_csv(out_dir / f"{result.name}.csv", rows)
        log.info("policy %s: %s", result.name,
                 " ".join(f"{e:g}:{s:.4f}" for e, s in result.curve))
    _write_curve_csv(out_dir / "comparison.csv", comparison)
    log.info("wrote %d policy curves -> %s", len(curves), out_dir)
    return 0


def cmd_score_linear(args) -> int:
    train_records, train_labels = _load_dataset(args.train)
    val_records, val_labels = _load_dataset(args.val)
    scorer = LinearScorer(downsample=args.downsample, n_steps=args.train_steps,
                          learning_rate=args.learning_rate)
    score = scorer(train_records, train_labels, val_records, val_labels,
                   _seed_or(args, 0))
    print(repr(score))
    return 0


# -- parser ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="base seed; defaults to the policy file's seed, else 0")
    common.add_argument("--shards", type=int, default=1,
                        help="parallel workers for per-record stages (same output bytes)")
    common.add_argument("--quiet", action="store_true",
                        help="suppress informational messages on stderr")

    parser = argparse.ArgumentParser(
        prog="leadaug",
        description="Correlation-graph augmentation toolkit for multi-lead waveforms.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("estimate-graph", parents=[common],
                       help="estimate the lead graph from waveform containers")
    p.add_argument("inputs", nargs="+", help="input container paths")
    p.add_argument("--output", "-o", required=True, help="output graph JSON path")
    p.add_argument("--csv", help="also write the adjacency as CSV")
    p.set_defaults(func=cmd_estimate_graph)

    p = sub.add_parser("augment", parents=[common],
                       help="apply an augmentation policy to a container")
    p.add_argument("input", help="input container path")
    p.add_argument("--policy", required=True, help="policy JSON path")
    p.add_argument("--graph", help="lead graph JSON (required when the policy uses it)")
    p.add_argument("--output", "-o", required=True, help="output container path")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic latent-source dataset")
    p.add_argument("--output", "-o", required=True,
                   help="output path prefix (PREFIX.mwv, or PREFIX_train.mwv... with --split)")
    p.add_argument("--n-records", type=int, required=True)
    p.add_argument("--n-leads", type=int, default=12)
    p.add_argument("--n-samples", type=int, default=500)
    p.add_argument("--n-classes", type=int, default=3)
    p.add_argument("--source", choices=SOURCE_MODES, default="class_templates")
    p.add_argument("--noise-level", type=float, default=0.5)
    p.add_argument("--amplitude-jitter", type=float, default=0.2)
    p.add_argument("--sample-rate", type=float, default=250.0)
    p.add_argument("--split", help="comma-separated record counts for train,val[,test] files")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("policy-search", parents=[common],
                       help="grid-search augmentation parameters against a scorer")
    p.add_argument("--train", required=True, help="training container (labels in sibling file)")
    p.add_argument("--val", required=True, help="validation container (labels in sibling file)")
    p.add_argument("--graph", help="lead graph JSON; estimated from training data if omitted")
    p.add_argument("--grid", help="search grid JSON; the documented 6-cell default if omitted")
    p.add_argument("--trials", type=int, default=None, help="override the grid's trials count")
    p.add_argument("--repeats", type=int, default=1,
                   help="augmented copies of the training set per trial")
    p.add_argument("--scorer-cmd",
                   help="external scorer command; gets train/val container paths, prints a float")
    p.add_argument("--output", "-o", required=True, help="output report JSON path")
    p.add_argument("--best-policy", help="also write the winning policy JSON here")
    p.add_argument("--downsample", type=int, default=10, help="built-in scorer pooling factor")
    p.add_argument("--train-steps", type=int, default=200, help="built-in scorer descent steps")
    p.add_argument("--learning-rate", type=float, default=1.0,
                   help="built-in scorer initial step size")
    p.set_defaults(func=cmd_policy_search)

    p = sub.add_parser("attack-eval", parents=[common],
                       help="train per policy and measure adversarial robustness curves")
    p.add_argument("--train", required=True, help="training container (labels in sibling file)")
    p.add_argument("--test", required=True, help="test container (labels in sibling file)")
    p.add_argument("--policy", action="append", required=True,
                   help="policy JSON path; repeat for several policies (names from file stems)")
    p.add_argument("--graph", help="lead graph JSON; estimated from training data if needed")
    p.add_argument("--epsilons", default="0,0.05,0.1,0.15,0.2",
                   help="comma-separated attack radii, ascending from 0")
    p.add_argument("--repeats", type=int, default=2,
                   help="augmented copies of the training set")
    p.add_argument("--attack-steps", type=int, default=40)
    p.add_argument("--no-random-start", action="store_true")
    p.add_argument("--downsample", type=int, default=10)
    p.add_argument("--train-steps", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.add_argument("--output-dir", "-o", required=True,
                   help="directory for per-policy CSVs and comparison.csv")
    p.set_defaults(func=cmd_attack_eval)

    p = sub.add_parser("score-linear", parents=[common],
                       help="subprocess-scorer reference: train linear model, print macro-F1")
    p.add_argument("train", help="training container (labels in sibling file)")
    p.add_argument("val", help="validation container (labels in sibling file)")
    p.add_argument("--downsample", type=int, default=10)
    p.add_argument("--train-steps", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.set_defaults(func=cmd_score_linear)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.handlers = [handler]
    log.setLevel(logging.WARNING if args.quiet else logging.INFO)
    try:
        return args.func(args)
    except ContainerError as exc:
        log.error("input error: %s", exc)
        return 2
    except json.JSONDecodeError as exc:
        log.error("malformed JSON: %s", exc)
        return 2
    except OSError as exc:
        log.error("i/o error: %s", exc)
        return 2
    except DivergenceError as exc:
        log.error("numerical failure: %s", exc)
        return 4
    except (ValueError, KeyError) as exc:
        log.error("error: %s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
