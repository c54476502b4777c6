"""Cross-interface acceptance: the bindings against the file pipeline.

Both checks drive the real command-line entry point on containers
written from random arrays, then reproduce the run through the
bindings and compare bit for bit (container samples are stored as
float32, so batch outputs are compared after that rounding). Each
check prints one PASS/FAIL line.
"""

import functools
import tempfile
from pathlib import Path

import numpy as np

from leadaug import AugmentPolicy, GraphAugParams, LeadGraph, MultiLeadRecord, load_container, save_container
from leadaug.cli import main as cli_main
from leadaug_bindings import (
    BoundBatch,
    augment_batch,
    estimate_graph_from_arrays,
    load_graph_json,
    load_policy_json,
    save_graph_json,
    save_policy_json,
)


def criterion(label):
    def wrap(fn):
        @functools.wraps(fn)
        def run():
            try:
                fn()
            except BaseException:
                print(f"FAIL  {label}", flush=True)
                raise
            print(f"PASS  {label}", flush=True)

        return run

    return wrap


def run_cli(*argv):
    code = cli_main([str(a) for a in argv])
    assert code == 0, f"command {argv[0]} exited {code}"


def storage_rounded(values):
    """Samples as the container file format stores them."""
    return np.asarray(values, dtype=np.float64).astype(np.float32).astype(np.float64)


def random_policy(rng, case):
    n_ops = int(rng.integers(1, 5))
    gamma = float(rng.uniform(5.0, 40.0))
    mixing = GraphAugParams(prob=float(rng.uniform(0.3, 1.0)),
                            alpha=float(rng.uniform(0.2, 1.0)))
    if case % 3 == 0:
        return AugmentPolicy(n_ops=n_ops, gamma=gamma)
    if case % 3 == 1:
        return AugmentPolicy(graph=mixing)
    return AugmentPolicy(graph=mixing, n_ops=n_ops, gamma=gamma)


@criterion("augment_batch equals the augment subcommand on 20 random batches")
def test_augment_batch_matches_cli():
    rng = np.random.default_rng(11)
    with tempfile.TemporaryDirectory(prefix="leadaug-bind-") as tmp:
        root = Path(tmp)
        for case in range(20):
            n = int(rng.integers(1, 7))
            n_leads = int(rng.integers(2, 7))
            n_samples = int(rng.integers(30, 81))
            names = tuple(f"c{i}" for i in range(n_leads))
            # start from storage-rounded values so the CLI reads the
            # exact batch the bindings see
            batch = storage_rounded(
                rng.normal(size=(n, n_leads, n_samples)) * rng.uniform(0.5, 2.0)
            )
            graph = estimate_graph_from_arrays(
                [rng.normal(size=(n_leads, 50)) for _ in range(4)], names
            )
            policy = random_policy(rng, case)
            seed = int(rng.integers(0, 2**31))

            graph_path = root / f"graph{case}.json"
            policy_path = root / f"policy{case}.json"
            in_path = root / f"in{case}.mwv"
            out_path = root / f"out{case}.mwv"
            save_graph_json(graph, graph_path)
            save_policy_json(policy, policy_path)
            save_container(
                [MultiLeadRecord(batch[i], 250.0, names, record_id=f"r{i}")
                 for i in range(n)],
                in_path,
            )

            run_cli("augment", in_path, "--policy", policy_path, "--graph", graph_path,
                    "--seed", seed, "--output", out_path, "--quiet")
            via_cli = np.stack([r.leads for r in load_container(out_path)])

            via_bindings = augment_batch(
                BoundBatch(batch, names),
                graph=load_graph_json(graph_path),
                policy=load_policy_json(policy_path),
                seed=seed,
            )
            assert via_bindings.shape == batch.shape
            assert np.array_equal(storage_rounded(via_bindings), via_cli)


@criterion("array graph estimation equals the estimate-graph subcommand")
def test_graph_estimation_matches_cli():
    rng = np.random.default_rng(12)
    with tempfile.TemporaryDirectory(prefix="leadaug-bind-") as tmp:
        root = Path(tmp)
        for case in range(20):
            n = int(rng.integers(1, 8))
            n_leads = int(rng.integers(2, 7))
            n_samples = int(rng.integers(30, 101))
            names = tuple(f"ch{i}" for i in range(n_leads))
            arrays = [storage_rounded(rng.normal(size=(n_leads, n_samples)))
                      for _ in range(n)]

            in_path = root / f"data{case}.mwv"
            graph_path = root / f"graph{case}.json"
            save_container(
                [MultiLeadRecord(a, 500.0, names, record_id=f"r{i}")
                 for i, a in enumerate(arrays)],
                in_path,
            )
            run_cli("estimate-graph", in_path, "--output", graph_path, "--quiet")
            via_cli = LeadGraph.load_json(graph_path)

            via_bindings = estimate_graph_from_arrays(arrays, names)
            assert via_bindings.lead_names == via_cli.lead_names
            assert via_bindings.record_count == via_cli.record_count
            assert np.array_equal(via_bindings.adjacency, via_cli.adjacency)
