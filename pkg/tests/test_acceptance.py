"""Top-level acceptance checks for the whole toolkit.

Each test covers one externally meaningful guarantee and prints a PASS
or FAIL line, so ``pytest tests/test_acceptance.py -s -q`` reads as a
checklist. The suite is self-contained: no fixtures, every test builds
its own data, and everything is seeded. The two experiment-scale tests
sit at the bottom; the robustness comparison is the only slow one
(a few minutes).
"""

import contextlib
import functools
import io
import tempfile
import time
from pathlib import Path

import numpy as np

from leadaug import (
    AttackConfig,
    AugmentPolicy,
    GraphAugParams,
    HarnessConfig,
    LeadGraph,
    LinearScorer,
    MultiLeadRecord,
    RandomStream,
    STANDARD_OPS,
    SearchGrid,
    SynthSpec,
    WaveformLinearClassifier,
    apply_policy,
    compare_policies,
    estimate_graph,
    gaussian_noise,
    gaussian_smooth,
    graph_augment,
    graph_mix,
    pgd_attack_batch,
    policy_search,
    synth_dataset,
    time_warp,
    zero_mask,
)
from leadaug.cli import main as cli_main
from leadaug.container import labels_path
from leadaug.experiments import dominates
from leadaug.policy import GRAPH_OP_NAME

from conftest import random_record


def criterion(label):
    """Print one PASS/FAIL line per acceptance check, then defer to pytest."""

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


def random_graph(rng, lead_names):
    """Valid random adjacency: symmetric, zero diagonal, entries in [-1, 1]."""
    n = len(lead_names)
    raw = rng.uniform(-1.0, 1.0, size=(n, n))
    adjacency = (raw + raw.T) / 2.0
    np.fill_diagonal(adjacency, 0.0)
    return LeadGraph(adjacency, tuple(lead_names), record_count=1)


def run_cli(*argv):
    code = cli_main([str(a) for a in argv])
    assert code == 0, f"command {argv[0]} exited {code}"


def same_file(a, b):
    return Path(a).read_bytes() == Path(b).read_bytes()


def same_dir(a, b):
    a, b = Path(a), Path(b)
    names = sorted(p.name for p in a.iterdir())
    if names != sorted(p.name for p in b.iterdir()):
        return False
    return all((a / n).read_bytes() == (b / n).read_bytes() for n in names)


# ---------------------------------------------------------------------------
# graph estimation against an independent oracle


@criterion("lead graph matches the brute-force correlation oracle")
def test_graph_matches_bruteforce_oracle():
    rng = np.random.default_rng(101)
    records = [
        random_record(rng, n_leads=12, n_samples=500, record_id=f"r{i:02d}")
        for i in range(50)
    ]
    start = time.perf_counter()
    graph, degenerate = estimate_graph(records)
    elapsed = time.perf_counter() - start

    # oracle: per-record np.corrcoef with a zeroed diagonal, averaged
    oracle = np.zeros((12, 12))
    for record in records:
        corr = np.corrcoef(record.leads)
        np.fill_diagonal(corr, 0.0)
        oracle += corr
    oracle /= len(records)

    assert degenerate == 0
    assert graph.record_count == 50
    assert graph.lead_names == records[0].lead_names
    assert float(np.abs(graph.adjacency - oracle).max()) <= 1e-10
    assert elapsed < 5.0


@criterion("lead graph invariants hold on 1000 random datasets")
def test_graph_invariant_suite():
    rng = np.random.default_rng(202)
    for _ in range(1000):
        n_leads = int(rng.integers(2, 9))
        n_samples = int(rng.integers(30, 121))
        n_records = int(rng.integers(1, 6))
        names = tuple(f"L{i}" for i in range(n_leads))
        records = [
            random_record(rng, n_leads, n_samples, record_id=f"r{i}", lead_names=names)
            for i in range(n_records)
        ]
        graph, _ = estimate_graph(records)
        adjacency = graph.adjacency
        assert np.array_equal(adjacency, adjacency.T)
        assert np.all(np.diag(adjacency) == 0.0)
        assert float(np.abs(adjacency).max()) <= 1.0
        # per-lead positive rescaling cannot move a correlation
        scales = rng.uniform(0.1, 10.0, size=n_leads)
        scaled = [r.with_leads(r.leads * scales[:, None]) for r in records]
        rescaled, _ = estimate_graph(scaled)
        np.testing.assert_allclose(rescaled.adjacency, adjacency, rtol=0.0, atol=1e-10)


# ---------------------------------------------------------------------------
# graph mixing identities


class ForcedMix:
    """Stream stub: the rewrite gate always passes and lambda is the bound."""

    def fork(self, *labels):
        return self

    def random(self, size=None):
        return 0.0

    def uniform(self, low=0.0, high=1.0, size=None):
        return high


@criterion("mixing identities: p=0, alpha=0, empty row, forced lambda=1")
def test_mixing_identities():
    rng = np.random.default_rng(303)
    for _ in range(1000):
        n_leads = int(rng.integers(2, 7))
        n_samples = int(rng.integers(20, 61))
        record = random_record(rng, n_leads, n_samples, record_id="mix")
        graph = random_graph(rng, record.lead_names)
        stream = RandomStream(int(rng.integers(0, 2**32)))

        # p = 0: no lead is ever rewritten
        assert graph_augment(record, graph, GraphAugParams(prob=0.0, alpha=0.9), stream) is record
        # alpha = 0: lambda is always zero, again an identity
        assert graph_augment(record, graph, GraphAugParams(prob=1.0, alpha=0.0), stream) is record

        # a lead with no neighbours mixes to the exact zero signal
        k = int(rng.integers(0, n_leads))
        cut = np.array(graph.adjacency)
        cut[k, :] = 0.0
        cut[:, k] = 0.0
        isolated = LeadGraph(cut, graph.lead_names, graph.record_count)
        assert np.array_equal(graph_mix(record, isolated, k), np.zeros(n_samples))

        # lambda forced to 1 replaces every lead by its mix, exactly
        forced = graph_augment(record, graph, GraphAugParams(prob=1.0, alpha=1.0), ForcedMix())
        for i in range(n_leads):
            assert np.array_equal(forced.leads[i], graph_mix(record, graph, i))


# ---------------------------------------------------------------------------
# standard operator contracts


class ForcedCut:
    """Stream stub: time_warp always takes the CUT branch at a fixed start."""

    def __init__(self, start):
        self.start = start

    def random(self, size=None):
        return 0.0

    def integers(self, low, high=None, size=None):
        return min(int(low) + self.start, int(high) - 1)


@criterion("operator contracts: gamma=0 identity, full mask, constants, noise moments")
def test_standard_op_contracts():
    rng = np.random.default_rng(404)

    # gamma = 0 is an identity for all four standard operators
    for _ in range(25):
        record = random_record(rng, n_leads=3, n_samples=50, record_id="id")
        for name, op in STANDARD_OPS.items():
            out = op(record, 0.0, RandomStream(int(rng.integers(0, 2**32))))
            assert np.array_equal(out.leads, record.leads), name

    # gamma = 100 masks the entire record
    for seed in range(25):
        record = random_record(rng, n_leads=2, n_samples=40, record_id="full")
        out = zero_mask(record, 100.0, RandomStream(seed))
        assert np.array_equal(out.leads, np.zeros_like(record.leads))

    # constant signals survive smoothing and cut-style warping
    levels = np.array([-2.0, 0.5, 3.25])
    constant = MultiLeadRecord(
        leads=np.repeat(levels[:, None], 60, axis=1),
        sample_rate=100.0,
        lead_names=("a", "b", "c"),
        record_id="const",
    )
    for seed in range(25):
        smoothed = gaussian_smooth(constant, 80.0, RandomStream(seed))
        np.testing.assert_allclose(smoothed.leads, constant.leads, rtol=1e-12, atol=0.0)
        warped = time_warp(constant, 20.0, ForcedCut(seed))
        np.testing.assert_allclose(warped.leads, constant.leads, rtol=1e-12, atol=0.0)

    # gamma is the noise standard deviation; check the moments at scale
    silent = MultiLeadRecord(
        leads=np.zeros((8, 125_000)),
        sample_rate=1.0,
        lead_names=tuple(f"n{i}" for i in range(8)),
        record_id="noise",
    )
    noisy = gaussian_noise(silent, 1.0, RandomStream(42))
    sample = noisy.leads - silent.leads
    assert sample.size == 1_000_000
    assert 0.995 <= float(sample.std()) <= 1.005
    assert abs(float(sample.mean())) < 0.005


# ---------------------------------------------------------------------------
# pipeline ordering is observable and logged


@criterion("graph stage runs first and swapping the order changes the output")
def test_graph_stage_ordering_observable():
    rng = np.random.default_rng(505)
    params = GraphAugParams(prob=1.0, alpha=0.9)
    gamma = 60.0
    policy = AugmentPolicy(graph=params, standard_ops=("mask",), n_ops=1, gamma=gamma, seed=0)
    record = random_record(rng, n_leads=3, n_samples=40, record_id="order")
    graph = random_graph(rng, record.lead_names)

    differing = 0
    for seed in range(50):
        plan = []
        out = apply_policy(record, graph, policy, RandomStream(seed), plan_out=plan)
        assert plan[0] == GRAPH_OP_NAME
        assert plan == [GRAPH_OP_NAME, "mask"]

        # the executed pipeline is exactly the graph-first composition;
        # op substreams are keyed by (name, plan position)
        graph_first = graph_augment(record, graph, params, RandomStream(seed).fork("graph", 0))
        graph_first = zero_mask(graph_first, gamma, RandomStream(seed).fork("mask", 1))
        assert np.array_equal(out.leads, graph_first.leads)

        # running mask at position 0 and the graph stage at position 1
        # is a different computation, so order leaks into the output
        mask_first = zero_mask(record, gamma, RandomStream(seed).fork("mask", 0))
        mask_first = graph_augment(mask_first, graph, params, RandomStream(seed).fork("graph", 1))
        if not np.array_equal(graph_first.leads, mask_first.leads):
            differing += 1
    assert differing >= 45

    # with the full operator pool the graph stage still leads the plan
    full = AugmentPolicy(graph=params, n_ops=4, gamma=25.0, seed=0)
    for seed in range(20):
        plan = []
        apply_policy(record, graph, full, RandomStream(seed), plan_out=plan)
        assert plan[0] == GRAPH_OP_NAME
        assert sorted(plan[1:]) == sorted(STANDARD_OPS)


# ---------------------------------------------------------------------------
# determinism of operators and every CLI subcommand


@criterion("operators and all CLI subcommands repeat byte-identically; shards agree")
def test_cli_and_operator_determinism():
    rng = np.random.default_rng(606)
    record = random_record(rng, n_leads=4, n_samples=80, record_id="det")
    graph = random_graph(rng, record.lead_names)
    for seed in range(5):
        for name, op in STANDARD_OPS.items():
            a = op(record, 35.0, RandomStream(seed))
            b = op(record, 35.0, RandomStream(seed))
            assert np.array_equal(a.leads, b.leads), name
        a = graph_augment(record, graph, GraphAugParams(prob=0.7, alpha=0.8), RandomStream(seed))
        b = graph_augment(record, graph, GraphAugParams(prob=0.7, alpha=0.8), RandomStream(seed))
        assert np.array_equal(a.leads, b.leads)

    with tempfile.TemporaryDirectory(prefix="leadaug-acc-") as tmp:
        root = Path(tmp)
        (root / "a").mkdir()
        (root / "b").mkdir()

        synth_args = (
            "synth", "--n-records", 16, "--n-leads", 3, "--n-samples", 60,
            "--n-classes", 2, "--noise-level", 0.6, "--split", "10,6",
            "--seed", 11, "--quiet",
        )
        run_cli(*synth_args, "--output", root / "a" / "data")
        run_cli(*synth_args, "--output", root / "b" / "data")
        assert same_dir(root / "a", root / "b")

        train = root / "a" / "data_train.mwv"
        val = root / "a" / "data_val.mwv"
        graphs = [root / f"graph{i}.json" for i in range(3)]
        run_cli("estimate-graph", train, "--output", graphs[0], "--quiet")
        run_cli("estimate-graph", train, "--output", graphs[1], "--quiet")
        run_cli("estimate-graph", train, "--output", graphs[2], "--shards", 4, "--quiet")
        assert same_file(graphs[0], graphs[1])
        assert same_file(graphs[0], graphs[2])

        mix = root / "mix.json"
        plain = root / "plain.json"
        AugmentPolicy(
            graph=GraphAugParams(prob=0.8, alpha=0.6), n_ops=1, gamma=20.0, seed=5
        ).save_json(mix)
        AugmentPolicy().save_json(plain)

        aug = [root / f"aug{i}.mwv" for i in range(3)]
        aug_args = ("augment", train, "--policy", mix, "--graph", graphs[0],
                    "--seed", 7, "--quiet")
        run_cli(*aug_args, "--output", aug[0])
        run_cli(*aug_args, "--output", aug[1])
        run_cli(*aug_args, "--output", aug[2], "--shards", 4)
        assert same_file(aug[0], aug[1])
        assert same_file(aug[0], aug[2])
        assert same_file(labels_path(aug[0]), labels_path(aug[1]))

        search_args = (
            "policy-search", "--train", train, "--val", val, "--downsample", 6,
            "--train-steps", 8, "--trials", 1, "--seed", 4, "--quiet",
        )
        run_cli(*search_args, "--output", root / "report1.json",
                "--best-policy", root / "best1.json")
        run_cli(*search_args, "--output", root / "report2.json",
                "--best-policy", root / "best2.json")
        assert same_file(root / "report1.json", root / "report2.json")
        assert same_file(root / "best1.json", root / "best2.json")

        attack_args = (
            "attack-eval", "--train", train, "--test", val,
            "--policy", plain, "--policy", mix, "--graph", graphs[0],
            "--epsilons", "0,0.05", "--repeats", 1, "--attack-steps", 3,
            "--downsample", 6, "--train-steps", 8, "--seed", 2, "--quiet",
        )
        run_cli(*attack_args, "--output-dir", root / "att1")
        run_cli(*attack_args, "--output-dir", root / "att2")
        assert same_dir(root / "att1", root / "att2")

        outputs = []
        for _ in range(2):
            buffer = io.StringIO()
            with contextlib.redirect_stdout(buffer):
                run_cli("score-linear", train, val, "--downsample", 6,
                        "--train-steps", 8, "--quiet")
            outputs.append(buffer.getvalue())
        assert outputs[0] == outputs[1]
        float(outputs[0])  # a single parseable score


# ---------------------------------------------------------------------------
# analytic gradients against central finite differences


def rel_err(a, b, floor=1e-8):
    return abs(a - b) / max(abs(a), abs(b), floor)


@criterion("analytic gradients match central finite differences")
def test_gradients_match_finite_differences():
    h = 1e-5
    checks = 0
    for model_seed in range(4):
        rng = np.random.default_rng(700 + model_seed)
        n, n_leads = 14, 2
        n_samples = 30 if model_seed % 2 == 0 else 33  # odd ones have a pooling tail
        n_classes = 2 + model_seed % 2
        X = rng.normal(size=(n, n_leads, n_samples))
        y = np.arange(n) % n_classes
        X += np.linspace(-1.0, 1.0, n_classes)[y][:, None, None]
        model = WaveformLinearClassifier(downsample=5, n_steps=5).fit(X, y)

        grad_w, grad_b = model.parameter_gradient(X, y)
        grad_x = model.input_gradient(X, y)

        for _ in range(13):
            i = int(rng.integers(0, grad_w.shape[0]))
            j = int(rng.integers(0, grad_w.shape[1]))
            saved = model.weights_
            model.weights_ = saved.copy()
            model.weights_[i, j] = saved[i, j] + h
            up = model.loss(X, y)
            model.weights_[i, j] = saved[i, j] - h
            down = model.loss(X, y)
            model.weights_ = saved
            assert rel_err(grad_w[i, j], (up - down) / (2 * h)) < 1e-5
            checks += 1

        for j in range(grad_b.shape[0]):
            saved = model.bias_
            model.bias_ = saved.copy()
            model.bias_[j] = saved[j] + h
            up = model.loss(X, y)
            model.bias_[j] = saved[j] - h
            down = model.loss(X, y)
            model.bias_ = saved
            assert rel_err(grad_b[j], (up - down) / (2 * h)) < 1e-5
            checks += 1

        for _ in range(10):
            b = int(rng.integers(0, n))
            l = int(rng.integers(0, n_leads))
            t = int(rng.integers(0, n_samples))  # tail samples have exact zero gradient
            bumped = X.copy()
            bumped[b, l, t] += h
            up = model.loss(bumped, y)
            bumped[b, l, t] -= 2 * h
            down = model.loss(bumped, y)
            assert rel_err(grad_x[b, l, t], (up - down) / (2 * h)) < 1e-5
            checks += 1
    assert checks >= 100


# ---------------------------------------------------------------------------
# PGD: constraint exactness, FGSM reduction, closed-form optimum


def toy_linear_model(w, b):
    """Hand-built binary model on (leads=2, samples=1) inputs: logits = x @ w + b."""
    model = WaveformLinearClassifier(downsample=1, standardize=False)
    model.classes_ = np.array([0, 1])
    model.n_leads_ = 2
    model.n_samples_ = 1
    model.lead_means_ = np.zeros(2)
    model.lead_scales_ = np.ones(2)
    model.weights_ = np.asarray(w, dtype=np.float64)
    model.bias_ = np.asarray(b, dtype=np.float64)
    return model


@criterion("PGD: exact ball constraint, FGSM reduction, closed-form optimum")
def test_pgd_correctness():
    rng = np.random.default_rng(808)
    X = rng.normal(size=(12, 2, 30))
    y = np.arange(12) % 2
    X += np.where(y == 0, -0.7, 0.7)[:, None, None]
    model = WaveformLinearClassifier(downsample=5, n_steps=40).fit(X, y)

    # every iterate, including the random start, sits inside the ball
    eps = 0.3 / 7.0
    config = AttackConfig(epsilon=eps, step_size=2.0 * eps, n_steps=12, random_start=True)
    for seed in range(10):
        iterates = []
        pgd_attack_batch(model, X, y, config, RandomStream(seed),
                         iterate_callback=lambda step, x: iterates.append(x))
        assert len(iterates) == 13
        for x in iterates:
            assert float(np.abs(x - X).max()) <= eps

    # one step with no random start reduces to FGSM, bit for bit on a
    # dyadic grid where every intermediate value is exactly representable
    Xd = np.round(rng.uniform(-1.0, 1.0, size=(8, 2, 30)) * 1024.0) / 1024.0
    grad = model.input_gradient(Xd, y[:8])
    for step, ball in ((0.125, 0.25), (0.5, 0.25)):
        one = AttackConfig(epsilon=ball, step_size=step, n_steps=1, random_start=False)
        out = pgd_attack_batch(model, Xd, y[:8], one)
        fgsm = Xd + np.clip(min(step, ball) * np.sign(grad), -ball, ball)
        assert np.array_equal(out, fgsm)

    # on a hand-built linear model the known corner optimum is attained
    w = np.array([[0.8, -0.4], [-0.3, 0.9]])
    toy = toy_linear_model(w, np.array([0.1, -0.2]))
    x0 = np.array([[[0.3], [-0.7]]])
    ball = 0.5
    full = AttackConfig(epsilon=ball, step_size=ball / 10.0, n_steps=40, random_start=True)
    for label in (0, 1):
        other = 1 - label
        corner = x0 + ball * np.sign(w[:, other] - w[:, label]).reshape(1, 2, 1)
        adv = pgd_attack_batch(toy, x0, np.array([label]), full, RandomStream(3))
        assert float(np.abs(adv - corner).max()) < 1e-9


# ---------------------------------------------------------------------------
# policy search over the default grid


@criterion("policy search: completes, deterministic, tie-breaking is total")
def test_policy_search_deterministic_and_total():
    records, labels = synth_dataset(
        SynthSpec(n_records=36, n_leads=4, n_samples=80, n_classes=2,
                  noise_level=0.8, seed=6)
    )
    train, train_y = records[:24], labels[:24]
    val, val_y = records[24:], labels[24:]
    graph, _ = estimate_graph(train)

    grid = SearchGrid()
    assert len(grid.cells()) == 6

    scorer = LinearScorer(downsample=8, n_steps=25)
    first = policy_search(grid, scorer, train, train_y, val, val_y, graph=graph, seed=9)
    second = policy_search(grid, scorer, train, train_y, val, val_y, graph=graph, seed=9)
    assert len(first.cells) == 6
    assert all(len(cell.scores) == grid.trials for cell in first.cells)
    assert first.to_dict() == second.to_dict()
    assert first.best.cell.index == second.best.cell.index

    # constant scores exercise the tie-break: the ranking key is total,
    # so the winner is still unique and deterministic
    flat = policy_search(grid, lambda *args: 0.5, train, train_y, val, val_y,
                         graph=graph, seed=9)
    assert all(cell.mean == 0.5 for cell in flat.cells)
    assert flat.best.cell.index == 0
    keys = [(-cell.mean, cell.cell.gamma, cell.cell.n_ops, cell.cell.index)
            for cell in flat.cells]
    assert len(set(keys)) == len(keys)


# ---------------------------------------------------------------------------
# graph augmentation beats the no-graph baseline under attack


@criterion("tuned graph augmentation dominates the baseline robustness curve")
def test_graph_augmentation_beats_baseline_under_attack():
    start = time.perf_counter()
    records, labels = synth_dataset(
        SynthSpec(n_records=2000, n_leads=12, n_samples=500, n_classes=3,
                  noise_level=4.0, amplitude_jitter=0.2, seed=1)
    )
    assert len(records) == 2000
    assert records[0].n_leads == 12
    # scarce labeled training data, plenty of held-out evaluation data
    train, train_y = records[:100], labels[:100]
    val, val_y = records[100:400], labels[100:400]
    test, test_y = records[1000:], labels[1000:]
    graph, _ = estimate_graph(train)

    # tune (p, alpha) for the graph stage on the validation split
    grid = SearchGrid(
        gammas=(0.0,),
        settings=(
            (0, GraphAugParams(prob=1.0, alpha=0.8)),
            (0, GraphAugParams(prob=0.5, alpha=0.8)),
            (0, GraphAugParams(prob=1.0, alpha=0.4)),
            (0, GraphAugParams(prob=0.5, alpha=0.4)),
        ),
        trials=2,
    )
    report = policy_search(grid, LinearScorer(), train, train_y, val, val_y,
                           graph=graph, seed=0, repeats=4)
    tuned = report.best_policy(seed=0)
    assert tuned.graph is not None

    config = HarnessConfig(epsilons=(0.0, 0.3, 1.0, 1.2, 1.4), repeats=4,
                           downsample=10, train_steps=200, learning_rate=1.0,
                           attack_steps=25, random_start=True)
    baseline = AugmentPolicy()
    wins = 0
    for seed in range(5):
        curves = compare_policies(
            [("baseline", baseline), ("graph", tuned)],
            train, train_y, test, test_y, graph, config, seed=seed,
        )
        by_name = {curve.name: curve for curve in curves}
        if dominates(by_name["graph"], by_name["baseline"]):
            wins += 1
    elapsed = time.perf_counter() - start
    assert wins >= 4
    assert elapsed < 600.0
