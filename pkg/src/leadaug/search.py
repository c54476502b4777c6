"""Grid search over augmentation parameter combinations.

Each grid cell is one (gamma, n_ops, graph-params) combination. For
every cell, the search augments the training set under that cell's
policy and hands the result, together with the untouched validation
set, to a scorer; the cell with the best mean score over ``trials``
independently seeded runs wins. Validation data is never augmented,
and the scorer receives the very same record objects for every cell,
which makes the no-leakage guarantee directly testable.

The scorer is a plain callable:

    scorer(train_records, train_labels, val_records, val_labels, seed)
        -> float

The in-repo scorer trains the linear classifier and returns validation
macro-F1. Any external trainer can be plugged in through the
subprocess protocol: the command is invoked with two container paths
(augmented train, clean validation; labels in sibling .labels.csv
files) and must print one float on stdout.
"""

from __future__ import annotations

import json
import subprocess
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .classifier import WaveformLinearClassifier
from .container import labels_path, save_container, save_labels
from .graph import LeadGraph
from .metrics import macro_f1
from .ops import STANDARD_OPS, GraphAugParams
from .policy import AugmentPolicy, augment_training_set
from .randomness import RandomStream
from .records import MultiLeadRecord

Scorer = Callable[..., float]

DEFAULT_GAMMAS = (10.0, 30.0)
DEFAULT_GRAPH_SETTINGS: tuple[tuple[int, GraphAugParams | None], ...] = (
    (2, None),
    (2, GraphAugParams(prob=0.5, alpha=0.5)),
    (2, GraphAugParams(prob=1.0, alpha=0.3)),
)


@dataclass(frozen=True)
class SearchCell:
    """One parameter combination; ``index`` is its position in the grid."""

    index: int
    gamma: float
    n_ops: int
    graph: GraphAugParams | None

    def policy(self, standard_ops: tuple[str, ...]) -> AugmentPolicy:
        return AugmentPolicy(graph=self.graph, standard_ops=standard_ops,
                             n_ops=self.n_ops, gamma=self.gamma)

    def describe(self) -> str:
        if self.graph is None:
            graph = "no graph"
        else:
            graph = f"p={self.graph.prob} alpha={self.graph.alpha}"
        return f"gamma={self.gamma} n_ops={self.n_ops} {graph}"


@dataclass(frozen=True)
class SearchGrid:
    """Cartesian grid: gammas (outer) x (n_ops, graph) settings (inner).

    The default is the documented 6-cell grid: two intensities crossed
    with three settings (standard ops only, moderate graph mixing, and
    aggressive graph mixing, all at two ops per record).
    """

    gammas: tuple[float, ...] = DEFAULT_GAMMAS
    settings: tuple[tuple[int, GraphAugParams | None], ...] = DEFAULT_GRAPH_SETTINGS
    standard_ops: tuple[str, ...] = field(default=tuple(STANDARD_OPS))
    trials: int = 3

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "settings", tuple(
            (int(n), g) for n, g in self.settings
        ))
        object.__setattr__(self, "standard_ops", tuple(self.standard_ops))
        if not self.gammas or not self.settings:
            raise ValueError("grid needs at least one gamma and one setting")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        for cell in self.cells():
            cell.policy(self.standard_ops)  # validates every combination

    def cells(self) -> list[SearchCell]:
        out = []
        for gamma in self.gammas:
            for n_ops, graph in self.settings:
                out.append(SearchCell(index=len(out), gamma=gamma,
                                      n_ops=n_ops, graph=graph))
        return out

    def to_dict(self) -> dict:
        return {
            "gammas": list(self.gammas),
            "settings": [
                {"n_ops": n, "graph": None if g is None else {"p": g.prob, "alpha": g.alpha}}
                for n, g in self.settings
            ],
            "standard_ops": list(self.standard_ops),
            "trials": self.trials,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SearchGrid":
        if not isinstance(data, dict):
            raise ValueError(f"grid must be a JSON object, got {type(data).__name__}")
        unknown = set(data) - {"gammas", "settings", "standard_ops", "trials"}
        if unknown:
            raise ValueError(f"unknown grid fields {sorted(unknown)}")
        kwargs = {}
        if "gammas" in data:
            kwargs["gammas"] = tuple(data["gammas"])
        if "settings" in data:
            settings = []
            for item in data["settings"]:
                graph = item.get("graph")
                if graph is not None:
                    graph = GraphAugParams(prob=float(graph["p"]), alpha=float(graph["alpha"]))
                settings.append((int(item["n_ops"]), graph))
            kwargs["settings"] = tuple(settings)
        if "standard_ops" in data:
            kwargs["standard_ops"] = tuple(data["standard_ops"])
        if "trials" in data:
            kwargs["trials"] = int(data["trials"])
        return cls(**kwargs)

    @classmethod
    def load_json(cls, path) -> "SearchGrid":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class CellScore:
    """Scores for one cell across all trials."""

    cell: SearchCell
    scores: tuple[float, ...]
    trial_seeds: tuple[int, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.scores))

    @property
    def std(self) -> float:
        return float(np.std(self.scores))

    def to_dict(self) -> dict:
        graph = None
        if self.cell.graph is not None:
            graph = {"p": self.cell.graph.prob, "alpha": self.cell.graph.alpha}
        return {
            "cell": {"index": self.cell.index, "gamma": self.cell.gamma,
                     "n_ops": self.cell.n_ops, "graph": graph},
            "scores": list(self.scores),
            "trial_seeds": list(self.trial_seeds),
            "mean": self.mean,
            "std": self.std,
        }


@dataclass(frozen=True)
class ScoreReport:
    """Full search outcome; ``best`` maximizes the mean score.

    Ties break toward lower gamma, then fewer ops, then lower cell
    index, so the winner is unique for any score profile.
    """

    cells: tuple[CellScore, ...]
    best: CellScore
    seed: int
    standard_ops: tuple[str, ...]

    def best_policy(self, seed: int | None = None) -> AugmentPolicy:
        policy = self.best.cell.policy(self.standard_ops)
        if seed is not None:
            policy = replace(policy, seed=seed)
        return policy

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "standard_ops": list(self.standard_ops),
            "cells": [c.to_dict() for c in self.cells],
            "best_index": self.best.cell.index,
            "best_policy": self.best_policy().to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save_json(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


def _pick_best(scored: Sequence[CellScore]) -> CellScore:
    return min(scored, key=lambda s: (-s.mean, s.cell.gamma, s.cell.n_ops, s.cell.index))


def policy_search(
    grid: SearchGrid,
    scorer: Scorer,
    train_records: Sequence[MultiLeadRecord],
    train_labels,
    val_records: Sequence[MultiLeadRecord],
    val_labels,
    *,
    graph: LeadGraph | None = None,
    seed: int = 0,
    repeats: int = 1,
    progress: Callable[[SearchCell, float], None] | None = None,
) -> ScoreReport:
    """Score every cell and pick the best parameter combination.

    Cells needing the graph stage require ``graph``. Each trial augments
    the training set with a seed derived from (seed, cell index, trial
    index) and scores on untouched validation records. ``repeats``
    controls how many augmented copies of the training set each trial
    sees. Scorer exceptions are re-raised with the offending cell named.
    """
    train_records = list(train_records)
    val_records = list(val_records)
    train_labels = np.asarray(train_labels)
    val_labels = np.asarray(val_labels)
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    if not train_records or not val_records:
        raise ValueError("train and validation sets must be non-empty")
    if len(train_labels) != len(train_records):
        raise ValueError(f"{len(train_records)} train records, {len(train_labels)} labels")
    if len(val_labels) != len(val_records):
        raise ValueError(f"{len(val_records)} validation records, {len(val_labels)} labels")
    cells = grid.cells()
    if graph is None and any(c.graph is not None for c in cells):
        raise ValueError("grid contains graph cells but no graph was provided")

    base = RandomStream(seed)
    scored = []
    for cell in cells:
        policy = cell.policy(grid.standard_ops)
        scores = []
        trial_seeds = []
        for trial in range(grid.trials):
            trial_stream = base.fork("cell", cell.index, "trial", trial)
            trial_seed = int(trial_stream.integers(0, 2**62))
            trial_seeds.append(trial_seed)
            augmented = augment_training_set(train_records, graph, policy,
                                             repeats=repeats, seed=trial_seed)
            labels = np.tile(train_labels, repeats)
            try:
                score = float(scorer(augmented, labels, val_records, val_labels,
                                     trial_seed))
            except Exception as exc:
                raise RuntimeError(
                    f"scorer failed on cell {cell.index} ({cell.describe()}), "
                    f"trial {trial}: {exc}"
                ) from exc
            scores.append(score)
        result = CellScore(cell=cell, scores=tuple(scores),
                           trial_seeds=tuple(trial_seeds))
        if progress is not None:
            progress(cell, result.mean)
        scored.append(result)
    return ScoreReport(cells=tuple(scored), best=_pick_best(scored),
                       seed=seed, standard_ops=grid.standard_ops)


@dataclass(frozen=True)
class LinearScorer:
    """Train the in-repo linear classifier, return validation macro-F1."""

    downsample: int = 10
    n_steps: int = 200
    learning_rate: float = 1.0

    def __call__(self, train_records, train_labels, val_records, val_labels,
                 seed: int) -> float:
        model = WaveformLinearClassifier(
            downsample=self.downsample, n_steps=self.n_steps,
            learning_rate=self.learning_rate,
        ).fit(train_records, train_labels)
        predictions = model.predict(val_records)
        return macro_f1(val_labels, predictions, n_classes=len(model.classes_))


@dataclass(frozen=True)
class SubprocessScorer:
    """Score through an external command.

    The command is run as ``command + [train_path, val_path]`` where
    both paths are waveform containers written to a scratch directory,
    with labels in sibling .labels.csv files. It must print a single
    float on stdout; anything else is an error.
    """

    command: tuple[str, ...]
    timeout: float | None = None

    def __call__(self, train_records, train_labels, val_records, val_labels,
                 seed: int) -> float:
        with tempfile.TemporaryDirectory(prefix="leadaug-score-") as scratch:
            train_path = Path(scratch) / "train.mwv"
            val_path = Path(scratch) / "val.mwv"
            save_container(train_records, train_path)
            save_container(val_records, val_path)
            save_labels(train_records, train_labels, labels_path(train_path))
            save_labels(val_records, val_labels, labels_path(val_path))
            proc = subprocess.run(
                [*self.command, str(train_path), str(val_path)],
                capture_output=True, text=True, timeout=self.timeout,
            )
        if proc.returncode != 0:
            raise RuntimeError(
                f"scorer command exited {proc.returncode}: {proc.stderr.strip()}"
            )
        try:
            return float(proc.stdout.strip().splitlines()[-1])
        except (IndexError, ValueError):
            raise RuntimeError(
                f"scorer command printed no parseable score: {proc.stdout!r}"
            ) from None
