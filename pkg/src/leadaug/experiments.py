"""End-to-end robustness experiments: augment, train, attack, score.

This is the plumbing behind `attack-eval` and the qualitative
reproduction tests: train one classifier per augmentation policy on the
same base training set, then measure each model's macro-F1 on the same
clean test set under ℓ∞ attacks of growing radius.

Seed discipline: one experiment seed drives everything through labeled
substreams (augmentation and attack starts); classifier training is
deterministic on its own (zero initialization, full-batch descent), so
a (data, policies, seed) triple pins every number in the result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classifier import WaveformLinearClassifier
from .graph import LeadGraph
from .policy import AugmentPolicy, augment_training_set
from .randomness import RandomStream
from .records import MultiLeadRecord


@dataclass(frozen=True)
class HarnessConfig:
    """Shared knobs for one robustness experiment."""

    epsilons: tuple[float, ...] = (0.0, 0.05, 0.1, 0.15, 0.2)
    repeats: int = 2
    downsample: int = 10
    train_steps: int = 200
    learning_rate: float = 1.0
    attack_steps: int = 40
    random_start: bool = True

    def __post_init__(self):
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")


@dataclass(frozen=True)
class PolicyCurve:
    """Robustness curve of one trained model."""

    name: str
    policy: AugmentPolicy
    curve: tuple[tuple[float, float], ...]

    def scores(self) -> list[float]:
        return [score for _, score in self.curve]


def train_policy_model(
    train_records: Sequence[MultiLeadRecord],
    train_labels,
    policy: AugmentPolicy,
    graph: LeadGraph | None,
    config: HarnessConfig,
    seed: int,
) -> WaveformLinearClassifier:
    """Fit the linear classifier on an augmented training set.

    The training set is ``config.repeats`` augmented copies of the
    input records (labels tiled to match), augmented under ``policy``
    with a substream of ``seed``.
    """
    train_labels = np.asarray(train_labels)
    augment_seed = int(RandomStream(seed).fork("augment").integers(0, 2**62))
    augmented = augment_training_set(train_records, graph, policy,
                                     repeats=config.repeats, seed=augment_seed)
    labels = np.tile(train_labels, config.repeats)
    model = WaveformLinearClassifier(
        downsample=config.downsample, n_steps=config.train_steps,
        learning_rate=config.learning_rate,
    )
    return model.fit(augmented, labels)


def policy_robustness(
    name: str,
    train_records: Sequence[MultiLeadRecord],
    train_labels,
    test_records: Sequence[MultiLeadRecord],
    test_labels,
    policy: AugmentPolicy,
    graph: LeadGraph | None,
    config: HarnessConfig,
    seed: int,
) -> PolicyCurve:
    """Train under one policy and measure its robustness curve."""
    from .attack import robustness_curve

    model = train_policy_model(train_records, train_labels, policy, graph,
                               config, seed)
    curve = robustness_curve(
        model, test_records, np.asarray(test_labels), config.epsilons,
        n_steps=config.attack_steps, random_start=config.random_start,
        rng=RandomStream(seed).fork("attack"),
    )
    return PolicyCurve(name=name, policy=policy, curve=tuple(curve))


def compare_policies(
    policies: Sequence[tuple[str, AugmentPolicy]],
    train_records: Sequence[MultiLeadRecord],
    train_labels,
    test_records: Sequence[MultiLeadRecord],
    test_labels,
    graph: LeadGraph | None,
    config: HarnessConfig,
    seed: int = 0,
) -> list[PolicyCurve]:
    """Robustness curves for several policies on identical data splits.

    Every policy sees the same base training records and the same
    attack substream, so curve differences come from the policies
    alone.
    """
    names = [name for name, _ in policies]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate policy names in {names}")
    return [
        policy_robustness(name, train_records, train_labels, test_records,
                          test_labels, policy, graph, config, seed)
        for name, policy in policies
    ]


def dominates(candidate: PolicyCurve, baseline: PolicyCurve,
              *, from_epsilon: float = 0.0) -> bool:
    """True when the candidate scores >= the baseline at every radius.

    ``from_epsilon`` restricts the comparison to radii at or above the
    threshold (use a positive value to ignore the clean point).
    """
    if [e for e, _ in candidate.curve] != [e for e, _ in baseline.curve]:
        raise ValueError("curves were evaluated on different epsilon grids")
    return all(
        cand >= base
        for (eps, cand), (_, base) in zip(candidate.curve, baseline.curve)
        if eps >= from_epsilon
    )
