"""Augmentation policies: declarative recipes over the operator set.

A policy names an optional graph stage plus a pool of standard
operators, of which ``n_ops`` are drawn without replacement per record
at a shared intensity. The graph stage, when present, always runs
first; standard operators follow in their sampled order.

Policies serialize to a small JSON object so they can travel between
the CLI, search reports, and other runtimes:

    {"graph": {"p": 0.5, "alpha": 0.5} | null,
     "standard_ops": ["noise", "time_warp", "smooth", "mask"],
     "n_ops": 2, "gamma": 10.0, "seed": 0}

Per-record randomness is forked from the base stream by record index,
so each output depends only on (seed, index, record content). Parallel
mappers can partition the work any way they like without changing the
results, and appending records to a batch never disturbs the outputs
of earlier indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .graph import LeadGraph, LeadMismatchError
from .ops import STANDARD_OPS, GraphAugParams, graph_augment
from .randomness import RandomStream
from .records import MultiLeadRecord

GRAPH_OP_NAME = "graph"


@dataclass(frozen=True)
class AugmentPolicy:
    """Full augmentation recipe.

    graph: parameters for the graph stage, or None to skip it.
    standard_ops: pool of standard operator names to sample from.
    n_ops: how many standard operators to apply per record.
    gamma: shared intensity for every standard operator, 0..100.
    seed: default base seed when the caller does not supply one.
    """

    graph: GraphAugParams | None = None
    standard_ops: tuple[str, ...] = field(default=tuple(STANDARD_OPS))
    n_ops: int = 0
    gamma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "standard_ops", tuple(self.standard_ops))
        unknown = [name for name in self.standard_ops if name not in STANDARD_OPS]
        if unknown:
            raise ValueError(
                f"unknown operator names {unknown}; known: {sorted(STANDARD_OPS)}"
            )
        if len(set(self.standard_ops)) != len(self.standard_ops):
            raise ValueError(f"duplicate operator names in {list(self.standard_ops)}")
        if not isinstance(self.n_ops, int) or isinstance(self.n_ops, bool):
            raise ValueError(f"n_ops must be an int, got {self.n_ops!r}")
        if not 0 <= self.n_ops <= len(self.standard_ops):
            raise ValueError(
                f"n_ops must be in [0, {len(self.standard_ops)}], got {self.n_ops}"
            )
        if not 0.0 <= float(self.gamma) <= 100.0:
            raise ValueError(f"gamma must be in [0, 100], got {self.gamma}")
        object.__setattr__(self, "gamma", float(self.gamma))
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ValueError(f"seed must be an int, got {self.seed!r}")

    def to_dict(self) -> dict:
        graph = None
        if self.graph is not None:
            graph = {"p": self.graph.prob, "alpha": self.graph.alpha}
        return {
            "graph": graph,
            "standard_ops": list(self.standard_ops),
            "n_ops": self.n_ops,
            "gamma": self.gamma,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentPolicy":
        if not isinstance(data, dict):
            raise ValueError(f"policy must be a JSON object, got {type(data).__name__}")
        known = {"graph", "standard_ops", "n_ops", "gamma", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown policy fields {sorted(unknown)}")
        graph = None
        raw = data.get("graph")
        if raw is not None:
            if not isinstance(raw, dict) or set(raw) != {"p", "alpha"}:
                raise ValueError(f'policy "graph" must be {{"p", "alpha"}} or null, got {raw!r}')
            graph = GraphAugParams(prob=float(raw["p"]), alpha=float(raw["alpha"]))
        kwargs = {}
        if "standard_ops" in data:
            kwargs["standard_ops"] = tuple(data["standard_ops"])
        if "n_ops" in data:
            kwargs["n_ops"] = data["n_ops"]
        if "gamma" in data:
            kwargs["gamma"] = data["gamma"]
        if "seed" in data:
            kwargs["seed"] = data["seed"]
        return cls(graph=graph, **kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "AugmentPolicy":
        return cls.from_dict(json.loads(text))

    def save_json(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load_json(cls, path) -> "AugmentPolicy":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def sample_plan(policy: AugmentPolicy, rng) -> list[str]:
    """Draw the per-record operator sequence.

    The graph stage, when configured, is always first; the remaining
    slots are a without-replacement sample of the standard pool. The
    permutation is drawn even when n_ops is 0 so plan length does not
    change which draws later forks see.
    """
    plan = []
    if policy.graph is not None:
        plan.append(GRAPH_OP_NAME)
    order = rng.permutation(len(policy.standard_ops))
    plan.extend(policy.standard_ops[i] for i in order[: policy.n_ops])
    return plan


def apply_policy(
    record: MultiLeadRecord,
    graph: LeadGraph | None,
    policy: AugmentPolicy,
    rng,
    *,
    plan_out: list[str] | None = None,
) -> MultiLeadRecord:
    """Augment one record according to the policy.

    ``rng`` is the record-level stream; the plan and each operator fork
    their own substreams from it, keyed by operator name and position,
    so inserting or removing one operator cannot shift the draws of the
    others. ``plan_out``, when given, receives the executed operator
    names in order.
    """
    if policy.graph is not None and graph is None:
        raise ValueError("policy requests the graph stage but no graph was provided")
    plan = sample_plan(policy, rng.fork("plan"))
    if plan_out is not None:
        plan_out.extend(plan)
    for position, name in enumerate(plan):
        op_rng = rng.fork(name, position)
        if name == GRAPH_OP_NAME:
            record = graph_augment(record, graph, policy.graph, op_rng)
        else:
            record = STANDARD_OPS[name](record, policy.gamma, op_rng)
    return record


def _graph_for_order(graph: LeadGraph | None, names, cache: dict):
    if graph is None:
        return None
    key = tuple(names)
    hit = cache.get(key)
    if hit is None:
        if key == graph.lead_names:
            hit = graph
        elif set(key) == set(graph.lead_names):
            hit = graph.reordered(key)
        else:
            raise LeadMismatchError(
                f"graph leads {list(graph.lead_names)} do not cover record leads {list(key)}"
            )
        cache[key] = hit
    return hit


def augment_records(
    records: Sequence[MultiLeadRecord],
    graph: LeadGraph | None,
    policy: AugmentPolicy,
    *,
    seed: int | None = None,
    mapper=map,
) -> list[MultiLeadRecord]:
    """Augment a batch, one independent substream per record index.

    ``seed`` overrides ``policy.seed`` when given. Record i always draws
    from fork("record", i) of the base stream, so outputs depend only on
    (seed, index, record content), not on batch size. The graph is
    realigned to each record's lead order when the orders differ.

    ``mapper`` may be an order-preserving parallel map; records are
    independent, so the output is identical for any mapper.
    """
    if seed is None:
        seed = policy.seed
    base = RandomStream(seed)
    records = list(records)
    cache: dict = {}
    aligned = [_graph_for_order(graph, r.lead_names, cache) for r in records]

    def one(item):
        i, record = item
        return apply_policy(record, aligned[i], policy, base.fork("record", i))

    return list(mapper(one, enumerate(records)))


def augment_training_set(
    records: Sequence[MultiLeadRecord],
    graph: LeadGraph | None,
    policy: AugmentPolicy,
    *,
    repeats: int = 1,
    seed: int | None = None,
) -> list[MultiLeadRecord]:
    """Concatenate ``repeats`` independently augmented copies of a batch.

    Pass r of record i draws from fork("pass", r, "record", i). Labels
    are the caller's to tile (output order is pass-major). repeats=0 is
    allowed and returns an empty list.
    """
    if repeats < 0:
        raise ValueError(f"repeats must be >= 0, got {repeats}")
    if seed is None:
        seed = policy.seed
    base = RandomStream(seed)
    cache: dict = {}
    out = []
    for r in range(repeats):
        for i, record in enumerate(records):
            aligned = _graph_for_order(graph, record.lead_names, cache)
            out.append(apply_policy(record, aligned, policy, base.fork("pass", r, "record", i)))
    return out
