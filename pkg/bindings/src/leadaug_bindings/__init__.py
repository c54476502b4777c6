"""In-process bindings for hosting the augmentation toolkit in training loops.

The core package deals in records and container files; a training loop
deals in arrays. These bindings translate between the two and nothing
more. No algorithm logic lives here: every number is produced by
``leadaug`` itself, so results match the command-line pipeline exactly
(the container file format stores 32-bit samples, so compare file
outputs after that rounding).

All functions are pure and reentrant. Distinct :class:`BoundBatch`
handles are safe to use from concurrent workers. A single handle must
not be shared between threads while in use, because a float64 host
array is bound as a view of the host's own buffer.
"""

from __future__ import annotations

import numpy as np

from leadaug import (
    AugmentPolicy,
    GraphAugParams,
    LeadGraph,
    MultiLeadRecord,
    augment_records,
    estimate_graph,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentPolicy",
    "BoundBatch",
    "GraphAugParams",
    "LeadGraph",
    "augment_batch",
    "estimate_graph_from_arrays",
    "load_graph_json",
    "load_policy_json",
    "save_graph_json",
    "save_policy_json",
]


def _names_for(n_leads: int, lead_names, *, field: str) -> tuple[str, ...]:
    if lead_names is None:
        return tuple(f"L{i:02d}" for i in range(n_leads))
    names = tuple(str(n) for n in lead_names)
    if len(names) != n_leads:
        raise ValueError(f"{field}: {len(names)} names for {n_leads} leads")
    return names


class BoundBatch:
    """A host array staged for augmentation.

    Wraps a (batch, leads, samples) array together with its lead names
    and optional default policy and seed. A C-contiguous float64 input
    is bound as a read-only view of the host buffer, zero copy; any
    other dtype or layout is converted exactly once, here. The host
    must not write to a zero-copy-bound buffer while the batch is in
    use.

    ``sample_rate`` is record metadata only; no augmentation operator
    reads it.
    """

    def __init__(self, array, lead_names=None, *, policy: AugmentPolicy | None = None,
                 seed: int | None = None, sample_rate: float = 250.0):
        arr = np.asarray(array)
        if arr.ndim != 3:
            raise ValueError(
                f"array: expected a (batch, leads, samples) array, got shape {arr.shape}"
            )
        if arr.dtype != np.float64 or not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr, dtype=np.float64)
        if not np.isfinite(arr).all():
            raise ValueError("array: batch contains non-finite samples")
        view = arr.view()
        view.flags.writeable = False
        self.array = view
        self.lead_names = _names_for(arr.shape[1], lead_names, field="lead_names")
        self.policy = policy
        self.seed = seed
        self.sample_rate = float(sample_rate)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.array.shape

    def records(self) -> list[MultiLeadRecord]:
        """The batch as core record values; rows keep sharing the buffer."""
        return [
            MultiLeadRecord(self.array[i], self.sample_rate, self.lead_names,
                            record_id=f"batch/{i:05d}")
            for i in range(self.array.shape[0])
        ]


def augment_batch(batch: BoundBatch, graph: LeadGraph | None = None,
                  policy: AugmentPolicy | None = None,
                  seed: int | None = None) -> np.ndarray:
    """Augment every record of a bound batch into a fresh float64 array.

    ``policy`` and ``seed`` default to the handles stored on the batch,
    with ``seed`` falling back further to the policy's own seed. Record
    i draws from substream ("record", i) of the base seed, the same
    derivation the ``augment`` subcommand uses, so a batch loaded from
    a container reproduces that subcommand's output number for number.
    The result never aliases the input.
    """
    if not isinstance(batch, BoundBatch):
        raise TypeError(f"batch: expected BoundBatch, got {type(batch).__name__}")
    if policy is None:
        policy = batch.policy
    if policy is None:
        raise ValueError("policy: none supplied and the batch carries no default")
    if seed is None:
        seed = batch.seed
    augmented = augment_records(batch.records(), graph, policy, seed=seed)
    return np.stack([record.leads for record in augmented])


def estimate_graph_from_arrays(arrays, lead_names=None, *,
                               sample_rate: float = 250.0) -> LeadGraph:
    """Lead graph of an iterable of (leads, samples) arrays.

    All arrays must share one lead count; sample counts may differ,
    since each array's correlations are length-normalized before the
    average. ``lead_names`` defaults to positional labels. The result
    is identical to estimating from the same data stored in a
    container. An empty iterable is an error.
    """
    records = []
    names: tuple[str, ...] | None = None
    for index, array in enumerate(arrays):
        arr = np.asarray(array, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(
                f"arrays[{index}]: expected a (leads, samples) array, got shape {arr.shape}"
            )
        if names is None:
            names = _names_for(arr.shape[0], lead_names, field="lead_names")
        if arr.shape[0] != len(names):
            raise ValueError(
                f"arrays[{index}]: {arr.shape[0]} leads where earlier arrays had {len(names)}"
            )
        records.append(
            MultiLeadRecord(arr, sample_rate, names, record_id=f"array/{index:05d}")
        )
    graph, _ = estimate_graph(records)
    return graph


def load_graph_json(path) -> LeadGraph:
    """Read a lead graph from its JSON file form."""
    return LeadGraph.load_json(path)


def save_graph_json(graph: LeadGraph, path) -> None:
    """Write a lead graph in the JSON form the CLI reads and writes."""
    graph.save_json(path)


def load_policy_json(path) -> AugmentPolicy:
    """Read an augmentation policy from its JSON file form."""
    return AugmentPolicy.load_json(path)


def save_policy_json(policy: AugmentPolicy, path) -> None:
    """Write a policy in the JSON form the CLI reads and writes."""
    policy.save_json(path)
