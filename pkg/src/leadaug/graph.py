"""Lead graph estimation from multi-lead waveform datasets.

The lead graph is a weighted complete graph on leads. Each edge weight
is the dataset-average lag-0 Pearson correlation between two lead
signals, computed per record and averaged over records; the diagonal is
fixed at zero. Per-record normalization by 1/T makes every entry a
bounded correlation in [-1, 1] and keeps the estimator independent of
record length.

Weights keep their sign: anticorrelated lead pairs (aVR against lateral
leads, for instance) carry meaningful negative coefficients into the
mixing step.

Estimation is streaming: an accumulator folds in one record at a time
and accumulators from disjoint shards merge associatively, so datasets
can be processed in parallel and reduced at the end.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .records import MultiLeadRecord, canonical_lead_order


class LeadMismatchError(ValueError):
    """Lead counts, names, or order do not line up."""


class EmptyAccumulatorError(ValueError):
    """Finalize called before any records were accumulated."""


@dataclass(frozen=True, eq=False)
class LeadGraph:
    """Weighted adjacency over leads: symmetric, zero diagonal, entries in [-1, 1]."""

    adjacency: np.ndarray
    lead_names: tuple[str, ...]
    record_count: int

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.float64)
        names = tuple(str(n) for n in self.lead_names)
        n = len(names)
        if adj.shape != (n, n):
            raise ValueError(f"adjacency shape {adj.shape} does not match {n} lead names")
        if not np.isfinite(adj).all():
            raise ValueError("adjacency contains non-finite entries")
        if np.abs(adj - adj.T).max(initial=0.0) > 1e-12:
            raise ValueError("adjacency is not symmetric within 1e-12")
        if n and np.abs(np.diag(adj)).max(initial=0.0) > 1e-12:
            raise ValueError("adjacency diagonal is not zero")
        if np.abs(adj).max(initial=0.0) > 1.0:
            raise ValueError("adjacency entries exceed [-1, 1]")
        view = adj.view()
        view.flags.writeable = False
        object.__setattr__(self, "adjacency", view)
        object.__setattr__(self, "lead_names", names)
        object.__setattr__(self, "record_count", int(self.record_count))

    @property
    def n_leads(self) -> int:
        return len(self.lead_names)

    def reordered(self, names: Sequence[str]) -> "LeadGraph":
        """Graph with both adjacency axes permuted into the given name order."""
        names = tuple(names)
        if sorted(names) != sorted(self.lead_names):
            raise LeadMismatchError(
                f"cannot reorder graph: lead sets differ ({list(names)} vs {list(self.lead_names)})"
            )
        index = {n: i for i, n in enumerate(self.lead_names)}
        perm = [index[n] for n in names]
        return LeadGraph(self.adjacency[np.ix_(perm, perm)], names, self.record_count)

    def to_dict(self) -> dict:
        return {
            "lead_names": list(self.lead_names),
            "record_count": self.record_count,
            "adjacency": [[float(v) for v in row] for row in self.adjacency],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LeadGraph":
        return cls(
            np.asarray(doc["adjacency"], dtype=np.float64),
            tuple(doc["lead_names"]),
            int(doc["record_count"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "LeadGraph":
        return cls.from_dict(json.loads(text))

    def save_json(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load_json(cls, path) -> "LeadGraph":
        return cls.from_json(Path(path).read_text())

    def save_csv(self, path) -> None:
        """Adjacency as CSV with lead-name header row and column."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lead", *self.lead_names])
            for name, row in zip(self.lead_names, self.adjacency):
                writer.writerow([name, *[repr(float(v)) for v in row]])


def _correlation_and_degenerate(record: MultiLeadRecord) -> tuple[np.ndarray, int]:
    x = record.leads
    n_samples = x.shape[1]
    centered = x - x.mean(axis=1, keepdims=True)
    std = np.sqrt((centered * centered).mean(axis=1))
    ok = std > 0.0
    z = np.where(ok[:, None], centered / np.where(ok, std, 1.0)[:, None], 0.0)
    corr = (z @ z.T) / n_samples
    corr[~ok, :] = 0.0
    corr[:, ~ok] = 0.0
    np.fill_diagonal(corr, 0.0)
    np.clip(corr, -1.0, 1.0, out=corr)
    return corr, int((~ok).sum())


def record_correlation(record: MultiLeadRecord) -> np.ndarray:
    """Pairwise Pearson correlations of one record's leads at lag zero.

    Entry (i, j) for i != j is the correlation of leads i and j; the
    diagonal is zero. Zero-variance leads contribute zero entries instead
    of NaN so a flat lead cannot poison the dataset mean.
    """
    corr, _ = _correlation_and_degenerate(record)
    return corr


def degenerate_lead_count(record: MultiLeadRecord) -> int:
    """Number of zero-variance leads in the record."""
    _, count = _correlation_and_degenerate(record)
    return count


@dataclass(frozen=True, eq=False)
class CorrelationAccumulator:
    """Mergeable partial sums for streaming lead-graph estimation.

    Value semantics: ``add`` and ``merge`` return new accumulators.
    Merging shard accumulators gives the same finalized graph as a single
    sequential pass (up to float summation order).
    """

    lead_names: tuple[str, ...]
    record_count: int
    corr_sum: np.ndarray
    degenerate_leads: int

    def __post_init__(self):
        arr = np.asarray(self.corr_sum, dtype=np.float64)
        view = arr.view()
        view.flags.writeable = False
        object.__setattr__(self, "corr_sum", view)
        object.__setattr__(self, "lead_names", tuple(self.lead_names))

    @classmethod
    def empty(cls, lead_names: Sequence[str]) -> "CorrelationAccumulator":
        n = len(lead_names)
        return cls(tuple(lead_names), 0, np.zeros((n, n)), 0)

    def add(self, record: MultiLeadRecord) -> "CorrelationAccumulator":
        """Fold one record into the running sums."""
        if tuple(record.lead_names) != self.lead_names:
            raise LeadMismatchError(
                f"record {record.record_id!r} lead order {list(record.lead_names)} "
                f"does not match accumulator {list(self.lead_names)}"
            )
        corr, degenerate = _correlation_and_degenerate(record)
        return CorrelationAccumulator(
            self.lead_names,
            self.record_count + 1,
            self.corr_sum + corr,
            self.degenerate_leads + degenerate,
        )

    def merge(self, other: "CorrelationAccumulator") -> "CorrelationAccumulator":
        """Combine partial sums from two disjoint record streams."""
        if self.lead_names != other.lead_names:
            raise LeadMismatchError(
                f"cannot merge accumulators over different lead sets "
                f"({list(self.lead_names)} vs {list(other.lead_names)})"
            )
        return CorrelationAccumulator(
            self.lead_names,
            self.record_count + other.record_count,
            self.corr_sum + other.corr_sum,
            self.degenerate_leads + other.degenerate_leads,
        )

    def finalize(self) -> LeadGraph:
        """Average the accumulated correlations into a LeadGraph.

        Symmetry is enforced by averaging with the transpose to absorb
        float drift, and entries are clipped to [-1, 1].
        """
        if self.record_count < 1:
            raise EmptyAccumulatorError("cannot finalize an empty accumulator")
        mean = self.corr_sum / self.record_count
        mean = (mean + mean.T) / 2.0
        np.fill_diagonal(mean, 0.0)
        np.clip(mean, -1.0, 1.0, out=mean)
        return LeadGraph(mean, self.lead_names, self.record_count)


def estimate_graph(
    records: Iterable[MultiLeadRecord],
    *,
    reorder: bool = True,
    mapper=map,
) -> tuple[LeadGraph, int]:
    """Estimate the lead graph over a record stream.

    With ``reorder`` enabled, all records are permuted onto a single lead
    order before accumulation: the canonical 12-lead order when the first
    record's names are all recognized, otherwise the first record's
    order. Records whose lead sets cannot be permuted to match raise
    :class:`LeadMismatchError`.

    ``mapper`` computes the per-record correlations and may be an
    order-preserving parallel map (executor.map); the fold over its
    results is always sequential in input order, so the finalized graph
    is bit-identical no matter how the map ran.

    Returns the graph and the count of degenerate (zero-variance) lead
    observations encountered.
    """
    aligned: list[MultiLeadRecord] = []
    target: tuple[str, ...] | None = None
    for record in records:
        if target is None:
            target = (
                canonical_lead_order(record.lead_names) if reorder else tuple(record.lead_names)
            )
        if tuple(record.lead_names) != target:
            if not reorder:
                raise LeadMismatchError(
                    f"record {record.record_id!r} lead order does not match first record"
                )
            try:
                record = record.reordered(target)
            except ValueError as exc:
                raise LeadMismatchError(str(exc)) from None
        aligned.append(record)
    if target is None:
        raise EmptyAccumulatorError("cannot estimate a graph from zero records")
    corr_sum = np.zeros((len(target), len(target)))
    degenerate = 0
    for corr, count in mapper(_correlation_and_degenerate, aligned):
        corr_sum = corr_sum + corr
        degenerate += count
    acc = CorrelationAccumulator(target, len(aligned), corr_sum, degenerate)
    return acc.finalize(), degenerate
