"""Core record types for multi-lead waveform data.

A record is a rectangular matrix of samples, one row per lead, together
with its sampling metadata. Records are immutable values: the sample
matrix is exposed as a read-only float64 view and every operation in
this package returns a fresh record instead of mutating its input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Index convention for the 12-lead case: limb leads first, augmented limb
# leads, then the six precordial leads. Datasets whose lead names all
# belong to this set are mapped onto this one ordering so that adjacency
# matrices stay comparable across sources.
CANONICAL_12_LEAD_ORDER = (
    "I", "II", "III", "aVR", "aVL", "aVF",
    "V1", "V2", "V3", "V4", "V5", "V6",
)

_CANONICAL_RANK = {name: i for i, name in enumerate(CANONICAL_12_LEAD_ORDER)}


def _readonly_f64(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr is values and arr.flags.writeable:
        # the caller still holds this buffer; snapshot it so later writes
        # through their reference cannot change the record
        arr = arr.copy()
    view = arr.view()
    view.flags.writeable = False
    return view


@dataclass(frozen=True, eq=False)
class MultiLeadRecord:
    """One waveform example: L leads by T samples plus metadata.

    ``leads`` is coerced to a read-only float64 matrix. Construction only
    enforces structure (a rectangular 2-D matrix); semantic invariants
    such as finiteness or unique lead names are checked by
    :func:`validate_record` so that callers can inspect bad data instead
    of losing it to an exception.
    """

    leads: np.ndarray
    sample_rate: float
    lead_names: tuple[str, ...]
    record_id: str = ""

    def __post_init__(self):
        leads = _readonly_f64(self.leads)
        if leads.ndim != 2:
            raise ValueError(f"leads must be a 2-D matrix, got ndim={leads.ndim}")
        object.__setattr__(self, "leads", leads)
        object.__setattr__(self, "lead_names", tuple(str(n) for n in self.lead_names))
        object.__setattr__(self, "sample_rate", float(self.sample_rate))
        object.__setattr__(self, "record_id", str(self.record_id))

    @property
    def n_leads(self) -> int:
        return self.leads.shape[0]

    @property
    def n_samples(self) -> int:
        return self.leads.shape[1]

    def with_leads(self, leads) -> "MultiLeadRecord":
        """New record with the same metadata and a different sample matrix."""
        return MultiLeadRecord(leads, self.sample_rate, self.lead_names, self.record_id)

    def reordered(self, names: Sequence[str]) -> "MultiLeadRecord":
        """New record with leads permuted into the given name order."""
        if sorted(names) != sorted(self.lead_names):
            raise ValueError(
                f"cannot reorder record {self.record_id!r}: lead sets differ "
                f"({list(names)} vs {list(self.lead_names)})"
            )
        index = {n: i for i, n in enumerate(self.lead_names)}
        perm = [index[n] for n in names]
        return MultiLeadRecord(self.leads[perm], self.sample_rate, tuple(names), self.record_id)


@dataclass(frozen=True, eq=False)
class LeadStats:
    """Per-lead mean and population standard deviation."""

    means: np.ndarray
    stddevs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "means", _readonly_f64(self.means))
        object.__setattr__(self, "stddevs", _readonly_f64(self.stddevs))


def validate_record(record: MultiLeadRecord) -> list[str]:
    """Check record invariants, returning a list of violations.

    An empty list means the record is valid. Violations are reported
    rather than raised so callers can decide whether to reject.
    """
    violations: list[str] = []
    n_leads, n_samples = record.leads.shape
    if n_leads < 2:
        violations.append(f"lead count {n_leads} < 2")
    if n_samples < 2:
        violations.append(f"sample count {n_samples} < 2")
    if len(record.lead_names) != n_leads:
        violations.append(
            f"lead_names length {len(record.lead_names)} != lead count {n_leads}"
        )
    seen: set[str] = set()
    for name in record.lead_names:
        if name in seen:
            violations.append(f"duplicate lead name {name!r}")
        seen.add(name)
    if not (record.sample_rate > 0) or not np.isfinite(record.sample_rate):
        violations.append(f"sample_rate {record.sample_rate} is not positive and finite")
    finite = np.isfinite(record.leads)
    if not finite.all():
        lead_idx, t_idx = np.argwhere(~finite)[0]
        count = int((~finite).sum())
        violations.append(
            f"non-finite sample at (lead {lead_idx}, t {t_idx}) ({count} total)"
        )
    return violations


def require_valid(record: MultiLeadRecord) -> MultiLeadRecord:
    """Raise ValueError if the record violates any invariant."""
    violations = validate_record(record)
    if violations:
        raise ValueError(
            f"invalid record {record.record_id!r}: " + "; ".join(violations)
        )
    return record


def lead_stats(record: MultiLeadRecord) -> LeadStats:
    """Per-lead means and population (1/T) standard deviations.

    The population convention avoids single-sample edge cases and cancels
    anyway when the statistics are used inside normalized correlations.
    """
    means = record.leads.mean(axis=1)
    centered = record.leads - means[:, None]
    stddevs = np.sqrt((centered * centered).mean(axis=1))
    return LeadStats(means, stddevs)


def canonical_lead_order(names: Iterable[str]) -> tuple[str, ...]:
    """Order lead names by the canonical convention when all are recognized.

    Unrecognized name sets are returned in their given order, so files
    with custom channel names keep their native layout.
    """
    names = tuple(names)
    if all(n in _CANONICAL_RANK for n in names):
        return tuple(sorted(names, key=_CANONICAL_RANK.__getitem__))
    return names


def records_equal(a: MultiLeadRecord, b: MultiLeadRecord) -> bool:
    """Exact equality of samples and metadata."""
    return (
        a.lead_names == b.lead_names
        and a.record_id == b.record_id
        and a.sample_rate == b.sample_rate
        and a.leads.shape == b.leads.shape
        and bool(np.array_equal(a.leads, b.leads))
    )


def as_batch_array(records) -> np.ndarray:
    """Stack homogeneous records (or pass through a 3-D array) as (B, L, T)."""
    if isinstance(records, np.ndarray):
        if records.ndim != 3:
            raise ValueError(f"batch array must be 3-D, got ndim={records.ndim}")
        return np.asarray(records, dtype=np.float64)
    arrs = [r.leads for r in records]
    if not arrs:
        raise ValueError("empty record batch")
    shape = arrs[0].shape
    for i, a in enumerate(arrs):
        if a.shape != shape:
            raise ValueError(f"record {i} has shape {a.shape}, expected {shape}")
    return np.stack(arrs)
