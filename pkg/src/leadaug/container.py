"""Record container I/O.

Binary container layout (all little-endian):

    magic "MWV1" (4 bytes)
    u32 record count
    per record:
        u32 id length, UTF-8 id
        f64 sample_rate
        u32 L, u32 T
        per lead (L entries): u32 name length, UTF-8 name
        L*T f32 samples, lead-major

Samples are stored as 32-bit floats; waveform ADCs never exceed 24-bit
precision so nothing real is lost, and in-memory records stay float64.

A CSV interop format is also provided: one file per record, header row
of lead names, one column per lead, one row per time sample.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .records import MultiLeadRecord

MAGIC = b"MWV1"


class ContainerError(Exception):
    """Base class for container decode failures."""


class BadMagicError(ContainerError):
    pass


class TruncatedPayloadError(ContainerError):
    pass


class SampleCountMismatchError(ContainerError):
    pass


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedPayloadError(
                f"container ends inside {what}: need {n} bytes at offset {self.pos}, "
                f"have {len(self.data) - self.pos}"
            )
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def f64(self, what: str) -> float:
        return struct.unpack("<d", self.take(8, what))[0]

    def utf8(self, what: str) -> str:
        n = self.u32(f"{what} length")
        return self.take(n, what).decode("utf-8")


def write_container(records: Iterable[MultiLeadRecord]) -> bytes:
    records = list(records)
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", len(records)))
    for rec in records:
        idb = rec.record_id.encode("utf-8")
        buf.write(struct.pack("<I", len(idb)))
        buf.write(idb)
        buf.write(struct.pack("<d", rec.sample_rate))
        n_leads, n_samples = rec.leads.shape
        buf.write(struct.pack("<II", n_leads, n_samples))
        for name in rec.lead_names:
            nb = name.encode("utf-8")
            buf.write(struct.pack("<I", len(nb)))
            buf.write(nb)
        buf.write(np.ascontiguousarray(rec.leads, dtype="<f4").tobytes())
    return buf.getvalue()


def read_container(data: bytes) -> list[MultiLeadRecord]:
    cur = _Cursor(data)
    magic = cur.take(4, "magic") if len(data) >= 4 else data
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    count = cur.u32("record count")
    records = []
    for i in range(count):
        rec_id = cur.utf8(f"record {i} id")
        sample_rate = cur.f64(f"record {i} sample_rate")
        n_leads = cur.u32(f"record {i} lead count")
        n_samples = cur.u32(f"record {i} sample count")
        names = tuple(cur.utf8(f"record {i} lead name") for _ in range(n_leads))
        raw = cur.take(n_leads * n_samples * 4, f"record {i} samples")
        leads = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        leads = leads.reshape(n_leads, n_samples)
        records.append(MultiLeadRecord(leads, sample_rate, names, rec_id))
    if cur.pos != len(data):
        raise SampleCountMismatchError(
            f"{len(data) - cur.pos} trailing bytes after {count} declared records"
        )
    return records


def save_container(records: Iterable[MultiLeadRecord], path) -> None:
    Path(path).write_bytes(write_container(records))


def load_container(path) -> list[MultiLeadRecord]:
    return read_container(Path(path).read_bytes())


def write_csv_record(record: MultiLeadRecord, path) -> None:
    """One record as CSV: header of lead names, one column per lead."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(record.lead_names)
        for t in range(record.n_samples):
            writer.writerow([repr(float(v)) for v in record.leads[:, t]])


def read_csv_record(path, *, sample_rate: float = 1.0, record_id: str | None = None) -> MultiLeadRecord:
    """Read one CSV record. The format carries no rate or id metadata, so
    those are supplied by the caller (id defaults to the file stem)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise TruncatedPayloadError(f"{path}: empty CSV record") from None
        columns: list[list[float]] = []
        for row_idx, row in enumerate(reader):
            if len(row) != len(names):
                raise SampleCountMismatchError(
                    f"{path}: row {row_idx} has {len(row)} values, expected {len(names)}"
                )
            try:
                columns.append([float(v) for v in row])
            except ValueError as exc:
                raise SampleCountMismatchError(f"{path}: row {row_idx}: {exc}") from None
    if not columns:
        raise TruncatedPayloadError(f"{path}: CSV record has a header but no samples")
    leads = np.asarray(columns, dtype=np.float64).T
    return MultiLeadRecord(
        leads, sample_rate, tuple(names),
        path.stem if record_id is None else record_id,
    )


def load_labels(path) -> dict[str, int]:
    """Read a labels CSV (record_id,label header) into an id -> label map."""
    labels: dict[str, int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["record_id", "label"]:
            raise SampleCountMismatchError(
                f"{path}: expected header 'record_id,label', got {header}"
            )
        for row in reader:
            if len(row) != 2:
                raise SampleCountMismatchError(f"{path}: malformed label row {row}")
            labels[row[0]] = int(row[1])
    return labels


def save_labels(records: Sequence[MultiLeadRecord], labels, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id", "label"])
        for rec, label in zip(records, labels):
            writer.writerow([rec.record_id, int(label)])


def labels_path(container_path) -> Path:
    """Sibling labels file for a container: data/train.mwv -> data/train.labels.csv."""
    p = Path(container_path)
    return p.with_name(p.stem + ".labels.csv")


def labels_for(records: Sequence[MultiLeadRecord], label_map: dict[str, int]) -> np.ndarray:
    """Labels aligned to a record list by record_id lookup."""
    out = []
    for rec in records:
        if rec.record_id not in label_map:
            raise KeyError(f"no label for record {rec.record_id!r}")
        out.append(label_map[rec.record_id])
    return np.asarray(out, dtype=np.int64)
