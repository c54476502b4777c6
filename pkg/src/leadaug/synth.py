"""Synthetic multi-lead datasets with shared latent structure.

Every record observes a 3-D latent source trajectory s(t) through its
leads: lead i measures <d_i, s(t)> plus independent sensor noise, where
d_i is that lead's unit direction vector. Leads of one record share
s(t), so they are correlated exactly the way the lead-graph model
assumes, and the strength of each pairwise correlation is governed by
the direction geometry.

Two source modes:

* "class_templates": each class owns a fixed band-limited trajectory
  (sums of low-frequency sinusoids per latent axis); records scale it
  with a small amplitude jitter. Classes are then separable by a linear
  model on pooled features, while sensor noise is not, which is the
  regime the robustness harness needs.
* "white": s(t) is white Gaussian noise, independent per record. Labels
  carry no signal; this mode exists to test correlation geometry in
  isolation (orthogonal directions give vanishing expected
  correlation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .randomness import RandomStream
from .records import MultiLeadRecord, canonical_lead_order

LATENT_DIM = 3
SOURCE_MODES = ("class_templates", "white")

# per latent axis: number of sinusoids and their frequency band,
# in cycles per record (low enough to survive 10x average pooling)
_HARMONICS = 3
_MIN_CYCLES = 1.0
_MAX_CYCLES = 6.0


def default_directions(n_leads: int) -> np.ndarray:
    """Deterministic unit vectors spread over the sphere.

    Fibonacci-lattice points: no two coincide and no two are exactly
    opposite for any practical lead count, so distinct leads stay
    distinguishable but correlated.
    """
    if n_leads < 1:
        raise ValueError(f"n_leads must be >= 1, got {n_leads}")
    index = np.arange(n_leads, dtype=np.float64) + 0.5
    z = 1.0 - 2.0 * index / n_leads
    radius = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    golden = np.pi * (3.0 - np.sqrt(5.0))
    theta = golden * index
    directions = np.stack([radius * np.cos(theta), radius * np.sin(theta), z], axis=1)
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def _normalized_directions(raw, n_leads: int) -> np.ndarray:
    directions = np.array(raw, dtype=np.float64)
    if directions.shape != (n_leads, LATENT_DIM):
        raise ValueError(
            f"directions must be shaped ({n_leads}, {LATENT_DIM}), got {directions.shape}"
        )
    if not np.isfinite(directions).all():
        raise ValueError("directions contain non-finite entries")
    norms = np.linalg.norm(directions, axis=1)
    if (norms == 0.0).any():
        raise ValueError("directions must be nonzero")
    return directions / norms[:, None]


@dataclass(frozen=True, eq=False)
class SynthSpec:
    """Generator settings.

    directions, when given, is an (n_leads, 3) array of lead direction
    vectors; they are normalized to unit length on construction. None
    selects the deterministic sphere spread. noise_level is the
    standard deviation of per-sample sensor noise; amplitude_jitter j
    scales each record's source by U(1-j, 1+j).
    """

    n_records: int
    n_leads: int = 12
    n_samples: int = 500
    n_classes: int = 3
    directions: np.ndarray | None = None
    source: str = "class_templates"
    noise_level: float = 0.5
    amplitude_jitter: float = 0.2
    sample_rate: float = 250.0
    seed: int = 0

    def __post_init__(self):
        if self.n_records < 1:
            raise ValueError(f"n_records must be >= 1, got {self.n_records}")
        if self.n_leads < 2:
            raise ValueError(f"n_leads must be >= 2, got {self.n_leads}")
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be >= 2, got {self.n_samples}")
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.source not in SOURCE_MODES:
            raise ValueError(f"source must be one of {SOURCE_MODES}, got {self.source!r}")
        if self.noise_level < 0.0:
            raise ValueError(f"noise_level must be >= 0, got {self.noise_level}")
        if not 0.0 <= self.amplitude_jitter < 1.0:
            raise ValueError(
                f"amplitude_jitter must be in [0, 1), got {self.amplitude_jitter}"
            )
        if not self.sample_rate > 0.0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        if self.directions is None:
            resolved = default_directions(self.n_leads)
        else:
            resolved = _normalized_directions(self.directions, self.n_leads)
        resolved.flags.writeable = False
        object.__setattr__(self, "directions", resolved)

    def lead_names(self) -> tuple[str, ...]:
        if self.n_leads == 12:
            return canonical_lead_order(
                ("I", "II", "III", "aVR", "aVL", "aVF",
                 "V1", "V2", "V3", "V4", "V5", "V6")
            )
        return tuple(f"L{i:02d}" for i in range(self.n_leads))


def _class_template(stream: RandomStream, n_samples: int) -> np.ndarray:
    """Fixed (3, T) source trajectory for one class."""
    t = np.arange(n_samples, dtype=np.float64) / n_samples
    template = np.zeros((LATENT_DIM, n_samples))
    for axis in range(LATENT_DIM):
        axis_stream = stream.fork("axis", axis)
        for _ in range(_HARMONICS):
            cycles = axis_stream.uniform(_MIN_CYCLES, _MAX_CYCLES)
            phase = axis_stream.uniform(0.0, 2.0 * np.pi)
            amplitude = axis_stream.uniform(0.5, 1.5)
            template[axis] += amplitude * np.sin(2.0 * np.pi * cycles * t + phase)
    return template


def synth_dataset(spec: SynthSpec) -> tuple[list[MultiLeadRecord], np.ndarray]:
    """Generate records and integer labels.

    Labels cycle 0..n_classes-1, so any contiguous slice is balanced
    within one record per class. Record i depends only on (spec, i):
    all draws come from fork("record", i) of the spec seed, plus the
    class templates from fork("class", c).
    """
    master = RandomStream(spec.seed)
    names = spec.lead_names()
    templates = None
    if spec.source == "class_templates":
        templates = [
            _class_template(master.fork("class", c), spec.n_samples)
            for c in range(spec.n_classes)
        ]

    records = []
    labels = np.empty(spec.n_records, dtype=np.int64)
    for i in range(spec.n_records):
        label = i % spec.n_classes
        labels[i] = label
        stream = master.fork("record", i)
        if templates is not None:
            scale = 1.0
            if spec.amplitude_jitter > 0.0:
                scale = stream.uniform(1.0 - spec.amplitude_jitter,
                                       1.0 + spec.amplitude_jitter)
            source = scale * templates[label]
        else:
            source = stream.normal(0.0, 1.0, size=(LATENT_DIM, spec.n_samples))
        leads = spec.directions @ source
        if spec.noise_level > 0.0:
            leads = leads + stream.normal(0.0, spec.noise_level,
                                          size=(spec.n_leads, spec.n_samples))
        records.append(MultiLeadRecord(
            leads=leads,
            sample_rate=spec.sample_rate,
            lead_names=names,
            record_id=f"synth-{spec.seed}-{i:05d}",
        ))
    return records, labels
