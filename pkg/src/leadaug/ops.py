"""Augmentation operators.

Six operators, each a pure function of (record, parameters, stream):
the graph pair (lead mixing and its convex application) plus four
standard signal augmentations sharing one intensity scale. Operators
never mutate their input; they return fresh records with identical
metadata.

Intensity ``gamma`` is a shared 0..100 magnitude. Noise treats it as a
standard deviation, warp and mask as a percentage of the record length,
and smoothing as a kernel-width scale.

Determinism: every draw comes from the supplied stream, so (record,
parameters, stream identity) fully determines the output. The graph
operator keys its per-lead draws by lead name, which makes it commute
with permutation relabeling of record and graph together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import LeadGraph, LeadMismatchError
from .records import MultiLeadRecord


@dataclass(frozen=True)
class GraphAugParams:
    """Graph augmentation knobs.

    prob: chance of rewriting each lead, independently per lead.
    alpha: upper bound of the uniform mixing weight; the weight lambda is
        drawn fresh from U(0, alpha) for every rewritten lead.
    """

    prob: float
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"prob must be in [0, 1], got {self.prob}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 <= gamma <= 100.0:
        raise ValueError(f"gamma must be in [0, 100], got {gamma}")
    return gamma


def _percent_to_samples(gamma: float, n_samples: int) -> int:
    # round-half-to-even, pinned for bit-exact reproducibility
    return int(round(gamma * n_samples / 100.0))


def _check_graph(record: MultiLeadRecord, graph: LeadGraph) -> None:
    if tuple(record.lead_names) != graph.lead_names:
        raise LeadMismatchError(
            f"graph lead order {list(graph.lead_names)} does not match record "
            f"{record.record_id!r} ({list(record.lead_names)})"
        )


def mix_weights(graph: LeadGraph, lead_index: int, *, row_normalize: bool = False) -> np.ndarray:
    """Row of mixing coefficients for one lead (diagonal entry is zero).

    ``row_normalize`` divides the row by its absolute sum; off by
    default, since raw correlation weights already produce mixes on the
    scale of the original signal for well-correlated lead sets.
    """
    row = graph.adjacency[lead_index].copy()
    if row_normalize:
        total = np.abs(row).sum()
        if total > 0.0:
            row /= total
    return row


def graph_mix(
    record: MultiLeadRecord,
    graph: LeadGraph,
    lead_index: int,
    *,
    row_normalize: bool = False,
) -> np.ndarray:
    """Correlation-weighted combination of all other leads, for one lead.

    Returns sum_j w[j] * leads[j] over j != lead_index as a length-T
    vector; the input record is untouched.
    """
    _check_graph(record, graph)
    if not 0 <= lead_index < record.n_leads:
        raise IndexError(f"lead index {lead_index} out of range for {record.n_leads} leads")
    weights = mix_weights(graph, lead_index, row_normalize=row_normalize)
    return weights @ record.leads


def graph_augment(
    record: MultiLeadRecord,
    graph: LeadGraph,
    params: GraphAugParams,
    rng,
    *,
    row_normalize: bool = False,
) -> MultiLeadRecord:
    """Rewrite leads as convex combinations with their graph mixes.

    Each lead independently, with probability ``params.prob``: draw
    lambda ~ U(0, params.alpha) and replace the lead with
    (1 - lambda) * lead + lambda * mix, where every mix is computed from
    the original (pre-augmentation) leads. Computing all mixes from the
    original record keeps the result independent of lead iteration
    order. A lambda of exactly zero leaves the lead untouched bit for
    bit.

    Per-lead draws come from ``rng.fork("lead", name)``, so relabeling
    record and graph by the same permutation permutes the output.
    """
    _check_graph(record, graph)
    original = record.leads
    out = None
    for i, name in enumerate(record.lead_names):
        lead_rng = rng.fork("lead", name)
        if float(lead_rng.random()) >= params.prob:
            continue
        lam = float(lead_rng.uniform(0.0, params.alpha))
        if lam == 0.0:
            continue
        if out is None:
            out = original.copy()
        mixed = mix_weights(graph, i, row_normalize=row_normalize) @ original
        out[i] = (1.0 - lam) * original[i] + lam * mixed
    if out is None:
        return record
    return record.with_leads(out)


def gaussian_noise(record: MultiLeadRecord, gamma: float, rng) -> MultiLeadRecord:
    """Add i.i.d. zero-mean Gaussian noise with standard deviation gamma.

    gamma is read as the noise standard deviation so it shares the same
    magnitude axis as the other operators.
    """
    gamma = float(gamma)
    if gamma < 0.0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if gamma == 0.0:
        return record
    noise = rng.normal(0.0, gamma, size=record.leads.shape)
    return record.with_leads(record.leads + noise)


def _resample_to_length(leads: np.ndarray, n_out: int) -> np.ndarray:
    n_in = leads.shape[1]
    src = np.arange(n_in, dtype=np.float64)
    dst = np.linspace(0.0, n_in - 1.0, n_out)
    out = np.empty((leads.shape[0], n_out))
    for i in range(leads.shape[0]):
        out[i] = np.interp(dst, src, leads[i])
    return out


def time_warp(record: MultiLeadRecord, gamma: float, rng) -> MultiLeadRecord:
    """Cut or zero-pad gamma percent of the signal, then resample to length T.

    A fair coin picks CUT or PAD per invocation. CUT removes one
    contiguous segment of round(gamma * T / 100) samples at a uniform
    start; PAD inserts that many zeros at a uniform position. The
    modified signal is linearly interpolated back to the original
    length. The segment is shared across leads so inter-lead alignment
    survives.

    The segment length is validated up front (it must leave at least two
    samples after a cut) so the error does not depend on the coin.
    """
    gamma = _check_gamma(gamma)
    n_leads, n_samples = record.leads.shape
    k = _percent_to_samples(gamma, n_samples)
    if k == 0:
        return record
    if k > n_samples - 2:
        raise ValueError(
            f"gamma={gamma} would cut {k} of {n_samples} samples, leaving fewer than 2"
        )
    cut = bool(rng.random() < 0.5)
    if cut:
        start = int(rng.integers(0, n_samples - k + 1))
        kept = np.concatenate([record.leads[:, :start], record.leads[:, start + k:]], axis=1)
        warped = _resample_to_length(kept, n_samples)
    else:
        pos = int(rng.integers(0, n_samples + 1))
        padded = np.concatenate(
            [record.leads[:, :pos], np.zeros((n_leads, k)), record.leads[:, pos:]], axis=1
        )
        warped = _resample_to_length(padded, n_samples)
    return record.with_leads(warped)


def smoothing_kernel(length: int, gamma: float) -> np.ndarray:
    """Normalized Gaussian window of the given tap count.

    Taps sit at integer offsets m = idx - (length - 1) // 2 with weights
    proportional to exp(-m^2 / (2 s^2)), s = max(gamma / 100 * length,
    1e-6). Anchoring the center tap at offset zero makes gamma -> 0
    collapse the kernel to an exact identity for every length. Exponents
    are shifted by their maximum before exponentiation so tiny s cannot
    underflow the whole window to zero.
    """
    if length < 1:
        raise ValueError(f"kernel length must be >= 1, got {length}")
    offsets = np.arange(length, dtype=np.float64) - (length - 1) // 2
    width = max(gamma / 100.0 * length, 1e-6)
    exponents = -(offsets**2) / (2.0 * width * width)
    weights = np.exp(exponents - exponents.max())
    return weights / weights.sum()


def gaussian_smooth(record: MultiLeadRecord, gamma: float, rng) -> MultiLeadRecord:
    """Moving-average smoothing with a Gaussian window.

    The window length is drawn uniformly from {1, ..., 5}; gamma scales
    the kernel width. Length 1 is the identity. Leads are convolved with
    edge-replication padding so the output keeps length T.
    """
    gamma = _check_gamma(gamma)
    length = int(rng.integers(1, 6))
    if length == 1 or gamma == 0.0:
        return record
    weights = smoothing_kernel(length, gamma)
    center = (length - 1) // 2
    padded = np.pad(record.leads, ((0, 0), (center, length - 1 - center)), mode="edge")
    out = np.empty_like(record.leads)
    flipped = weights[::-1]
    for i in range(record.n_leads):
        out[i] = np.convolve(padded[i], flipped, mode="valid")
    return record.with_leads(out)


def zero_mask(record: MultiLeadRecord, gamma: float, rng) -> MultiLeadRecord:
    """Zero one contiguous window of gamma percent of the signal.

    The window start is uniform on [0, T - k] and shared across leads;
    it never wraps.
    """
    gamma = _check_gamma(gamma)
    n_samples = record.leads.shape[1]
    k = _percent_to_samples(gamma, n_samples)
    if k == 0:
        return record
    start = int(rng.integers(0, n_samples - k + 1))
    out = record.leads.copy()
    out[:, start:start + k] = 0.0
    return record.with_leads(out)


STANDARD_OPS = {
    "noise": gaussian_noise,
    "time_warp": time_warp,
    "smooth": gaussian_smooth,
    "mask": zero_mask,
}

STANDARD_OP_NAMES = tuple(STANDARD_OPS)
