"""Estimator-style wrappers around graph estimation and augmentation.

These follow the fit/transform conventions so the toolkit drops into
pipelines next to other transformers: constructors only store
parameters, fit learns dataset-level state (the lead graph), and
transform is a pure function of (fitted state, input, seed).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .graph import LeadGraph, estimate_graph
from .ops import STANDARD_OPS, GraphAugParams
from .policy import AugmentPolicy, augment_records
from .records import MultiLeadRecord, as_batch_array


def _default_names(n_leads: int) -> tuple[str, ...]:
    return tuple(f"L{i:02d}" for i in range(n_leads))


def _as_records(X, lead_names, sample_rate: float) -> tuple[list[MultiLeadRecord], bool]:
    """Normalize input to records; True means the caller passed arrays."""
    if isinstance(X, np.ndarray):
        if X.ndim != 3:
            raise ValueError(f"expected a (batch, leads, samples) array, got shape {X.shape}")
        names = tuple(lead_names) if lead_names is not None else _default_names(X.shape[1])
        records = [
            MultiLeadRecord(leads=X[i], sample_rate=sample_rate, lead_names=names,
                            record_id=f"batch-{i:05d}")
            for i in range(X.shape[0])
        ]
        return records, True
    records = list(X)
    if records and not hasattr(records[0], "leads"):
        return _as_records(np.asarray(records, dtype=np.float64), lead_names, sample_rate)
    return records, False


class LeadGraphEstimator(BaseEstimator):
    """Learn the lead graph of a dataset.

    fit accepts a record sequence or a (batch, leads, samples) array;
    ``lead_names`` names array columns (default L00, L01, ...). After
    fitting, ``graph_`` holds the estimated LeadGraph and
    ``degenerate_leads_`` counts constant-lead occurrences that were
    skipped.
    """

    def __init__(self, lead_names=None, sample_rate: float = 1.0,
                 canonical_reorder: bool = True):
        self.lead_names = lead_names
        self.sample_rate = sample_rate
        self.canonical_reorder = canonical_reorder

    def fit(self, X, y=None):
        records, _ = _as_records(X, self.lead_names, self.sample_rate)
        self.graph_, self.degenerate_leads_ = estimate_graph(
            records, reorder=self.canonical_reorder
        )
        return self

    def adjacency(self) -> np.ndarray:
        if not hasattr(self, "graph_"):
            raise NotFittedError("call fit before reading the adjacency")
        return self.graph_.adjacency


class PolicyAugmenter(BaseEstimator, TransformerMixin):
    """Apply an augmentation policy as a transformer.

    The graph stage runs when ``graph_prob`` and ``graph_alpha`` are
    both set; a graph given via ``graph`` is used as-is, otherwise fit
    estimates one from the training data. transform augments each
    record independently and deterministically per (input order, seed):
    calling it twice gives identical output. Bump ``seed`` between
    epochs for fresh draws.

    Arrays in, arrays out; records in, records out.
    """

    def __init__(self, graph_prob=None, graph_alpha=None, n_ops: int = 0,
                 gamma: float = 0.0, standard_ops=tuple(STANDARD_OPS),
                 seed: int = 0, graph: LeadGraph | None = None,
                 lead_names=None, sample_rate: float = 1.0):
        self.graph_prob = graph_prob
        self.graph_alpha = graph_alpha
        self.n_ops = n_ops
        self.gamma = gamma
        self.standard_ops = standard_ops
        self.seed = seed
        self.graph = graph
        self.lead_names = lead_names
        self.sample_rate = sample_rate

    def _build_policy(self) -> AugmentPolicy:
        if (self.graph_prob is None) != (self.graph_alpha is None):
            raise ValueError("set both graph_prob and graph_alpha, or neither")
        graph_params = None
        if self.graph_prob is not None:
            graph_params = GraphAugParams(prob=float(self.graph_prob),
                                          alpha=float(self.graph_alpha))
        return AugmentPolicy(graph=graph_params,
                             standard_ops=tuple(self.standard_ops),
                             n_ops=self.n_ops, gamma=float(self.gamma),
                             seed=int(self.seed))

    def fit(self, X, y=None):
        self.policy_ = self._build_policy()
        if self.policy_.graph is None:
            self.graph_ = self.graph
        elif self.graph is not None:
            self.graph_ = self.graph
        else:
            records, _ = _as_records(X, self.lead_names, self.sample_rate)
            self.graph_, _ = estimate_graph(records)
        return self

    def transform(self, X):
        if not hasattr(self, "policy_"):
            raise NotFittedError("call fit before transform")
        records, was_array = _as_records(X, self.lead_names, self.sample_rate)
        augmented = augment_records(records, self.graph_, self.policy_,
                                    seed=self.policy_.seed)
        if was_array:
            return as_batch_array(augmented)
        return augmented
