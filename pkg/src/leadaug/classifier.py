"""Linear softmax classifier over pooled waveform features.

The feature map is deliberately affine in the raw samples: average-pool
each lead by a fixed factor, then apply a per-lead scalar shift/scale
learned from the training set. Logits are a linear layer on top, so the
whole model is an affine function of the input waveform. That is what
makes the white-box attack evaluation honest: gradients are exact, and
closed-form worst-case analysis stays available as a cross-check.

Training is full-batch gradient descent on mean cross-entropy with
backtracking (step halving), from a zero initialization. Every gradient
is written out by hand; there is no autodiff anywhere in the package.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .records import as_batch_array


class DivergenceError(RuntimeError):
    """Optimization produced a non-finite loss or gradient."""


def _as_waveform_batch(X) -> np.ndarray:
    if isinstance(X, np.ndarray):
        batch = X.astype(np.float64, copy=False)
    else:
        X = list(X)
        if X and hasattr(X[0], "leads"):
            batch = as_batch_array(X)
        else:
            batch = np.asarray(X, dtype=np.float64)
    if batch.ndim != 3:
        raise ValueError(f"expected a (batch, leads, samples) array, got shape {batch.shape}")
    if batch.shape[0] == 0:
        raise ValueError("empty batch")
    if not np.isfinite(batch).all():
        raise ValueError("waveform batch contains non-finite samples")
    return batch


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


class WaveformLinearClassifier(BaseEstimator, ClassifierMixin):
    """Softmax regression on average-pooled, standardized leads.

    Parameters
    ----------
    downsample : pooling factor; each feature is the mean of this many
        consecutive samples. A tail shorter than the factor is dropped.
    standardize : learn one (mean, scale) pair per lead on the training
        features and apply it everywhere. Scales below 1e-8 fall back to
        1.0 so constant leads do not explode.
    learning_rate : initial gradient-descent step. The step is halved
        whenever it fails to decrease the loss and is never grown back,
        so the recorded loss history is non-increasing.
    n_steps : maximum number of accepted descent steps. Zero fits the
        all-zero model (uniform predictions, loss = ln n_classes).

    Accepts raw (batch, leads, samples) arrays or record sequences.
    """

    def __init__(self, downsample: int = 10, standardize: bool = True,
                 learning_rate: float = 1.0, n_steps: int = 300):
        self.downsample = downsample
        self.standardize = standardize
        self.learning_rate = learning_rate
        self.n_steps = n_steps

    # -- feature map ---------------------------------------------------

    def _pool(self, batch: np.ndarray) -> np.ndarray:
        q = self.downsample
        n_batch, n_leads, n_samples = batch.shape
        n_pooled = n_samples // q
        if n_pooled == 0:
            raise ValueError(
                f"downsample={q} leaves no features for records of {n_samples} samples"
            )
        trimmed = batch[:, :, : n_pooled * q]
        return trimmed.reshape(n_batch, n_leads, n_pooled, q).mean(axis=3)

    def _features(self, batch: np.ndarray) -> np.ndarray:
        pooled = self._pool(batch)
        z = (pooled - self.lead_means_[None, :, None]) / self.lead_scales_[None, :, None]
        return z.reshape(batch.shape[0], -1)

    def transform_features(self, X) -> np.ndarray:
        """Flattened model-space features for a batch, as (batch, n_features)."""
        self._check_fitted()
        batch = _as_waveform_batch(X)
        self._check_shape(batch)
        return self._features(batch)

    # -- loss and gradients --------------------------------------------

    def _encode(self, y) -> np.ndarray:
        y = np.asarray(y)
        encoded = np.searchsorted(self.classes_, y)
        bad = (encoded >= len(self.classes_)) | (self.classes_[np.minimum(encoded, len(self.classes_) - 1)] != y)
        if bad.any():
            raise ValueError(f"unseen labels {sorted(set(np.asarray(y)[bad].tolist()))}")
        return encoded

    @staticmethod
    def _loss_value(z: np.ndarray, y_idx: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> float:
        logits = z @ weights + bias
        logp = _log_softmax(logits)
        return float(-logp[np.arange(len(y_idx)), y_idx].mean())

    @staticmethod
    def _logit_residual(z, y_idx, weights, bias) -> np.ndarray:
        # (softmax - onehot) / batch, the shared upstream term of every gradient
        logits = z @ weights + bias
        probs = np.exp(_log_softmax(logits))
        probs[np.arange(len(y_idx)), y_idx] -= 1.0
        return probs / len(y_idx)

    def fit(self, X, y):
        q = int(self.downsample)
        if q < 1:
            raise ValueError(f"downsample must be >= 1, got {self.downsample}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {self.n_steps}")
        if not self.learning_rate > 0.0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        batch = _as_waveform_batch(X)
        y = np.asarray(y)
        if y.shape != (batch.shape[0],):
            raise ValueError(f"labels shaped {y.shape} for a batch of {batch.shape[0]}")
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes")
        self.n_leads_ = batch.shape[1]
        self.n_samples_ = batch.shape[2]

        pooled = self._pool(batch)
        if self.standardize:
            self.lead_means_ = pooled.mean(axis=(0, 2))
            scales = pooled.std(axis=(0, 2))
            self.lead_scales_ = np.where(scales > 1e-8, scales, 1.0)
        else:
            self.lead_means_ = np.zeros(self.n_leads_)
            self.lead_scales_ = np.ones(self.n_leads_)

        z = self._features(batch)
        y_idx = self._encode(y)
        n_classes = len(self.classes_)
        weights = np.zeros((z.shape[1], n_classes))
        bias = np.zeros(n_classes)

        loss = self._loss_value(z, y_idx, weights, bias)
        history = [loss]
        step = float(self.learning_rate)
        for _ in range(self.n_steps):
            residual = self._logit_residual(z, y_idx, weights, bias)
            grad_w = z.T @ residual
            grad_b = residual.sum(axis=0)
            if not (np.isfinite(grad_w).all() and np.isfinite(grad_b).all()):
                raise DivergenceError(
                    f"non-finite gradient after {len(history) - 1} steps (loss {loss:.6g})"
                )
            while True:
                new_w = weights - step * grad_w
                new_b = bias - step * grad_b
                moved = not (np.array_equal(new_w, weights) and np.array_equal(new_b, bias))
                if not moved:
                    break
                new_loss = self._loss_value(z, y_idx, new_w, new_b)
                if np.isfinite(new_loss) and new_loss <= loss:
                    break
                step *= 0.5
            if not moved:
                break
            weights, bias, loss = new_w, new_b, new_loss
            history.append(loss)

        self.weights_ = weights
        self.bias_ = bias
        self.loss_history_ = np.array(history)
        self.n_iter_ = len(history) - 1
        return self

    # -- inference -----------------------------------------------------

    def _check_fitted(self):
        if not hasattr(self, "weights_"):
            raise NotFittedError(
                f"{type(self).__name__} is not fitted yet; call fit before using the model"
            )

    def _check_shape(self, batch: np.ndarray):
        if batch.shape[1] != self.n_leads_ or batch.shape[2] != self.n_samples_:
            raise ValueError(
                f"batch shaped {batch.shape[1:]}, model fitted for "
                f"({self.n_leads_}, {self.n_samples_})"
            )

    def decision_function(self, X) -> np.ndarray:
        return self.transform_features(X) @ self.weights_ + self.bias_

    def predict_proba(self, X) -> np.ndarray:
        return np.exp(_log_softmax(self.decision_function(X)))

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        return self.classes_[self.decision_function(X).argmax(axis=1)]

    def loss(self, X, y) -> float:
        """Mean cross-entropy of the fitted model on a batch."""
        self._check_fitted()
        batch = _as_waveform_batch(X)
        self._check_shape(batch)
        return self._loss_value(self._features(batch), self._encode(y), self.weights_, self.bias_)

    def parameter_gradient(self, X, y) -> tuple[np.ndarray, np.ndarray]:
        """Gradient of ``loss(X, y)`` in the fitted weights and bias."""
        self._check_fitted()
        batch = _as_waveform_batch(X)
        self._check_shape(batch)
        residual = self._logit_residual(
            self._features(batch), self._encode(y), self.weights_, self.bias_
        )
        return self._features(batch).T @ residual, residual.sum(axis=0)

    def input_gradient(self, X, y) -> np.ndarray:
        """Gradient of the mean loss in the raw waveform samples.

        Shaped like the input batch. Samples in the pooling tail never
        reach the model, so their entries are exactly zero.
        """
        self._check_fitted()
        batch = _as_waveform_batch(X)
        self._check_shape(batch)
        q = self.downsample
        residual = self._logit_residual(
            self._features(batch), self._encode(y), self.weights_, self.bias_
        )
        grad_z = residual @ self.weights_.T
        n_pooled = self.n_samples_ // q
        grad_pooled = grad_z.reshape(batch.shape[0], self.n_leads_, n_pooled)
        grad_pooled = grad_pooled / (self.lead_scales_[None, :, None] * q)
        grad = np.zeros_like(batch)
        grad[:, :, : n_pooled * q] = np.repeat(grad_pooled, q, axis=2)
        return grad

    def linear_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """The model as an explicit affine map on raw waveforms.

        Returns (coef, intercept) with coef shaped (n_classes, n_leads,
        n_samples) such that logits(x) = sum(coef * x, axes=(1, 2)) +
        intercept reproduces ``decision_function`` exactly.
        """
        self._check_fitted()
        q = self.downsample
        n_pooled = self.n_samples_ // q
        n_classes = len(self.classes_)
        per_pool = self.weights_.reshape(self.n_leads_, n_pooled, n_classes)
        per_pool = per_pool / (self.lead_scales_[:, None, None] * q)
        coef = np.zeros((n_classes, self.n_leads_, self.n_samples_))
        coef[:, :, : n_pooled * q] = np.repeat(per_pool, q, axis=1).transpose(2, 0, 1)
        pooled_w = self.weights_.reshape(self.n_leads_, n_pooled, n_classes)
        offset = (self.lead_means_ / self.lead_scales_)[:, None, None] * pooled_w
        intercept = self.bias_ - offset.sum(axis=(0, 1))
        return coef, intercept
