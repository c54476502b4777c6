"""White-box ℓ∞ attacks and robustness curves.

The attack is projected gradient ascent on the classification loss:

    x <- project(x + step_size * sign(grad_x loss), ball(x0, epsilon))

with an optional uniform random start inside the ball. The projection
is enforced exactly in floating point: after the nominal clip of the
perturbation, any coordinate that rounding pushed outside the ball is
nudged back with nextafter until max|x - x0| <= epsilon holds as
written. Every intermediate iterate satisfies the constraint, not just
the final one.

Records are attacked independently: record i draws its random start
from fork("record", i), and sign() makes the shared 1/batch gradient
scale irrelevant, so attacking a batch equals attacking each record
alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .metrics import macro_f1
from .randomness import RandomStream
from .records import as_batch_array


@dataclass(frozen=True)
class AttackConfig:
    """PGD hyperparameters.

    epsilon: ℓ∞ radius in signal units; 0 disables the attack.
    step_size: per-iteration step along the gradient sign.
    n_steps: number of gradient steps.
    random_start: start from a uniform point in the ball instead of x0.
    """

    epsilon: float
    step_size: float
    n_steps: int = 40
    random_start: bool = True

    def __post_init__(self):
        if not self.epsilon >= 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.step_size > 0.0:
            raise ValueError(f"step_size must be > 0, got {self.step_size}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @classmethod
    def for_epsilon(cls, epsilon: float, *, n_steps: int = 40,
                    random_start: bool = True) -> "AttackConfig":
        """Default schedule: step = epsilon / 10.

        epsilon = 0 gets a placeholder step of 1.0; the attack
        short-circuits before any step is taken.
        """
        step = epsilon / 10.0 if epsilon > 0.0 else 1.0
        return cls(epsilon=epsilon, step_size=step, n_steps=n_steps,
                   random_start=random_start)


def _project_exact(x: np.ndarray, x0: np.ndarray, epsilon: float) -> np.ndarray:
    """Force max|x - x0| <= epsilon to hold in float64, in place.

    np.clip bounds the perturbation, but x0 + clipped_delta can round to
    a value whose recomputed difference exceeds epsilon by one ulp.
    Walking offenders toward x0 with nextafter terminates because each
    pass shrinks them strictly, with x == x0 as the worst case.
    """
    while True:
        outside = np.abs(x - x0) > epsilon
        if not outside.any():
            return x
        x[outside] = np.nextafter(x[outside], x0[outside])


def pgd_attack_batch(
    model,
    batch: np.ndarray,
    labels,
    config: AttackConfig,
    rng: RandomStream | None = None,
    *,
    iterate_callback: Callable[[int, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Adversarial version of a (batch, leads, samples) array.

    ``model`` needs ``input_gradient(batch, labels)``. With
    epsilon = 0 the input is returned unchanged (a copy), bit for bit.
    ``rng`` is required when ``config.random_start`` is set.
    ``iterate_callback(step, x)`` sees every post-projection iterate,
    including the random start as step -1; the array it receives is a
    copy.
    """
    x0 = np.array(batch, dtype=np.float64)
    if x0.ndim != 3:
        raise ValueError(f"expected a (batch, leads, samples) array, got shape {x0.shape}")
    if config.epsilon == 0.0:
        return x0
    eps = float(config.epsilon)

    if config.random_start:
        if rng is None:
            raise ValueError("random_start needs a RandomStream; pass rng or disable it")
        x = x0.copy()
        for i in range(x0.shape[0]):
            start = rng.fork("record", i).uniform(-eps, eps, size=x0.shape[1:])
            x[i] = x0[i] + start
        x = _project_exact(x, x0, eps)
    else:
        x = x0.copy()
    if iterate_callback is not None:
        iterate_callback(-1, x.copy())

    for step in range(config.n_steps):
        grad = model.input_gradient(x, labels)
        x = x + config.step_size * np.sign(grad)
        delta = np.clip(x - x0, -eps, eps)
        x = _project_exact(x0 + delta, x0, eps)
        if iterate_callback is not None:
            iterate_callback(step, x.copy())
    return x


def pgd_attack(model, record, label, config: AttackConfig,
               rng: RandomStream | None = None):
    """Attack one record; returns a record with perturbed leads."""
    batch = record.leads[None, :, :]
    adv = pgd_attack_batch(model, batch, np.array([label]), config, rng)
    return record.with_leads(adv[0])


def robustness_curve(
    model,
    records,
    labels,
    epsilons: Sequence[float],
    *,
    n_steps: int = 40,
    random_start: bool = True,
    step_size: float | None = None,
    seed: int = 0,
    rng: RandomStream | None = None,
) -> list[tuple[float, float]]:
    """Macro-F1 under attack at each radius, as (epsilon, score) pairs.

    ``epsilons`` must be sorted ascending and start at 0; the 0 point
    skips the attack entirely, so it is bit-identical to scoring the
    clean batch. ``step_size`` of None means epsilon / 10 per point.
    ``rng`` defaults to RandomStream(seed); each radius forks its own
    substream.
    """
    epsilons = [float(e) for e in epsilons]
    if not epsilons:
        raise ValueError("epsilon list is empty")
    if epsilons[0] != 0.0:
        raise ValueError(f"epsilon list must start at 0, got {epsilons[0]}")
    if any(b <= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError(f"epsilon list must be strictly ascending, got {epsilons}")
    if isinstance(records, np.ndarray):
        batch = records.astype(np.float64, copy=False)
    else:
        batch = as_batch_array(records)
    labels = np.asarray(labels)
    if rng is None:
        rng = RandomStream(seed)
    n_classes = len(model.classes_)

    curve = []
    for k, eps in enumerate(epsilons):
        if eps == 0.0:
            predictions = model.predict(batch)
        else:
            if step_size is None:
                config = AttackConfig.for_epsilon(eps, n_steps=n_steps,
                                                  random_start=random_start)
            else:
                config = AttackConfig(epsilon=eps, step_size=step_size,
                                      n_steps=n_steps, random_start=random_start)
            adv = pgd_attack_batch(model, batch, labels, config,
                                   rng.fork("epsilon", k))
            predictions = model.predict(adv)
        curve.append((eps, macro_f1(labels, predictions, n_classes=n_classes)))
    return curve
