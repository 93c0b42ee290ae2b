"""Differential-privacy noise mechanisms."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import ParameterError
from .rng import as_generator


def laplace_sample(scale: float, rng, size=None):
    """Draw from the Laplace density exp(-|x|/scale) / (2 scale)."""
    if not scale > 0:
        raise ParameterError(f"Laplace scale must be positive, got {scale}")
    return as_generator(rng).laplace(0.0, scale, size)


def exponential_weights(scores, epsilon: float, sensitivity: float) -> np.ndarray:
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if not sensitivity > 0:
        raise ParameterError(f"sensitivity must be positive, got {sensitivity}")
    logits = epsilon * np.asarray(scores, dtype=np.float64) / (2.0 * sensitivity)
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def exponential_mechanism(candidates: Sequence, scores, epsilon: float, sensitivity: float, rng):
    """Pick candidate i with probability proportional to exp(eps * score_i / (2 * sensitivity))."""
    if len(candidates) == 0:
        raise ParameterError("no candidates to choose from")
    if len(scores) != len(candidates):
        raise ParameterError("one score per candidate required")
    probs = exponential_weights(scores, epsilon, sensitivity)
    return candidates[int(as_generator(rng).choice(len(candidates), p=probs))]
