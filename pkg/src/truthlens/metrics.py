"""Comprehensibility metrics for explanations."""

from __future__ import annotations

from .core import Explanation, ValidationError


def complexity(explanation: Explanation, threshold: float = 0.0) -> int:
    """Number of importance scores with |z_j| strictly above the threshold.

    Scores at or below the threshold are regarded zero, so threshold 0
    counts exactly the nonzero weights. Fewer surviving scores mean a more
    comprehensible explanation.
    """
    if threshold < 0:
        raise ValidationError("complexity threshold must be >= 0")
    return int(sum(1 for z in explanation.scores if abs(z) > threshold))
