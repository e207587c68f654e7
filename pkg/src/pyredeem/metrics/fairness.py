import math
from typing import Sequence

import numpy as np

from pyredeem.models.metrics import FairnessIndices
from pyredeem.utils.errors import DomainError


def fairness(payoffs: Sequence[float]) -> FairnessIndices:
    """
    Description: Jain's index (Σw)²/(I·Σw²), coefficient of variation and min/max ratio.

    An all-zero vector has no defined index; every field is then NaN.

    Raises: DomainError on an empty vector or a negative payoff.
    """
    values = np.asarray(payoffs, dtype=float)
    if values.size == 0:
        raise DomainError("fairness needs at least one payoff")
    if np.any(values < 0.0):
        raise DomainError("fairness indices need nonnegative payoffs")
    total = float(values.sum())
    if total == 0.0:
        return FairnessIndices(jain=math.nan, cv=math.nan, min_max_ratio=math.nan)
    jain = total * total / (values.size * float(np.square(values).sum()))
    mean = total / values.size
    return FairnessIndices(
        jain=jain,
        cv=float(values.std()) / mean,
        min_max_ratio=float(values.min()) / float(values.max()),
    )
