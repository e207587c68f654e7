import math
from typing import Callable, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

INVERSE_PHI = (math.sqrt(5.0) - 1.0) / 2.0
EXP_LIMIT = 700.0


def guarded_exp(z: float) -> float:
    """exp(z), saturating to inf once z leaves the safe double range."""
    if z > EXP_LIMIT:
        return math.inf
    return math.exp(z)


def bisect_decreasing(
    f: Callable[[np.ndarray], np.ndarray],
    lo: ArrayLike,
    hi: ArrayLike,
    xtol: float = 1e-6,
    max_iter: int = 200,
) -> np.ndarray:
    """
    Description: Element-wise root of a nonincreasing function on [lo, hi], clamped to the
    interval when the sign does not change.

    Args:
    - f: Vectorised function; f(x)[j] is the residual for problem j.
    - lo, hi: Scalar or per-problem interval bounds.
    - xtol: Interval width at which bisection stops.
    - max_iter: Hard cap on halvings.

    Returns: Array of roots (lo where f(lo) <= 0, hi where f(hi) >= 0).
    """
    lo_arr, hi_arr = np.broadcast_arrays(
        np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    )
    lo_arr = lo_arr.copy()
    hi_arr = hi_arr.copy()
    f_lo = np.asarray(f(lo_arr), dtype=float)
    f_hi = np.asarray(f(hi_arr), dtype=float)
    at_lo = f_lo <= 0.0
    at_hi = (~at_lo) & (f_hi >= 0.0)

    a = lo_arr.copy()
    b = hi_arr.copy()
    for _ in range(max_iter):
        if np.all(b - a <= xtol):
            break
        mid = 0.5 * (a + b)
        positive = np.asarray(f(mid), dtype=float) > 0.0
        a = np.where(positive, mid, a)
        b = np.where(positive, b, mid)

    root = 0.5 * (a + b)
    root = np.where(at_lo, lo_arr, root)
    root = np.where(at_hi, hi_arr, root)
    return root


def golden_section_max(
    f: Callable[[np.ndarray], np.ndarray],
    lo: ArrayLike,
    hi: ArrayLike,
    xtol: float = 1e-6,
    max_iter: int = 200,
) -> np.ndarray:
    """
    Description: Element-wise maximiser of a unimodal function on [lo, hi] by golden-section
    search. Both endpoints are compared against the interior candidate so boundary optima
    are returned exactly.

    Args:
    - f: Vectorised objective.
    - lo, hi: Scalar or per-problem bounds.
    - xtol: Final bracket width.
    - max_iter: Hard cap on bracket reductions.

    Returns: Array of maximisers.
    """
    a, b = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    a = a.copy()
    b = b.copy()
    lo_arr = a.copy()
    hi_arr = b.copy()

    x1 = b - INVERSE_PHI * (b - a)
    x2 = a + INVERSE_PHI * (b - a)
    f1 = np.asarray(f(x1), dtype=float)
    f2 = np.asarray(f(x2), dtype=float)
    for _ in range(max_iter):
        if np.all(b - a <= xtol):
            break
        left = f1 >= f2
        # keep [a, x2] where the left point wins, [x1, b] otherwise
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        new_x1 = b - INVERSE_PHI * (b - a)
        new_x2 = a + INVERSE_PHI * (b - a)
        x2_next = np.where(left, x1, new_x2)
        x1_next = np.where(left, new_x1, x2)
        f2_next = np.where(left, f1, np.nan)
        f1_next = np.where(left, np.nan, f2)
        x1, x2 = x1_next, x2_next
        need1 = np.isnan(f1_next)
        need2 = np.isnan(f2_next)
        if need1.any():
            f1_next = np.where(need1, np.asarray(f(x1), dtype=float), f1_next)
        if need2.any():
            f2_next = np.where(need2, np.asarray(f(x2), dtype=float), f2_next)
        f1, f2 = f1_next, f2_next

    best = 0.5 * (a + b)
    f_best = np.asarray(f(best), dtype=float)
    f_lo = np.asarray(f(lo_arr), dtype=float)
    f_hi = np.asarray(f(hi_arr), dtype=float)
    best = np.where(f_lo > f_best, lo_arr, best)
    f_best = np.maximum(f_best, f_lo)
    best = np.where(f_hi > f_best, hi_arr, best)
    return best


def floor_to_unit(quantity: float, unit: float) -> int:
    """Number of whole units contained in quantity, robust to round-off just below a unit."""
    if quantity <= 0.0:
        return 0
    return int(math.floor(quantity / unit + 1e-9))
