from typing import Sequence, Tuple

import numpy as np

from pyredeem.models.outcome import MechanismOutcome
from pyredeem.models.user import UserProfile
from pyredeem.utils.errors import DomainError


def freerider_bins(
    users: Sequence[UserProfile], outcome: MechanismOutcome, n_bins: int
) -> Tuple[float, ...]:
    """
    Description: Mean supply fraction ȳ_i/d_i of informed users per accuracy-sensitivity bin,
    lowest θ first.

    Users are ranked by (θ, index) and cut into equal-count quantile bins. When every θ is
    the same, the quantiles collapse and each bin reports the overall mean.

    Raises: DomainError when n_bins < 1 or there are fewer users than bins.
    """
    if n_bins < 1:
        raise DomainError(f"need at least one bin, got {n_bins}")
    members = [i for i, u in enumerate(users) if u.informed and u.d_i > 0.0]
    if len(members) < n_bins:
        raise DomainError(f"{len(members)} users cannot fill {n_bins} bins")
    fractions = {i: outcome.retention[i] / users[i].d_i for i in members}
    thetas = [users[i].theta_i for i in members]
    if max(thetas) == min(thetas):
        overall = float(np.mean(list(fractions.values())))
        return tuple(overall for _ in range(n_bins))

    ranked = sorted(members, key=lambda i: (users[i].theta_i, i))
    return tuple(
        float(np.mean([fractions[i] for i in chunk]))
        for chunk in np.array_split(np.asarray(ranked), n_bins)
    )
