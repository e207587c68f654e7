import math
from dataclasses import replace
from typing import List, Optional, Sequence

import numpy as np

from pyredeem.econ.privacy import privacy_utility
from pyredeem.models.outcome import BaselineKind, MechanismOutcome
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile
from pyredeem.utils.errors import DomainError


def assign_informed(n_users: int, rho: float, rng: np.random.Generator) -> List[bool]:
    """The first ⌈ρ·n⌉ users of a seeded shuffle know their redemption right."""
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"informed ratio must lie in [0, 1], got {rho}")
    count = math.ceil(rho * n_users - 1e-12)
    flags = [False] * n_users
    for index in rng.permutation(n_users)[:count]:
        flags[int(index)] = True
    return flags


def baseline(
    kind: BaselineKind,
    users: Sequence[UserProfile],
    model: ServerCostModel,
    rho: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
) -> MechanismOutcome:
    """
    Description: Boundary outcomes without any price discovery.

    - DNR: nobody redeems; the server keeps everything for free.
    - GDPR: informed users redeem everything; the uninformed keep their data on the server.
    - FULL: the server keeps everything and pays informed users their full privacy loss.

    Args:
    - kind (BaselineKind): Which boundary.
    - users (Sequence[UserProfile]): Population; its informed flags are used as given
      unless ``rho`` is supplied.
    - model (ServerCostModel): Only checked for consistency with the population.
    - rho (float, optional): Reassign informed flags for this ratio.
    - rng (np.random.Generator, optional): Shuffle stream, required with ``rho``.

    Returns: MechanismOutcome labelled with the baseline's name.
    """
    if rho is not None:
        if rng is None:
            raise DomainError("reassigning informed users needs a random generator")
        flags = assign_informed(len(users), rho, rng)
        users = [replace(u, informed=flag) for u, flag in zip(users, flags)]
    if abs(sum(u.d_i for u in users) - model.d_total) > 1e-6 * model.d_total:
        raise DomainError("population endowments do not add up to the model's d_total")

    match kind:
        case BaselineKind.DNR:
            retention = [u.d_i for u in users]
            payments = [0.0] * len(users)
        case BaselineKind.GDPR:
            retention = [0.0 if u.informed else u.d_i for u in users]
            payments = [0.0] * len(users)
        case BaselineKind.FULL:
            retention = [u.d_i for u in users]
            payments = [
                privacy_utility(u, u.d_i) - privacy_utility(u, 0.0) if u.informed else 0.0
                for u in users
            ]
        case _:
            raise DomainError(f"unknown baseline {kind}")
    return MechanismOutcome(
        mechanism=kind.value,
        retention=tuple(float(y) for y in retention),
        payments=tuple(float(p) for p in payments),
        parameters={"informed": tuple(u.informed for u in users)},
    )
