from dataclasses import dataclass

from pyredeem.utils.errors import DomainError


@dataclass(frozen=True)
class UserProfile:
    """
    One user's private parameters: endowment d_i, privacy valuation lambda_i, privacy
    elasticity k_i in [0, 1], accuracy sensitivity theta_i, and whether the user knows
    about the redemption right at all.
    """

    d_i: float
    lambda_i: float
    k_i: float = 1.0
    theta_i: float = 0.0
    informed: bool = True

    def __post_init__(self) -> None:
        if self.d_i < 0.0:
            raise DomainError(f"d_i must be nonnegative, got {self.d_i}")
        if self.lambda_i < 0.0:
            raise DomainError(f"lambda_i must be nonnegative, got {self.lambda_i}")
        if not 0.0 <= self.k_i <= 1.0:
            raise DomainError(f"k_i must lie in [0, 1], got {self.k_i}")
        if self.theta_i < 0.0:
            raise DomainError(f"theta_i must be nonnegative, got {self.theta_i}")
