from pathlib import Path
from typing import Iterable, List, Sequence, Union

import pandas as pd

from pyredeem.models.equilibrium import SpneProfile
from pyredeem.models.market import Trade
from pyredeem.models.outcome import MechanismOutcome

TRADE_COLUMNS = ["round", "user", "quantity", "unit_price"]
OUTCOME_COLUMNS = ["user", "retained", "payment", "mechanism"]

PathLike = Union[str, Path]


def trades_frame(trades: Iterable[Trade]) -> pd.DataFrame:
    rows = [
        {
            "round": trade.round,
            "user": trade.user,
            "quantity": float(trade.quantity),
            "unit_price": float(trade.unit_price),
        }
        for trade in trades
    ]
    return pd.DataFrame(rows, columns=TRADE_COLUMNS)


def profile_trades(profile: SpneProfile) -> List[Trade]:
    """One synthetic trade per selling user, at the round the profile assigns it."""
    return [
        Trade(round=period, user=user, quantity=amount, unit_price=price)
        for user, period, price, amount in zip(
            profile.order, profile.periods, profile.prices, profile.amounts
        )
        if amount > 0.0
    ]


def outcome_frame(outcome: MechanismOutcome) -> pd.DataFrame:
    rows = [
        {
            "user": index,
            "retained": float(retained),
            "payment": float(payment),
            "mechanism": outcome.mechanism,
        }
        for index, (retained, payment) in enumerate(zip(outcome.retention, outcome.payments))
    ]
    return pd.DataFrame(rows, columns=OUTCOME_COLUMNS)


def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    """Write with a header, '.' decimals and LF line endings."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False, lineterminator="\n", encoding="utf-8")
    return target


def write_ledger_csv(trades: Sequence[Trade], path: PathLike) -> Path:
    return write_csv(trades_frame(trades), path)


def write_outcome_csv(outcome: MechanismOutcome, path: PathLike) -> Path:
    return write_csv(outcome_frame(outcome), path)
