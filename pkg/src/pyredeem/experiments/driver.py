import logging
import math
from dataclasses import dataclass
from multiprocessing import Pool
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import pandas as pd
from tqdm import tqdm

from pyredeem.experiments.population import population_model, sample_population
from pyredeem.mechanisms.registry import build_mechanism
from pyredeem.metrics.evaluation import run_metrics
from pyredeem.metrics.freerider import freerider_bins
from pyredeem.models.config import ExperimentConfig
from pyredeem.models.market import OversupplyStrategy
from pyredeem.utils.errors import RedeemError, parse_error
from pyredeem.utils.rng import derived_seed

logger = logging.getLogger(__name__)

METRIC_COLUMNS = (
    "server_payoff",
    "users_payoff",
    "welfare",
    "transfer_free",
    "jain",
    "cv",
    "min_max_ratio",
    "regret_ub",
    "min_regret",
    "fulfillment",
    "rounds",
    "terminal_price",
)
FREE_RIDER_MECHANISMS = ("IIQ", "CIQ", "OPP")


@dataclass(frozen=True)
class Cell:
    """
    One configuration of one mechanism, evaluated over ``runs`` replicates.

    ``labels`` become the leading columns of every raw row produced for the cell.
    """

    config: ExperimentConfig
    mechanism: str
    labels: Tuple[Tuple[str, Any], ...] = ()
    rho: Optional[float] = None
    sigma: float = 0.0
    oversupply: Optional[OversupplyStrategy] = None
    runs: Optional[int] = None
    display: Optional[str] = None

    @property
    def replicates(self) -> int:
        return self.config.runs if self.runs is None else self.runs


@dataclass
class DriverResult:
    raw: pd.DataFrame
    failures: int = 0


def _nan_metrics() -> Dict[str, float]:
    return {name: math.nan for name in METRIC_COLUMNS}


def evaluate(cell: Cell, replicate: int) -> Dict[str, Any]:
    """
    Description: Run one replicate of one cell and flatten its metrics into a row.

    Errors raised by the mechanism are stored in the ``error`` column as JSON and the row
    keeps NaN metrics, so one failing replicate never aborts the experiment.
    """
    config = cell.config
    row: Dict[str, Any] = dict(cell.labels)
    label = cell.display or cell.mechanism
    row.update({"mechanism": label, "replicate": replicate})
    bins = [f"bin_{b}" for b in range(config.free_rider_bins)]
    try:
        users = sample_population(config, replicate, cell.rho)
        model = population_model(config, users)
        mechanism = build_mechanism(cell.mechanism, config, cell.sigma, cell.oversupply)
        seed = derived_seed(config.master_seed, replicate, f"mechanism:{mechanism.name}")
        outcome = mechanism.solve(users, model, seed)
        metrics = run_metrics(outcome, users, model, config.welfare_convention)
    except (RedeemError, ArithmeticError, ValueError) as error:
        logger.warning("%s replicate %d failed: %s", label, replicate, error)
        row.update(_nan_metrics())
        row.update({name: math.nan for name in bins})
        row["error"] = parse_error(error)
        return row

    row.update(
        {
            "server_payoff": metrics.server_payoff,
            "users_payoff": metrics.users_payoff,
            "welfare": metrics.welfare,
            "transfer_free": metrics.transfer_free,
            "jain": metrics.jain,
            "cv": metrics.cv,
            "min_max_ratio": metrics.min_max_ratio,
            "regret_ub": metrics.regret_ub if metrics.regret else math.nan,
            "min_regret": min(metrics.regret) if metrics.regret else math.nan,
            "fulfillment": math.nan if metrics.fulfillment is None else metrics.fulfillment,
            "rounds": math.nan if metrics.rounds is None else metrics.rounds,
            "terminal_price": (
                math.nan if outcome.terminal_price is None else outcome.terminal_price
            ),
        }
    )
    fractions: Sequence[float] = [math.nan] * len(bins)
    if bins and cell.mechanism in FREE_RIDER_MECHANISMS:
        informed = sum(1 for u in users if u.informed and u.d_i > 0.0)
        if informed >= len(bins):
            fractions = freerider_bins(users, outcome, len(bins))
    row.update(dict(zip(bins, fractions)))
    row["error"] = ""
    return row


def _evaluate_task(task: Tuple[int, Cell, int]) -> Tuple[int, int, Dict[str, Any]]:
    index, cell, replicate = task
    return index, replicate, evaluate(cell, replicate)


def _tasks(cells: Sequence[Cell]) -> Iterable[Tuple[int, Cell, int]]:
    for index, cell in enumerate(cells):
        for replicate in range(cell.replicates):
            yield index, cell, replicate


def run_cells(
    cells: Sequence[Cell],
    workers: int = 1,
    description: str = "replicates",
    progress: bool = True,
) -> DriverResult:
    """
    Description: Evaluate every replicate of every cell, optionally across processes.

    Rows are sorted by (cell, replicate) before they are returned, so the raw table does
    not depend on the worker count or on completion order.

    Args:
    - cells (Sequence[Cell]): The experiment grid.
    - workers (int): Process count; 1 runs in the calling process.
    - description (str): Progress bar label.
    - progress (bool): Show a tqdm progress bar.

    Returns:
    DriverResult with the raw table and the number of failed replicates.
    """
    total = sum(cell.replicates for cell in cells)
    logger.info("Running %d cells, %d replicates, %d workers", len(cells), total, workers)
    if workers > 1:
        with Pool(workers) as pool:
            results = list(
                tqdm(
                    pool.imap(_evaluate_task, _tasks(cells), chunksize=8),
                    total=total,
                    desc=description,
                    disable=not progress,
                )
            )
    else:
        results = [
            _evaluate_task(task)
            for task in tqdm(_tasks(cells), total=total, desc=description, disable=not progress)
        ]
    results.sort(key=lambda item: (item[0], item[1]))
    raw = pd.DataFrame([row for _, _, row in results])
    failures = int((raw["error"] != "").sum()) if not raw.empty else 0
    if failures:
        logger.warning("%d of %d replicates failed; see the error column", failures, total)
    return DriverResult(raw=raw, failures=failures)
