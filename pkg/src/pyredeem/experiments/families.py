import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from pyredeem.experiments.driver import Cell, run_cells
from pyredeem.experiments.population import population_model, sample_population
from pyredeem.experiments.report import provenance, summarize
from pyredeem.mechanisms.registry import build_mechanism
from pyredeem.models.config import ExperimentConfig, ExperimentReport, distribution_spec
from pyredeem.models.market import OversupplyStrategy
from pyredeem.quotation.ledger import write_ledger_csv, write_outcome_csv
from pyredeem.utils.errors import ConfigError, DomainError
from pyredeem.utils.rng import derived_seed

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _mean(summary: pd.DataFrame, metric: str, **labels: Any) -> float:
    mask = pd.Series(True, index=summary.index)
    for key, value in labels.items():
        mask &= summary[key] == value
    values = summary.loc[mask, f"{metric}_mean"]
    return float(values.iloc[0]) if len(values) else math.nan


def _ratio(numerator: float, denominator: float) -> float:
    if math.isnan(numerator) or math.isnan(denominator) or denominator == 0.0:
        return math.nan
    return numerator / denominator


def _best(summary: pd.DataFrame, column: str, label: str) -> str:
    values = summary[column].astype(float)
    if not values.notna().any():
        return ""
    return str(summary.loc[values.idxmax(), label])


def _report(
    name: str,
    config: ExperimentConfig,
    raw: pd.DataFrame,
    summary: pd.DataFrame,
    extras: Optional[Dict[str, Any]] = None,
) -> ExperimentReport:
    return ExperimentReport(
        name=name,
        raw=raw,
        summary=summary,
        config=config,
        provenance=provenance(config, name),
        extras=extras,
    )


def run_comparison(config: ExperimentConfig, progress: bool = True) -> ExperimentReport:
    """
    Description: Every configured mechanism at every informed ratio, on matched populations.

    The extras hold the IIQ/OPP and IIQ/CIQ mean-welfare ratios per informed ratio.
    """
    cells = [
        Cell(config, mechanism, labels=(("rho", rho),), rho=rho)
        for rho in config.rho_grid
        for mechanism in config.mechanisms
    ]
    raw = run_cells(cells, config.workers, "compare", progress).raw
    summary = summarize(raw, ["rho", "mechanism"])
    ratios = {
        str(rho): {
            "IIQ/OPP": _ratio(
                _mean(summary, "welfare", rho=rho, mechanism="IIQ"),
                _mean(summary, "welfare", rho=rho, mechanism="OPP"),
            ),
            "IIQ/CIQ": _ratio(
                _mean(summary, "welfare", rho=rho, mechanism="IIQ"),
                _mean(summary, "welfare", rho=rho, mechanism="CIQ"),
            ),
        }
        for rho in config.rho_grid
    }
    return _report("compare", config, raw, summary, {"welfare_ratios": ratios})


def run_robustness(config: ExperimentConfig, progress: bool = True) -> ExperimentReport:
    """
    Description: Personalised pricing computed from noisy estimates, for each noise level.

    The quotation mechanism takes no estimates, so its replicates are run once and the same
    rows are reported under every noise level.
    """
    rho = config.rho_grid[0]
    cells = [
        Cell(
            config,
            "OPP",
            labels=(("sigma", sigma),),
            rho=rho,
            sigma=sigma,
            display="OPP-noisy",
        )
        for sigma in config.sigma_grid
    ]
    cells.append(Cell(config, "IIQ", labels=(("sigma", config.sigma_grid[0]),), rho=rho))
    raw = run_cells(cells, config.workers, "robustness", progress).raw
    noisy = raw[raw["mechanism"] == "OPP-noisy"]
    quoted = raw[raw["mechanism"] == "IIQ"]
    raw = pd.concat(
        [noisy] + [quoted.assign(sigma=sigma) for sigma in config.sigma_grid],
        ignore_index=True,
    )
    summary = summarize(raw, ["sigma", "mechanism"])
    first, last = config.sigma_grid[0], config.sigma_grid[-1]
    drop = 1.0 - _ratio(
        _mean(summary, "welfare", sigma=last, mechanism="OPP-noisy"),
        _mean(summary, "welfare", sigma=first, mechanism="OPP-noisy"),
    )
    return _report("robustness", config, raw, summary, {"relative_drop": drop})


def convergence_slope(summary: pd.DataFrame) -> float:
    """Least-squares slope of log(mean increments) against log(dB)."""
    rows = summary[(summary["axis"] == "dB") & (summary["rounds_mean"] > 0.0)]
    if len(rows) < 2:
        return math.nan
    x = np.log(rows["value"].astype(float).to_numpy())
    y = np.log(rows["rounds_mean"].astype(float).to_numpy())
    return float(np.polyfit(x, y, 1)[0])


def run_convergence(config: ExperimentConfig, progress: bool = True) -> ExperimentReport:
    """Price increments to termination and demand fulfillment, over dB and over I."""
    rho = config.rho_grid[0]
    cells: List[Cell] = []
    for dB in config.convergence.dB_grid:
        varied = replace(config, schedule=replace(config.schedule, dB=dB))
        cells.append(Cell(varied, "IIQ", labels=(("axis", "dB"), ("value", dB)), rho=rho))
    for n_users in config.convergence.n_users_grid:
        varied = replace(config, population=replace(config.population, n_users=n_users))
        cells.append(
            Cell(varied, "IIQ", labels=(("axis", "I"), ("value", float(n_users))), rho=rho)
        )
    raw = run_cells(cells, config.workers, "convergence", progress).raw
    keys = ["axis", "value", "mechanism"]
    summary = summarize(raw, keys)
    slope = convergence_slope(summary)
    logger.info("Convergence slope of increments against dB: %.3f", slope)
    return _report("convergence", config, raw, summary, {"slope": slope})


def run_oversupply(config: ExperimentConfig, progress: bool = True) -> ExperimentReport:
    """The quotation mechanism under each rationing strategy on matched seeds."""
    rho = config.rho_grid[0]
    cells = [
        Cell(
            config,
            "IIQ",
            labels=(("strategy", strategy.value),),
            rho=rho,
            oversupply=strategy,
        )
        for strategy in OversupplyStrategy
    ]
    raw = run_cells(cells, config.workers, "oversupply", progress).raw
    keys = ["strategy", "mechanism"]
    summary = summarize(raw, keys)
    server = summary["server_payoff_mean"].astype(float)
    scale = float(np.abs(server).mean())
    extras = {
        "server_payoff_spread": (
            float(server.max() - server.min()) / scale if scale > 0.0 else 0.0
        ),
        "best_users_payoff": _best(summary, "users_payoff_mean", "strategy"),
        "best_welfare": _best(summary, "welfare_mean", "strategy"),
    }
    return _report("oversupply", config, raw, summary, extras)


def sweep_config(config: ExperimentConfig, axis: str, value: str) -> ExperimentConfig:
    """Copy of ``config`` with one sweep parameter set to ``value``."""
    key = f"sweep.values ({axis})"
    try:
        match axis:
            case "dB":
                return replace(config, schedule=replace(config.schedule, dB=float(value)))
            case "I":
                n_users = int(float(value))
                return replace(config, population=replace(config.population, n_users=n_users))
            case "lambda_dist":
                spec = distribution_spec(value, key)
                return replace(config, population=replace(config.population, lambda_dist=spec))
            case "theta_dist":
                spec = distribution_spec(value, key)
                return replace(config, population=replace(config.population, theta_dist=spec))
            case "k":
                return replace(config, population=replace(config.population, k=float(value)))
            case "alpha":
                return replace(config, server=replace(config.server, alpha=float(value)))
    except (ValueError, DomainError) as error:
        raise ConfigError(f"{key}: cannot apply '{value}': {error}") from error
    raise ConfigError(f"unknown sweep axis '{axis}'")


def run_sweep(config: ExperimentConfig, progress: bool = True) -> ExperimentReport:
    """One-at-a-time sweep of a single parameter, every configured mechanism per value."""
    axis = config.sweep.axis
    rho = config.rho_grid[0]
    cells = [
        Cell(
            sweep_config(config, axis, value),
            mechanism,
            labels=(("axis", axis), ("value", value)),
            rho=rho,
            runs=config.sweep.runs,
        )
        for value in config.sweep.values
        for mechanism in config.mechanisms
    ]
    raw = run_cells(cells, config.workers, f"sweep {axis}", progress).raw
    summary = summarize(raw, ["axis", "value", "mechanism"])
    return _report("sweep", config, raw, summary)


def run_ledger(
    config: ExperimentConfig,
    directory: PathLike,
    replicate: int = 0,
    mechanism: str = "IIQ",
) -> Tuple[Path, Path]:
    """
    Description: Run one replicate of one mechanism and export its trades and outcome.

    Returns: Paths of ``ledger.csv`` and ``outcome.csv``.
    """
    users = sample_population(config, replicate)
    model = population_model(config, users)
    adapter = build_mechanism(mechanism, config)
    seed = derived_seed(config.master_seed, replicate, f"mechanism:{adapter.name}")
    outcome = adapter.solve(users, model, seed)
    target = Path(directory)
    ledger = write_ledger_csv(outcome.ledger, target / "ledger.csv")
    result = write_outcome_csv(outcome, target / "outcome.csv")
    logger.info(
        "%s replicate %d: %d trades, %.1f retained",
        outcome.mechanism,
        replicate,
        len(outcome.ledger),
        outcome.total_retained,
    )
    return ledger, result


EXPERIMENTS: Dict[str, Callable[..., ExperimentReport]] = {
    "compare": run_comparison,
    "robustness": run_robustness,
    "convergence": run_convergence,
    "oversupply": run_oversupply,
    "sweep": run_sweep,
}
