import hashlib
import json
import logging
import math
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Dict, Sequence, Union

import numpy as np
import pandas as pd

from pyredeem.experiments.config import dump_config, write_config
from pyredeem.experiments.driver import METRIC_COLUMNS
from pyredeem.models.config import ExperimentConfig, ExperimentReport
from pyredeem.quotation.ledger import write_csv

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Z_95 = 1.96


def package_version() -> str:
    try:
        return version("pyredeem")
    except PackageNotFoundError:
        return "0.1.0"


def provenance(config: ExperimentConfig, family: str) -> Dict[str, Any]:
    """Config hash, seed and package version identifying a report."""
    digest = hashlib.sha256(dump_config(config).encode("utf-8")).hexdigest()
    return {
        "experiment": family,
        "config_sha256": digest,
        "master_seed": config.master_seed,
        "version": package_version(),
    }


def summarize(raw: pd.DataFrame, keys: Sequence[str]) -> pd.DataFrame:
    """
    Description: Aggregate raw rows per cell.

    For every metric column the summary holds ``<metric>_mean``, ``<metric>_sd`` (sample
    standard deviation), ``<metric>_count`` and ``<metric>_ci95``, the normal-approximation
    half-width 1.96·sd/√n. Failed replicates are left out and counted in ``failures``.

    Args:
    - raw (pd.DataFrame): One row per replicate, as produced by the driver.
    - keys (Sequence[str]): Label columns that identify a cell.

    Returns: pd.DataFrame with one row per cell, in first-appearance order.
    """
    keys = list(keys)
    metrics = [
        column
        for column in raw.columns
        if column in METRIC_COLUMNS or column.startswith("bin_")
    ]
    ok = raw[raw["error"] == ""]
    grouped = ok.groupby(keys, sort=False, dropna=False)[metrics]
    mean = grouped.mean().add_suffix("_mean")
    sd = grouped.std(ddof=1).add_suffix("_sd")
    count = grouped.count().add_suffix("_count")
    summary = pd.concat([mean, sd, count], axis=1)
    for metric in metrics:
        n = summary[f"{metric}_count"]
        summary[f"{metric}_ci95"] = Z_95 * summary[f"{metric}_sd"] / np.sqrt(
            n.where(n > 0)
        )
    failures = raw.groupby(keys, sort=False, dropna=False)["error"].apply(
        lambda errors: int((errors != "").sum())
    )
    summary = summary.reindex(failures.index)
    summary["failures"] = failures
    ordered = [f"{m}_{s}" for m in metrics for s in ("mean", "sd", "count", "ci95")]
    return summary[ordered + ["failures"]].reset_index()


def _clean(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key): _clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    if isinstance(value, (float, np.floating)):
        return None if math.isnan(value) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def _write_json(payload: Any, path: Path) -> Path:
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, default=_json_default, allow_nan=False)
        handle.write("\n")
    return path


def emit_report(report: ExperimentReport, directory: PathLike) -> Path:
    """
    Description: Write a report to disk.

    Files: ``raw.csv`` (one row per replicate), ``summary.json`` (per-cell aggregates and
    any extras), ``effective-config.yaml`` (re-parseable) and ``provenance.json``.

    Returns: The directory the files were written to.
    """
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    write_csv(report.raw, target / "raw.csv")
    summary: Dict[str, Any] = {
        "experiment": report.name,
        "cells": _clean(report.summary.to_dict(orient="records")),
    }
    if report.extras:
        summary["extras"] = _clean(report.extras)
    _write_json(summary, target / "summary.json")
    write_config(report.config, target / "effective-config.yaml")
    _write_json(_clean(report.provenance), target / "provenance.json")
    logger.info("Wrote %s report to %s", report.name, target)
    return target
