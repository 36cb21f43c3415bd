"""
Utility functions for the scl-entropy package
"""

import json
import math
import os
from typing import Any, Callable, Dict, List, Optional, Tuple

from tqdm import tqdm

from .errors import ConfigError, DomainError
from .experiments import BoundReport, ExperimentConfig
from .flux_analysis import FluxModel, flux_from_spec
from .solver import PiecewiseConstantFn


def validate_flux_spec(spec: Dict[str, Any]) -> Tuple[bool, Optional[str]]:
    """
    Validate a flux specification.

    Args:
        spec: Either {"kind", "m", "coeffs", "M"} or {"name", "M", ["m"], ["mirrored"]}

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(spec, dict):
        return False, "Flux specification must be a dictionary"
    if "name" not in spec and "coeffs" not in spec:
        return False, "Flux specification needs either 'name' or 'coeffs'"
    try:
        flux_from_spec(spec)
    except (ConfigError, DomainError) as e:
        return False, str(e)
    except (TypeError, ValueError) as e:
        return False, f"Flux specification error: {e}"
    return True, None


def validate_experiment_config(data: Dict[str, Any]) -> Tuple[bool, Optional[str]]:
    """
    Validate an experiment configuration dictionary, including its flux.

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(data, dict):
        return False, "Experiment configuration must be a dictionary"
    try:
        config = ExperimentConfig.from_dict(data)
    except ConfigError as e:
        return False, str(e)
    flux_spec = dict(config.flux)
    flux_spec["M"] = config.M
    return validate_flux_spec(flux_spec)


def _load_json(path: str, what: str) -> Any:
    if not os.path.exists(path):
        raise FileNotFoundError(f"{what} file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in {path}: {e}")


def save_json(data: Any, output_path: str) -> None:
    with open(output_path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)


def load_flux_spec(path: str) -> Dict[str, Any]:
    """
    Load and validate a flux specification file.

    Raises:
        FileNotFoundError: If the file doesn't exist
        ConfigError: If the file is not valid JSON or not a valid flux
    """
    spec = _load_json(path, "Flux specification")
    is_valid, error_msg = validate_flux_spec(spec)
    if not is_valid:
        raise ConfigError(f"Invalid flux specification in {path}: {error_msg}")
    return spec


def save_flux_spec(flux: FluxModel, output_path: str) -> None:
    save_json(flux.to_spec(), output_path)


def load_experiment_config(path: str) -> ExperimentConfig:
    """Load an experiment configuration file (raises ConfigError when invalid)."""
    data = _load_json(path, "Experiment configuration")
    is_valid, error_msg = validate_experiment_config(data)
    if not is_valid:
        raise ConfigError(f"Invalid experiment configuration in {path}: {error_msg}")
    return ExperimentConfig.from_dict(data)


def load_function(path: str) -> PiecewiseConstantFn:
    """Load a step function stored as {"breakpoints": [...], "values": [...]}."""
    data = _load_json(path, "Function")
    if not isinstance(data, dict) or "breakpoints" not in data or "values" not in data:
        raise ConfigError(f"{path} must hold 'breakpoints' and 'values'")
    try:
        return PiecewiseConstantFn.from_dict(data)
    except DomainError as e:
        raise ConfigError(f"Invalid function in {path}: {e}")


def save_function(u: PiecewiseConstantFn, output_path: str) -> None:
    save_json(u.to_dict(), output_path)


def format_duration(seconds: float) -> str:
    """
    Format duration in seconds to human-readable string.

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted duration string
    """
    if seconds < 60:
        return f"{seconds:.1f} seconds"
    elif seconds < 3600:
        return f"{seconds / 60:.1f} minutes"
    return f"{seconds / 3600:.1f} hours"


def format_log2(value: Optional[float]) -> str:
    """Render a base-2 logarithm of a count as 2^x, or n/a."""
    if value is None or not math.isfinite(value):
        return "n/a"
    return f"2^{value:.4g}"


def create_progress_callback(verbose: bool = True, description: str = "scl-entropy") -> Callable[[str, int, int], None]:
    """
    Create a tqdm-backed progress callback.

    Args:
        verbose: Whether to show the progress bar at all
        description: Label shown in front of the bar

    Returns:
        Progress callback function (message, current, total)
    """
    state: Dict[str, Any] = {"bar": None}

    def progress_callback(message: str, current: int, total: int):
        if not verbose:
            return
        bar = state["bar"]
        if bar is None or bar.total != total:
            if bar is not None:
                bar.close()
            bar = tqdm(total=total, desc=description, leave=False)
            state["bar"] = bar
        bar.set_postfix_str(message)
        bar.update(current - bar.n)
        if current >= total:
            bar.close()
            state["bar"] = None

    return progress_callback


def report_rows_for_display(report: BoundReport) -> List[Dict[str, Any]]:
    """Rows of a BoundReport rounded for tables (CLI and web UI)."""
    rows = []
    for row in report.rows:
        rows.append({
            "eps": float(f"{row.eps:.6g}"),
            "packing_log2": round(row.packing_log2, 4),
            "cover_log2": round(row.cover_log2, 4),
            "witness_log2": round(row.witness_log2, 4) if math.isfinite(row.witness_log2) else None,
            "analytic_upper": float(f"{row.analytic_upper:.6g}") if math.isfinite(row.analytic_upper) else None,
            "analytic_lower": float(f"{row.analytic_lower:.6g}") if math.isfinite(row.analytic_lower) else None,
            "consistent": row.consistent,
        })
    return rows
