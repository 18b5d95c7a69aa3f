"""Writing and reading the CLI's JSON and CSV files."""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from shape_control.constants import CSV_FLOAT_FORMAT
from shape_control.discretization.base import ConfigurationError

logger = logging.getLogger(__name__)


def to_jsonable(obj: Any) -> Any:
    """Convert pydantic models and numpy values to plain JSON types."""
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json", by_alias=True)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps(payload: Dict[str, Any]) -> str:
    """Stable JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(payload: Dict[str, Any], path: Optional[Union[str, Path]] = None) -> None:
    """Write JSON to ``path``, or to stdout when path is None."""
    text = dumps(payload)
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")
    logger.info(f"Wrote {path}")


def write_csv(df: pd.DataFrame, path: Union[str, Path]) -> None:
    """Comma-separated, '.' decimal, 17 significant digits."""
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.info(f"Wrote {path} ({len(df)} rows)")


def residuals_frame(residual_history: list, target_norm: float) -> pd.DataFrame:
    """Residual history as columns iteration, residual, relative_residual."""
    residuals = np.asarray(residual_history, dtype=float)
    relative = residuals / target_norm if target_norm > 0 else residuals
    return pd.DataFrame(
        {
            "iteration": np.arange(residuals.size),
            "residual": residuals,
            "relative_residual": relative,
        }
    )


def read_vector_csv(path: Union[str, Path], dimension: int) -> np.ndarray:
    """
    Read a target or initial vector.

    A file with a "value" column is read top to bottom; otherwise the last row
    of a trajectory CSV (columns t, u_i_j ...) is used without its t column.

    Raises:
        ConfigurationError: If the file is missing, unreadable or has the wrong length
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Vector file not found: {path}")
    try:
        df = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ConfigurationError(f"Cannot read {path}: {e}") from e

    try:
        if "value" in df.columns:
            vector = df["value"].to_numpy(dtype=float)
        else:
            values = df.drop(columns=[c for c in ("t",) if c in df.columns])
            if values.empty:
                raise ConfigurationError(f"{path} has no data rows")
            vector = values.iloc[-1].to_numpy(dtype=float)
    except ValueError as e:
        raise ConfigurationError(f"{path} holds non-numeric values: {e}") from e
    if vector.shape != (dimension,):
        raise ConfigurationError(f"{path} holds {vector.size} values, expected {dimension}")
    if not np.all(np.isfinite(vector)):
        raise ConfigurationError(f"{path} holds non-finite values")
    return vector


def read_tabulated_source(path: Union[str, Path], n_interior: int) -> tuple:
    """
    Read (times, values) of a tabulated source from columns t, u_i_j ....

    Raises:
        ConfigurationError: If the file is missing or malformed
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Source file not found: {path}")
    try:
        df = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ConfigurationError(f"Cannot read {path}: {e}") from e
    if "t" not in df.columns:
        raise ConfigurationError(f"{path} needs a 't' column")
    values = df.drop(columns=["t"]).to_numpy(dtype=float)
    if values.shape[1] != n_interior:
        raise ConfigurationError(f"{path} has {values.shape[1]} node columns, expected {n_interior}")
    return df["t"].to_numpy(dtype=float), values
