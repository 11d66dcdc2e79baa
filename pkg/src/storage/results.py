"""
Result files: CSV tables and JSON summaries, written atomically and only
inside the configured output directory.
"""

import dataclasses
import json
import logging
import os
import tempfile
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from errors import ConfigError, OutputError
from settings import settings

logger = logging.getLogger(__name__)


def ensure_output_dir(out_dir: str) -> str:
    path = os.path.abspath(out_dir)
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {path}: {e}") from e
    return path


def resolve_output(out_dir: str, name: str) -> str:
    """Absolute path of `name` inside out_dir; anything escaping it is refused."""
    root = os.path.realpath(out_dir)
    path = os.path.realpath(os.path.join(root, name))
    if os.path.commonpath([root, path]) != root or path == root:
        raise OutputError(f"refusing to write {name!r} outside {root}")
    return path


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as e:
        raise OutputError(f"failed to write {path}: {e}") from e
    logger.debug(f"Wrote {path}")


def _as_mapping(row: Any) -> Mapping[str, Any]:
    if dataclasses.is_dataclass(row):
        return dataclasses.asdict(row)
    return row


def emit_results(
    rows: Iterable[Any],
    schema: Sequence[str],
    path: str,
    float_format: Optional[str] = None,
) -> str:
    """
    RFC 4180 CSV with a header row and columns in schema order. Rows are
    mappings or dataclasses holding exactly the schema's columns.
    """
    records: List[Dict[str, Any]] = []
    for index, row in enumerate(rows):
        mapping = _as_mapping(row)
        missing = [c for c in schema if c not in mapping]
        if missing:
            raise ConfigError(f"row {index} is missing columns {missing}")
        records.append({c: mapping[c] for c in schema})

    frame = pd.DataFrame.from_records(records, columns=list(schema))
    text = frame.to_csv(
        index=False,
        float_format=float_format or settings.output.float_format,
        lineterminator="\r\n",
    )
    atomic_write_text(path, text)
    logger.info(f"Wrote {len(records)} rows to {path}")
    return path


def read_results(path: str) -> pd.DataFrame:
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except OSError as e:
        raise OutputError(f"failed to read {path}: {e}") from e


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def summary_text(experiment: str, params: Dict[str, Any], seed: Optional[int], outputs: Dict[str, Any]) -> str:
    document = {"experiment": experiment, "params": params, "seed": seed, "outputs": outputs}
    return json.dumps(document, indent=2, allow_nan=False, default=_json_default) + "\n"


def write_summary(
    path: str,
    experiment: str,
    params: Dict[str, Any],
    seed: Optional[int],
    outputs: Dict[str, Any],
) -> str:
    try:
        text = summary_text(experiment, params, seed, outputs)
    except (TypeError, ValueError) as e:
        raise OutputError(f"summary for {experiment} is not valid JSON: {e}") from e
    atomic_write_text(path, text)
    return path
