# utils.py
import json
import logging
import math
from pathlib import Path
from typing import Any, List, Optional

import numpy as np

from iso_lab.constants import LOG_FILE
from iso_lab.errors import InvalidInputError


def setup_logging(log_file: Optional[str] = LOG_FILE, level: int = logging.INFO) -> None:
    """Sets up the logging configuration.

    Args:
        log_file (str): The file to which logs will be written; None logs to stderr only.
        level (int): The logging level.
    """
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        handlers.insert(0, logging.FileHandler(log_file))
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )


def to_jsonable(value: Any) -> Any:
    """Converts numpy scalars/arrays and non-finite floats into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps_json(data: Any) -> str:
    return json.dumps(to_jsonable(data), indent=2)


def load_json(file_path: str) -> dict:
    """
    Loads a JSON file and returns its contents.

    Args:
        file_path (str): Path to the JSON file.
    """
    try:
        with open(file_path, 'r') as file:
            data = json.load(file)
        logging.info(f"Loaded JSON data from {file_path}")
        return data
    except FileNotFoundError:
        logging.error(f"File {file_path} not found.")
        raise
    except json.JSONDecodeError:
        logging.error(f"Error decoding JSON from {file_path}.")
        raise


def save_json(data: Any, output_file: str) -> None:
    """Writes a result record to JSON.

    Args:
        data: Dictionary (or list) produced by one of the ``to_dict`` methods.
        output_file (str): Path to the output JSON file.
    """
    Path(output_file).write_text(dumps_json(data) + "\n")
    logging.info(f"Results saved to {output_file}")


def read_weights_file(file_path: str, n: int) -> np.ndarray:
    """Reads one nonnegative decimal per line (blank lines ignored) and checks the length is n."""
    try:
        lines = [line.strip() for line in Path(file_path).read_text().splitlines() if line.strip()]
    except FileNotFoundError:
        logging.error(f"Weights file {file_path} not found.")
        raise InvalidInputError(f"Weights file {file_path} not found.")
    try:
        weights = np.array([float(line) for line in lines], dtype=float)
    except ValueError as e:
        raise InvalidInputError(f"Weights file {file_path}: {e}")
    if weights.size != n:
        raise InvalidInputError(f"Weights file {file_path} has {weights.size} entries, expected {n}.")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise InvalidInputError(f"Weights file {file_path} must contain finite nonnegative numbers.")
    return weights
