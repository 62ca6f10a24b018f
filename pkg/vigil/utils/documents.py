"""Structured-text documents: JSON through ujson, CSV tables, both with 12 significant digits."""
import csv
import os
import typing

import numpy as np
import ujson

from ..exceptions import DocumentError
from .helper import create_dir_when_none

SIGNIFICANT_DIGITS = 12


def format_number(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.{SIGNIFICANT_DIGITS}g}"


def to_plain(obj):
    """Numpy-free copy of ``obj`` with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.{SIGNIFICANT_DIGITS}g}")
    return obj


def dumps(document) -> str:
    return ujson.dumps(to_plain(document), indent=2)


def loads(text: str):
    try:
        return ujson.loads(text)
    except ValueError as e:
        raise DocumentError(f"Malformed JSON document: {e}")


def read_document(path: str):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return loads(f.read())
    except OSError as e:
        raise DocumentError(f"Cannot read document {path}: {e}")


def write_document(path: str, document) -> str:
    create_dir_when_none(os.path.dirname(path))
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(document))
        f.write("\n")
    return path


def write_csv(path: str, header: typing.Sequence[str], rows: typing.Iterable[typing.Sequence]) -> str:
    create_dir_when_none(os.path.dirname(path))
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [cell if isinstance(cell, str) else format_number(cell) for cell in row]
            )
    return path


def read_csv(path: str) -> typing.List[dict]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))
