"""CSV and JSON readers and writers for the command-line tools.

Matrices are comma-separated without a header, one row per line, with
``NA`` marking a missing response.
"""

import csv
import json
from pathlib import Path

import numpy as np

MISSING_TOKEN = "NA"
TRACE_FIELDS = ("iteration", "q_flips", "objective", "theta_change")


class DataFormatError(ValueError):
    """Raised when an input file cannot be parsed into the expected shape."""


def write_matrix(path, M):
    """Write a 0/1 matrix; NaN (or negative) cells become ``NA``."""
    M = np.asarray(M)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in M:
            writer.writerow(
                MISSING_TOKEN if (isinstance(v, float) and np.isnan(v)) or v < 0 else int(v) for v in row.tolist()
            )


def read_matrix(path, allow_missing=False, binary=True):
    """Read a header-less CSV matrix.

    Returns an int8 array, or a float array with NaN for ``NA`` cells when
    ``allow_missing`` is set and some cell is missing.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataFormatError(f"{path} is empty")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataFormatError(f"{path}: line {i + 1} has {len(row)} fields, expected {width}")
        for k, cell in enumerate(row):
            cell = cell.strip()
            if cell == MISSING_TOKEN:
                if not allow_missing:
                    raise DataFormatError(f"{path}: missing value at line {i + 1} where none is allowed")
                out[i, k] = np.nan
                continue
            try:
                out[i, k] = float(cell)
            except ValueError:
                raise DataFormatError(f"{path}: cannot parse {cell!r} at line {i + 1}") from None
    finite = out[~np.isnan(out)]
    if binary and not np.isin(finite, (0.0, 1.0)).all():
        raise DataFormatError(f"{path}: entries must be 0, 1 or {MISSING_TOKEN}")
    if np.isnan(out).any():
        return out
    return out.astype(np.int8) if binary else out


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialize {type(v).__name__}")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path} is not valid JSON: {exc}") from exc


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_trace(path, trace):
    write_rows(path, TRACE_FIELDS, ([rec[f] for f in TRACE_FIELDS] for rec in trace))


def write_theta(path, theta_plus, theta_minus):
    rows = ((j, repr(float(p)), repr(float(m))) for j, (p, m) in enumerate(zip(theta_plus, theta_minus)))
    write_rows(path, ("item", "theta_plus", "theta_minus"), rows)


def read_theta(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        tp = np.array([float(r["theta_plus"]) for r in rows])
        tm = np.array([float(r["theta_minus"]) for r in rows])
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise DataFormatError(f"cannot read item parameters from {path}: {exc}") from exc
    return tp, tm


def write_theta_multi(path, table):
    """One row per (item, local class): active attributes, class bits, count and probability.

    ``pattern`` lists the class's bits on the active attributes in the
    order of ``attributes``.
    """
    rows = []
    for j, (act, probs, counts) in enumerate(zip(table.active, table.probs, table.counts)):
        for code, (p, n) in enumerate(zip(probs, counts)):
            bits = "".join(str((code >> b) & 1) for b in range(len(act)))
            rows.append((j, ";".join(map(str, act)), bits, int(n), repr(float(p))))
    write_rows(path, ("item", "attributes", "pattern", "count", "theta"), rows)


def read_anchors(path, n_attributes=None):
    """Anchor file: one line per frozen item, ``index[,q_1,...,q_K]``.

    Returns (indices, rows) where ``rows`` is None when only indices
    were given.
    """
    M = read_matrix(path, binary=False)
    if np.isnan(M).any() or (M < 0).any() or (M != np.round(M)).any():
        raise DataFormatError(f"{path}: anchors must be non-negative integers")
    idx = M[:, 0].astype(int)
    if M.shape[1] == 1:
        return idx, None
    rows = M[:, 1:].astype(np.int8)
    if not np.isin(rows, (0, 1)).all():
        raise DataFormatError(f"{path}: anchor Q rows must be 0/1")
    if n_attributes is not None and rows.shape[1] != n_attributes:
        raise DataFormatError(f"{path}: anchor rows have {rows.shape[1]} entries, expected K={n_attributes}")
    return idx, rows
