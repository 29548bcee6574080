"""CSV readers and writers for datasets, weight vectors and sweep results.

Floats are written with ``repr`` so a write/read cycle is exact.
"""
import csv
import os
import re

import numpy as np

from .errors import InputError
from .estimators import SampleSet

RESULT_COLUMNS = ("seed", "n", "m", "lambda", "gamma", "estimator", "weight_source",
                  "mse", "fit_seconds", "predict_seconds", "status")
TIMING_COLUMNS = ("fit_seconds", "predict_seconds")

_FEATURE = re.compile(r"x(\d+)$")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "" if np.isnan(v) else repr(float(v))
    return "" if v is None else str(v)


def _read_rows(path):
    if not os.path.exists(path):
        raise InputError(f"{path}: file not found")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise InputError(f"{path}: empty file")
    return [c.strip() for c in rows[0]], rows[1:]


def _parse_matrix(path, header, body):
    out = np.empty((len(body), len(header)))
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise InputError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        for c, cell in enumerate(row):
            try:
                out[r - 2, c] = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}: row {r}, column {c + 1} ({header[c]}): non-numeric value {cell!r}"
                ) from None
    if not np.all(np.isfinite(out)):
        bad = np.argwhere(~np.isfinite(out))[0]
        raise InputError(f"{path}: row {bad[0] + 2}, column {bad[1] + 1}: non-finite value")
    return out


def read_dataset_csv(path, require_target=False) -> SampleSet:
    """Read a ``x1,...,xd[,y]`` file."""
    header, body = _read_rows(path)
    has_y = header[-1] == "y"
    features = header[:-1] if has_y else header
    if not features or any(_FEATURE.match(h) is None or int(_FEATURE.match(h).group(1)) != i
                           for i, h in enumerate(features, start=1)):
        raise InputError(f"{path}: header must be x1,...,xd optionally followed by y")
    if require_target and not has_y:
        raise InputError(f"{path}: target column y is required")
    if not body:
        raise InputError(f"{path}: no data rows")
    data = _parse_matrix(path, header, body)
    if has_y:
        return SampleSet(data[:, :-1], data[:, -1])
    return SampleSet(data)


def write_dataset_csv(path, sample: SampleSet):
    d = sample.X.shape[1]
    header = [f"x{i}" for i in range(1, d + 1)]
    if sample.y is not None:
        header.append("y")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(sample.n):
            row = [repr(float(v)) for v in sample.X[i]]
            if sample.y is not None:
                row.append(repr(float(sample.y[i])))
            writer.writerow(row)


def read_weights_csv(path, n=None) -> np.ndarray:
    """Read a single-column ``w`` file (an ``index,weight`` file is also accepted)."""
    header, body = _read_rows(path)
    if header == ["w"]:
        col = 0
    elif header == ["index", "weight"]:
        col = 1
    else:
        raise InputError(f"{path}: expected header 'w' or 'index,weight'")
    w = _parse_matrix(path, header, body)[:, col]
    if np.any(w < 0):
        raise InputError(f"{path}: weights must be nonnegative")
    if n is not None and len(w) != n:
        raise InputError(f"{path}: {len(w)} weights for {n} training rows")
    return w


def write_weights_csv(path, w, with_index=False):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "weight"] if with_index else ["w"])
        for i, v in enumerate(np.asarray(w, dtype=np.float64)):
            writer.writerow([i, repr(float(v))] if with_index else [repr(float(v))])


def write_results_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in RESULT_COLUMNS])


def read_results_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_predictions_csv(path, predictions):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["prediction"])
        for v in predictions:
            writer.writerow([repr(float(v))])
