from __future__ import annotations

import json
import math
from typing import IO, Mapping, Sequence

import numpy as np


class ExportError(ValueError):
    """Inconsistent inputs: shape mismatch or non-finite attribution values."""


def _as_matrix(values, what: str) -> np.ndarray:
    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim != 2:
        raise ExportError(f"{what} must be 2-dimensional (instances x features), got shape {matrix.shape}")
    return matrix


def export_attributions(
    attributions: np.ndarray | Sequence[Sequence[float]] | Mapping[str, np.ndarray],
    feature_names: Sequence[str],
    true_labels: Sequence[str],
    predicted_labels: Sequence[str],
    ids: Sequence[str],
    out: IO[str],
) -> int:
    """Write one interchange JSONL line per instance; returns the line count.

    ``attributions`` is either one (instances x features) matrix, or — for
    multiclass explainers that emit one matrix per class — a mapping from
    class label to such a matrix, in which case each instance exports the
    row from its *predicted* class's matrix.

    Raises ExportError on any shape mismatch, and on non-finite attribution
    values (naming the offending instance and feature).
    """
    n = len(ids)
    if not (len(true_labels) == len(predicted_labels) == n):
        raise ExportError(
            f"row mismatch: {n} ids, {len(true_labels)} true labels, "
            f"{len(predicted_labels)} predicted labels"
        )
    m = len(feature_names)
    if m == 0:
        raise ExportError("feature_names is empty")

    if isinstance(attributions, Mapping):
        per_class = {label: _as_matrix(mat, f"attributions[{label!r}]") for label, mat in attributions.items()}
        for label, matrix in per_class.items():
            if matrix.shape != (n, m):
                raise ExportError(
                    f"attributions[{label!r}] has shape {matrix.shape}, expected ({n}, {m})"
                )
        missing = sorted({p for p in predicted_labels if p not in per_class})
        if missing:
            raise ExportError(f"no attribution matrix for predicted class(es): {', '.join(missing)}")

        def row_for(i: int) -> np.ndarray:
            return per_class[predicted_labels[i]][i]

    else:
        matrix = _as_matrix(attributions, "attributions")
        if matrix.shape != (n, m):
            raise ExportError(f"attributions has shape {matrix.shape}, expected ({n}, {m})")

        def row_for(i: int) -> np.ndarray:
            return matrix[i]

    names = [str(name) for name in feature_names]
    written = 0
    for i in range(n):
        row = row_for(i)
        values = [float(v) for v in row]
        for name, value in zip(names, values):
            if not math.isfinite(value):
                raise ExportError(
                    f"non-finite attribution {value!r} for instance {ids[i]!r}, feature {name!r}"
                )
        payload = {
            "id": str(ids[i]),
            "true_class": str(true_labels[i]),
            "predicted_class": str(predicted_labels[i]),
            "attributions": [
                {"feature": name, "value": value} for name, value in zip(names, values)
            ],
        }
        out.write(json.dumps(payload, ensure_ascii=False) + "\n")
        written += 1
    return written
