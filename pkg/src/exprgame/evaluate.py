"""Confusion matrices and accuracy reporting.

Rows are true classes normalized to distributions; "average accuracy" is
count-weighted (micro) because only that reproduces the reference table
arithmetic, with the unweighted macro mean reported alongside. Empty
classes yield undefined rows, excluded from the macro and rendered "n/a".
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .labels import LABEL_NAMES, N_CLASSES


@dataclass(frozen=True)
class EvalReport:
    matrix: tuple              # 7x7 row-normalized; undefined rows all-zero
    counts: tuple              # per-class sample counts
    per_class: tuple           # diagonal (None where undefined)
    micro: float
    macro: float
    dataset_id: str = ""
    model_id: str = ""


def confusion_from_predictions(y_true, y_pred):
    """Row-normalized 7x7 matrix plus per-class counts from label pairs."""
    y_true = np.asarray(y_true, dtype=np.intp)
    y_pred = np.asarray(y_pred, dtype=np.intp)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ContractError("prediction/label shape mismatch")
    raw = np.zeros((N_CLASSES, N_CLASSES), dtype=np.float64)
    for t, p in zip(y_true, y_pred):
        raw[t, p] += 1
    counts = raw.sum(axis=1)
    matrix = np.zeros_like(raw)
    nonzero = counts > 0
    matrix[nonzero] = raw[nonzero] / counts[nonzero, None]
    return matrix, counts.astype(int)


def micro_average(matrix, counts) -> float:
    """Count-weighted mean of the diagonal."""
    m = np.asarray(matrix, dtype=np.float64)
    c = np.asarray(counts, dtype=np.float64)
    if m.shape != (N_CLASSES, N_CLASSES) or c.shape != (N_CLASSES,):
        raise ContractError("expected a 7x7 matrix and 7 counts")
    total = c.sum()
    if total <= 0:
        raise ContractError("total count must be positive")
    return float((c * np.diag(m)).sum() / total)


def macro_average(matrix, counts) -> float:
    """Unweighted mean of the diagonal over defined (non-empty) classes."""
    diag = np.diag(np.asarray(matrix, dtype=np.float64))
    defined = np.asarray(counts) > 0
    if not defined.any():
        raise ContractError("no defined classes")
    return float(diag[defined].mean())


def _report(y_true, y_pred, dataset_id, model_id) -> EvalReport:
    matrix, counts = confusion_from_predictions(y_true, y_pred)
    per_class = tuple(float(matrix[i, i]) if counts[i] > 0 else None
                      for i in range(N_CLASSES))
    return EvalReport(
        matrix=tuple(map(tuple, matrix)), counts=tuple(int(c) for c in counts),
        per_class=per_class, micro=micro_average(matrix, counts),
        macro=macro_average(matrix, counts), dataset_id=dataset_id, model_id=model_id)


def evaluate(model, X, y, dataset_id="", model_id=None) -> EvalReport:
    """Argmax evaluation of a fitted classifier on a test set."""
    y = np.asarray(y)
    if y.size == 0:
        raise ContractError("empty test set")
    preds = model.predict(np.asarray(X))
    mid = model_id if model_id is not None else getattr(model, "model_id_", "")
    return _report(y, preds, dataset_id, mid)


def cross_evaluate(model, X, y, dataset_id, model_id=None) -> EvalReport:
    """Same arithmetic as evaluate; the foreign dataset id is recorded as given."""
    return evaluate(model, X, y, dataset_id=dataset_id, model_id=model_id)


def render_report_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    buf.write("true_class," + ",".join(LABEL_NAMES) + ",count,accuracy\n")
    for i, name in enumerate(LABEL_NAMES):
        if report.counts[i] > 0:
            row = ",".join(f"{v:.2f}" for v in report.matrix[i])
            acc = f"{report.per_class[i]:.2f}"
        else:
            row = ",".join("n/a" for _ in range(N_CLASSES))
            acc = "n/a"
        buf.write(f"{name},{row},{report.counts[i]},{acc}\n")
    buf.write(f"micro_average,{report.micro:.2f}\n")
    buf.write(f"macro_average,{report.macro:.2f}\n")
    return buf.getvalue()


def render_report_text(report: EvalReport) -> str:
    width = max(len(n) for n in LABEL_NAMES) + 1
    heads = "".join(f"{n[:3]:>6}" for n in LABEL_NAMES)
    lines = [f"dataset={report.dataset_id or '-'} model={report.model_id or '-'}",
             f"{'':{width}}{heads}{'count':>8}"]
    for i, name in enumerate(LABEL_NAMES):
        if report.counts[i] > 0:
            cells = "".join(f"{v:6.2f}" for v in report.matrix[i])
        else:
            cells = "".join(f"{'n/a':>6}" for _ in range(N_CLASSES))
        lines.append(f"{name:{width}}{cells}{report.counts[i]:>8}")
    lines.append(f"micro average: {report.micro:.2f}   macro average: {report.macro:.2f}")
    return "\n".join(lines) + "\n"
