"""Canonical expression labels shared by every module and file format."""

from enum import IntEnum


class ExpressionLabel(IntEnum):
    """The seven expression classes, in fixed canonical order (index 0..6)."""

    ANGRY = 0
    DISGUST = 1
    FEAR = 2
    HAPPY = 3
    NEUTRAL = 4
    SAD = 5
    SURPRISE = 6


LABEL_NAMES = tuple(lbl.name.capitalize() for lbl in ExpressionLabel)
N_CLASSES = len(ExpressionLabel)


def check_label(label) -> int:
    """Coerce to a canonical class index, rejecting anything outside 0..6."""
    idx = int(label)
    if not 0 <= idx < N_CLASSES:
        raise ValueError(f"label index {idx} outside [0, {N_CLASSES - 1}]")
    return idx
