"""Expression-verification game platform with a self-updating CNN engine."""

from .labels import ExpressionLabel, LABEL_NAMES, N_CLASSES
from .nn import ExpressionCnn, build_initial_cnn

__all__ = ["ExpressionLabel", "LABEL_NAMES", "N_CLASSES", "ExpressionCnn", "build_initial_cnn"]
__version__ = "0.1.0"
