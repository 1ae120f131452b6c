"""Figure rendering for posterior-predictive grid CSVs and constraint files."""
from .figures import FigureSpec, RenderResult, render_classification, render_regression
from .regions import ConstraintFileError, read_constraint_file

__all__ = [
    "ConstraintFileError",
    "FigureSpec",
    "RenderResult",
    "read_constraint_file",
    "render_classification",
    "render_regression",
]
