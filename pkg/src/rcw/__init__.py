"""Resume corpus workbench: ingest, segment, annotate, train, evaluate."""

from .corpus import LABELS, Label, parse_label
from .errors import WorkbenchError

__version__ = "0.1.0"

__all__ = ["LABELS", "Label", "WorkbenchError", "parse_label", "__version__"]
