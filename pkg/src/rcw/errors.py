"""Exception hierarchy shared across the workbench.

Every error raised on a data path derives from WorkbenchError so the CLI
can map it to exit code 1 with a one-line message; anything else is a bug.
"""


class WorkbenchError(Exception):
    """Base class for all expected data/usage failures."""

    code = "error"

    def one_line(self) -> str:
        return f"{self.code}: {self}"


# --- ingest ---------------------------------------------------------------

class MalformedDocument(WorkbenchError):
    code = "malformed-document"


class UnsupportedFormat(WorkbenchError):
    code = "unsupported-format"


# --- corpus ---------------------------------------------------------------

class UnknownLabel(WorkbenchError):
    code = "unknown-label"


class FormatError(WorkbenchError):
    code = "format-error"


class DuplicateDocId(WorkbenchError):
    code = "duplicate-doc-id"


class BadRatios(WorkbenchError):
    code = "bad-ratios"


class EmptyCorpus(WorkbenchError):
    code = "empty-corpus"


# --- annotation service ----------------------------------------------------

class UnknownSession(WorkbenchError):
    code = "unknown-session"


class IndexOutOfRange(WorkbenchError):
    code = "index-out-of-range"


class IncompleteAnnotation(WorkbenchError):
    code = "incomplete-annotation"

    def __init__(self, unlabeled: list[int]):
        super().__init__(f"unlabeled sentence indices: {unlabeled}")
        self.unlabeled = list(unlabeled)


class QueueEmpty(WorkbenchError):
    code = "queue-empty"


# --- modeling ---------------------------------------------------------------

class EmptyDataset(WorkbenchError):
    code = "empty-dataset"


class NonFiniteLoss(WorkbenchError):
    code = "non-finite-loss"


class DimensionMismatch(WorkbenchError):
    code = "dimension-mismatch"


class VersionMismatch(WorkbenchError):
    code = "version-mismatch"


class CorruptFile(WorkbenchError):
    code = "corrupt-file"


# --- evaluation --------------------------------------------------------------

class LengthMismatch(WorkbenchError):
    code = "length-mismatch"


class EmptyInput(WorkbenchError):
    code = "empty-input"


class SizeExceedsPool(WorkbenchError):
    code = "size-exceeds-pool"
