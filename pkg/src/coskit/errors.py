"""Exception types shared across the package."""


class CosError(Exception):
    """Base class for every error raised by this package."""


# --- toolkit files ---

class MalformedFile(CosError):
    """Toolkit file is not a parseable record or violates tool invariants."""


class DuplicateToolName(CosError):
    """Two tools in one toolkit share a name."""


class EmptyToolkit(CosError):
    """Toolkit contains no tools."""


class UnknownToolName(CosError):
    """A selection references a tool name absent from the toolkit."""


# --- model backends ---

class BackendError(CosError):
    """Base class for model-backend failures."""


class NetworkError(BackendError):
    """HTTP backend could not complete the request within its retry budget."""


class Timeout(BackendError):
    """HTTP backend request exceeded its configured timeout."""


class CassetteMiss(BackendError):
    """Deterministic backend has no response recorded for this request."""


# --- solving engine ---

class UnparseableToolkitOutput(CosError):
    """Model output for toolkit creation contained no tool blocks."""


class EmptyDecision(CosError):
    """Calling-stage model output was blank or yielded no code."""


class InvalidLabels(CosError):
    """Useful/redundant label sets do not partition the toolkit names."""


# --- metrics ---

class UnknownToolInCall(CosError):
    """A called tool name is not covered by the labels."""


# --- sandbox host ---

class SpawnFailure(CosError):
    """Runner process could not be started (missing or unconfigured)."""


# --- evaluation harness ---

class MalformedTask(CosError):
    """Task file is unparseable or inconsistent with the requested run."""


class MissingToolkit(CosError):
    """Task references a toolkit file that does not exist."""


# --- data construction ---

class NoCodeBlock(CosError):
    """A combined response has no fenced code block to split on."""


class UnverifiedRecord(CosError):
    """Export refused because the dataset contains unverified records."""
