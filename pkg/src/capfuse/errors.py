"""Exception hierarchy shared across the package.

Three branches matter to callers: ``ConfigError`` (bad configuration, CLI
exit code 2), ``BackendError`` (a remote scorer or LLM endpoint failed,
exit code 3) and ``DataError`` (malformed or inconsistent inputs, exit
code 4). Everything raised by this package derives from ``CapfuseError``.
"""

from __future__ import annotations


class CapfuseError(Exception):
    """Base class for all package errors."""


class ConfigError(CapfuseError):
    """Invalid or incomplete configuration."""


class DataError(CapfuseError):
    """Malformed, missing or inconsistent input data."""


class BackendError(CapfuseError):
    """A remote backend (scorer or LLM) failed."""


# --- corpus ---------------------------------------------------------------

class MalformedRecord(DataError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateImageId(DataError):
    def __init__(self, image_id: str):
        super().__init__(f"duplicate image_id {image_id!r}")
        self.image_id = image_id


class DuplicateModelId(DataError):
    def __init__(self, image_id: str, model_id: str):
        super().__init__(f"image {image_id!r}: duplicate model_id {model_id!r}")
        self.image_id = image_id
        self.model_id = model_id


class DuplicateId(DataError):
    """An id appears more than once in a split input."""


class SizeMismatch(DataError):
    """Requested split sizes do not sum to the number of ids."""


# --- scoring and ranking --------------------------------------------------

class DimensionMismatch(DataError):
    """Paired embeddings have different lengths."""


class NotNormalized(DataError):
    def __init__(self, norm: float):
        super().__init__(f"embedding norm {norm!r} is not 1 within 1e-6")
        self.norm = norm


class OutOfRange(DataError):
    def __init__(self, field: str, value: float):
        super().__init__(f"{field}={value!r} outside the valid range")
        self.field = field
        self.value = value


class MissingScore(DataError):
    def __init__(self, image_id: str, model_id: str):
        super().__init__(f"no score for image {image_id!r}, model {model_id!r}")
        self.image_id = image_id
        self.model_id = model_id


class BackendUnavailable(BackendError):
    """The scorer backend refused or failed the request."""


class TooFewCandidates(DataError):
    def __init__(self, image_id: str, count: int):
        super().__init__(f"image {image_id!r} has {count} candidate(s); need at least 2")
        self.image_id = image_id
        self.count = count


class EmptyInput(DataError):
    """An operation that needs at least one element received none."""


class EmptyGroup(DataError):
    def __init__(self, model_id: str):
        super().__init__(f"model {model_id!r} has no scores")
        self.model_id = model_id


# --- fusion ---------------------------------------------------------------

class BadTemplate(ConfigError):
    """Prompt template does not contain each caption slot exactly once."""


class EmptyCaption(DataError):
    """A caption passed to fusion is empty."""


class FusionClientError(BackendError):
    """Base for LLM client failures; carries the rendered prompt."""

    def __init__(self, message: str, prompt: str = ""):
        super().__init__(message)
        self.prompt = prompt


class ClientTimeout(FusionClientError):
    """The LLM endpoint timed out (retryable)."""


class ClientRefused(FusionClientError):
    """The LLM endpoint refused the request (not retryable)."""


class EmptyResponse(FusionClientError):
    """The LLM returned an empty completion."""


# --- metrics --------------------------------------------------------------

class EmptyCandidateList(DataError):
    """Corpus metric received no candidates."""


class EmptyReferenceSet(DataError):
    def __init__(self, index: int):
        super().__init__(f"candidate {index} has an empty reference set")
        self.index = index


class LengthMismatch(DataError):
    """Candidates and reference sets differ in length."""


class SetTooSmall(DataError):
    def __init__(self, index: int, size: int):
        super().__init__(f"caption set {index} has {size} caption(s); need at least 2")
        self.index = index
        self.size = size


class EmptySet(DataError):
    """A caption set or group is empty."""


class TaggerFailure(DataError):
    def __init__(self, detail: str):
        super().__init__(f"tagger failed: {detail}")
        self.detail = detail


class KeyMismatch(DataError):
    def __init__(self, detail: str):
        super().__init__(f"inputs are misaligned: {detail}")
        self.detail = detail


# --- study ----------------------------------------------------------------

class TooFewOptions(DataError):
    """A ballot needs at least two options."""


class UnknownBallot(DataError):
    def __init__(self, ballot_id: str):
        super().__init__(f"unknown ballot {ballot_id!r}")
        self.ballot_id = ballot_id


class DuplicateVote(DataError):
    """The ballot was already answered, or the worker already voted on this image."""


class ClassQuotaExceeded(DataError):
    def __init__(self, image_id: str, worker_class: str, quota: int):
        super().__init__(
            f"image {image_id!r} already has {quota} {worker_class} vote(s)"
        )
        self.image_id = image_id
        self.worker_class = worker_class
        self.quota = quota


class InvalidChoice(DataError):
    def __init__(self, choice: str):
        super().__init__(f"choice {choice!r} is not an option on this ballot")
        self.choice = choice


class UnresolvableKey(DataError):
    def __init__(self, key: str):
        super().__init__(f"option key {key!r} has no model mapping")
        self.key = key


# --- pipeline -------------------------------------------------------------

class PipelineStageError(CapfuseError):
    """A pipeline stage failed for one image; successes are persisted first."""

    def __init__(self, stage: str, image_id: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed for image {image_id!r}: {cause}")
        self.stage = stage
        self.image_id = image_id
        self.cause = cause
