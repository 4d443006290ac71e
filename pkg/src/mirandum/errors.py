"""Error taxonomy shared across the platform.

Every failure surfaced to callers carries a stable ``code`` string so tests
and API clients can match on codes, never on message text.
"""

from __future__ import annotations

from typing import Any


class MirandumError(Exception):
    """Base class; ``code`` identifies the failure, ``details`` carry context."""

    code = "INTERNAL"

    def __init__(self, message: str, *, path: str | None = None, **details: Any):
        super().__init__(message)
        self.message = message
        self.path = path
        self.details = details


# --- direction / model construction ---

class PitchRangeError(MirandumError):
    code = "PITCH_RANGE"


class NonFiniteError(MirandumError):
    code = "NON_FINITE"


class ManifestParseError(MirandumError):
    code = "MANIFEST_PARSE"


class InvalidManifestError(MirandumError):
    """Raised when an operation requires a servable manifest; carries the report."""

    code = "INVALID_MANIFEST"

    def __init__(self, message: str, report: Any, **details: Any):
        super().__init__(message, **details)
        self.report = report


# --- content store ---

class NotFoundError(MirandumError):
    code = "NOT_FOUND"


class EmptyPayloadError(MirandumError):
    code = "EMPTY_PAYLOAD"


class DuplicateContentIdError(MirandumError):
    code = "DUPLICATE_CONTENT_ID"


class IoFailureError(MirandumError):
    code = "IO_FAILURE"


class CorruptBlobError(MirandumError):
    code = "CORRUPT_BLOB"


class StillReferencedError(MirandumError):
    """Removal refused; ``details['asset_ids']`` lists the binding assets."""

    code = "STILL_REFERENCED"


# --- federation ---

class DuplicateRepoIdError(MirandumError):
    code = "DUPLICATE_REPO_ID"


class MalformedUriError(MirandumError):
    code = "MALFORMED_URI"


class UnknownRepoError(MirandumError):
    code = "UNKNOWN_REPO"


class ObjectTooLargeError(MirandumError):
    code = "OBJECT_TOO_LARGE"


class UpstreamUnavailableError(MirandumError):
    """A proxied external fetch could not be served fresh or from cache."""

    code = "UPSTREAM_UNAVAILABLE"


# --- analytics ---

class MalformedEventError(MirandumError):
    """``details['field']`` names the missing or invalid field."""

    code = "MALFORMED_EVENT"


# --- simulator ---

class EmptyBundleError(MirandumError):
    code = "EMPTY_BUNDLE"


class ScriptActionError(MirandumError):
    """``details['step']`` is the 0-based index of the offending script step."""

    code = "SCRIPT_ILLEGAL_ACTION"


# --- gateway layer ---

class UnauthorizedError(MirandumError):
    code = "UNAUTHORIZED"


class RevisionConflictError(MirandumError):
    code = "REVISION_CONFLICT"


class BatchTooLargeError(MirandumError):
    code = "BATCH_TOO_LARGE"
