"""Exception hierarchy shared by every sharekit layer."""

from __future__ import annotations


class ShareError(Exception):
    """Base class for all sharekit failures."""


# kernels


class InvalidPair(ShareError, ValueError):
    pass


class NonResidue(ShareError, ValueError):
    """Raised when a square root is requested for a non-square; in NT24 (2,4)
    recovery this means the shares were corrupted."""


class RandomOutOfRange(ShareError, ValueError):
    pass


# shamir baseline


class BadParams(ShareError, ValueError):
    pass


class DuplicateX(ShareError, ValueError):
    pass


# container / engine


class FormatError(ShareError):
    """A share file could not be parsed."""


class BadMagic(FormatError):
    pass


class BadVersion(FormatError):
    pass


class UnknownScheme(FormatError):
    pass


class BadIndex(FormatError):
    pass


class SchemeMismatch(ShareError):
    pass


class DuplicateIndex(ShareError):
    pass


class LengthMismatch(ShareError):
    pass


class CrcMismatch(ShareError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


# dispersal


class EndpointCountMismatch(ShareError):
    pass


class EndpointUnreachable(ShareError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"endpoint for share {index} unreachable: {reason}")
        self.index = index
        self.reason = reason


class PartialWrite(ShareError):
    def __init__(self, stored: list[int], failed: dict[int, str]):
        detail = ", ".join(f"{i}: {r}" for i, r in sorted(failed.items()))
        super().__init__(
            f"dispersal incomplete; stored shares {sorted(stored)}, failed {detail}"
        )
        self.stored = sorted(stored)
        self.failed = dict(failed)


class InsufficientShares(ShareError):
    def __init__(self, message: str, failures: dict[int, str] | None = None):
        super().__init__(message)
        self.failures = dict(failures or {})


class ManifestError(ShareError):
    pass


class BindFailure(ShareError, OSError):
    pass
