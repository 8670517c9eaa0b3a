"""Exception types raised by the public operations.

All of them derive from :class:`ChernLabError` (itself a ``ValueError``), so
callers that do not care about the fine distinctions can catch a single type.
"""


class ChernLabError(ValueError):
    """Base class for all validation / numerical-contract failures."""


class SingularInput(ChernLabError):
    """Matrix is numerically singular where an invertible one is required."""


class NotUnitary(ChernLabError):
    pass


class NotSkew(ChernLabError):
    pass


class NotProjection(ChernLabError):
    pass


class NotIsometry(ChernLabError):
    pass


class BadResolution(ChernLabError):
    """Grid resolution below the per-kind minimum (or wrong parity)."""


class DegreeMismatch(ChernLabError):
    pass


class DegreeOverflow(ChernLabError):
    """Requested form degree exceeds the domain dimension."""


class ArityTooLarge(ChernLabError):
    pass


class ShapeMismatch(ChernLabError):
    pass


class AsymmetricWindow(ChernLabError):
    """Operation requires a polarized window with n_plus == n_minus."""


class BadPathStart(ChernLabError):
    """Conjugation path does not start at the identity."""


class DegenerateFrame(ChernLabError):
    """Frame columns are numerically dependent."""


class BandwidthViolation(ChernLabError):
    """Fourier content outside the declared band exceeds tolerance."""


class WindowTooSmall(ChernLabError):
    pass


class NotALoop(ChernLabError):
    """Endpoint slices of a would-be loop disagree."""


class LostRank(ChernLabError):
    """Transported frame degenerated during parallel transport."""


class UnsupportedDomain(ChernLabError):
    """Requested invariant is not complete on this base domain."""


class NotBasedAtIdentity(ChernLabError):
    """Homotopy does not start at the basepoint."""
