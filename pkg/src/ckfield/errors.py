"""Exception types shared across the toolkit."""


class CkfieldError(Exception):
    """Base class for all toolkit errors."""


class FrameUndefined(CkfieldError):
    """Requested frame data at a point where w or |Y| is below threshold."""


class ZeroField(CkfieldError):
    """All field parameters vanish."""


class NotSimpleRotation(CkfieldError):
    """Parameters violate the X . curl X = 0 conditions beyond tolerance."""


class UnknownIdentity(CkfieldError, KeyError):
    """Identity id not present in the registry."""


class NotAdmissible(CkfieldError):
    """Field has isolated fixed points; integral curves are out of scope."""


class NotClosed(CkfieldError):
    """Operation requires a closed integral curve."""


class BlowUp(CkfieldError):
    """Integral curve left the escape radius (finite-time blow-up)."""


class NotParallel(CkfieldError):
    """Potential's field is not parallel to the given conformal Killing field."""


class SupportViolation(CkfieldError):
    """Test spinor is non-negligible on the quadrature box boundary or near {w=0}."""


class ConstructionFailed(CkfieldError):
    """A self-certifying construction failed its own verification."""


class NoConvergence(CkfieldError):
    """Iterative eigensolver did not reach the requested tolerance."""


class GridTooLarge(CkfieldError):
    """Requested grid exceeds the configured memory cap."""
