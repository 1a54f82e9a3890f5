"""Exception types raised by the solver stack."""


class RotKrylovError(Exception):
    """Base class for all library errors."""


class EigenDecompositionError(RotKrylovError):
    def __init__(self, dim, cause=None):
        self.dim = dim
        super().__init__(f"Hermitian eigendecomposition failed for dim={dim}: {cause}")


class NotHermitian(RotKrylovError):
    def __init__(self, max_asymmetry):
        self.max_asymmetry = float(max_asymmetry)
        super().__init__(f"matrix is not Hermitian (max |a_ij - conj(a_ji)| = {max_asymmetry:.3e})")


class DimensionMismatch(RotKrylovError):
    pass


class EmptySubspace(RotKrylovError):
    """Thresholding discarded every direction of the overlap matrix."""


class AtInfinity(RotKrylovError):
    """A back-transformed eigenvalue sits on the ray beta = 0."""


class NotPositiveDefinite(RotKrylovError):
    pass


class DegenerateNormalization(RotKrylovError):
    pass


class DegenerateSpectrum(RotKrylovError):
    pass


class ParseError(RotKrylovError):
    pass


class InsufficientBatches(RotKrylovError):
    pass


class AllAnglesEmpty(RotKrylovError):
    pass


class ConfigError(RotKrylovError):
    pass
