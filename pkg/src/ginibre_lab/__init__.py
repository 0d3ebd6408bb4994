"""Numerical laboratory for the complex Ginibre ensemble: moments, matchings, eigenvector overlaps,
exact kernels, the moment-constraint ledger and the adiabatic transfer-matrix scheme."""

__version__ = "0.1.0"

from .errors import (AccuracyError, AdiabaticBreakdownError, DegenerateSpectrumError, DomainError,
                     GinibreLabError, InsufficientSamplesError, InvalidDimensionError, NearDefectiveError,
                     SignatureError, SingularFitError, SingularSeparationError)
from .logscaled import LogScaled
from .sampling import GinibreMatrix, MomentEstimate, MomentSignature, mc_moment, mixed_moment, sample_ginibre
from .matchings import count_constrained_ncm, limiting_moment, spin_circle
from .kernels import KernelContext

__all__ = [
    "AccuracyError", "AdiabaticBreakdownError", "DegenerateSpectrumError", "DomainError", "GinibreLabError",
    "InsufficientSamplesError", "InvalidDimensionError", "NearDefectiveError", "SignatureError",
    "SingularFitError", "SingularSeparationError", "LogScaled", "GinibreMatrix", "MomentEstimate",
    "MomentSignature", "mc_moment", "mixed_moment", "sample_ginibre", "count_constrained_ncm",
    "limiting_moment", "spin_circle", "KernelContext", "__version__",
]
