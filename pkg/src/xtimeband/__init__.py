"""Time-and-band limiting for exceptional orthogonal polynomials.

Families (X-Hermite, X1-Jacobi, X1-Laguerre), their bispectral operators, the
truncated Gram matrix ``M_{T,N}``, and the narrow-banded matrices commuting
with it.
"""

__version__ = "0.1.0"

from .families import FamilySpec, Kind  # noqa: E402
from .timeband import GramMatrix, compute_gram  # noqa: E402
from .commutant import CommutantResult, solve_banded_commutant  # noqa: E402
from .spectra import SpectralDecomposition, eigh  # noqa: E402

__all__ = ["FamilySpec", "Kind", "GramMatrix", "compute_gram", "CommutantResult", "solve_banded_commutant",
           "SpectralDecomposition", "eigh", "__version__"]
