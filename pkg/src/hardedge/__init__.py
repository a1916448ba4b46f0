"""
Numerics for the hard-edge correlation kernel of the Laguerre ensemble
perturbed by an essential singularity, e^(-t/x), at the origin.

Modules:
    specfun     Airy, Bessel and Gauss-Legendre building blocks
    kernels     sine, Airy and Bessel limit kernels
    painleve    the pole-free Painleve transcendent r(s) and its companions
    psi         the Lax-pair solutions psi_1, psi_2 and the Psi-kernel
    orthopoly   recurrence coefficients and Christoffel-Darboux kernels
    harness     the three limit-regime verifications and validation
    cli         the ``hardedge`` command
"""

from .errors import (
    DomainError,
    HardEdgeError,
    InvariantError,
    SeriesOverflowError,
    SingularityError,
    StepSizeError,
)

__version__ = "0.1.0"
