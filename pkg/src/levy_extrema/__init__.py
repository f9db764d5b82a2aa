"""Extrema of Lévy processes at independent exponential or geometric times.

The stopped characteristic function is approximated by a positive-definite
rational function, split into half-plane (Wiener-Hopf) factors, and inverted in
closed form to densities of the supremum and infimum.
"""

__version__ = "0.1.0"

from .levy import (  # noqa: E402
    BrownianDrift,
    CompoundPoissonMixedGamma,
    CosechSquaredJumps,
    GeneralizedHyperbolic,
    MixedGammaJumps,
    StoppingTime,
    SymmetricStable,
    psi,
    stopped_cf,
)
from .pipeline import PipelineError, PipelineOptions, run_pipeline  # noqa: E402

__all__ = [
    "BrownianDrift",
    "CompoundPoissonMixedGamma",
    "CosechSquaredJumps",
    "GeneralizedHyperbolic",
    "MixedGammaJumps",
    "PipelineError",
    "PipelineOptions",
    "StoppingTime",
    "SymmetricStable",
    "psi",
    "run_pipeline",
    "stopped_cf",
]
