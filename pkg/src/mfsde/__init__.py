"""Numerical laboratory for law-dependent (mean-field) SDEs.

Simulate interacting particle approximations, measure weighted
total-variation distances between empirical laws, build mollified
approximating coefficients, evaluate likelihood-ratio stability bounds
and check Lyapunov-type growth certificates.
"""

__version__ = "0.1.0"

from .coefficients import (  # noqa: F401
    CoefficientSet,
    DelayedInteractionDrift,
    DispersionSpec,
    FactoredDriftSpec,
    PairwiseMeanFieldSpec,
    catalog_names,
    make_coefficients,
    register_coefficients,
)
from .measure import (  # noqa: F401
    DiscreteSignedMeasure,
    GridSignedMeasure,
    MeasureFlow,
    WeightFunction,
    bin_to_grid,
    empirical_from_particles,
    hahn_split,
    weighted_tv,
)
from .solver import InitialLaw, ParticleEnsemble, SimConfig, simulate  # noqa: F401
