"""ifslab: self-similar sets, their rational points, and limsup-set experiments."""

from .ifs import (
    AttractorBounds,
    IFSystem,
    ProbabilityVector,
    SimilarityMap,
    attractor_bounds,
    boundary_weight_two_maps,
    check_measure_inequality,
    detect_exact_overlap,
    entropy,
    epsilon_star,
    lyapunov,
    natural_weights,
    similarity_dimension,
)
from .words import (
    EpCode,
    canonicalize,
    cylinder_diam,
    cylinder_measure,
    project_exact,
    project_float,
    sample_code,
)

__version__ = "0.1.0"
