"""Symmetrized scatter estimation via pairwise-difference designs."""

from ._core import (
    SymscatterError,
    averaged_randomized_scatter,
    decompose,
    generate_data,
    geodesic_distance,
    log_det,
    m_scatter,
    pairs,
    predict_u_variance,
    run_experiment,
    sample_permutation,
    shape,
    symmetrized_scatter,
    tyler_scatter,
)

__all__ = [
    "SymscatterError",
    "averaged_randomized_scatter",
    "decompose",
    "generate_data",
    "geodesic_distance",
    "log_det",
    "m_scatter",
    "pairs",
    "predict_u_variance",
    "run_experiment",
    "sample_permutation",
    "shape",
    "symmetrized_scatter",
    "tyler_scatter",
]

__version__ = "0.1.0"
