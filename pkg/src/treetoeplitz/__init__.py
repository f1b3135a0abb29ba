"""Radial Toeplitz operators on Cayley trees and their invariant point processes.

The package is organized bottom-up:

* :mod:`treetoeplitz.tree`        -- ball enumeration and word-coordinate geometry
* :mod:`treetoeplitz.polynomials` -- the orthogonal polynomial family and quadrature
* :mod:`treetoeplitz.symbols`     -- symbol functions and radial coefficient sequences
* :mod:`treetoeplitz.transform`   -- symbol transform, convolution, brute-force oracle
* :mod:`treetoeplitz.operators`   -- dense ball truncations, spectra, radial compression
* :mod:`treetoeplitz.dpp`         -- certified kernels, seeded sampling, verification
* :mod:`treetoeplitz.cli`         -- reproducible command-line artifacts
"""

__version__ = "0.1.0"

from .errors import BudgetError, CertificationError, TreeToeplitzError, ValidationError
from .tree import (
    Ball,
    ball_size,
    enumerate_ball,
    geodesic_ray,
    pairwise_distances,
    sphere_size,
    tree_distance,
)
from .polynomials import (
    QuadratureRule,
    density,
    eval_P,
    eval_Q,
    l2_norm_sq,
    leading_coeff,
    make_quadrature,
    support_halfwidth,
)
from .symbols import (
    GridSymbol,
    PolynomialSymbol,
    RadialSymbol,
    StepSymbol,
    delta_symbol,
    indicator_symbol,
    parse_symbol_spec,
    upper_arc_indicator,
)
from .transform import (
    brute_force_convolve,
    convolve,
    hat_numeric,
    hat_polynomial_exact,
    truncation_bound,
)
from .operators import (
    RadialBasis,
    TruncatedOperator,
    build_matrix,
    operator_norm_estimate,
    radial_compress,
    radial_norm_check,
    spectrum,
)
from .dpp import (
    DppKernel,
    SampleConfig,
    certify_kernel,
    count_statistics,
    inclusion_probability,
    rigidity_probe,
    sample,
    validate_kernel,
    verify_correlations,
    write_samples_jsonl,
)
