"""Spectra, pseudospectra, semigroup norms and Riesz projections of
``-d^2/dx^2 + V(x)`` with complex polynomial ``V`` on the real line."""

from .errors import PseudospecError
from .numkernel import (
    eigenvalues,
    matrix_exp,
    operator_norm,
    smallest_singular_value,
    solve_linear,
)
from .operators import (
    OperatorMatrix,
    PotentialSpec,
    check_admissibility,
    convergence_gate,
    discretize,
    fd_discretize,
    hermite_discretize,
    parse_potential,
)
from .pseudospectrum import (
    Region,
    compute_grid,
    extract_contours,
    find_epsilon,
    resolvent_norm,
    verify_inclusion,
)

__version__ = "0.1.0"
