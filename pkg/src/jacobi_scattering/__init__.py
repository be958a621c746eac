"""Direct and inverse scattering for finitely supported Jacobi matrices, with uniqueness diagnostics."""
from .circle_fn import (
    BoundStateError,
    CircleFunction,
    GridSampling,
    NotInnerError,
    WindowOverflowError,
    inner_symmetric_factory,
    outer_test,
    rational_series,
    uniformizer,
)
from .direct_scattering import extract_smatrix, jost_propagate, scattering_data
from .hankel import hankel_from_symbol, reproducing_kernel, symbol_kernel, weighted_inner_product
from .inverse_scattering import reconstruct_dual, reconstruct_jacobi
from .jacobi import JacobiMatrix, apply_window, decay_check, distance
from .smatrix import (
    InvalidScatteringMatrix,
    ScatteringMatrix,
    analytic_smatrix,
    rank3_smatrix,
    repair,
    validate,
)
from .uniqueness import (
    compare_reconstructions,
    density_diagnostic,
    kernel_criterion,
    kernel_identity_check,
    approximation_residual,
)

__all__ = [
    "BoundStateError",
    "CircleFunction",
    "GridSampling",
    "NotInnerError",
    "WindowOverflowError",
    "inner_symmetric_factory",
    "outer_test",
    "rational_series",
    "uniformizer",
    "InvalidScatteringMatrix",
    "ScatteringMatrix",
    "analytic_smatrix",
    "rank3_smatrix",
    "repair",
    "validate",
    "compare_reconstructions",
    "density_diagnostic",
    "kernel_criterion",
    "kernel_identity_check",
    "approximation_residual",
    "extract_smatrix",
    "jost_propagate",
    "scattering_data",
    "hankel_from_symbol",
    "reproducing_kernel",
    "symbol_kernel",
    "weighted_inner_product",
    "reconstruct_dual",
    "reconstruct_jacobi",
    "JacobiMatrix",
    "apply_window",
    "decay_check",
    "distance",
]

__version__ = "0.1.0"
