"""Estimators of the diffusion coefficient."""
from .greenkubo import GreenKuboResult, green_kubo_estimate
from .testfunction import (
    DirichletValue,
    TestFunctionSpec,
    gradient_total,
    test_function_dirichlet,
    test_function_gradient,
    test_function_value,
)
from .variational import (
    DirichletStatistics,
    LocalFunctionBasis,
    Monomial,
    SingularNormalEquations,
    TableFunction,
    VariationalResult,
    dirichlet_statistics,
    estimate_D_variational,
    gradient_sum,
)

__all__ = [
    "DirichletStatistics", "DirichletValue", "GreenKuboResult", "LocalFunctionBasis", "Monomial",
    "SingularNormalEquations", "TableFunction", "TestFunctionSpec", "VariationalResult",
    "dirichlet_statistics", "estimate_D_variational", "gradient_sum", "gradient_total",
    "green_kubo_estimate", "test_function_dirichlet", "test_function_gradient", "test_function_value",
]
