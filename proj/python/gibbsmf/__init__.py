"""Bayesian matrix factorization by Gibbs sampling."""

from ._core import (
    DataError,
    NumericalError,
    Session,
    UsageError,
    bench,
    predict,
    read_matrix_market,
    synthetic,
    write_array,
    write_coordinate,
)

__all__ = [
    "DataError",
    "NumericalError",
    "Session",
    "UsageError",
    "bench",
    "predict",
    "read_matrix_market",
    "synthetic",
    "write_array",
    "write_coordinate",
]
