"""Spiked (deformed) i.i.d. random matrices: sampling, spectra, the
matrix-vector query model and the bounds around it."""

from . import algorithms, bounds, concentration, ensembles, errors, query_model, spectral

__version__ = "0.1.0"

__all__ = ["algorithms", "bounds", "concentration", "ensembles", "errors", "query_model", "spectral"]
