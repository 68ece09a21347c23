"""Sparse random matrix simulation: local laws, edge statistics and eigenvector overlaps."""

from __future__ import annotations

from sparselab.ensemble import EnsembleSpec, Kind, sample_goe, sample_matrix, sample_wigner
from sparselab.spectral import SpectralData, eigh, m_sc, semicircle_cdf

__version__ = "0.1.0"

__all__ = ["EnsembleSpec", "Kind", "SpectralData", "eigh", "m_sc", "sample_goe", "sample_matrix",
           "sample_wigner", "semicircle_cdf", "__version__"]
