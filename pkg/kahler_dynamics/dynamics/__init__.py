"""Computational core: spectral analysis, cohomology models, degrees, Green iterations, mixing."""
