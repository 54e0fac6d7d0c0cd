"""bnlab: numerical laboratory for heat equations with white-noise Dirichlet boundary data."""

__version__ = "0.1.0"
