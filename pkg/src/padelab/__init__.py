"""Padé approximation toolkit: series, solver, roots and singularity analysis."""

__version__ = "0.1.0"
