"""Group-orbital means, symmetrization inequalities and symmetric ground states."""

__version__ = "0.1.0"
