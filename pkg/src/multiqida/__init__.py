"""QMI-driven layered ansatz construction and VQE for Heisenberg lattices."""

__version__ = "0.1.0"
