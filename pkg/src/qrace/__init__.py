"""qrace - equilibria and tie analytics for quantum search races."""

__version__ = "0.1.0"
