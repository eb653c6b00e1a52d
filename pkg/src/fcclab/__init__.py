"""Forward-convex convergence laboratory on dyadic atom spaces."""

__version__ = "0.1.0"
