"""percolab: a Monte Carlo laboratory for critical high-dimensional bond
percolation and its scaling limit."""

__version__ = "0.1.0"
