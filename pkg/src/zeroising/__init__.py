"""Zero-temperature stochastic Ising (majority) dynamics on exactly embedded
planar lattices."""

__version__ = "0.1.0"
