"""Monte Carlo laboratory for charged-polymer Hamiltonians over random walks on Z^d."""

__version__ = "0.1.0"
