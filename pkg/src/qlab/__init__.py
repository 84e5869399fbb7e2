"""qlab: finite-matrix laboratory for twisted gl(n) spin chains."""

__version__ = "0.1.0"
