"""Max-independence decompositions of extreme eigenvalue and growth-model laws."""

__version__ = "0.1.0"
