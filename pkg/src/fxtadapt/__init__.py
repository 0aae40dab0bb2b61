"""Fixed-time parameter adaptation with robust-adaptive CBF-QP control."""

__version__ = "0.1.0"
