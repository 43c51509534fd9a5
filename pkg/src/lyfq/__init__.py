"""Lee-Yang polynomials, their one-dimensional Fourier quasicrystals and gap statistics."""

__version__ = "0.1.0"
