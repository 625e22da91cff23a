"""Twistor-space hypersurfaces of almost Hermitian 4-manifolds."""
__version__ = "0.1.0"
