"""Heralded single photons delocalized over multiple time bins.

Rate-equation simulation of write/read Raman scattering in an atomic
ensemble, read-pulse design for prescribed bin weights, and the unbalanced
interferometer test of phase coherence between bins.
"""

__version__ = "0.1.0"
