"""
vche2d - 2-D viscous Camassa-Holm vorticity simulator

Pseudo-spectral solver and verification harness for the decay of small
vorticity toward the Oseen vortex in self-similar variables.
"""

__version__ = "0.1.0"
__author__ = "vche2d Development Team"
