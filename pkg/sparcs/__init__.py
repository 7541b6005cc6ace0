"""
SPARCS
Spectral architecture search for feedforward networks with skip connections.
"""

__version__ = "0.1.0"
