"""wpcr: exact discrete optimal transport, nonparametric-prior predictives and
posterior simulation, and Monte Carlo verification of contraction-rate bounds.
"""

__version__ = "0.1.0"
