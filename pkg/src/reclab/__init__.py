"""Numerical laboratory for quantitative recurrence on the torus.

Exact fixed-point orbits for expanding and rigid circle/torus maps, mass
targets with admissibility validation, measures and ball geometry, metric
packings and partitions with mollifiers, and the Monte Carlo experiments
that probe hit-ratio convergence, return-time scaling and correlation decay.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
