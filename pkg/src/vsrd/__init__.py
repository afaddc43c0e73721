"""Volume-surface reaction-diffusion laboratory.

Finite-volume simulation of linear volume-surface reaction-diffusion
systems, their positive equilibria, quadratic relative entropy and
dissipation, and certified exponential decay rates.
"""

__version__ = "0.1.0"

from .discretization import ModelSpec, assemble, apply  # noqa: E402
from .geometry import GeometrySpec, build_mesh  # noqa: E402
from .network import ReactionNetwork  # noqa: E402

__all__ = ["ModelSpec", "GeometrySpec", "ReactionNetwork", "assemble", "apply", "build_mesh", "__version__"]
