"""Arbitrary-order moment closure of the relativistic Boltzmann equation."""
from .frame_kinematics import FluidState, InadmissibleError

__all__ = ["FluidState", "InadmissibleError"]
__version__ = "0.1.0"
