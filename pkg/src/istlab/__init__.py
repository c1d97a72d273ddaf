"""Numerical inverse scattering for KdV and NLS/mKdV."""

from . import errors
from .fields import Grid1D, SampledField, SolitonParams, sample, field_norms
from .schrodinger import SchrodingerScatteringData, scatter, bound_states, reflection_coefficient
from .kdv_evolution import KdvFlowClock, evolve_scattering_data
from .glm import build_F, solve_glm, reconstruct_potential, invert

__version__ = "0.1.0"
