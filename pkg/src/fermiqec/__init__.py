"""Repetition and surface codes under coherent X noise, simulated with fermionic Gaussian states."""
from .circuit import CIRCUIT_BASED, PHENOMENOLOGICAL, CircuitConfig, estimate_logical_error
from .fgs_core import GaussianOp, GaussianState, apply_fgo, make_ghz_plus
from .kraus import NoiseModel

__version__ = "0.1.0"
