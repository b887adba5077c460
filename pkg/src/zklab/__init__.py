"""Numerical laboratory for Strichartz-type estimates of the generalized
Zakharov-Kuznetsov equation on R x T."""
from .errors import (BlowUpDetected, ContractViolation, DegenerateInputError,
                     SingularWeightError, ZKLabError)
from .grid import (Grid, SpaceTimeField, SpectralField, fft_forward, fft_inverse,
                   load_field, save_field, spacetime_forward, spacetime_from_physical,
                   spacetime_inverse)
from .kernels import BACKEND as KERNEL_BACKEND
from .symbols import FrequencyPoint

__version__ = "0.1.0"

__all__ = [
    "BlowUpDetected", "ContractViolation", "DegenerateInputError", "SingularWeightError",
    "ZKLabError", "Grid", "SpaceTimeField", "SpectralField", "fft_forward", "fft_inverse",
    "load_field", "save_field", "spacetime_forward", "spacetime_from_physical",
    "spacetime_inverse", "KERNEL_BACKEND", "FrequencyPoint", "__version__",
]
