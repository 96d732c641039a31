"""Semi-implicit solver for the inertial Landau-Lifshitz-Gilbert equation.

Submodules: ``grid`` (stencils and layout), ``physics`` (parameters and
local fields), ``demag`` (FFT stray field), ``krylov`` (GMRES and condition
estimates), ``stepper`` (the three-level scheme), ``energy``, ``verify``
(manufactured solutions) and ``driver`` (configs, scenarios, CLI).
"""

from .grid import Grid
from .physics import MaterialParams, nondimensionalize
from .stepper import SolverState, StepperConfig, initialize, step

__all__ = ["Grid", "MaterialParams", "nondimensionalize", "SolverState", "StepperConfig", "initialize", "step"]
__version__ = "0.1.0"
