"""Cognitive movement models: nonlocal perception, memory and delay in
advection-diffusion-reaction equations on a 1-D grid."""

from .errors import (AnalysisUnavailableError, CogmoveError, ConfigurationError,
                     DegenerateLandscapeError, DivergenceError, HistoryLookupError, HorizonError,
                     MeasureUndefinedError, RootFindingError, StepRejectedError, TruncationError,
                     WindowError)
from .grid import BoundaryCondition, Grid, build_grid, total_mass
from .kernels import KernelSpec, fourier_symbol, perceive
from .memory import HistoryBuffer, TemporalKernelSpec
from .models import make_model
from .stepper import StepConfig, Trajectory, detect_attractor, run
from .stability import dispersion, unstable_set
from .measures import foraging_success, modified_foraging_success, net_growth, sweep
from .oracle import verify_fokker_planck
from .expr import Expression, parse_expression
from .config import parse_config
