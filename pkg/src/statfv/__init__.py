"""Monte Carlo / finite-volume approximation of statistical observables for
the 2D compressible Euler equations on the periodic unit square."""

__version__ = "0.1.0"

from .errors import (CapExceeded, ConfigError, DegenerateCurve, EmptyEnsemble,
                     FormatError, GridMismatch, NonFinite, NonPhysicalState,
                     StatFVError)
from .euler import GasParams
from .grid import ConservedField, Grid, field_from_primitives
from .solver import SchemeConfig, advance, evolve, numerical_flux, reconstruct
from .ensembles import EnsembleSpec, SampleSeed, draw_ensemble, sample_field
from .driver import EmpiricalMeasure, RunConfig, config_hash, estimate_observable, run_ensemble
