"""Simulation toolkit for spin cat states under inhomogeneous dephasing.

Submodules
----------
core
    Parameter types, detuning disorder models, seeded RNG discipline.
analytic
    Closed-form dephasing fidelities plus an exact O(N) Monte Carlo oracle.
lindblad
    Master-equation integration (full product space and collective
    Holstein-Primakoff sector), Wigner functions, steady-state sweeps.
meanfield
    Semiclassical mean-field dynamics, reduced models, synchronization
    phase diagram and elliptical boundary fit.
cli
    ``spincat`` command-line entry point emitting CSV/JSON figure data.

Parallelism comes from process pools over realizations/sweep points, so
BLAS is pinned to one thread per process by default (set the usual
environment variables before import to override).
"""

import os as _os

for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")

from .core import (
    DetuningModel,
    EnsembleParams,
    Gaussian,
    Identical,
    SeedSpec,
    SpinCoherentParams,
    TimeGrid,
    TwoGroup,
    derive_seed,
    sample_detunings,
)

__version__ = "0.1.0"

__all__ = [
    "DetuningModel",
    "EnsembleParams",
    "Gaussian",
    "Identical",
    "SeedSpec",
    "SpinCoherentParams",
    "TimeGrid",
    "TwoGroup",
    "derive_seed",
    "sample_detunings",
    "__version__",
]
