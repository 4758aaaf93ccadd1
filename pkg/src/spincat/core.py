"""Shared parameter types, detuning generation, and RNG discipline.

All rates are dimensionless, expressed in units of the two-excitation loss
rate ``gamma2`` (kept as an explicit field for dimensional clarity, default
1.0), and times in units of ``1/gamma2``.  The dephasing Hamiltonian
convention used throughout the package is ``H0 = (1/2) sum_i delta_i sigma_i^z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "EnsembleParams",
    "Identical",
    "TwoGroup",
    "Gaussian",
    "DetuningModel",
    "SpinCoherentParams",
    "SeedSpec",
    "TimeGrid",
    "derive_seed",
    "splitmix64",
    "uniform_stream",
    "standard_normals",
    "sample_detunings",
]

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class EnsembleParams:
    """System size and driving/dissipation rates in units of gamma2.

    ``eta`` is the squeezing strength, ``phase_phi`` the squeezing phase
    (zero by default), ``gamma2`` the two-excitation loss rate that serves
    as the reference unit.  ``gamma2 = 0`` is permitted so the free-evolution
    limit can be exercised.
    """

    n_spins: int
    eta: float = 0.0
    gamma2: float = 1.0
    phase_phi: float = 0.0

    def __post_init__(self):
        if self.n_spins < 1:
            raise ValueError(f"n_spins must be >= 1, got {self.n_spins}")
        if not math.isfinite(self.eta) or self.eta < 0:
            raise ValueError(f"eta must be finite and >= 0, got {self.eta}")
        if not math.isfinite(self.gamma2) or self.gamma2 < 0:
            raise ValueError(f"gamma2 must be finite and >= 0, got {self.gamma2}")
        if not math.isfinite(self.phase_phi):
            raise ValueError("phase_phi must be finite")


@dataclass(frozen=True)
class Identical:
    """Every spin carries the same detuning ``delta0``."""

    delta0: float = 0.0


@dataclass(frozen=True)
class TwoGroup:
    """Two equal sub-ensembles detuned by +delta and -delta (requires even N)."""

    delta: float

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError(f"TwoGroup delta must be >= 0, got {self.delta}")


@dataclass(frozen=True)
class Gaussian:
    """I.i.d. detunings drawn from a zero-mean normal with std ``sigma``."""

    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"Gaussian sigma must be >= 0, got {self.sigma}")


DetuningModel = Union[Identical, TwoGroup, Gaussian]


@dataclass(frozen=True)
class SpinCoherentParams:
    """Polar angle ``theta`` in [0, pi) and azimuth ``phi`` of a spin coherent state."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta < math.pi:
            raise ValueError(f"theta must lie in [0, pi), got {self.theta}")
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus realization count for disorder averages.

    Realization ``i`` uses ``derive_seed(master_seed, i)``; the derivation is
    a fixed SplitMix64 counter hash, so realizations can be computed in any
    order (or in parallel) with bit-identical results.
    """

    master_seed: int
    realization_count: int = 1

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.realization_count < 1:
            raise ValueError("realization_count must be >= 1")

    def realization_seed(self, index: int) -> int:
        return derive_seed(self.master_seed, index)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid in units of 1/gamma2."""

    t_start: float
    t_end: float
    n_points: int

    def __post_init__(self):
        if self.t_start < 0:
            raise ValueError("t_start must be >= 0")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)


def splitmix64(x: int | np.ndarray) -> np.ndarray:
    """SplitMix64 output function (finalizer) on 64-bit unsigned input."""
    # uint64 wraparound is intentional throughout
    with np.errstate(over="ignore"):
        z = np.asarray(x, dtype=np.uint64)
        z = (z + _GOLDEN) & _MASK64
        z = ((z ^ (z >> np.uint64(30))) * _MIX1) & _MASK64
        z = ((z ^ (z >> np.uint64(27))) * _MIX2) & _MASK64
        return z ^ (z >> np.uint64(31))


def derive_seed(master_seed: int, index: int) -> int:
    """Per-realization seed: SplitMix64 hash of the (master, index) counter.

    Pure function of its arguments; documented so that sweeps can be
    parallelized without any shared RNG state.
    """
    with np.errstate(over="ignore"):
        base = np.uint64(master_seed % 2**64)
        step = (np.uint64(index + 1) * _GOLDEN) & _MASK64
        return int(splitmix64((base + step) & _MASK64))


def uniform_stream(seed: int, count: int) -> np.ndarray:
    """``count`` doubles in [0, 1) from the SplitMix64 stream seeded by ``seed``.

    Word ``j`` of the stream is ``splitmix64(seed + (j+1)*GOLDEN)``; the top
    53 bits form the double.  Fully deterministic and independent of numpy's
    global RNG machinery.
    """
    with np.errstate(over="ignore"):
        idx = (np.arange(1, count + 1, dtype=np.uint64) * _GOLDEN) & _MASK64
        words = splitmix64((np.uint64(seed % 2**64) + idx) & _MASK64)
    return (words >> np.uint64(11)).astype(np.float64) * 2.0**-53


def standard_normals(seed: int, count: int) -> np.ndarray:
    """``count`` standard normal draws via Box-Muller on the uniform stream.

    The transform consumes 2*ceil(count/2) uniforms; ``u1`` is shifted into
    (0, 1] so the logarithm stays finite.
    """
    pairs = (count + 1) // 2
    u = uniform_stream(seed, 2 * pairs)
    u1 = u[:pairs] + 2.0**-53  # (0, 1]
    u2 = u[pairs:]
    r = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(2.0 * np.pi * u2)
    out[1::2] = r * np.sin(2.0 * np.pi * u2)
    return out[:count]


def sample_detunings(model: DetuningModel, n: int, seed: int = 0) -> np.ndarray:
    """Generate the per-spin detunings for one disorder realization.

    Parameters
    ----------
    model : DetuningModel
        ``Identical``, ``TwoGroup`` (first n/2 spins at +delta, last n/2 at
        -delta) or ``Gaussian``.
    n : int
        Number of spins (TwoGroup requires it even).
    seed : int
        Realization seed; only the Gaussian variant consumes it.  The result
        is a pure function of (model, n, seed).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if isinstance(model, Identical):
        return np.full(n, float(model.delta0))
    if isinstance(model, TwoGroup):
        if n % 2 != 0:
            raise ValueError(f"TwoGroup detunings require even n, got {n}")
        half = n // 2
        out = np.empty(n)
        out[:half] = model.delta
        out[half:] = -model.delta
        return out
    if isinstance(model, Gaussian):
        return model.sigma * standard_normals(seed, n)
    raise TypeError(f"unknown detuning model: {model!r}")
