"""Semiclassical mean-field dynamics and the synchronization phase diagram.

The product-state ansatz turns the master equation into closed per-spin
equations for the coherences <sigma_m^+> and inversions <sigma_m^z>
(``mf_rhs_full``, cost O(N) per evaluation).  Two exact reductions follow
from symmetry:

* all spins identical (zero detuning): three variables (A, phi, z), with the
  large-N limit form in ``mf_rhs_symmetric`` and its closed-form steady
  state in ``symmetric_steady_state``;
* two sub-ensembles detuned by +/-delta: three variables (A, zeta, z) where
  zeta is each group's phase deviation from pi/4.  ``mf_rhs_two_ensemble``
  keeps every finite-N factor, so its trajectories match ``mf_rhs_full``
  with two-group detunings to integrator tolerance.

A phase-locked steady state exists only inside a bounded region of the
(squeezing, detuning) plane; ``classify_sync`` probes one parameter point,
``sync_phase_sweep`` maps the region, and ``fit_ellipse`` fits its boundary
to delta = b*sqrt(a^2 - (x - a)^2) in the normalized coordinates
x = eta/(N*gamma2), y = delta/gamma2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from ._ode import integrate_adaptive
from ._parallel import parallel_map
from .core import EnsembleParams

__all__ = [
    "MeanFieldState",
    "ReducedState",
    "SyncStatus",
    "SyncPhasePoint",
    "EllipseFit",
    "mf_rhs_full",
    "mf_rhs_full_reference",
    "integrate_mf_full",
    "mf_rhs_symmetric",
    "symmetric_steady_state",
    "mf_rhs_two_ensemble",
    "two_ensemble_steady_state_small_delta",
    "integrate_reduced",
    "classify_sync",
    "sync_phase_sweep",
    "refine_boundary",
    "fit_ellipse",
]


# ---------------------------------------------------------------------- types

@dataclass
class MeanFieldState:
    """Per-spin coherences <sigma_m^+> and inversions <sigma_m^z>."""

    coherences: np.ndarray
    inversions: np.ndarray

    def __post_init__(self):
        self.coherences = np.asarray(self.coherences, dtype=complex)
        self.inversions = np.asarray(self.inversions, dtype=float)
        if self.coherences.shape != self.inversions.shape:
            raise ValueError("coherences and inversions must have equal length")

    @property
    def n_spins(self) -> int:
        return self.coherences.size

    def bloch_defect(self) -> float:
        """Max of 4|<s+>|^2 + <sz>^2 - 1 over spins (<= 0 for valid states)."""
        r = 4.0 * np.abs(self.coherences) ** 2 + self.inversions**2
        return float(r.max() - 1.0)

    def pack(self) -> np.ndarray:
        return np.concatenate([self.coherences.real, self.coherences.imag,
                               self.inversions])

    @classmethod
    def unpack(cls, y: np.ndarray) -> "MeanFieldState":
        n = y.size // 3
        return cls(y[:n] + 1j * y[n:2 * n], y[2 * n:])


@dataclass(frozen=True)
class ReducedState:
    """Reduced (amplitude, phase, inversion) coordinates.

    ``phase`` is phi for the symmetric model and zeta (deviation from pi/4)
    for the two-ensemble model.
    """

    amplitude: float
    phase: float
    inversion: float

    def as_array(self) -> np.ndarray:
        return np.array([self.amplitude, self.phase, self.inversion])


class SyncStatus(Enum):
    SYNCHRONIZED = "synchronized"
    UNSYNCHRONIZED = "unsynchronized"
    UNCONVERGED = "unconverged"


@dataclass(frozen=True)
class SyncPhasePoint:
    """One (eta~, delta~) grid point of the synchronization diagram.

    ``eta_tilde = eta/gamma2`` and ``delta_tilde = N^2 delta/gamma2``;
    ``zeta_ss`` is present exactly when the point is synchronized.
    """

    eta_tilde: float
    delta_tilde: float
    zeta_ss: Optional[float]
    status: SyncStatus

    def __post_init__(self):
        if (self.zeta_ss is None) != (self.status is not SyncStatus.SYNCHRONIZED):
            raise ValueError("zeta_ss must be present iff status is SYNCHRONIZED")


@dataclass(frozen=True)
class EllipseFit:
    """Least-squares fit of the synchronization boundary.

    Fitted in normalized coordinates x = eta/(N gamma2), y = delta/gamma2 to
    y = b sqrt(a^2 - (x - a)^2); the implied thresholds are
    eta_c/gamma2 = 2 a N and delta_c/gamma2 = a b.
    """

    a: float
    b: float
    residual: float

    def eta_c(self, n: int) -> float:
        return 2.0 * self.a * n

    def delta_c(self) -> float:
        return self.a * self.b


# ----------------------------------------------------------- full mean field

def _mf_rhs_arrays(sp: np.ndarray, z: np.ndarray, detunings: np.ndarray,
                   eta: float, gamma2: float, phase_phi: float):
    """O(N) evaluation via global-sum subtraction."""
    n = sp.size
    c1 = (sp.sum() - sp) / n
    c2 = ((1.0 + z).sum() - (1.0 + z)) / (2.0 * n)
    e_ip = np.exp(1j * phase_phi)
    c1_abs2 = np.abs(c1) ** 2
    load = 2.0 * c2 + n * c1_abs2
    damp = c2 / n + c1_abs2
    dsp = (1j * detunings * sp
           - 2j * eta * e_ip * z * np.conj(c1)
           - 2.0 * gamma2 * sp * damp
           + gamma2 * z * c1 * load)
    dz = (8.0 * eta * np.imag(np.conj(e_ip) * sp * c1)
          - 4.0 * gamma2 * (1.0 + z) * damp
          - 4.0 * gamma2 * np.real(sp * np.conj(c1) * load))
    return dsp, dz


def mf_rhs_full(state: MeanFieldState, params: EnsembleParams,
                detunings) -> MeanFieldState:
    """Time derivative of the full per-spin mean-field state (O(N) cost)."""
    detunings = np.asarray(detunings, dtype=float)
    if detunings.shape != (state.n_spins,):
        raise ValueError("detunings length must match the state")
    if state.n_spins != params.n_spins:
        raise ValueError("state size must match params.n_spins")
    dsp, dz = _mf_rhs_arrays(state.coherences, state.inversions, detunings,
                             params.eta, params.gamma2, params.phase_phi)
    return MeanFieldState(dsp, dz)


def mf_rhs_full_reference(state: MeanFieldState, params: EnsembleParams,
                          detunings) -> MeanFieldState:
    """Direct O(N^2) double-sum evaluation, kept as a cross-check oracle."""
    detunings = np.asarray(detunings, dtype=float)
    n = state.n_spins
    sp, z = state.coherences, state.inversions
    eta, gamma2, phase_phi = params.eta, params.gamma2, params.phase_phi
    e_ip = np.exp(1j * phase_phi)
    dsp = np.empty(n, dtype=complex)
    dz = np.empty(n)
    for m in range(n):
        c1 = sum(sp[j] for j in range(n) if j != m) / n
        c2 = sum(1.0 + z[j] for j in range(n) if j != m) / (2.0 * n)
        load = 2.0 * c2 + n * abs(c1) ** 2
        damp = c2 / n + abs(c1) ** 2
        dsp[m] = (1j * detunings[m] * sp[m]
                  - 2j * eta * e_ip * z[m] * np.conj(c1)
                  - 2.0 * gamma2 * sp[m] * damp
                  + gamma2 * z[m] * c1 * load)
        dz[m] = (8.0 * eta * np.imag(np.conj(e_ip) * sp[m] * c1)
                 - 4.0 * gamma2 * (1.0 + z[m]) * damp
                 - 4.0 * gamma2 * np.real(sp[m] * np.conj(c1) * load))
    return MeanFieldState(dsp, dz)


def integrate_mf_full(state0: MeanFieldState, params: EnsembleParams,
                      detunings, times, rtol: float = 1e-10,
                      atol: float = 1e-12) -> list[MeanFieldState]:
    """Integrate the full mean-field equations, snapshotting at ``times``."""
    detunings = np.asarray(detunings, dtype=float)
    eta, gamma2, phase_phi = params.eta, params.gamma2, params.phase_phi
    n = state0.n_spins

    def rhs(t, y):
        sp = y[:n] + 1j * y[n:2 * n]
        dsp, dz = _mf_rhs_arrays(sp, y[2 * n:], detunings, eta, gamma2, phase_phi)
        return np.concatenate([dsp.real, dsp.imag, dz])

    times = np.asarray(times, dtype=float)
    sol = integrate_adaptive(rhs, (times[0], times[-1]), state0.pack(),
                             method="DOP853", rtol=rtol, atol=atol, t_eval=times)
    return [MeanFieldState.unpack(sol.y[:, i]) for i in range(sol.t.size)]


# ------------------------------------------------------------ reduced models

def mf_rhs_symmetric(state: ReducedState, params: EnsembleParams) -> ReducedState:
    """Large-N symmetric reduction (all spins identical, zero detuning).

    dA   = A [ -2 eta z sin(2 phi) - 2 g A^2 + N g z A^2 ]
    dphi = -2 eta z A cos(2 phi)
    dz   = A^2 [ 8 eta sin(2 phi) - 4 g (1 + z) - 4 g N A^2 ]

    Written in non-divided form so A = 0 is regular.  These equations drop
    O(1/N) terms relative to the per-spin reduction, so their fixed point
    agrees with ``symmetric_steady_state`` only to that order.
    """
    a, phi, z = state.amplitude, state.phase, state.inversion
    n, eta, g = params.n_spins, params.eta, params.gamma2
    s2, c2 = math.sin(2.0 * phi), math.cos(2.0 * phi)
    da = a * (-2.0 * eta * z * s2 - 2.0 * g * a * a + n * g * z * a * a)
    dphi = -2.0 * eta * z * a * c2
    dz = a * a * (8.0 * eta * s2 - 4.0 * g * (1.0 + z) - 4.0 * g * n * a * a)
    return ReducedState(da, dphi, dz)


def _breakdown_root(n: int, eta_tilde: float) -> float:
    return 1.0 - 16.0 * eta_tilde / n


def symmetric_steady_state(n: int, eta: float, gamma2: float = 1.0) -> ReducedState:
    """Closed-form synchronized steady state of the symmetric model.

    A^2 = (4 eta~ - 1 + sqrt(1 - 16 eta~/N)) / (2N), phi = pi/4,
    z = -(1 + sqrt(1 - 16 eta~/N))/2, with eta~ = eta/gamma2.  Valid for
    0 <= eta~/N <= 1/16; beyond that the synchronized branch ceases to exist.
    """
    eta_tilde = eta / gamma2
    if eta_tilde < 0:
        raise ValueError("eta must be >= 0")
    disc = _breakdown_root(n, eta_tilde)
    if disc < 0:
        raise ValueError(
            f"eta/(N gamma2) = {eta_tilde / n:.4f} exceeds 1/16: "
            "synchronization is broken, no steady state of this form")
    r = math.sqrt(disc)
    a2 = (4.0 * eta_tilde - 1.0 + r) / (2.0 * n)
    z = -(1.0 + r) / 2.0
    return ReducedState(math.sqrt(max(a2, 0.0)), math.pi / 4.0, z)


def mf_rhs_two_ensemble(state: ReducedState, params: EnsembleParams,
                        delta: float) -> ReducedState:
    """Exact two-sub-ensemble reduction (groups detuned by +/-delta).

    Coordinates: <sigma^+> = A e^{i(pi/4 +/- zeta)} per group, common
    inversion z.  Every 1/N factor of the per-spin equations is kept, so
    with matched two-group initial data this reproduces ``mf_rhs_full``
    trajectories to integrator tolerance (the symmetry group1 <-> group2*,
    delta -> -delta closes the reduction exactly).
    """
    a, zeta, z = state.amplitude, state.phase, state.inversion
    n, eta, g = params.n_spins, params.eta, params.gamma2
    if n % 2 != 0:
        raise ValueError("two-ensemble reduction requires even N")
    q = math.cos(zeta) ** 2
    s2 = math.sin(2.0 * zeta)
    c2 = math.cos(2.0 * zeta)
    k1 = 1.0 - 1.0 / n
    u = 1.0 + z
    c1_abs2 = a * a * (k1 * k1 * q + math.sin(zeta) ** 2 / (n * n))
    half_pop = k1 * u / 2.0
    load = 2.0 * half_pop + n * c1_abs2
    damp = half_pop / n + c1_abs2
    da = (-2.0 * eta * z * a * (q - c2 / n)
          - 2.0 * g * a * damp
          + g * z * a * (q - 1.0 / n) * load)
    dzeta = (delta + eta * z * (1.0 - 2.0 / n) * s2
             - 0.5 * g * z * load * s2)
    dz = (8.0 * eta * a * a * (q - c2 / n)
          - 4.0 * g * u * damp
          - 4.0 * g * a * a * (q - 1.0 / n) * load)
    return ReducedState(da, dzeta, dz)


def two_ensemble_steady_state_small_delta(n: int, eta: float, delta: float,
                                          gamma2: float = 1.0) -> ReducedState:
    """Linear-response steady state of the two-ensemble model for small delta.

    A^2 and z keep their delta = 0 values; the phase spread is
    zeta = (1 + sqrt(1 - 16 eta~/N)) / (32 eta~^2) * N^2 * (delta/gamma2).
    Perturbative: warns when the predicted zeta is not small.
    """
    eta_tilde = eta / gamma2
    disc = _breakdown_root(n, eta_tilde)
    if disc < 0:
        raise ValueError(
            f"eta/(N gamma2) = {eta_tilde / n:.4f} exceeds 1/16: no synchronized state")
    r = math.sqrt(disc)
    a2 = (4.0 * eta_tilde - 1.0 + r) / (2.0 * n)
    zeta = (1.0 + r) / (32.0 * eta_tilde**2) * n * n * (delta / gamma2)
    if abs(zeta) > 0.1:
        warnings.warn(
            f"predicted zeta = {zeta:.3g} is not small; the linear-response "
            "solution is perturbative and loses accuracy here", stacklevel=2)
    return ReducedState(math.sqrt(max(a2, 0.0)), zeta,
                        -(1.0 + r) / 2.0)


_REDUCED_MODELS = ("symmetric", "two_ensemble")


def integrate_reduced(model: str, state0: ReducedState, params: EnsembleParams,
                      delta: float, times, rtol: float = 1e-10,
                      atol: float = 1e-12) -> np.ndarray:
    """Integrate a reduced model; returns array (n_times, 3) of (A, phase, z)."""
    if model not in _REDUCED_MODELS:
        raise ValueError(f"model must be one of {_REDUCED_MODELS}")

    if model == "symmetric":
        def rhs(t, y):
            d = mf_rhs_symmetric(ReducedState(*y), params)
            return [d.amplitude, d.phase, d.inversion]
    else:
        def rhs(t, y):
            d = mf_rhs_two_ensemble(ReducedState(*y), params, delta)
            return [d.amplitude, d.phase, d.inversion]

    times = np.asarray(times, dtype=float)
    sol = integrate_adaptive(rhs, (times[0], times[-1]), state0.as_array(),
                             method="LSODA", rtol=rtol, atol=atol, t_eval=times)
    return sol.y.T


# ------------------------------------------------------------ classification

_SLIP_THRESHOLD = math.pi / 2  # |zeta| beyond this marks a phase slip
_AMPLITUDE_FLOOR = 1e-6


def classify_sync(n: int, eta: float, delta: float, budget: float = 1e4,
                  gamma2: float = 1.0, chunk: float = 200.0,
                  drift_tol: float = 1e-8, start: str = "synchronized",
                  rtol: float = 1e-10, atol: float = 1e-12) -> SyncPhasePoint:
    """Probe whether the two-ensemble flow keeps a phase-locked steady state.

    Starting from the zero-detuning synchronized state (or a near-ground
    state when ``start="ground"`` or no such state exists), the reduced
    equations are integrated in chunks up to ``budget`` (units 1/gamma2):

    * SYNCHRONIZED once every component of the RHS drops below ``drift_tol``
      with a finite amplitude -- the flow reached a locked fixed point;
      ``zeta_ss`` records the phase spread there.
    * UNSYNCHRONIZED when the phase spread slips past pi/2 (locked states
      sit at |zeta| < pi/2; beyond it the phase runs away and the coherence
      collapses).
    * UNCONVERGED if the budget expires first (slow dynamics); only this
      status can change under a larger budget.
    """
    params = EnsembleParams(n_spins=n, eta=eta, gamma2=gamma2)
    eta_tilde = eta / gamma2
    if start not in ("synchronized", "ground"):
        raise ValueError("start must be 'synchronized' or 'ground'")
    if start == "synchronized" and _breakdown_root(n, eta_tilde) >= 0.0:
        s0 = symmetric_steady_state(n, eta, gamma2)
        y = [s0.amplitude, 0.0, s0.inversion]
    else:
        a0 = 1e-3
        y = [a0, 0.0, -math.sqrt(1.0 - 4.0 * a0 * a0)]

    def rhs(t, yv):
        d = mf_rhs_two_ensemble(ReducedState(*yv), params, delta)
        return [d.amplitude, d.phase, d.inversion]

    def slip(t, yv):
        return abs(yv[1]) - _SLIP_THRESHOLD
    slip.terminal = True

    def point(status, zeta=None):
        return SyncPhasePoint(eta_tilde=eta_tilde,
                              delta_tilde=n * n * delta / gamma2,
                              zeta_ss=zeta, status=status)

    t = 0.0
    while t < budget:
        sol = integrate_adaptive(rhs, (t, min(t + chunk, budget)), y,
                                 method="LSODA", rtol=rtol, atol=atol,
                                 events=slip)
        if sol.t_events[0].size:
            return point(SyncStatus.UNSYNCHRONIZED)
        y = [float(v) for v in sol.y[:, -1]]
        t = float(sol.t[-1])
        d = rhs(t, y)
        if (max(abs(d[0]), abs(d[1]), abs(d[2])) < drift_tol * gamma2
                and y[0] > _AMPLITUDE_FLOOR):
            return point(SyncStatus.SYNCHRONIZED, zeta=y[1])
    return point(SyncStatus.UNCONVERGED)


def _classify_task(args):
    n, eta, delta, budget, gamma2, start = args
    p = classify_sync(n, eta, delta, budget=budget, gamma2=gamma2, start=start)
    return p


def sync_phase_sweep(n: int, eta_values, delta_values, budget: float = 1e4,
                     gamma2: float = 1.0, start: str = "synchronized",
                     workers: int = 1) -> list[SyncPhasePoint]:
    """Classify every (eta, delta) grid point; deterministic ordered output.

    ``eta_values`` and ``delta_values`` are in units of gamma2 (the exported
    delta_tilde = N^2 delta/gamma2 matches the phase-diagram axes).
    """
    tasks = [(n, float(e), float(d), budget, gamma2, start)
             for e in eta_values for d in delta_values]
    return parallel_map(_classify_task, tasks, workers=workers)


def _bisect_task(args):
    n, eta, lo, hi, iters, budget, gamma2 = args
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        p = classify_sync(n, eta, mid, budget=budget, gamma2=gamma2)
        if p.status is SyncStatus.SYNCHRONIZED:
            lo = mid
        else:
            hi = mid
    final = classify_sync(n, eta, lo, budget=budget, gamma2=gamma2)
    return final


def refine_boundary(n: int, points: list[SyncPhasePoint], budget: float = 1e4,
                    iterations: int = 8, gamma2: float = 1.0,
                    workers: int = 1) -> list[SyncPhasePoint]:
    """Bisection-refine the per-column synchronization boundary.

    For each eta column with at least one synchronized point and one
    non-synchronized point above it, bisect ``iterations`` times between the
    largest synchronized delta and the smallest non-synchronized delta, and
    return the refined boundary points (classified SYNCHRONIZED).
    """
    columns: dict[float, list[SyncPhasePoint]] = {}
    for p in points:
        columns.setdefault(p.eta_tilde, []).append(p)
    tasks = []
    for eta_tilde, col in sorted(columns.items()):
        col = sorted(col, key=lambda p: p.delta_tilde)
        sync_deltas = [p.delta_tilde for p in col if p.status is SyncStatus.SYNCHRONIZED]
        if not sync_deltas:
            continue
        top = max(sync_deltas)
        above = [p.delta_tilde for p in col
                 if p.delta_tilde > top and p.status is not SyncStatus.SYNCHRONIZED]
        if not above:
            continue
        lo = top / (n * n) * gamma2
        hi = min(above) / (n * n) * gamma2
        tasks.append((n, eta_tilde * gamma2, lo, hi, iterations, budget, gamma2))
    return parallel_map(_bisect_task, tasks, workers=workers)


def fit_ellipse(points: list[SyncPhasePoint], n: int) -> EllipseFit:
    """Fit the synchronization boundary to y = b sqrt(a^2 - (x - a)^2).

    The boundary is the per-column maximal synchronized delta, in normalized
    coordinates x = eta/(N gamma2), y = delta/gamma2.  Needs at least 5
    boundary columns; rejects degenerate input (no synchronized points).
    """
    columns: dict[float, float] = {}
    for p in points:
        if p.status is SyncStatus.SYNCHRONIZED:
            columns[p.eta_tilde] = max(columns.get(p.eta_tilde, 0.0), p.delta_tilde)
    if not columns:
        raise ValueError("degenerate boundary: no synchronized points")
    xs = np.array(sorted(columns)) / n
    ys = np.array([columns[k] for k in sorted(columns)]) / n**2
    keep = ys > 0
    xs, ys = xs[keep], ys[keep]
    if xs.size < 5:
        raise ValueError(f"need >= 5 boundary points, got {xs.size}")

    def resid(p):
        a, b = p
        val = np.clip(a * a - (xs - a) ** 2, 0.0, None)
        return b * np.sqrt(val) - ys

    a0 = max(xs.max() / 1.6, 1e-6)
    b0 = max(ys.max() / a0, 1e-6)
    fit = least_squares(resid, [a0, b0], bounds=([1e-12, 1e-12], [np.inf, np.inf]),
                        xtol=1e-15, ftol=1e-15, gtol=1e-15)
    res = float(np.sqrt(np.mean(fit.fun**2)))
    return EllipseFit(a=float(fit.x[0]), b=float(fit.x[1]), residual=res)
