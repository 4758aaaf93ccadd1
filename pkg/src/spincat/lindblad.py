"""Master-equation integration for the driven-dissipative spin ensemble.

The model is ``drho/dt = -i[H, rho] + (gamma2/N^2) D[S_-^2] rho`` with
``H = (1/2) sum_i delta_i sigma_i^z + (eta/N)(e^{i phi} S_-^2 + e^{-i phi} S_+^2)``
and ``S_- = sum_i sigma_i^-``.

Two backends:

* ``full``: the 2^N product space, arbitrary per-spin detunings, N <= 12.
  Excitation-number parity is conserved, so a trajectory that starts in a
  definite-parity state can optionally be restricted to that sector
  (``parity_sector``), which quarters the memory and speeds up stepping.
* ``collective``: the permutation-symmetric (N+1)-dimensional sector reached
  via the exact Holstein-Primakoff map ``S_- = sqrt(N - a^dag a) a``; valid
  only for identical (zero) detunings, N up to several hundred.

Integration uses an adaptive embedded Runge-Kutta scheme with dense output;
the long steady-state searches switch to an implicit multistep scheme backed
by the assembled sparse Liouvillian of the collective backend.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.special import gammaln

from ._ode import IntegrationError, integrate_adaptive
from ._parallel import parallel_map
from .core import EnsembleParams, TimeGrid
from .analytic import CatParity

__all__ = [
    "Basis",
    "DensityMatrix",
    "StateVector",
    "CssState",
    "CatState",
    "BosonicCoherent",
    "CollectiveOperators",
    "WignerGrid",
    "SteadyStatePoint",
    "FullGenerator",
    "CollectiveGenerator",
    "collective_operators",
    "symmetric_isometry",
    "build_full_generator",
    "build_collective_generator",
    "integrate_master",
    "prepare_state_vector",
    "prepare_state",
    "fidelity_to",
    "parity_expectation",
    "amplitude_expectation",
    "stabilized_cat_state",
    "steady_state_amplitude",
    "steady_amplitude_sweep",
    "wigner",
    "default_wigner_axes",
    "IntegrationError",
]

FULL_BACKEND_MAX_SPINS = 12


# --------------------------------------------------------------------- bases

@dataclass(frozen=True)
class Basis:
    """Hilbert-space tag: full product space or collective excitation ladder.

    ``parity_sector`` (full basis only) restricts to states whose excitation
    number is even ("even") or odd ("odd"); the model conserves that parity.
    """

    kind: str  # "full" | "collective"
    n_spins: int
    parity_sector: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("full", "collective"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.n_spins < 1:
            raise ValueError("n_spins must be >= 1")
        if self.parity_sector is not None:
            if self.kind != "full":
                raise ValueError("parity_sector applies to the full basis only")
            if self.parity_sector not in ("even", "odd"):
                raise ValueError("parity_sector must be 'even' or 'odd'")

    @property
    def dim(self) -> int:
        if self.kind == "collective":
            return self.n_spins + 1
        if self.parity_sector is None:
            return 2**self.n_spins
        return 2 ** (self.n_spins - 1)


@lru_cache(maxsize=32)
def _sector_indices(n: int, sector: str) -> np.ndarray:
    k = _popcount_table(n)
    want = 0 if sector == "even" else 1
    return np.where(k % 2 == want)[0]


@lru_cache(maxsize=32)
def _popcount_table(n: int) -> np.ndarray:
    idx = np.arange(2**n, dtype=np.uint32)
    k = np.zeros(2**n, dtype=np.int64)
    for b in range(n):
        k += (idx >> b) & 1
    return k


@dataclass
class DensityMatrix:
    """Complex Hermitian matrix over a tagged basis."""

    data: np.ndarray
    basis: Basis

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(
                f"data shape {self.data.shape} does not match basis dim {self.basis.dim}")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.data - self.data.conj().T).max())

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.data + self.data.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    def validate(self, trace_tol: float = 1e-8, herm_tol: float = 1e-10) -> None:
        if abs(self.trace() - 1.0) > trace_tol:
            raise ValueError(f"trace deviates from 1 by {abs(self.trace() - 1.0):.2e}")
        if self.hermiticity_defect() > herm_tol:
            raise ValueError(f"hermiticity defect {self.hermiticity_defect():.2e}")


@dataclass(frozen=True)
class StateVector:
    """Pure state over a tagged basis."""

    data: np.ndarray
    basis: Basis

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.data, self.data.conj()), self.basis)


# ---------------------------------------------------------------- state specs

@dataclass(frozen=True)
class CssState:
    theta: float
    phi: float = 0.0


@dataclass(frozen=True)
class CatState:
    theta: float
    phi: float = 0.0
    parity: CatParity = CatParity.EVEN

    def __post_init__(self):
        object.__setattr__(self, "parity", CatParity.from_label(self.parity))
        if self.theta <= 0.0:
            raise ValueError("cat states require theta > 0")


@dataclass(frozen=True)
class BosonicCoherent:
    alpha: complex


StateSpec = Union[CssState, CatState, BosonicCoherent]


# ------------------------------------------------------------------ operators

@dataclass(frozen=True)
class CollectiveOperators:
    """Truncated boson ``a`` and the exact Holstein-Primakoff ``S_-``."""

    n_spins: int
    a_op: np.ndarray
    s_minus: np.ndarray


@lru_cache(maxsize=32)
def _collective_cached(n: int):
    k = np.arange(1, n + 1)
    a = np.zeros((n + 1, n + 1), dtype=complex)
    a[k - 1, k] = np.sqrt(k)
    sm = np.zeros((n + 1, n + 1), dtype=complex)
    sm[k - 1, k] = np.sqrt(k * (n - k + 1))  # sqrt(N - a^dag a) a on |k>
    return a, sm


def collective_operators(n: int) -> CollectiveOperators:
    a, sm = _collective_cached(n)
    return CollectiveOperators(n_spins=n, a_op=a.copy(), s_minus=sm.copy())


@lru_cache(maxsize=16)
def _full_spin_ops(n: int):
    """Sparse sigma_i^- and sigma_i^z in the 2^n product basis (bit n-1-i)."""
    sm1 = sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=complex))
    sz1 = sp.csr_matrix(np.array([[-1, 0], [0, 1]], dtype=complex))
    eye = sp.identity(2, format="csr", dtype=complex)
    sms, szs = [], []
    for i in range(n):
        m_minus = m_z = sp.identity(1, format="csr", dtype=complex)
        for j in range(n):
            m_minus = sp.kron(m_minus, sm1 if j == i else eye, format="csr")
            m_z = sp.kron(m_z, sz1 if j == i else eye, format="csr")
        sms.append(m_minus)
        szs.append(m_z)
    return sms, szs


@lru_cache(maxsize=16)
def _full_sminus(n: int):
    sms, _ = _full_spin_ops(n)
    out = sms[0]
    for m in sms[1:]:
        out = out + m
    return out.tocsr()


def symmetric_isometry(n: int) -> np.ndarray:
    """2^n x (n+1) isometry whose columns are the normalized Dicke states.

    Column k spans the permutation-symmetric combination of all product
    states with k excitations; projects full-basis objects onto the
    collective sector.
    """
    k = _popcount_table(n)
    v = np.zeros((2**n, n + 1))
    norms = np.sqrt(np.array([math.comb(n, kk) for kk in range(n + 1)], dtype=float))
    v[np.arange(2**n), k] = 1.0 / norms[k]
    return v


# ----------------------------------------------------------------- generators

class FullGenerator:
    """Liouvillian action on the full product space (optionally one parity sector).

    Operators are kept sparse and applied by matrix products; no superoperator
    is materialized (memory scales as 4^N otherwise).
    """

    def __init__(self, params: EnsembleParams, detunings, parity_sector=None):
        n = params.n_spins
        detunings = np.asarray(detunings, dtype=float)
        if detunings.shape != (n,):
            raise ValueError(f"need {n} detunings, got shape {detunings.shape}")
        self.params = params
        self.detunings = detunings
        self.basis = Basis("full", n, parity_sector)

        sm_total = _full_sminus(n)
        _, szs = _full_spin_ops(n)
        j_op = (sm_total @ sm_total).tocsr()
        phase = np.exp(1j * params.phase_phi)
        h = (params.eta / n) * (phase * j_op + np.conj(phase) * j_op.conj().T)
        for d, sz in zip(detunings, szs):
            if d != 0.0:
                h = h + 0.5 * d * sz
        h = h.tocsr()
        k_op = (j_op.conj().T @ j_op).tocsr()

        if parity_sector is not None:
            ix = _sector_indices(n, parity_sector)
            h = h[ix][:, ix].tocsr()
            j_op = j_op[ix][:, ix].tocsr()
            k_op = k_op[ix][:, ix].tocsr()
        self.h_op = h
        self.j_op = j_op
        self.k_op = k_op
        self._ht = h.T.tocsr()
        self._jc = j_op.conj().tocsr()
        self._kt = k_op.T.tocsr()
        self._rate = params.gamma2 / n**2

    @property
    def dim(self) -> int:
        return self.basis.dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """drho/dt for an arbitrary (not necessarily Hermitian) matrix."""
        hr = self.h_op @ rho
        rh = (self._ht @ rho.T).T
        out = -1j * (hr - rh)
        if self._rate != 0.0:
            jr = self.j_op @ rho
            jrj = (self._jc @ jr.T).T
            kr = self.k_op @ rho
            rk = (self._kt @ rho.T).T
            out += self._rate * (jrj - 0.5 * (kr + rk))
        return out

    def _apply_hermitian(self, rho: np.ndarray) -> np.ndarray:
        """Same action, exploiting rho = rho^dag (integration hot path)."""
        hr = self.h_op @ rho
        out = -1j * (hr - hr.conj().T)
        if self._rate != 0.0:
            x = self.j_op @ rho
            jrj = self.j_op @ np.ascontiguousarray(x.conj().T)
            kr = self.k_op @ rho
            out += self._rate * (jrj - 0.5 * (kr + kr.conj().T))
        return out

    def rhs_flat(self, t, y):
        rho = y.reshape(self.dim, self.dim)
        return self._apply_hermitian(rho).ravel()

    def liouvillian_dense(self) -> np.ndarray:
        """Dense superoperator (row-major vec); tiny systems only."""
        if self.dim > 16:
            raise ValueError("dense Liouvillian restricted to dim <= 16 "
                             f"(requested dim {self.dim}); memory scales as dim^4")
        eye = sp.identity(self.dim, format="csr", dtype=complex)
        h, j, k = self.h_op, self.j_op, self.k_op
        lv = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
        lv = lv + self._rate * (sp.kron(j, j.conj())
                                - 0.5 * (sp.kron(k, eye) + sp.kron(eye, k.T)))
        return np.asarray(lv.todense())


class CollectiveGenerator:
    """Liouvillian action on the (N+1)-dimensional collective sector (delta_i = 0)."""

    def __init__(self, params: EnsembleParams):
        n = params.n_spins
        self.params = params
        self.basis = Basis("collective", n)
        a, sm = _collective_cached(n)
        j_op = sm @ sm
        phase = np.exp(1j * params.phase_phi)
        self.h_op = (params.eta / n) * (phase * j_op + np.conj(phase) * j_op.conj().T)
        self.j_op = j_op
        self.k_op = j_op.conj().T @ j_op  # diagonal
        self.a_op = a
        self.s_minus = sm
        self._rate = params.gamma2 / n**2
        self._liouvillian = None

    @property
    def dim(self) -> int:
        return self.basis.dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        h, j, k = self.h_op, self.j_op, self.k_op
        out = -1j * (h @ rho - rho @ h)
        if self._rate != 0.0:
            out += self._rate * (j @ rho @ j.conj().T - 0.5 * (k @ rho + rho @ k))
        return out

    def liouvillian_sparse(self) -> sp.csr_matrix:
        """Assembled sparse superoperator (row-major vec).

        The banded collective operators give ~6 (N+1)^2 nonzeros, a few MB
        even at N = several hundred; enables implicit stepping for the long
        steady-state searches.
        """
        if self._liouvillian is None:
            n1 = self.dim
            eye = sp.identity(n1, format="csr", dtype=complex)
            h = sp.csr_matrix(self.h_op)
            j = sp.csr_matrix(self.j_op)
            k = sp.csr_matrix(self.k_op)
            lv = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
            lv = lv + self._rate * (sp.kron(j, j.conj())
                                    - 0.5 * (sp.kron(k, eye) + sp.kron(eye, k.T)))
            self._liouvillian = lv.tocsr()
        return self._liouvillian

    def rhs_flat(self, t, y):
        return self.liouvillian_sparse() @ y


def build_full_generator(params: EnsembleParams, detunings,
                         parity_sector: Optional[str] = None) -> FullGenerator:
    """Liouvillian action on the full 2^N space for arbitrary detunings.

    Rejects N above the hard cap with a memory estimate: one density matrix
    alone costs 16 * 4^N bytes.
    """
    n = params.n_spins
    if n > FULL_BACKEND_MAX_SPINS:
        mem_gb = 16.0 * 4.0**n / 2**30
        raise ValueError(
            f"full backend capped at N = {FULL_BACKEND_MAX_SPINS}; N = {n} would need "
            f"~{mem_gb:.1f} GiB per density matrix. Use the collective backend "
            "(delta_i = 0) or reduce N.")
    return FullGenerator(params, detunings, parity_sector)


def build_collective_generator(params: EnsembleParams,
                               detunings=None) -> CollectiveGenerator:
    """Collective-sector Liouvillian; only valid for all-zero detunings."""
    if detunings is not None and np.any(np.asarray(detunings) != 0.0):
        raise ValueError("collective backend requires all detunings zero "
                         "(the collective sector is not closed otherwise)")
    return CollectiveGenerator(params)


# --------------------------------------------------------------------- states

def _css_full_vector(n: int, theta: float, phi: float) -> np.ndarray:
    one = np.array([math.cos(theta / 2.0),
                    np.exp(1j * phi) * math.sin(theta / 2.0)], dtype=complex)
    v = np.ones(1, dtype=complex)
    for _ in range(n):
        v = np.kron(v, one)
    return v


def _css_collective_vector(n: int, theta: float, phi: float) -> np.ndarray:
    k = np.arange(n + 1)
    log_binom = 0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    with np.errstate(divide="ignore"):
        log_mag = log_binom + (n - k) * np.log(max(c, 1e-300)) \
            + k * np.log(max(s, 1e-300))
    v = np.exp(log_mag - log_mag.max()) * np.exp(1j * k * phi)
    if s == 0.0:
        v = np.zeros(n + 1, dtype=complex)
        v[0] = 1.0
        return v
    return v / np.linalg.norm(v)


def prepare_state_vector(spec: StateSpec, basis: Basis) -> StateVector:
    """Build a pure state in the given basis.

    Cat states are definite-parity and embed exactly into a matching parity
    sector; a sector mismatch (or a css state, which has no definite parity)
    is rejected.  Bosonic coherent states live in the collective basis,
    truncated to N+1 levels and renormalized; amplitudes with |alpha|^2 > N/2
    trigger a truncation warning.
    """
    n = basis.n_spins
    if isinstance(spec, BosonicCoherent):
        if basis.kind != "collective":
            raise ValueError("bosonic coherent states exist in the collective basis only")
        alpha = complex(spec.alpha)
        if abs(alpha) ** 2 > n / 2:
            warnings.warn(
                f"|alpha|^2 = {abs(alpha)**2:.1f} exceeds N/2 = {n/2:.1f}; "
                "truncation fidelity degraded", stacklevel=2)
        k = np.arange(n + 1)
        if alpha == 0:
            v = np.zeros(n + 1, dtype=complex)
            v[0] = 1.0
        else:
            log_mag = k * math.log(abs(alpha)) - 0.5 * gammaln(k + 1)
            v = np.exp(log_mag - log_mag.max()) * np.exp(1j * k * np.angle(alpha))
            v = v / np.linalg.norm(v)
        return StateVector(v, basis)

    if isinstance(spec, CssState):
        if basis.kind == "collective":
            v = _css_collective_vector(n, spec.theta, spec.phi)
        else:
            v = _css_full_vector(n, spec.theta, spec.phi)
            v = _maybe_project_sector(v, basis)
        return StateVector(v, basis)

    if isinstance(spec, CatState):
        sign = float(spec.parity.sign)
        if basis.kind == "collective":
            v = _css_collective_vector(n, spec.theta, spec.phi) \
                + sign * _css_collective_vector(n, spec.theta, spec.phi + math.pi)
        else:
            v = _css_full_vector(n, spec.theta, spec.phi) \
                + sign * _css_full_vector(n, spec.theta, spec.phi + math.pi)
        v = v / np.linalg.norm(v)
        if basis.kind == "full":
            v = _maybe_project_sector(v, basis)
        return StateVector(v, basis)

    raise TypeError(f"unknown state spec: {spec!r}")


def _maybe_project_sector(v: np.ndarray, basis: Basis) -> np.ndarray:
    if basis.parity_sector is None:
        return v
    ix = _sector_indices(basis.n_spins, basis.parity_sector)
    w = v[ix]
    lost = 1.0 - float(np.vdot(w, w).real)
    if lost > 1e-12:
        raise ValueError(
            f"state has weight {lost:.2e} outside the {basis.parity_sector} "
            "parity sector")
    return w / np.linalg.norm(w)


def prepare_state(spec: StateSpec, basis: Basis) -> DensityMatrix:
    """Pure-state density matrix for the given spec (trace 1 to 1e-12)."""
    return prepare_state_vector(spec, basis).density_matrix()


def stabilized_cat_state(params: EnsembleParams, parity) -> CatState:
    """Cat state amplitude-matched to the manifold the dissipation stabilizes.

    The coherent amplitude is alpha = sqrt(2 eta / gamma2) e^{-i(phi/2 + pi/4)};
    the matching polar angle satisfies tan(theta/2) = |alpha| / sqrt(N).
    """
    if params.gamma2 <= 0:
        raise ValueError("stabilized cat requires gamma2 > 0")
    amp = math.sqrt(2.0 * params.eta / params.gamma2)
    theta = 2.0 * math.atan(amp / math.sqrt(params.n_spins))
    phi = -(params.phase_phi / 2.0 + math.pi / 4.0)
    return CatState(theta=theta, phi=phi, parity=CatParity.from_label(parity))


# ----------------------------------------------------------------- observables

def fidelity_to(rho: DensityMatrix, reference: StateVector) -> float:
    """<psi| rho |psi> for a pure reference state in the same basis."""
    if rho.basis != reference.basis:
        raise ValueError(f"basis mismatch: {rho.basis} vs {reference.basis}")
    psi = reference.data
    return float(np.real(psi.conj() @ rho.data @ psi))


@lru_cache(maxsize=32)
def _parity_diagonal(kind: str, n: int, sector: Optional[str]) -> np.ndarray:
    if kind == "collective":
        return (-1.0) ** np.arange(n + 1)
    k = _popcount_table(n)
    diag = (-1.0) ** (n - k)  # prod_i sigma_i^z eigenvalue
    if sector is not None:
        diag = diag[_sector_indices(n, sector)]
    return diag


def parity_expectation(rho: DensityMatrix) -> float:
    """<prod_i sigma_i^z> (full basis) or excitation-number parity (collective).

    Both the Hamiltonian and the two-excitation jump operator conserve this
    quantity; for even N the two definitions coincide on the cat states.
    """
    diag = _parity_diagonal(rho.basis.kind, rho.basis.n_spins, rho.basis.parity_sector)
    return float(np.real(np.sum(diag * np.diagonal(rho.data))))


def amplitude_expectation(rho: DensityMatrix) -> complex:
    """<a> in the collective basis; <S_->/sqrt(N) as its full-basis proxy."""
    n = rho.basis.n_spins
    if rho.basis.kind == "collective":
        a, _ = _collective_cached(n)
        return complex(np.trace(a @ rho.data))
    sm = _full_sminus(n)
    if rho.basis.parity_sector is not None:
        # S_- maps between parity sectors; its expectation vanishes there
        return 0.0 + 0.0j
    return complex((sm @ rho.data).diagonal().sum() / math.sqrt(n))


# ---------------------------------------------------------------- integration

def integrate_master(generator, rho0: DensityMatrix, grid,
                     rtol: float = 1e-7, atol: float = 1e-9,
                     method: str = "DOP853") -> list[DensityMatrix]:
    """Integrate drho/dt = L rho, returning snapshots at the grid times.

    ``grid`` is a :class:`~spincat.core.TimeGrid` or an increasing array of
    times (the first entry is the initial time).  Snapshot times are hit by
    the integrator's dense output.  Default tolerances: 1e-7 relative,
    1e-9 absolute per step.
    """
    if rho0.basis != generator.basis:
        raise ValueError(f"basis mismatch: {rho0.basis} vs {generator.basis}")
    times = grid.times if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ValueError("grid must contain at least one time")
    y0 = rho0.data.ravel().astype(complex)
    sol = integrate_adaptive(generator.rhs_flat, (times[0], times[-1]), y0,
                             method=method, rtol=rtol, atol=atol, t_eval=times)
    dim = generator.dim
    return [DensityMatrix(sol.y[:, i].reshape(dim, dim), generator.basis)
            for i in range(sol.t.size)]


# --------------------------------------------------------- steady-state sweep

@dataclass(frozen=True)
class SteadyStatePoint:
    """One steady-state search result."""

    eta: float
    amplitude: float
    converged: bool
    t_detected: float
    rho: Optional[DensityMatrix] = None


def steady_state_amplitude(n: int, eta: float, gamma2: float = 1.0,
                           phase_phi: float = 0.0, t_max: float = 400.0,
                           window: float = 10.0, drift_tol: float = 1e-6,
                           rtol: float = 1e-8, atol: float = 1e-10,
                           keep_state: bool = True) -> SteadyStatePoint:
    """Drive the collective model from its matched coherent state to steadiness.

    Starts from the bosonic coherent state alpha = sqrt(2 eta/gamma2)
    e^{-i(phase/2 + pi/4)} and integrates until |d|<a>|/dt| over a trailing
    ``window`` falls below ``drift_tol`` (in units of gamma2), or ``t_max``
    is reached (the point is then flagged unconverged, not dropped).

    Stepping is implicit (sparse-Jacobian BDF): the collective Liouvillian's
    stiffness grows as N^2 and explicit stepping is impractical for N ~ 100.
    """
    params = EnsembleParams(n_spins=n, eta=eta, gamma2=gamma2, phase_phi=phase_phi)
    gen = build_collective_generator(params)
    alpha = math.sqrt(2.0 * eta / gamma2) * np.exp(-1j * (phase_phi / 2.0 + math.pi / 4.0))
    rho0 = prepare_state(BosonicCoherent(alpha), gen.basis)
    lv = gen.liouvillian_sparse()
    times = np.arange(0.0, t_max + 0.5 * window, window)
    sol = integrate_adaptive(lambda t, y: lv @ y, (0.0, times[-1]),
                             rho0.data.ravel(), method="BDF", jac=lv,
                             rtol=rtol, atol=atol, t_eval=times)
    a, _ = _collective_cached(n)
    amps = np.array([abs(np.trace(a @ sol.y[:, i].reshape(n + 1, n + 1)))
                     for i in range(sol.t.size)])
    drifts = np.abs(np.diff(amps)) / window
    steady_idx = None
    for i in range(1, drifts.size):
        if drifts[i - 1] < drift_tol and drifts[i] < drift_tol:
            steady_idx = i + 1
            break
    if steady_idx is None:
        idx, converged, t_det = sol.t.size - 1, False, times[-1]
    else:
        idx, converged, t_det = steady_idx, True, float(times[steady_idx])
    rho = DensityMatrix(sol.y[:, idx].reshape(n + 1, n + 1), gen.basis) \
        if keep_state else None
    return SteadyStatePoint(eta=eta, amplitude=float(amps[idx]),
                            converged=converged, t_detected=t_det, rho=rho)


def _sweep_task(args):
    n, eta, gamma2, phase_phi, t_max, window, drift_tol, rtol, atol = args
    point = steady_state_amplitude(n, eta, gamma2, phase_phi, t_max, window,
                                   drift_tol, rtol, atol, keep_state=False)
    return (point.eta, point.amplitude, point.converged, point.t_detected)


def steady_amplitude_sweep(n: int, eta_grid, t_max: float = 400.0,
                           gamma2: float = 1.0, phase_phi: float = 0.0,
                           window: float = 10.0, drift_tol: float = 1e-6,
                           rtol: float = 1e-8, atol: float = 1e-10,
                           workers: int = 1) -> list[SteadyStatePoint]:
    """Steady |<a>| for each squeezing strength in ``eta_grid``.

    Unconverged points are flagged in the result, never silently dropped.
    """
    tasks = [(n, float(eta), gamma2, phase_phi, t_max, window, drift_tol, rtol, atol)
             for eta in eta_grid]
    rows = parallel_map(_sweep_task, tasks, workers=workers)
    return [SteadyStatePoint(eta=e, amplitude=amp, converged=conv, t_detected=t)
            for (e, amp, conv, t) in rows]


# -------------------------------------------------------------------- Wigner

@dataclass(frozen=True)
class WignerGrid:
    """W(beta) sampled on a rectangular grid of the complex plane."""

    re_axis: np.ndarray
    im_axis: np.ndarray
    values: np.ndarray  # shape (len(im_axis), len(re_axis))

    def integral(self) -> float:
        inner = np.trapezoid(self.values, self.re_axis, axis=1)
        return float(np.trapezoid(inner, self.im_axis))


def default_wigner_axes(eta: float, gamma2: float = 1.0, points: int = 81):
    """Window |beta| <= sqrt(2 eta/gamma2) + 3, covering both steady lobes."""
    half = math.sqrt(2.0 * eta / gamma2) + 3.0
    ax = np.linspace(-half, half, points)
    return ax, ax.copy()


def wigner(rho: DensityMatrix, re_axis, im_axis) -> WignerGrid:
    """Wigner function W(beta) = (2/pi) Tr[rho D(beta) P D(beta)^dag].

    ``D`` is the truncated displacement (matrix exponential of
    ``beta a^dag - beta^* a``) and ``P = diag((-1)^k)`` the excitation
    parity.  The exponential factors through the polar decomposition of
    beta: with ``U = diag(e^{i k arg beta})``, ``D(beta) = U D(|beta|)
    U^dag``, so a single eigendecomposition of the Hermitian generator of
    radial displacements serves the whole grid.  Warns when the window
    reaches beyond the truncation-reliable region |beta|^2 > N/2.
    """
    if rho.basis.kind != "collective":
        raise ValueError("Wigner evaluation requires the collective basis")
    n = rho.basis.n_spins
    re_axis = np.asarray(re_axis, dtype=float)
    im_axis = np.asarray(im_axis, dtype=float)
    r_max2 = max(np.max(np.abs(re_axis)) ** 2 + np.max(np.abs(im_axis)) ** 2, 0.0)
    if r_max2 > n / 2:
        warnings.warn(
            f"Wigner window reaches |beta|^2 ~ {r_max2:.0f} > N/2 = {n/2:.0f}; "
            "values near the corners are truncation-limited", stacklevel=2)
    a, _ = _collective_cached(n)
    k = np.arange(n + 1)
    signs = (-1.0) ** k
    w, v = eigh(-1j * (a.conj().T - a))  # radial displacement generator
    vdag = np.ascontiguousarray(v.conj().T)
    vals = np.empty((im_axis.size, re_axis.size))
    for j, b_im in enumerate(im_axis):
        for i, b_re in enumerate(re_axis):
            beta = complex(b_re, b_im)
            radial = (v * np.exp(1j * abs(beta) * w)) @ vdag
            phase = np.exp(1j * k * np.angle(beta))
            disp = (phase[:, None] * radial) * phase.conj()[None, :]
            diag = (disp.conj() * (rho.data @ disp)).sum(axis=0)
            vals[j, i] = (2.0 / math.pi) * float(np.real(signs @ diag))
    return WignerGrid(re_axis=re_axis, im_axis=im_axis, values=vals)
