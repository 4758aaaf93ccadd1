import numpy as np
import pytest

from spincat.analytic import (
    CatParity,
    FidelityTrace,
    cat_norm,
    fidelity_css_exact,
    mean_fidelity_cat,
    mean_fidelity_css,
    monte_carlo_free_dephasing,
    overlap_cat_exact,
    overlap_free,
    var_fidelity_css,
)
from spincat.core import (
    Gaussian,
    Identical,
    SeedSpec,
    SpinCoherentParams,
    TimeGrid,
    TwoGroup,
    sample_detunings,
)


def _rand_detunings(n, seed, sigma=1.0):
    return sample_detunings(Gaussian(sigma), n, seed=seed)


# ---------------------------------------------------------------- overlap_free

def test_overlap_free_zero_detunings():
    st = SpinCoherentParams(theta=0.7, phi=0.4)
    assert overlap_free(st, np.zeros(6), 3.1) == pytest.approx(1.0)


def test_overlap_free_theta_zero_pure_phase():
    st = SpinCoherentParams(theta=0.0, phi=0.0)
    c = overlap_free(st, _rand_detunings(9, 5), 2.0)
    assert abs(abs(c) - 1.0) < 1e-12


def test_overlap_free_single_spin_pi():
    # N = 1, theta = pi/2, delta*t = pi -> |c|^2 = |1/2 + 1/2 e^{-i pi}|^2 = 0
    st = SpinCoherentParams(theta=np.pi / 2, phi=0.0)
    c = overlap_free(st, np.array([1.0]), np.pi)
    assert abs(c) ** 2 == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_fidelity_css_equals_overlap_squared(seed):
    n = 40
    det = _rand_detunings(n, seed)
    t = np.linspace(0.0, 4.0, 17)
    theta = 0.2 + 0.1 * seed
    st = SpinCoherentParams(theta=theta, phi=0.3 * seed)
    f = fidelity_css_exact(theta, det, t)
    c = overlap_free(st, det, t)
    assert np.max(np.abs(f - np.abs(c) ** 2)) < 1e-12
    assert f.min() >= -1e-12 and f.max() <= 1 + 1e-12


def test_fidelity_css_batched_detunings():
    dets = np.stack([_rand_detunings(20, s) for s in range(4)])
    t = np.linspace(0, 3, 7)
    f = fidelity_css_exact(0.3, dets, t)
    assert f.shape == (4, 7)
    for i in range(4):
        assert np.allclose(f[i], fidelity_css_exact(0.3, dets[i], t))


def test_log_space_product_path_matches_direct():
    # force the N > 1000 log-space branch and compare against chunked direct
    n = 2048
    det = _rand_detunings(n, 3)
    t = 1.3
    f_log = fidelity_css_exact(0.05, det, t)
    q = 1 - 0.5 * np.sin(0.05) ** 2 * (1 - np.cos(det * t))
    assert f_log == pytest.approx(np.prod(q), rel=1e-12)


# ------------------------------------------------------------ closed-form css

def test_mean_fidelity_css_no_disorder():
    t = np.linspace(0, 10, 5)
    assert np.allclose(mean_fidelity_css(0.4, 0.0, 50, t), 1.0)


def test_mean_fidelity_css_saturation_value():
    # N = 200, theta = 1/sqrt(200); t -> inf limit via exact substitution
    n, theta = 200, 1 / np.sqrt(200)
    expected = (1 - 0.5 * np.sin(theta) ** 2) ** n  # oracle: direct evaluation
    val = mean_fidelity_css(theta, 1.0, n, np.inf)
    assert val == pytest.approx(expected, rel=1e-14)
    assert val == pytest.approx(0.6068, abs=2e-4)


def test_mean_fidelity_css_small_amplitude_expansion():
    # F(inf) ~= 1 - N theta^2 / 2 for N theta^2 << 1
    n, theta = 400, 0.005
    exact = mean_fidelity_css(theta, 1.0, n, np.inf)
    approx = 1 - n * theta**2 / 2
    assert abs(exact - approx) < (n * theta**2) ** 2


def test_mean_fidelity_css_monotone_nonincreasing():
    t = np.linspace(0, 6, 200)
    f = mean_fidelity_css(0.12, 0.8, 300, t)
    assert np.all(np.diff(f) <= 1e-15)


def test_var_fidelity_css_trivial_zeros():
    assert var_fidelity_css(0.1, 1.0, 100, 0.0) == 0.0
    assert var_fidelity_css(0.1, 0.0, 100, 3.0) == 0.0


def test_var_fidelity_css_saturation_scale():
    n, theta = 200, 1 / np.sqrt(200)
    assert var_fidelity_css(theta, 1.0, n, np.inf) == pytest.approx(n * theta**4 / 8)


# ----------------------------------------------------------------- cat states

def test_cat_norm_limits():
    assert cat_norm(1e-9, 50, CatParity.EVEN) == pytest.approx(2.0)
    # orthogonal-branch limit: cos^N theta -> 0
    assert cat_norm(1.5, 5000, CatParity.EVEN) == pytest.approx(np.sqrt(2.0))
    with pytest.raises(ValueError):
        cat_norm(0.0, 10, CatParity.ODD)


def test_cat_norm_direct_value():
    # oracle: direct evaluation of sqrt(2 (1 + cos^200 theta))
    theta, n = 1 / np.sqrt(200), 200
    cn = np.cos(theta) ** n
    assert cn == pytest.approx(0.60627, abs=1e-5)
    assert cat_norm(theta, n, CatParity.EVEN) == pytest.approx(np.sqrt(2 * (1 + cn)), rel=1e-14)


def _brute_force_cat_fidelity(theta, phi, parity, detunings, t):
    """2^N state-vector oracle for the free cat-state fidelity."""
    n = len(detunings)
    up = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    dn = np.array([np.cos(theta / 2), -np.exp(1j * phi) * np.sin(theta / 2)])
    b1 = b2 = np.ones(1, dtype=complex)
    for _ in range(n):
        b1 = np.kron(b1, up)
        b2 = np.kron(b2, dn)
    sign = 1.0 if parity is CatParity.EVEN else -1.0
    psi = b1 + sign * b2
    psi /= np.linalg.norm(psi)
    # H0 = (1/2) sum delta_i sigma_i^z is diagonal in the product basis
    diag = np.zeros(2**n)
    for i, d in enumerate(detunings):
        bit = (np.arange(2**n) >> (n - 1 - i)) & 1
        diag += 0.5 * d * np.where(bit == 1, 1.0, -1.0)
    evolved = np.exp(-1j * diag * t) * psi
    return abs(np.vdot(psi, evolved)) ** 2


@pytest.mark.parametrize("parity", [CatParity.EVEN, CatParity.ODD])
def test_overlap_cat_exact_vs_brute_force(parity):
    n, theta, phi = 8, 0.3, 0.7
    det = _rand_detunings(n, 21)
    for t in (0.0, 0.8, 2.5):
        got = overlap_cat_exact(theta, phi, parity, det, t)
        want = _brute_force_cat_fidelity(theta, phi, parity, det, t)
        assert got == pytest.approx(want, abs=1e-10)


def test_overlap_cat_trivial():
    det0 = np.zeros(6)
    for parity in CatParity:
        assert overlap_cat_exact(0.4, 0.0, parity, det0, 7.7) == pytest.approx(1.0)
        assert overlap_cat_exact(0.4, 0.0, parity, _rand_detunings(6, 2), 0.0) == pytest.approx(1.0)


def test_mean_fidelity_cat_t0_identity():
    for parity in CatParity:
        assert mean_fidelity_cat(0.25, 1.0, 64, parity, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_mean_fidelity_cat_even_saturation():
    # small amplitude: F+(inf) ~= 1 - (N theta^2/4)^2
    n, theta = 2000, 0.005
    x = n * theta**2
    exact = mean_fidelity_cat(theta, 1.0, n, CatParity.EVEN, np.inf)
    assert exact == pytest.approx(1 - (x / 4) ** 2, abs=2e-5)


def test_mean_fidelity_cat_odd_small_amplitude_matches_gaussian():
    # N theta^2 -> 0+ limit: F-(t) -> e^{-sigma^2 t^2}
    n, theta, sigma = 40000, 5e-4, 1.0
    t = np.linspace(0.2, 2.0, 7)
    got = mean_fidelity_cat(theta, sigma, n, CatParity.ODD, t)
    want = np.exp(-(sigma * t) ** 2)
    assert np.max(np.abs(got - want) / want) < 2e-2


def test_parity_ordering_and_monotonicity():
    n, theta, sigma = 300, 0.02, 1.0
    t = np.linspace(0.0, 8.0, 160)
    even = mean_fidelity_cat(theta, sigma, n, CatParity.EVEN, t)
    odd = mean_fidelity_cat(theta, sigma, n, CatParity.ODD, t)
    assert np.all(even >= odd - 1e-12)
    # non-increasing up to the closed forms' cancellation round-off (~1e-11)
    assert np.all(np.diff(even) <= 1e-11)
    assert np.all(np.diff(odd) <= 1e-11)
    assert np.all((even >= -1e-12) & (even <= 1 + 1e-12))


def test_even_cat_infidelity_quadratic_scaling():
    # doubling theta^2 quadruples the saturated infidelity (within 10 %)
    n = 1000
    th1 = np.sqrt(0.05 / n)
    th2 = np.sqrt(0.10 / n)
    i1 = 1 - mean_fidelity_cat(th1, 1.0, n, CatParity.EVEN, np.inf)
    i2 = 1 - mean_fidelity_cat(th2, 1.0, n, CatParity.EVEN, np.inf)
    assert i2 / i1 == pytest.approx(4.0, rel=0.1)


# ---------------------------------------------------------------- Monte Carlo

def test_monte_carlo_zero_sigma_all_ones():
    res = monte_carlo_free_dephasing(
        "css", 0.3, 0.0, Gaussian(0.0), 20, TimeGrid(0, 2, 9),
        SeedSpec(master_seed=1, realization_count=5))
    assert np.allclose(res.traces, 1.0)
    assert np.allclose(res.stderr, 0.0)


def test_monte_carlo_rejects_identical():
    with pytest.raises(ValueError, match="disorder"):
        monte_carlo_free_dephasing(
            "css", 0.3, 0.0, Identical(0.0), 4, TimeGrid(0, 1, 3),
            SeedSpec(master_seed=1, realization_count=2))


def test_monte_carlo_css_matches_closed_form():
    n, theta, sigma, r = 50, 0.1, 1.0, 2000
    grid = TimeGrid(0.0, 4.0, 12)
    res = monte_carlo_free_dephasing(
        "css", theta, 0.0, Gaussian(sigma), n, grid,
        SeedSpec(master_seed=2024, realization_count=r))
    closed = mean_fidelity_css(theta, sigma, n, grid.times)
    assert np.all(np.abs(res.mean - closed) <= 3 * res.stderr + 1e-12)


def test_monte_carlo_cat_matches_closed_form():
    n, theta, sigma, r = 50, 0.1, 1.0, 2000
    grid = TimeGrid(0.0, 3.0, 10)
    for kind, parity in (("cat+", CatParity.EVEN), ("cat-", CatParity.ODD)):
        res = monte_carlo_free_dephasing(
            kind, theta, 0.0, Gaussian(sigma), n, grid,
            SeedSpec(master_seed=77, realization_count=r))
        closed = mean_fidelity_cat(theta, sigma, n, parity, grid.times)
        assert np.all(np.abs(res.mean - closed) <= 3 * res.stderr + 1e-12)


def test_monte_carlo_worker_invariance():
    args = ("cat-", 0.2, 0.0, Gaussian(0.7), 16, TimeGrid(0, 2, 6),
            SeedSpec(master_seed=5, realization_count=40))
    a = monte_carlo_free_dephasing(*args, workers=1)
    b = monte_carlo_free_dephasing(*args, workers=4)
    assert np.array_equal(a.traces, b.traces)
    assert np.array_equal(a.mean, b.mean)


def test_monte_carlo_two_group_deterministic_traces():
    res = monte_carlo_free_dephasing(
        "css", 0.3, 0.0, TwoGroup(0.5), 8, TimeGrid(0, 2, 5),
        SeedSpec(master_seed=9, realization_count=3))
    assert np.array_equal(res.traces[0], res.traces[1])


def test_fidelity_trace_validation():
    with pytest.raises(ValueError):
        FidelityTrace(np.array([0.0, 1.0]), np.array([0.5, 1.5]))
    with pytest.raises(ValueError):
        FidelityTrace(np.array([0.0, 1.0]), np.array([0.5]))
