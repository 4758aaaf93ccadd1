import numpy as np
import pytest

from spincat.core import (
    EnsembleParams,
    Gaussian,
    Identical,
    SeedSpec,
    SpinCoherentParams,
    TimeGrid,
    TwoGroup,
    derive_seed,
    sample_detunings,
    standard_normals,
    uniform_stream,
)


def test_identical_zero():
    assert np.array_equal(sample_detunings(Identical(0.0), 4), np.zeros(4))


def test_identical_value():
    assert np.array_equal(sample_detunings(Identical(0.3), 3), np.full(3, 0.3))


def test_two_group_layout():
    assert np.array_equal(sample_detunings(TwoGroup(0.5), 4),
                          np.array([0.5, 0.5, -0.5, -0.5]))


def test_two_group_odd_n_rejected():
    with pytest.raises(ValueError, match="even"):
        sample_detunings(TwoGroup(0.5), 5)


def test_gaussian_statistics():
    d = sample_detunings(Gaussian(1.0), 10**5, seed=derive_seed(7, 0))
    assert abs(d.mean()) < 0.02
    assert abs(d.std() - 1.0) < 0.02


def test_gaussian_deterministic():
    a = sample_detunings(Gaussian(2.0), 1000, seed=123)
    b = sample_detunings(Gaussian(2.0), 1000, seed=123)
    assert np.array_equal(a, b)
    c = sample_detunings(Gaussian(2.0), 1000, seed=124)
    assert not np.array_equal(a, c)


def test_gaussian_sigma_zero_is_identical_zero():
    a = sample_detunings(Gaussian(0.0), 64, seed=99)
    assert np.array_equal(a, sample_detunings(Identical(0.0), 64))


def test_derive_seed_is_fixed_mixing():
    # frozen values of the documented SplitMix64 counter hash
    assert derive_seed(0, 0) == 7960286522194355700
    assert derive_seed(0, 1) == 487617019471545679
    seeds = {derive_seed(5, i) for i in range(1000)}
    assert len(seeds) == 1000


def test_uniform_stream_range():
    u = uniform_stream(3, 4096)
    assert u.min() >= 0.0 and u.max() < 1.0


def test_standard_normals_odd_count():
    z = standard_normals(11, 7)
    assert z.shape == (7,)
    assert np.isfinite(z).all()


def test_seed_spec_realization_seed():
    s = SeedSpec(master_seed=10, realization_count=3)
    assert s.realization_seed(2) == derive_seed(10, 2)
    with pytest.raises(ValueError):
        SeedSpec(master_seed=2**64, realization_count=1)
    with pytest.raises(ValueError):
        SeedSpec(master_seed=1, realization_count=0)


def test_time_grid():
    g = TimeGrid(0.0, 5.0, 11)
    t = g.times
    assert t[0] == 0.0 and t[-1] == 5.0
    assert np.allclose(np.diff(t), t[1] - t[0])
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 5)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        TimeGrid(-0.5, 1.0, 5)


def test_ensemble_params_validation():
    p = EnsembleParams(n_spins=8, eta=0.2)
    assert p.gamma2 == 1.0 and p.phase_phi == 0.0
    with pytest.raises(ValueError):
        EnsembleParams(n_spins=0)
    with pytest.raises(ValueError):
        EnsembleParams(n_spins=2, eta=-1.0)
    with pytest.raises(ValueError):
        EnsembleParams(n_spins=2, eta=np.inf)
    # gamma2 = 0 is allowed (free-evolution limit)
    EnsembleParams(n_spins=2, gamma2=0.0)


def test_spin_coherent_params_range():
    SpinCoherentParams(theta=0.3, phi=1.0)
    with pytest.raises(ValueError):
        SpinCoherentParams(theta=np.pi, phi=0.0)
    with pytest.raises(ValueError):
        SpinCoherentParams(theta=-0.1, phi=0.0)
