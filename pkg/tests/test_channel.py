import numpy as np
import pytest

from risdetect.channel import (ChannelSampler, ScattererSet, SystemParams, channel_statistics,
                               dbm_to_watt, los_vector, nlos_covariance, path_loss_magnitude,
                               sample_channel, scatterer_variances_from_k)
from risdetect.geometry import Location
from risdetect.ris import RisGeometry, array_response, unit_cell_factor

from conftest import random_design

G = RisGeometry.half_wavelength()
AP = Location.from_spherical(25, np.deg2rad(90), np.deg2rad(37))
DEV = Location(-10, -30, 30)


def test_path_loss():
    assert path_loss_magnitude(25, 0.1) == pytest.approx(0.1 / (100 * np.pi))
    assert path_loss_magnitude(25, 0.1) == pytest.approx(3.18310e-4, rel=1e-5)
    assert path_loss_magnitude(50, 0.1) == pytest.approx(path_loss_magnitude(25, 0.1) / 2)
    assert path_loss_magnitude(43.589, 0.1) == pytest.approx(0.1 / (4 * np.pi * 43.589), rel=1e-14)
    assert path_loss_magnitude(43.589, 0.1) == pytest.approx(1.8260e-4, rel=5e-4)
    with pytest.raises(ValueError):
        path_loss_magnitude(0.0, 0.1)


def test_dbm_conversion():
    assert dbm_to_watt(30) == pytest.approx(1.0)
    assert dbm_to_watt(-100) == pytest.approx(1e-13)


def test_los_vector_is_product_of_factors():
    g = RisGeometry.half_wavelength(2, 2)
    h = los_vector(DEV, AP, g)
    lam = g.wavelength
    c = unit_cell_factor(AP.direction, DEV.direction, 0.0, g)
    a = array_response(AP.direction, DEV.direction, g)
    ref = [np.sqrt(4 * np.pi) / lam * (lam / (4 * np.pi * AP.distance))
           * (lam / (4 * np.pi * DEV.distance)) * c * a[u] for u in range(4)]
    np.testing.assert_allclose(h, ref, rtol=1e-13)


def test_nlos_covariance():
    assert not np.any(nlos_covariance(AP, ScattererSet(), G))
    dirs = ((0.5, -1.5), (1.0, -2.2))
    var = (2e-9, 3e-9)
    C = nlos_covariance(AP, ScattererSet(dirs, var), G)
    lam = G.wavelength
    ref = np.zeros((32, 32), complex)
    for d, v in zip(dirs, var):
        c = unit_cell_factor(AP.direction, d, 0.0, G)
        a = array_response(AP.direction, d, G)
        for i in range(32):
            for j in range(32):
                ref[i, j] += (4 * np.pi / lam**2 * (lam / (4 * np.pi * AP.distance)) ** 2
                              * v * abs(c) ** 2 * a[i] * np.conj(a[j]))
    np.testing.assert_allclose(C, ref, rtol=1e-12, atol=1e-30)
    np.testing.assert_allclose(C, C.conj().T)
    assert np.linalg.eigvalsh(C).min() > -1e-12 * np.abs(C).max()


def test_scatterer_variances():
    assert max(scatterer_variances_from_k(DEV, 300, 2, 0.1)) < 1e-35
    hbar2 = path_loss_magnitude(DEV.distance, 0.1) ** 2
    np.testing.assert_allclose(scatterer_variances_from_k(DEV, 0.0, 2, 0.1), [hbar2 / 2] * 2)
    v = scatterer_variances_from_k(DEV, 3.0, 2, 0.1)
    assert v[0] == pytest.approx(hbar2 / (10 ** 0.3 * 2), rel=1e-13)
    assert v[0] == pytest.approx(8.355e-9, rel=1e-3)
    with pytest.raises(ValueError):
        scatterer_variances_from_k(DEV, 3.0, 0, 0.1)


def test_sampler_moments(rng):
    st = channel_statistics(DEV, AP, ScattererSet(((0.5, -1.5),), (3e-9,)), G)
    w = random_design(32, rng)
    h = sample_channel(w, st, 0.4, rng, size=200_000)
    mean = np.exp(0.4j) * np.vdot(w, st.los)
    var = np.real(np.vdot(w, st.cov @ w))
    assert abs(h.mean() - mean) < 5 * np.sqrt(var / h.size)
    assert np.var(h) == pytest.approx(var, rel=0.02)


def test_sampler_deterministic_without_scattering(rng):
    st = channel_statistics(DEV, AP, ScattererSet(), G)
    w = random_design(32, rng)
    h = ChannelSampler(rng).sample(w, st, 1.3, size=4)
    np.testing.assert_allclose(h, np.exp(1.3j) * np.vdot(w, st.los))


def test_system_params_validation():
    with pytest.raises(ValueError):
        SystemParams(pfa=0.0)
    with pytest.raises(ValueError):
        SystemParams(antennas=0)
    p = SystemParams()
    assert p.power == pytest.approx(4 * 1e-3 * 64)
    assert p.snr_scale == pytest.approx(p.power / 1e-13)
