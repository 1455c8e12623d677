"""Statistical end-to-end channel through the RIS.

The device-RIS link carries a LoS path plus ``L`` scattered clusters whose
incident directions are fixed over the coverage area; the RIS-AP link is
pure LoS. The end-to-end gain ``h = w^H (h_los + h_nlos)`` is complex
Gaussian with mean ``w^H h_los`` (up to an unknown phase) and variance
``w^H C w``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .geometry import Location
from .ris import RisGeometry, array_response, unit_cell_factor

log = logging.getLogger(__name__)


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class SystemParams:
    tx_power_dbm: float = 0.0
    antennas: int = 4
    preamble_len: int = 64
    noise_power_dbm: float = -100.0
    pfa: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.pfa <= 1.0:
            raise ValueError(f"pfa must lie in (0, 1], got {self.pfa}")
        if self.antennas < 1 or self.preamble_len < 1:
            raise ValueError("antennas and preamble length must be at least 1")

    @property
    def power(self):
        """Effective received-signal power ``M * P_tx * S`` in watts."""
        return self.antennas * float(dbm_to_watt(self.tx_power_dbm)) * self.preamble_len

    @property
    def noise_power(self):
        return float(dbm_to_watt(self.noise_power_dbm))

    @property
    def snr_scale(self):
        """``P / sigma^2``: converts channel powers to noise-normalized units."""
        return self.power / self.noise_power


@dataclass(frozen=True)
class ScattererSet:
    directions: tuple = ()
    variances: tuple = ()

    def __post_init__(self):
        if len(self.directions) != len(self.variances):
            raise ValueError("one variance per scatterer direction is required")
        if any(v < 0 for v in self.variances):
            raise ValueError("scatterer variances must be nonnegative")

    def __len__(self):
        return len(self.directions)


@dataclass(frozen=True)
class ChannelStatistics:
    """LoS vector and NLoS covariance for one device location."""

    los: np.ndarray = field(repr=False)
    cov: np.ndarray = field(repr=False)

    @property
    def los_outer(self):
        return np.outer(self.los, self.los.conj())

    @property
    def n_cells(self):
        return self.los.size

    def scaled(self, factor):
        """Statistics with both ``h_los`` and ``C`` expressed in power units times ``factor``."""
        return ChannelStatistics(self.los * np.sqrt(factor), self.cov * factor)


def path_loss_magnitude(distance, wavelength):
    """Free-space LoS coefficient magnitude ``lambda / (4 pi d)``."""
    if distance <= 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return wavelength / (4 * np.pi * distance)


def los_vector(device: Location, ap: Location, geom: RisGeometry, polarization=0.0):
    """LoS component of the cascaded channel without its unknown phase term."""
    lam = geom.wavelength
    amp = (np.sqrt(4 * np.pi) / lam
           * path_loss_magnitude(ap.distance, lam)
           * path_loss_magnitude(device.distance, lam))
    c = unit_cell_factor(ap.direction, device.direction, polarization, geom)
    return amp * c * array_response(ap.direction, device.direction, geom)


def nlos_covariance(ap: Location, scatterers: ScattererSet, geom: RisGeometry,
                    polarization=0.0):
    """Covariance ``C`` of the scattered component.

    The device location only enters through ``scatterers.variances``.
    """
    lam = geom.wavelength
    U = geom.n_cells
    cov = np.zeros((U, U), dtype=complex)
    scale = 4 * np.pi / lam**2 * path_loss_magnitude(ap.distance, lam) ** 2
    for direction, var in zip(scatterers.directions, scatterers.variances):
        c = unit_cell_factor(ap.direction, direction, polarization, geom)
        a = array_response(ap.direction, direction, geom)
        cov += var * np.abs(c) ** 2 * np.outer(a, a.conj())
    return scale * cov


def scatterer_variances_from_k(device: Location, k_factor_db, n_scatterers, wavelength):
    """Equal per-cluster variances giving Rician factor ``K`` at ``device``."""
    if n_scatterers < 1:
        raise ValueError("a finite K-factor needs at least one scatterer")
    k = float(db_to_linear(k_factor_db))
    if k <= 0:
        raise ValueError("K-factor must be positive")
    var = path_loss_magnitude(device.distance, wavelength) ** 2 / (k * n_scatterers)
    return [var] * n_scatterers


def channel_statistics(device: Location, ap: Location, scatterers: ScattererSet,
                       geom: RisGeometry, polarization=0.0) -> ChannelStatistics:
    return ChannelStatistics(
        los_vector(device, ap, geom, polarization),
        nlos_covariance(ap, scatterers, geom, polarization),
    )


class ChannelSampler:
    """Draws end-to-end channel gains ``h`` for a fixed design.

    Negative variances that arise from round-off are clamped at zero; the
    number of clamps is kept in ``n_clamped``.
    """

    def __init__(self, rng=None):
        self.rng = np.random.default_rng(rng)
        self.n_clamped = 0

    def moments(self, design, stats: ChannelStatistics):
        w = np.asarray(getattr(design, "w", design))
        mean = np.vdot(w, stats.los)
        var = float(np.real(np.vdot(w, stats.cov @ w)))
        if var < 0:
            self.n_clamped += 1
            log.warning("clamped negative channel variance %.3e to zero", var)
            var = 0.0
        return mean, var

    def sample(self, design, stats, gamma_phase=0.0, size=None):
        mean, var = self.moments(design, stats)
        shape = () if size is None else size
        noise = (self.rng.standard_normal(shape) + 1j * self.rng.standard_normal(shape))
        return np.exp(1j * np.asarray(gamma_phase)) * mean + np.sqrt(var / 2) * noise


def sample_channel(design, stats, gamma_phase, rng, size=None):
    """One draw (or ``size`` draws) of ``h ~ CN(e^{j gamma} w^H h_los, w^H C w)``."""
    sampler = rng if isinstance(rng, ChannelSampler) else ChannelSampler(rng)
    return sampler.sample(design, stats, gamma_phase, size)
