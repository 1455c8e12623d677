"""Quadratic phase-shift baseline: steering plus separable quadratic broadening."""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .ris import PhaseDesign, array_response, unit_cell_factor, wave_vector

BEAM_SPREAD_DB = 3.0
CURVATURE_GRID = np.round(np.arange(0.0, 4.0 + 1e-9, 0.025), 6)


@dataclass(frozen=True)
class QuadraticDesignParams:
    """Curvatures are in units of pi radians at the array edge along each RIS axis."""

    curvature_x: float = 0.0
    curvature_y: float = 0.0
    steer_direction: tuple | None = None

    def __post_init__(self):
        if self.curvature_x < 0 or self.curvature_y < 0:
            raise ValueError("curvatures must be nonnegative")


def quadratic_phases(geom, ap_dir, steer_dir, curvature_x, curvature_y):
    k = wave_vector(ap_dir, geom.wavelength) + wave_vector(steer_dir, geom.wavelength)
    idx = geom.cell_indices()
    nx = idx[:, 0] / (geom.ux_count / 2)
    ny = idx[:, 1] / (geom.uy_count / 2)
    return geom.coords() @ k + np.pi * (curvature_x * nx**2 + curvature_y * ny**2)


def _area_gains(scenario, phases):
    """``|g|^2`` in dB over the sampled area for a stack of phase vectors."""
    g = scenario.geom
    A = np.array([array_response(scenario.ap.direction, q.direction, g)
                  for q in scenario.locations])
    c = np.array([unit_cell_factor(scenario.ap.direction, q.direction,
                                   scenario.polarization, g) for q in scenario.locations])
    resp = np.exp(-1j * np.atleast_2d(phases)) @ A.T
    gain = (np.sqrt(4 * np.pi) / g.wavelength) * np.abs(c)[None, :] * np.abs(resp)
    return 20 * np.log10(np.maximum(gain, 1e-300))


def fit_curvature(scenario, spread_db=BEAM_SPREAD_DB, grid=CURVATURE_GRID):
    """Smallest curvature pair whose -3 dB beam covers every sampled location.

    Candidates are ranked by total curvature; if none keeps the whole area
    within ``spread_db`` of its peak, the pair with the smallest spread wins.
    """
    steer = scenario.area.center.direction
    grid = tuple(np.asarray(grid, dtype=float))
    i, kx, ky = _fit_index(scenario.geom, scenario.ap, scenario.area, scenario.polarization_deg,
                           float(spread_db), grid)
    return QuadraticDesignParams(kx, ky, steer)


@functools.lru_cache(maxsize=64)
def _fit_index(geom, ap, area, polarization_deg, spread_db, grid):
    from .scenario import Scenario

    scenario = Scenario(geom=geom, ap=ap, area=area, polarization_deg=polarization_deg)
    steer = area.center.direction
    kx, ky = np.meshgrid(grid, grid, indexing="ij")
    kx, ky = kx.ravel(), ky.ravel()
    base = quadratic_phases(geom, ap.direction, steer, 0.0, 0.0)
    idx = geom.cell_indices()
    nx2 = (idx[:, 0] / (geom.ux_count / 2)) ** 2
    ny2 = (idx[:, 1] / (geom.uy_count / 2)) ** 2
    phases = base[None, :] + np.pi * (kx[:, None] * nx2[None, :] + ky[:, None] * ny2[None, :])
    gains = _area_gains(scenario, phases)
    spread = gains.max(axis=1) - gains.min(axis=1)
    ok = np.flatnonzero(spread <= spread_db)
    if ok.size:
        # lexsort: primary key last
        i = ok[np.lexsort((kx[ok], kx[ok] + ky[ok]))[0]]
    else:
        i = int(np.argmin(spread))
    return i, float(kx[i]), float(ky[i])


def quadratic_design(scenario, params: QuadraticDesignParams | None = None) -> PhaseDesign:
    """Baseline design; curvatures are fitted to the area unless given."""
    if params is None:
        params = fit_curvature(scenario)
    steer = params.steer_direction or scenario.area.center.direction
    return PhaseDesign.from_phases(quadratic_phases(
        scenario.geom, scenario.ap.direction, steer, params.curvature_x, params.curvature_y))
