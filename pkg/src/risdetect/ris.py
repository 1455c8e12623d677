"""Physics-based RIS response: cell layout, array response and unit-cell factor."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DENOMINATOR_EPS = 1e-12


class DegenerateDirectionError(ValueError):
    """The unit-cell factor is undefined for the requested direction pair."""


@dataclass(frozen=True)
class RisGeometry:
    """Uniform planar array of ``ux_count * uy_count`` cells in the x-y plane."""

    ux_count: int = 4
    uy_count: int = 8
    spacing_x: float = 0.05
    spacing_y: float = 0.05
    wavelength: float = 0.1

    def __post_init__(self):
        for n in (self.ux_count, self.uy_count):
            if n < 2 or n % 2:
                raise ValueError(f"cell counts must be even and positive, got {n}")
        if self.wavelength <= 0 or self.spacing_x <= 0 or self.spacing_y <= 0:
            raise ValueError("wavelength and spacings must be positive")

    @classmethod
    def half_wavelength(cls, ux_count=4, uy_count=8, wavelength=0.1):
        return cls(ux_count, uy_count, wavelength / 2, wavelength / 2, wavelength)

    @property
    def n_cells(self):
        return self.ux_count * self.uy_count

    def cell_indices(self):
        """Integer offsets ``(u_x, u_y)`` for every cell, shape ``(U, 2)``."""
        u = np.arange(self.n_cells)
        ux = u % self.ux_count - self.ux_count // 2 + 1
        uy = u // self.ux_count - self.uy_count // 2 + 1
        return np.stack([ux, uy], axis=1)

    def coords(self):
        """Cell coordinates, shape ``(U, 3)``."""
        idx = self.cell_indices()
        out = np.zeros((self.n_cells, 3))
        out[:, 0] = self.spacing_x * idx[:, 0]
        out[:, 1] = self.spacing_y * idx[:, 1]
        return out


def cell_coords(u, geom: RisGeometry):
    if not 0 <= u < geom.n_cells:
        raise IndexError(f"cell index {u} outside [0, {geom.n_cells})")
    return geom.coords()[u]


@dataclass(frozen=True)
class PhaseDesign:
    """Unit-modulus phase-shift vector ``w``."""

    w: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex).ravel()
        if not np.allclose(np.abs(w), 1.0, atol=1e-9):
            raise ValueError("phase design entries must have unit modulus")
        object.__setattr__(self, "w", w)

    @classmethod
    def from_phases(cls, phases):
        return cls(np.exp(1j * np.asarray(phases, dtype=float)))

    @property
    def phases(self):
        return np.angle(self.w)

    @property
    def lifted(self):
        return np.outer(self.w, self.w.conj())

    def __len__(self):
        return self.w.size


def wave_vector(direction, wavelength):
    theta, phi = direction
    return (2 * np.pi / wavelength) * np.array([
        np.sin(theta) * np.cos(phi),
        np.sin(theta) * np.sin(phi),
        np.cos(theta),
    ])


def array_response(dir_r, dir_t, geom: RisGeometry):
    """Per-cell phase terms for the reflection from ``dir_t`` toward ``dir_r``."""
    k = wave_vector(dir_r, geom.wavelength) + wave_vector(dir_t, geom.wavelength)
    return np.exp(1j * geom.coords() @ k)


def unit_cell_factor(dir_r, dir_t, polarization, geom: RisGeometry):
    """Complex reflection amplitude of a single cell.

    ``dir_r`` is the reflected (AP side) direction, ``dir_t`` the incident one,
    and ``polarization`` the polarization angle of the incident wave.
    """
    th_r, ph_r = dir_r
    th_t, ph_t = dir_t
    cp, sp = np.cos(polarization), np.sin(polarization)
    num = np.hypot(
        cp * np.cos(th_r) * np.sin(ph_r) - sp * np.cos(th_r) * np.cos(ph_r),
        sp * np.sin(ph_r) + cp * np.cos(ph_r),
    )
    den = np.sqrt(
        (cp * np.sin(th_t) * np.cos(ph_t) + sp * np.sin(th_t) * np.sin(ph_t)) ** 2
        + np.cos(th_t) ** 2
    )
    if den < DENOMINATOR_EPS:
        raise DegenerateDirectionError(
            f"unit-cell factor undefined for incident direction {dir_t!r}")
    lead = np.sqrt(4 * np.pi) * geom.spacing_x * geom.spacing_y / geom.wavelength
    return 1j * lead * np.cos(th_t) * num / den


def _check_length(design, geom):
    w = design.w if isinstance(design, PhaseDesign) else np.asarray(design)
    if w.size != geom.n_cells:
        raise ValueError(f"design has {w.size} entries, geometry has {geom.n_cells} cells")
    return w


def response_gain(design, dir_r, dir_t, polarization, geom: RisGeometry):
    """End-to-end RIS reflection gain ``g`` for one direction pair."""
    w = _check_length(design, geom)
    c = unit_cell_factor(dir_r, dir_t, polarization, geom)
    a = array_response(dir_r, dir_t, geom)
    return np.sqrt(4 * np.pi) / geom.wavelength * c * np.vdot(w, a)


def reflection_pattern(design, ap_dir, grid, polarization, geom: RisGeometry):
    """``|g|^2`` in dB for each grid location, in input order."""
    grid = list(grid)
    if not grid:
        raise ValueError("pattern grid is empty")
    w = _check_length(design, geom)
    out = np.empty(len(grid))
    for i, loc in enumerate(grid):
        g = response_gain(w, ap_dir, loc.direction, polarization, geom)
        out[i] = 10 * np.log10(np.abs(g) ** 2)
    return out
