"""Coordinate conventions and coverage-area sampling.

The origin sits at the RIS center, the surface lies in the x-y plane and
its normal points along +z. Elevation ``theta`` is measured from +z and
azimuth ``phi`` from +x inside the x-y plane.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sphere_to_cart(d, theta, phi):
    """Spherical ``(d, theta, phi)`` to Cartesian ``(x, y, z)``."""
    st = np.sin(theta)
    return d * st * np.cos(phi), d * st * np.sin(phi), d * np.cos(theta)


def cart_to_sphere(x, y, z):
    """Cartesian to spherical; ``phi`` is 0 on the z axis and at the origin."""
    d = float(np.sqrt(x * x + y * y + z * z))
    if d == 0.0:
        return 0.0, 0.0, 0.0
    theta = float(np.arccos(np.clip(z / d, -1.0, 1.0)))
    rho = np.hypot(x, y)
    phi = float(np.arctan2(y, x)) if rho > 0.0 else 0.0
    if phi == -np.pi:
        phi = np.pi
    return d, theta, phi


@dataclass(frozen=True)
class Location:
    """A point in space, stored in Cartesian form."""

    x: float
    y: float
    z: float

    @classmethod
    def from_spherical(cls, d, theta, phi):
        return cls(*(float(c) for c in sphere_to_cart(d, theta, phi)))

    @property
    def cart(self):
        return np.array([self.x, self.y, self.z])

    @property
    def spherical(self):
        return cart_to_sphere(self.x, self.y, self.z)

    @property
    def distance(self):
        return self.spherical[0]

    @property
    def direction(self):
        """``(theta, phi)`` as seen from the RIS center."""
        _, theta, phi = self.spherical
        return theta, phi


@dataclass(frozen=True)
class CoverageArea:
    """Rectangle in the plane ``x = center.x`` spanning ``width_y`` by ``length_z``."""

    center: Location
    width_y: float
    length_z: float
    n_y: int = 9
    n_z: int = 9

    def __post_init__(self):
        if self.n_y < 1 or self.n_z < 1:
            raise ValueError("grid resolution must be at least 1 in each direction")
        if self.width_y < 0 or self.length_z < 0:
            raise ValueError("area dimensions must be nonnegative")

    @property
    def n_samples(self):
        return self.n_y * self.n_z

    def corners(self):
        c = self.center
        hy, hz = self.width_y / 2, self.length_z / 2
        return [Location(c.x, c.y + sy * hy, c.z + sz * hz)
                for sz in (-1, 1) for sy in (-1, 1)]


def _axis(center, extent, n):
    if n == 1:
        return np.array([center])
    return center + np.linspace(-extent / 2, extent / 2, n)


def sample_area(area: CoverageArea) -> list[Location]:
    """Uniform grid over the area, boundary rows and columns included.

    Rows run along z (outer loop), columns along y (inner loop).
    """
    ys = _axis(area.center.y, area.width_y, area.n_y)
    zs = _axis(area.center.z, area.length_z, area.n_z)
    return [Location(area.center.x, float(y), float(z)) for z in zs for y in ys]


def unit_vector(theta, phi):
    return np.array(sphere_to_cart(1.0, theta, phi))


def rotate_toward_normal(direction, angle):
    """Rotate a direction by ``angle`` inside the plane it spans with +z.

    Positive angles move the direction away from the normal (larger theta).
    Returns the rotated ``(theta, phi)``.
    """
    u = unit_vector(*direction)
    axis = np.cross([0.0, 0.0, 1.0], u)
    norm = np.linalg.norm(axis)
    # boresight directions leave the plane undefined; fall back to the x axis
    axis = axis / norm if norm > 1e-12 else np.array([1.0, 0.0, 0.0])
    # Rodrigues rotation about ``axis``
    c, s = np.cos(angle), np.sin(angle)
    v = u * c + np.cross(axis, u) * s + axis * np.dot(axis, u) * (1 - c)
    _, theta, phi = cart_to_sphere(*v)
    return theta, phi
