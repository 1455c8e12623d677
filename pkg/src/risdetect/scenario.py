"""Complete system instance: geometry, coverage area, scatterers and powers."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .channel import (ChannelStatistics, ScattererSet, SystemParams,
                      channel_statistics, scatterer_variances_from_k)
from .geometry import CoverageArea, Location, rotate_toward_normal, sample_area
from .ris import RisGeometry

TABLE1_AREA_CENTER = (-10.0, -30.0, 30.0)
TABLE1_AP = (25.0, np.deg2rad(90.0), np.deg2rad(37.0))
FAST_TX_POWER_DBM = 6.0


@dataclass(frozen=True)
class Scenario:
    geom: RisGeometry = field(default_factory=RisGeometry.half_wavelength)
    ap: Location = field(default_factory=lambda: Location.from_spherical(*TABLE1_AP))
    area: CoverageArea = field(default_factory=lambda: CoverageArea(
        Location(*TABLE1_AREA_CENTER), width_y=20.0, length_z=20.0))
    params: SystemParams = field(default_factory=SystemParams)
    k_factor_db: float = 3.0
    n_scatterers: int = 2
    alpha_deg: float = 30.0
    polarization_deg: float = 0.0

    @classmethod
    def table1(cls, **overrides):
        return cls().with_(**overrides)

    @classmethod
    def fast(cls, **overrides):
        """Small instance (U=8, Q=9) for quick checks.

        The transmit power is raised to 6 dBm so that the smaller array still
        lets every location reach the J1 log domain.
        """
        base = cls(geom=RisGeometry.half_wavelength(2, 4),
                   area=CoverageArea(Location(*TABLE1_AREA_CENTER), 20.0, 20.0, 3, 3),
                   params=SystemParams(tx_power_dbm=FAST_TX_POWER_DBM))
        return base.with_(**overrides)

    def with_(self, *, tx_power_dbm=None, width_y=None, u_cells=None, n_y=None,
              n_z=None, **fields):
        """Copy with flat overrides for the commonly swept quantities."""
        out = replace(self, **fields) if fields else self
        if tx_power_dbm is not None:
            out = replace(out, params=replace(out.params, tx_power_dbm=float(tx_power_dbm)))
        if width_y is not None:
            out = replace(out, area=replace(out.area, width_y=float(width_y)))
        if n_y is not None or n_z is not None:
            out = replace(out, area=replace(out.area, n_y=n_y or out.area.n_y,
                                            n_z=n_z or out.area.n_z))
        if u_cells is not None:
            ux = out.geom.ux_count
            if u_cells % ux or (u_cells // ux) % 2:
                raise ValueError(f"{u_cells} cells cannot be laid out with U_x={ux}")
            out = replace(out, geom=replace(out.geom, uy_count=u_cells // ux))
        return out

    @property
    def polarization(self):
        return np.deg2rad(self.polarization_deg)

    @property
    def n_cells(self):
        return self.geom.n_cells

    @cached_property
    def locations(self) -> list[Location]:
        return sample_area(self.area)

    @cached_property
    def scatterer_directions(self):
        """Cluster directions at +/- alpha around the area-center direction."""
        if self.n_scatterers == 0:
            return ()
        center = self.area.center.direction
        alpha = np.deg2rad(self.alpha_deg)
        offsets = np.linspace(alpha, -alpha, self.n_scatterers) if self.n_scatterers > 1 else [0.0]
        return tuple(rotate_toward_normal(center, off) for off in offsets)

    def scatterers_for(self, device: Location) -> ScattererSet:
        if self.n_scatterers == 0:
            return ScattererSet()
        var = scatterer_variances_from_k(device, self.k_factor_db, self.n_scatterers,
                                         self.geom.wavelength)
        return ScattererSet(self.scatterer_directions, tuple(var))

    def statistics_at(self, device: Location) -> ChannelStatistics:
        return channel_statistics(device, self.ap, self.scatterers_for(device),
                                  self.geom, self.polarization)

    @cached_property
    def statistics(self) -> list[ChannelStatistics]:
        return [self.statistics_at(q) for q in self.locations]

    def to_dict(self):
        """Flat plain-data view; angles in degrees. Inverse of :meth:`from_dict`."""
        d, theta, phi = self.ap.spherical
        return {
            "ux_count": self.geom.ux_count,
            "uy_count": self.geom.uy_count,
            "spacing_x": self.geom.spacing_x,
            "spacing_y": self.geom.spacing_y,
            "wavelength": self.geom.wavelength,
            "ap_distance": float(d),
            "ap_theta_deg": float(np.rad2deg(theta)),
            "ap_phi_deg": float(np.rad2deg(phi)),
            "area_center": [self.area.center.x, self.area.center.y, self.area.center.z],
            "width_y": self.area.width_y,
            "length_z": self.area.length_z,
            "n_y": self.area.n_y,
            "n_z": self.area.n_z,
            "tx_power_dbm": self.params.tx_power_dbm,
            "antennas": self.params.antennas,
            "preamble_len": self.params.preamble_len,
            "noise_power_dbm": self.params.noise_power_dbm,
            "pfa": self.params.pfa,
            "k_factor_db": self.k_factor_db,
            "n_scatterers": self.n_scatterers,
            "alpha_deg": self.alpha_deg,
            "polarization_deg": self.polarization_deg,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - set(cls().to_dict())
        if unknown:
            raise KeyError(f"unknown scenario keys: {sorted(unknown)}")
        base = cls().to_dict()
        base.update(d)
        d = base
        geom = RisGeometry(int(d["ux_count"]), int(d["uy_count"]), float(d["spacing_x"]),
                           float(d["spacing_y"]), float(d["wavelength"]))
        ap = Location.from_spherical(float(d["ap_distance"]), np.deg2rad(d["ap_theta_deg"]),
                                     np.deg2rad(d["ap_phi_deg"]))
        area = CoverageArea(Location(*map(float, d["area_center"])), float(d["width_y"]),
                            float(d["length_z"]), int(d["n_y"]), int(d["n_z"]))
        params = SystemParams(float(d["tx_power_dbm"]), int(d["antennas"]),
                              int(d["preamble_len"]), float(d["noise_power_dbm"]),
                              float(d["pfa"]))
        return cls(geom, ap, area, params, float(d["k_factor_db"]), int(d["n_scatterers"]),
                   float(d["alpha_deg"]), float(d["polarization_deg"]))
