"""Experiment configuration, parameter sweeps, pattern grids and validation studies.

Configurations are YAML documents with the sections ``scenario``,
``optimizer``, ``objectives``, ``sweep``, ``pattern``, ``montecarlo`` and
``accuracy`` plus the scalars ``profile``, ``seed``, ``workers`` and ``out``.
Two complete profiles ship with the package (``table1`` and ``fast``); user
files override any subset of keys on top of a profile.

All CSV output uses a header row and 9 significant digits. Rows are written
in a fixed order, independent of worker scheduling, so that identical
configurations produce byte-identical files. Wall-clock times go to a
separate ``*.timing.csv`` for the same reason.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .baseline import quadratic_design
from .detection import min_prob_detection, monte_carlo_rates, prob_detection
from .geometry import Location
from .objectives import ObjectiveKind, approximation_errors
from .optimizer import MmConfig, SubproblemError, optimize_design
from .ris import PhaseDesign, reflection_pattern
from .scenario import Scenario

log = logging.getLogger(__name__)

PROFILES = ("table1", "fast")
SWEEP_VARIABLES = {
    "ptx": "tx_power_dbm",
    "k_db": "k_factor_db",
    "alpha": "alpha_deg",
    "dy": "width_y",
    "u_cells": "u_cells",
}
SWEEP_COLUMNS = ["variable", "sweep_value", "objective", "min_pd", "argmin_location",
                 "argmin_y", "argmin_z", "rho", "iters", "rank_ratio", "status", "config_id"]
SECTIONS = ("scenario", "optimizer", "sweep", "pattern", "montecarlo", "accuracy")
SCALARS = ("profile", "seed", "workers", "out", "objectives")


def fmt(x):
    """Fixed CSV formatting: integers verbatim, floats with 9 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.9g}"
    return "" if x is None else str(x)


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for r in rows:
            wr.writerow([fmt(r.get(c)) for c in columns])
    return path


def _merge(base, over, where="config"):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in out:
            raise KeyError(f"unknown key {where}.{k}")
        if isinstance(out[k], dict) and k != "scenario":
            if not isinstance(v, dict):
                raise TypeError(f"{where}.{k} must be a mapping")
            out[k] = _merge(out[k], v, f"{where}.{k}")
        elif isinstance(out[k], dict):
            if not isinstance(v, dict):
                raise TypeError(f"{where}.{k} must be a mapping")
            out[k] = {**out[k], **v}
        else:
            out[k] = v
    return out


def load_profile(name):
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; choose from {PROFILES}")
    text = resources.files("risdetect.profiles").joinpath(f"{name}.yaml").read_text()
    return yaml.safe_load(text)


@dataclass
class ExperimentConfig:
    """Fully resolved experiment configuration (plain data, YAML round-trippable)."""

    data: dict = field(default_factory=lambda: load_profile("table1"))

    @classmethod
    def profile(cls, name="table1", overrides=None):
        data = load_profile(name)
        if overrides:
            data = _merge(data, overrides)
        cfg = cls(data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, profile=None):
        """Read a YAML file; its ``profile`` key (or ``profile``) supplies the defaults."""
        with open(path) as fh:
            user = yaml.safe_load(fh) or {}
        name = profile or user.get("profile", "table1")
        user = {k: v for k, v in user.items() if k != "profile"}
        return cls.profile(name, user)

    def with_overrides(self, overrides):
        cfg = ExperimentConfig(_merge(self.data, overrides))
        cfg.validate()
        return cfg

    def validate(self):
        d = self.data
        for k in SECTIONS + SCALARS:
            if k not in d:
                raise KeyError(f"config lacks {k!r}")
        self.scenario()
        self.mm_config()
        for obj in d["objectives"]:
            ObjectiveKind.parse(obj)
        if d["sweep"]["variable"] not in SWEEP_VARIABLES:
            raise ValueError(f"sweep variable must be one of {sorted(SWEEP_VARIABLES)}")
        if not d["sweep"]["values"]:
            raise ValueError("sweep values are empty")
        if int(d["workers"]) < 1:
            raise ValueError("workers must be at least 1")
        p = d["pattern"]
        if p["columns"] < 1 or p["rows"] < 1 or p["y_max"] <= p["y_min"] or p["z_max"] <= p["z_min"]:
            raise ValueError("invalid pattern grid")
        if int(d["montecarlo"]["trials"]) < 1:
            raise ValueError("montecarlo trials must be at least 1")

    def scenario(self, **overrides):
        return Scenario.from_dict(self.data["scenario"]).with_(**overrides)

    def mm_config(self):
        o = dict(self.data["optimizer"])
        o["solver"] = str(o.get("solver", "internal")).upper()
        return MmConfig(**o)

    @property
    def seed(self):
        return int(self.data["seed"])

    def to_yaml(self):
        return yaml.safe_dump(self.data, sort_keys=True)

    def config_id(self):
        """Short digest of the result-relevant configuration, stamped on every sweep row.

        ``out`` and ``workers`` do not change any result and are left out.
        """
        d = {k: v for k, v in self.data.items() if k not in ("out", "workers")}
        return hashlib.sha256(yaml.safe_dump(d, sort_keys=True).encode()).hexdigest()[:12]

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_yaml())
        return path


# ---------------------------------------------------------------- designs

def build_design(objective, scenario, mm_config=None):
    """Optimized or baseline design for one objective.

    Returns ``(design, info)`` where ``info`` holds ``rho``, ``iters``,
    ``rank_ratio`` and ``status`` (``ok`` or a short reason).
    """
    kind = ObjectiveKind.parse(objective)
    if kind is ObjectiveKind.QUADRATIC:
        return quadratic_design(scenario), {"rho": None, "iters": 0, "rank_ratio": 1.0,
                                            "status": "ok"}
    rho, design, trace = optimize_design(kind, scenario, mm_config)
    status = "ok" if trace.warning is None else "warning: " + trace.warning
    return design, {"rho": rho, "iters": trace.n_iters,
                    "rank_ratio": trace.final_rank_ratio, "status": status,
                    "trace": trace}


def read_design(path):
    """Phases CSV written by :func:`write_design` (columns ``cell, phase_rad``)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "phase_rad" not in rows[0]:
        raise ValueError(f"{path} is not a phase design file")
    return PhaseDesign.from_phases([float(r["phase_rad"]) for r in rows])


def write_design(path, design):
    ph = design.phases
    return write_csv(path, ["cell", "phase_rad", "re", "im"],
                     [{"cell": i, "phase_rad": ph[i], "re": design.w[i].real,
                       "im": design.w[i].imag} for i in range(len(design))])


def evaluate_design(design, scenario):
    """Per-location detection probabilities as CSV-ready rows."""
    rows = []
    for i, (q, st) in enumerate(zip(scenario.locations, scenario.statistics)):
        rows.append({"location": i, "x": q.x, "y": q.y, "z": q.z,
                     "pd": prob_detection(design, st, scenario.params)})
    return rows


# ---------------------------------------------------------------- sweep

def _sweep_point(task):
    variable, value, objective, scen_dict, opt_dict = task
    sc = Scenario.from_dict(scen_dict).with_(**{SWEEP_VARIABLES[variable]: value})
    opt_dict = dict(opt_dict, solver=str(opt_dict.get("solver", "internal")).upper())
    row = {"variable": variable, "sweep_value": value, "objective": objective}
    t0 = time.perf_counter()
    try:
        design, info = build_design(objective, sc, MmConfig(**opt_dict))
        pd, i = min_prob_detection(design, sc.statistics, sc.params)
        q = sc.locations[i]
        info.pop("trace", None)
        row.update(info, min_pd=pd, argmin_location=i, argmin_y=q.y, argmin_z=q.z)
    except (SubproblemError, ValueError, np.linalg.LinAlgError) as exc:
        row.update(status=f"error: {type(exc).__name__}: {exc}".replace("\n", " "))
    return row, time.perf_counter() - t0


def sweep_tasks(config: ExperimentConfig):
    d = config.data
    var = d["sweep"]["variable"]
    vals = d["sweep"]["values"]
    if var == "u_cells":
        vals = [int(v) for v in vals]
    else:
        vals = [float(v) for v in vals]
    return [(var, v, str(obj).lower(), d["scenario"], d["optimizer"])
            for v in vals for obj in d["objectives"]]


def run_sweep(config: ExperimentConfig):
    """Evaluate every sweep value and objective.

    Returns ``(rows, timings)``; ``rows`` follow the order value-major,
    objective-minor regardless of ``workers``. Failures become rows whose
    ``status`` starts with ``error`` and the sweep goes on.
    """
    tasks = sweep_tasks(config)
    workers = int(config.data["workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]
    cid = config.config_id()
    rows, timings = [], []
    for (row, wall), t in zip(results, tasks):
        row["config_id"] = cid
        rows.append(row)
        timings.append({"sweep_value": t[1], "objective": t[2], "wall_time": wall})
    return rows, timings


def write_sweep(out_dir, config, rows, timings, name="sweep"):
    out_dir = Path(out_dir)
    path = write_csv(out_dir / f"{name}.csv", SWEEP_COLUMNS, rows)
    write_csv(out_dir / f"{name}.timing.csv", ["sweep_value", "objective", "wall_time"], timings)
    config.save(out_dir / f"{name}.config.yaml")
    return path


# ---------------------------------------------------------------- pattern

def pattern_grid(pattern):
    """Cell-center grid in the plane ``x = pattern['x']``; rows along z, columns along y."""
    ny, nz = int(pattern["columns"]), int(pattern["rows"])
    dy = (pattern["y_max"] - pattern["y_min"]) / ny
    dz = (pattern["z_max"] - pattern["z_min"]) / nz
    ys = pattern["y_min"] + dy * (np.arange(ny) + 0.5)
    zs = pattern["z_min"] + dz * (np.arange(nz) + 0.5)
    return ys, zs


def export_pattern(config: ExperimentConfig, design, scenario=None):
    """Reflection gain ``|g|^2`` in dB on the pattern grid as rows ``(y, z, gain_db)``.

    Rows are ordered by ascending ``z`` and, within a row, ascending ``y``.
    """
    sc = scenario or config.scenario()
    p = config.data["pattern"]
    ys, zs = pattern_grid(p)
    grid = [Location(float(p["x"]), float(y), float(z)) for z in zs for y in ys]
    gains = reflection_pattern(design, sc.ap.direction, grid, sc.polarization, sc.geom)
    return [{"y": q.y, "z": q.z, "gain_db": g} for q, g in zip(grid, gains)]


# ---------------------------------------------------------------- validation studies

def run_accuracy(config: ExperimentConfig):
    """Worst-case relative errors of the two detection-probability approximations per K."""
    rows = []
    for k in config.data["accuracy"]["k_db"]:
        sc = config.scenario(k_factor_db=float(k))
        mm = config.mm_config()
        _, w1, _ = optimize_design("j1", sc, mm)
        _, w2, _ = optimize_design("j2", sc, mm)
        e = approximation_errors(w1.w, w2.w, sc)
        rows.append({"k_db": float(k), "eps_j1": e["eps_j1"], "loc_j1": e["loc_j1"],
                     "eps_j2": e["eps_j2"], "loc_j2": e["loc_j2"]})
    return rows


def run_montecarlo(config: ExperimentConfig, design, scenario=None):
    """Empirical vs analytic detection rates at every sample location.

    Each location draws from its own child of ``SeedSequence(seed)``, so the
    result depends only on the seed and the location index. ``band`` is the
    3-sigma binomial half-width around the analytic value.
    """
    sc = scenario or config.scenario()
    mc = config.data["montecarlo"]
    n = int(mc["trials"])
    children = np.random.SeedSequence(config.seed).spawn(len(sc.locations))
    rows = []
    for i, (st, ss) in enumerate(zip(sc.statistics, children)):
        pd = prob_detection(design, st, sc.params)
        pfa_hat, pd_hat = monte_carlo_rates(design, st, sc.params, mc["gamma_phase"], n,
                                            np.random.default_rng(ss))
        band = 3 * np.sqrt(max(pd * (1 - pd), 1.0 / n) / n)
        rows.append({"location": i, "pd": pd, "pd_empirical": pd_hat,
                     "pfa": sc.params.pfa, "pfa_empirical": pfa_hat, "trials": n,
                     "band": band, "within_band": bool(abs(pd_hat - pd) <= band)})
    return rows
