"""Estimator-style wrappers: phase designers fitted to a coverage area, and the detector.

Designers take the coverage samples as ``X`` (an ``(n, 3)`` array of
Cartesian device locations in metres); ``fit`` computes a phase design,
``predict`` returns the detection probability at each row of ``X`` and
``score`` the worst case over ``X``. The detector takes received blocks as
rows of a complex ``X``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .baseline import QuadraticDesignParams, fit_curvature, quadratic_design
from .detection import detection_metric, prob_detection, threshold_for_pfa
from .geometry import Location
from .optimizer import MmConfig, optimize_design
from .ris import PhaseDesign
from .scenario import Scenario


def _locations(X):
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    if X.shape[1] != 3:
        raise ValueError(f"expected (n, 3) Cartesian locations, got shape {X.shape}")
    return [Location(*row) for row in X]


class _CoverageDesigner(BaseEstimator):
    """Shared evaluation for fitted phase designs."""

    def _scenario(self):
        return Scenario.table1() if self.scenario is None else self.scenario

    def _stats(self, X):
        sc = self._scenario()
        if X is None:
            return sc.statistics, sc.locations
        locs = _locations(X)
        return [sc.statistics_at(q) for q in locs], locs

    def predict(self, X=None):
        """Detection probability at each location (the fitted area when ``X`` is None)."""
        check_is_fitted(self, "w_")
        stats, _ = self._stats(X)
        params = self._scenario().params
        return np.array([prob_detection(self.w_, s, params) for s in stats])

    def score(self, X=None, y=None):
        """Worst-case detection probability over ``X``."""
        return float(np.min(self.predict(X)))

    @property
    def design_(self):
        check_is_fitted(self, "w_")
        return PhaseDesign(self.w_)


class QuadraticPhaseDesigner(_CoverageDesigner):
    """Steering plus quadratic broadening; curvatures are fitted when left as None."""

    def __init__(self, scenario=None, curvature_x=None, curvature_y=None):
        self.scenario = scenario
        self.curvature_x = curvature_x
        self.curvature_y = curvature_y

    def fit(self, X=None, y=None):
        sc = self._scenario()
        if X is not None:
            _locations(X)
        kx, ky = self.curvature_x, self.curvature_y
        if kx is None or ky is None:
            fitted = fit_curvature(sc)
            kx = fitted.curvature_x if kx is None else kx
            ky = fitted.curvature_y if ky is None else ky
        self.curvatures_ = (float(kx), float(ky))
        self.w_ = quadratic_design(sc, QuadraticDesignParams(kx, ky)).w
        return self


class MinMaxPhaseDesigner(_CoverageDesigner):
    """Worst-case detection design by majorization-minimization.

    Parameters
    ----------
    objective : {"j1", "j2", "j3"}
        Surrogate of the detection probability that is minimized in the worst case.
    scenario : Scenario, optional
        System instance; Table 1 defaults when omitted. ``fit(X)`` replaces
        its sampled locations by the rows of ``X``.
    penalty_rho : float or "auto"
        Rank-one penalty factor; ``"auto"`` picks the smallest of
        1, 10, 100, 1000 that gives a rank-one solution.
    w_init : array-like, optional
        Unit-modulus starting design; the quadratic baseline when omitted.
    """

    def __init__(self, objective="j1", scenario=None, penalty_rho="auto",
                 convergence_nu=1e-7, max_iters=100, rank_one_tol=1e-3,
                 solver_tol=1e-8, solver="internal", w_init=None):
        self.objective = objective
        self.scenario = scenario
        self.penalty_rho = penalty_rho
        self.convergence_nu = convergence_nu
        self.max_iters = max_iters
        self.rank_one_tol = rank_one_tol
        self.solver_tol = solver_tol
        self.solver = solver
        self.w_init = w_init

    def _config(self):
        return MmConfig(penalty_rho=self.penalty_rho, convergence_nu=self.convergence_nu,
                        max_iters=self.max_iters, rank_one_tol=self.rank_one_tol,
                        solver_tol=self.solver_tol, solver=self.solver.upper())

    def fit(self, X=None, y=None):
        sc = self._scenario()
        stats, _ = self._stats(X)
        rho, design, trace = optimize_design(self.objective, sc, self._config(),
                                             self.w_init, stats)
        self.rho_ = rho
        self.trace_ = trace
        self.n_iter_ = trace.n_iters
        self.w_ = design.w
        return self


class GlrtDetector(ClassifierMixin, BaseEstimator):
    """Correlation detector for a known unit-norm preamble.

    ``decision_function`` returns ``T(x) - t``; ``predict`` returns 1 for
    blocks declared active. Nothing is learned: ``fit`` only validates the
    parameters and fixes the threshold.
    """

    def __init__(self, preamble=None, noise_power=1e-13, pfa=0.1):
        self.preamble = preamble
        self.noise_power = noise_power
        self.pfa = pfa

    def fit(self, X=None, y=None):
        if self.preamble is None:
            raise ValueError("a preamble is required")
        s = np.asarray(self.preamble, dtype=complex)
        if s.ndim != 1:
            raise ValueError("preamble must be one-dimensional")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        self.threshold_ = threshold_for_pfa(self.pfa)
        self.classes_ = np.array([0, 1])
        self.preamble_ = s
        return self

    def _blocks(self, X):
        X = np.asarray(X, dtype=complex)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.preamble_.size:
            raise ValueError(f"expected blocks of length {self.preamble_.size}")
        if not np.all(np.isfinite(X)):
            raise ValueError("received blocks contain NaN or inf")
        return X

    def decision_function(self, X):
        check_is_fitted(self, "threshold_")
        return detection_metric(self._blocks(X), self.preamble_, self.noise_power) - self.threshold_

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(int)
