"""GLRT activity detector and its analytical performance.

The detector correlates the received block with the normalized preamble,
``T(x) = |s^H x|^2 / sigma^2``, and declares the device active when the
metric exceeds ``t = -ln(P_F)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelStatistics, SystemParams
from .special import marcum_q1

PREAMBLE_NORM_TOL = 1e-9


@dataclass(frozen=True)
class DetectionOutcome:
    metric: float
    threshold: float

    @property
    def decided_active(self):
        return self.metric > self.threshold


@dataclass(frozen=True)
class DetectionProbabilities:
    """Analytic operating point; ``noncentrality`` and ``scale`` describe the
    scaled noncentral chi-squared law of ``T(x)`` under the active hypothesis."""

    pfa: float
    pd: float
    noncentrality: float
    scale: float


def _design_vector(design):
    return np.asarray(getattr(design, "w", design), dtype=complex)


def random_preamble(length, rng=None):
    """Unit-modulus QPSK symbols scaled to unit norm."""
    rng = np.random.default_rng(rng)
    sym = np.exp(1j * (np.pi / 4 + np.pi / 2 * rng.integers(0, 4, size=length)))
    return sym / np.sqrt(length)


def detection_metric(x, preamble, noise_power):
    """Correlation metric; ``x`` may be a single block or a stack of blocks."""
    s = np.asarray(preamble, dtype=complex)
    if abs(np.linalg.norm(s) - 1.0) > PREAMBLE_NORM_TOL:
        raise ValueError("preamble must have unit norm")
    corr = np.asarray(x, dtype=complex) @ s.conj()
    out = np.abs(corr) ** 2 / noise_power
    return float(out) if np.ndim(out) == 0 else out


def threshold_for_pfa(pfa):
    if not 0.0 < pfa <= 1.0:
        raise ValueError(f"pfa must lie in (0, 1], got {pfa}")
    return -np.log(pfa)


def detect(x, preamble, noise_power, pfa) -> DetectionOutcome:
    return DetectionOutcome(detection_metric(x, preamble, noise_power), threshold_for_pfa(pfa))


def detection_parameters(design, stats: ChannelStatistics, params: SystemParams):
    """Marcum Q arguments and distribution parameters for one location."""
    w = _design_vector(design)
    P, s2 = params.power, params.noise_power
    los_pow = abs(np.vdot(w, stats.los)) ** 2
    var = max(float(np.real(np.vdot(w, stats.cov @ w))), 0.0)
    denom = var * P + s2
    a = np.sqrt(2 * P * los_pow / denom)
    b = np.sqrt(-2 * s2 * np.log(params.pfa) / denom)
    return a, b, denom / (2 * s2)


def detection_probabilities(design, stats, params) -> DetectionProbabilities:
    a, b, scale = detection_parameters(design, stats, params)
    return DetectionProbabilities(params.pfa, marcum_q1(a, b), a * a, scale)


def prob_detection(design, stats: ChannelStatistics, params: SystemParams) -> float:
    """Closed-form detection probability ``Q_1(a, b)``."""
    a, b, _ = detection_parameters(design, stats, params)
    return marcum_q1(a, b)


def min_prob_detection(design, stats_list, params):
    """Worst-case detection probability over locations and its index."""
    pd = np.array([prob_detection(design, s, params) for s in stats_list])
    i = int(np.argmin(pd))
    return float(pd[i]), i


def estimate_gamma(x, y, z):
    """ML estimate of ``gamma`` in ``x ~ CN(y z gamma, c1 y y^H + c2 I)``."""
    y = np.asarray(y, dtype=complex)
    yy = np.vdot(y, y).real
    if yy == 0 or z == 0:
        raise ValueError("y and z must be nonzero")
    return np.vdot(y, x) / (yy * z)


def woodbury_inverse(c1, c2, y):
    """Inverse of ``c1 y y^H + c2 I`` via the matrix inversion lemma."""
    y = np.asarray(y, dtype=complex)
    yyh = np.outer(y, y.conj())
    return (np.eye(y.size) - c1 * yyh / (c2 + c1 * np.vdot(y, y).real)) / c2


def log_likelihood_ratio(x, mean, cov1, noise_power):
    """Log of the Gaussian likelihood ratio active/inactive for one block."""
    x = np.asarray(x, dtype=complex)
    cov0 = noise_power * np.eye(x.size)
    _, logdet0 = np.linalg.slogdet(cov0)
    _, logdet1 = np.linalg.slogdet(cov1)
    r = x - mean
    q1 = np.vdot(r, np.linalg.solve(cov1, r)).real
    q0 = np.vdot(x, x).real / noise_power
    return logdet0 - logdet1 - q1 + q0


def monte_carlo_rates(design, stats: ChannelStatistics, params: SystemParams,
                      gamma_phase=None, trials=10_000, rng=None, preamble=None,
                      chunk=8192):
    """Empirical false-alarm and detection rates of the correlation detector.

    Full received blocks are simulated under both hypotheses. ``gamma_phase``
    fixes the unknown LoS phase; ``None`` draws it uniformly per trial.
    """
    rng = np.random.default_rng(rng)
    S = params.preamble_len
    s = random_preamble(S, rng) if preamble is None else np.asarray(preamble)
    w = _design_vector(design)
    mean = np.vdot(w, stats.los)
    var = max(float(np.real(np.vdot(w, stats.cov @ w))), 0.0)
    P, s2 = params.power, params.noise_power
    t = threshold_for_pfa(params.pfa)
    fa = hits = 0
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        noise0 = np.sqrt(s2 / 2) * (rng.standard_normal((n, S)) + 1j * rng.standard_normal((n, S)))
        fa += int(np.count_nonzero(detection_metric(noise0, s, s2) > t))
        if gamma_phase is None:
            gam = rng.uniform(0, 2 * np.pi, n)
        else:
            gam = np.full(n, float(gamma_phase))
        fading = np.sqrt(var / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        h = np.exp(1j * gam) * mean + fading
        noise1 = np.sqrt(s2 / 2) * (rng.standard_normal((n, S)) + 1j * rng.standard_normal((n, S)))
        x1 = (h * np.sqrt(P))[:, None] * s[None, :] + noise1
        hits += int(np.count_nonzero(detection_metric(x1, s, s2) > t))
        done += n
    return fa / trials, hits / trials
