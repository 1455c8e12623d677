"""Design objectives on the lifted variable ``W = w w^H``.

``J1`` comes from the Gaussian-Q lower bound on ``Q_1(a, b)``, ``J2`` keeps
only the LoS power, ``J3`` is the negative average channel gain. All of them
are minimized; the worst case over the coverage area is the max.
"""
from __future__ import annotations

import enum

import numpy as np

from .channel import ChannelStatistics, SystemParams
from .special import gaussian_q, marcum_q1

TRACE_IMAG_TOL = 1e-10
TRACE_NEG_TOL = 1e-12


class ObjectiveKind(str, enum.Enum):
    J1 = "j1"
    J2 = "j2"
    J3 = "j3"
    QUADRATIC = "quadratic"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


class InfeasibleObjectiveError(ValueError):
    """``J1`` is undefined: the LoS power is too small for the log argument."""

    def __init__(self, msg, location=None):
        super().__init__(msg)
        self.location = location


def real_trace(A, B):
    """``tr(A B)`` for Hermitian ``A, B``, with an imaginary-residue check."""
    val = np.vdot(np.asarray(B).conj().T, np.asarray(A))
    scale = max(abs(val), np.finfo(float).tiny)
    if abs(val.imag) > TRACE_IMAG_TOL * scale and abs(val.imag) > 1e-300:
        raise ValueError(f"trace has imaginary residue {val.imag:.3e}")
    return float(val.real)


def _traces(W, stats: ChannelStatistics):
    los = np.asarray(stats.los)
    twm = np.vdot(los, W @ los)
    twc = real_trace(W, stats.cov)
    if abs(twm.imag) > TRACE_IMAG_TOL * max(abs(twm), 1e-300):
        raise ValueError("tr(WM) has an imaginary residue")
    twm = float(twm.real)
    for name, v in (("tr(WM)", twm), ("tr(WC)", twc)):
        if v < -TRACE_NEG_TOL * max(1.0, np.linalg.norm(W)):
            raise ValueError(f"{name} is negative ({v:.3e})")
    return max(twm, 0.0), max(twc, 0.0)


def _normalized(W, stats, params):
    """Traces in noise-normalized units: ``P tr(W M) / sigma^2`` and ``P tr(W C) / sigma^2``."""
    twm, twc = _traces(W, stats)
    k = params.snr_scale
    return k * twm, k * twc


def ab_params(W, stats: ChannelStatistics, params: SystemParams):
    """Marcum Q arguments ``(a, b)`` written in terms of ``W``."""
    m, c = _normalized(W, stats, params)
    d = c + 1.0
    return np.sqrt(2 * m / d), np.sqrt(-2 * np.log(params.pfa) / d)


def _j1_parts(W, stats, params):
    m, c = _normalized(W, stats, params)
    gap = np.sqrt(2 * m) - np.sqrt(-2 * np.log(params.pfa))
    if gap <= 0:
        raise InfeasibleObjectiveError(
            "LoS power too small: sqrt(2 P tr(WM)) must exceed sqrt(-2 sigma^2 ln P_F)")
    # ln sqrt(tr(WC)P + s2) - ln(sqrt(2P tr(WM)) - sqrt(-2 s2 ln PF)); the ln(sigma) terms cancel
    return -np.log(gap), 0.5 * np.log(c + 1.0)


def j1(W, stats, params, location=None):
    try:
        cvx, ccv = _j1_parts(W, stats, params)
    except InfeasibleObjectiveError as err:
        raise InfeasibleObjectiveError(str(err), location) from None
    return float(cvx + ccv)


def j1_convex_part(W, stats, params):
    return float(_j1_parts(W, stats, params)[0])


def j1_concave_part(W, stats, params):
    _, c = _normalized(W, stats, params)
    return float(0.5 * np.log(c + 1.0))


def j1_concave_gradient(W_prev, stats, params):
    """Gradient of ``ln sqrt(tr(W C) P + sigma^2)`` with respect to ``W``."""
    twc = _traces(W_prev, stats)[1]
    P, s2 = params.power, params.noise_power
    return 0.5 * stats.cov * P / (twc * P + s2)


def j1_majorizer(W, W_prev, stats, params):
    """Convex upper bound of ``J1`` that touches it at ``W_prev``."""
    cvx = j1_convex_part(W, stats, params)
    _, c_prev = _normalized(W_prev, stats, params)
    _, c_now = _normalized(W, stats, params)
    return float(cvx + 0.5 * np.log(c_prev + 1.0) + 0.5 * (c_now - c_prev) / (c_prev + 1.0))


def j2(W, stats):
    return -_traces(W, stats)[0]


def j3(W, stats):
    twm, twc = _traces(W, stats)
    return -(twm + twc)


def objective_value(kind, W, stats, params, location=None):
    kind = ObjectiveKind.parse(kind)
    if kind is ObjectiveKind.J1:
        return j1(W, stats, params, location)
    if kind is ObjectiveKind.J2:
        return j2(W, stats)
    if kind is ObjectiveKind.J3:
        return j3(W, stats)
    raise ValueError("the quadratic baseline has no objective function")


def worst_case_objective(W, kind, scenario, stats_list=None):
    """``max_q J_k(W, q)`` and the index of the first maximizing location.

    Locations where ``J1`` is undefined count as ``+inf``.
    """
    stats_list = scenario.statistics if stats_list is None else stats_list
    if not stats_list:
        raise ValueError("coverage area has no sample locations")
    vals = np.empty(len(stats_list))
    for i, st in enumerate(stats_list):
        try:
            vals[i] = objective_value(kind, W, st, scenario.params, location=i)
        except InfeasibleObjectiveError:
            vals[i] = np.inf
    i = int(np.argmax(vals))
    return float(vals[i]), i


def markov_bound(W, stats, params):
    """Markov-inequality upper bound on the detection probability."""
    twm, twc = _traces(W, stats)
    P, s2 = params.power, params.noise_power
    return ((twm + twc) * P + s2) / (-s2 * np.log(params.pfa))


def approximation_errors(w_j1, w_j2, scenario):
    """Worst-case relative errors of the two Marcum-Q approximations.

    ``eps_j1`` compares the Gaussian-Q lower bound with ``Q_1`` for the
    ``J1`` design, ``eps_j2`` compares the scattering-free ``Q_1`` with the
    true one for the ``J2`` design. Signed values at the locations of largest
    magnitude are returned together with those location indices.
    """
    params = scenario.params
    W1 = np.outer(w_j1, np.conj(w_j1))
    W2 = np.outer(w_j2, np.conj(w_j2))
    e1, e2 = [], []
    for st in scenario.statistics:
        a1, b1 = ab_params(W1, st, params)
        e1.append(gaussian_q(b1 - a1) / marcum_q1(a1, b1) - 1.0)
        a2, b2 = ab_params(W2, st, params)
        m2 = params.snr_scale * _traces(W2, st)[0]
        a2t, b2t = np.sqrt(2 * m2), np.sqrt(-2 * np.log(params.pfa))
        e2.append(marcum_q1(a2t, b2t) / marcum_q1(a2, b2) - 1.0)
    e1, e2 = np.array(e1), np.array(e2)
    i1, i2 = int(np.argmax(np.abs(e1))), int(np.argmax(np.abs(e2)))
    return {
        "eps_j1": float(e1[i1]), "eps_j2": float(e2[i2]),
        "loc_j1": i1, "loc_j2": i2,
        "eps_j1_all": e1, "eps_j2_all": e2,
    }
