import numpy as np
import pytest
from scipy import stats as sps

from risdetect.channel import ChannelStatistics, SystemParams
from risdetect.detection import prob_detection
from risdetect.objectives import (InfeasibleObjectiveError, ObjectiveKind, ab_params,
                                  approximation_errors, j1, j1_concave_gradient,
                                  j1_concave_part, j1_convex_part, j1_majorizer, j2, j3,
                                  markov_bound, objective_value, worst_case_objective)
from risdetect.special import gaussian_q, marcum_q1

from conftest import random_design, random_psd

PARAMS = SystemParams(tx_power_dbm=-20)


def _stats(rng, U=8, cov=True):
    h = 3e-5 * (rng.standard_normal(U) + 1j * rng.standard_normal(U))
    A = 1e-6 * (rng.standard_normal((U, 2)) + 1j * rng.standard_normal((U, 2)))
    return ChannelStatistics(h, A @ A.conj().T if cov else np.zeros((U, U), complex))


def _unit_diag_psd(U, rng):
    W = random_psd(U, rng)
    d = np.sqrt(np.real(np.diag(W)))
    return W / np.outer(d, d)


def test_j1_constructed_value():
    p = SystemParams()
    P, s2, beta = p.power, p.noise_power, np.sqrt(-2 * p.noise_power * np.log(p.pfa))
    h = np.array([np.sqrt((np.e + beta) ** 2 / (2 * P))], dtype=complex)
    C = np.array([[(1 - s2) / P]], dtype=complex)
    assert j1(np.eye(1), ChannelStatistics(h, C), p) == pytest.approx(-1.0, abs=1e-12)


def test_j1_is_minus_log_of_a_minus_b(rng):
    st = _stats(rng)
    for _ in range(5):
        W = _unit_diag_psd(8, rng)
        a, b = ab_params(W, st, PARAMS)
        assert j1(W, st, PARAMS) == pytest.approx(-np.log(a - b), rel=1e-12)
        assert j1_convex_part(W, st, PARAMS) + j1_concave_part(W, st, PARAMS) == pytest.approx(
            j1(W, st, PARAMS))


def test_ab_params_rank_one_matches_vector_form(rng):
    st = _stats(rng)
    w = random_design(8, rng)
    a, b = ab_params(np.outer(w, w.conj()), st, PARAMS)
    assert marcum_q1(a, b) == pytest.approx(prob_detection(w, st, PARAMS), abs=1e-14)
    st0 = _stats(rng, cov=False)
    a, b = ab_params(np.outer(w, w.conj()), st0, PARAMS)
    assert a == pytest.approx(np.sqrt(2 * PARAMS.power / PARAMS.noise_power) * abs(np.vdot(w, st0.los)))
    assert b == pytest.approx(np.sqrt(-2 * np.log(PARAMS.pfa)))
    a0, _ = ab_params(np.zeros((8, 8)), st0, PARAMS)
    assert a0 == 0


def test_j1_infeasible(rng):
    st = ChannelStatistics(np.full(8, 1e-12, complex), np.zeros((8, 8), complex))
    with pytest.raises(InfeasibleObjectiveError) as exc:
        j1(np.eye(8), st, PARAMS, location=3)
    assert exc.value.location == 3


def test_j2_j3(rng):
    st = _stats(rng)
    assert j2(np.eye(8), st) == pytest.approx(-np.sum(np.abs(st.los) ** 2))
    w = random_design(8, rng)
    W = np.outer(w, w.conj())
    assert j2(W, st) == pytest.approx(-abs(np.vdot(w, st.los)) ** 2)
    matched = np.exp(1j * np.angle(st.los))
    assert j2(np.outer(matched, matched.conj()), st) == pytest.approx(-np.sum(np.abs(st.los)) ** 2)
    assert j3(W, st) == pytest.approx(j2(W, st) - np.real(np.trace(W @ st.cov)))
    st0 = _stats(rng, cov=False)
    assert j3(W, st0) == j2(W, st0)
    with pytest.raises(ValueError):
        objective_value("quadratic", W, st, PARAMS)


def test_concave_gradient_matches_finite_differences(rng):
    st = _stats(rng)
    W = _unit_diag_psd(8, rng)
    G = j1_concave_gradient(W, st, PARAMS)
    f = lambda X: 0.5 * np.log(np.real(np.trace(X @ st.cov)) * PARAMS.power + PARAMS.noise_power)
    for _ in range(5):
        D = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        D = (D + D.conj().T) / 2
        h = 1e-4
        fd = (f(W + h * D) - f(W - h * D)) / (2 * h)
        an = np.real(np.trace(G @ D))
        assert abs(fd - an) <= 1e-6 * abs(an)


def test_majorizer_touches_and_dominates(rng):
    st = _stats(rng)
    W0 = _unit_diag_psd(8, rng)
    assert j1_majorizer(W0, W0, st, PARAMS) == j1(W0, st, PARAMS)
    n = 0
    while n < 1000:
        W = W0 + rng.uniform(0.01, 2.0) * _unit_diag_psd(8, rng)
        try:
            val = j1(W, st, PARAMS)
        except InfeasibleObjectiveError:
            continue
        assert j1_majorizer(W, W0, st, PARAMS) >= val - 1e-12
        n += 1


def test_bound_ordering_sample(rng):
    a = rng.uniform(0.05, 10, 300)
    b = rng.uniform(0.05, 10, 300)
    lo, q1 = gaussian_q(b - a), marcum_q1(a, b)
    # both sides round to 1.0 deep in the a >> b corner
    assert np.all((lo < q1) | ((lo == 1.0) & (q1 == 1.0)))


def test_markov_bound(rng):
    for _ in range(100):
        st = _stats(rng)
        w = random_design(8, rng)
        W = np.outer(w, w.conj())
        pd = prob_detection(w, st, PARAMS)
        assert pd <= min(1.0, markov_bound(W, st, PARAMS)) + 1e-12


def test_no_scattering_objectives_share_ranking(rng):
    st = _stats(rng, cov=False)
    Ws = [np.outer(w, w.conj()) for w in (random_design(8, rng) for _ in range(40))]
    m = [-j2(W, st) for W in Ws]
    feas = [i for i, W in enumerate(Ws) if np.sqrt(2 * PARAMS.snr_scale * m[i]) > np.sqrt(-2 * np.log(PARAMS.pfa))]
    assert len(feas) > 10
    r1 = sps.spearmanr([m[i] for i in feas], [-j1(Ws[i], st, PARAMS) for i in feas])[0]
    r3 = sps.spearmanr(m, [-j3(W, st) for W in Ws])[0]
    assert r1 == pytest.approx(1.0) and r3 == pytest.approx(1.0)


def test_worst_case_objective(fast):
    from risdetect.baseline import quadratic_design
    W = quadratic_design(fast).lifted
    st = fast.statistics
    v, i = worst_case_objective(W, "j2", fast)
    assert v == max(j2(W, s) for s in st) and j2(W, st[i]) == v
    one, _ = worst_case_objective(W, "j2", fast, [st[4]])
    assert one == j2(W, st[4])
    dup, _ = worst_case_objective(W, "j2", fast, st + st)
    assert dup == v
    with pytest.raises(ValueError):
        worst_case_objective(W, "j2", fast, [])


def test_worst_location_on_boundary(table1):
    from risdetect.baseline import quadratic_design
    W = quadratic_design(table1).lifted
    for kind in ("j1", "j2", "j3"):
        _, i = worst_case_objective(W, kind, table1)
        row, col = divmod(i, 9)
        assert row in (0, 8) or col in (0, 8)


def test_approximation_errors_without_scattering(fast):
    sc = fast.with_(k_factor_db=300.0)
    w = np.exp(1j * np.zeros(sc.n_cells))
    e = approximation_errors(w, w, sc)
    assert abs(e["eps_j2"]) < 1e-12
    assert e["eps_j1"] < 0


def test_objective_kind_parse():
    assert ObjectiveKind.parse("J2") is ObjectiveKind.J2
    with pytest.raises(ValueError):
        ObjectiveKind.parse("j4")
