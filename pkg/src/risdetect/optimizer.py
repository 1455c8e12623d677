"""Majorization-minimization phase-shift optimization.

Each iteration solves a convex SDP in ``W`` in which the rank-one penalty
``rho (||W||_* - ||W||_2)`` and the concave part of ``J1`` are replaced by
their first-order upper bounds at the previous iterate. Everything inside
this module works in noise-normalized units: the LoS outer product and the
NLoS covariance are multiplied by ``P / sigma^2``. ``J1`` is invariant to that
scaling; ``J2`` and ``J3`` are scaled by the same positive constant.
"""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .objectives import ObjectiveKind

log = logging.getLogger(__name__)

RHO_CANDIDATES = (1.0, 10.0, 100.0, 1000.0)


class SubproblemError(RuntimeError):
    def __init__(self, msg, status=None, locations=()):
        super().__init__(msg)
        self.status = status
        self.locations = tuple(locations)


@dataclass
class MmConfig:
    penalty_rho: float | str = "auto"
    convergence_nu: float = 1e-7
    max_iters: int = 100
    rank_one_tol: float = 1e-3
    solver_tol: float = 1e-8
    solver: str = "INTERNAL"
    keep_iterates: bool = False

    def __post_init__(self):
        if self.penalty_rho != "auto" and not float(self.penalty_rho) > 0:
            raise ValueError("penalty_rho must be positive or 'auto'")
        for name in ("convergence_nu", "rank_one_tol", "solver_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class MmRecord:
    iteration: int
    omega: float
    worst_objective: float
    m: float
    penalty: float
    rank_ratio: float
    status: str


@dataclass
class MmTrace:
    kind: str
    rho: float
    records: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    converged: bool = False
    warning: str | None = None
    wall_time: float = 0.0

    @property
    def omegas(self):
        return np.array([r.omega for r in self.records])

    @property
    def n_iters(self):
        return len(self.records) - 1

    @property
    def final_rank_ratio(self):
        return self.records[-1].rank_ratio

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["iter", "omega", "m", "penalty", "rank_ratio"])
            for r in self.records:
                wr.writerow([r.iteration, f"{r.omega:.9g}", f"{r.m:.9g}",
                             f"{r.penalty:.9g}", f"{r.rank_ratio:.9g}"])


# ---------------------------------------------------------------- linear algebra

def principal_eigvec(W):
    """Unit principal eigenvector with its largest-magnitude entry real positive."""
    vals, vecs = np.linalg.eigh((W + W.conj().T) / 2)
    v = vecs[:, -1]
    j = int(np.argmax(np.abs(v)))
    return v * np.exp(-1j * np.angle(v[j])), float(vals[-1])


def rank_one_ratio(W):
    vals = np.linalg.eigvalsh((W + W.conj().T) / 2)
    tr = float(np.sum(np.clip(vals, 0, None)))
    return float(vals[-1] / tr) if tr > 0 else 0.0


def rank_penalty(W):
    """``||W||_* - ||W||_2`` for Hermitian ``W``."""
    vals = np.linalg.eigvalsh((W + W.conj().T) / 2)
    return float(np.sum(np.abs(vals)) - np.max(np.abs(vals)))


def penalty_surrogate(W, v_prev):
    """Upper bound of ``||W||_* - ||W||_2`` linearized at principal vector ``v_prev``.

    Equals ``tr((I - v v^H) W)`` for PSD ``W``; the constant offsets
    ``-||W'||_2 + v^H W' v`` vanish because ``v`` is the principal
    eigenvector of ``W'``.
    """
    v = np.asarray(v_prev, dtype=complex)
    if abs(np.linalg.norm(v) - 1) > 1e-9:
        raise ValueError("principal vector must have unit norm")
    return float(np.real(np.trace(W) - np.vdot(v, W @ v)))


def project_feasible(W):
    """Nearest-ish feasible point: Hermitian, PSD and unit diagonal."""
    W = (W + W.conj().T) / 2
    vals, vecs = np.linalg.eigh(W)
    W = (vecs * np.clip(vals, 0, None)) @ vecs.conj().T
    d = np.sqrt(np.clip(np.real(np.diag(W)), 1e-300, None))
    W = W / np.outer(d, d)
    return (W + W.conj().T) / 2


def extract_phase_vector(W):
    """Unit-modulus vector from the principal eigenvector of ``W``."""
    from .ris import PhaseDesign

    v, _ = principal_eigvec(np.asarray(W, dtype=complex))
    ph = np.where(np.abs(v) > 0, np.angle(v), 0.0)
    return PhaseDesign(np.exp(1j * ph))


# ------------------------------------------------------------------ problem data

@dataclass
class _Normalized:
    los: np.ndarray        # (Q, U), scaled by sqrt(P / sigma^2)
    covs: np.ndarray       # (Q, U, U), scaled by P / sigma^2
    beta: float            # sqrt(-2 ln P_F)

    @classmethod
    def from_scenario(cls, scenario, stats_list=None):
        stats_list = scenario.statistics if stats_list is None else stats_list
        k = scenario.params.snr_scale
        los = np.sqrt(k) * np.array([s.los for s in stats_list])
        covs = k * np.array([s.cov for s in stats_list])
        return cls(los, covs, float(np.sqrt(-2 * np.log(scenario.params.pfa))))

    def infeasible_locations(self):
        """Locations where no unit-modulus design reaches the J1 log domain.

        ``max tr(W M_q)`` over unit-diagonal PSD ``W`` equals ``||h_q||_1^2``.
        """
        best = np.abs(self.los).sum(axis=1) ** 2
        return np.flatnonzero(np.sqrt(2 * best) <= self.beta).tolist()

    def traces(self, W):
        twm = np.real(np.einsum("qi,ij,qj->q", self.los.conj(), W, self.los))
        twc = np.real(np.einsum("ij,qji->q", W, self.covs))
        return np.clip(twm, 0, None), np.clip(twc, 0, None)

    def objectives(self, kind, W):
        twm, twc = self.traces(W)
        if kind is ObjectiveKind.J2:
            return -twm
        if kind is ObjectiveKind.J3:
            return -(twm + twc)
        gap = np.sqrt(2 * twm) - self.beta
        with np.errstate(divide="ignore", invalid="ignore"):
            val = 0.5 * np.log1p(twc) - np.log(gap)
        return np.where(gap > 0, val, np.inf)

    def surrogates(self, kind, W, W_prev):
        """``J_bar_k(W, W_prev, q)`` for every location."""
        if kind is not ObjectiveKind.J1:
            return self.objectives(kind, W)
        twm, twc = self.traces(W)
        _, twc_prev = self.traces(W_prev)
        gap = np.sqrt(2 * twm) - self.beta
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (-np.log(gap) + 0.5 * np.log1p(twc_prev)
                   + 0.5 * (twc - twc_prev) / (1 + twc_prev))
        return np.where(gap > 0, val, np.inf)


class _Subproblem:
    """The convex MM step for one objective and location set.

    ``solver="INTERNAL"`` solves the Lagrangian dual with the primal-dual
    interior-point method of :mod:`.sdp`, which carries ``W`` as the
    multiplier of the LMI. Any other name is handed to cvxpy, which solves the
    primal; that route is much slower on large arrays and serves as an
    independent check.
    """

    # certified relative duality gap below which a dual step counts as optimal
    GAP_TOL = 1e-6

    def __init__(self, kind, data: _Normalized, config: MmConfig):
        self.kind = kind
        self.data = data
        self.config = config
        self.U = data.los.shape[1]
        if kind is ObjectiveKind.J1:
            bad = data.infeasible_locations()
            if bad:
                raise SubproblemError("J1 is undefined at some locations for every design",
                                      "infeasible", bad)
        self._primal = None
        if config.solver.upper() == "INTERNAL":
            self._M = np.einsum("qi,qj->qij", data.los, data.los.conj())
        else:
            self._primal = _PrimalProblem(kind, data)

    def _linearization(self, W_prev):
        _, twc_prev = self.data.traces(W_prev)
        coef = 0.5 / (1 + twc_prev)
        const = 0.5 * np.log1p(twc_prev) - 0.5 * twc_prev / (1 + twc_prev)
        return coef, const

    def solve(self, W_prev, v_prev, rho):
        """Return ``(W, m, status)`` for the step linearized at ``W_prev``."""
        if self._primal is not None:
            W, m, status = self._primal.solve(self, W_prev, v_prev, rho)
        else:
            W, status = self._solve_dual(W_prev, v_prev, rho)
            m = float(np.max(self.data.surrogates(self.kind, W, W_prev)))
        if W is None or not np.all(np.isfinite(W)):
            raise SubproblemError("subproblem returned no solution", status,
                                  self._bad_locations(W_prev))
        return W, m, status

    def _solve_dual(self, W_prev, v_prev, rho):
        from . import sdp

        G = float(rho) * np.outer(v_prev, v_prev.conj())
        tol = self.config.solver_tol
        if self.kind is ObjectiveKind.J1:
            coef, const = self._linearization(W_prev)
            res = sdp.log_step(self._M, self.data.covs, coef, const, self.data.beta,
                               G, rho, tol=tol)
        else:
            mats = self._M if self.kind is ObjectiveKind.J2 else self._M + self.data.covs
            res = sdp.linear_step(mats, G, rho, tol=tol)
        W = project_feasible(res.W)
        # certify the step: primal value at the feasible W against the dual bound
        upper = (float(np.max(self.data.surrogates(self.kind, W, W_prev)))
                 + float(rho) * penalty_surrogate(W, v_prev))
        gap = upper - res.dual_objective
        ok = np.isfinite(gap) and gap <= self.GAP_TOL * max(1.0, abs(upper))
        return W, "optimal" if ok else f"inaccurate ({res.status})"

    def _bad_locations(self, W_prev):
        vals = self.data.objectives(self.kind, W_prev)
        return np.flatnonzero(~np.isfinite(vals)).tolist()


class _PrimalProblem:
    """The step in primal form, compiled once by cvxpy and re-solved with new parameters."""

    def __init__(self, kind, data: _Normalized):
        import cvxpy as cp

        Q, U = data.los.shape
        self.W = cp.Variable((U, U), hermitian=True)
        self.m = cp.Variable()
        self.rho = cp.Parameter(nonneg=True)
        # rho * conj(v v^H), folded into one parameter to keep the problem DPP
        self.G = cp.Parameter((U, U), complex=True)

        # tr(W M_q) = sum_ij conj(h_i) h_j W_ij ; tr(W C_q) = sum_ij C_ji W_ij
        A_m = np.einsum("qi,qj->qij", data.los.conj(), data.los).reshape(Q, -1, order="C")
        A_c = np.transpose(data.covs, (0, 2, 1)).reshape(Q, -1, order="C")
        w_vec = cp.reshape(self.W, (U * U,), order="C")
        twm = cp.real(A_m @ w_vec)
        twc = cp.real(A_c @ w_vec)

        cons = [self.W >> 0, cp.real(cp.diag(self.W)) == 1]
        if kind is ObjectiveKind.J2:
            cons.append(-twm <= self.m)
        elif kind is ObjectiveKind.J3:
            cons.append(-(twm + twc) <= self.m)
        else:
            self.s = cp.Variable(Q, nonneg=True)
            self.coef = cp.Parameter(Q, nonneg=True)
            self.const = cp.Parameter(Q)
            cons += [
                self.s + data.beta <= cp.sqrt(2 * twm),
                -cp.log(self.s) + self.const + cp.multiply(self.coef, twc) <= self.m,
            ]
        penalty = self.rho * U - cp.real(cp.sum(cp.multiply(self.G, self.W)))
        self.problem = cp.Problem(cp.Minimize(self.m + penalty), cons)

    def solve(self, owner, W_prev, v_prev, rho):
        import cvxpy as cp

        self.rho.value = float(rho)
        self.G.value = float(rho) * np.outer(v_prev.conj(), v_prev)
        if owner.kind is ObjectiveKind.J1:
            self.coef.value, self.const.value = owner._linearization(W_prev)
        tol = owner.config.solver_tol
        solver = owner.config.solver.upper()
        opts = {}
        if solver == "CLARABEL":
            opts = dict(tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol, max_iter=400)
        try:
            self.problem.solve(solver=solver, **opts)
        except cp.error.SolverError as err:
            raise SubproblemError(f"conic solver failed: {err}", "solver_error",
                                  owner._bad_locations(W_prev)) from None
        status = self.problem.status
        if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            raise SubproblemError(f"subproblem status {status}", status,
                                  owner._bad_locations(W_prev))
        return self.W.value, float(self.m.value), status


def solve_subproblem(kind, W_prev, v_prev, scenario, rho, config=None, stats_list=None):
    """One MM step; returns the SDP solution ``W`` and the epigraph value ``m``."""
    kind = ObjectiveKind.parse(kind)
    config = config or MmConfig()
    data = _Normalized.from_scenario(scenario, stats_list)
    W, m, _ = _Subproblem(kind, data, config).solve(W_prev, v_prev, rho)
    return W, m


def penalized_objective(data, kind, W, rho):
    return float(np.max(data.objectives(kind, W)) + rho * rank_penalty(W))


def mm_optimize(kind, scenario, config=None, w_init=None, rho=None, stats_list=None):
    """Run the MM iteration for one objective and penalty factor.

    ``omega`` in the trace is the penalized objective
    ``max_q J_k(W) + rho (||W||_* - ||W||_2)`` at each iterate; it is
    non-increasing by construction. A step that the solver returns with a
    higher value (round-off) is rejected and the iteration stops there.
    """
    kind = ObjectiveKind.parse(kind)
    if kind is ObjectiveKind.QUADRATIC:
        raise ValueError("the quadratic baseline is not optimized")
    config = config or MmConfig()
    if rho is None:
        rho = RHO_CANDIDATES[0] if config.penalty_rho == "auto" else float(config.penalty_rho)
    if w_init is None:
        from .baseline import quadratic_design
        w_init = quadratic_design(scenario)
    w0 = np.asarray(getattr(w_init, "w", w_init), dtype=complex)
    if not np.allclose(np.abs(w0), 1.0, atol=1e-9):
        raise ValueError("initial design must be unit modulus")

    t0 = time.perf_counter()
    data = _Normalized.from_scenario(scenario, stats_list)
    sub = _Subproblem(kind, data, config)
    trace = MmTrace(kind.value, float(rho))

    W = np.outer(w0, w0.conj())
    v = w0 / np.linalg.norm(w0)
    omega = penalized_objective(data, kind, W, rho)
    trace.records.append(MmRecord(0, omega, float(np.max(data.objectives(kind, W))),
                                  np.nan, 0.0, rank_one_ratio(W), "init"))
    if config.keep_iterates:
        trace.iterates.append(W)

    for it in range(1, config.max_iters + 1):
        W_raw, m, status = sub.solve(W, v, rho)
        W_new = project_feasible(W_raw)
        omega_new = penalized_objective(data, kind, W_new, rho)
        if omega_new > omega:
            # solver round-off; W is still optimal for this step within tolerance
            log.debug("rejected step %d: omega %.12g -> %.12g", it, omega, omega_new)
            W_new, omega_new, status = W, omega, "rejected"
        prev = omega
        W, omega = W_new, omega_new
        v, _ = principal_eigvec(W)
        trace.records.append(MmRecord(it, omega, float(np.max(data.objectives(kind, W))),
                                      m, rank_penalty(W), rank_one_ratio(W), status))
        if config.keep_iterates:
            trace.iterates.append(W)
        # an infeasible start has omega = inf; the first finite value is not convergence
        if status == "rejected" or (np.isfinite(prev) and abs(omega - prev)
                                    <= config.convergence_nu * max(1.0, abs(prev))):
            trace.converged = True
            break
    else:
        trace.warning = f"no convergence within {config.max_iters} iterations"
        log.warning(trace.warning)

    trace.wall_time = time.perf_counter() - t0
    return extract_phase_vector(W), trace


def select_rho(kind, scenario, config=None, w_init=None, stats_list=None):
    """Smallest penalty factor in {1, 10, 100, 1000} that yields a rank-one solution.

    Returns ``(rho, design, trace)`` of the accepted run.
    """
    config = config or MmConfig()
    last = None
    for rho in RHO_CANDIDATES:
        design, trace = mm_optimize(kind, scenario, config, w_init, rho, stats_list)
        last = (rho, design, trace)
        if trace.final_rank_ratio >= 1 - config.rank_one_tol:
            return last
    log.warning("no candidate penalty gave a rank-one solution; using rho=%g", last[0])
    last[2].warning = "; ".join(filter(None, [last[2].warning, "rank-one not reached"]))
    return last


def optimize_design(kind, scenario, config=None, w_init=None, stats_list=None):
    """Optimize one objective, selecting the penalty factor when it is ``"auto"``.

    Returns ``(rho, design, trace)``.
    """
    config = config or MmConfig()
    if config.penalty_rho == "auto":
        return select_rho(kind, scenario, config, w_init, stats_list)
    rho = float(config.penalty_rho)
    design, trace = mm_optimize(kind, scenario, config, w_init, rho, stats_list)
    return rho, design, trace
