"""Interior-point solver for the MM subproblem, posed through its Lagrangian dual.

The primal step is

    min  m + rho * U - <G, W>
    s.t. W >= 0 (PSD), diag(W) = 1, f_q(W) <= m  for every location q,

with ``G = rho v v^H``. Its dual has the shape

    max  rho U + 1'y + f(z)
    s.t. S(y, z) = -G - Diag(y) - sum_j z_j F_j >= 0,  z >= 0,  a'z = 1,

with only ``U + p`` scalars, ``p`` being one or two per location. A
primal-dual path-following method (HKM direction) works on the Schur
complement in those scalars instead of the ``U^2``-dimensional primal PSD
block; ``W`` is recovered as the multiplier of the matrix inequality.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SdpResult:
    W: np.ndarray
    dual_objective: float
    gap_bound: float
    iterations: int
    status: str


@dataclass
class DualProblem:
    """Data of the dual in the form above.

    ``mats`` are the Hermitian ``F_j`` (shape ``(p, U, U)``), ``simplex`` the
    0/1 vector ``a`` and ``concave`` an optional callable returning the value,
    gradient and Hessian of ``f`` at ``z``, or ``None`` outside its domain.
    """

    G: np.ndarray
    mats: np.ndarray
    simplex: np.ndarray
    offset: float
    concave: object = None
    z0: np.ndarray = None


def _slack(prob, y, z):
    S = -prob.G - np.tensordot(z, prob.mats, axes=1)
    S[np.diag_indices_from(S)] -= y
    return S


def _concave(prob, z):
    p = z.size
    if prob.concave is None:
        return 0.0, np.zeros(p), np.zeros((p, p))
    return prob.concave(z)


def _max_step(X, dX, frac):
    """Largest step in (0, 1] keeping ``X + a dX`` positive definite, times ``frac``."""
    Li = np.linalg.inv(np.linalg.cholesky(X))
    ev = np.linalg.eigvalsh(Li @ dX @ Li.conj().T)[0]
    return 1.0 if ev >= 0 else min(1.0, -frac / ev)


def _max_step_vec(x, dx, frac):
    neg = dx < 0
    return 1.0 if not np.any(neg) else min(1.0, frac * np.min(-x[neg] / dx[neg]))


def pd_solve(prob: DualProblem, tol=1e-8, max_iters=200, sigma=0.15, frac=0.97):
    """Primal-dual path following on the dual with the HKM search direction.

    The dual iterate ``(y, z)`` stays strictly feasible; the primal ``W`` and
    the bound multipliers ``omega`` of ``z >= 0`` are carried alongside and
    driven to ``diag(W) = 1`` and complementarity. Returns once the
    complementarity gap ``<W, S> + omega'z`` and the stationarity residual are
    below ``tol`` (the gap relative to ``max(1, |objective|)``).
    """
    U = prob.G.shape[0]
    p = prob.mats.shape[0]
    n = U + p
    a = np.asarray(prob.simplex, dtype=float)
    z = (np.asarray(prob.z0, dtype=float) if prob.z0 is not None
         else np.where(a > 0, 1.0 / a.sum(), 1.0))
    if _concave(prob, z) is None:
        raise ValueError("starting point outside the domain of the dual objective")
    shift = np.linalg.eigvalsh(_slack(prob, np.zeros(U), z))[0]
    y = np.full(U, min(shift, 0.0) - 1.0)
    W = np.eye(U, dtype=complex)
    omega = np.ones(p)
    eta = 0.0
    F = prob.mats
    idx = np.arange(U)

    for it in range(1, max_iters + 1):
        S = _slack(prob, y, z)
        Sinv = np.linalg.inv(S)
        Sinv = (Sinv + Sinv.conj().T) / 2
        fval, fgrad, fhess = _concave(prob, z)
        obj = prob.offset + y.sum() + fval
        # stationarity of -(1'y + f) - <W, S> - omega'z + eta (a'z - 1)
        r_y = np.real(np.diag(W)) - 1.0
        r_z = -fgrad + np.real(F.reshape(p, -1) @ W.T.ravel()) - omega + eta * a
        gap = float(np.real(np.vdot(W, S))) + float(omega @ z)
        # the z residual is weighed by z: multipliers of inactive locations
        # tend to the corner z = 0, where their direction is immaterial
        scale = max(1.0, abs(obj))
        if (gap <= tol * scale and np.abs(r_y).max() <= tol
                and float(np.abs(r_z * z).sum()) <= tol * scale):
            status = "optimal"
            break
        mu = sigma * gap / (U + p)

        # Schur complement of the HKM system in (dy, dz, deta)
        WF = W @ F                                # W F_j
        SF = Sinv @ F                             # S^-1 F_j
        H = np.empty((n, n))
        H[:U, :U] = np.real(W * Sinv.T)           # tr(W E_u S^-1 E_v)
        H[:U, U:] = np.real(np.einsum("jab,ba->aj", WF, Sinv))
        H[U:, :U] = H[:U, U:].T
        H[U:, U:] = (np.real(WF.reshape(p, -1) @ SF.transpose(0, 2, 1).reshape(p, -1).T)
                     - fhess + np.diag(omega / z))
        rhs = np.empty(n)
        rhs[:U] = 1.0 - mu * np.real(np.diag(Sinv))
        rhs[U:] = fgrad - mu * np.real(np.einsum("jaa->j", SF)) + mu / z - eta * a
        K = np.zeros((n + 1, n + 1))
        K[:n, :n] = H
        K[U:n, n] = K[n, U:n] = a
        # symmetric equilibration: omega / z of inactive locations spans many decades
        D = np.r_[1 / np.sqrt(np.maximum(np.abs(np.diag(H)), 1e-300)), 1.0]
        b = np.r_[rhs, 1.0 - float(a @ z)] * D
        Ks = K * D[:, None] * D[None, :]
        try:
            sol = np.linalg.solve(Ks, b) * D
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(Ks, b, rcond=None)[0] * D
        dy, dz, deta = sol[:U], sol[U:n], sol[n]

        dS = -np.tensordot(dz, F, axes=1)
        dS[idx, idx] -= dy
        dW = mu * Sinv - W - W @ dS @ Sinv
        dW = (dW + dW.conj().T) / 2
        domega = mu / z - omega - omega / z * dz

        try:
            alpha = min(_max_step(S, dS, frac), _max_step(W, dW, frac),
                        _max_step_vec(z, dz, frac), _max_step_vec(omega, domega, frac))
        except np.linalg.LinAlgError:
            # round-off took an iterate to the boundary; report what we have
            status = "stalled"
            break
        # keep z inside the domain of the concave part
        while alpha > 1e-12 and _concave(prob, z + alpha * dz) is None:
            alpha *= 0.5
        y, z, eta = y + alpha * dy, z + alpha * dz, eta + alpha * deta
        W, omega = W + alpha * dW, omega + alpha * domega
        W = (W + W.conj().T) / 2
    else:
        status = "inaccurate"
    return SdpResult(W, float(obj), gap, it, status)


# ---------------------------------------------------------------- step builders

def linear_step(A_mats, G, rho, tol=1e-8):
    """Step with linear per-location terms ``f_q(W) = -<A_q, W>`` (J2, J3).

    Dual: ``max rho U + 1'y`` s.t. ``Diag(y) + sum_q lam_q A_q <= -G``,
    ``lam >= 0``, ``1'lam = 1``.
    """
    A_mats = np.asarray(A_mats)
    Q = A_mats.shape[0]
    prob = DualProblem(G, A_mats, np.ones(Q), rho * G.shape[0])
    return pd_solve(prob, tol=tol)


def log_step(M_mats, C_mats, coef, const, beta, G, rho, tol=1e-8):
    """Step for J1, where each location contributes

        s_q + beta <= sqrt(2 <M_q, W>),   -ln s_q + const_q + coef_q <C_q, W> <= m.

    With multipliers ``mu`` (rotated cone), ``nu`` (``t_q = <M_q, W>``) and
    ``lam`` (log constraint) the dual objective per location is

        beta mu - mu^2 / (2 nu) + lam - lam ln(lam / mu) + lam const,

    maximized subject to ``Diag(y) + sum nu_q M_q - sum lam_q coef_q C_q <= -G``,
    ``nu, lam >= 0`` and ``1'lam = 1``. The inner maximum over ``mu`` is
    explicit, ``mu = (beta nu + sqrt(beta^2 nu^2 + 4 lam nu)) / 2``.
    """
    M_mats = np.asarray(M_mats)
    C_mats = np.asarray(C_mats)
    coef = np.asarray(coef, dtype=float)
    const = np.asarray(const, dtype=float)
    Q = M_mats.shape[0]
    mats = np.concatenate([M_mats, -coef[:, None, None] * C_mats])
    simplex = np.r_[np.zeros(Q), np.ones(Q)]
    q = np.arange(Q)

    def concave(z):
        nu, lam = z[:Q], z[Q:]
        if np.any(nu <= 0) or np.any(lam <= 0):
            return None
        mu = 0.5 * (beta * nu + np.sqrt((beta * nu) ** 2 + 4 * lam * nu))
        val = np.sum(beta * mu - mu**2 / (2 * nu) + lam - lam * np.log(lam / mu)
                     + lam * const)
        grad = np.r_[mu**2 / (2 * nu**2), np.log(mu / lam) + const]
        # implicit derivatives of the optimal mu
        den = 1 / nu + lam / mu**2
        mu_nu = mu / nu**2 / den
        mu_lam = 1 / mu / den
        H = np.zeros((2 * Q, 2 * Q))
        H[q, q] = mu * mu_nu / nu**2 - mu**2 / nu**3
        H[q, Q + q] = H[Q + q, q] = mu * mu_lam / nu**2
        H[Q + q, Q + q] = mu_lam / mu - 1 / lam
        return val, grad, H

    z0 = np.r_[np.ones(Q), np.full(Q, 1.0 / Q)]
    prob = DualProblem(G, mats, simplex, rho * G.shape[0], concave, z0)
    return pd_solve(prob, tol=tol)
