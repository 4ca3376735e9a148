"""Primal-dual interior-point method for Hermitian LMI programs.

The scalar variables ``x`` together with the slack matrices ``S_j = F_j(x)``
form one side of the pair; the PSD multipliers ``X_j`` form the other.  Each
iteration solves the Schur-complement system of the HKM search direction
(X dS S^-1 linearisation) with a Mehrotra predictor-corrector.  Equality
constraints stay in the Newton system as a saddle-point block instead of
being eliminated, which preserves sparsity of the coefficient blocks.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ..config import DEFAULT, Tolerances
from .program import ConicProgram, ConicSolution, LinearBlock, LMIBlock

_CHUNK_ENTRIES = 4_000_000


def reduce_equalities(a_eq: sp.spmatrix, b_eq: np.ndarray, rtol: float = 1e-10):
    """Row-reduce ``A x = b`` to full row rank.

    Returns ``(E, f, U)`` with ``E = U.T @ A`` and ``f = U.T @ b`` and the
    residual of ``b`` outside the row space (nonzero means inconsistent).
    """
    a = a_eq.toarray() if sp.issparse(a_eq) else np.asarray(a_eq, dtype=float)
    if a.shape[0] == 0:
        return a, b_eq.copy(), np.zeros((0, 0)), 0.0, np.zeros(0)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    r = int(np.sum(s > rtol * max(1.0, s[0] if s.size else 0.0)))
    u = u[:, :r]
    resid_vec = b_eq - u @ (u.T @ b_eq)
    return u.T @ a, u.T @ b_eq, u, float(np.abs(resid_vec).max(initial=0.0)), resid_vec


def _max_step(a: np.ndarray, da: np.ndarray) -> float:
    """Largest alpha with a + alpha*da PSD (a positive definite)."""
    try:
        l = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return 0.0
    li = sla.solve_triangular(l, np.eye(a.shape[0]), lower=True)
    m = li @ da @ li.conj().T
    lo = np.linalg.eigvalsh((m + m.conj().T) / 2)[0]
    return np.inf if lo >= 0 else -1.0 / lo


def _max_step_vec(a: np.ndarray, da: np.ndarray) -> float:
    neg = da < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-a[neg] / da[neg]))


def _herm(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


class _Workspace:
    """Mutable solver state for one program."""

    def __init__(self, p: ConicProgram, tol: Tolerances):
        self.p = p
        self.tol = tol
        self.m = p.nvars
        self.lmis = [b for b in p.blocks if isinstance(b, LMIBlock)]
        lins = [b for b in p.blocks if isinstance(b, LinearBlock)]
        if lins:
            self.h0 = np.concatenate([b.h0 for b in lins])
            self.h = sp.vstack([b.h for b in lins]).tocsr()
        else:
            self.h0 = np.zeros(0)
            self.h = sp.csr_matrix((0, self.m))
        self.ght = [b.g.conj().T.tocsr() for b in self.lmis]
        e, f, u, resid, _ = reduce_equalities(p.a_eq, p.b_eq)
        self.e, self.f, self.u, self.eq_inconsistency = e, f, u, resid
        self.c = p.c

    # linear maps -----------------------------------------------------
    def g_apply(self, j: int, y: np.ndarray) -> np.ndarray:
        b = self.lmis[j]
        return (b.g @ y).reshape(b.n, b.n)

    def g_adjoint(self, j: int, z: np.ndarray) -> np.ndarray:
        return np.real(self.ght[j] @ z.ravel())

    def schur_block(self, j: int, x: np.ndarray, sinv: np.ndarray) -> np.ndarray:
        b = self.lmis[j]
        n, m = b.n, self.m
        out = np.empty((m, m))
        step = max(1, _CHUNK_ENTRIES // (n * n))
        g = b.g
        for start in range(0, m, step):
            stop = min(m, start + step)
            cols = g[:, start:stop].toarray().T.reshape(stop - start, n, n)
            w = x @ cols @ sinv
            out[:, start:stop] = np.real(self.ght[j] @ w.reshape(stop - start, n * n).T)
        return (out + out.T) / 2


def solve_ipm(p: ConicProgram, tol: Tolerances = DEFAULT) -> ConicSolution:
    ws = _Workspace(p, tol)
    m = ws.m
    nblk = len(ws.lmis)
    dims = [b.n for b in ws.lmis]
    nl = ws.h0.size
    ncone = sum(dims) + nl
    r = ws.e.shape[0]

    if ws.eq_inconsistency > tol.feasibility:
        return _failure(p, "numerical-failure", "equality system is inconsistent", 0, suspect="infeasible")

    if ncone == 0:
        # pure equality-constrained linear objective
        return _equality_only(p, ws)

    # identity-scaled start
    gnorms = []
    for b in ws.lmis:
        gn = np.sqrt(np.asarray(abs(b.g).power(2).sum(axis=0)).ravel())
        gnorms.append(gn)
    hn = np.sqrt(np.asarray(abs(ws.h).power(2).sum(axis=0)).ravel()) if nl else np.zeros(m)
    gtot = np.sqrt(sum(g ** 2 for g in gnorms) + hn ** 2) if m else np.zeros(0)
    cscale = np.max((1 + np.abs(ws.c)) / (1 + gtot)) if m else 1.0
    nmax = max(dims + [1])
    xi = max(10.0, np.sqrt(nmax), nmax * cscale)
    c0 = max([np.linalg.norm(b.g0) for b in ws.lmis] + [np.abs(ws.h0).max(initial=0.0)])
    eta = max(10.0, np.sqrt(nmax), c0, gtot.max(initial=0.0))

    y = np.zeros(m)
    nu = np.zeros(r)
    S = [eta * np.eye(n, dtype=complex) for n in dims]
    X = [xi * np.eye(n, dtype=complex) for n in dims]
    s = eta * np.ones(nl)
    xl = xi * np.ones(nl)

    pscale = 1.0 + max(c0, np.abs(ws.f).max(initial=0.0))
    dscale = 1.0 + np.abs(ws.c).max(initial=0.0)
    best = None
    status = "numerical-failure"
    message = "iteration limit"
    it = 0
    for it in range(1, tol.ipm_max_iter + 1):
        rp = [ws.lmis[j].g0 + ws.g_apply(j, y) - S[j] for j in range(nblk)]
        rpl = ws.h0 + ws.h @ y - s
        re = ws.f - ws.e @ y
        rd = ws.c - ws.h.T @ xl - ws.e.T @ nu
        for j in range(nblk):
            rd = rd - ws.g_adjoint(j, X[j])
        pobj = float(ws.c @ y)
        dobj = float(ws.f @ nu - ws.h0 @ xl) - sum(float(np.real(np.vdot(ws.lmis[j].g0, X[j]))) for j in range(nblk))
        mu = (sum(float(np.real(np.vdot(X[j], S[j]))) for j in range(nblk)) + float(xl @ s)) / ncone
        pinf = max([np.linalg.norm(a) for a in rp] + [np.abs(rpl).max(initial=0.0), np.abs(re).max(initial=0.0)]) / pscale
        dinf = np.abs(rd).max(initial=0.0) / dscale
        relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        if best is None or max(relgap, pinf, dinf) < best[0]:
            best = (max(relgap, pinf, dinf), y.copy(), [a.copy() for a in X], xl.copy(), nu.copy())
        if relgap <= tol.ipm_gap and pinf <= tol.ipm_infeas and dinf <= tol.ipm_infeas:
            status, message = "optimal", "converged"
            break
        xnorm = max([np.linalg.norm(a) for a in X] + [np.abs(xl).max(initial=0.0)])
        if xnorm > tol.divergence or dobj > tol.divergence:
            return _failure(p, "numerical-failure", "dual iterates diverge", it, suspect="infeasible")
        if np.abs(y).max(initial=0.0) > tol.divergence or pobj < -tol.divergence:
            return _failure(p, "numerical-failure", "primal iterates diverge", it, suspect="unbounded", ray=y.copy())

        try:
            chol_s = [sla.cho_factor(S[j], lower=True) for j in range(nblk)]
        except np.linalg.LinAlgError:
            message = "slack lost definiteness"
            break
        sinv = [sla.cho_solve(cs, np.eye(dims[j])) for j, cs in enumerate(chol_s)]
        sinv = [_herm(a) for a in sinv]
        mt = np.zeros((m, m))
        for j in range(nblk):
            mt += ws.schur_block(j, X[j], sinv[j])
        if nl:
            d = xl / s
            mt += (ws.h.T @ sp.diags(d) @ ws.h).toarray()
        try:
            factor = _factor(mt)
            if r:
                mi_et = _solve(factor, ws.e.T)
                schur_e = ws.e @ mi_et
                factor_e = _factor(schur_e)
        except np.linalg.LinAlgError:
            message = "Schur complement singular"
            break

        def direction(tau, corr_x=None, corr_l=None):
            rx = []
            rhs = -rd.copy()
            for j in range(nblk):
                a = tau * sinv[j] - X[j] - X[j] @ rp[j] @ sinv[j]
                if corr_x is not None:
                    a = a - corr_x[j]
                rx.append(a)
                rhs += ws.g_adjoint(j, a)
            if nl:
                rxl = tau / s - xl - d * rpl
                if corr_l is not None:
                    rxl = rxl - corr_l
                rhs += ws.h.T @ rxl
            else:
                rxl = np.zeros(0)
            if r:
                t = _solve(factor, rhs)
                dnu = _solve(factor_e, re - ws.e @ t)
                dy = t + mi_et @ dnu
            else:
                dnu = np.zeros(0)
                dy = _solve(factor, rhs)
            dS, dX = [], []
            for j in range(nblk):
                gdy = ws.g_apply(j, dy)
                dS.append(_herm(rp[j] + gdy))
                dX.append(_herm(rx[j] - X[j] @ gdy @ sinv[j]))
            hdy = ws.h @ dy if nl else np.zeros(0)
            ds = rpl + hdy
            dxl = rxl - d * hdy if nl else np.zeros(0)
            return dy, dnu, dS, dX, ds, dxl

        def steps(dS, dX, ds, dxl):
            ap = min([_max_step(S[j], dS[j]) for j in range(nblk)] + [_max_step_vec(s, ds) if nl else np.inf])
            ad = min([_max_step(X[j], dX[j]) for j in range(nblk)] + [_max_step_vec(xl, dxl) if nl else np.inf])
            return ap, ad

        # predictor
        dy, dnu, dS, dX, ds, dxl = direction(0.0)
        ap, ad = steps(dS, dX, ds, dxl)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = (sum(float(np.real(np.vdot(X[j] + ad * dX[j], S[j] + ap * dS[j]))) for j in range(nblk))
                  + float((xl + ad * dxl) @ (s + ap * ds))) / ncone
        sigma = min(1.0, max(0.0, mu_aff / mu) ** 3) if mu > 0 else 0.0
        corr_x = [dX[j] @ dS[j] @ sinv[j] for j in range(nblk)]
        corr_l = dxl * ds / s if nl else None
        # corrector
        dy, dnu, dS, dX, ds, dxl = direction(sigma * mu, corr_x, corr_l)
        ap, ad = steps(dS, dX, ds, dxl)
        gamma = 0.98
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)
        if ap < 1e-12 and ad < 1e-12:
            message = "step length collapsed"
            break
        y = y + ap * dy
        S = [_herm(S[j] + ap * dS[j]) for j in range(nblk)]
        s = s + ap * ds
        X = [_herm(X[j] + ad * dX[j]) for j in range(nblk)]
        xl = xl + ad * dxl
        nu = nu + ad * dnu

    if status != "optimal":
        _, y, X, xl, nu = best
    return _package(p, ws, status, y, X, xl, nu, it, message, tol)


def _factor(a: np.ndarray):
    try:
        return ("chol", sla.cho_factor(a, lower=True))
    except np.linalg.LinAlgError:
        reg = a + np.eye(a.shape[0]) * 1e-13 * max(1.0, np.abs(np.diag(a)).max(initial=0.0))
        try:
            return ("chol", sla.cho_factor(reg, lower=True))
        except np.linalg.LinAlgError:
            return ("lu", sla.lu_factor(reg))


def _solve(factor, b):
    kind, f = factor
    return sla.cho_solve(f, b) if kind == "chol" else sla.lu_solve(f, b)


def _split_duals(p: ConicProgram, X, xl):
    duals = []
    jx = 0
    offset = 0
    for b in p.blocks:
        if isinstance(b, LMIBlock):
            duals.append(X[jx])
            jx += 1
        else:
            duals.append(xl[offset:offset + b.n].copy())
            offset += b.n
    return duals


def _package(p, ws, status, y, X, xl, nu, it, message, tol) -> ConicSolution:
    duals = _split_duals(p, X, xl)
    eq_duals = ws.u @ nu if ws.u.size else np.zeros(p.b_eq.size)
    pval = float(p.c @ y)
    from .program import dual_objective, verify

    dval = dual_objective(p, duals, eq_duals)
    sol = ConicSolution(status, pval, dval, y, duals, eq_duals, it, "ipm", None, message)
    if status != "optimal":
        rep = verify(p, sol, tol.gap)
        if rep.passed and rep.primal_residual <= tol.feasibility and rep.dual_min_eig >= -tol.dual_psd:
            sol.status = "optimal"
            sol.message = f"{message}; best iterate meets tolerances"
    return sol


def _failure(p, status, message, it, suspect=None, ray=None) -> ConicSolution:
    m = p.nvars
    sol = ConicSolution(status, np.nan, np.nan, np.zeros(m), [], np.zeros(p.b_eq.size), it, "ipm", None, message)
    sol.suspect = suspect
    sol.ray = ray
    return sol


def _equality_only(p: ConicProgram, ws: _Workspace) -> ConicSolution:
    # min c x s.t. E x = f: bounded only if c lies in the row space of E
    e, f = ws.e, ws.f
    if e.shape[0] == 0:
        if np.abs(p.c).max(initial=0.0) == 0:
            return ConicSolution("optimal", 0.0, 0.0, np.zeros(p.nvars), [], np.zeros(p.b_eq.size), 0, "ipm")
        return _failure(p, "numerical-failure", "no constraints", 0, suspect="unbounded", ray=-p.c.copy())
    nu, *_ = np.linalg.lstsq(e.T, p.c, rcond=None)
    if np.abs(e.T @ nu - p.c).max() > 1e-9 * (1 + np.abs(p.c).max()):
        ray = p.c - e.T @ nu
        return _failure(p, "numerical-failure", "objective unbounded on affine set", 0, suspect="unbounded", ray=-ray)
    x, *_ = np.linalg.lstsq(e, f, rcond=None)
    eq_duals = ws.u @ nu
    return ConicSolution("optimal", float(p.c @ x), float(p.b_eq @ eq_duals), x, [], eq_duals, 0, "ipm")
