"""Linear-program path: HiGHS dual revised simplex via scipy."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from ..config import DEFAULT, Tolerances
from .program import ConicProgram, ConicSolution, LinearBlock, LMIBlock, dual_objective


def _rows(p: ConicProgram):
    """Stack every block as linear rows h0 + H x >= 0 (diagonal LMIs by their diagonal)."""
    h0s, hs, sizes = [], [], []
    for b in p.blocks:
        if isinstance(b, LinearBlock):
            h0s.append(b.h0)
            hs.append(b.h)
            sizes.append(b.n)
        else:
            n = b.n
            diag = np.arange(n) * (n + 1)
            h0s.append(np.real(np.diag(b.g0)))
            hs.append(sp.csr_matrix(np.real(b.g[diag, :].toarray())))
            sizes.append(n)
    if not hs:
        return np.zeros(0), sp.csr_matrix((0, p.nvars)), sizes
    return np.concatenate(h0s), sp.vstack(hs).tocsr(), sizes


def solve_lp(p: ConicProgram, tol: Tolerances = DEFAULT) -> ConicSolution:
    h0, h, sizes = _rows(p)
    opts = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10, "presolve": True}
    res = linprog(
        p.c,
        A_ub=-h if h.shape[0] else None,
        b_ub=h0 if h.shape[0] else None,
        A_eq=p.a_eq if p.b_eq.size else None,
        b_eq=p.b_eq if p.b_eq.size else None,
        bounds=(None, None),
        method="highs-ds",
        options=opts,
    )
    m = p.nvars
    if res.status != 0:
        sol = ConicSolution("numerical-failure", np.nan, np.nan, np.zeros(m), [], np.zeros(p.b_eq.size),
                            int(getattr(res, "nit", 0)), "simplex", None, res.message)
        sol.suspect = {2: "infeasible", 3: "unbounded"}.get(res.status)
        sol.ray = None
        return sol
    w = -np.asarray(res.ineqlin.marginals) if h.shape[0] else np.zeros(0)
    w = np.clip(w, 0.0, None)
    nu = np.asarray(res.eqlin.marginals) if p.b_eq.size else np.zeros(0)
    duals = []
    offset = 0
    for b, k in zip(p.blocks, sizes):
        part = w[offset:offset + k]
        offset += k
        duals.append(np.diag(part).astype(complex) if isinstance(b, LMIBlock) else part.copy())
    x = np.asarray(res.x, dtype=float)
    sol = ConicSolution("optimal", float(p.c @ x), 0.0, x, duals, nu, int(res.nit), "simplex", None, res.message)
    sol.dual_value = dual_objective(p, duals, nu)
    return sol
