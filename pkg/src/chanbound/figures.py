"""Figure data as tables: error floors and copy floors over parameter grids.

Each generator returns a ``Table`` whose columns name the curves.  Bounds
flagged inapplicable are written as empty cells, never as 0.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import bounds, channels as ch, comm, measures, qla, theories
from .config import DEFAULT, Tolerances

__all__ = ["FigureSpec", "Table", "FIGURES", "make_figure", "default_grid", "write_csv"]


@dataclass
class Table:
    header: list
    rows: list = field(default_factory=list)

    def column(self, name: str) -> list:
        k = self.header.index(name)
        return [r[k] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow(["" if v is None else f"{v:.12g}" for v in r])
        return buf.getvalue()


@dataclass(frozen=True)
class FigureSpec:
    fig: str
    grid: tuple
    param: float | None = None

    def __post_init__(self):
        if self.fig not in FIGURES:
            raise ValueError(f"unknown figure {self.fig!r}; choose from {sorted(FIGURES)}")
        lo, hi = (1e-12, 1.0) if self.fig.startswith("4") else (0.0, 1.0)
        if any(not lo <= g <= hi for g in self.grid):
            raise ValueError(f"grid for figure {self.fig} must lie in [{lo}, {hi}]")


def default_grid(fig: str, points: int | None = None) -> tuple:
    if fig.startswith("4"):
        # log grid of target errors; the plotted epsilon values are not tabulated
        n = points or 25
        return tuple(float(x) for x in np.round(np.logspace(-6, np.log10(0.4), n), 14))
    n = points or 21
    return tuple(float(x) for x in np.round(np.linspace(0.0, 1.0, n), 12))


def _val(b) -> float | None:
    return None if b.value is None or not b.applicable else float(b.value)


@lru_cache(maxsize=None)
def _target_fidelity_id(d: int) -> float:
    return measures.free_fidelity(ch.make_identity(d), theories.replacement_channels(d, d)).value


@lru_cache(maxsize=None)
def _ccz_fidelity() -> float:
    ccz = qla.DensityOperator.pure(ch.GATES["CCZ"] @ np.ones(8) / np.sqrt(8))
    return measures.free_fidelity(ccz, theories.stab_states(3)).value


def _ns_row(e: ch.Channel, tol: Tolerances):
    fs = theories.replacement_channels(e.d_in, e.d_out)
    r = measures.robustness(e, fs, tol)
    w = measures.weight(e, fs, tol)
    rep = bounds.error_floor_unitary(r.value, w.value, _target_fidelity_id(2))
    ns_err = max(0.0, 1.0 - comm.ns_achievable_fidelity(e, 2, tol=tol))
    return [_val(rep["robustness"]), _val(rep["weight"]), ns_err]


def _fig2(make, copies: int):
    def run(spec: FigureSpec, tol: Tolerances) -> Table:
        t = Table(["p", "robustness_bound", "weight_bound", "ns_achievable_error"])
        for p in spec.grid:
            e = ch.tensor_power(make(p), copies) if copies > 1 else make(p)
            t.rows.append([p] + _ns_row(e, tol))
        return t
    return run


def _dephrasure(p: float) -> ch.Channel:
    return ch.make_dephrasure(p, p * p)


def _noisy_t_gate(p: float) -> ch.Channel:
    return ch.compose(ch.make_depolarizing(p), ch.make_unitary(ch.GATES["T"]))


def _noisy_t_state(p: float) -> np.ndarray:
    t = ch.GATES["T"] @ np.ones(2) / np.sqrt(2)
    return (1 - p) * np.outer(t, t.conj()) + p * np.eye(2) / 2


def _fig3a(spec: FigureSpec, tol: Tolerances) -> Table:
    uses = 3
    fs = theories.csp_channels(1, 1)
    f = _ccz_fidelity()
    t = Table(["p", "robustness_bound", "weight_bound"])
    for p in spec.grid:
        e = _noisy_t_gate(p)
        r = measures.robustness(e, fs, tol).value
        w = measures.weight(e, fs, tol).value
        # R and W of the parallel uses are bounded by the single-use powers
        rep = bounds.error_floor_unitary(r ** uses, w ** uses, f)
        t.rows.append([p, _val(rep["robustness"]), _val(rep["weight"])])
    return t


def _fig3b(spec: FigureSpec, tol: Tolerances) -> Table:
    fs = theories.stab_states(3)
    f = _ccz_fidelity()
    t = Table(["p", "robustness_bound", "weight_bound", "previous_bound"])
    for p in spec.grid:
        rho = _noisy_t_state(p)
        rho3 = qla.kron(rho, rho, rho)
        r = measures.robustness(rho3, fs, tol).value
        w = measures.weight(rho3, fs, tol).value
        rep = bounds.error_floor_state(r, w, f)
        prev = bounds.previous_bound(max(0.0, qla.min_eig(rho3)), f)
        t.rows.append([p, _val(rep["robustness"]), _val(rep["weight"]), _val(prev)])
    return t


def _fig4a(spec: FigureSpec, tol: Tolerances) -> Table:
    p = 0.25 if spec.param is None else spec.param
    fs = theories.csp_channels(1, 1)
    e = _noisy_t_gate(p)
    r = measures.robustness(e, fs, tol).value
    w = measures.weight(e, fs, tol).value
    f = _ccz_fidelity()
    t = Table(["eps", "robustness_copies", "weight_copies"])
    for eps in spec.grid:
        rep = bounds.copy_floor(r, w, f, 1, eps)
        t.rows.append([eps, _val(rep["robustness"]), _val(rep["weight"])])
    return t


def _fig4b(spec: FigureSpec, tol: Tolerances) -> Table:
    p = 0.25 if spec.param is None else spec.param
    fs = theories.stab_states(1)
    rho = _noisy_t_state(p)
    r = measures.robustness(rho, fs, tol).value
    w = measures.weight(rho, fs, tol).value
    f = _ccz_fidelity()
    lam = max(0.0, qla.min_eig(rho))
    t = Table(["eps", "robustness_copies", "weight_copies", "previous_copies"])
    for eps in spec.grid:
        rep = bounds.copy_floor(r, w, f, 1, eps)
        prev = bounds.previous_copy_floor(lam, f, 1, eps)
        t.rows.append([eps, _val(rep["robustness"]), _val(rep["weight"]), _val(prev)])
    return t


FIGURES = {
    "2a": _fig2(ch.make_depolarizing, 1),
    "2b": _fig2(ch.make_depolarizing, 2),
    "2c": _fig2(_dephrasure, 1),
    "2d": _fig2(_dephrasure, 2),
    "3a": _fig3a,
    "3b": _fig3b,
    "4a": _fig4a,
    "4b": _fig4b,
}


def make_figure(spec: FigureSpec, tol: Tolerances = DEFAULT) -> Table:
    return FIGURES[spec.fig](spec, tol)


def write_csv(table: Table, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(table.to_csv())
