"""Evaluation of the distillation bounds from monotone values.

Every function is a pure map from numbers to a ``BoundReport``.  Negative
formula values are clamped to 0 and flagged ``vacuous``; bounds that carry no
information for the given inputs are flagged ``inapplicable`` (value None)
rather than reported as 0.  Logarithms are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import DEFAULT

__all__ = [
    "OK",
    "VACUOUS",
    "INAPPLICABLE",
    "INFEASIBLE",
    "UNDEFINED",
    "INFINITE_STATUS",
    "Bound",
    "BoundReport",
    "error_floor_unitary",
    "error_floor_state",
    "previous_bound",
    "copy_floor",
    "previous_copy_floor",
    "transform_floor",
    "rate_ceiling",
    "rate_ceiling_adaptive",
    "rate_ceiling_parallel",
    "probabilistic_floor_channel",
    "probabilistic_floor_state",
]

OK = "ok"
VACUOUS = "vacuous"
INAPPLICABLE = "inapplicable"
INFEASIBLE = "infeasible"
UNDEFINED = "undefined"
INFINITE_STATUS = "infinite"

_SLACK = 1e-9


@dataclass(frozen=True)
class Bound:
    name: str
    value: float | None
    status: str
    source: str

    @property
    def applicable(self) -> bool:
        return self.status in (OK, VACUOUS, INFINITE_STATUS)

    def __float__(self) -> float:
        if self.value is None:
            return math.nan
        return float(self.value)


@dataclass
class BoundReport:
    inputs: dict
    bounds: dict = field(default_factory=dict)

    def add(self, b: Bound) -> None:
        self.bounds[b.name] = b

    def __getitem__(self, name: str) -> Bound:
        return self.bounds[name]

    def __iter__(self):
        return iter(self.bounds.values())

    def value(self, name: str) -> float | None:
        return self.bounds[name].value

    def lines(self) -> list[str]:
        out = [f"{k} = {v}" for k, v in self.inputs.items()]
        for b in self.bounds.values():
            shown = "-" if b.value is None else f"{b.value:.12g}"
            out.append(f"{b.name}: {shown} [{b.status}] ({b.source})")
        return out


# ---------------------------------------------------------------- validation
def _as_float(x) -> float:
    # robustness may be the INFINITE tag from measures
    if x is not None and type(x).__name__ == "Infinite":
        return math.inf
    return float(x)


def _check_r(r) -> float:
    r = _as_float(r)
    if math.isnan(r) or r < 1 - 1e-7:
        raise ValueError(f"robustness must be >= 1, got {r}")
    return max(r, 1.0)


def _check_unit(name: str, x, lo_open: bool = False) -> float:
    x = float(x)
    if math.isnan(x) or x < -_SLACK or x > 1 + _SLACK or (lo_open and x <= 0):
        raise ValueError(f"{name} must lie in {'(0,1]' if lo_open else '[0,1]'}, got {x}")
    return min(max(x, 0.0), 1.0)


def _clamped(name: str, raw: float, source: str) -> Bound:
    if raw <= 0:
        return Bound(name, 0.0, VACUOUS, source)
    return Bound(name, min(raw, 1.0), OK, source)


def _weight_zero(w: float) -> bool:
    return w <= DEFAULT.zero_weight


# ---------------------------------------------------------------- one-shot floors
def _floors(r, w, f, level: str) -> BoundReport:
    r = _check_r(r)
    w = _check_unit("weight", w)
    f = _check_unit("fidelity", f, lo_open=True)
    rep = BoundReport({"R": r, "W": w, "F": f})
    rep.add(_clamped("robustness", 1.0 - f * r, f"robustness floor, {level} target"))
    if _weight_zero(w):
        rep.add(Bound("weight", None, INAPPLICABLE, f"weight floor, {level} target: no free element in support"))
    else:
        rep.add(_clamped("weight", (1.0 - f) * w, f"weight floor, {level} target"))
    return rep


def error_floor_unitary(r, w, f) -> BoundReport:
    """Error floors for reaching a unitary channel: ``1 - F R`` and ``(1 - F) W``."""
    return _floors(r, w, f, "unitary")


def error_floor_state(r, w, f) -> BoundReport:
    """Error floors for reaching a pure state; same formulas at the state level."""
    return _floors(r, w, f, "pure state")


def previous_bound(lambda_min, f) -> Bound:
    """Earlier eigenvalue floor ``(1 - F) lambda_min``, valid for full-rank inputs only."""
    lam = _check_unit("lambda_min", lambda_min)
    f = _check_unit("fidelity", f, lo_open=True)
    if lam <= DEFAULT.zero_weight:
        return Bound("previous", None, INAPPLICABLE, "eigenvalue floor: input not full rank")
    return _clamped("previous", (1.0 - f) * lam, "eigenvalue floor")


# ---------------------------------------------------------------- copies
def _check_eps(eps) -> float:
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"epsilon must lie in (0,1), got {eps}")
    return eps


def _weight_copies(w: float, fm: float, eps: float, source: str, name: str = "weight") -> Bound:
    if _weight_zero(w):
        return Bound(name, None, INAPPLICABLE, source + ": no free element in support")
    if eps >= 1.0 - fm:
        return Bound(name, 0.0, VACUOUS, source)
    if w >= 1.0 - 1e-15:
        return Bound(name, math.inf, INFEASIBLE, source + ": free input cannot reach the target")
    return Bound(name, max(0.0, math.log2((1.0 - fm) / eps) / math.log2(1.0 / w)), OK, source)


def copy_floor(r, w, f_single, m: int, eps) -> BoundReport:
    """Minimum uses ``n`` to reach ``m`` copies of the target within error ``eps``.

    ``n >= log_R((1 - eps) / F^m)`` and ``n >= log_{1/W}((1 - F^m) / eps)``.
    """
    r = _check_r(r)
    w = _check_unit("weight", w)
    f = _check_unit("fidelity", f_single, lo_open=True)
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    eps = _check_eps(eps)
    fm = f ** int(m)
    rep = BoundReport({"R": r, "W": w, "F": f, "m": int(m), "eps": eps})
    arg = (1.0 - eps) / fm
    src = "robustness copy floor"
    if arg <= 1.0 or math.isinf(r):
        rep.add(Bound("robustness", 0.0, VACUOUS, src))
    elif r <= 1.0 + 1e-12:
        rep.add(Bound("robustness", math.inf, INFEASIBLE, src + ": free input cannot reach the target"))
    else:
        rep.add(Bound("robustness", math.log2(arg) / math.log2(r), OK, src))
    rep.add(_weight_copies(w, fm, eps, "weight copy floor"))
    return rep


def previous_copy_floor(lambda_min, f_single, m: int, eps) -> Bound:
    """Copy floor from the eigenvalue bound, full-rank inputs only."""
    lam = _check_unit("lambda_min", lambda_min)
    f = _check_unit("fidelity", f_single, lo_open=True)
    eps = _check_eps(eps)
    if lam <= DEFAULT.zero_weight:
        return Bound("previous", None, INAPPLICABLE, "eigenvalue copy floor: input not full rank")
    return _weight_copies(lam, f ** int(m), eps, "eigenvalue copy floor", name="previous")


def transform_floor(r_in, r_out, w_in, w_out) -> BoundReport:
    """Uses of the input needed for an exact transformation into one output."""
    r_in, r_out = _check_r(r_in), _check_r(r_out)
    w_in, w_out = _check_unit("weight", w_in), _check_unit("weight", w_out)
    rep = BoundReport({"R_in": r_in, "R_out": r_out, "W_in": w_in, "W_out": w_out})
    src = "robustness transformation floor"
    if r_in <= 1.0 + 1e-12:
        if r_out <= 1.0 + 1e-12:
            rep.add(Bound("robustness", None, UNDEFINED, src + ": both free"))
        else:
            rep.add(Bound("robustness", math.inf, INFEASIBLE, src + ": free input cannot reach the target"))
    elif math.isinf(r_out):
        rep.add(Bound("robustness", math.inf, INFINITE_STATUS, src))
    elif math.isinf(r_in):
        rep.add(Bound("robustness", 0.0, VACUOUS, src))
    else:
        v = math.log2(r_out) / math.log2(r_in)
        rep.add(Bound("robustness", v, OK if v > 0 else VACUOUS, src))
    src = "weight transformation floor"
    zin, zout = _weight_zero(w_in), _weight_zero(w_out)
    one_in, one_out = w_in >= 1.0 - 1e-12, w_out >= 1.0 - 1e-12
    if zin and zout:
        rep.add(Bound("weight", None, UNDEFINED, src + ": both weights vanish"))
    elif zout:
        rep.add(Bound("weight", math.inf, INFINITE_STATUS, src + ": exact target unreachable"))
    elif zin:
        rep.add(Bound("weight", 0.0, VACUOUS, src))
    elif one_in:
        if one_out:
            rep.add(Bound("weight", None, UNDEFINED, src + ": both free"))
        else:
            rep.add(Bound("weight", math.inf, INFEASIBLE, src + ": free input cannot reach the target"))
    else:
        v = math.log2(w_out) / math.log2(w_in)
        rep.add(Bound("weight", v, OK if v > 0 else VACUOUS, src))
    return rep


# ---------------------------------------------------------------- rates
def rate_ceiling(numerator, f_single, source: str = "rate ceiling") -> Bound:
    """Strong converse ceiling ``numerator / log(1/F)`` (numerator in bits)."""
    num = _as_float(numerator)
    if math.isnan(num) or num < -1e-9:
        raise ValueError(f"numerator must be >= 0, got {num}")
    f = _check_unit("fidelity", f_single, lo_open=True)
    if f >= 1.0 - 1e-15:
        return Bound("rate", None, UNDEFINED, source + ": target is free")
    if math.isinf(num):
        return Bound("rate", math.inf, INFINITE_STATUS, source)
    return Bound("rate", max(num, 0.0) / math.log2(1.0 / f), OK, source)


def rate_ceiling_adaptive(r, f_single) -> Bound:
    """Ceiling for adaptive protocols from the log-robustness."""
    return rate_ceiling(math.log2(_check_r(r)), f_single, "adaptive rate ceiling")


def rate_ceiling_parallel(dinf, f_single) -> Bound:
    """Ceiling for parallel protocols from a regularised max-relative entropy (bits)."""
    return rate_ceiling(dinf, f_single, "parallel rate ceiling")


# ---------------------------------------------------------------- probabilistic
def _check_prob(p, trm) -> tuple[float, float]:
    p = float(p)
    if not 0.0 < p <= 1.0:
        raise ValueError(f"success probability must lie in (0,1], got {p}")
    return p, _check_unit("trM", trm)


def probabilistic_floor_channel(r, w, f, p, trm) -> BoundReport:
    """Floors conditioned on success with probability ``p``.

    ``trm`` is the success probability of the same protocol fed with the free
    component of the input.
    """
    r = _check_r(r)
    w = _check_unit("weight", w)
    f = _check_unit("fidelity", f, lo_open=True)
    p, trm = _check_prob(p, trm)
    rep = BoundReport({"R": r, "W": w, "F": f, "p": p, "trM": trm})
    rep.add(_clamped("robustness", 1.0 - r * f / p, "probabilistic robustness floor"))
    if _weight_zero(w):
        rep.add(Bound("weight_loose", None, INAPPLICABLE, "probabilistic weight floor: zero weight"))
        rep.add(Bound("weight_tight", None, INAPPLICABLE, "probabilistic weight floor: zero weight"))
        return rep
    rep.add(_clamped("weight_loose", 1.0 - (1.0 - (1.0 - f) * w) / p, "probabilistic weight floor"))
    rep.add(_clamped("weight_tight", (1.0 - f) * w * trm / p, "probabilistic weight floor with free-part success"))
    return rep


def probabilistic_floor_state(r, w, f, p, trm) -> BoundReport:
    r = _check_r(r)
    w = _check_unit("weight", w)
    f = _check_unit("fidelity", f, lo_open=True)
    p, trm = _check_prob(p, trm)
    rep = BoundReport({"R": r, "W": w, "F": f, "p": p, "trM": trm})
    rep.add(_clamped("robustness", 1.0 - r * f / p, "probabilistic robustness floor, states"))
    if _weight_zero(w):
        rep.add(Bound("weight_loose", None, INAPPLICABLE, "probabilistic weight floor: zero weight"))
        rep.add(Bound("weight_tight", None, INAPPLICABLE, "probabilistic weight floor: zero weight"))
        return rep
    rep.add(_clamped("weight_loose", (1.0 - f) * (1.0 - (1.0 - w) / p), "probabilistic weight floor, states"))
    rep.add(_clamped("weight_tight", (1.0 - f) * w * trm / p, "probabilistic weight floor with free-part success, states"))
    return rep
