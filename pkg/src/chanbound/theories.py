"""Free sets of states and channels, compiled to conic constraints.

A free set lives in an object space: density operators on ``C^d`` or
Choi matrices of channels ``d_in -> d_out``.  Each set exposes a conic
parameterisation of the cone it generates: ``cone(model)`` returns an affine
matrix expression ``Y`` and a scalar ``lam`` such that the feasible ``Y`` are
exactly ``lam * M`` with ``M`` a free element (Choi matrices unnormalised,
trace ``d_in``).  Measures are then plain linear matrix inequalities in
``(Y, lam)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qla, stab
from .config import DEFAULT, Tolerances
from .conic import Affine, Model
from .errors import DimensionError, DomainError, UnsupportedError

__all__ = [
    "ObjectSpace",
    "FreeSet",
    "VertexPolytope",
    "ReplacementChannels",
    "PPTChannels",
    "AllStates",
    "replacement_channels",
    "ppt_channels",
    "csp_channels",
    "stab_states",
    "diag_states",
    "all_states",
    "sep_channels",
]

MAX_CSP_QUBITS = 4


@dataclass(frozen=True)
class ObjectSpace:
    kind: str  # "state" or "channel"
    dims: tuple

    @classmethod
    def state(cls, d: int) -> "ObjectSpace":
        return cls("state", (int(d),))

    @classmethod
    def channel(cls, d_in: int, d_out: int) -> "ObjectSpace":
        return cls("channel", (int(d_in), int(d_out)))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def scale(self) -> int:
        """Trace of a free element in operator form."""
        return self.dims[0] if self.kind == "channel" else 1

    def operator(self, obj) -> np.ndarray:
        """Operator form of a state or channel living in this space."""
        from .channels import Channel

        if isinstance(obj, Channel):
            if self.kind != "channel" or obj.dims != self.dims:
                raise DimensionError(f"channel {obj.dims} does not live in {self}")
            return np.asarray(obj.choi)
        if isinstance(obj, qla.DensityOperator):
            mat = obj.matrix
        else:
            mat = qla.hermitian(obj)
        if mat.shape != (self.dim, self.dim):
            raise DimensionError(f"operator of shape {mat.shape} does not live in {self}")
        return np.asarray(mat)

    def __str__(self) -> str:
        if self.kind == "channel":
            return f"channel({self.dims[0]}->{self.dims[1]})"
        return f"state({self.dims[0]})"


class FreeSet:
    """Common interface; subclasses implement ``cone`` and ``linear_range``."""

    name = "free"
    space: ObjectSpace

    def cone(self, model: Model, support: np.ndarray | None = None):
        """Return ``(Y, lam)`` or ``None`` when the restricted cone is {0}.

        With ``support`` (an isometry ``P``), only free elements whose range
        lies inside ``range(P)`` are parameterised.
        """
        raise NotImplementedError

    def linear_range(self, x: np.ndarray, tol: Tolerances = DEFAULT) -> tuple[float, float]:
        """Exact (min, max) of ``<x, M>`` over free elements M in operator form."""
        raise NotImplementedError

    def canonical(self) -> np.ndarray:
        """A free element in operator form."""
        raise NotImplementedError

    def _tp_ok(self, op: np.ndarray, tol: Tolerances) -> bool:
        if self.space.kind != "channel":
            return abs(np.trace(op).real - 1.0) <= tol.trace
        d_in, _ = self.space.dims
        marg = qla.partial_trace(op, self.space.dims, [0])
        return np.abs(marg - np.eye(d_in)).max() <= tol.trace_preserving

    def contains(self, obj, tol: Tolerances = DEFAULT) -> bool:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name} on {self.space}>"


# ---------------------------------------------------------------- polytopes
class VertexPolytope(FreeSet):
    """Convex hull of unit-trace PSD vertices.

    ``tp=True`` (channel spaces) additionally imposes trace preservation on
    the mixture, so free elements are the TP points of the hull.
    """

    def __init__(self, space: ObjectSpace, vertices=None, amplitudes=None, tp: bool | None = None,
                 name: str = "polytope"):
        if (vertices is None) == (amplitudes is None):
            raise ValueError("give exactly one of vertices or amplitudes")
        self.space = space
        self.name = name
        self.tp = (space.kind == "channel") if tp is None else bool(tp)
        n = space.dim
        if amplitudes is not None:
            a = np.asarray(amplitudes, dtype=complex)
            if a.ndim != 2 or a.shape[1] != n:
                raise DimensionError(f"amplitudes must have shape (k, {n})")
            if a.shape[0] == 0:
                raise DomainError("vertex list is empty")
            self._amps = a / np.linalg.norm(a, axis=1, keepdims=True)
            self._verts = None
        else:
            v = np.asarray(vertices, dtype=complex)
            if v.ndim != 3 or v.shape[1:] != (n, n):
                raise DimensionError(f"vertices must have shape (k, {n}, {n})")
            if v.shape[0] == 0:
                raise DomainError("vertex list is empty")
            v = (v + np.conj(np.swapaxes(v, 1, 2))) / 2
            tr = np.trace(v, axis1=1, axis2=2).real
            if np.abs(tr - 1).max() > 1e-9:
                raise DomainError("vertices must have unit trace")
            if min(np.linalg.eigvalsh(v).min(axis=1)) < -1e-9:
                raise DomainError("vertices must be PSD")
            self._amps = None
            self._verts = v

    @property
    def count(self) -> int:
        return (self._amps if self._amps is not None else self._verts).shape[0]

    def __len__(self) -> int:
        return self.count

    @property
    def pure(self) -> bool:
        return self._amps is not None

    @property
    def amplitudes(self) -> np.ndarray | None:
        return self._amps

    def vertices(self, idx=None) -> np.ndarray:
        if self._amps is None:
            return self._verts if idx is None else self._verts[idx]
        a = self._amps if idx is None else self._amps[idx]
        return np.einsum("ki,kj->kij", a, a.conj())

    def vertex_values(self, x: np.ndarray) -> np.ndarray:
        """``<x, V_i>`` for every vertex (normalised vertices)."""
        x = np.asarray(x, dtype=complex)
        if self._amps is not None:
            return np.einsum("ki,ij,kj->k", self._amps.conj(), x, self._amps).real
        return np.einsum("ij,kij->k", x.conj(), self._verts).real

    def _support_mask(self, support: np.ndarray | None, tol: float) -> np.ndarray:
        if support is None:
            return np.ones(self.count, dtype=bool)
        # leakage of each vertex outside range(P)
        proj = support @ support.conj().T
        outside = np.eye(self.space.dim) - proj
        return self.vertex_values(outside) <= tol

    def cone(self, model: Model, support=None, tol: Tolerances = DEFAULT):
        keep = np.flatnonzero(self._support_mask(support, tol.support))
        if keep.size == 0:
            return None
        c = model.variable((keep.size,), nonneg=True)
        y = c.combine(self.space.scale * self.vertices(keep))
        lam = c.sum()
        if self.tp:
            d_in = self.space.dims[0]
            model.add_eq(y.ptrace(self.space.dims, [0]) - lam.times(np.eye(d_in)))
        return y, lam

    def linear_range(self, x, tol: Tolerances = DEFAULT) -> tuple[float, float]:
        x = qla.hermitian(x)
        if not self.tp:
            vals = self.space.scale * self.vertex_values(x)
            return float(vals.min()), float(vals.max())
        out = []
        for sense in (1.0, -1.0):
            m = Model()
            y, lam = self.cone(m)
            m.add_eq(lam, 1.0)
            if sense > 0:
                m.minimize(y.dot(x).real)
            else:
                m.maximize(y.dot(x).real)
            s = m.solve(tol, label=f"{self.name}:range")
            if s.status != "optimal":
                raise DomainError(f"free set {self.name} has no TP element")
            out.append(s.value)
        return out[0], out[1]

    def decompose(self, op, tol: Tolerances = DEFAULT):
        """Vertex weights reproducing ``op`` (normalised), or None."""
        op = self.space.operator(op) / self.space.scale
        m = Model()
        c = m.variable((self.count,), nonneg=True)
        y = c.combine(self.vertices())
        m.add_eq(y - op)
        m.minimize(c.sum())
        s = m.solve(tol, method="simplex", label=f"{self.name}:member")
        if s.status != "optimal" or abs(s.value - 1.0) > 1e-7:
            return None
        return s[c].real

    def contains(self, obj, tol: Tolerances = DEFAULT) -> bool:
        op = self.space.operator(obj)
        if np.linalg.eigvalsh(op)[0] < -tol.psd:
            return False
        if self.tp and not self._tp_ok(op, tol):
            return False
        if self.space.kind == "state" and not self._tp_ok(op, tol):
            return False
        return self.decompose(op, tol) is not None

    def canonical(self) -> np.ndarray:
        avg = self.vertices().mean(axis=0) * self.space.scale
        return avg


# ---------------------------------------------------------------- SDP cones
def _restrict(model: Model, n: int, support) -> Affine:
    if support is None:
        return model.hermitian(n, psd=True)
    r = support.shape[1]
    inner = model.hermitian(r, psd=True)
    return inner.sandwich(support)


class AllStates(FreeSet):
    """Every density operator; replacement channels of these reduce to plain states."""

    def __init__(self, d: int):
        self.space = ObjectSpace.state(d)
        self.name = f"states({d})"

    def cone(self, model, support=None, tol: Tolerances = DEFAULT):
        if support is not None and support.shape[1] == 0:
            return None
        y = _restrict(model, self.space.dim, support)
        return y, y.trace().real

    def linear_range(self, x, tol: Tolerances = DEFAULT):
        ev = qla.eigvals_hermitian(qla.hermitian(x))
        return float(ev[0]), float(ev[-1])

    def contains(self, obj, tol: Tolerances = DEFAULT) -> bool:
        op = self.space.operator(obj)
        return np.linalg.eigvalsh(op)[0] >= -tol.psd and self._tp_ok(op, tol)

    def canonical(self):
        return np.eye(self.space.dim, dtype=complex) / self.space.dim


class ReplacementChannels(FreeSet):
    """Channels ``rho -> Tr(rho) sigma``: Choi ``I (x) sigma``."""

    def __init__(self, d_in: int, d_out: int):
        self.space = ObjectSpace.channel(d_in, d_out)
        self.name = f"replacement({d_in}->{d_out})"

    def _allowed_outputs(self, support, tol: float):
        """Isometry onto output vectors v with I (x) vv^dag supported in range(P)."""
        d_in, d_out = self.space.dims
        n = self.space.dim
        if support is None:
            return None
        ev, vecs = np.linalg.eigh(np.eye(n) - support @ support.conj().T)
        q = vecs[:, ev > 0.5]
        if q.shape[1] == 0:
            return None
        # blocks q_a[b] = (<a| (x) I) q ; v must be orthogonal to all of them
        blocks = q.reshape(d_in, d_out, -1).transpose(1, 0, 2).reshape(d_out, -1)
        u, s, _ = np.linalg.svd(blocks, full_matrices=True)
        rank = int(np.sum(s > np.sqrt(tol)))
        return u[:, rank:]

    def cone(self, model, support=None, tol: Tolerances = DEFAULT):
        d_in, d_out = self.space.dims
        allowed = self._allowed_outputs(support, tol.support)
        if allowed is not None and allowed.shape[1] == 0:
            return None
        sigma = _restrict(model, d_out, allowed)
        y = sigma.kron_left(np.eye(d_in))
        return y, sigma.trace().real

    def linear_range(self, x, tol: Tolerances = DEFAULT):
        reduced = qla.partial_trace(qla.hermitian(x), self.space.dims, [1])
        ev = qla.eigvals_hermitian(qla.hermitian(reduced))
        return float(ev[0]), float(ev[-1])

    def contains(self, obj, tol: Tolerances = DEFAULT) -> bool:
        op = self.space.operator(obj)
        d_in, d_out = self.space.dims
        if not self._tp_ok(op, tol) or np.linalg.eigvalsh(op)[0] < -tol.psd:
            return False
        sigma = qla.partial_trace(op, self.space.dims, [1]) / d_in
        return np.abs(op - np.kron(np.eye(d_in), sigma)).max() <= tol.trace_preserving

    def canonical(self):
        d_in, d_out = self.space.dims
        return np.eye(d_in * d_out, dtype=complex) / d_out


class PPTChannels(FreeSet):
    """Channels whose Choi matrix has a PSD partial transpose on the output."""

    def __init__(self, d_in: int, d_out: int):
        self.space = ObjectSpace.channel(d_in, d_out)
        self.name = f"ppt({d_in}->{d_out})"

    def cone(self, model, support=None, tol: Tolerances = DEFAULT):
        if support is not None and support.shape[1] == 0:
            return None
        d_in, _ = self.space.dims
        y = _restrict(model, self.space.dim, support)
        model.add_psd(y.ptranspose(self.space.dims, [1]))
        lam = model.variable()
        model.add_eq(y.ptrace(self.space.dims, [0]) - lam.times(np.eye(d_in)))
        return y, lam

    def linear_range(self, x, tol: Tolerances = DEFAULT):
        x = qla.hermitian(x)
        out = []
        for sense in (1.0, -1.0):
            m = Model()
            y, lam = self.cone(m)
            m.add_eq(lam, 1.0)
            if sense > 0:
                m.minimize(y.dot(x).real)
            else:
                m.maximize(y.dot(x).real)
            s = m.solve(tol, label=f"{self.name}:range")
            out.append(s.value)
        return out[0], out[1]

    def contains(self, obj, tol: Tolerances = DEFAULT) -> bool:
        op = self.space.operator(obj)
        if not self._tp_ok(op, tol) or np.linalg.eigvalsh(op)[0] < -tol.psd:
            return False
        pt = qla.partial_transpose(op, self.space.dims, [1])
        return np.linalg.eigvalsh(qla.hermitian(pt))[0] >= -tol.psd

    def canonical(self):
        d_in, d_out = self.space.dims
        return np.eye(d_in * d_out, dtype=complex) / d_out


# ---------------------------------------------------------------- factories
def replacement_channels(d_in: int, d_out: int) -> ReplacementChannels:
    if d_in < 1 or d_out < 1 or (d_in > 1 and d_out < 2):
        raise DimensionError("replacement channels need d_out >= 2 unless d_in = 1")
    return ReplacementChannels(d_in, d_out)


def ppt_channels(d_in: int, d_out: int) -> PPTChannels:
    if d_in < 2 or d_out < 2:
        raise DimensionError("PPT channels need both dimensions >= 2")
    return PPTChannels(d_in, d_out)


def all_states(d: int) -> AllStates:
    return AllStates(d)


def csp_channels(n_in: int, n_out: int) -> VertexPolytope:
    """Completely stabilizer-preserving channels on qubits (TP stabilizer Choi states)."""
    if n_in < 1 or n_out < 1:
        raise DimensionError("need at least one input and one output qubit")
    if n_in + n_out > MAX_CSP_QUBITS:
        raise DomainError(f"n_in + n_out = {n_in + n_out} exceeds the {MAX_CSP_QUBITS}-qubit budget")
    poly = stab.load_or_enumerate(n_in + n_out)
    space = ObjectSpace.channel(2 ** n_in, 2 ** n_out)
    return VertexPolytope(space, amplitudes=poly.amplitudes, tp=True, name=f"csp({n_in}->{n_out})")


def stab_states(n: int) -> VertexPolytope:
    poly = stab.load_or_enumerate(n)
    return VertexPolytope(ObjectSpace.state(2 ** n), amplitudes=poly.amplitudes, name=f"stab({n})")


def diag_states(basis) -> VertexPolytope:
    """Convex hull of the projectors onto the given vectors."""
    vecs = np.atleast_2d(np.asarray(basis, dtype=complex))
    if vecs.shape[0] == 0 or vecs.size == 0:
        raise DomainError("basis list is empty")
    return VertexPolytope(ObjectSpace.state(vecs.shape[1]), amplitudes=vecs, name=f"diag({vecs.shape[0]})")


def sep_channels(d_in: int, d_out: int):
    raise UnsupportedError("separable channels have no membership backend; use sep_robustness_analytic")
