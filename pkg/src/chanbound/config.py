"""Central tolerance record.

Every numerical threshold used by the package lives here so that callers can
tighten or relax them in one place.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # construction-time checks
    hermitian: float = 1e-12
    psd: float = 1e-9
    trace: float = 1e-9
    trace_preserving: float = 1e-8
    unitary: float = 1e-10
    # eigensolver
    jacobi_tol: float = 1e-14
    jacobi_max_sweeps: int = 60
    sqrt_clip: float = 1e-9
    # conic solver
    gap: float = 1e-7
    feasibility: float = 1e-8
    dual_psd: float = 1e-8
    ipm_gap: float = 1e-10
    ipm_infeas: float = 1e-10
    ipm_max_iter: int = 120
    divergence: float = 1e12
    # measures
    support: float = 1e-10
    zero_weight: float = 1e-9
    witness: float = 1e-6
    # mutual information
    mi_gap: float = 1e-9
    mi_max_iter: int = 20000

    def with_(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT = Tolerances()
