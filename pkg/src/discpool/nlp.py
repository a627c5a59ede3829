"""Check flow solutions against the bilinear pooling models."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discretize import VariantSpec, var_name
from .instance import PoolingInstance

__all__ = [
    "FAMILIES",
    "FlowSolution",
    "FeasibilityReport",
    "evaluate_sb",
    "evaluate_pq",
    "evaluate",
    "lift_milp_solution",
]

FAMILIES = ("pool capacity", "demand", "specifications", "splitting", "simplex", "pipeline")
DEFAULT_TOL = 1e-6


def _array(x, ndim, label):
    a = np.array(x, dtype=float)
    if a.ndim != ndim:
        raise ValueError(f"{label} must have {ndim} dimensions, got {a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{label} has non-finite entries")
    if np.any(a < 0):
        raise ValueError(f"{label} has negative entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FlowSolution:
    """Flows ``F[i,j]``, ``Fhat[i,j,k]`` plus either split fractions ``R[j,k]``
    or inlet proportions ``q[i,j]``."""

    F: np.ndarray
    Fhat: np.ndarray
    R: np.ndarray | None = None
    q: np.ndarray | None = None

    def __post_init__(self):
        if (self.R is None) == (self.q is None):
            raise ValueError("give exactly one of R (split form) or q (proportion form)")
        object.__setattr__(self, "F", _array(self.F, 2, "F"))
        object.__setattr__(self, "Fhat", _array(self.Fhat, 3, "Fhat"))
        for label in ("R", "q"):
            val = getattr(self, label)
            if val is not None:
                a = _array(val, 2, label)
                if np.any(a > 1):
                    raise ValueError(f"{label} has entries above 1")
                object.__setattr__(self, label, a)

    @property
    def form(self) -> str:
        return "SB" if self.R is not None else "PQ"

    @classmethod
    def zeros(cls, inst: PoolingInstance, form: str = "SB") -> "FlowSolution":
        """All-zero flows with everything routed to the first product / stream."""
        nI, nJ, nK, _ = inst.shape
        F, Fhat = np.zeros((nI, nJ)), np.zeros((nI, nJ, nK))
        if form.upper() == "SB":
            R = np.zeros((nJ, nK))
            R[:, 0] = 1.0
            return cls(F, Fhat, R=R)
        q = np.zeros((nI, nJ))
        q[0, :] = 1.0
        return cls(F, Fhat, q=q)


@dataclass(frozen=True)
class FeasibilityReport:
    violations: dict
    objective: float
    tol: float = DEFAULT_TOL
    detail: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return all(v <= self.tol for v in self.violations.values())

    @property
    def worst(self) -> float:
        return max(self.violations.values())

    def __str__(self) -> str:
        lines = [f"objective {self.objective:.6f}", f"feasible {self.feasible} (tol {self.tol:g})"]
        lines += [f"  {fam:<15} {self.violations[fam]:.3e}" for fam in FAMILIES]
        return "\n".join(lines)


def _check_dims(inst: PoolingInstance, sol: FlowSolution) -> None:
    nI, nJ, nK, _ = inst.shape
    want = {"F": (nI, nJ), "Fhat": (nI, nJ, nK), "R": (nJ, nK), "q": (nI, nJ)}
    for label, shape in want.items():
        a = getattr(sol, label)
        if a is not None and a.shape != shape:
            raise ValueError(f"{label} has shape {a.shape}, instance needs {shape}")


def _pos(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.max(x, initial=0.0).clip(min=0.0))


def _shared(inst: PoolingInstance, sol: FlowSolution) -> dict:
    Fhat = sol.Fhat
    out_k = Fhat.sum(axis=(0, 1))
    # sum_ij (pi_il - psi_kl) Fhat_ijk per (k, l)
    quality = np.einsum("ijk,il->kl", Fhat, inst.pi)
    spec = quality - inst.psi * out_k[:, None]
    return {
        "pool capacity": _pos(sol.F.sum(axis=0) - inst.gamma),
        "demand": _pos(out_k - inst.omega),
        "specifications": _pos(spec),
    }


def _objective(inst: PoolingInstance, sol: FlowSolution) -> float:
    return float(np.einsum("ijk,k->", sol.Fhat, inst.beta) - np.einsum("ij,i->", sol.F, inst.alpha))


def evaluate_sb(inst: PoolingInstance, sol: FlowSolution, tol: float = DEFAULT_TOL) -> FeasibilityReport:
    if sol.R is None:
        raise ValueError("evaluate_sb needs split fractions R")
    _check_dims(inst, sol)
    v = _shared(inst, sol)
    split = np.abs(sol.Fhat - sol.F[:, :, None] * sol.R[None, :, :])
    balance = np.abs(sol.Fhat.sum(axis=2) - sol.F)
    v["splitting"] = float(max(split.max(initial=0.0), balance.max(initial=0.0)))
    v["simplex"] = float(np.abs(sol.R.sum(axis=1) - 1.0).max(initial=0.0))
    v["pipeline"] = _pos(sol.Fhat.sum(axis=0) - inst.upsilon)
    return FeasibilityReport({f: v[f] for f in FAMILIES}, _objective(inst, sol), tol)


def evaluate_pq(inst: PoolingInstance, sol: FlowSolution, tol: float = DEFAULT_TOL) -> FeasibilityReport:
    """Stream-to-pool capacities are checked only when the instance has them."""
    if sol.q is None:
        raise ValueError("evaluate_pq needs inlet proportions q")
    _check_dims(inst, sol)
    v = _shared(inst, sol)
    Fbar = sol.Fhat.sum(axis=0)
    split = np.abs(sol.Fhat - sol.q[:, :, None] * Fbar[None, :, :])
    balance = np.abs(sol.Fhat.sum(axis=2) - sol.F)
    v["splitting"] = float(max(split.max(initial=0.0), balance.max(initial=0.0)))
    v["simplex"] = float(np.abs(sol.q.sum(axis=0) - 1.0).max(initial=0.0))
    pipe = _pos(Fbar - inst.upsilon)
    if inst.sigma is not None:
        pipe = max(pipe, _pos(sol.Fhat.sum(axis=2) - inst.sigma))
    v["pipeline"] = pipe
    return FeasibilityReport({f: v[f] for f in FAMILIES}, _objective(inst, sol), tol)


def evaluate(inst: PoolingInstance, sol: FlowSolution, tol: float = DEFAULT_TOL) -> FeasibilityReport:
    return evaluate_sb(inst, sol, tol) if sol.form == "SB" else evaluate_pq(inst, sol, tol)


def _get(values, name):
    try:
        return float(values[name])
    except KeyError:
        raise ValueError(f"missing value for variable {name!r}") from None


def lift_milp_solution(inst: PoolingInstance, variant: VariantSpec, values) -> FlowSolution:
    """Map a MILP assignment back to flow space.

    ``values`` is a name -> value dict or a solution object whose ``values``
    attribute holds one.  Fractions are rebuilt from the rounded binaries,
    so they sit exactly on the grid.
    """
    if not isinstance(values, dict):
        values = values.values
    I, J, K = inst.streams, inst.pools, inst.products
    nI, nJ, nK, _ = inst.shape
    F = np.array([[_get(values, var_name("F", i, j)) for j in J] for i in I]).reshape(nI, nJ)
    Fhat = np.array(
        [[[_get(values, var_name("Fhat", i, j, k)) for k in K] for j in J] for i in I]
    ).reshape(nI, nJ, nK)
    # solver round-off can leave -1e-12 style entries
    F = np.clip(F, 0.0, None)
    Fhat = np.clip(Fhat, 0.0, None)
    form = variant.formulation
    if form == "SB":
        w = [2.0 ** (1 - p) for p in range(1, variant.n + 1)]
        R = np.array([
            [sum(wp * round(_get(values, var_name("Z", j, k, p))) for p, wp in enumerate(w, 1)) for k in K]
            for j in J
        ]).reshape(nJ, nK)
        return FlowSolution(F, Fhat, R=np.clip(R, 0.0, 1.0))
    if form == "SBN":
        R = np.array([
            [sum(psi * round(_get(values, var_name("Zs", j, k, m))) for m, psi in enumerate(variant.psi)) for k in K]
            for j in J
        ]).reshape(nJ, nK)
        return FlowSolution(F, Fhat, R=np.clip(R, 0.0, 1.0))
    w = [2.0 ** (1 - p) for p in range(1, variant.n + 1)]
    q = np.array([
        [sum(wp * round(_get(values, var_name("Zq", i, j, p))) for p, wp in enumerate(w, 1)) for j in J]
        for i in I
    ]).reshape(nI, nJ)
    return FlowSolution(F, Fhat, q=np.clip(q, 0.0, 1.0))
