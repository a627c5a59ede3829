"""Discretization-based MILP models of the pooling problem.

Three builders share one instance type and one variant selector:

* ``build_sb``  -- split fractions ``R[j,k]`` restricted to a dyadic grid by
  binary expansion, products ``F[i,j] * Z[j,k,p]`` linearized exactly.
* ``build_pq``  -- stream proportions ``q[i,j]`` discretized the same way.
* ``build_sbn`` -- split fractions picked from an explicit value list by one
  binary per value.

Cut flags add the tightening families from :mod:`discpool.cuts` once per
bilinear pair.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

from . import cuts as _cuts
from .instance import PoolingInstance, validate_instance
from .milp import BINARY, MilpModel

__all__ = [
    "CUT_FLAGS",
    "VariantSpec",
    "DiscretizationGrid",
    "grid_values",
    "parse_cuts",
    "parse_variant",
    "var_name",
    "build_sb",
    "build_pq",
    "build_sbn",
    "build",
]

CUT_FLAGS = ("F", "T", "LTI", "LTIS")
FORMULATIONS = ("SB", "PQ", "SBN")


@dataclass(frozen=True)
class DiscretizationGrid:
    values: tuple
    n: int | None = None

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


def grid_values(n: int) -> DiscretizationGrid:
    """``{0, 2^(1-n), ..., 1}``; every value is an exact dyadic float."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    steps = 2 ** (int(n) - 1)
    return DiscretizationGrid(tuple(k / steps for k in range(steps + 1)), int(n))


@dataclass(frozen=True)
class VariantSpec:
    formulation: str = "SB"
    n: int | None = 4
    psi: tuple | None = None
    cuts: frozenset = frozenset()

    def __post_init__(self):
        form = self.formulation.upper()
        object.__setattr__(self, "formulation", form)
        object.__setattr__(self, "cuts", frozenset(c.upper() for c in self.cuts))
        if form not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        bad = self.cuts - set(CUT_FLAGS)
        if bad:
            raise ValueError(f"unknown cut flags {sorted(bad)}")
        if form == "SBN":
            if self.psi is None:
                if self.n is None:
                    raise ValueError("SBN needs a psi list or n")
                object.__setattr__(self, "psi", grid_values(self.n).values)
            psi = tuple(float(v) for v in self.psi)
            if psi[0] != 0.0 or psi[-1] != 1.0 or any(b <= a for a, b in zip(psi, psi[1:])):
                raise ValueError("psi must be strictly increasing from 0 to 1")
            object.__setattr__(self, "psi", psi)
        else:
            if self.n is None or int(self.n) != self.n or self.n < 1:
                raise ValueError(f"n must be a positive integer, got {self.n!r}")
            if self.psi is not None:
                raise ValueError("psi only applies to the SBN formulation")
        if "LTIS" in self.cuts and form != "SBN" and self.n < 2:
            raise ValueError("strengthened LTI needs n >= 2")

    @property
    def name(self) -> str:
        flags = "".join(f for f in ("F", "T") if f in self.cuts)
        extra = [f for f in ("LTI", "LTIS") if f in self.cuts]
        suffix = "_".join(([flags] if flags else []) + extra)
        return self.formulation + (f"_{suffix}" if suffix else "")

    @property
    def label(self) -> str:
        if self.formulation == "SBN":
            return f"{self.name}(m={len(self.psi)})"
        return f"{self.name}(n={self.n})"


def parse_cuts(text: str) -> frozenset:
    """``none``, ``f``, ``t``, ``ft``, ``lti``, ``ltis`` or ``+``-joined combinations."""
    flags = set()
    for part in text.lower().replace(",", "+").split("+"):
        part = part.strip()
        if part in ("", "none"):
            continue
        if part in ("lti", "ltis"):
            flags.add(part.upper())
        elif set(part) <= {"f", "t"}:
            flags.update(ch.upper() for ch in part)
        else:
            raise ValueError(f"unknown cut spelling {part!r}")
    return frozenset(flags)


def parse_variant(text: str, n: int | None = 4, psi=None) -> VariantSpec:
    """``sb``, ``sb_ft``, ``pq_f``, ``sbn_t``, ``sb_lti`` ... -> VariantSpec."""
    form, _, cut_text = text.strip().partition("_")
    return VariantSpec(form.upper(), n=n if form.upper() != "SBN" or psi is None else None,
                       psi=psi, cuts=parse_cuts(cut_text or "none"))


def var_name(family: str, *idx) -> str:
    return f"{family}({','.join(str(t) for t in idx)})"


def _fractions(values) -> list:
    return [Fraction(v) for v in values]


def _check(inst: PoolingInstance) -> None:
    report = validate_instance(inst)
    if not report.ok:
        raise ValueError("invalid instance: " + "; ".join(report.errors))


def _weighted(*terms) -> dict:
    out = {}
    for coef, expr in terms:
        for v, c in expr.items():
            out[v] = out.get(v, 0.0) + coef * c
    return out


def _add_role_cut(m: MilpModel, name: str, cut: _cuts.LinearCut, roles: dict) -> None:
    coefs = _weighted(*((c, roles[r]) for r, c in cut.coef.items()))
    m.add_constraint(name, coefs, "<=", cut.rhs, skip_duplicate=True)


def _common_rows(m: MilpModel, inst: PoolingInstance, F, Fhat) -> None:
    """Demand, specification and objective rows shared by all formulations."""
    I, J, K, L = inst.streams, inst.pools, inst.products, inst.properties
    for k, kk in enumerate(K):
        m.add_constraint(
            var_name("dem", kk), {Fhat[i, j, k]: 1.0 for i in range(len(I)) for j in range(len(J))},
            "<=", inst.omega[k],
        )
    for k, kk in enumerate(K):
        for l, ll in enumerate(L):
            m.add_constraint(
                var_name("spec", kk, ll),
                {Fhat[i, j, k]: inst.pi[i, l] - inst.psi[k, l] for i in range(len(I)) for j in range(len(J))},
                "<=", 0.0,
            )
    obj = {}
    for i in range(len(I)):
        for j in range(len(J)):
            obj[F[i, j]] = -inst.alpha[i]
            for k in range(len(K)):
                obj[Fhat[i, j, k]] = inst.beta[k]
    m.set_objective(obj, "max")


def _flow_vars(m: MilpModel, inst: PoolingInstance):
    I, J, K = inst.streams, inst.pools, inst.products
    F = {(i, j): m.add_var(var_name("F", ii, jj), tag="F[i,j]") for i, ii in enumerate(I) for j, jj in enumerate(J)}
    Fhat = {
        (i, j, k): m.add_var(var_name("Fhat", ii, jj, kk), tag="Fhat[i,j,k]")
        for i, ii in enumerate(I) for j, jj in enumerate(J) for k, kk in enumerate(K)
    }
    return F, Fhat


def _nontrivial(gamma: float, bound: float, where: str) -> bool:
    if bound >= gamma:
        warnings.warn(f"trivial bound at {where}: skipping cuts", stacklevel=3)
        return False
    return True


def _split_model(inst: PoolingInstance, spec: VariantSpec, levels: list, name: str) -> MilpModel:
    """Shared body of SB and SBN: ``R[j,k] = sum_m levels[m] * Z[j,k,m]``."""
    _check(inst)
    I, J, K = inst.streams, inst.pools, inst.products
    nI, nJ, nK = len(I), len(J), len(K)
    m = MilpModel(name=name)
    F, Fhat = _flow_vars(m, inst)
    R = {(j, k): m.add_var(var_name("R", jj, kk), 0.0, 1.0, tag="R[j,k]") for j, jj in enumerate(J) for k, kk in enumerate(K)}
    zfam = "Z" if spec.formulation == "SB" else "Zs"
    idx = range(1, len(levels) + 1) if spec.formulation == "SB" else range(len(levels))
    P = list(idx)
    Z = {
        (j, k, p): m.add_var(var_name(zfam, jj, kk, p), kind=BINARY, tag=f"{zfam}[j,k,{'p' if zfam == 'Z' else 'm'}]")
        for j, jj in enumerate(J) for k, kk in enumerate(K) for p in P
    }
    V = {
        (i, j, k, p): m.add_var(var_name("V", I[i], J[j], K[k], p), tag=f"V[i,j,k,{'p' if zfam == 'Z' else 'm'}]")
        for i in range(nI) for j in range(nJ) for k in range(nK) for p in P
    }
    weight = dict(zip(P, levels))
    for j, jj in enumerate(J):
        m.add_constraint(var_name("cap", jj), {F[i, j]: 1.0 for i in range(nI)}, "<=", inst.gamma[j])
    _common_rows(m, inst, F, Fhat)
    for j, jj in enumerate(J):
        m.add_constraint(var_name("simplex", jj), {R[j, k]: 1.0 for k in range(nK)}, "=", 1.0)
    for j, jj in enumerate(J):
        for k, kk in enumerate(K):
            m.add_constraint(var_name("pipe", jj, kk), {Fhat[i, j, k]: 1.0 for i in range(nI)}, "<=", inst.upsilon[j, k])
    for i, ii in enumerate(I):
        for j, jj in enumerate(J):
            row = {Fhat[i, j, k]: 1.0 for k in range(nK)}
            row[F[i, j]] = -1.0
            m.add_constraint(var_name("rlt1", ii, jj), row, "=", 0.0)
    for j, jj in enumerate(J):
        for k, kk in enumerate(K):
            row = {Fhat[i, j, k]: 1.0 for i in range(nI)}
            row[R[j, k]] = -inst.gamma[j]
            m.add_constraint(var_name("rlt2", jj, kk), row, "<=", 0.0)
    if spec.formulation == "SBN":
        for j, jj in enumerate(J):
            for k, kk in enumerate(K):
                m.add_constraint(var_name("sos", jj, kk), {Z[j, k, p]: 1.0 for p in P}, "=", 1.0)
    for j, jj in enumerate(J):
        for k, kk in enumerate(K):
            row = {R[j, k]: 1.0}
            row.update({Z[j, k, p]: -weight[p] for p in P})
            m.add_constraint(var_name("bexp", jj, kk), row, "=", 0.0)
    for i in range(nI):
        for j in range(nJ):
            for k in range(nK):
                row = {Fhat[i, j, k]: 1.0}
                row.update({V[i, j, k, p]: -weight[p] for p in P})
                m.add_constraint(var_name("fexp", I[i], J[j], K[k]), row, "=", 0.0)
    for i in range(nI):
        for j in range(nJ):
            g = inst.gamma[j]
            for k in range(nK):
                for p in P:
                    key = (I[i], J[j], K[k], p)
                    v, z = V[i, j, k, p], Z[j, k, p]
                    m.add_constraint(var_name("mc1", *key), {v: 1.0, z: -g}, "<=", 0.0)
                    m.add_constraint(var_name("mc2", *key), {v: 1.0, F[i, j]: -1.0}, "<=", 0.0)
                    m.add_constraint(var_name("mc3", *key), {v: 1.0, F[i, j]: -1.0, z: -g}, ">=", -g)
    for j in range(nJ):
        g = inst.gamma[j]
        for k in range(nK):
            for p in P:
                vbar = {V[i, j, k, p]: 1.0 for i in range(nI)}
                z = Z[j, k, p]
                m.add_constraint(var_name("amc1", J[j], K[k], p), {**vbar, z: -g}, "<=", 0.0)
                row = dict(vbar)
                row.update({F[i, j]: -1.0 for i in range(nI)})
                row[z] = -g
                m.add_constraint(var_name("amc3", J[j], K[k], p), row, ">=", -g)

    # tightening families, one set per (j, k)
    for j, jj in enumerate(J):
        g = inst.gamma[j]
        ftil = {F[i, j]: 1.0 for i in range(nI)}
        for k, kk in enumerate(K):
            u = inst.upsilon[j, k]
            if not spec.cuts or not _nontrivial(g, u, f"({jj},{kk})"):
                continue
            roles = {"y": {R[j, k]: 1.0}, "x": ftil, "w": {Fhat[i, j, k]: 1.0 for i in range(nI)}}
            if spec.formulation == "SB":
                params = _cuts.hull_params(g, u, spec.n)
            else:
                params = _cuts.sbn_hull_params(g, u, spec.psi)
            if "F" in spec.cuts:
                for t, cut in enumerate(_cuts.rounding_cuts(params), 1):
                    _add_role_cut(m, var_name("rcut", jj, kk, t), cut, roles)
            if "T" in spec.cuts:
                if spec.formulation == "SB":
                    bounds = _cuts.p_dependent_bounds(g, u, spec.n)
                else:
                    bounds = _cuts.psi_bounds(g, u, spec.psi)
                for p, coef in bounds:
                    row = {V[i, j, k, p]: 1.0 for i in range(nI)}
                    row[Z[j, k, p]] = -coef
                    m.add_constraint(var_name("pdep", jj, kk, p), row, "<=", 0.0, skip_duplicate=True)
            if "LTI" in spec.cuts:
                lti = (
                    _cuts.lti_cuts(g, u, spec.n)
                    if spec.formulation == "SB"
                    else _cuts.tangent_cuts(u, [v for v in _fractions(spec.psi) if v > 0])
                )
                for t, cut in enumerate(lti, 1):
                    _add_role_cut(m, var_name("lti", jj, kk, t), cut, roles)
            if "LTIS" in spec.cuts:
                if spec.formulation == "SB":
                    ltis = _cuts.lti_strengthened(g, u, spec.n)
                else:
                    pos = [v for v in _fractions(spec.psi) if v > 0]
                    ltis = _cuts.secant_cuts(u, list(zip(pos, pos[1:])))
                for t, cut in enumerate(ltis, 1):
                    _add_role_cut(m, var_name("ltis", jj, kk, t), cut, roles)
    return m


def build_sb(inst: PoolingInstance, spec: VariantSpec) -> MilpModel:
    if spec.formulation != "SB":
        raise ValueError("build_sb needs an SB variant")
    levels = [2.0 ** (1 - p) for p in range(1, spec.n + 1)]
    return _split_model(inst, spec, levels, f"{inst.name or 'pool'}_{spec.name}_n{spec.n}")


def build_sbn(inst: PoolingInstance, spec: VariantSpec) -> MilpModel:
    if spec.formulation != "SBN":
        raise ValueError("build_sbn needs an SBN variant")
    return _split_model(inst, spec, list(spec.psi), f"{inst.name or 'pool'}_{spec.name}_m{len(spec.psi)}")


def build_pq(inst: PoolingInstance, spec: VariantSpec) -> MilpModel:
    """Discretized pq-formulation: ``Fhat[i,j,k] = q[i,j] * Fbar[j,k]``."""
    if spec.formulation != "PQ":
        raise ValueError("build_pq needs a PQ variant")
    if inst.sigma is None:
        raise ValueError("the pq formulation needs stream-to-pool capacities (sigma)")
    _check(inst)
    I, J, K = inst.streams, inst.pools, inst.products
    nI, nJ, nK = len(I), len(J), len(K)
    P = list(range(1, spec.n + 1))
    m = MilpModel(name=f"{inst.name or 'pool'}_{spec.name}_n{spec.n}")
    F, Fhat = _flow_vars(m, inst)
    Fbar = {(j, k): m.add_var(var_name("Fbar", jj, kk), tag="Fbar[j,k]") for j, jj in enumerate(J) for k, kk in enumerate(K)}
    q = {(i, j): m.add_var(var_name("q", ii, jj), 0.0, 1.0, tag="q[i,j]") for i, ii in enumerate(I) for j, jj in enumerate(J)}
    Z = {
        (i, j, p): m.add_var(var_name("Zq", I[i], J[j], p), kind=BINARY, tag="Zq[i,j,p]")
        for i in range(nI) for j in range(nJ) for p in P
    }
    V = {
        (i, j, k, p): m.add_var(var_name("Vq", I[i], J[j], K[k], p), tag="Vq[i,j,k,p]")
        for i in range(nI) for j in range(nJ) for k in range(nK) for p in P
    }
    for j, jj in enumerate(J):
        m.add_constraint(var_name("cap", jj), {Fbar[j, k]: 1.0 for k in range(nK)}, "<=", inst.gamma[j])
    _common_rows(m, inst, F, Fhat)
    for j, jj in enumerate(J):
        m.add_constraint(var_name("simplex", jj), {q[i, j]: 1.0 for i in range(nI)}, "=", 1.0)
    for j, jj in enumerate(J):
        for k, kk in enumerate(K):
            m.add_constraint(var_name("pipe", jj, kk), {Fbar[j, k]: 1.0}, "<=", inst.upsilon[j, k])
    for i, ii in enumerate(I):
        for j, jj in enumerate(J):
            m.add_constraint(var_name("spipe", ii, jj), {Fhat[i, j, k]: 1.0 for k in range(nK)}, "<=", inst.sigma[i, j])
    for i, ii in enumerate(I):
        for j, jj in enumerate(J):
            row = {Fhat[i, j, k]: 1.0 for k in range(nK)}
            row[F[i, j]] = -1.0
            m.add_constraint(var_name("flow", ii, jj), row, "=", 0.0)
    for j, jj in enumerate(J):
        for k, kk in enumerate(K):
            row = {Fhat[i, j, k]: 1.0 for i in range(nI)}
            row[Fbar[j, k]] = -1.0
            m.add_constraint(var_name("rlt1", jj, kk), row, "=", 0.0)
    for i, ii in enumerate(I):
        for j, jj in enumerate(J):
            row = {Fhat[i, j, k]: 1.0 for k in range(nK)}
            row[q[i, j]] = -inst.gamma[j]
            m.add_constraint(var_name("rlt2", ii, jj), row, "<=", 0.0)
    for i, ii in enumerate(I):
        for j, jj in enumerate(J):
            row = {q[i, j]: 1.0}
            row.update({Z[i, j, p]: -(2.0 ** (1 - p)) for p in P})
            m.add_constraint(var_name("bexp", ii, jj), row, "=", 0.0)
    for i in range(nI):
        for j in range(nJ):
            for k in range(nK):
                row = {Fhat[i, j, k]: 1.0}
                row.update({V[i, j, k, p]: -(2.0 ** (1 - p)) for p in P})
                m.add_constraint(var_name("fexp", I[i], J[j], K[k]), row, "=", 0.0)
    for i in range(nI):
        for j in range(nJ):
            for k in range(nK):
                U = min(inst.upsilon[j, k], inst.gamma[j])
                for p in P:
                    key = (I[i], J[j], K[k], p)
                    v, z = V[i, j, k, p], Z[i, j, p]
                    m.add_constraint(var_name("mc1", *key), {v: 1.0, z: -U}, "<=", 0.0)
                    m.add_constraint(var_name("mc2", *key), {v: 1.0, Fbar[j, k]: -1.0}, "<=", 0.0)
                    m.add_constraint(var_name("mc3", *key), {v: 1.0, Fbar[j, k]: -1.0, z: -U}, ">=", -U)
    for i in range(nI):
        for j in range(nJ):
            g = inst.gamma[j]
            for p in P:
                vbar = {V[i, j, k, p]: 1.0 for k in range(nK)}
                z = Z[i, j, p]
                m.add_constraint(var_name("amc1", I[i], J[j], p), {**vbar, z: -g}, "<=", 0.0)
                row = dict(vbar)
                row.update({Fbar[j, k]: -1.0 for k in range(nK)})
                row[z] = -g
                m.add_constraint(var_name("amc3", I[i], J[j], p), row, ">=", -g)

    for i, ii in enumerate(I):
        for j, jj in enumerate(J):
            g, s = inst.gamma[j], inst.sigma[i, j]
            if not spec.cuts or not _nontrivial(g, s, f"({ii},{jj})"):
                continue
            roles = {
                "y": {q[i, j]: 1.0},
                "x": {Fbar[j, k]: 1.0 for k in range(nK)},
                "w": {Fhat[i, j, k]: 1.0 for k in range(nK)},
            }
            if "F" in spec.cuts:
                for t, cut in enumerate(_cuts.rounding_cuts(_cuts.hull_params(g, s, spec.n)), 1):
                    _add_role_cut(m, var_name("rcut", ii, jj, t), cut, roles)
            if "T" in spec.cuts:
                for p, coef in _cuts.p_dependent_bounds(g, s, spec.n):
                    row = {V[i, j, k, p]: 1.0 for k in range(nK)}
                    row[Z[i, j, p]] = -coef
                    m.add_constraint(var_name("pdep", ii, jj, p), row, "<=", 0.0, skip_duplicate=True)
            if "LTI" in spec.cuts:
                for t, cut in enumerate(_cuts.lti_cuts(g, s, spec.n), 1):
                    _add_role_cut(m, var_name("lti", ii, jj, t), cut, roles)
            if "LTIS" in spec.cuts:
                for t, cut in enumerate(_cuts.lti_strengthened(g, s, spec.n), 1):
                    _add_role_cut(m, var_name("ltis", ii, jj, t), cut, roles)
    return m


def build(inst: PoolingInstance, spec: VariantSpec) -> MilpModel:
    return {"SB": build_sb, "PQ": build_pq, "SBN": build_sbn}[spec.formulation](inst, spec)
