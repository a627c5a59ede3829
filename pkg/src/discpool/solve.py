"""Desk-scale LP simplex, exhaustive MILP oracle and an external solver adapter."""
from __future__ import annotations

import math
import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from .milp import BINARY, MilpModel, write_mps

__all__ = [
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "LIMIT",
    "LpSolution",
    "MilpSolution",
    "SolverConfig",
    "TooManyBinariesError",
    "ExternalSolverError",
    "simplex_solve",
    "enumerate_milp",
    "external_solve",
    "parse_solution",
    "write_solution",
    "solve",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit"

FEAS_TOL = 1e-9
OPT_TOL = 1e-7
_PIVOT_TOL = 1e-9
_COST_TOL = 1e-11
_FEAS_CLEAN = 1e-10
_REFACTOR_EVERY = 50


@dataclass
class LpSolution:
    status: str
    objective: float | None = None
    values: dict = field(default_factory=dict)
    wall: float = 0.0


@dataclass
class MilpSolution(LpSolution):
    bound: float | None = None
    info: dict = field(default_factory=dict)


@dataclass
class SolverConfig:
    """How to solve a model.

    ``command`` is a template with ``{mps}`` and ``{sol}`` placeholders, e.g.
    ``"cbc {mps} solve solu {sol}"``; it is split with shell rules and run
    without a shell.
    """

    mode: str = "internal"
    command: str | None = None
    time_limit: float = 300.0
    feas_tol: float = FEAS_TOL
    opt_tol: float = OPT_TOL
    max_binaries: int = 20

    def __post_init__(self):
        if self.mode not in ("internal", "external"):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        if not self.time_limit > 0:
            raise ValueError("time limit must be positive")
        if self.mode == "external" and not self.command:
            raise ValueError("external mode needs a command template")


class TooManyBinariesError(ValueError):
    pass


class ExternalSolverError(RuntimeError):
    pass


# --- two-phase simplex --------------------------------------------------------

def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    nz = np.nonzero(col)[0]
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])
    T[:, c] = 0.0
    T[r, c] = 1.0


def _refactor(T: np.ndarray, T0: np.ndarray, basis: list) -> None:
    """Recompute the tableau from the original rows to shed round-off."""
    m = T.shape[0] - 1
    B = T0[:m, basis]
    T[:m] = np.linalg.solve(B, T0[:m])
    T[-1] = T0[-1] - T0[-1, basis] @ T[:m]
    T[:m, basis] = np.eye(m)
    T[-1, basis] = 0.0


def _run_bland(T: np.ndarray, T0: np.ndarray, basis: list, allowed: np.ndarray, max_iter: int) -> str:
    """Maximize the objective held in the last row of ``T`` (as reduced costs ``-c``).

    Entering column: smallest index with negative reduced cost.  Leaving row:
    minimum ratio, ties broken by smallest basic index.
    """
    m = T.shape[0] - 1
    cscale = 1.0 + float(np.abs(T0[-1, :-1]).max(initial=0.0))
    for it in range(max_iter):
        if it and it % _REFACTOR_EVERY == 0:
            _refactor(T, T0, basis)
        rhs = T[:m, -1]
        rhs[(rhs < 0.0) & (rhs > -_FEAS_CLEAN)] = 0.0
        red = T[-1, :-1]
        cand = np.nonzero((red < -_COST_TOL * cscale) & allowed)[0]
        if cand.size == 0:
            return OPTIMAL
        c = int(cand[0])
        col = T[:m, c]
        pos = np.nonzero(col > _PIVOT_TOL)[0]
        if pos.size == 0:
            return UNBOUNDED
        ratios = np.maximum(rhs[pos], 0.0) / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + 1e-12 * (1.0 + abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, r, c)
        basis[r] = c
    return LIMIT


def _standard_form(c, A, senses, b, lb, ub):
    """Map ``max c x, A x ~ b, lb <= x <= ub`` onto nonnegative variables.

    Returns the transformed data plus a recovery function for ``x``.
    """
    n = len(c)
    cols = []  # (orig index, sign, offset) per new column
    extra_rows = []
    offset = np.zeros(n)
    M = []
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if math.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if math.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif math.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    N = len(cols)
    S = np.zeros((n, N))
    for k, (j, s) in enumerate(cols):
        S[j, k] = s
    A2 = A @ S if A.size else np.zeros((A.shape[0], N))
    b2 = b - A @ offset if A.size else b.copy()
    c2 = c @ S
    rows = [A2[i] for i in range(A2.shape[0])]
    rsense = list(senses)
    rhs = list(b2)
    for k, width in extra_rows:
        e = np.zeros(N)
        e[k] = 1.0
        rows.append(e)
        rsense.append("<=")
        rhs.append(width)
    M = np.array(rows).reshape(len(rows), N)
    return c2, M, rsense, np.array(rhs, dtype=float), lambda y: offset + S @ y, float(c @ offset)


def _simplex_arrays(c, A, senses, b, lb, ub, max_iter=None):
    """Two-phase simplex for ``max c x``.  Returns ``(status, x, objective)``."""
    if np.any(np.asarray(lb) > np.asarray(ub)):
        return INFEASIBLE, None, None
    c2, M, rsense, rhs, recover, _ = _standard_form(c, A, senses, b, lb, ub)
    m, N = M.shape
    M = M.copy()
    for i in range(m):
        # orient rows so rhs >= 0, then equilibrate
        if rhs[i] < 0:
            M[i] *= -1
            rhs[i] = -rhs[i]
            rsense[i] = {"<=": ">=", ">=": "<=", "=": "="}[rsense[i]]
        big = np.abs(M[i]).max(initial=0.0)
        if big > 0:
            M[i] /= big
            rhs[i] /= big
    n_slack = sum(1 for s in rsense if s != "=")
    n_art = sum(1 for s in rsense if s != "<=")
    width = N + n_slack + n_art
    T0 = np.zeros((m + 1, width + 1))
    T0[:m, :N] = M
    T0[:m, -1] = rhs
    basis = [0] * m
    s_col, a_col = N, N + n_slack
    art_cols = []
    for i, s in enumerate(rsense):
        if s == "<=":
            T0[i, s_col] = 1.0
            basis[i] = s_col
            s_col += 1
        else:
            if s == ">=":
                T0[i, s_col] = -1.0
                s_col += 1
            T0[i, a_col] = 1.0
            basis[i] = a_col
            art_cols.append(a_col)
            a_col += 1
    if max_iter is None:
        max_iter = 50 * (m + width) + 1000
    allowed = np.ones(width, dtype=bool)
    T = T0.copy()
    scale = 1.0 + float(np.abs(rhs).max(initial=0.0))
    if art_cols:
        # phase 1: maximize -sum(artificials)
        T0[-1, art_cols] = 1.0
        T[-1] = T0[-1]
        for i in range(m):
            if basis[i] in art_cols:
                T[-1] -= T[i]
        status = _run_bland(T, T0, basis, allowed, max_iter)
        if status == LIMIT:
            return LIMIT, None, None
        if -T[-1, -1] > 1e-9 * scale:
            return INFEASIBLE, None, None
        art = set(art_cols)
        keep = []
        for i in range(m):
            if basis[i] in art:
                row = T[i, :N + n_slack]
                nz = np.nonzero(np.abs(row) > 1e-9)[0]
                if nz.size:
                    j = int(nz[np.argmax(np.abs(row[nz]))])
                    _pivot(T, i, j)
                    basis[i] = j
                    keep.append(i)
                # else: redundant row, dropped
            else:
                keep.append(i)
        T = np.vstack([T[keep], T[-1:]])
        T0 = np.vstack([T0[keep], T0[-1:]])
        basis = [basis[i] for i in keep]
        allowed[N + n_slack:] = False
        m = len(keep)
    # phase 2
    T0[-1, :] = 0.0
    T0[-1, :N] = -c2
    T[-1] = T0[-1] - T0[-1, basis] @ T[:m]
    status = _run_bland(T, T0, basis, allowed, max_iter)
    if status != OPTIMAL:
        return status, None, None
    _refactor(T, T0, basis)
    y = np.zeros(width)
    for i in range(m):
        y[basis[i]] = max(T[i, -1], 0.0)
    x = recover(y[:N])
    x = np.minimum(np.maximum(x, lb), ub)
    return OPTIMAL, x, float(c @ x)


def simplex_solve(m: MilpModel, max_iter: int | None = None) -> LpSolution:
    """Solve an LP (no binaries) with the two-phase Bland simplex."""
    if m.binaries:
        raise ValueError("simplex_solve needs a model without binary variables")
    t0 = time.perf_counter()
    names, c, A, senses, b, lb, ub = m.dense()
    sign = 1.0 if m.sense == "max" else -1.0
    status, x, _ = _simplex_arrays(sign * c, A, senses, b, lb, ub, max_iter)
    wall = time.perf_counter() - t0
    if status != OPTIMAL:
        return LpSolution(status, wall=wall)
    values = dict(zip(names, (float(v) for v in x)))
    return LpSolution(OPTIMAL, float(c @ x), values, wall)


# --- exhaustive MILP oracle --------------------------------------------------

def _presolve(A, senses, b, lb, ub, tol=1e-9):
    """Fix variables and turn singleton rows into bounds.

    Works on copies.  Returns ``(status, A, senses, b, lb, ub, free_mask, fixed_values)``
    where the returned arrays only cover columns in ``free_mask``.
    """
    A = A.copy()
    b = b.copy()
    lb = lb.copy()
    ub = ub.copy()
    senses = np.array(senses)
    n = A.shape[1]
    free = np.ones(n, dtype=bool)
    live = np.ones(A.shape[0], dtype=bool)
    xfix = np.zeros(n)
    changed = True
    while changed:
        changed = False
        # fix columns whose bounds collapsed
        for j in np.nonzero(free & (ub - lb <= tol * (1.0 + np.abs(lb))))[0]:
            if lb[j] > ub[j] + tol * (1.0 + abs(lb[j])):
                return INFEASIBLE, None
            val = lb[j]
            xfix[j] = val
            b -= A[:, j] * val
            A[:, j] = 0.0
            free[j] = False
            changed = True
        nnz = np.count_nonzero(A[live], axis=1)
        rows = np.nonzero(live)[0]
        for i, k in zip(rows, nnz):
            rtol = tol * (1.0 + abs(b[i]))
            if k == 0:
                s = senses[i]
                if (s == "<=" and b[i] < -rtol) or (s == ">=" and b[i] > rtol) or (s == "=" and abs(b[i]) > rtol):
                    return INFEASIBLE, None
                live[i] = False
                changed = True
            elif k == 1:
                j = int(np.nonzero(A[i])[0][0])
                a = A[i, j]
                val = b[i] / a
                s = senses[i]
                if s == "=":
                    lo, hi = val, val
                elif (s == "<=") == (a > 0):
                    lo, hi = -math.inf, val
                else:
                    lo, hi = val, math.inf
                if lo > lb[j]:
                    lb[j] = lo
                if hi < ub[j]:
                    ub[j] = hi
                if lb[j] > ub[j]:
                    if lb[j] - ub[j] > tol * (1.0 + abs(lb[j])):
                        return INFEASIBLE, None
                    ub[j] = lb[j] = 0.5 * (lb[j] + ub[j])
                live[i] = False
                changed = True
    return OPTIMAL, (A[live][:, free], list(senses[live]), b[live], lb[free], ub[free], free, xfix)


def _fixed_lp(names, c, A, senses, b, lb, ub, bin_idx, assignment):
    lb = lb.copy()
    ub = ub.copy()
    lb[bin_idx] = assignment
    ub[bin_idx] = assignment
    status, red = _presolve(A, senses, b, lb, ub)
    if status != OPTIMAL:
        return INFEASIBLE, None
    Ar, sr, br, lbr, ubr, free, xfix = red
    x = xfix.copy()
    if free.any():
        st, xr, _ = _simplex_arrays(c[free], Ar, sr, br, lbr, ubr)
        if st != OPTIMAL:
            return st, None
        x[free] = xr
    return OPTIMAL, x


def _screened_assignments(A, senses, b, lb, ub, bin_idx, chunk=1 << 14, tol=1e-9):
    """Yield binary vectors in lexicographic order, skipping those that break a
    row even with the continuous part at its most favourable bound."""
    nb = len(bin_idx)
    if nb == 0:
        yield np.zeros(0)
        return
    cont = np.ones(A.shape[1], dtype=bool)
    cont[bin_idx] = False
    Ac = A[:, cont]
    lo_c, hi_c = lb[cont], ub[cont]
    pos, neg = np.clip(Ac, 0, None), np.clip(Ac, None, 0)
    with np.errstate(invalid="ignore"):
        # 0 * inf terms are nan; those coefficients are zero so drop them
        act_lo = np.nansum(pos * lo_c, axis=1) + np.nansum(neg * hi_c, axis=1)
        act_hi = np.nansum(pos * hi_c, axis=1) + np.nansum(neg * lo_c, axis=1)
    senses = np.asarray(senses)
    le = senses != ">="
    ge = senses != "<="
    Ab = A[:, bin_idx]
    slack = tol * (1.0 + np.abs(b))
    shifts = np.arange(nb - 1, -1, -1, dtype=np.int64)
    total = 1 << nb
    for start in range(0, total, chunk):
        ks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        Z = ((ks[:, None] >> shifts) & 1).astype(float)
        act = Z @ Ab.T
        ok = np.ones(len(ks), dtype=bool)
        if le.any():
            ok &= np.all(act[:, le] + act_lo[le] <= b[le] + slack[le], axis=1)
        if ge.any():
            ok &= np.all(act[:, ge] + act_hi[ge] >= b[ge] - slack[ge], axis=1)
        for z in Z[ok]:
            yield z


def enumerate_milp(m: MilpModel, max_binaries: int = 20, time_limit: float | None = None) -> MilpSolution:
    """Exact MILP optimum by trying every binary assignment.

    Assignments are visited in lexicographic order (first binary most
    significant, 0 before 1); an incumbent is only replaced by a strictly
    better objective, so ties go to the lexicographically smallest vector.
    """
    bins = m.binaries
    if len(bins) > max_binaries:
        raise TooManyBinariesError(f"{len(bins)} binaries exceed the limit of {max_binaries}")
    t0 = time.perf_counter()
    names, c, A, senses, b, lb, ub = m.dense()
    sign = 1.0 if m.sense == "max" else -1.0
    cmax = sign * c
    col = {v: k for k, v in enumerate(names)}
    bin_idx = np.array([col[v] for v in bins], dtype=int)
    best_x, best_val, best_z = None, -math.inf, None
    solved = 0
    status = OPTIMAL
    for z in _screened_assignments(A, senses, b, lb, ub, bin_idx):
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            status = LIMIT
            break
        st, x = _fixed_lp(names, cmax, A, senses, b, lb, ub, bin_idx, z)
        solved += 1
        if st == UNBOUNDED:
            return MilpSolution(UNBOUNDED, wall=time.perf_counter() - t0, info={"lp_solves": solved})
        if st != OPTIMAL:
            continue
        val = float(cmax @ x)
        if best_x is None or val > best_val + 1e-9 * (1.0 + abs(best_val)):
            best_x, best_val, best_z = x, val, z
    wall = time.perf_counter() - t0
    info = {"lp_solves": solved, "assignment": None if best_z is None else tuple(int(v) for v in best_z)}
    if best_x is None:
        return MilpSolution(status if status == LIMIT else INFEASIBLE, wall=wall, info=info)
    values = dict(zip(names, (float(v) for v in best_x)))
    for v in bins:
        values[v] = float(round(values[v]))
    obj = float(c @ best_x)
    return MilpSolution(status, obj, values, wall, bound=obj if status == OPTIMAL else None, info=info)


# --- external solver ----------------------------------------------------------

_STATUS_WORDS = {OPTIMAL, INFEASIBLE, LIMIT, UNBOUNDED}


def parse_solution(text: str, m: MilpModel | None = None) -> MilpSolution:
    """Parse ``[status]`` / ``=obj= value`` / ``name value`` lines.

    Variables missing from the file are taken as 0.  With ``m`` given, names
    must belong to the model.
    """
    status = None
    objective = None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0].lower()
        if len(toks) == 1 and head in _STATUS_WORDS:
            if status is not None or values or objective is not None:
                raise ValueError(f"line {lineno}: status must come first")
            status = head
            continue
        if len(toks) != 2:
            raise ValueError(f"line {lineno}: expected 'name value', got {raw!r}")
        try:
            x = float(toks[1])
        except ValueError:
            raise ValueError(f"line {lineno}: bad number {toks[1]!r}") from None
        if toks[0] == "=obj=":
            objective = x
        else:
            if m is not None and toks[0] not in m.variables:
                raise ValueError(f"line {lineno}: unknown variable {toks[0]!r}")
            values[toks[0]] = x
    if status is None:
        status = OPTIMAL if objective is not None else INFEASIBLE
    if m is not None and status in (OPTIMAL, LIMIT) and (objective is not None or values):
        values = {v: values.get(v, 0.0) for v in m.variables}
        if objective is None:
            objective = m.objective_value(values)
    bound = objective if status == OPTIMAL else None
    return MilpSolution(status, objective, values, bound=bound)


def write_solution(sol: MilpSolution) -> str:
    """Inverse of :func:`parse_solution`."""
    lines = [sol.status]
    if sol.objective is not None:
        lines.append(f"=obj= {sol.objective!r}")
    lines += [f"{name} {float(v)!r}" for name, v in sol.values.items()]
    return "\n".join(lines) + "\n"


def external_solve(m: MilpModel, cfg: SolverConfig) -> MilpSolution:
    if cfg.mode != "external" or not cfg.command:
        raise ValueError("external_solve needs an external SolverConfig")
    with tempfile.TemporaryDirectory(prefix="discpool-") as tmp:
        mps_path = os.path.join(tmp, "model.mps")
        sol_path = os.path.join(tmp, "model.sol")
        with open(mps_path, "w", encoding="utf-8") as fh:
            fh.write(write_mps(m))
        argv = [tok.format(mps=mps_path, sol=sol_path) for tok in shlex.split(cfg.command)]
        t0 = time.perf_counter()
        timed_out = False
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=cfg.time_limit)
        except FileNotFoundError:
            raise ExternalSolverError(f"solver command not found: {argv[0]!r}") from None
        except subprocess.TimeoutExpired:
            timed_out = True
            proc = None
        wall = time.perf_counter() - t0
        if proc is not None and proc.returncode != 0:
            raise ExternalSolverError(
                f"solver command {argv[0]!r} exited with status {proc.returncode}: {proc.stderr.strip()[:200]}"
            )
        text = None
        if os.path.exists(sol_path):
            with open(sol_path, encoding="utf-8") as fh:
                text = fh.read()
    if timed_out:
        sol = MilpSolution(LIMIT, wall=wall)
        # partial solutions only with an explicit status line
        if text:
            try:
                parsed = parse_solution(text, m)
            except ValueError:
                parsed = None
            if parsed is not None and text.split("#", 1)[0].strip().split()[0].lower() in _STATUS_WORDS:
                sol = parsed
                sol.status = LIMIT
                sol.bound = None
                sol.wall = wall
        return sol
    if text is None:
        raise ExternalSolverError(f"solver command {argv[0]!r} wrote no solution file")
    try:
        sol = parse_solution(text, m)
    except ValueError as exc:
        raise ExternalSolverError(f"unparsable solution from {argv[0]!r}: {exc}") from None
    sol.wall = wall
    return sol


def solve(m: MilpModel, cfg: SolverConfig | None = None) -> MilpSolution:
    """Dispatch on ``cfg.mode``; the internal route is :func:`enumerate_milp`."""
    cfg = cfg or SolverConfig()
    if cfg.mode == "external":
        return external_solve(m, cfg)
    return enumerate_milp(m, cfg.max_binaries, cfg.time_limit)
