import itertools
import warnings

import numpy as np
import pytest
from scipy.optimize import linprog

from discpool.discretize import (
    VariantSpec,
    build,
    build_pq,
    build_sb,
    build_sbn,
    grid_values,
    parse_cuts,
    parse_variant,
    var_name,
)
from discpool.instance import PoolingInstance, generate_instance
from discpool.milp import lp_relaxation
from discpool.solve import enumerate_milp, simplex_solve

from conftest import TINY, one_pool_two_products

ALL_FLAGS = ["none", "f", "t", "ft", "lti", "ltis", "ft+lti+ltis"]


def row_counts(m):
    counts = {}
    for row in m.constraints:
        fam = row.name.split("(")[0]
        counts[fam] = counts.get(fam, 0) + 1
    return counts


def fork_instance(upsilon=(3.0, 4.5), beta=(3.0, 2.5), psi=(1.5, 0.5), gamma=10.0):
    """1 stream -> 1 pool -> 2 products."""
    return PoolingInstance(
        streams=["i1"], pools=["j1"], products=["k1", "k2"], properties=["l1"],
        alpha=[1.0], beta=list(beta), gamma=[gamma], upsilon=[list(upsilon)],
        pi=[[1.0]], psi=[[psi[0]], [psi[1]]], omega=[20.0, 2.0], sigma=[[8.0]],
    )


def hand_enumeration(inst, n):
    """Best profit over all 2^(2n) bit patterns, each solved in closed form."""
    a, g = inst.alpha[0], inst.gamma[0]
    best = -np.inf
    w = [2.0 ** (1 - p) for p in range(1, n + 1)]
    for bits in itertools.product((0, 1), repeat=2 * n):
        R = [sum(wp * b for wp, b in zip(w, bits[:n])), sum(wp * b for wp, b in zip(w, bits[n:]))]
        if abs(sum(R) - 1.0) > 1e-12:
            continue
        # F * R_k must respect pipeline, demand and specification of product k
        cap = g
        for k in range(2):
            if R[k] == 0:
                continue
            if inst.pi[0, 0] > inst.psi[k, 0]:
                cap = 0.0
            cap = min(cap, inst.upsilon[0, k] / R[k], inst.omega[k] / R[k])
        margin = sum(inst.beta[k] * R[k] for k in range(2)) - a
        best = max(best, margin * cap if margin > 0 else 0.0)
    return best


def single_stream_nlp(inst):
    """With one stream the pooled quality is fixed, so the bilinear model is an LP."""
    nJ, nK = len(inst.pools), len(inst.products)
    c = -(np.tile(inst.beta, nJ) - inst.alpha[0])  # variables Fhat[j,k], F_j = sum_k Fhat
    A, b = [], []
    for j in range(nJ):
        row = np.zeros(nJ * nK)
        row[j * nK:(j + 1) * nK] = 1
        A.append(row)
        b.append(min(inst.gamma[j], inst.sigma[0, j]) if inst.sigma is not None else inst.gamma[j])
    for k in range(nK):
        row = np.zeros(nJ * nK)
        row[k::nK] = 1
        A.append(row)
        b.append(inst.omega[k])
        for l in range(len(inst.properties)):
            A.append(row * (inst.pi[0, l] - inst.psi[k, l]))
            b.append(0.0)
    bounds = [(0, inst.upsilon[j, k]) for j in range(nJ) for k in range(nK)]
    res = linprog(c, A_ub=np.array(A), b_ub=b, bounds=bounds, method="highs")
    return -res.fun


# --- grids and variant specs -------------------------------------------------

def test_grid_examples():
    assert grid_values(1).values == (0.0, 1.0)
    assert grid_values(3).values == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert len(grid_values(5)) == 17
    with pytest.raises(ValueError):
        grid_values(0)


def test_variant_names_and_validation():
    assert VariantSpec("SB", 4, cuts=parse_cuts("ft")).name == "SB_FT"
    assert parse_variant("pq_t", 3).label == "PQ_T(n=3)"
    assert parse_variant("sbn_ft", psi=(0, 0.5, 1)).label == "SBN_FT(m=3)"
    assert parse_cuts("ft+lti") == frozenset({"F", "T", "LTI"})
    assert parse_cuts("none") == frozenset()
    with pytest.raises(ValueError):
        parse_cuts("q")
    with pytest.raises(ValueError):
        VariantSpec("SB", 0)
    with pytest.raises(ValueError):
        VariantSpec("SBN", psi=(0.2, 1.0))
    with pytest.raises(ValueError):
        VariantSpec("SBN", psi=(0, 0.5, 0.5, 1))
    with pytest.raises(ValueError):
        VariantSpec("SB", 1, cuts={"LTIS"})
    with pytest.raises(ValueError):
        VariantSpec("XX", 2)


def test_sbn_defaults_to_binary_grid():
    assert VariantSpec("SBN", 3).psi == grid_values(3).values


def test_builders_check_formulation():
    inst = generate_instance(TINY, 1)
    with pytest.raises(ValueError):
        build_sb(inst, VariantSpec("PQ", 2))
    with pytest.raises(ValueError):
        build_pq(inst, VariantSpec("SB", 2))
    with pytest.raises(ValueError):
        build_sbn(inst, VariantSpec("SB", 2))
    with pytest.raises(ValueError, match="sigma"):
        build_pq(inst.replace(sigma=None), VariantSpec("PQ", 2))


def test_builders_reject_invalid_instance():
    inst = generate_instance(TINY, 1)
    bad = inst.replace(omega=[-1.0, 5.0])
    with pytest.raises(ValueError):
        build(bad, VariantSpec("SB", 2))


# --- SB structure ------------------------------------------------------------

def test_sb_binary_count():
    m = build_sb(generate_instance((2, 2, 2, 1), 1), VariantSpec("SB", 3))
    assert len(m.binaries) == 12


def test_sb_composition():
    nI, nJ, nK, nL, n = 3, 2, 2, 1, 3
    m = build_sb(generate_instance((nI, nJ, nK, nL), 2), VariantSpec("SB", n))
    assert row_counts(m) == {
        "cap": nJ, "dem": nK, "spec": nK * nL, "simplex": nJ, "pipe": nJ * nK,
        "rlt1": nI * nJ, "rlt2": nJ * nK, "bexp": nJ * nK, "fexp": nI * nJ * nK,
        "mc1": nI * nJ * nK * n, "mc2": nI * nJ * nK * n, "mc3": nI * nJ * nK * n,
        "amc1": nJ * nK * n, "amc3": nJ * nK * n,
    }
    tags = {v.tag for v in m.variables.values()}
    assert tags == {"F[i,j]", "Fhat[i,j,k]", "R[j,k]", "Z[j,k,p]", "V[i,j,k,p]"}
    assert m.sense == "max"


def test_sb_binary_expansion_row():
    m = build_sb(generate_instance((1, 1, 1, 0), 2), VariantSpec("SB", 3))
    row = m.constraint("bexp(j1,k1)")
    assert row.coefs == {"R(j1,k1)": 1.0, "Z(j1,k1,1)": -1.0, "Z(j1,k1,2)": -0.5, "Z(j1,k1,3)": -0.25}
    assert row.sense == "=" and row.rhs == 0.0


def test_cut_flags_add_rows_per_pair():
    inst = generate_instance((2, 2, 2, 1), 3)
    counts = row_counts(build(inst, VariantSpec("SB", 3, cuts=parse_cuts("ft+lti+ltis"))))
    assert counts["lti"] == 2 * 2 * 3
    assert counts["ltis"] == 2 * 2 * 2
    assert 4 <= counts["rcut"] <= 8
    assert counts["pdep"] >= 4


def test_trivial_pair_skips_cuts_with_warning():
    inst = fork_instance(upsilon=(10.0, 4.5))
    with pytest.warns(UserWarning, match="trivial bound"):
        m = build(inst, VariantSpec("SB", 2, cuts=parse_cuts("ft")))
    assert not any(r.name.endswith("(j1,k1,1)") and r.name.startswith("rcut") for r in m.constraints)
    assert m.has_constraint("rcut(j1,k2,1)")


def test_no_warning_without_cuts():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build(fork_instance(upsilon=(10.0, 4.5)), VariantSpec("SB", 2))


# --- oracle checks -----------------------------------------------------------

@pytest.mark.parametrize("upsilon, psi", [((3.0, 4.5), (1.5, 0.5)), ((3.0, 4.5), (1.5, 1.5)), ((2.2, 7.9), (1.5, 1.5))])
def test_sb_matches_hand_enumeration(upsilon, psi):
    inst = fork_instance(upsilon=upsilon, psi=psi)
    sol = enumerate_milp(build(inst, VariantSpec("SB", 2)))
    assert sol.objective == pytest.approx(hand_enumeration(inst, 2), abs=1e-6)


@pytest.mark.parametrize("seed", [1, 4])
def test_optimum_respects_split_simplex(seed):
    inst = generate_instance(TINY, seed)
    sol = enumerate_milp(build(inst, VariantSpec("SB", 2)))
    for j in inst.pools:
        total = sum(sol.values[var_name("R", j, k)] for k in inst.products)
        assert total == pytest.approx(1.0, abs=1e-9)


def test_pq_binary_count():
    m = build_pq(generate_instance((3, 2, 2, 1), 1), VariantSpec("PQ", 3))
    assert len(m.binaries) == 3 * 2 * 3


def test_pq_zero_demand():
    inst = generate_instance((2, 1, 2, 1), 8)
    inst = inst.replace(omega=[0.0, 0.0])
    assert enumerate_milp(build(inst, VariantSpec("PQ", 2))).objective == pytest.approx(0.0, abs=1e-9)
    assert enumerate_milp(build(inst, VariantSpec("SB", 2))).objective == pytest.approx(0.0, abs=1e-9)


def test_pq_equals_sb_when_optimum_on_grid():
    inst = one_pool_two_products()
    pq = enumerate_milp(build(inst, VariantSpec("PQ", 2))).objective
    sb = enumerate_milp(build(inst, VariantSpec("SB", 2))).objective
    assert pq == pytest.approx(sb, abs=1e-6) == pytest.approx(10.5)


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_single_stream_pq_is_exact(seed):
    inst = generate_instance((1, 2, 2, 1), seed)
    pq = enumerate_milp(build(inst, VariantSpec("PQ", 2)))
    assert pq.values["q(i1,j1)"] == 1.0 and pq.values["q(i1,j2)"] == 1.0
    # q = 1 removes the bilinearity, so PQ reaches the bilinear optimum and SB cannot beat it
    ref = single_stream_nlp(inst)
    assert pq.objective == pytest.approx(ref, abs=1e-6 * (1 + ref))
    sb = enumerate_milp(build(inst.replace(sigma=None), VariantSpec("SB", 2))).objective
    assert sb <= single_stream_nlp(inst.replace(sigma=None)) + 1e-6


def test_sbn_one_value_picked():
    inst = generate_instance((2, 1, 2, 1), 4)
    spec = VariantSpec("SBN", psi=(0, 0.25, 0.5, 1))
    sol = enumerate_milp(build(inst, spec))
    for k in inst.products:
        assert sum(sol.values[var_name("Zs", "j1", k, m)] for m in range(4)) == 1.0


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_sbn_all_or_nothing_equals_sb_n1(seed):
    inst = generate_instance(TINY, seed)
    a = enumerate_milp(build(inst, VariantSpec("SBN", psi=(0.0, 1.0)))).objective
    b = enumerate_milp(build(inst, VariantSpec("SB", 1))).objective
    assert a == pytest.approx(b, abs=1e-6 * (1 + abs(b)))


@pytest.mark.parametrize("seed", [2, 5])
def test_sbn_binary_grid_equals_sb(seed):
    inst = generate_instance((2, 1, 2, 1), seed)
    a = enumerate_milp(build(inst, VariantSpec("SBN", psi=grid_values(3)))).objective
    b = enumerate_milp(build(inst, VariantSpec("SB", 3))).objective
    assert a == pytest.approx(b, abs=1e-6 * (1 + abs(b)))


@pytest.mark.parametrize("form", ["SB", "PQ", "SBN"])
@pytest.mark.parametrize("seed", [3, 7])
def test_cuts_keep_optimum(form, seed):
    inst = generate_instance(TINY, seed)
    vals = [enumerate_milp(build(inst, VariantSpec(form, 2, cuts=parse_cuts(f)))).objective for f in ALL_FLAGS]
    assert max(vals) - min(vals) <= 1e-6 * (1 + abs(vals[0]))


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_finer_grid_never_worse(seed):
    inst = generate_instance((3, 1, 2, 1), seed)
    coarse = enumerate_milp(build(inst, VariantSpec("SB", 2))).objective
    fine = enumerate_milp(build(inst, VariantSpec("SB", 3))).objective
    assert fine >= coarse - 1e-9


@pytest.mark.parametrize("form", ["SB", "PQ", "SBN"])
@pytest.mark.parametrize("seed", range(1, 6))
def test_cuts_only_tighten_relaxation(form, seed):
    inst = generate_instance(TINY, seed)
    loose = simplex_solve(lp_relaxation(build(inst, VariantSpec(form, 3)))).objective
    tight = simplex_solve(lp_relaxation(build(inst, VariantSpec(form, 3, cuts=parse_cuts("ft"))))).objective
    assert tight <= loose + 1e-9 * (1 + abs(loose))
