from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from discpool.cuts import (
    TrivialBoundError,
    brute_force_hull,
    exact,
    hull_facets,
    hull_params,
    lti_cuts,
    lti_strengthened,
    p_dependent_bounds,
    psi_bounds,
    rounding_cuts,
    sbn_hull_params,
    secant_cuts,
    tangent_cuts,
)
from discpool.discretize import grid_values


def envelope(params, r):
    """Largest Ftilde allowed by the rounding cuts and the box at R = r."""
    top = params.gamma
    for c in rounding_cuts(params):
        top = min(top, (c.rhs - c.coef.get("y", 0.0) * r) / c.coef["x"])
    return top


triples = st.tuples(
    st.floats(1.0, 100.0), st.floats(0.001, 0.999), st.integers(1, 8)
).map(lambda t: (t[0], t[0] * t[1], t[2]))


# --- hull parameters ---------------------------------------------------------

def test_params_single_cut_example():
    p = hull_params(4, 2.2, 3)
    assert (p.mu_minus, p.mu_plus) == (0.5, 0.75)
    assert p.exact["delta"] == Fraction(-18, 5)
    assert p.delta == -3.6
    assert p.exact["epsilon"] == Fraction(-64, 15)
    assert not p.two_cuts


def test_params_two_cut_example():
    p = hull_params(4, 2.8, 3)
    assert p.exact["delta"] == Fraction(-12, 5)
    assert p.exact["epsilon"] == Fraction(-16, 15)
    assert p.two_cuts


def test_params_coarsest_grid_gives_equal_slopes():
    p = hull_params(4, 3.9, 1)
    assert (p.mu_minus, p.mu_plus) == (0.0, 1.0)
    assert p.exact["delta"] == p.exact["epsilon"] == Fraction(-1, 10)


def test_params_reject_trivial_bound():
    with pytest.raises(TrivialBoundError):
        hull_params(4, 4, 3)
    with pytest.raises(ValueError):
        hull_params(4, 0, 3)


def test_ratio_on_grid_point_sits_at_mu_minus():
    # 2/4 = 0.5 is a grid point for n = 2; floor keeps it as mu-
    p = hull_params(4, 2, 2)
    assert (p.mu_minus, p.mu_plus) == (0.5, 1.0)


def test_exact_reads_decimal_literals():
    assert exact(2.2) == Fraction(11, 5)
    assert exact(0.1) == Fraction(1, 10)


@given(triples)
def test_mu_bracket_ratio(t):
    g, u, n = t
    p = hull_params(g, u, n)
    e = p.exact
    step = Fraction(1, 2 ** (n - 1))
    assert e["mu_plus"] - e["mu_minus"] == step
    assert 0 <= e["mu_minus"] <= e["upsilon"] / e["gamma"] < e["mu_plus"] <= 1


# --- rounding cuts -----------------------------------------------------------

def test_single_cut_coefficients():
    (cut,) = rounding_cuts(hull_params(4, 2.2, 3))
    assert cut.coef == {"y": 3.6, "x": 1.0}
    assert cut.rhs == pytest.approx(5.8, abs=1e-12)
    assert cut.text() == "3.6*R + Ftilde <= 5.8"


def test_two_cut_coefficients():
    c1, c2 = rounding_cuts(hull_params(4, 2.8, 3))
    # Ftilde <= -(16/15)(R - 0.5) + 4
    assert c1.coef["y"] == pytest.approx(16 / 15, abs=1e-12)
    assert c1.rhs == pytest.approx(4 + 8 / 15, abs=1e-12)
    # Ftilde <= -(56/15)(R - 1) + 2.8
    assert c2.coef["y"] == pytest.approx(56 / 15, abs=1e-12)
    assert c2.rhs == pytest.approx(2.8 + 56 / 15, abs=1e-12)


def test_equal_slopes_emit_one_cut():
    assert len(rounding_cuts(hull_params(4, 3.9, 1))) == 1


@given(triples)
def test_envelope_dominates_grid_and_touches_breakpoints(t):
    g, u, n = t
    p = hull_params(g, u, n)
    for r in grid_values(n):
        top = g if r == 0 else min(g, u / r)
        assert envelope(p, r) >= top - 1e-9 * (1 + g)
    touch = {p.mu_minus, 1.0} | ({p.mu_plus} if p.two_cuts else set())
    for r in touch:
        top = g if r == 0 else min(g, u / r)
        assert envelope(p, r) == pytest.approx(top, abs=1e-9 * (1 + g))


# --- hull description --------------------------------------------------------

def test_facets_vertices_single_cut_case():
    h = hull_facets(hull_params(4, 2.2, 3))
    assert h.vertex_set() == [(0.0, 0.0), (0.0, 4.0), (0.5, 4.0), (1.0, 0.0), (1.0, 2.2)]


def test_facets_vertices_two_cut_case():
    h = hull_facets(hull_params(4, 2.8, 3))
    assert len(h.vertices) == 6
    assert (0.75, pytest.approx(56 / 15, abs=1e-12)) in h.vertices


def test_facets_list_bounds_then_cuts():
    p = hull_params(4, 2.8, 3)
    h = hull_facets(p)
    assert [c.kind for c in h.facets] == ["bound"] * 4 + ["rounding"] * 2


def test_brute_force_matches_closed_form_on_example():
    assert brute_force_hull(4, 2.2, 3).vertex_set() == hull_facets(hull_params(4, 2.2, 3)).vertex_set()


def test_brute_force_drops_collinear_points():
    # grid n=3 puts (0.25, 4), (0.5, 4) on the top edge; only the last one is a vertex
    verts = brute_force_hull(4, 2.2, 3).vertex_set()
    assert (0.25, 4.0) not in verts
    assert (0.5, 0.0) not in verts


def test_brute_force_near_box_limit():
    g, n = 5.0, 4
    u = g * (1 - 1e-9)
    p = hull_params(g, u, n)
    assert p.mu_minus == 1 - 2.0 ** (1 - n)
    verts = brute_force_hull(g, u, n).vertex_set()
    assert verts == hull_facets(p).vertex_set()
    # the cut corner (mu-, gamma) -> (1, upsilon) is almost the box corner
    assert max(abs(a - b) for a, b in zip(verts[-1], (1.0, g))) < 1e-8


def test_brute_force_counterclockwise_from_origin():
    h = brute_force_hull(4, 2.8, 3)
    v = np.array(h.vertices)
    assert tuple(v[0]) == (0.0, 0.0)
    area2 = sum(v[i, 0] * v[(i + 1) % len(v), 1] - v[(i + 1) % len(v), 0] * v[i, 1] for i in range(len(v)))
    assert area2 > 0


@settings(max_examples=60, deadline=None)
@given(triples)
def test_closed_form_matches_qhull(t):
    g, u, n = t
    steps = 2 ** (n - 1)
    pts = []
    for k in range(steps + 1):
        r = k / steps
        pts += [(r, 0.0), (r, g if r == 0 else min(g, u / r))]
    pts = np.array(pts)
    hull = ConvexHull(pts)
    ref = pts[hull.vertices]
    got = hull_facets(hull_params(g, u, n)).vertex_set()
    tol = 1e-9 * (1 + g)
    # every qhull vertex is a closed-form vertex
    for a, b in ref:
        assert min(np.hypot(a - x, b - y) for x, y in got) < tol
    # every closed-form vertex lies on the qhull boundary (qhull may merge nearly collinear ones)
    for x, y in got:
        side = hull.equations[:, 0] * x + hull.equations[:, 1] * y + hull.equations[:, 2]
        assert side.max() == pytest.approx(0.0, abs=tol)


@given(triples)
def test_grid_endpoints_inside_facets(t):
    g, u, n = t
    h = hull_facets(hull_params(g, u, n))
    for r in grid_values(n):
        for x in (0.0, g if r == 0 else min(g, u / r)):
            assert all(c.violation(y=r, x=x) <= 1e-9 * (1 + g) for c in h.facets)


@given(triples)
def test_vertex_count_depends_on_branch(t):
    g, u, n = t
    p = hull_params(g, u, n)
    count = 5 + p.two_cuts - (p.mu_minus == 0)
    assert len(hull_facets(p).vertices) == count


# --- p-dependent bounds ------------------------------------------------------

@pytest.mark.parametrize(
    "upsilon, n, expected",
    [
        (2.2, 3, [(1, 2.2)]),
        (0.9, 5, [(1, 0.9), (2, 1.8), (3, 3.6)]),
        (2.0, 3, [(1, 2.0)]),
    ],
)
def test_p_dependent_examples(upsilon, n, expected):
    assert p_dependent_bounds(4, upsilon, n) == expected


@given(triples)
def test_p_dependent_coefficients_below_gamma(t):
    g, u, n = t
    bounds = p_dependent_bounds(g, u, n)
    assert all(c < g for _, c in bounds)
    assert [p for p, _ in bounds] == list(range(1, len(bounds) + 1))


@given(triples, st.data())
def test_p_dependent_valid_in_lifted_space(t, data):
    g, u, n = t
    k = data.draw(st.integers(0, 2 ** (n - 1)))
    r = k / 2 ** (n - 1)
    xmax = g if r == 0 else min(g, u / r)
    x = data.draw(st.floats(0, 1)) * xmax
    bits = [1 if r == 1 and p == 1 else 0 for p in range(1, n + 1)]
    if r < 1:
        # k * 2^(1-n) = sum_{p>=2} 2^(1-p) Z_p
        bits = [0] + [(k >> (n - p)) & 1 for p in range(2, n + 1)]
    for p, coef in p_dependent_bounds(g, u, n):
        assert x * bits[p - 1] <= coef * bits[p - 1] + 1e-9 * (1 + g)


# --- lifted tangents and secants ---------------------------------------------

def test_first_tangent_coefficients():
    cut = lti_cuts(4, 2.2, 3)[0]
    assert cut.coef == {"y": -2.2, "x": -1.0, "w": 2.0}
    assert cut.rhs == 0.0


@pytest.mark.parametrize("p", [1, 2, 3])
def test_tangent_is_tight_at_touch_point(p):
    u = 2.2
    rho = 2.0 ** (1 - p)
    cut = lti_cuts(4, u, 3)[p - 1]
    assert cut.lhs(y=rho, x=u / rho, w=u) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_secant_tight_at_both_ends(p):
    n, u = 4, 2.2
    a = 2.0 ** (1 - p)
    b = a + 2.0 ** (1 - n)
    cut = lti_strengthened(4, u, n)[p - 1]
    for r in (a, b):
        assert cut.lhs(y=r, x=u / r, w=u) == pytest.approx(0.0, abs=1e-12)


def test_secant_coefficient_magnitudes():
    n, u = 4, 2.2
    for p, cut in enumerate(lti_strengthened(4, u, n), 1):
        denom = 2.0 ** (2 - p) + 2.0 ** (1 - n)
        assert -cut.coef["y"] == pytest.approx(u / denom, rel=1e-14)
        assert -cut.coef["x"] == pytest.approx(2.0 ** (1 - p) * (2.0 ** (1 - p) + 2.0 ** (1 - n)) / denom, rel=1e-14)
        assert cut.coef["w"] == 1.0


def test_cut_counts():
    assert len(lti_cuts(4, 2.2, 5)) == 5
    assert len(lti_strengthened(4, 2.2, 5)) == 4
    with pytest.raises(ValueError):
        lti_strengthened(4, 2.2, 1)


def test_tangent_and_secant_reject_bad_points():
    with pytest.raises(ValueError):
        tangent_cuts(1.0, [0])
    with pytest.raises(ValueError):
        secant_cuts(1.0, [(0.5, 0.25)])


# --- value-list variant ------------------------------------------------------

def test_sbn_params_on_eighth_grid():
    p = sbn_hull_params(4, 2.2, grid_values(4))
    assert (p.mu_minus, p.mu_plus) == (0.5, 0.625)


def test_sbn_params_coarse_list():
    p = sbn_hull_params(4, 2.2, (0, 0.5, 1))
    assert (p.mu_minus, p.mu_plus) == (0.5, 1.0)
    assert p.exact["delta"] == p.exact["epsilon"]
    assert len(rounding_cuts(p)) == 1


def test_psi_bounds_keep_values_above_ratio():
    assert psi_bounds(4, 2.2, (0, 0.5, 1)) == [(2, 2.2)]


def test_sbn_params_match_binary_grid():
    for g, u, n in [(4, 2.2, 3), (4, 2.8, 3), (7, 1.3, 5)]:
        a, b = hull_params(g, u, n), sbn_hull_params(g, u, grid_values(n))
        assert a.exact["delta"] == b.exact["delta"] and a.exact["epsilon"] == b.exact["epsilon"]
