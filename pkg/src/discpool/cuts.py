"""Tightening constraints for one discretized bilinear term with a bounded product.

Every function here works on the two-dimensional set

    {(y, x) : 0 <= x <= gamma, y in O, x * y <= upsilon}

where ``O`` is the discretization grid of ``y`` (dyadic ``{0, 2^(1-n), ..., 1}``
or an explicit value list) and ``0 < upsilon < gamma``.  Cuts are expressed
over three roles:

``y``
    the discretized fraction (split fraction ``R`` or proportion ``q``),
``x``
    the bounded flow multiplying it (aggregate pool inlet flow),
``w``
    the product ``x * y`` (aggregate outlet flow, bounded by ``upsilon``).

The p-dependent bounds live in the lifted space of aggregated linearization
variables ``vbar_p = x * Z_p`` and are returned as ``(p, coefficient)`` pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

__all__ = [
    "TrivialBoundError",
    "HullParams",
    "LinearCut",
    "HullDescription",
    "exact",
    "hull_params",
    "sbn_hull_params",
    "rounding_cuts",
    "hull_facets",
    "brute_force_hull",
    "p_dependent_bounds",
    "psi_bounds",
    "lti_cuts",
    "lti_strengthened",
    "tangent_cuts",
    "secant_cuts",
]


class TrivialBoundError(ValueError):
    """Raised when the product bound is not below the flow bound."""


def exact(value) -> Fraction:
    """Rational reading of a user-supplied number.

    Floats are read through their shortest decimal repr, so ``2.2`` becomes
    ``11/5`` rather than the nearest binary double.  This keeps the floor in
    ``mu_minus`` stable when ``upsilon / gamma`` lands on a grid point.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {value!r}")
    return Fraction(repr(value))


@dataclass(frozen=True)
class HullParams:
    gamma: float
    upsilon: float
    n: int | None
    mu_minus: float
    mu_plus: float
    delta: float
    epsilon: float
    grid: tuple[float, ...]
    # exact rationals behind the floats above
    exact: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def two_cuts(self) -> bool:
        """True when the ``delta < epsilon`` branch applies."""
        return self.exact["delta"] < self.exact["epsilon"]


@dataclass(frozen=True)
class LinearCut:
    """``sum(coef[role] * role) <= rhs`` over roles ``y``, ``x``, ``w``."""

    coef: dict
    rhs: float
    kind: str
    label: str = ""

    def lhs(self, y: float = 0.0, x: float = 0.0, w: float = 0.0) -> float:
        vals = {"y": y, "x": x, "w": w}
        return sum(c * vals[r] for r, c in self.coef.items())

    def violation(self, y: float = 0.0, x: float = 0.0, w: float = 0.0) -> float:
        return self.lhs(y, x, w) - self.rhs

    def text(self, names: dict | None = None) -> str:
        names = names or {"y": "R", "x": "Ftilde", "w": "Fbar"}
        parts = []
        for role in ("y", "x", "w"):
            c = self.coef.get(role, 0.0)
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            term = names[role] if mag == 1 else f"{mag:.10g}*{names[role]}"
            parts.append(f"{sign} {term}")
        body = " ".join(parts).lstrip("+ ") if parts else "0"
        return f"{body} <= {self.rhs:.10g}"


@dataclass(frozen=True)
class HullDescription:
    vertices: list
    facets: list

    def vertex_set(self, ndigits: int | None = None) -> list:
        pts = sorted(self.vertices)
        if ndigits is not None:
            pts = [(round(a, ndigits), round(b, ndigits)) for a, b in pts]
        return pts


def _check_bounds(gamma: Fraction, upsilon: Fraction) -> None:
    if gamma <= 0 or upsilon <= 0:
        raise ValueError("gamma and upsilon must be positive")
    if upsilon >= gamma:
        raise TrivialBoundError(
            f"trivial bound: upsilon={float(upsilon)} >= gamma={float(gamma)}"
        )


def _finish(g: Fraction, u: Fraction, n, mu_lo: Fraction, mu_hi: Fraction, grid) -> HullParams:
    delta = (g - u) / (mu_lo - 1)
    epsilon = (g - u / mu_hi) / (mu_lo - mu_hi)
    return HullParams(
        gamma=float(g),
        upsilon=float(u),
        n=n,
        mu_minus=float(mu_lo),
        mu_plus=float(mu_hi),
        delta=float(delta),
        epsilon=float(epsilon),
        grid=tuple(float(v) for v in grid),
        exact={
            "gamma": g,
            "upsilon": u,
            "mu_minus": mu_lo,
            "mu_plus": mu_hi,
            "delta": delta,
            "epsilon": epsilon,
            "grid": tuple(grid),
        },
    )


def hull_params(gamma, upsilon, n: int) -> HullParams:
    """Grid neighbours of ``upsilon / gamma`` and the two cut slopes.

    ``mu_minus`` is the largest grid value at which ``x`` can still reach
    ``gamma``; ``mu_plus`` is the next grid value.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    g, u = exact(gamma), exact(upsilon)
    _check_bounds(g, u)
    step = Fraction(1, 2 ** (n - 1))
    mu_lo = step * math.floor(u / (step * g))
    mu_hi = mu_lo + step
    grid = [step * k for k in range(2 ** (n - 1) + 1)]
    return _finish(g, u, n, mu_lo, mu_hi, grid)


def _psi_grid(psi: Sequence) -> list:
    vals = [exact(v) for v in psi]
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError("psi values must be strictly increasing")
    if not vals or vals[0] != 0 or vals[-1] != 1:
        raise ValueError("psi values must start at 0 and end at 1")
    return vals


def sbn_hull_params(gamma, upsilon, psi: Sequence) -> HullParams:
    """``hull_params`` for an explicit value list instead of a dyadic grid."""
    g, u = exact(gamma), exact(upsilon)
    _check_bounds(g, u)
    vals = _psi_grid(psi)
    ratio = u / g
    mu_lo = max(v for v in vals if v <= ratio)
    above = [v for v in vals if v > ratio]
    if not above:
        raise ValueError("no psi value exceeds upsilon/gamma")
    return _finish(g, u, None, mu_lo, min(above), vals)


def rounding_cuts(params: HullParams) -> list:
    """Facets of the convex hull beyond the variable bounds.

    One cut through ``(mu_minus, gamma)`` and ``(1, upsilon)`` when
    ``delta >= epsilon``; otherwise two cuts meeting at
    ``(mu_plus, upsilon / mu_plus)``.
    """
    e = params.exact
    g, u = e["gamma"], e["upsilon"]
    if not params.two_cuts:
        d = e["delta"]
        return [
            LinearCut({"y": float(-d), "x": 1.0}, float(u - d), "rounding", "through (mu-, gamma) and (1, upsilon)")
        ]
    eps, lo, hi = e["epsilon"], e["mu_minus"], e["mu_plus"]
    # hi < 1 here: hi == 1 forces delta == epsilon
    slope = (u / hi - u) / (hi - 1)
    return [
        LinearCut({"y": float(-eps), "x": 1.0}, float(g - eps * lo), "rounding", "through (mu-, gamma) and (mu+, upsilon/mu+)"),
        LinearCut({"y": float(-slope), "x": 1.0}, float(u - slope), "rounding", "through (mu+, upsilon/mu+) and (1, upsilon)"),
    ]


def _bound_facets(gamma: float) -> list:
    return [
        LinearCut({"y": -1.0}, 0.0, "bound", "R >= 0"),
        LinearCut({"y": 1.0}, 1.0, "bound", "R <= 1"),
        LinearCut({"x": -1.0}, 0.0, "bound", "Ftilde >= 0"),
        LinearCut({"x": 1.0}, gamma, "bound", "Ftilde <= gamma"),
    ]


def hull_facets(params: HullParams) -> HullDescription:
    """Closed-form hull: vertices in counterclockwise order from the origin."""
    e = params.exact
    g, u, lo, hi = e["gamma"], e["upsilon"], e["mu_minus"], e["mu_plus"]
    pts = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(1), u)]
    if params.two_cuts:
        pts.append((hi, u / hi))
    pts.append((lo, g))
    if lo != 0:
        pts.append((Fraction(0), g))
    verts = [(float(a), float(b)) for a, b in pts]
    return HullDescription(verts, _bound_facets(params.gamma) + rounding_cuts(params))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _monotone_chain(points: list) -> list:
    """Counterclockwise hull without collinear points (Andrew's algorithm)."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _edge_cut(p, q) -> LinearCut:
    # counterclockwise edge p -> q keeps the interior on the left
    a = float(q[1] - p[1])
    b = float(p[0] - q[0])
    c = float((q[1] - p[1]) * p[0] + (p[0] - q[0]) * p[1])
    scale = max(abs(a), abs(b))
    return LinearCut({"y": a / scale, "x": b / scale}, c / scale, "edge")


def brute_force_hull(gamma, upsilon, n: int, exact_arithmetic: bool | None = None) -> HullDescription:
    """Convex hull of the segment endpoints ``(r, 0)`` and ``(r, min(gamma, upsilon/r))``.

    Independent of the closed form: enumerates the whole grid and runs a
    monotone chain.  Uses rational arithmetic up to ``n = 12`` so collinear
    points are dropped exactly.
    """
    if n < 1 or n > 20:
        raise ValueError("brute force supports 1 <= n <= 20")
    if exact_arithmetic is None:
        exact_arithmetic = n <= 12
    g, u = exact(gamma), exact(upsilon)
    if not exact_arithmetic:
        g, u = float(g), float(u)
    steps = 2 ** (n - 1)
    pts = []
    for k in range(steps + 1):
        r = Fraction(k, steps) if exact_arithmetic else k / steps
        top = g if r == 0 else min(g, u / r)
        pts.append((r, 0 * g))
        pts.append((r, top))
    hull = _monotone_chain(pts)
    # rotate so the origin comes first, matching hull_facets
    start = hull.index(min(hull))
    hull = hull[start:] + hull[:start]
    facets = [_edge_cut(hull[i], hull[(i + 1) % len(hull)]) for i in range(len(hull))]
    return HullDescription([(float(a), float(b)) for a, b in hull], facets)


def p_dependent_bounds(gamma, upsilon, n: int) -> list:
    """``(p, 2^(p-1) * upsilon)`` for every ``p <= n`` with the bound below ``gamma``.

    Each pair tightens ``vbar_p <= gamma * Z_p`` to ``vbar_p <= coef * Z_p``.
    """
    g, u = exact(gamma), exact(upsilon)
    _check_bounds(g, u)
    # the float check guards inputs whose decimal reading sits a hair under gamma
    return [
        (p, float(2 ** (p - 1) * u)) for p in range(1, n + 1)
        if 2 ** (p - 1) * u < g and float(2 ** (p - 1) * u) < float(g)
    ]


def psi_bounds(gamma, upsilon, psi: Sequence) -> list:
    """Value-list analogue of ``p_dependent_bounds``: ``(m, upsilon / psi_m)`` for ``psi_m > upsilon/gamma``.

    ``m`` indexes ``psi`` from 0.
    """
    g, u = exact(gamma), exact(upsilon)
    _check_bounds(g, u)
    vals = _psi_grid(psi)
    return [(m, float(u / v)) for m, v in enumerate(vals) if v > u / g and float(u / v) < float(g)]


def tangent_cuts(upsilon, points: Sequence) -> list:
    """Lifted tangents to ``x * y = upsilon`` at ``y = rho`` for each ``rho > 0``.

    Valid form: ``2 w <= (upsilon / rho) y + rho x``.
    """
    u = exact(upsilon)
    cuts = []
    for rho in points:
        r = exact(rho)
        if r <= 0:
            raise ValueError("tangent points must be positive")
        cuts.append(
            LinearCut({"y": float(-u / r), "x": float(-r), "w": 2.0}, 0.0, "lti", f"tangent at R={float(r):g}")
        )
    return cuts


def secant_cuts(upsilon, pairs: Sequence) -> list:
    """Lifted secants of ``x * y = upsilon`` through ``y = a`` and ``y = b``.

    Valid whenever no grid value lies strictly between ``a`` and ``b``:
    ``w <= upsilon / (a + b) * y + a * b / (a + b) * x``.
    """
    u = exact(upsilon)
    cuts = []
    for a, b in pairs:
        a, b = exact(a), exact(b)
        if a <= 0 or b <= a:
            raise ValueError("secant points must satisfy 0 < a < b")
        s = a + b
        cuts.append(
            LinearCut(
                {"y": float(-u / s), "x": float(-a * b / s), "w": 1.0},
                0.0,
                "ltis",
                f"secant through R={float(a):g} and R={float(b):g}",
            )
        )
    return cuts


def lti_cuts(gamma, upsilon, n: int) -> list:
    """Tangent cuts at ``rho = 2^(1-p)`` for ``p = 1..n``."""
    _check_bounds(exact(gamma), exact(upsilon))
    return tangent_cuts(upsilon, [Fraction(1, 2 ** (p - 1)) for p in range(1, n + 1)])


def lti_strengthened(gamma, upsilon, n: int) -> list:
    """Secant cuts between ``2^(1-p)`` and ``2^(1-p) + 2^(1-n)`` for ``p = 1..n-1``."""
    if n < 2:
        raise ValueError("strengthened LTI needs n >= 2")
    _check_bounds(exact(gamma), exact(upsilon))
    step = Fraction(1, 2 ** (n - 1))
    pairs = [(Fraction(1, 2 ** (p - 1)), Fraction(1, 2 ** (p - 1)) + step) for p in range(1, n)]
    return secant_cuts(upsilon, pairs)
