"""
Rounding cuts for a single pool-product pair
============================================

A split fraction R restricted to the grid {0, 2^(1-n), ..., 1} and a pool
inflow Ftilde with R * Ftilde <= upsilon and Ftilde <= gamma give a
nonconvex set.  Its convex hull has a closed form; this script prints it
next to a brute-force hull and then lists the other cut families.
"""
# %%
import numpy as np

from discpool import cuts

# %% [markdown]
# Single-cut case: gamma = 4, upsilon = 2.2, n = 3.  The ratio upsilon/gamma
# = 0.55 lies between grid points 0.5 and 0.75.

# %%
p = cuts.hull_params(4, 2.2, 3)
print("grid      ", p.grid)
print("mu-, mu+  ", p.mu_minus, p.mu_plus)
print("delta     ", p.exact["delta"], "epsilon", p.exact["epsilon"])
print("two cuts? ", p.two_cuts)
for c in cuts.rounding_cuts(p):
    print("  ", c.text())

# %%
closed = cuts.hull_facets(p).vertex_set()
brute = cuts.brute_force_hull(4, 2.2, 3).vertex_set()
print("closed form:", closed)
print("brute force:", brute)
print("same:", np.allclose(closed, brute, atol=1e-12))

# %% [markdown]
# Raising upsilon to 2.8 flips the slope comparison and two cuts appear.

# %%
q = cuts.hull_params(4, 2.8, 3)
print("delta", q.exact["delta"], "epsilon", q.exact["epsilon"], "two cuts:", q.two_cuts)
for c in cuts.rounding_cuts(q):
    print("  ", c.text())
print("vertices:", cuts.hull_facets(q).vertex_set())

# %% [markdown]
# The envelope the cuts draw over the grid: at each grid value r the largest
# Ftilde the cuts allow, against the true maximum min(gamma, upsilon / r).

# %%
def envelope(params, r):
    top = params.gamma
    for c in cuts.rounding_cuts(params):
        top = min(top, (c.rhs - c.coef.get("y", 0.0) * r) / c.coef["x"])
    return top


print(f"{'r':>6} {'true max':>9} {'cut max':>9}")
for r in q.grid:
    true = q.gamma if r == 0 else min(q.gamma, q.upsilon / r)
    print(f"{r:6.3f} {true:9.4f} {envelope(q, r):9.4f}")

# %% [markdown]
# Cuts used by the other variants: per-bit bounds on the aggregated products,
# tangents to R * Ftilde = upsilon and secants between neighbouring points.

# %%
print("p-dependent bounds:", cuts.p_dependent_bounds(4, 0.3, 4))
for c in cuts.lti_cuts(4, 2.2, 3):
    print("tangent ", c.text())
for c in cuts.lti_strengthened(4, 2.2, 3):
    print("secant  ", c.text())

# %% [markdown]
# Arbitrary value lists work the same way.

# %%
s = cuts.sbn_hull_params(4, 2.2, [0, 0.3, 0.6, 1])
print("list grid", s.grid, "mu-", s.mu_minus, "mu+", s.mu_plus)
for c in cuts.rounding_cuts(s):
    print("  ", c.text())
