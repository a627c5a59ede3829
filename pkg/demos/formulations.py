"""
Three discretizations side by side
==================================

SB discretizes the fraction of pool output sent to each product, PQ the
share of each stream in a pool, and SBN lets the allowed split values come
from any list.  This script compares their optima and sizes.
"""
# %%
from discpool import VariantSpec, build, enumerate_milp, generate_instance, grid_values

# %%
inst = generate_instance((2, 1, 2, 1), seed=3)
print(inst.name)

# %% [markdown]
# Finer grids can only help: the n = 3 grid contains the n = 2 grid.

# %%
for n in (1, 2, 3, 4):
    print(f"SB n={n}  optimum {enumerate_milp(build(inst, VariantSpec('SB', n))).objective:10.4f}")

# %% [markdown]
# With the value list equal to the binary grid, SBN matches SB.  A list the
# binary grid cannot express can do better or worse.

# %%
sb4 = enumerate_milp(build(inst, VariantSpec("SB", 4))).objective
sbn = enumerate_milp(build(inst, VariantSpec("SBN", psi=grid_values(4)))).objective
odd = enumerate_milp(build(inst, VariantSpec("SBN", psi=(0, 0.3, 0.7, 1)))).objective
print(f"SB n=4 {sb4:.6f}   SBN same grid {sbn:.6f}   SBN (0, .3, .7, 1) {odd:.6f}")

# %% [markdown]
# PQ discretizes a different quantity, so its optimum differs in general.

# %%
for n in (1, 2, 3):
    m = build(inst, VariantSpec("PQ", n))
    sol = enumerate_milp(m)
    print(f"PQ n={n}  binaries {len(m.binaries):2d}  optimum {sol.objective:10.4f}")
