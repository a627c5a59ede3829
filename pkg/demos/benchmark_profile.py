"""
A small benchmark with performance profiles and gaps
====================================================

Run a (instance x variant) matrix with the exact enumeration solver, drop
instances that are too easy or unsolved, build Dolan-More curves and write
the CSV / gnuplot files.
"""
# %%
import tempfile
from pathlib import Path

from discpool import bench
from discpool.discretize import parse_variant
from discpool.instance import generate_instance

# %%
instances = {f"s{seed}": generate_instance((3, 2, 2, 1), seed) for seed in range(1, 5)}
variants = [parse_variant(v, 2) for v in ("sb", "sb_f", "sb_ft", "pq_ft")]
records = bench.run_matrix(instances, variants, workers=2)
for r in records:
    print(f"{r.instance:4s} {r.variant:12s} {r.status:8s} {r.wall:7.3f}s  obj {r.objective:10.4f}")

# %% [markdown]
# Everything here solves in well under a second, so with the default
# thresholds every instance counts as easy.  A zero lower threshold keeps them.

# %%
print("default filter:", bench.filter_instances(records))
keep = bench.filter_instances(records, t_max=300, t_min=0)
print("t_min = 0     :", keep)

# %%
curves = bench.performance_profile(records, keep)
for c in curves:
    print(f"{c.variant:12s} fastest on {c.fraction_at(1.0):.2f}, within 2x on {c.fraction_at(2.0):.2f}")

# %% [markdown]
# Gaps against known NLP optima come from a side file.  Here a value 2%
# above the s1 optimum stands in for a reference.

# %%
nlp = {"s1": next(r.objective for r in records if r.instance == "s1") * 1.02}
print(bench.gap_report(records, nlp))

# %%
out = Path(tempfile.mkdtemp(prefix="discpool-bench-"))
for path in bench.emit_reports(records, curves, out, nlp):
    print("wrote", path)
