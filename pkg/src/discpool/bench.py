"""Benchmark matrices, instance filtering, performance profiles and gaps."""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .discretize import VariantSpec, build
from .instance import PoolingInstance, load_instance
from .solve import OPTIMAL, SolverConfig, solve

__all__ = [
    "BenchRecord",
    "ProfileCurve",
    "IncompleteMatrixError",
    "load_instances",
    "run_matrix",
    "filter_instances",
    "performance_profile",
    "gap",
    "format_gap",
    "gap_report",
    "read_nlp_values",
    "records_csv",
    "read_records_csv",
    "profile_csv",
    "profile_dat",
    "emit_reports",
]

ERROR = "error"
RECORD_FIELDS = ("instance", "variant", "status", "wall", "build_seconds", "objective", "bound", "message")
_MIN_TIME = 1e-6  # floor for ratio denominators


@dataclass(frozen=True)
class BenchRecord:
    instance: str
    variant: str
    status: str
    wall: float
    objective: float | None = None
    bound: float | None = None
    build_seconds: float = 0.0
    message: str = ""

    def __post_init__(self):
        if not self.wall >= 0:
            raise ValueError("wall seconds must be nonnegative")

    @property
    def solved(self) -> bool:
        return self.status == OPTIMAL


@dataclass(frozen=True)
class ProfileCurve:
    variant: str
    points: tuple  # (tau, fraction) pairs, tau increasing

    def fraction_at(self, tau: float) -> float:
        frac = 0.0
        for t, f in self.points:
            if t <= tau:
                frac = f
        return frac


class IncompleteMatrixError(ValueError):
    pass


def load_instances(directory) -> list[PoolingInstance]:
    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise FileNotFoundError(f"no instance files (*.json) in {directory}")
    return [load_instance(p) for p in paths]


def _instance_ids(instances) -> list[tuple[str, PoolingInstance]]:
    if isinstance(instances, dict):
        pairs = list(instances.items())
    else:
        pairs = [(inst.name, inst) for inst in instances]
    ids = [k for k, _ in pairs]
    if any(not k for k in ids):
        raise ValueError("every instance needs a nonempty id")
    if len(set(ids)) != len(ids):
        raise ValueError("instance ids must be unique")
    return pairs


def _cell(job) -> BenchRecord:
    iid, inst, spec, cfg = job
    t0 = time.perf_counter()
    try:
        model = build(inst, spec)
    except Exception as exc:  # recorded, never fatal for the matrix
        return BenchRecord(iid, spec.label, ERROR, 0.0, build_seconds=time.perf_counter() - t0,
                           message=f"{type(exc).__name__}: {exc}")
    built = time.perf_counter() - t0
    t1 = time.perf_counter()
    try:
        sol = solve(model, cfg)
    except Exception as exc:
        return BenchRecord(iid, spec.label, ERROR, time.perf_counter() - t1, build_seconds=built,
                           message=f"{type(exc).__name__}: {exc}")
    wall = time.perf_counter() - t1
    if cfg.mode == "external" and sol.wall:
        wall = sol.wall
    return BenchRecord(iid, spec.label, sol.status, wall, sol.objective, sol.bound, built)


def run_matrix(instances, variants, cfg: SolverConfig | None = None, workers: int = 1) -> list[BenchRecord]:
    """Solve every (instance, variant) pair.

    ``instances`` is a mapping id -> instance or a sequence of named
    instances.  Failures become records with status ``"error"``.  The result
    is sorted by (instance, variant).
    """
    cfg = cfg or SolverConfig()
    variants = list(variants)
    labels = [v.label for v in variants]
    if len(set(labels)) != len(labels):
        raise ValueError("variant labels must be unique")
    jobs = [(iid, inst, spec, cfg) for iid, inst in _instance_ids(instances) for spec in variants]
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if workers == 1 or len(jobs) < 2:
        records = [_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_cell, jobs))
    return sorted(records, key=lambda r: (r.instance, r.variant))


def _matrix(records) -> dict:
    table: dict = {}
    for r in records:
        row = table.setdefault(r.instance, {})
        if r.variant in row:
            raise ValueError(f"duplicate record for ({r.instance}, {r.variant})")
        row[r.variant] = r
    variants = {r.variant for r in records}
    for iid, row in table.items():
        missing = variants - set(row)
        if missing:
            raise IncompleteMatrixError(f"instance {iid} has no record for {sorted(missing)}")
    return table


def filter_instances(records, t_max: float = 300.0, t_min: float = 5.0) -> list[str]:
    """Instances some variant solves within ``t_max`` and that are not easy for all.

    Easy means every variant solved within ``t_min``.
    """
    if t_min > t_max:
        raise ValueError("t_min must not exceed t_max")
    keep = []
    for iid, row in sorted(_matrix(records).items()):
        solved = [r for r in row.values() if r.solved and r.wall <= t_max]
        if not solved:
            continue
        if len(solved) < len(row) or max(r.wall for r in row.values()) > t_min:
            keep.append(iid)
    return keep


def performance_profile(records, instance_ids=None) -> list[ProfileCurve]:
    """Dolan-More curves over ``instance_ids`` (default: all instances).

    Unsolved runs get ratio +inf; ties for fastest all get ratio 1.
    """
    table = _matrix(records)
    ids = sorted(table) if instance_ids is None else list(instance_ids)
    if not ids:
        raise ValueError("performance profile needs at least one instance")
    unknown = [i for i in ids if i not in table]
    if unknown:
        raise ValueError(f"no records for instances {unknown}")
    variants = sorted({r.variant for r in records})
    ratios = {v: [] for v in variants}
    for iid in ids:
        row = table[iid]
        times = [max(r.wall, _MIN_TIME) for r in row.values() if r.solved]
        best = min(times) if times else None
        for v in variants:
            r = row[v]
            if best is None or not r.solved:
                ratios[v].append(math.inf)
            else:
                t = max(r.wall, _MIN_TIME)
                ratios[v].append(1.0 if t == best else t / best)
    taus = sorted({x for rs in ratios.values() for x in rs if math.isfinite(x)})
    n = len(ids)
    return [
        ProfileCurve(v, tuple((t, sum(1 for x in ratios[v] if x <= t) / n) for t in taus))
        for v in variants
    ]


def gap(milp_obj: float, nlp_best: float) -> float:
    """Relative optimality gap ``1 - milp / nlp_best``."""
    if not nlp_best > 0:
        raise ValueError("best possible NLP objective must be positive")
    return 1.0 - milp_obj / nlp_best


def format_gap(value: float) -> str:
    return "-" if value == 0 else f"{100.0 * value:.2f}%"


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def records_csv(records) -> str:
    rows = (
        (r.instance, r.variant, r.status, _num(r.wall), _num(r.build_seconds), _num(r.objective), _num(r.bound), r.message)
        for r in records
    )
    return _csv(RECORD_FIELDS, rows)


def read_records_csv(text: str) -> list[BenchRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames) != RECORD_FIELDS:
        raise ValueError(f"records CSV must have columns {','.join(RECORD_FIELDS)}")
    opt = lambda s: float(s) if s != "" else None  # noqa: E731
    return [
        BenchRecord(row["instance"], row["variant"], row["status"], float(row["wall"]), opt(row["objective"]),
                    opt(row["bound"]), float(row["build_seconds"] or 0.0), row["message"])
        for row in reader
    ]


def profile_csv(profiles) -> str:
    return _csv(("variant", "tau", "fraction"), ((c.variant, _num(t), _num(f)) for c in profiles for t, f in c.points))


def profile_dat(profiles) -> str:
    """One gnuplot data block per variant, selectable with ``index``."""
    blocks = []
    for c in profiles:
        lines = [f"# {c.variant}", "# tau fraction"]
        lines += [f"{t!r} {f!r}" for t, f in c.points]
        blocks.append("\n".join(lines) + "\n")
    return "\n\n".join(blocks)


def read_nlp_values(text: str) -> dict:
    """``instance,value`` CSV of best known / best possible NLP objectives."""
    reader = csv.reader(io.StringIO(text))
    out = {}
    for lineno, row in enumerate(reader, 1):
        if not row or row[0].startswith("#"):
            continue
        if lineno == 1 and row[0] == "instance":
            continue
        if len(row) != 2:
            raise ValueError(f"line {lineno}: expected 'instance,value'")
        try:
            out[row[0]] = float(row[1])
        except ValueError:
            raise ValueError(f"line {lineno}: bad number {row[1]!r}") from None
    return out


def gap_report(records, nlp_values: dict) -> str:
    rows = []
    for r in records:
        best = nlp_values.get(r.instance)
        if best is None or r.objective is None:
            shown = ""
        else:
            shown = format_gap(gap(r.objective, best))
        rows.append((r.instance, r.variant, _num(r.objective), _num(best), shown))
    return _csv(("instance", "variant", "milp_objective", "nlp_best", "gap"), rows)


def emit_reports(records, profiles, outdir, nlp_values: dict | None = None, dat: bool = True) -> list[Path]:
    """Write records.csv, profile.csv, optionally profile.dat and gaps.csv."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"records.csv": records_csv(records), "profile.csv": profile_csv(profiles)}
    if dat:
        files["profile.dat"] = profile_dat(profiles)
    if nlp_values is not None:
        files["gaps.csv"] = gap_report(records, nlp_values)
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text, encoding="utf-8", newline="")
        written.append(path)
    return written
