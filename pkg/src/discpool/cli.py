"""Command-line front end: ``discpool <verb> [options]``.

Exit status is 0 on success, 1 when the input is rejected (bad data, failed
check, solver failure) and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import bench as _bench
from . import cuts as _cuts
from .discretize import VariantSpec, build, grid_values, parse_cuts, parse_variant
from .instance import generate_instance, load_instance, validate_instance, write_instance
from .milp import read_mps, write_lp, write_mps
from .nlp import evaluate, lift_milp_solution
from .solve import SolverConfig, solve, write_solution


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _psi(text):
    if text is None:
        return None
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"psi must be comma-separated numbers, got {text!r}") from None


def _emit(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="")
        print(f"wrote {out}", file=sys.stderr)


def _variant_opts(p):
    p.add_argument("--formulation", default="sb", choices=["sb", "pq", "sbn"], type=str.lower)
    p.add_argument("--n", type=int, default=4, help="discretization level (grid 2^(1-n))")
    p.add_argument("--psi", type=_psi, help="SBN value list, e.g. 0,0.25,0.5,1")
    p.add_argument("--cuts", default="none", help="f|t|ft|lti|ltis|none, '+'-joinable")


def _variant(args) -> VariantSpec:
    psi = args.psi
    if args.formulation == "sbn" and psi is None:
        psi = grid_values(args.n)
    return VariantSpec(args.formulation.upper(), n=None if psi is not None else args.n, psi=psi,
                       cuts=parse_cuts(args.cuts))


def _cfg(args) -> SolverConfig:
    if args.solver_cmd:
        return SolverConfig("external", args.solver_cmd, args.time_limit)
    return SolverConfig(time_limit=args.time_limit, max_binaries=getattr(args, "max_binaries", 20))


def cmd_generate(args) -> int:
    inst = generate_instance((args.streams, args.pools, args.products, args.props), args.seed)
    if args.name:
        inst = inst.replace(name=args.name)
    _emit(write_instance(inst), args.out)
    return 0


def _load_checked(path):
    inst = load_instance(path)
    rep = validate_instance(inst)
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not rep.ok:
        raise ValueError("invalid instance: " + "; ".join(rep.errors))
    return inst


def cmd_build(args) -> int:
    inst = _load_checked(args.instance)
    model = build(inst, _variant(args))
    fmt = args.format or ("lp" if args.out and args.out.endswith(".lp") else "mps")
    _emit(write_lp(model) if fmt == "lp" else write_mps(model), args.out)
    print(f"{model.name}: {len(model.variables)} variables, {len(model.binaries)} binaries, "
          f"{len(model.constraints)} constraints", file=sys.stderr)
    return 0


def _cut_doc(c) -> dict:
    return {"coef": {r: c.coef[r] for r in sorted(c.coef)}, "rhs": c.rhs, "kind": c.kind, "text": c.text()}


def _cuts_doc(args, params) -> dict:
    e = params.exact
    doc = {
        "gamma": params.gamma,
        "upsilon": params.upsilon,
        "n": params.n,
        "psi": None if args.psi is None else list(args.psi),
        "mu_minus": params.mu_minus,
        "mu_plus": params.mu_plus,
        "delta": params.delta,
        "epsilon": params.epsilon,
        "exact": {k: str(e[k]) for k in ("mu_minus", "mu_plus", "delta", "epsilon")},
        "two_cuts": params.two_cuts,
        "rounding_cuts": [_cut_doc(c) for c in _cuts.rounding_cuts(params)],
    }
    if args.psi is None:
        hull = _cuts.hull_facets(params)
        doc["vertices"] = [list(v) for v in hull.vertices]
        doc["facets"] = [_cut_doc(c) for c in hull.facets]
        doc["p_dependent_bounds"] = [[p, c] for p, c in _cuts.p_dependent_bounds(args.gamma, args.upsilon, args.n)]
        doc["lti"] = [_cut_doc(c) for c in _cuts.lti_cuts(args.gamma, args.upsilon, args.n)]
        doc["ltis"] = [_cut_doc(c) for c in _cuts.lti_strengthened(args.gamma, args.upsilon, args.n)] if args.n >= 2 else []
    else:
        doc["psi_bounds"] = [[m, c] for m, c in _cuts.psi_bounds(args.gamma, args.upsilon, args.psi)]
    return doc


def cmd_cuts(args) -> int:
    if args.psi is not None:
        params = _cuts.sbn_hull_params(args.gamma, args.upsilon, args.psi)
    else:
        params = _cuts.hull_params(args.gamma, args.upsilon, args.n)
    e = params.exact
    if args.json:
        _emit(json.dumps(_cuts_doc(args, params), indent=2) + "\n", args.out)
        return 0
    out = [
        f"gamma {params.gamma:g}  upsilon {params.upsilon:g}",
        f"mu- {e['mu_minus']} ({params.mu_minus:.10g})  mu+ {e['mu_plus']} ({params.mu_plus:.10g})",
        f"delta {e['delta']} ({params.delta:.10g})  epsilon {e['epsilon']} ({params.epsilon:.10g})",
        f"branch: {'two cuts (delta < epsilon)' if params.two_cuts else 'one cut (delta >= epsilon)'}",
        "rounding cuts:",
    ]
    out += [f"  {c.text()}" for c in _cuts.rounding_cuts(params)]
    if args.psi is None:
        out.append("p-dependent bounds (Vbar_p <= c * Z_p):")
        out += [f"  p={p}: c={c:.10g}" for p, c in _cuts.p_dependent_bounds(args.gamma, args.upsilon, args.n)]
        out.append("lifted tangent inequalities:")
        out += [f"  {c.text()}" for c in _cuts.lti_cuts(args.gamma, args.upsilon, args.n)]
        if args.n >= 2:
            out.append("strengthened (secant) inequalities:")
            out += [f"  {c.text()}" for c in _cuts.lti_strengthened(args.gamma, args.upsilon, args.n)]
    else:
        out.append("value bounds (Vbar_m <= c * Z'_m):")
        out += [f"  m={m}: c={c:.10g}" for m, c in _cuts.psi_bounds(args.gamma, args.upsilon, args.psi)]
    _emit("\n".join(out) + "\n", args.out)
    return 0


def cmd_verify_hull(args) -> int:
    params = _cuts.hull_params(args.gamma, args.upsilon, args.n)
    closed = _cuts.hull_facets(params).vertex_set()
    oracle = _cuts.brute_force_hull(args.gamma, args.upsilon, args.n).vertex_set()
    fmt = lambda pts: " ".join(f"({a:.10g},{b:.10g})" for a, b in pts)  # noqa: E731
    same = len(closed) == len(oracle) and all(
        abs(a - c) <= 1e-9 and abs(b - d) <= 1e-9 for (a, b), (c, d) in zip(closed, oracle)
    )
    print(f"facets  {fmt(closed)}")
    print(f"oracle  {fmt(oracle)}")
    print("match" if same else "MISMATCH")
    return 0 if same else 1


def cmd_solve(args) -> int:
    cfg = _cfg(args)
    if args.model:
        model = read_mps(Path(args.model).read_text(encoding="utf-8"))
        inst = variant = None
    else:
        if not args.instance:
            raise UsageError("solve: give --instance or --model")
        inst = _load_checked(args.instance)
        variant = _variant(args)
        model = build(inst, variant)
    sol = solve(model, cfg)
    print(f"status {sol.status}", file=sys.stderr)
    if sol.objective is not None:
        print(f"objective {sol.objective:.10g}  wall {sol.wall:.3f}s", file=sys.stderr)
    if inst is not None and sol.values:
        report = evaluate(inst, lift_milp_solution(inst, variant, sol))
        print(report, file=sys.stderr)
    _emit(write_solution(sol), args.out)
    return 0


def _variant_list(text: str, n: int) -> list:
    specs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, level = item.partition(":")
        specs.append(parse_variant(name, int(level) if level else n))
    if not specs:
        raise ValueError("empty variant list")
    return specs


def _profile_outputs(records, t_max, t_min, outdir, nlp_path) -> int:
    keep = _bench.filter_instances(records, t_max, t_min)
    print(f"{len(keep)} of {len({r.instance for r in records})} instances pass the filter", file=sys.stderr)
    profiles = _bench.performance_profile(records, keep) if keep else []
    nlp = None
    if nlp_path:
        nlp = _bench.read_nlp_values(Path(nlp_path).read_text(encoding="utf-8"))
    for path in _bench.emit_reports(records, profiles, outdir, nlp):
        print(f"wrote {path}", file=sys.stderr)
    for c in profiles:
        print(f"{c.variant}: fraction fastest {c.fraction_at(1.0):.3f}")
    return 0


def cmd_bench(args) -> int:
    instances = _bench.load_instances(args.instances)
    records = _bench.run_matrix(instances, _variant_list(args.variants, args.n), _cfg(args), args.workers)
    return _profile_outputs(records, args.time_limit, args.filter_min, args.out, args.nlp_values)


def cmd_profile(args) -> int:
    records = _bench.read_records_csv(Path(args.records).read_text(encoding="utf-8"))
    return _profile_outputs(records, args.time_limit, args.filter_min, args.out, args.nlp_values)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="discpool", description="Discretized MILP models and cuts for the pooling problem.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a random instance as JSON")
    g.add_argument("--streams", type=int, required=True)
    g.add_argument("--pools", type=int, required=True)
    g.add_argument("--products", type=int, required=True)
    g.add_argument("--props", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--name")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("build", help="write a model variant as MPS or LP")
    b.add_argument("--instance", required=True)
    _variant_opts(b)
    b.add_argument("--format", choices=["mps", "lp"])
    b.add_argument("--out")
    b.set_defaults(func=cmd_build)

    c = sub.add_parser("cuts", help="print hull parameters and cuts for one (gamma, upsilon) pair")
    c.add_argument("--gamma", type=float, required=True)
    c.add_argument("--upsilon", type=float, required=True)
    c.add_argument("--n", type=int, default=4)
    c.add_argument("--psi", type=_psi)
    c.add_argument("--json", action="store_true", help="machine-readable output")
    c.add_argument("--out")
    c.set_defaults(func=cmd_cuts)

    v = sub.add_parser("verify-hull", help="compare closed-form hull vertices with a brute-force hull")
    v.add_argument("--gamma", type=float, required=True)
    v.add_argument("--upsilon", type=float, required=True)
    v.add_argument("--n", type=int, required=True)
    v.set_defaults(func=cmd_verify_hull)

    s = sub.add_parser("solve", help="solve a built variant or an MPS file")
    s.add_argument("--instance")
    s.add_argument("--model", help="MPS file instead of --instance")
    _variant_opts(s)
    s.add_argument("--time-limit", type=float, default=300.0)
    s.add_argument("--max-binaries", type=int, default=20)
    s.add_argument("--solver-cmd", help="external solver template with {mps} and {sol}")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("bench", help="run an instance x variant matrix and write reports")
    m.add_argument("--instances", required=True, help="directory of instance JSON files")
    m.add_argument("--variants", required=True, help="comma list such as sb,sb_ft,pq_ft:3")
    m.add_argument("--n", type=int, default=4, help="default level for variants without ':n'")
    m.add_argument("--time-limit", type=float, default=300.0)
    m.add_argument("--filter-min", type=float, default=5.0)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--max-binaries", type=int, default=20)
    m.add_argument("--solver-cmd")
    m.add_argument("--nlp-values", help="CSV instance,value of best possible NLP objectives")
    m.add_argument("--out", default="bench-out")
    m.set_defaults(func=cmd_bench)

    f = sub.add_parser("profile", help="filter and profile an existing records CSV")
    f.add_argument("--records", required=True)
    f.add_argument("--time-limit", type=float, default=300.0)
    f.add_argument("--filter-min", type=float, default=5.0)
    f.add_argument("--nlp-values")
    f.add_argument("--out", default="bench-out")
    f.set_defaults(func=cmd_profile)
    return p


def run(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            return args.func(args)
        except UsageError as exc:
            print(exc, file=sys.stderr)
            return 2
        except (ValueError, OSError, RuntimeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        except Exception as exc:  # keep the exit-code contract for anything unforeseen
            print(f"error: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
            return 1
        finally:
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
