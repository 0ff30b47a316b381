"""Command-line interface.

Data goes to stdout (or ``--out``) as JSON or CSV, diagnostics to stderr.
Exit status: 0 success, 1 usage or input error, 2 a mathematical bound was
found violated.  Every output embeds a run manifest so that identical
manifests and inputs give byte-identical output.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys

import numpy as np

from fei_lab import __version__
from fei_lab import fei, formula, search
from fei_lab.compose import (
    CompositionSpec,
    amplify_closed_form,
    amplify_ratio_limit,
    compose,
    composition_identities,
    composition_theorem_check,
    maj3,
    paper_g,
    paper_g_as_printed,
    stats_of,
)
from fei_lab.boolfn import BiasVector, TruthTable
from fei_lab.fourier import TAU_SPARSE, biased_transform
from fei_lab.measures import measure_report, spectral_entropy_ge1, total_influence, variance
from fei_lab.parallel import default_jobs

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION = 0, 1, 2
SIG_DIGITS = 12

BUILTINS = {
    "g": paper_g,
    "g_printed": paper_g_as_printed,
    "maj3": maj3,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# number formatting


def num(x):
    """Round to 12 significant digits; JSON then prints the shortest round-trip form."""
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return float(format(x, f".{SIG_DIGITS}g")) + 0.0


def clean(obj):
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return num(obj)
    return obj


def csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), f".{SIG_DIGITS}g")
    return str(v)


# inputs


class Inputs:
    """Loads functions and records the sha256 digest of everything read."""

    def __init__(self, basis):
        self.basis = basis
        self.digests = {}

    def _record(self, label, data):
        self.digests[label] = hashlib.sha256(data).hexdigest()

    def text(self, label, arg):
        if os.path.isfile(arg):
            with open(arg, "rb") as fh:
                data = fh.read()
            self._record(label, data)
            return data.decode("utf-8"), True
        self._record(label, arg.encode("utf-8"))
        return arg, False

    def function(self, label, arg):
        """``(table, formula_ast_or_None)`` from a table file, builtin name or formula text."""
        if arg is None:
            raise ValueError(f"--{label} is required")
        if not os.path.isfile(arg) and arg.lower() in BUILTINS:
            self._record(label, arg.lower().encode())
            return BUILTINS[arg.lower()](), None
        text, _ = self.text(label, arg)
        if text.lstrip().startswith("{"):
            return TruthTable.loads(text), None
        node = formula.parse(text, self.basis)
        return formula.formula_to_table(node, self.basis), node

    def resolve(self, name):
        if name.lower() in BUILTINS:
            return BUILTINS[name.lower()]()
        ar = self.basis.arities(name) if name in self.basis else ()
        if len(ar) != 1:
            raise ValueError(f"cannot resolve gate {name!r}; use a fixed-arity name such as AND2")
        return self.basis.lookup(name, ar[0])


def parse_mu(text, n):
    if text is None or text.strip() == "uniform":
        return BiasVector.uniform(n)
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"--mu must be 'uniform' or a comma list of numbers, got {text!r}") from None
    if len(vals) == 1 and n != 1:
        vals = vals * n
    if len(vals) != n:
        raise ValueError(f"--mu has {len(vals)} entries, function has arity {n}")
    return BiasVector(vals)


def parse_grid(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


# output


def manifest(args, inputs):
    skip = {"jobs", "out", "func", "command"}
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {
        "tool": "fei-lab",
        "version": __version__,
        "subcommand": args.command,
        "flags": flags,
        "inputs": dict(sorted(inputs.digests.items())),
        "seed": args.seed,
    }


def render_json(man, payload):
    doc = {"manifest": man}
    doc.update(payload)
    return json.dumps(clean(doc), indent=2, allow_nan=False) + "\n"


def render_csv(man, header, rows):
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(clean(man), separators=(",", ":")) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([csv_cell(v) for v in r])
    return buf.getvalue()


def flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k, v in obj.items():
            flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj, 1):
            flatten(f"{prefix}.{i}", v, out)
    else:
        out.append([prefix, obj])
    return out


def emit(args, inputs, payload, csv_table=None):
    man = manifest(args, inputs)
    if args.format == "csv":
        if csv_table is None:
            header, rows = ["field", "value"], flatten("", clean(payload), [])
        else:
            header, rows = csv_table
        text = render_csv(man, header, rows)
    else:
        text = render_json(man, payload)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def warn(msg):
    print(f"fei-lab: {msg}", file=sys.stderr)


# subcommands


def cmd_analyze(args, inputs):
    f, node = inputs.function("input", args.input)
    mu = parse_mu(args.mu, f.n)
    payload = {
        "function": f.to_json(),
        "measures": measure_report(f, mu).to_json(),
        "fei": fei.fei_report(f, mu, args.p).to_json(),
    }
    if node is not None:
        try:
            payload["read_once"] = formula.analyze_read_once(node, inputs.basis, mu).to_json()
        except formula.ReadOnceError as e:
            warn(f"read-once analysis skipped: {e}")
    emit(args, inputs, payload)
    if payload["fei"]["witness_violations"]:
        warn("per-term entropy bound violated; see fei.witness_violations")
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_spectrum(args, inputs):
    f, _ = inputs.function("input", args.input)
    s = biased_transform(f, parse_mu(args.mu, f.n))
    spec = s.to_json(args.tau)
    rows = [[S, format(S, f"0{max(f.n, 1)}b")[::-1], v] for S, v in spec["coeffs"]]
    emit(args, inputs, {"spectrum": spec}, (["mask", "subset_bits", "coefficient"], rows))
    return EXIT_OK


def cmd_compose(args, inputs):
    text, _ = inputs.text("input", args.input)
    spec = CompositionSpec.from_json(json.loads(text), resolve=inputs.resolve)
    if args.mu is not None:
        spec = CompositionSpec(spec.outer, spec.inner, parse_mu(args.mu, spec.total_arity))
    checks = composition_identities(spec)
    payload = {
        "spec": spec.to_json(),
        "composed": compose(spec).to_json(),
        "identities": [
            {"name": c.name, "direct": c.direct, "closed_form": c.closed_form,
             "residual": c.residual, "holds": c.holds()}
            for c in checks
        ],
    }
    bad = [c.name for c in checks if not c.holds()]
    if args.C is not None:
        tc = composition_theorem_check(spec, args.C)
        payload["theorem"] = {
            "C": tc.C, "inner_hypotheses": tc.inner_hypotheses,
            "outer_hypothesis": tc.outer_hypothesis, "conclusion": tc.conclusion,
            "implication_holds": tc.implication_holds, "induction_step": tc.induction_step,
            "H_ge1": tc.h_ge1, "gap": tc.gap,
        }
        if not tc.implication_holds:
            bad.append("theorem")
    emit(args, inputs, payload)
    if bad:
        warn(f"violated: {', '.join(bad)}")
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_amplify(args, inputs):
    F, _ = inputs.function("F", args.F)
    g, _ = inputs.function("g", args.g if args.g is not None else args.F)
    for name, t in (("F", F), ("g", g)):
        if not t.is_balanced():
            raise ValueError(f"{name} must be balanced for the amplification formulas")
    if args.m < 0:
        raise ValueError("--m must be non-negative")
    Fs, gs = stats_of(F), stats_of(g)
    rows = []
    for m in range(args.m + 1):
        st = amplify_closed_form(Fs, gs, m)
        rows.append([m, st.entropy, st.influence, st.ratio])
    limit = amplify_ratio_limit(Fs) if Fs.influence > 1.0 else None
    payload = {
        "F": F.to_json(), "g": g.to_json(), "limit": limit,
        "rows": [dict(zip(("m", "H", "Inf", "ratio"), r)) for r in rows],
    }
    emit(args, inputs, payload, (["m", "H", "Inf", "ratio"], rows))
    return EXIT_OK


def cmd_verify(args, inputs):
    if args.input is not None:
        return verify_one(args, inputs)
    res = fei.bound_sweep(
        grid_kmax=args.grid_kmax, grid=parse_grid(args.grid), uniform_k=args.uniform_k,
        random_count=args.random, random_kmax=args.random_kmax, seed=args.seed, jobs=args.jobs,
    )
    emit(args, inputs, {"sweep": res.to_json(), "ok": res.ok})
    if not res.ok:
        warn(f"{len(res.violations)} bound violation(s); inputs listed under sweep.violations")
        return EXIT_VIOLATION
    return EXIT_OK


def verify_one(args, inputs):
    f, _ = inputs.function("input", args.input)
    mu = parse_mu(args.mu, f.n)
    tbs = fei.term_bounds(f, mu)
    s = biased_transform(f, mu)
    h, gap = spectral_entropy_ge1(s), total_influence(s) - variance(s)
    const = fei.product_fei_constant(f.n) if f.n else 0.0
    theorem_ok = h <= const * gap + fei.BOUND_SLACK
    bad = [[t.S, t.j, t.lhs, t.rhs] for t in tbs if not t.holds]
    payload = {
        "function": f.to_json(),
        "mu": [float(m) for m in mu.mu],
        "term_bounds_checked": len(tbs),
        "term_bound_violations": bad,
        "H_ge1": h, "gap": gap, "constant": const, "theorem_holds": theorem_ok,
        "ok": not bad and theorem_ok,
    }
    emit(args, inputs, payload)
    return EXIT_OK if payload["ok"] else EXIT_VIOLATION


def cmd_search(args, inputs):
    cfg = search.SearchConfig(
        k=args.k, mode=args.mode, constraint=args.constraint,
        mu_grid=parse_grid(args.grid) if args.grid else None, seed=args.seed,
        budget=args.budget, restarts=args.restarts, objective=args.objective,
        target=args.target, use_symmetry=not args.no_symmetry, jobs=args.jobs,
    )
    res = search.run_search(cfg)
    payload = {"result": res.to_json()}
    if res.witness is not None and res.witness.is_balanced() and cfg.k <= 16:
        st = stats_of(res.witness)
        payload["witness_stats"] = {
            "H": st.entropy, "Inf": st.influence, "ratio": st.ratio,
            "limit": amplify_ratio_limit(st) if st.influence > 1.0 else None,
        }
    emit(args, inputs, payload)
    if res.bound is not None and res.ratio is not None and res.ratio > res.bound:
        warn("worst-case ratio exceeds the explicit arity constant")
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_parse(args, inputs):
    src = args.formula if args.formula is not None else args.input
    if src is None:
        raise ValueError("give a formula as an argument or with --input")
    text, _ = inputs.text("input", src)
    node = formula.parse(text, inputs.basis)
    formula.validate_read_once(node)
    n = formula.arity(node)
    mu = parse_mu(args.mu, n)
    payload = {
        "formula": formula.unparse(node),
        "ast": formula.to_json(node),
        "arity": n,
        "report": formula.analyze_read_once(node, inputs.basis, mu).to_json(),
    }
    if n <= formula.DENSE_CHECK_MAX_ARITY:
        payload["table"] = formula.formula_to_table(node, inputs.basis).to_json()
    nodes = payload["report"]["nodes"]
    rows = [[d["node"], d["gate"], d["H_ge1"], d["Inf"], d["Var"], d["ratio"]] for d in nodes]
    emit(args, inputs, payload, (["node", "gate", "H_ge1", "Inf", "Var", "ratio"], rows))
    rep = payload["report"]
    if not (rep["composition_bound_holds"] and rep["arity_bound_holds"]):
        warn("composition bound violated at the root")
        return EXIT_VIOLATION
    return EXIT_OK


# parser


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--mu", help='comma list of biases, one value to broadcast, or "uniform"')
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--input", help="truth-table JSON file, builtin name or formula text")
    common.add_argument("--out", help="write data here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default FEI_LAB_JOBS or all cores)")
    common.add_argument("--gate", action="append", default=[], metavar="NAME=FILE",
                        help="register an extra gate from a truth-table file")

    p = _Parser(prog="fei-lab", description="Biased Fourier entropy and influence toolkit.")
    p.add_argument("--version", action="version", version=f"fei-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", parents=[common], help="measures and ratios of one function")
    a.add_argument("--p", type=float, default=None, help="also report the equal-bias KMS sides at Pr[x_i=-1]=p")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("spectrum", parents=[common], help="biased Fourier coefficients")
    s.add_argument("--tau", type=float, default=TAU_SPARSE, help="drop coefficients with |c| <= tau")
    s.set_defaults(func=cmd_spectrum)

    c = sub.add_parser("compose", parents=[common], help="check composition identities for a spec file")
    c.add_argument("--C", type=float, default=None, help="also check the composition theorem at this factor")
    c.set_defaults(func=cmd_compose)

    m = sub.add_parser("amplify", parents=[common], help="entropy/influence of iterated compositions")
    m.add_argument("--F", required=True)
    m.add_argument("--g", default=None, help="base function (default: F)")
    m.add_argument("--m", type=int, default=20)
    m.set_defaults(func=cmd_amplify, format_default="csv")

    v = sub.add_parser("verify", parents=[common], help="sweep the per-term and arity bounds")
    v.add_argument("--grid-kmax", type=int, default=3)
    v.add_argument("--grid", default=",".join(str(x) for x in fei.DEFAULT_GRID))
    v.add_argument("--uniform-k", type=int, default=4)
    v.add_argument("--random", type=int, default=100_000)
    v.add_argument("--random-kmax", type=int, default=6)
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("search", parents=[common], help="search for large ratios")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--mode", choices=("exhaustive", "local"), default="exhaustive")
    q.add_argument("--constraint", choices=("any", "balanced"), default="any")
    q.add_argument("--target", choices=("fei", "fei_plus"), default="fei")
    q.add_argument("--objective", choices=("auto", "fei", "amplify"), default="auto")
    q.add_argument("--grid", default=None, help="symmetric bias grid for the FEI+ worst case")
    q.add_argument("--budget", type=int, default=20000)
    q.add_argument("--restarts", type=int, default=4)
    q.add_argument("--no-symmetry", action="store_true")
    q.set_defaults(func=cmd_search)

    r = sub.add_parser("parse", parents=[common], help="parse and analyse a read-once formula")
    r.add_argument("formula", nargs="?", default=None)
    r.set_defaults(func=cmd_parse)
    return p


def _basis(specs):
    b = formula.default_basis()
    for item in specs:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"--gate expects NAME=FILE, got {item!r}")
        b.register_file(name, path)
    return b


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_INPUT
    if args.format is None:
        args.format = getattr(args, "format_default", "json")
    if hasattr(args, "format_default"):
        del args.format_default
    if args.jobs is None:
        args.jobs = default_jobs()
    try:
        inputs = Inputs(_basis(args.gate))
        return args.func(args, inputs)
    except UsageError as e:
        print(e, file=sys.stderr)
    except (ValueError, KeyError, OSError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        if isinstance(e, KeyError):
            msg = f"unknown name {msg!r}"
        print(f"fei-lab {args.command}: error: {msg}", file=sys.stderr)
    return EXIT_INPUT


def main(argv=None):
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
