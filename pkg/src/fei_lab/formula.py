"""Read-once formulas over a gate basis: parsing, evaluation and analysis.

Grammar (whitespace-insensitive, gate names case-insensitive)::

    expr := NAME '(' expr (',' expr)* ')' | VAR
    VAR  := 'x' digits

``NOT`` applied directly to a variable becomes a negated leaf.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from fei_lab.boolfn import (
    MAX_ARITY,
    BiasVector,
    TruthTable,
    and_,
    as_bias,
    load_table,
    majority,
    or_,
    parity,
)
from fei_lab.compose import InnerMeasures, closed_form_measures
from fei_lab.fei import DENOM_TOL, product_fei_constant
from fei_lab.fourier import biased_transform
from fei_lab.measures import spectral_entropy_ge1, total_influence, variance

GATE_MAX_ARITY = 8
DENSE_CHECK_MAX_ARITY = 16
ANALYSIS_TOL = 1e-9


class FormulaError(ValueError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, column {col}: {message}"
        super().__init__(message)


class ReadOnceError(FormulaError):
    def __init__(self, variable, positions):
        self.variable = variable
        self.positions = positions
        where = " and ".join(f"line {l}, column {c}" for l, c in positions)
        super().__init__(f"variable x{variable} appears more than once (at {where})")


@dataclass(frozen=True)
class Leaf:
    var: int
    negated: bool = False
    pos: tuple = field(default=None, compare=False)


@dataclass(frozen=True)
class Gate:
    name: str
    children: tuple
    pos: tuple = field(default=None, compare=False)


# gate basis


class GateBasis:
    """Named gates; n-ary families resolve by argument count."""

    def __init__(self):
        self._fixed = {}
        self._families = {}

    def register(self, name, table):
        if table.n > GATE_MAX_ARITY:
            raise ValueError(f"gate arity {table.n} exceeds {GATE_MAX_ARITY}")
        self._fixed[name.upper()] = table

    def register_family(self, name, builder, arities):
        self._families[name.upper()] = (builder, tuple(arities))

    def register_file(self, name, path):
        self.register(name, load_table(path))

    def __contains__(self, name):
        name = name.upper()
        return name in self._fixed or name in self._families

    def arities(self, name):
        name = name.upper()
        if name in self._fixed:
            return (self._fixed[name].n,)
        return self._families[name][1]

    def lookup(self, name, arity):
        name = name.upper()
        if name in self._fixed:
            t = self._fixed[name]
            if t.n != arity:
                raise ValueError(f"gate {name} expects {t.n} arguments, got {arity}")
            return t
        if name in self._families:
            builder, ok = self._families[name]
            if arity not in ok:
                raise ValueError(
                    f"gate {name} expects {min(ok)}..{max(ok)} arguments, got {arity}"
                )
            return builder(arity)
        raise KeyError(name)

    def max_arity(self, names=None):
        names = self._all_names() if names is None else {n.upper() for n in names}
        return max(max(self.arities(n)) for n in names)

    def _all_names(self):
        return set(self._fixed) | set(self._families)


def default_basis():
    b = GateBasis()
    b.register("NOT", TruthTable([-1, 1], 1))
    b.register("MAJ3", majority(3))
    for k in range(2, GATE_MAX_ARITY + 1):
        b.register(f"AND{k}", and_(k))
        b.register(f"OR{k}", or_(k))
        b.register(f"XOR{k}", parity(k))
    b.register_family("AND", and_, range(2, GATE_MAX_ARITY + 1))
    b.register_family("OR", or_, range(2, GATE_MAX_ARITY + 1))
    b.register_family("XOR", parity, range(2, GATE_MAX_ARITY + 1))
    b.register_family("MAJ", majority, (3, 5, 7))
    return b


# parsing

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>[(),]))")
_VAR = re.compile(r"[xX]([0-9]+)\Z")


def _tokenize(text):
    tokens = []
    line_starts = [0] + [m.end() for m in re.finditer(r"\n", text)]

    def loc(i):
        ln = max(k for k, s in enumerate(line_starts) if s <= i)
        return ln + 1, i - line_starts[ln] + 1

    i = 0
    while True:
        m = _TOKEN.match(text, i)
        if m is None:
            j = i
            while j < len(text) and text[j].isspace():
                j += 1
            if j == len(text):
                tokens.append(("eof", None, loc(j)))
                return tokens
            raise FormulaError(f"unexpected character {text[j]!r}", *loc(j))
        kind = "name" if m.group("name") else "punct"
        start = m.start(kind)
        tokens.append((kind, m.group(kind), loc(start)))
        i = m.end()


class _Parser:
    def __init__(self, text, basis):
        self.toks = _tokenize(text)
        self.i = 0
        self.basis = basis

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None):
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            found = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise FormulaError(f"expected {value!r}, found {found}", *tok[2])
        self.i += 1
        return tok

    def expr(self):
        kind, val, pos = self.peek()
        if kind != "name":
            found = "end of input" if kind == "eof" else repr(val)
            raise FormulaError(f"expected a variable or gate, found {found}", *pos)
        self.take()
        m = _VAR.match(val)
        if m:
            var = int(m.group(1))
            if var < 1:
                raise FormulaError("variables are numbered from x1", *pos)
            if var > MAX_ARITY:
                raise FormulaError(f"variable index {var} exceeds {MAX_ARITY}", *pos)
            return Leaf(var, False, pos)
        name = val.upper()
        if self.basis is not None and name not in self.basis:
            raise FormulaError(f"unknown gate {val!r}", *pos)
        self.take("(")
        children = [self.expr()]
        while self.peek()[1] == ",":
            self.take(",")
            children.append(self.expr())
        self.take(")")
        if self.basis is not None:
            try:
                self.basis.lookup(name, len(children))
            except ValueError as exc:
                raise FormulaError(str(exc), *pos) from None
        if name == "NOT" and isinstance(children[0], Leaf):
            c = children[0]
            return Leaf(c.var, not c.negated, c.pos)
        return Gate(name, tuple(children), pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "eof":
            raise FormulaError(f"unexpected {val!r} after the expression", *pos)
        return node


def parse(text, basis=None):
    """Parse one formula; gate names and arities are checked against ``basis``."""
    return _Parser(text, default_basis() if basis is None else basis).parse()


def unparse(node):
    if isinstance(node, Leaf):
        return f"NOT(x{node.var})" if node.negated else f"x{node.var}"
    return f"{node.name}({', '.join(unparse(c) for c in node.children)})"


def walk(node):
    """Pre-order traversal."""
    yield node
    if isinstance(node, Gate):
        for c in node.children:
            yield from walk(c)


def variables(node):
    return [n.var for n in walk(node) if isinstance(n, Leaf)]


def arity(node):
    return max(variables(node))


def validate_read_once(node):
    seen = {}
    for leaf in walk(node):
        if isinstance(leaf, Leaf):
            if leaf.var in seen:
                raise ReadOnceError(leaf.var, [seen[leaf.var], leaf.pos])
            seen[leaf.var] = leaf.pos
    return True


def to_json(node):
    if isinstance(node, Leaf):
        return {"var": node.var, "negated": node.negated}
    return {"gate": node.name, "children": [to_json(c) for c in node.children]}


# evaluation


def formula_to_table(node, basis=None):
    """Dense truth table; variable ``x_i`` is coordinate ``i`` and the arity is the largest index."""
    basis = default_basis() if basis is None else basis
    n = arity(node)
    if n > MAX_ARITY:
        raise ValueError(f"formula arity {n} exceeds {MAX_ARITY}")
    a = np.arange(1 << n, dtype=np.int64)

    def ev(nd):
        if isinstance(nd, Leaf):
            true = ((a >> (nd.var - 1)) & 1).astype(bool)
            return true ^ nd.negated
        gate = basis.lookup(nd.name, len(nd.children))
        idx = np.zeros(1 << n, dtype=np.int64)
        for i, c in enumerate(nd.children):
            idx |= ev(c).astype(np.int64) << i
        return gate.values[idx] == -1

    return TruthTable(np.where(ev(node), -1, 1).astype(np.int8), n)


# analysis


@dataclass
class NodeReport:
    node: str
    gate: str
    eta: list
    mean: float
    H_ge1: float
    Inf: float
    Var: float
    ratio: float | None
    gate_ratio: float | None = None
    children: list = field(default_factory=list)

    def to_json(self):
        return {
            "node": self.node, "gate": self.gate, "eta": self.eta, "mean": self.mean,
            "H_ge1": self.H_ge1, "Inf": self.Inf, "Var": self.Var,
            "ratio": self.ratio, "gate_ratio": self.gate_ratio,
        }


@dataclass
class ReadOnceReport:
    root: NodeReport
    arity: int
    max_gate_ratio: float
    gate_max_arity: int
    composition_bound_holds: bool
    arity_bound_holds: bool
    dense: dict | None = None

    @property
    def nodes(self):
        out = []

        def rec(r):
            out.append(r)
            for c in r.children:
                rec(c)

        rec(self.root)
        return out

    def to_json(self):
        return {
            "arity": self.arity,
            "H_ge1": self.root.H_ge1,
            "Inf": self.root.Inf,
            "Var": self.root.Var,
            "ratio": self.root.ratio,
            "max_gate_ratio": self.max_gate_ratio,
            "composition_bound_holds": self.composition_bound_holds,
            "gate_max_arity": self.gate_max_arity,
            "arity_bound_holds": self.arity_bound_holds,
            "dense_check": self.dense,
            "nodes": [n.to_json() for n in self.nodes],
        }


def _ratio(h, gap):
    return None if abs(gap) < DENOM_TOL else h / gap


def analyze_read_once(node, basis=None, mu=None, dense_check=None):
    """Bottom-up closed-form measures of a read-once formula.

    Every gate is analysed against the means of its children; no dense table
    of the whole formula is built except for the optional cross-check, which
    runs by default when the arity is at most 16.
    """
    basis = default_basis() if basis is None else basis
    validate_read_once(node)
    n = arity(node)
    mu = as_bias(mu, n)
    gate_ratios = []
    used = set()

    def rec(nd):
        if isinstance(nd, Leaf):
            m = float(mu.mu[nd.var - 1])
            s2 = float(mu.sigma2[nd.var - 1])
            rep = NodeReport(unparse(nd), "VAR", [], -m if nd.negated else m, 0.0, s2, s2, None)
            return rep, InnerMeasures(rep.mean, s2, s2, 0.0)
        kids = [rec(c) for c in nd.children]
        gate = basis.lookup(nd.name, len(nd.children))
        used.add(nd.name)
        try:
            eta = BiasVector([k[1].mean for k in kids])
            cf = closed_form_measures(gate, [k[1] for k in kids], eta)
        except ValueError:
            raise FormulaError(f"subformula {unparse(nd)} has a constant input under these biases") from None
        g_ratio = _ratio(cf.outer_h_ge1, cf.outer_inf - cf.outer_var)
        gate_ratios.append(0.0 if g_ratio is None else g_ratio)
        rep = NodeReport(
            unparse(nd), nd.name, [float(e) for e in eta.mu], cf.mean,
            cf.h_ge1, cf.inf, cf.var, _ratio(cf.h_ge1, cf.inf - cf.var), g_ratio,
            [k[0] for k in kids],
        )
        return rep, InnerMeasures(cf.mean, cf.var, cf.inf, cf.h_ge1)

    root, _ = rec(node)
    C = max(gate_ratios) if gate_ratios else 0.0
    gap = root.Inf - root.Var
    k_max = basis.max_arity(used) if used else 1
    report = ReadOnceReport(
        root=root,
        arity=n,
        max_gate_ratio=C,
        gate_max_arity=k_max,
        composition_bound_holds=root.H_ge1 <= C * gap + ANALYSIS_TOL,
        arity_bound_holds=root.H_ge1 <= product_fei_constant(k_max) * gap + ANALYSIS_TOL,
    )
    if dense_check is None:
        dense_check = n <= DENSE_CHECK_MAX_ARITY
    if dense_check:
        s = biased_transform(formula_to_table(node, basis), mu)
        h, inf, var = spectral_entropy_ge1(s), total_influence(s), variance(s)
        report.dense = {
            "H_ge1": h, "Inf": inf, "Var": var,
            "max_residual": max(abs(h - root.H_ge1), abs(inf - root.Inf), abs(var - root.Var)),
        }
    return report


def random_read_once(rng, n_vars, gates=("AND", "OR", "XOR", "MAJ3"), not_prob=0.3, basis=None):
    """Random read-once formula over exactly ``n_vars`` variables (x1..xn in shuffled order)."""
    basis = default_basis() if basis is None else basis
    order = [int(v) + 1 for v in rng.permutation(n_vars)]

    def build(vs):
        if len(vs) == 1:
            return Leaf(vs[0], bool(rng.random() < not_prob))
        choices = [g for g in gates if any(a <= len(vs) for a in _gate_arities(basis, g))]
        name = choices[int(rng.integers(len(choices)))]
        ks = [a for a in _gate_arities(basis, name) if a <= len(vs)]
        k = min(ks) if len(ks) == 1 else ks[int(rng.integers(len(ks)))]
        cuts = sorted(int(c) for c in rng.choice(np.arange(1, len(vs)), size=k - 1, replace=False))
        parts = [vs[i:j] for i, j in zip([0] + cuts, cuts + [len(vs)])]
        node = Gate(name.upper(), tuple(build(p) for p in parts))
        if rng.random() < not_prob / 2:
            node = Gate("NOT", (node,))
        return node

    return build(order)


def _gate_arities(basis, name):
    a = basis.arities(name)
    return [x for x in a if x >= 2]
