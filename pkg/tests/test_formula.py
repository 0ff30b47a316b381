import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rand_mu
from fei_lab.boolfn import BiasVector, TruthTable, and_, dictator, majority, or_, parity
from fei_lab.compose import CompositionSpec, compose
from fei_lab.formula import (
    FormulaError,
    Gate,
    GateBasis,
    Leaf,
    ReadOnceError,
    analyze_read_once,
    default_basis,
    formula_to_table,
    parse,
    random_read_once,
    to_json,
    unparse,
    validate_read_once,
    variables,
)

G_PRINTED_FORMULA = (
    "OR(AND(NOT(x1), x2, x3), AND(x1, NOT(x2), x4), AND(x1, NOT(x2), x5, x6),"
    " AND(x1, x2, x3), AND(x1, x2, x4, x5))"
)


def test_parse_examples():
    node = parse("OR(AND(x1,x2),AND(x3,x4))")
    assert node.name == "OR" and all(isinstance(c, Gate) and c.name == "AND" for c in node.children)
    node = parse("MAJ3(x1, NOT(x2), x3)")
    assert node.children[1] == Leaf(2, True)
    with pytest.raises(FormulaError, match="expects"):
        parse("AND(x1)")


def test_parse_case_and_whitespace():
    a = parse("or( and(x1 ,X2) ,\n  Xor(x3,x4) )")
    b = parse("OR(AND(x1,x2),XOR(x3,x4))")
    assert a == b


def test_parse_errors_have_positions():
    with pytest.raises(FormulaError) as e:
        parse("AND(x1,\n  FOO(x2))")
    assert e.value.line == 2 and e.value.col == 3
    with pytest.raises(FormulaError, match="end of input"):
        parse("AND(x1, x2")
    with pytest.raises(FormulaError, match="after the expression"):
        parse("x1 x2")
    with pytest.raises(FormulaError, match="unexpected character"):
        parse("AND(x1; x2)")
    with pytest.raises(FormulaError):
        parse("x0")
    with pytest.raises(FormulaError):
        parse("")


def test_validate_read_once():
    assert validate_read_once(parse("AND(x1, OR(x2, x3))"))
    with pytest.raises(ReadOnceError) as e:
        validate_read_once(parse("AND(x1, x1)"))
    assert e.value.variable == 1 and e.value.positions == [(1, 5), (1, 9)]
    with pytest.raises(ReadOnceError):
        validate_read_once(parse(G_PRINTED_FORMULA))


def test_formula_to_table_examples():
    assert formula_to_table(parse("XOR(x1,x2)")) == parity(2)
    dnf = formula_to_table(parse("OR(AND(x1,x2),AND(x3,x4))"))
    assert dnf == compose(CompositionSpec(or_(2), [and_(2), and_(2)]))
    assert formula_to_table(parse("NOT(x1)")) == -dictator(1)
    assert formula_to_table(parse("NOT(MAJ3(x1,x2,x3))")) == -majority(3)


def test_printed_g_formula_matches_dnf():
    from fei_lab.compose import paper_g_as_printed

    assert formula_to_table(parse(G_PRINTED_FORMULA)) == paper_g_as_printed()


def test_explicit_indices_set_arity():
    t = formula_to_table(parse("AND(x1, x3)"))
    assert t.n == 3
    assert t == TruthTable(and_(2).values[(np.arange(8) & 1) | ((np.arange(8) >> 2) << 1)], 3)


def test_unparse_round_trip(rng):
    for _ in range(50):
        node = random_read_once(rng, int(rng.integers(1, 12)))
        assert parse(unparse(node)) == node
    assert unparse(parse("MAJ3(x1, NOT(x2), x3)")) == "MAJ3(x1, NOT(x2), x3)"


def test_json_shape():
    assert to_json(parse("AND(x1, NOT(x2))")) == {
        "gate": "AND",
        "children": [{"var": 1, "negated": False}, {"var": 2, "negated": True}],
    }


def test_custom_gate(tmp_path):
    from fei_lab.boolfn import save_table

    p = tmp_path / "sel.json"
    sel = TruthTable.from_int(3, 0b11100100)
    save_table(sel, p)
    b = default_basis()
    b.register_file("SEL", p)
    assert formula_to_table(parse("SEL(x1,x2,x3)", b), b) == sel
    with pytest.raises(FormulaError):
        parse("SEL(x1,x2)", b)
    with pytest.raises(ValueError):
        GateBasis().register("BIG", parity(9))


def test_analyze_examples():
    mu = BiasVector([0.6])
    rep = analyze_read_once(parse("x1"), mu=mu)
    assert rep.root.H_ge1 == 0.0
    rep = analyze_read_once(parse("XOR(x1,x2)"))
    assert rep.root.Inf - rep.root.Var == pytest.approx(1.0)
    assert rep.root.H_ge1 == pytest.approx(0.0, abs=1e-15)
    rep = analyze_read_once(parse("OR(AND(x1,x2,x3), AND(x4,x5,x6))"))
    assert rep.dense["max_residual"] <= 1e-9
    assert rep.composition_bound_holds and rep.arity_bound_holds


def test_analyze_rejects():
    with pytest.raises(ReadOnceError):
        analyze_read_once(parse("AND(x1, x1)"))


def test_node_json():
    rep = analyze_read_once(parse("OR(AND(x1,x2),NOT(x3))"), mu=BiasVector([0.1, 0.2, 0.3]))
    j = rep.to_json()
    assert len(j["nodes"]) == 5
    for node in j["nodes"]:
        assert {"gate", "eta", "H_ge1", "Inf", "Var", "ratio"} <= set(node)


def test_random_formulas_closed_vs_dense(rng):
    for _ in range(40):
        n = int(rng.integers(1, 13))
        node = random_read_once(rng, n)
        assert sorted(variables(node)) == list(range(1, n + 1))
        mu = rand_mu(rng, n, 0.6)
        try:
            rep = analyze_read_once(node, mu=mu)
        except FormulaError:
            continue
        assert rep.dense["max_residual"] <= 1e-9
        assert rep.composition_bound_holds and rep.arity_bound_holds


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2 ** 32 - 1))
def test_random_formula_property(n, seed):
    rng = np.random.default_rng(seed)
    node = random_read_once(rng, n)
    validate_read_once(node)
    t = formula_to_table(node)
    assert t.n == n
    rep = analyze_read_once(node)
    assert rep.dense["max_residual"] <= 1e-9
