"""Acceptance gate: one test per criterion, one PASS/FAIL line each.

The lines are printed in the terminal summary (see conftest.py) and also
when this file is run directly with ``python tests/test_acceptance.py``.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE
from fei_lab.boolfn import BiasVector, TruthTable, and_, or_
from fei_lab.compose import (
    CompositionSpec,
    amplify_closed_form,
    amplify_direct,
    amplify_ratio_limit,
    composition_identities,
    maj3,
    normalized_lift,
    paper_g,
    stats_of,
    tensor_product,
    verify_tensor_identities,
)
from fei_lab.fei import bound_sweep, fei_ratio
from fei_lab.formula import analyze_read_once, random_read_once
from fei_lab.fourier import biased_transform, naive_transform, parseval_sides
from fei_lab.measures import (
    exact_uniform_entropy,
    flip_influence,
    influence_combinatorial,
    influence_i,
    total_influence,
    uniform_entropy,
)

PRINTED_LIMIT = 6.278944
PRIOR_BOUND = Fraction(60, 13)


def record(num, title, ok, detail, elapsed, limit):
    ok = ok and elapsed < limit
    line = f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {title}: {detail} ({elapsed:.2f}s, limit {limit:g}s)"
    ACCEPTANCE[num] = line
    print(line)
    return ok


def _table(rng, n):
    return TruthTable(np.where(rng.random(1 << n) < 0.5, -1, 1).astype(np.int8), n)


def _nonconstant(rng, n):
    while True:
        g = _table(rng, n)
        if abs(int(np.sum(g.values))) < (1 << n):
            return g


@pytest.fixture(scope="module")
def sweep():
    t = time.perf_counter()
    res = bound_sweep(grid_kmax=3, uniform_k=4, random_count=100_000, random_kmax=6, seed=0)
    return res, time.perf_counter() - t


def test_c01_explicit_constant():
    t = time.perf_counter()
    g = paper_g()
    s = biased_transform(g)
    balanced = g.count_true() == 32
    inf = Fraction(total_influence(s))
    H = uniform_entropy(s)
    limit = amplify_ratio_limit(stats_of(g))
    ok = balanced and inf == Fraction(13, 8) and H >= 3.92434 and limit >= PRINTED_LIMIT
    ok = ok and abs(limit - PRINTED_LIMIT) <= 1e-5
    el = time.perf_counter() - t
    detail = f"balanced={balanced} Inf={inf} H={H:.9f} limit={limit:.9f} |limit-6.278944|={abs(limit - PRINTED_LIMIT):.2e}"
    assert record(1, "explicit constant", ok, detail, el, 1.0)


def test_c02_prior_bound_context():
    t = time.perf_counter()
    r = fei_ratio(paper_g())
    limit = amplify_ratio_limit(stats_of(paper_g()))
    ok = abs(r - 2.41498) <= 1e-5 and r < float(PRIOR_BOUND) < PRINTED_LIMIT <= limit
    el = time.perf_counter() - t
    assert record(2, "prior bound context", ok, f"fei_ratio={r:.6f} < 60/13={float(PRIOR_BOUND):.6f} < {limit:.6f}", el, 1.0)


def test_c03_transform_correctness():
    rng = np.random.default_rng(3)
    t = time.perf_counter()
    worst_p = worst_n = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 11))
        f = _table(rng, n)
        mu = BiasVector(rng.uniform(-0.95, 0.95, n))
        lhs, rhs = parseval_sides(f, mu)
        worst_p = max(worst_p, abs(lhs - rhs))
        worst_n = max(worst_n, float(np.max(np.abs(biased_transform(f, mu).coeffs - naive_transform(f, mu).coeffs))))
    el = time.perf_counter() - t
    ok = worst_p <= 1e-10 and worst_n <= 1e-12
    assert record(3, "transform correctness", ok, f"parseval max err {worst_p:.1e}, fast vs naive {worst_n:.1e}", el, 10.0)


def test_c04_influence_equivalence():
    rng = np.random.default_rng(4)
    t = time.perf_counter()
    worst = 0.0
    exact = True
    for _ in range(500):
        n = int(rng.integers(1, 9))
        f = _table(rng, n)
        mu = BiasVector(rng.uniform(-0.95, 0.95, n))
        s = biased_transform(f, mu)
        su = biased_transform(f)
        for i in range(1, n + 1):
            worst = max(worst, abs(influence_combinatorial(f, mu, i) - influence_i(s, i)))
            fr = flip_influence(f, i)
            exact &= Fraction(influence_i(su, i)) == fr and Fraction(influence_combinatorial(f, None, i)) == fr
    el = time.perf_counter() - t
    ok = worst <= 1e-12 and exact
    assert record(4, "influence equivalence", ok, f"max discrepancy {worst:.1e}, exact at uniform={exact}", el, 10.0)


def test_c05_composition_identities():
    rng = np.random.default_rng(5)
    t = time.perf_counter()
    specs = [CompositionSpec(or_(2), [and_(2), and_(2)])]
    while len(specs) < 201:
        k = int(rng.integers(1, 4))
        inner = [_nonconstant(rng, int(rng.integers(1, 4))) for _ in range(k)]
        total = sum(g.n for g in inner)
        spec = CompositionSpec(_table(rng, k), inner, BiasVector(rng.uniform(-0.9, 0.9, total)))
        specs.append(spec)
    worst = 0.0
    for spec in specs:
        worst = max(worst, max(c.residual for c in composition_identities(spec)))
    el = time.perf_counter() - t
    assert record(5, "composition identities", worst <= 1e-9, f"{len(specs)} specs incl. OR2(AND2,AND2), max residual {worst:.1e}", el, 30.0)


def test_c06_tensor_identities():
    rng = np.random.default_rng(6)
    t = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        k = int(rng.integers(1, 4))
        sizes = [int(rng.integers(1, 4)) for _ in range(k)]
        mu = BiasVector(rng.uniform(-0.9, 0.9, sum(sizes)))
        factors, off = [], 0
        for ell in sizes:
            factors.append(normalized_lift(_nonconstant(rng, ell), mu.block(off, off + ell)))
            off += ell
        worst = max(worst, max(c.residual for c in verify_tensor_identities(factors, mu)))
    exact = True
    for _ in range(20):
        f = _table(rng, 3)
        base = exact_uniform_entropy(f)
        inf = Fraction(total_influence(biased_transform(f)))
        for k in (2, 3):
            fk = TruthTable(tensor_product([f] * k).values.astype(np.int8), 3 * k)
            exact &= exact_uniform_entropy(fk) == {p: k * c for p, c in base.items()}
            exact &= Fraction(total_influence(biased_transform(fk))) == k * inf
    el = time.perf_counter() - t
    ok = worst <= 1e-9 and exact
    assert record(6, "tensor identities", ok, f"max residual {worst:.1e}, XOR-of-copies exact={exact}", el, 10.0)


def test_c07_amplification_oracle():
    t = time.perf_counter()
    s = stats_of(maj3())
    cf = amplify_closed_form(s, s, 1)
    direct = stats_of(amplify_direct(maj3(), maj3(), 1))
    limit = amplify_ratio_limit(s)
    ok = (
        abs(cf.entropy - 5) <= 1e-9 and abs(cf.influence - 2.25) <= 1e-9
        and abs(direct.entropy - cf.entropy) <= 1e-9 and abs(direct.influence - cf.influence) <= 1e-9
        and abs(limit - 4.0) <= 1e-12
    )
    el = time.perf_counter() - t
    detail = f"closed (H={cf.entropy:.12g}, Inf={cf.influence:.12g}) direct (H={direct.entropy:.12g}, Inf={direct.influence:.12g}) limit={limit:.12g}"
    assert record(7, "amplification oracle", ok, detail, el, 5.0)


def test_c08_term_bound_sweep(sweep):
    res, el = sweep
    term = [v for v in res.violations if v[0] == "term_bound"]
    ok = not term
    detail = f"{res.checked} (f, mu) rows, {len(term)} violations, worst excess {res.term_bound_worst_excess:.1e}"
    assert record(8, "per-term bound sweep", ok, detail, el, 300.0)


def test_c09_arity_constant(sweep):
    res, el = sweep
    arity = [v for v in res.violations if v[0] == "arity_bound"]
    worst_ratio = max(res.max_fei_plus_ratio.values())
    detail = f"{len(arity)} violations, worst excess {res.arity_bound_worst_excess:.1e}, max observed FEI+ ratio {worst_ratio:.4f}"
    assert record(9, "arity constant sweep", not arity, detail, el, 300.0)


def test_c10_read_once_pipeline():
    rng = np.random.default_rng(10)
    t = time.perf_counter()
    worst = 0.0
    slack_ok = True
    for _ in range(100):
        n = int(rng.integers(1, 17))
        node = random_read_once(rng, n, gates=("AND2", "OR2", "XOR2", "MAJ3"))
        mu = BiasVector(rng.uniform(-0.9, 0.9, n))
        rep = analyze_read_once(node, mu=mu, dense_check=True)
        worst = max(worst, rep.dense["max_residual"])
        root = rep.root
        slack_ok &= root.H_ge1 <= rep.max_gate_ratio * (root.Inf - root.Var) + 1e-9
    el = time.perf_counter() - t
    ok = worst <= 1e-9 and slack_ok
    assert record(10, "read-once pipeline", ok, f"max closed-vs-dense residual {worst:.1e}, root within max gate ratio={slack_ok}", el, 60.0)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
