import numpy as np
import pytest

from fei_lab.boolfn import TruthTable, majority
from fei_lab.compose import amplify_ratio_limit, stats_of
from fei_lab.fei import fei_plus_ratio, fei_ratio, product_fei_constant
from fei_lab.search import (
    SearchConfig,
    exhaustive_max_fei,
    local_search_max_ratio,
    orbits,
    run_search,
    worst_case_product_fei,
)

GOLDEN_K4 = [
    [0, 0, 1.3333333333], [0, 1, 1.66268789], [0, 10, 1.7142857143], [0, 12, 1.9002147314],
    [0, 15, 2.0], [0, 16, 2.2169171867], [0, 24, 2.4], [0, 32, 2.8486815659],
    [0, 33, 2.9558895823], [0, 42, 3.4024755512],
]


def test_exhaustive_examples():
    assert exhaustive_max_fei(SearchConfig(k=1)).ratio == 0.0
    r = exhaustive_max_fei(SearchConfig(k=2))
    assert r.ratio == pytest.approx(2.0)
    assert fei_ratio(r.witness) == pytest.approx(2.0)
    assert r.witness.count_true() in (1, 3)  # AND2 type
    r = exhaustive_max_fei(SearchConfig(k=3, constraint="balanced"))
    assert r.witness.is_balanced()
    assert fei_ratio(r.witness) == pytest.approx(r.ratio, abs=1e-12)
    assert sum(r.histogram.values()) == 70


def test_histogram_counts_every_function():
    r = exhaustive_max_fei(SearchConfig(k=3))
    assert sum(r.histogram.values()) == 256
    assert r.histogram["undefined"] == 2


@pytest.mark.parametrize("k,constraint", [(1, "any"), (2, "any"), (3, "any"), (3, "balanced"), (4, "balanced")])
def test_symmetry_quotient_matches_full_scan(k, constraint):
    a = exhaustive_max_fei(SearchConfig(k=k, constraint=constraint))
    b = exhaustive_max_fei(SearchConfig(k=k, constraint=constraint, use_symmetry=False))
    assert a.ratio == pytest.approx(b.ratio, abs=1e-12)
    assert a.histogram == b.histogram


def test_orbit_sizes_cover_space():
    for k in range(1, 4):
        _, sizes = orbits(k)
        assert sizes.sum() == 1 << (1 << k)


def test_worst_case_examples():
    r = worst_case_product_fei(SearchConfig(k=2))
    assert r.ratio == pytest.approx(6.0)
    assert r.witness.count_true() in (1, 3)
    r = worst_case_product_fei(SearchConfig(k=3, mu_grid=(-0.8, -0.4, 0.0, 0.4, 0.8), jobs=2))
    assert r.ratio <= product_fei_constant(3)
    assert fei_plus_ratio(r.witness, r.mu) == pytest.approx(r.ratio, rel=1e-12)


def test_worst_case_job_independent():
    cfg = dict(k=2, mu_grid=(-0.5, 0.0, 0.5))
    a = worst_case_product_fei(SearchConfig(jobs=1, **cfg))
    b = worst_case_product_fei(SearchConfig(jobs=3, **cfg))
    assert a.to_json() == b.to_json()


def test_maj3_fine_grid_finite():
    grid = np.linspace(-0.95, 0.95, 39)
    f = majority(3)
    worst = max(fei_plus_ratio(f, [a, b, c]) for a in grid[::4] for b in grid[::4] for c in grid)
    assert np.isfinite(worst) and worst <= product_fei_constant(3)


def test_local_search_golden_trace():
    cfg = SearchConfig(k=4, mode="local", seed=7, budget=600, restarts=3, objective="fei")
    r = local_search_max_ratio(cfg)
    assert [[a, b, round(c, 10)] for a, b, c in r.trace] == GOLDEN_K4
    assert r.witness.to_hex() == "ff7f"
    again = local_search_max_ratio(cfg)
    assert again.trace == r.trace


def test_local_matches_exhaustive_k4():
    ex = exhaustive_max_fei(SearchConfig(k=4))
    loc = local_search_max_ratio(SearchConfig(k=4, mode="local", seed=7, budget=600, restarts=3, objective="fei"))
    assert loc.ratio == pytest.approx(ex.ratio, abs=1e-12)


def test_local_balanced_reaches_known_constant():
    r = local_search_max_ratio(SearchConfig(k=6, mode="local", constraint="balanced", seed=3, budget=3000, restarts=3))
    assert r.witness.is_balanced()
    st = stats_of(r.witness)
    assert amplify_ratio_limit(st) == pytest.approx(r.ratio, abs=1e-12)
    assert r.ratio >= 6.278944
    assert r.witness.to_hex() == "f5f544c455f544c4"


def test_larger_limit_witness():
    # found by longer runs of the same local search
    f = TruthTable.from_hex(6, "f0f50000f5f5d5d5")
    st = stats_of(f)
    assert f.is_balanced() and st.influence == 1.625
    assert amplify_ratio_limit(st) == pytest.approx(6.34706749870192, abs=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(k=5)
    with pytest.raises(ValueError):
        SearchConfig(k=17, mode="local")
    with pytest.raises(ValueError):
        SearchConfig(k=2, mu_grid=(0.1, 0.2))
    with pytest.raises(ValueError):
        SearchConfig(k=2, mode="annealing")


def test_run_search_dispatch():
    assert run_search(SearchConfig(k=2)).bound is None
    assert run_search(SearchConfig(k=2, target="fei_plus")).bound == product_fei_constant(2)
    assert run_search(SearchConfig(k=3, mode="local", budget=50, restarts=1)).trace
