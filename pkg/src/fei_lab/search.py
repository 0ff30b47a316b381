"""Exhaustive and local search for functions with large entropy/influence ratios.

Exhaustive scans can be restricted to one representative per orbit of the
group generated by input permutations, input negations and output negation;
every ratio used here is invariant under that group.  Ties between equal
ratios (within ``TIE_TOL``) go to the smallest truth-table integer, so results
do not depend on scan order or job count.

Randomness comes from ``numpy.random.default_rng(seed)`` (PCG64).
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from fei_lab import kernels
from fei_lab.boolfn import TruthTable
from fei_lab.fei import DENOM_TOL, product_fei_constant
from fei_lab.parallel import ordered_map

EXHAUSTIVE_MAX_ARITY = 4
LOCAL_MAX_ARITY = 16
TIE_TOL = 1e-12


@dataclass
class SearchConfig:
    k: int
    mode: str = "exhaustive"
    constraint: str = "any"
    mu_grid: tuple | None = None
    seed: int = 0
    budget: int = 20000
    restarts: int = 4
    objective: str = "auto"
    target: str = "fei"
    use_symmetry: bool = True
    jobs: int | None = 1

    def __post_init__(self):
        if self.mode not in ("exhaustive", "local"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.constraint not in ("any", "balanced"):
            raise ValueError(f"unknown constraint {self.constraint!r}")
        if self.objective not in ("auto", "fei", "amplify"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.target not in ("fei", "fei_plus"):
            raise ValueError(f"unknown target {self.target!r}")
        if self.k < 1:
            raise ValueError("arity must be at least 1")
        if self.mode == "exhaustive" and self.k > EXHAUSTIVE_MAX_ARITY:
            raise ValueError(f"exhaustive search is limited to arity {EXHAUSTIVE_MAX_ARITY}")
        if self.mode == "local" and self.k > LOCAL_MAX_ARITY:
            raise ValueError(f"local search is limited to arity {LOCAL_MAX_ARITY}")
        if self.mu_grid is not None:
            g = tuple(float(x) for x in self.mu_grid)
            if sorted(g) != sorted(-x for x in g):
                raise ValueError("bias grids must be symmetric about 0")
            self.mu_grid = g


def _key(r):
    return "undefined" if r is None else format(r, ".12g")


def _better(r, t, best_r, best_t):
    if r is None:
        return False
    if best_r is None or r > best_r + TIE_TOL:
        return True
    return abs(r - best_r) <= TIE_TOL and t < best_t


def table_rows(ints, k):
    N = 1 << k
    ints = np.asarray(ints, dtype=np.int64)
    return np.where((ints[:, None] >> np.arange(N)[None, :]) & 1, -1.0, 1.0)


def uniform_ratios(rows, k):
    """``H/Inf`` per row at uniform bias, NaN where undefined."""
    st = kernels.sweep_batch(rows, np.zeros((len(rows), k)), 0.0)
    m2 = st["mean"] ** 2
    H = st["h_ge1"] + np.where(m2 > 0, -m2 * np.log2(np.where(m2 > 0, m2, 1.0)), 0.0)
    inf = st["inf"]
    return np.where(inf >= DENOM_TOL, H / np.where(inf >= DENOM_TOL, inf, 1.0), np.nan), H, inf


def symmetry_maps(k):
    """Index maps ``a -> sigma(a)`` for every input permutation and negation mask."""
    N = 1 << k
    a = np.arange(N)
    maps = []
    for perm in itertools.permutations(range(k)):
        pa = np.zeros(N, dtype=np.int64)
        for i, p in enumerate(perm):
            pa |= ((a >> i) & 1) << p
        for neg in range(N):
            maps.append(pa ^ neg)
    return np.array(maps)


def orbits(k, constraint="any"):
    """``(representatives, sizes)``: the smallest member and size of each orbit."""
    N = 1 << k
    maps = symmetry_maps(k)
    weights = (1 << np.arange(N)).astype(np.int64)
    full = (1 << N) - 1
    visited = np.zeros(1 << N, dtype=bool)
    reps, sizes = [], []
    for t in range(1 << N):
        if visited[t]:
            continue
        bits = (t >> np.arange(N)) & 1
        imgs = bits[maps] @ weights
        orbit = np.unique(np.concatenate([imgs, full ^ imgs]))
        visited[orbit] = True
        if constraint == "balanced" and 2 * int(bits.sum()) != N:
            continue
        reps.append(t)
        sizes.append(len(orbit))
    return np.array(reps, dtype=np.int64), np.array(sizes, dtype=np.int64)


def candidates(k, constraint):
    N = 1 << k
    if constraint == "balanced":
        out = []
        for ones in itertools.combinations(range(N), N // 2):
            out.append(sum(1 << i for i in ones))
        return np.array(sorted(out), dtype=np.int64)
    return np.arange(1 << N, dtype=np.int64)


@dataclass
class SearchResult:
    witness: TruthTable | None
    ratio: float | None
    histogram: dict = field(default_factory=dict)
    evaluated: int = 0
    mu: list | None = None
    bound: float | None = None
    trace: list = field(default_factory=list)

    def to_json(self):
        out = {
            "witness": None if self.witness is None else self.witness.to_json(),
            "ratio": self.ratio,
            "evaluated": self.evaluated,
        }
        if self.histogram:
            out["histogram"] = self.histogram
        if self.mu is not None:
            out["mu"] = self.mu
        if self.bound is not None:
            out["bound"] = self.bound
            out["within_bound"] = self.ratio is None or self.ratio <= self.bound
        if self.trace:
            out["trace"] = self.trace
        return out


def exhaustive_max_fei(config):
    """Maximum uniform ``H/Inf`` over every k-ary (or balanced k-ary) function."""
    k = config.k
    if k > EXHAUSTIVE_MAX_ARITY:
        raise ValueError(f"exhaustive search is limited to arity {EXHAUSTIVE_MAX_ARITY}")
    if config.use_symmetry:
        ints, sizes = orbits(k, config.constraint)
    else:
        ints = candidates(k, config.constraint)
        sizes = np.ones(len(ints), dtype=np.int64)
    ratios, _, _ = uniform_ratios(table_rows(ints, k), k)
    hist = {}
    best_r, best_t = None, None
    for t, r, c in zip(ints.tolist(), ratios.tolist(), sizes.tolist()):
        r = None if math.isnan(r) else r
        key = _key(r)
        hist[key] = hist.get(key, 0) + c
        if _better(r, t, best_r, best_t):
            best_r, best_t = r, t
    hist = dict(sorted(hist.items(), key=lambda kv: (kv[0] == "undefined", float(kv[0]) if kv[0] != "undefined" else 0)))
    witness = None if best_t is None else TruthTable.from_int(k, best_t)
    return SearchResult(witness, best_r, hist, len(ints))


def _product_chunk(args):
    k, ints, points = args
    rows = table_rows(ints, k)
    T, P = len(rows), len(points)
    values = np.repeat(rows, P, axis=0)
    mus = np.tile(points, (T, 1))
    st = kernels.sweep_batch(values, mus, 0.0)
    gap = st["inf"] - st["var"]
    ok = gap >= DENOM_TOL
    r = np.where(ok, st["h_ge1"] / np.where(ok, gap, 1.0), -np.inf)
    if not ok.any():
        return None
    # first row within TIE_TOL of the max: smallest table, then smallest grid index
    best = int(np.flatnonzero(r >= r.max() - TIE_TOL)[0])
    return float(r[best]), int(ints[best // P]), best % P


def worst_case_product_fei(config, chunk=4096):
    """Maximum ``H^mu[f^{>=1}] / (Inf - Var)`` over k-ary functions and a bias grid."""
    k = config.k
    if k > EXHAUSTIVE_MAX_ARITY:
        raise ValueError(f"exhaustive search is limited to arity {EXHAUSTIVE_MAX_ARITY}")
    grid = (0.0,) if config.mu_grid is None else config.mu_grid
    points = np.array(list(itertools.product(grid, repeat=k)), dtype=np.float64).reshape(-1, k)
    if config.use_symmetry and config.mu_grid is None:
        ints, _ = orbits(k, config.constraint)
    else:
        ints = candidates(k, config.constraint)
    per = max(1, chunk // len(points))
    jobs = [(k, ints[s:s + per], points) for s in range(0, len(ints), per)]
    best = None
    for res in ordered_map(_product_chunk, jobs, config.jobs):
        if res is None:
            continue
        r, t, p = res
        if best is None or r > best[0] + TIE_TOL or (abs(r - best[0]) <= TIE_TOL and (t, p) < best[1:]):
            best = (r, t, p)
    bound = product_fei_constant(k)
    if best is None:
        return SearchResult(None, None, evaluated=len(ints) * len(points), bound=bound)
    r, t, p = best
    return SearchResult(
        TruthTable.from_int(k, t), r, evaluated=len(ints) * len(points),
        mu=[float(x) for x in points[p]], bound=bound,
    )


def objective_value(values, k, objective="auto"):
    """Search objective for one table given as a float row; ``-inf`` when undefined.

    ``auto`` uses the amplification limit for balanced functions with
    ``Inf > 1`` and ``H/Inf`` otherwise.
    """
    c = kernels.transform_batch(values[None, :], np.zeros((1, k)))[0]
    sq = c * c
    nz = sq > 0
    H = float(-np.sum(sq[nz] * np.log2(sq[nz])))
    inf = float(np.dot(_popcounts(k), sq))
    balanced = abs(c[0]) < 1e-12
    if objective != "fei" and balanced and inf > 1.0 + DENOM_TOL:
        return H / inf + H / (inf * (inf - 1.0))
    if objective == "amplify" or inf < DENOM_TOL:
        return -math.inf
    return H / inf


_PC = {}


def _popcounts(k):
    if k not in _PC:
        a = np.arange(1 << k)
        _PC[k] = np.array([bin(x).count("1") for x in a], dtype=np.float64)
    return _PC[k]


def local_search_max_ratio(config):
    """Seeded hill climbing over single-entry flips (swap moves when balanced).

    ``budget`` proposals are split evenly over ``restarts`` runs.  Each run
    starts from a random table, accepts a move whose objective is not worse,
    and the trace records ``(restart, iteration, best)`` whenever the global
    best improves.
    """
    k = config.k
    N = 1 << k
    rng = np.random.default_rng(config.seed)
    per_run = max(1, config.budget // max(1, config.restarts))
    best_val, best_row, trace = -math.inf, None, []
    for run in range(config.restarts):
        if config.constraint == "balanced":
            row = np.ones(N)
            row[rng.permutation(N)[: N // 2]] = -1.0
        else:
            row = np.where(rng.random(N) < 0.5, -1.0, 1.0)
        cur = objective_value(row, k, config.objective)
        if cur > best_val:
            best_val, best_row = cur, row.copy()
            trace.append([run, 0, best_val])
        for it in range(1, per_run + 1):
            if config.constraint == "balanced":
                neg = np.flatnonzero(row < 0)
                pos = np.flatnonzero(row > 0)
                i = int(neg[rng.integers(len(neg))])
                j = int(pos[rng.integers(len(pos))])
                row[i], row[j] = 1.0, -1.0
                undo = (i, j)
            else:
                i = int(rng.integers(N))
                row[i] = -row[i]
                undo = (i,)
            val = objective_value(row, k, config.objective)
            if val >= cur:
                cur = val
                if cur > best_val + TIE_TOL:
                    best_val, best_row = cur, row.copy()
                    trace.append([run, it, best_val])
            else:
                for u in undo:
                    row[u] = -row[u]
    witness = None if best_row is None else TruthTable(best_row.astype(np.int8), k)
    ratio = None if best_val == -math.inf else best_val
    return SearchResult(witness, ratio, evaluated=config.restarts * (per_run + 1), trace=trace)


def run_search(config):
    """Dispatch on ``mode`` and ``target``."""
    if config.mode == "local":
        return local_search_max_ratio(config)
    if config.target == "fei_plus" or config.mu_grid is not None:
        return worst_case_product_fei(config)
    return exhaustive_max_fei(config)
