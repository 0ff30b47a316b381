"""FEI, FEI+ and KMS ratios, the per-term entropy bound and its sweeps.

A ratio whose denominator is below ``DENOM_TOL`` is reported as ``None``
(undefined) rather than NaN.
"""

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from fei_lab import kernels
from fei_lab.boolfn import BiasVector, TruthTable, as_bias
from fei_lab.fourier import TAU_SPARSE, biased_transform
from fei_lab.measures import (
    biased_entropy,
    derivative_variance,
    entropy_terms,
    spectral_entropy_ge1,
    total_influence,
    uniform_entropy,
    variance,
)
from fei_lab.parallel import ordered_map

DENOM_TOL = 1e-12
BOUND_SLACK = 1e-10
LN2 = math.log(2.0)
DEFAULT_GRID = (-0.8, -0.4, 0.0, 0.4, 0.8)


def _ratio(num, den):
    if abs(den) < DENOM_TOL:
        return None
    return num / den


def fei_ratio(f):
    """``H[f] / Inf[f]`` under the uniform measure."""
    s = biased_transform(f, None)
    return _ratio(uniform_entropy(s), total_influence(s))


def fei_plus_ratio(f, mu=None):
    """``H^mu[f^{>=1}] / (Inf^mu[f] - Var_mu[f])``."""
    s = biased_transform(f, as_bias(mu, f.n))
    return _ratio(spectral_entropy_ge1(s), total_influence(s) - variance(s))


@dataclass
class TermBound:
    S: int
    j: int
    lhs: float
    rhs: float
    holds: bool


def check_term_bound(f, mu, S, j):
    """Per-term entropy bound for one ``(S, j)``; ``None`` when ``coeff(S) = 0``.

    ``lhs = c_S^2 log2(prod sigma^2 / c_S^2)`` and
    ``rhs = 4^k / ln 2 * sigma_j^2 Var[D_j f]``.
    """
    mu = as_bias(mu, f.n)
    if S <= 0 or S >> f.n:
        raise ValueError(f"subset {S:#b} must be nonempty and within arity {f.n}")
    if not 1 <= j <= f.n or not S >> (j - 1) & 1:
        raise ValueError(f"coordinate {j} is not in the subset {S:#b}")
    s = biased_transform(f, mu)
    if abs(s[S]) <= TAU_SPARSE:
        return None
    lhs = float(entropy_terms(s)[S])
    rhs = 4.0 ** f.n / LN2 * derivative_variance(f, mu, j)
    return TermBound(S, j, lhs, rhs, lhs <= rhs + BOUND_SLACK)


def term_bounds(f, mu=None):
    """Every applicable ``(S, j)`` bound for ``f``."""
    mu = as_bias(mu, f.n)
    out = []
    for S in range(1, 1 << f.n):
        for j in range(1, f.n + 1):
            if S >> (j - 1) & 1:
                tb = check_term_bound(f, mu, S, j)
                if tb is not None:
                    out.append(tb)
    return out


def product_fei_constant(k):
    """Explicit bias-independent FEI+ factor for arity ``k``.

    ``(2^k - 1)`` nonempty subsets, each bounded by ``4^k / ln 2`` times one
    derivative variance, and the derivative variances sum to at most
    ``2 (Inf - Var)``.  Sufficient, not optimal.
    """
    if k < 1:
        raise ValueError("arity must be at least 1")
    return (2 ** k - 1) * (4.0 ** k / LN2) * 2.0


@dataclass
class KmsValues:
    lhs: float
    rhs: float
    factor: float


def kms_ratio(f, p):
    """Both sides (without the constant) of the equal-bias KMS inequality.

    ``Pr[x_i = -1] = p`` for every i, i.e. ``mu_i = 1 - 2p``.  The entropy
    here includes the empty set and has no ``sigma^2`` inside the log.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    mu = BiasVector(np.full(f.n, 1.0 - 2.0 * p))
    s = biased_transform(f, mu)
    c2 = s.coeffs ** 2
    nz = c2 > 0
    lhs = float(-np.sum(c2[nz] * np.log2(c2[nz])))
    factor = math.log2(1.0 / p) / (1.0 - p)
    return KmsValues(lhs, factor * total_influence(s), factor)


def fei_from_fei_plus(f, C):
    """Check the FEI+ to FEI implication chain for ``f`` at factor ``C``.

    Raises ValueError if ``f`` does not satisfy uniform FEI+ with factor ``C``.
    Returns True iff ``H[f] <= max(C, 1/ln 2) Inf[f]`` and the intermediate
    bound ``(1-eps) log2(1/(1-eps)) <= eps / ln 2`` (``eps = Var[f]``) hold.
    """
    s = biased_transform(f, None)
    h1 = spectral_entropy_ge1(s)
    inf = total_influence(s)
    var = variance(s)
    if h1 > C * (inf - var) + BOUND_SLACK:
        raise ValueError(f"premise fails: H>=1 = {h1} > {C} * (Inf - Var)")
    eps = var
    one = 1.0 - eps
    mid = 0.0 if one <= 0.0 else -one * math.log2(one)
    step = mid <= eps / LN2 + BOUND_SLACK
    final = biased_entropy(s) <= max(C, 1.0 / LN2) * inf + BOUND_SLACK
    return step and final


@dataclass
class FeiReport:
    fei_ratio: float | None
    fei_plus_ratio: float | None
    kms_lhs: float | None = None
    kms_rhs_factor: float | None = None
    witness_violations: list = field(default_factory=list)

    def to_json(self):
        return asdict(self)


def fei_report(f, mu=None, p=None):
    mu = as_bias(mu, f.n)
    rep = FeiReport(
        fei_ratio=fei_ratio(f) if mu.is_uniform() else None,
        fei_plus_ratio=fei_plus_ratio(f, mu),
    )
    if p is not None:
        kv = kms_ratio(f, p)
        rep.kms_lhs = kv.lhs
        rep.kms_rhs_factor = kv.factor
    for tb in term_bounds(f, mu):
        if not tb.holds:
            rep.witness_violations.append([tb.S, tb.j, tb.lhs, tb.rhs])
    return rep


# sweeps


@dataclass
class SweepResult:
    """Outcome of a batched bound sweep.

    ``violations`` lists ``(bound, k, hex, mu, S, j, lhs, rhs)`` records in
    deterministic order.
    """

    checked: int = 0
    term_bound_worst_excess: float = -math.inf
    arity_bound_worst_excess: float = -math.inf
    max_fei_plus_ratio: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def merge(self, other):
        self.checked += other.checked
        self.term_bound_worst_excess = max(self.term_bound_worst_excess, other.term_bound_worst_excess)
        self.arity_bound_worst_excess = max(self.arity_bound_worst_excess, other.arity_bound_worst_excess)
        for k, v in other.max_fei_plus_ratio.items():
            self.max_fei_plus_ratio[k] = max(self.max_fei_plus_ratio.get(k, -math.inf), v)
        self.violations.extend(other.violations)
        return self

    def to_json(self):
        return {
            "checked": self.checked,
            "term_bound_worst_excess": self.term_bound_worst_excess,
            "arity_bound_worst_excess": self.arity_bound_worst_excess,
            "max_fei_plus_ratio": {str(k): v for k, v in sorted(self.max_fei_plus_ratio.items())},
            "violations": self.violations,
        }


def all_tables(k):
    """Every k-ary truth table as rows of a (2^(2^k), 2^k) float array."""
    N = 1 << k
    t = np.arange(1 << N, dtype=np.int64)
    bits = (t[:, None] >> np.arange(N)[None, :]) & 1
    return np.where(bits == 1, -1.0, 1.0)


def rows_to_hex(row, k):
    return TruthTable(row.astype(np.int8), k).to_hex()


def sweep_rows(values, mus, k):
    """Run both bounds over a batch of k-ary tables and biases."""
    res = SweepResult()
    if len(values) == 0:
        return res
    st = kernels.sweep_batch(values, mus, TAU_SPARSE)
    res.checked = len(values)
    exc = st["term_excess"]
    finite = exc[np.isfinite(exc)]
    if finite.size:
        res.term_bound_worst_excess = float(finite.max())
    gap = st["inf"] - st["var"]
    const = product_fei_constant(k)
    t_exc = st["h_ge1"] - const * gap
    res.arity_bound_worst_excess = float(t_exc.max())
    ok = gap >= DENOM_TOL
    if ok.any():
        res.max_fei_plus_ratio[k] = float((st["h_ge1"][ok] / gap[ok]).max())
    for r in np.flatnonzero(exc > BOUND_SLACK):
        S, j = int(st["term_mask"][r]), int(st["term_j"][r]) + 1
        f = TruthTable(values[r].astype(np.int8), k)
        tb = check_term_bound(f, BiasVector(mus[r]), S, j)
        res.violations.append(
            ["term_bound", k, f.to_hex(), mus[r].tolist(), S, j, tb.lhs if tb else None, tb.rhs if tb else None]
        )
    for r in np.flatnonzero(t_exc > BOUND_SLACK):
        res.violations.append(
            ["arity_bound", k, rows_to_hex(values[r], k), mus[r].tolist(), None, None,
             float(st["h_ge1"][r]), float(const * gap[r])]
        )
    return res


def _grid_job(args):
    k, grid = args
    tables = all_tables(k)
    points = np.array(list(itertools.product(grid, repeat=k)), dtype=np.float64).reshape(-1, k)
    T = len(tables)
    values = np.repeat(tables, len(points), axis=0)
    mus = np.tile(points, (T, 1))
    return sweep_rows(values, mus, k)


def _table_range_job(args):
    k, start, stop = args
    N = 1 << k
    t = np.arange(start, stop, dtype=np.int64)
    values = np.where((t[:, None] >> np.arange(N)[None, :]) & 1, -1.0, 1.0)
    return sweep_rows(values, np.zeros((len(t), k)), k)


def _random_job(args):
    k, count, seed_seq, bias_max = args
    rng = np.random.default_rng(seed_seq)
    values = np.where(rng.random((count, 1 << k)) < 0.5, -1.0, 1.0)
    mus = rng.uniform(-bias_max, bias_max, size=(count, k))
    return sweep_rows(values, mus, k)


def grid_jobs(kmax, grid):
    return [(_grid_job, (k, tuple(grid))) for k in range(1, kmax + 1)]


def uniform_jobs(k, chunk=8192):
    total = 1 << (1 << k)
    return [(_table_range_job, (k, s, min(s + chunk, total))) for s in range(0, total, chunk)]


def random_jobs(count, kmax, seed, chunk=5000, bias_max=0.95):
    """Split ``count`` random (f, mu) draws evenly over arities 1..kmax.

    Chunk seeds come from ``SeedSequence(seed).spawn`` so the draws do not
    depend on the number of worker processes.
    """
    per_k = [count // kmax + (1 if i < count % kmax else 0) for i in range(kmax)]
    specs = []
    for k, n_k in zip(range(1, kmax + 1), per_k):
        for s in range(0, n_k, chunk):
            specs.append((k, min(chunk, n_k - s)))
    seeds = np.random.SeedSequence(seed).spawn(len(specs))
    return [(_random_job, (k, c, ss, bias_max)) for (k, c), ss in zip(specs, seeds)]


def _run(job):
    fn, args = job
    return fn(args)


def run_jobs(jobs, n_jobs=None):
    out = SweepResult()
    for r in ordered_map(_run, jobs, n_jobs):
        out.merge(r)
    return out


def bound_sweep(grid_kmax=3, grid=DEFAULT_GRID, uniform_k=4, random_count=100_000,
                random_kmax=6, seed=0, jobs=None):
    """The standard sweep: arity <= grid_kmax on a bias grid, every
    ``uniform_k``-ary function at uniform bias, and random (f, mu) draws."""
    jobs_list = []
    if grid_kmax:
        jobs_list += grid_jobs(grid_kmax, grid)
    if uniform_k:
        jobs_list += uniform_jobs(uniform_k)
    if random_count:
        jobs_list += random_jobs(random_count, random_kmax, seed)
    return run_jobs(jobs_list, jobs)
