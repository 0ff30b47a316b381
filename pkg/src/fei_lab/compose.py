"""Disjoint composition, the tensor and composition identities, amplification.

A composition ``f(x^1, ..., x^k) = F(g_1(x^1), ..., g_k(x^k))`` places block
``i`` on the coordinates following blocks ``1..i-1``, low bits first.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from fei_lab.boolfn import (
    EPS_BIAS,
    BiasVector,
    RealTable,
    TruthTable,
    as_bias,
    majority,
    mean,
)
from fei_lab.fei import BOUND_SLACK, DENOM_TOL
from fei_lab.fourier import biased_transform
from fei_lab.measures import (
    biased_entropy,
    phi,
    spectral_entropy_ge1,
    total_influence,
    uniform_entropy,
    variance,
)

DIRECT_MAX_ARITY = 16
IDENTITY_TOL = 1e-9


@dataclass
class CompositionSpec:
    outer: TruthTable
    inner: list
    biases: BiasVector = None

    def __post_init__(self):
        if len(self.inner) != self.outer.n:
            raise ValueError(f"outer arity {self.outer.n} needs {self.outer.n} inner functions, got {len(self.inner)}")
        self.biases = as_bias(self.biases, self.total_arity)

    @property
    def total_arity(self):
        return sum(g.n for g in self.inner)

    def offsets(self):
        out, off = [], 0
        for g in self.inner:
            out.append(off)
            off += g.n
        return out

    def block_biases(self, i):
        off = self.offsets()[i]
        return self.biases.block(off, off + self.inner[i].n)

    def to_json(self):
        return {
            "outer": self.outer.to_json(),
            "inner": [g.to_json() for g in self.inner],
            "mu": [float(m) for m in self.biases.mu],
        }

    @classmethod
    def from_json(cls, obj, resolve=None):
        """Build from JSON; tables are ``{"n", "hex"}`` objects or names passed to ``resolve``."""

        def table(x):
            if isinstance(x, str):
                if resolve is None:
                    raise ValueError(f"cannot resolve gate name {x!r}")
                return resolve(x)
            return TruthTable.from_json(x)

        outer = table(obj["outer"])
        inner = [table(g) for g in obj["inner"]]
        mu = obj.get("mu", "uniform")
        return cls(outer, inner, None if mu == "uniform" else BiasVector(mu))


def compose(spec):
    """Dense table of the composition; total arity at most 24."""
    n = spec.total_arity
    if n > 24:
        raise ValueError(f"composed arity {n} exceeds 24; use the closed forms instead")
    a = np.arange(1 << n, dtype=np.int64)
    idx = np.zeros(1 << n, dtype=np.int64)
    for i, (g, off) in enumerate(zip(spec.inner, spec.offsets())):
        gv = g.values[(a >> off) & ((1 << g.n) - 1)]
        idx |= (gv == -1).astype(np.int64) << i
    return TruthTable(spec.outer.values[idx], n)


def eta_biases(spec):
    """Means of the inner functions under their block biases."""
    eta = np.array([mean(g, spec.block_biases(i)) for i, g in enumerate(spec.inner)])
    bad = np.flatnonzero(np.abs(eta) > 1.0 - EPS_BIAS)
    if bad.size:
        raise ValueError(f"inner function {int(bad[0]) + 1} is constant under its biases")
    return BiasVector(eta)


def normalized_lift(g, mu=None):
    """``(g - E[g]) / sqrt(Var[g])``."""
    mu = as_bias(mu, g.n)
    v = g.as_float()
    w = mu.weights()
    m = float(np.dot(w, v))
    var = float(np.dot(w, (v - m) ** 2))
    if var <= DENOM_TOL:
        raise ValueError("cannot normalize a function with zero variance")
    return RealTable((v - m) / math.sqrt(var), g.n)


def tensor_product(tables):
    """Product of real functions on consecutive disjoint blocks."""
    out = np.ones(1)
    n = 0
    for t in tables:
        out = np.outer(t.as_float(), out).reshape(-1)
        n += t.n
    return RealTable(out, n)


@dataclass
class IdentityCheck:
    name: str
    direct: float
    closed_form: float

    @property
    def residual(self):
        return abs(self.direct - self.closed_form)

    def holds(self, tol=IDENTITY_TOL):
        return self.residual <= tol


def verify_tensor_identities(factors, mu=None):
    """Both sides of the entropy and influence identities for a disjoint product.

    ``factors`` are RealTables on consecutive blocks; ``mu`` covers all of
    them.  Entropy here sums over every subset (empty one included).
    """
    n = sum(t.n for t in factors)
    mu = as_bias(mu, n)
    prod = tensor_product(factors)
    s = biased_transform(prod, mu)
    H_direct, I_direct = biased_entropy(s), total_influence(s)
    Hs, Is, M2 = [], [], []
    off = 0
    for t in factors:
        b = mu.block(off, off + t.n)
        off += t.n
        st = biased_transform(t, b)
        Hs.append(biased_entropy(st))
        Is.append(total_influence(st))
        M2.append(float(np.sum(st.coeffs ** 2)))
    H_closed = I_closed = 0.0
    for i in range(len(factors)):
        rest = math.prod(M2[:i] + M2[i + 1:])
        H_closed += Hs[i] * rest
        I_closed += Is[i] * rest
    return [IdentityCheck("entropy", H_direct, H_closed), IdentityCheck("influence", I_direct, I_closed)]


@dataclass
class InnerMeasures:
    mean: float
    var: float
    inf: float
    h_ge1: float


def inner_measures(spec):
    out = []
    for i, g in enumerate(spec.inner):
        s = biased_transform(g, spec.block_biases(i))
        out.append(InnerMeasures(s[0], variance(s), total_influence(s), spectral_entropy_ge1(s)))
    return out


@dataclass
class ClosedForm:
    """Composed measures from the outer spectrum and the inner measures."""

    eta: BiasVector
    outer_h_ge1: float
    outer_inf: float
    outer_var: float
    h_ge1: float
    inf: float
    var: float
    mean: float
    # sum_S F(S)^2 sum_{i in S} H_i / Var_i
    inner_entropy_sum: float
    inner: list = field(default_factory=list)


def closed_form_measures(outer, inner, eta=None):
    """Composition measures from ``outer``'s eta-biased spectrum.

    ``inner`` is a list of InnerMeasures; ``eta`` defaults to their means.
    """
    if eta is None:
        eta = BiasVector([m.mean for m in inner])
    for i, m in enumerate(inner):
        if m.var <= DENOM_TOL:
            raise ValueError(f"inner function {i + 1} is constant under its biases")
    s = biased_transform(outer, eta)
    k = outer.n
    sq = s.coeffs ** 2
    a = np.arange(1 << k)
    h_per = np.array([m.h_ge1 / m.var for m in inner])
    i_per = np.array([m.inf / m.var for m in inner])
    hsum = np.zeros(1 << k)
    isum = np.zeros(1 << k)
    for i in range(k):
        inS = ((a >> i) & 1).astype(bool)
        hsum[inS] += h_per[i]
        isum[inS] += i_per[i]
    extra = float(np.dot(sq, hsum))
    outer_h = spectral_entropy_ge1(s)
    return ClosedForm(
        eta=eta,
        outer_h_ge1=outer_h,
        outer_inf=total_influence(s),
        outer_var=variance(s),
        h_ge1=outer_h + extra,
        inf=float(np.dot(sq, isum)),
        var=variance(s),
        mean=s[0],
        inner_entropy_sum=extra,
        inner=list(inner),
    )


def composition_identities(spec):
    """Direct vs closed-form entropy, influence and variance of the composition."""
    if spec.total_arity > DIRECT_MAX_ARITY:
        raise ValueError(f"direct side limited to total arity {DIRECT_MAX_ARITY}")
    eta = eta_biases(spec)
    cf = closed_form_measures(spec.outer, inner_measures(spec), eta)
    s = biased_transform(compose(spec), spec.biases)
    return [
        IdentityCheck("entropy", spectral_entropy_ge1(s), cf.h_ge1),
        IdentityCheck("influence", total_influence(s), cf.inf),
        IdentityCheck("variance", variance(s), cf.var),
    ]


def support_partition(spec):
    """Squared spectral mass of the composition grouped by the blocks each subset touches.

    Returns ``(mass, outer_sq)`` arrays indexed by subsets of ``[k]``; the
    composition theorem's proof predicts they agree for nonempty subsets.
    """
    eta = eta_biases(spec)
    s = biased_transform(compose(spec), spec.biases)
    n, k = spec.total_arity, spec.outer.n
    U = np.arange(1 << n, dtype=np.int64)
    group = np.zeros(1 << n, dtype=np.int64)
    for i, (g, off) in enumerate(zip(spec.inner, spec.offsets())):
        touched = ((U >> off) & ((1 << g.n) - 1)) != 0
        group |= touched.astype(np.int64) << i
    mass = np.bincount(group, weights=s.coeffs ** 2, minlength=1 << k)
    outer_sq = biased_transform(spec.outer, eta).coeffs ** 2
    return mass, outer_sq


@dataclass
class TheoremCheck:
    C: float
    inner_hypotheses: list
    outer_hypothesis: bool
    conclusion: bool
    induction_step: bool
    h_ge1: float
    gap: float

    @property
    def hypotheses(self):
        return all(self.inner_hypotheses) and self.outer_hypothesis

    @property
    def implication_holds(self):
        """False only if every hypothesis holds and the conclusion fails."""
        return self.conclusion or not self.hypotheses


def composition_theorem_check(spec, C, direct=None):
    """Evaluate the composition theorem's hypotheses and conclusion at factor C.

    The conclusion is computed on the dense composition when its arity allows
    (``direct=None`` picks automatically), otherwise from the closed forms.
    """
    inner = inner_measures(spec)
    eta = eta_biases(spec)
    cf = closed_form_measures(spec.outer, inner, eta)
    hyp_inner = [m.h_ge1 <= C * (m.inf - m.var) + BOUND_SLACK for m in inner]
    hyp_outer = cf.outer_h_ge1 <= C * (cf.outer_inf - cf.outer_var) + BOUND_SLACK
    if direct is None:
        direct = spec.total_arity <= DIRECT_MAX_ARITY
    if direct:
        s = biased_transform(compose(spec), spec.biases)
        h, inf, var = spectral_entropy_ge1(s), total_influence(s), variance(s)
    else:
        h, inf, var = cf.h_ge1, cf.inf, cf.var
    conclusion = h <= C * (inf - var) + BOUND_SLACK
    induction = True
    if all(hyp_inner):
        induction = inf >= cf.outer_inf + cf.inner_entropy_sum / C - BOUND_SLACK
    return TheoremCheck(C, hyp_inner, hyp_outer, conclusion, induction, h, inf - var)


# amplification


@dataclass
class AmplifyStats:
    entropy: float
    influence: float
    level: int = 0
    degenerate: bool = False

    @property
    def ratio(self):
        return self.entropy / self.influence if self.influence > DENOM_TOL else None


def stats_of(f):
    """Uniform entropy and influence of a truth table as level-0 AmplifyStats."""
    s = biased_transform(f, None)
    return AmplifyStats(uniform_entropy(s), total_influence(s), 0)


def amplify_closed_form(F_stats, g_stats, m):
    """Entropy and influence of ``f_m = F(f_{m-1}, ..., f_{m-1})``, ``f_0 = g``.

    Both functions must be balanced.  When ``Inf[F] = 1`` the geometric sum
    degenerates to ``m`` and the result is flagged ``degenerate``.
    """
    if m < 0:
        raise ValueError("level must be non-negative")
    I = F_stats.influence
    Im = I ** m
    if abs(I - 1.0) <= DENOM_TOL:
        return AmplifyStats(g_stats.entropy + m * F_stats.entropy, g_stats.influence, m, True)
    H = g_stats.entropy * Im + F_stats.entropy * (Im - 1.0) / (I - 1.0)
    return AmplifyStats(H, g_stats.influence * Im, m)


def amplify_ratio(F_stats, m):
    """``H[f_m] / Inf[f_m]`` for ``g = F``."""
    H, I = F_stats.entropy, F_stats.influence
    if I <= 1.0:
        raise ValueError("amplification ratio needs Inf[F] > 1")
    return H / I + H / (I * (I - 1.0)) - H / (I ** (m + 1) * (I - 1.0))


def amplify_ratio_limit(F_stats):
    """``lim_m H[f_m] / Inf[f_m]`` for ``g = F``: ``H/I + H/(I (I-1))``."""
    H, I = F_stats.entropy, F_stats.influence
    if I <= 1.0:
        raise ValueError("amplification limit needs Inf[F] > 1")
    return H / I + H / (I * (I - 1.0))


def amplify_direct(F, g, m):
    """Dense table of ``f_m``; feasible only for small arities."""
    f = g
    for _ in range(m):
        f = compose(CompositionSpec(F, [f] * F.n))
    return f


def amplify_recursive(F, g, m):
    """Stats of ``f_m`` by applying the composition closed forms level by level."""
    s = biased_transform(g, None)
    cur = InnerMeasures(s[0], variance(s), total_influence(s), spectral_entropy_ge1(s))
    for _ in range(m):
        cf = closed_form_measures(F, [cur] * F.n)
        cur = InnerMeasures(cf.mean, cf.var, cf.inf, cf.h_ge1)
    return AmplifyStats(cur.h_ge1 + phi(cur.mean), cur.inf, m)


# the explicit six-variable function


_G_TERMS = [
    ((1, False), (2, True), (3, True)),
    ((1, True), (4, True)),
    ((1, True), (2, False), (5, True), (6, True)),
    ((1, True), (2, True), (3, True)),
    ((1, True), (2, True), (5, True)),
]

_G_TERMS_PRINTED = [
    ((1, False), (2, True), (3, True)),
    ((1, True), (2, False), (4, True)),
    ((1, True), (2, False), (5, True), (6, True)),
    ((1, True), (2, True), (3, True)),
    ((1, True), (2, True), (4, True), (5, True)),
]


def dnf_table(n, terms):
    """Truth table of a DNF; a term is a tuple of ``(variable, positive)`` literals.

    A variable is TRUE when its coordinate is ``-1``; a TRUE output is ``-1``.
    """
    a = np.arange(1 << n)
    out = np.zeros(1 << n, dtype=bool)
    for term in terms:
        t = np.ones(1 << n, dtype=bool)
        for var, positive in term:
            true = ((a >> (var - 1)) & 1).astype(bool)
            t &= true if positive else ~true
        out |= t
    return TruthTable(np.where(out, -1, 1).astype(np.int8), n)


def paper_g():
    """Balanced six-variable DNF with influence 13/8 and entropy about 3.924341.

    ``(~x1 & x2 & x3) | (x1 & x4) | (x1 & ~x2 & x5 & x6) | (x1 & x2 & x3) | (x1 & x2 & x5)``
    """
    return dnf_table(6, _G_TERMS)


def paper_g_as_printed():
    """The DNF ``(~x1&x2&x3) | (x1&~x2&x4) | (x1&~x2&x5&x6) | (x1&x2&x3) | (x1&x2&x4&x5)``.

    Not balanced (28 of 64 points TRUE); kept for reference next to :func:`paper_g`.
    """
    return dnf_table(6, _G_TERMS_PRINTED)


def paper_g_terms():
    return [tuple(t) for t in _G_TERMS]


def maj3():
    return majority(3)
