"""Spectral entropy, influence and variance of Boolean and real functions.

All logarithms are base 2.  Zero coefficients are skipped in entropy sums,
which is the ``phi(0) = 0`` convention.
"""

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from fei_lab.boolfn import TruthTable, as_bias, discrete_derivative
from fei_lab.fourier import biased_transform, popcounts


def phi(t):
    """``t^2 log2(1/t^2)`` with ``phi(0) = 0``."""
    t2 = float(t) * float(t)
    if t2 == 0.0:
        return 0.0
    return -t2 * math.log2(t2)


def _log_sigma2_by_mask(mu):
    ls = np.log2(mu.sigma2)
    out = np.zeros(1 << mu.n)
    for i in range(mu.n):
        r = out.reshape(-1, 2, 1 << i)
        r[:, 1, :] += ls[i]
    return out


def _entropy_terms(s):
    c = s.coeffs
    sq = c * c
    nz = c != 0.0
    logs = _log_sigma2_by_mask(s.biases)
    return np.where(nz, sq * (logs - np.log2(np.where(nz, sq, 1.0))), 0.0)


def entropy_terms(s):
    """Per-subset terms ``c_S^2 log2(prod_{i in S} sigma_i^2 / c_S^2)``."""
    return _entropy_terms(s)


def spectral_entropy_ge1(s):
    """Biased spectral entropy of the degree >= 1 part; terms may be negative."""
    return float(_entropy_terms(s)[1:].sum())


def biased_entropy(s):
    """Biased entropy summed over every subset including the empty one.

    For a constant ``c`` this is ``phi(c)``.
    """
    return float(_entropy_terms(s).sum())


def uniform_entropy(s):
    if not s.biases.is_uniform():
        raise ValueError("uniform entropy needs a spectrum taken against uniform biases")
    return biased_entropy(s)


def total_influence(s):
    return float(np.dot(popcounts(s.n), s.coeffs ** 2))


def influence_i(s, i):
    if not 1 <= i <= s.n:
        raise ValueError(f"coordinate {i} outside 1..{s.n}")
    a = np.arange(len(s))
    return float(np.sum(np.where((a >> (i - 1)) & 1, s.coeffs ** 2, 0.0)))


def influences(s):
    return np.array([influence_i(s, i) for i in range(1, s.n + 1)])


def variance(s):
    return float(np.sum(s.coeffs[1:] ** 2))


def influence_combinatorial(f, mu, i):
    """Expected variance along coordinate ``i`` over a random restriction of the rest."""
    mu = as_bias(mu, f.n)
    if not 1 <= i <= f.n:
        raise ValueError(f"coordinate {i} outside 1..{f.n}")
    h = 1 << (i - 1)
    v = f.as_float().reshape(-1, 2, h)
    w = mu.weights().reshape(-1, 2, h)
    ry = (w[:, 0, :] + w[:, 1, :]).reshape(-1)
    a, b = v[:, 0, :].reshape(-1), v[:, 1, :].reshape(-1)
    p = (1.0 + mu.mu[i - 1]) / 2.0
    q = 1.0 - p
    return float(np.dot(ry, p * q * (a - b) ** 2))


def flip_influence(f, i):
    """``Pr[f(x) != f(x with x_i flipped)]`` under uniform measure, as a Fraction."""
    if not 1 <= i <= f.n:
        raise ValueError(f"coordinate {i} outside 1..{f.n}")
    v = f.values.reshape(-1, 2, 1 << (i - 1))
    diff = int(np.count_nonzero(v[:, 0, :] != v[:, 1, :]))
    return Fraction(2 * diff, 1 << f.n)


def derivative_variance(f, mu, j):
    """``sigma_j^2 Var_mu[D_{x_j} f]`` computed from the derivative table."""
    mu = as_bias(mu, f.n)
    d = discrete_derivative(f, j).as_float()
    w = mu.weights()
    m1 = float(np.dot(w, d))
    return float(mu.sigma2[j - 1]) * float(np.dot(w, (d - m1) ** 2))


def derivative_variance_fourier(s, j):
    """``sum_{S containing j, |S| >= 2} c_S^2``."""
    a = np.arange(len(s))
    mask = (((a >> (j - 1)) & 1) == 1) & (popcounts(s.n) >= 2)
    return float(np.sum(s.coeffs[mask] ** 2))


@dataclass
class MeasureReport:
    mean: float
    variance: float
    total_influence: float
    per_coordinate_influence: list
    spectral_entropy_ge1: float
    uniform_entropy: float | None
    poincare_gap: float
    influence_discrepancy: float | None = None
    mu: list = field(default_factory=list)

    def to_json(self):
        return asdict(self)


def measure_report(f, mu=None):
    mu = as_bias(mu, f.n)
    s = biased_transform(f, mu)
    infs = influences(s)
    inf = total_influence(s)
    var = variance(s)
    disc = None
    if isinstance(f, TruthTable):
        comb = np.array([influence_combinatorial(f, mu, i) for i in range(1, f.n + 1)])
        disc = float(np.max(np.abs(comb - infs))) if f.n else 0.0
    return MeasureReport(
        mean=s[0],
        variance=var,
        total_influence=inf,
        per_coordinate_influence=[float(x) for x in infs],
        spectral_entropy_ge1=spectral_entropy_ge1(s),
        uniform_entropy=uniform_entropy(s) if mu.is_uniform() else None,
        poincare_gap=inf - var,
        influence_discrepancy=disc,
        mu=[float(m) for m in mu.mu],
    )


# exact arithmetic for uniform entropy


def integer_walsh(f):
    """Integer Walsh-Hadamard sums ``2^n * fhat(S)`` of a truth table."""
    v = f.values.astype(np.int64).copy()
    for i in range(f.n):
        r = v.reshape(-1, 2, 1 << i)
        a = r[:, 0, :].copy()
        b = r[:, 1, :].copy()
        r[:, 0, :] = a + b
        r[:, 1, :] = a - b
    return v


def _factor(m):
    out = {}
    d = 2
    while d * d <= m:
        while m % d == 0:
            out[d] = out.get(d, 0) + 1
            m //= d
        d += 1
    if m > 1:
        out[m] = out.get(m, 0) + 1
    return out


def exact_uniform_entropy(f):
    """Uniform spectral entropy in closed form.

    Returns ``{1: r, p: c_p, ...}`` meaning ``r + sum_p c_p log2(p)`` over odd
    primes ``p``, with all coefficients exact Fractions.  Two truth tables have
    equal entropy iff these dictionaries are equal.
    """
    n = f.n
    total = 4 ** n
    out = {1: Fraction(0)}
    for m in integer_walsh(f):
        m = abs(int(m))
        if m == 0:
            continue
        w = Fraction(m * m, total)
        # log2(4^n / m^2) = 2n - 2 log2(m)
        out[1] += w * 2 * n
        for p, e in _factor(m).items():
            if p == 2:
                out[1] -= w * 2 * e
            else:
                out[p] = out.get(p, Fraction(0)) - w * 2 * e
    return {k: v for k, v in out.items() if v != 0 or k == 1}


def exact_value(form):
    return float(form[1]) + sum(float(c) * math.log2(p) for p, c in form.items() if p != 1)
