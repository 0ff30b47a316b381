"""Exact mu-biased Fourier transform on the hypercube.

The basis functions are ``phi_S(x) = prod_{i in S} (x_i - mu_i) / sigma_i``
and the coefficient of ``S`` is ``E_mu[f * phi_S]``.  The fast path splits on
one coordinate at a time: with ``a = f(x_i=1)`` and ``b = f(x_i=-1)`` the
``x_i``-free part becomes ``p*a + q*b`` (``p = (1+mu_i)/2``, ``q = 1-p``) and
the ``x_i`` part becomes ``sigma_i*(a-b)/2``.
"""

import numpy as np

from fei_lab import kernels
from fei_lab.boolfn import BiasVector, RealTable, as_bias, iterated_derivative, mean

TAU_SPARSE = 1e-13
NAIVE_MAX_ARITY = 12


class Spectrum:
    """Dense coefficient array indexed by subset bitmask, with its basis biases."""

    __slots__ = ("_coeffs", "_biases")

    def __init__(self, coeffs, biases):
        arr = np.array(coeffs, dtype=np.float64).reshape(-1)
        biases = as_bias(biases, (arr.shape[0]).bit_length() - 1)
        if arr.shape[0] != 1 << biases.n:
            raise ValueError("coefficient array length must be 2**n")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        arr.flags.writeable = False
        self._coeffs = arr
        self._biases = biases

    @property
    def n(self):
        return self._biases.n

    @property
    def coeffs(self):
        return self._coeffs

    @property
    def biases(self):
        return self._biases

    def __getitem__(self, S):
        return float(self._coeffs[S])

    def __len__(self):
        return self._coeffs.shape[0]

    def to_sparse(self, tau=TAU_SPARSE):
        """``{mask: value}`` for every coefficient with ``|value| > tau``."""
        idx = np.flatnonzero(np.abs(self._coeffs) > tau)
        return {int(S): float(self._coeffs[S]) for S in idx}

    @classmethod
    def from_sparse(cls, n, coeffs, biases=None):
        arr = np.zeros(1 << n)
        for S, val in coeffs.items():
            if not 0 <= S < 1 << n:
                raise ValueError(f"mask {S} outside arity {n}")
            arr[S] = val
        return cls(arr, as_bias(biases, n))

    def to_json(self, tau=TAU_SPARSE):
        items = sorted(self.to_sparse(tau).items())
        return {
            "n": self.n,
            "mu": [float(m) for m in self._biases.mu],
            "coeffs": [[S, v] for S, v in items],
        }

    @classmethod
    def from_json(cls, obj):
        n = obj["n"]
        return cls.from_sparse(n, {int(S): float(v) for S, v in obj["coeffs"]}, obj["mu"])

    def __repr__(self):
        return f"Spectrum(n={self.n}, nonzero={len(self.to_sparse())})"


def popcounts(n):
    a = np.arange(1 << n)
    c = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        c += (a >> i) & 1
    return c


def biased_transform(f, mu=None):
    mu = as_bias(mu, f.n)
    c = kernels.transform_batch(f.as_float()[None, :], mu.mu[None, :])[0]
    return Spectrum(c, mu)


def basis_matrix(n, mu):
    """Matrix ``M[a, S] = phi_S(x(a))``; O(4^n) memory.

    Built as a Kronecker product of per-coordinate blocks
    ``[[1, phi_i(+1)], [1, phi_i(-1)]]`` with coordinate 1 innermost.
    """
    mu = as_bias(mu, n)
    M = np.ones((1, 1))
    for i in range(n):
        m, s = mu.mu[i], mu.sigma[i]
        block = np.array([[1.0, (1.0 - m) / s], [1.0, (-1.0 - m) / s]])
        M = np.kron(block, M)
    return M


def naive_transform(f, mu=None):
    """Reference transform straight from ``E_mu[f * phi_S]``; arity <= 12."""
    if f.n > NAIVE_MAX_ARITY:
        raise ValueError(f"naive transform limited to arity {NAIVE_MAX_ARITY}")
    mu = as_bias(mu, f.n)
    w = mu.weights() * f.as_float()
    return Spectrum(w @ basis_matrix(f.n, mu), mu)


def basis_function(S, mu):
    """``phi_S`` as a RealTable."""
    if not isinstance(mu, BiasVector):
        mu = BiasVector(mu)
    n = mu.n
    a = np.arange(1 << n)
    out = np.ones(1 << n)
    for i in range(n):
        if S >> i & 1:
            x = np.where((a >> i) & 1, -1.0, 1.0)
            out *= (x - mu.mu[i]) / mu.sigma[i]
    return RealTable(out, n)


def inverse_transform(s):
    v = kernels.inverse_batch(s.coeffs[None, :], s.biases.mu[None, :])[0]
    return RealTable(v, s.n)


def coefficient_via_derivative(f, mu, S):
    """``prod_{i in S} sigma_i * E_mu[D_{x^S} f]`` for nonempty S."""
    mu = as_bias(mu, f.n)
    if S <= 0:
        raise ValueError("coefficient via derivative needs a nonempty subset")
    d = iterated_derivative(f, S)
    scale = 1.0
    for i in range(f.n):
        if S >> i & 1:
            scale *= mu.sigma[i]
    return scale * mean(d, mu)


def project_min_degree(s, k):
    if not 0 <= k <= s.n:
        raise ValueError(f"degree {k} outside 0..{s.n}")
    c = np.where(popcounts(s.n) >= k, s.coeffs, 0.0)
    return Spectrum(c, s.biases)


def parseval_sides(f, mu=None):
    """``(sum_S coeff^2, E_mu[f^2])``."""
    mu = as_bias(mu, f.n)
    s = biased_transform(f, mu)
    v = f.as_float()
    return float(np.sum(s.coeffs ** 2)), float(np.dot(mu.weights(), v * v))
