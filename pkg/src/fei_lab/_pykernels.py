"""Numpy implementation of the hot kernels.

Every routine works on a batch: ``values`` has shape ``(B, 2**n)`` and
``mu`` has shape ``(B, n)``.  Index ``a`` of a row encodes the point whose
coordinate ``i`` is ``-1`` iff bit ``i`` of ``a`` is set.  The compiled
module ``_ckernels`` exposes the same functions with the same semantics.
"""

import numpy as np

LN2 = float(np.log(2.0))


def _check(values, mu):
    values = np.ascontiguousarray(values, dtype=np.float64)
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    if values.ndim != 2 or mu.ndim != 2 or values.shape[0] != mu.shape[0]:
        raise ValueError("expected values (B, 2**n) and mu (B, n)")
    if values.shape[1] != 1 << mu.shape[1]:
        raise ValueError("row length must be 2**n")
    return values, mu


def transform_batch(values, mu):
    """Forward biased transform by per-coordinate butterflies, O(n 2^n) per row."""
    v, mu = _check(values, mu)
    v = v.copy()
    B, n = mu.shape
    p = (1.0 + mu) / 2.0
    q = (1.0 - mu) / 2.0
    s = np.sqrt(1.0 - mu * mu)
    for i in range(n):
        w = v.reshape(B, -1, 2, 1 << i)
        a = w[:, :, 0, :].copy()
        b = w[:, :, 1, :]
        pi = p[:, i, None, None]
        qi = q[:, i, None, None]
        si = s[:, i, None, None]
        w[:, :, 0, :] = pi * a + qi * b
        w[:, :, 1, :] = si * (a - b) / 2.0
    return v


def inverse_batch(coeffs, mu):
    """Inverse of :func:`transform_batch`."""
    v, mu = _check(coeffs, mu)
    v = v.copy()
    B, n = mu.shape
    p = (1.0 + mu) / 2.0
    q = (1.0 - mu) / 2.0
    s = np.sqrt(1.0 - mu * mu)
    for i in range(n):
        w = v.reshape(B, -1, 2, 1 << i)
        m = w[:, :, 0, :].copy()
        diff = 2.0 * w[:, :, 1, :] / s[:, i, None, None]
        w[:, :, 0, :] = m + q[:, i, None, None] * diff
        w[:, :, 1, :] = m - p[:, i, None, None] * diff
    return v


def weights_batch(mu):
    """Product-measure probabilities of every point, shape (B, 2**n)."""
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    B, n = mu.shape
    w = np.ones((B, 1 << n))
    for i in range(n):
        r = w.reshape(B, -1, 2, 1 << i)
        r[:, :, 0, :] *= ((1.0 + mu[:, i]) / 2.0)[:, None, None]
        r[:, :, 1, :] *= ((1.0 - mu[:, i]) / 2.0)[:, None, None]
    return w


def _log_sigma2_by_mask(mu):
    B, n = mu.shape
    ls = np.log2(1.0 - mu * mu)
    out = np.zeros((B, 1 << n))
    for i in range(n):
        r = out.reshape(B, -1, 2, 1 << i)
        r[:, :, 1, :] += ls[:, i, None, None]
    return out


def _popcount(N):
    a = np.arange(N, dtype=np.int64)
    c = np.zeros(N, dtype=np.int64)
    while a.any():
        c += a & 1
        a >>= 1
    return c


def sweep_batch(values, mu, zero_tol):
    """Per-row measures plus the worst per-term entropy bound excess.

    Returns a dict of arrays: ``mean``, ``var``, ``inf``, ``h_ge1`` (shape B),
    ``dvar`` (B, n) with ``dvar[:, j] = sigma_j**2 * Var[D_j f]`` computed from
    the table, and ``term_excess``/``term_mask``/``term_j``: the maximum over
    nonempty S with ``|c_S| > zero_tol`` and ``j`` in S of
    ``c_S**2 log2(prod sigma**2 / c_S**2) - 4**n / ln 2 * dvar[j]``
    (``-inf``/``-1``/``-1`` when no pair qualifies).
    """
    v, mu = _check(values, mu)
    B, n = mu.shape
    N = 1 << n
    c = transform_batch(v, mu)
    sq = c * c
    pc = _popcount(N)
    res = {
        "mean": c[:, 0].copy(),
        "var": sq[:, 1:].sum(axis=1),
        "inf": (sq * pc).sum(axis=1),
    }
    L = _log_sigma2_by_mask(mu)
    nz = c != 0.0
    nz[:, 0] = False
    safe = np.where(nz, sq, 1.0)
    terms = np.where(nz, sq * (L - np.log2(safe)), 0.0)
    res["h_ge1"] = terms.sum(axis=1)

    W = weights_batch(mu)
    A = np.arange(N)
    sig2 = 1.0 - mu * mu
    dvar = np.zeros((B, n))
    for j in range(n):
        a0 = A[(A >> j) & 1 == 0]
        a1 = a0 | (1 << j)
        d = (v[:, a0] - v[:, a1]) / 2.0
        w = W[:, a0] + W[:, a1]
        e1 = (w * d).sum(axis=1)
        e2 = (w * d * d).sum(axis=1)
        dvar[:, j] = np.maximum(sig2[:, j] * (e2 - e1 * e1), 0.0)
    res["dvar"] = dvar

    scale = float(4 ** n) / LN2
    valid = np.abs(c) > zero_tol
    valid[:, 0] = False
    excess = np.full(B, -np.inf)
    emask = np.full(B, -1, dtype=np.int64)
    ej = np.full(B, -1, dtype=np.int64)
    for j in range(n):
        has_j = ((A >> j) & 1).astype(bool)
        ok = valid & has_j[None, :]
        cand = np.where(ok, terms - scale * dvar[:, j, None], -np.inf)
        best = cand.argmax(axis=1)
        val = cand[np.arange(B), best]
        upd = val > excess
        excess[upd] = val[upd]
        emask[upd] = best[upd]
        ej[upd] = j
    res["term_excess"] = excess
    res["term_mask"] = emask
    res["term_j"] = ej
    return res
