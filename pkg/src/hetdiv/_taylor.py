"""Truncated power-series arithmetic on batches of coefficient arrays.

A univariate series is stored along the last axis, ``c[..., k]`` being the
coefficient of ``h^k``; a bivariate series uses the last two axes.  All leading
axes are batch dimensions.
"""

import numpy as np


def exp_series(f):
    """Coefficients of ``exp(f(h))`` from those of ``f``."""
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    c = np.empty_like(f)
    c[..., 0] = np.exp(f[..., 0])
    for m in range(1, n):
        k = np.arange(1, m + 1)
        c[..., m] = np.sum(k * f[..., 1:m + 1] * c[..., m - 1::-1][..., :m], axis=-1) / m
    return c


def reciprocal_series(f):
    """Coefficients of ``1 / f(h)``; requires ``f[..., 0] != 0``."""
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    r = np.empty_like(f)
    inv0 = 1.0 / f[..., 0]
    r[..., 0] = inv0
    for m in range(1, n):
        r[..., m] = -inv0 * np.sum(f[..., 1:m + 1] * r[..., m - 1::-1][..., :m], axis=-1)
    return r


def exp_series2(f):
    """Coefficients of ``exp(f(h1, h2))`` for a bivariate series ``f``."""
    f = np.asarray(f, dtype=float)
    ni, nj = f.shape[-2:]
    c = np.zeros_like(f)
    c[..., 0, :] = exp_series(f[..., 0, :])
    for i in range(1, ni):
        for j in range(nj):
            acc = 0.0
            for k in range(1, i + 1):
                for l in range(j + 1):
                    acc = acc + k * f[..., k, l] * c[..., i - k, j - l]
            c[..., i, j] = acc / i
    return c


def reciprocal_series2(f):
    """Coefficients of ``1 / f(h1, h2)`` for a bivariate series ``f``."""
    f = np.asarray(f, dtype=float)
    ni, nj = f.shape[-2:]
    r = np.zeros_like(f)
    inv0 = 1.0 / f[..., 0, 0]
    for i in range(ni):
        for j in range(nj):
            if i == 0 and j == 0:
                r[..., 0, 0] = inv0
                continue
            acc = 0.0
            for k in range(i + 1):
                for l in range(j + 1):
                    if k or l:
                        acc = acc + f[..., k, l] * r[..., i - k, j - l]
            r[..., i, j] = -inv0 * acc
    return r


def factorial_scale(n):
    """``[0!, 1!, ..., (n-1)!]`` as floats."""
    out = np.ones(n)
    for k in range(1, n):
        out[k] = out[k - 1] * k
    return out
