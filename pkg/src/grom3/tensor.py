"""Dense matrix and tensor kernels.

Tensors are plain :class:`numpy.ndarray` objects. The vectorization used
throughout the package lets the *first* mode vary fastest, i.e. the entry
``t[c1, ..., cp]`` lands at flat position ``c1 + c2*d1 + ... + cp*d1*...*d_{p-1}``
(0-based), which is numpy's Fortran order.

:func:`kronecker` and :func:`khatri_rao` follow the usual block definition
(the right operand's row index varies fastest). To get a product whose rows
follow the first-fastest vectorization, pass the factors in reverse order;
:func:`kronecker_chain` and :func:`khatri_rao_chain` do that when
``first_fastest=True``.
"""
from __future__ import annotations

from functools import reduce

import numpy as np

from .errors import ColumnMismatch, DimGuard

#: Largest number of entries any probability tensor may have.
MAX_TENSOR_ENTRIES = 10**8


def guard_size(shape, limit=MAX_TENSOR_ENTRIES):
    """Raise :class:`DimGuard` if a tensor of ``shape`` would exceed ``limit`` entries."""
    total = 1
    for s in shape:
        total *= int(s)
        if total > limit:
            raise DimGuard(f"tensor of shape {tuple(shape)} exceeds {limit} entries")
    return total


def _as_matrix(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.size == 0:
        raise ValueError("expected a non-empty 2-D array")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def kronecker(a, b):
    """Kronecker product ``a ⊗ b`` with block ``(i, j)`` equal to ``a[i, j] * b``."""
    a = _as_matrix(a)
    b = _as_matrix(b)
    guard_size((a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]))
    return np.kron(a, b)


def khatri_rao(c, d):
    """Column-wise Kronecker product.

    Column ``k`` of the result is ``kron(c[:, k], d[:, k])``.

    Raises
    ------
    ColumnMismatch
        If ``c`` and ``d`` have a different number of columns.
    """
    c = _as_matrix(c)
    d = _as_matrix(d)
    if c.shape[1] != d.shape[1]:
        raise ColumnMismatch(
            f"khatri_rao needs equal column counts, got {c.shape[1]} and {d.shape[1]}"
        )
    guard_size((c.shape[0] * d.shape[0], c.shape[1]))
    return (c[:, None, :] * d[None, :, :]).reshape(-1, c.shape[1])


def kronecker_chain(mats, first_fastest=False):
    mats = list(mats)
    if first_fastest:
        mats = mats[::-1]
    return reduce(kronecker, mats)


def khatri_rao_chain(mats, first_fastest=False):
    mats = list(mats)
    if first_fastest:
        mats = mats[::-1]
    return reduce(khatri_rao, mats)


def vec_tensor(t):
    """Flatten a tensor with the first index varying fastest."""
    return np.asarray(t).reshape(-1, order="F")


def unvec_tensor(v, shape):
    """Inverse of :func:`vec_tensor`."""
    return np.asarray(v).reshape(tuple(shape), order="F")


def vec_index(c, shape):
    """Flat position of the (0-based) multi-index ``c`` under :func:`vec_tensor`."""
    pos, stride = 0, 1
    for ci, di in zip(c, shape):
        pos += int(ci) * stride
        stride *= int(di)
    return pos


def check_prob_tensor(t, atol=1e-10):
    """Validate that ``t`` is a probability tensor and return it as an array."""
    t = np.asarray(t, dtype=float)
    guard_size(t.shape)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("probability tensor entries must be finite and nonnegative")
    if abs(t.sum() - 1.0) > atol:
        raise ValueError(f"probability tensor sums to {t.sum()!r}, not 1")
    return t


def numeric_column_rank(m, tol=1e-8):
    """Count singular values above ``tol * sigma_max``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))
