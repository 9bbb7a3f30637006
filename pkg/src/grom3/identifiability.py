"""Checkers for the identifiability conditions and moment-based recovery of alpha.

The rank conditions all concern Khatri-Rao products of column-stochastic
tables. Adding a column-stochastic factor can never lower the column rank of
such a product (summing out the new factor gives back the old product), so a
group can be split into three sets with full-rank products if and only if it
contains three pairwise disjoint *minimal* full-rank subsets; any leftover
variables can be appended to one of them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import tensor
from .errors import GroupTooSmall, NotDirichletConsistent
from .model import ModelDims, core_tensor

#: Groups larger than this are split greedily instead of exhaustively.
EXHAUSTIVE_LIMIT = 12
#: Khatri-Rao products with more rows are ranked through their Gram matrix.
DIRECT_RANK_ROWS = 2**14


@dataclass
class IdentifiabilityReport:
    theorem: str
    satisfied: bool
    witnesses: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def __post_init__(self):
        if self.satisfied != (not self.failures):
            raise ValueError("satisfied must be true exactly when there are no failures")

    def render(self):
        lines = [f"theorem: {self.theorem}", f"satisfied: {str(self.satisfied).lower()}"]
        for key in sorted(self.witnesses, key=str):
            lines.append(f"witness {key}: {self.witnesses[key]}")
        lines.extend(f"failure: {msg}" for msg in self.failures)
        return "\n".join(lines)


def _report(theorem, witnesses, failures):
    return IdentifiabilityReport(theorem, not failures, witnesses, failures)


def khatri_rao_rank(mats, tol=1e-8):
    """Numeric column rank of the Khatri-Rao product of ``mats``."""
    rows = int(np.prod([m.shape[0] for m in mats]))
    if rows <= DIRECT_RANK_ROWS:
        return tensor.numeric_column_rank(tensor.khatri_rao_chain(mats), tol)
    # Gram(A kr B) = Gram(A) * Gram(B) elementwise
    gram = np.ones((mats[0].shape[1],) * 2)
    for m in mats:
        gram = gram * (m.T @ m)
    ev = np.clip(np.linalg.eigvalsh(gram), 0, None)
    sv = np.sqrt(ev)
    return int(np.sum(sv > tol * sv.max())) if sv.max() > 0 else 0


def _columns_distinct(lam, tol):
    """False when every column of ``lam`` is (numerically) the same."""
    return bool(np.max(np.abs(lam - lam[:, :1])) > tol)


def _three_disjoint(members, is_full):
    """Three disjoint subsets of ``members`` each satisfying ``is_full``, or None.

    Exhaustive over minimal qualifying subsets when the group is small,
    greedy otherwise.
    """
    m = len(members)
    if m < 3:
        return None
    if m <= EXHAUSTIVE_LIMIT:
        minimal = []
        masks = sorted(range(1, 1 << m), key=lambda b: (bin(b).count("1"), b))
        for mask in masks:
            if any(mm & mask == mm for mm in minimal):
                continue
            subset = [members[i] for i in range(m) if mask >> i & 1]
            if is_full(subset):
                minimal.append(mask)
        for a, b, c in itertools.combinations(minimal, 3):
            if a & b == 0 and a & c == 0 and b & c == 0:
                used = a | b | c
                sets = [[members[i] for i in range(m) if x >> i & 1] for x in (a, b, c)]
                sets[0] += [members[i] for i in range(m) if not used >> i & 1]
                return sets
        return None
    return _greedy_three(members, is_full)


def _greedy_three(members, is_full):
    # largest single-variable capacity first
    order = sorted(members, key=lambda j: -is_full.capacity(j))
    sets, current = [], []
    for j in order:
        current.append(j)
        if is_full(current):
            sets.append(current)
            current = []
            if len(sets) == 3:
                break
    if len(sets) < 3:
        return None
    leftover = [j for j in members if not any(j in st for st in sets)]
    sets[0] = sets[0] + leftover
    return sets


class _RankOracle:
    def __init__(self, lambdas, K, tol):
        self.lambdas, self.K, self.tol = lambdas, K, tol

    def __call__(self, subset):
        return khatri_rao_rank([self.lambdas[j] for j in subset], self.tol) == self.K

    def capacity(self, j):
        return tensor.numeric_column_rank(self.lambdas[j], self.tol)


class _CardinalityOracle:
    def __init__(self, d, K):
        self.d, self.K = d, K

    def __call__(self, subset):
        return int(np.prod([self.d[j] for j in subset])) >= self.K

    def capacity(self, j):
        return self.d[j]


def check_theorem1(model, tol=1e-8):
    """Strict conditions: three full-rank tables per group, no constant table."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    witnesses, failures = {}, []
    part_a, part_b = True, True
    for g in range(model.G):
        mem = model.members(g)
        full = [int(j) for j in mem
                if tensor.numeric_column_rank(model.lambdas[j], tol) == model.K]
        witnesses[f"group {g} full-rank members"] = full
        if len(full) < 3:
            part_a = False
            failures.append(f"group {g} has {len(full)} full-rank members, needs 3")
    for j, lam in enumerate(model.lambdas):
        if model.K > 1 and not _columns_distinct(lam, tol):
            part_b = False
            failures.append(f"variable {j} has identical columns")
    witnesses["part a"] = part_a
    witnesses["part b"] = part_b
    return _report("theorem1", witnesses, failures)


def check_theorem2(model, tol=1e-8):
    """Relaxed conditions: each group splits into three sets with full-rank products.

    Raises
    ------
    GroupTooSmall
        If some group has fewer than three members.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    for g in range(model.G):
        if model.members(g).size < 3:
            raise GroupTooSmall(f"group {g} has {model.members(g).size} members")
    oracle = _RankOracle(model.lambdas, model.K, tol)
    witnesses, failures = {}, []
    for g in range(model.G):
        sets = _three_disjoint([int(j) for j in model.members(g)], oracle)
        if sets is None:
            failures.append(f"group {g} has no partition into three full-rank sets")
        else:
            witnesses[f"group {g} partition"] = sets
    for j, lam in enumerate(model.lambdas):
        if model.K > 1 and not _columns_distinct(lam, tol):
            failures.append(f"variable {j} has identical columns")
    return _report("theorem2", witnesses, failures)


def check_theorem3(dims: ModelDims, grouping):
    """Generic conditions: each group splits into three sets with prod d_j >= K."""
    s = np.asarray(grouping)
    oracle = _CardinalityOracle(list(dims.d), dims.K)
    witnesses, failures = {}, []
    for g in range(dims.G):
        members = [int(j) for j in np.flatnonzero(s == g)]
        sets = _three_disjoint(members, oracle)
        if sets is None:
            failures.append(f"group {g} cannot be split into three sets with prod d >= {dims.K}")
        else:
            witnesses[f"group {g} partition"] = sets
    return _report("theorem3", witnesses, failures)


def recover_alpha_from_core(phi, rtol=1e-6):
    """Recover Dirichlet parameters from a core tensor of joint moments.

    For profiles ``k != l`` and any tail ``t`` of the remaining indices, put
    ``a = alpha_k + m_k(t)`` and ``b = alpha_l + m_l(t)``. Then
    ``u = phi[k, k, t] / phi[k, l, t] = (a + 1) / b`` and
    ``v = phi[l, l, t] / phi[k, l, t] = (b + 1) / a``, which solve to
    ``a = (u + 1) / (uv - 1)`` and ``b = (v + 1) / (uv - 1)``. Estimates are
    averaged over all pairs and tails.

    Raises
    ------
    NotDirichletConsistent
        If some ``uv <= 1`` or ``core_tensor`` of the result differs from
        ``phi`` by more than ``rtol`` relative.
    """
    phi = np.asarray(phi, dtype=float)
    G = phi.ndim
    if G < 2:
        raise ValueError("need a core tensor with at least two modes")
    K = phi.shape[0]
    if any(dim != K for dim in phi.shape):
        raise ValueError("core tensor must be K x ... x K")
    if K < 2:
        raise ValueError("alpha is not determined by the moments when K = 1")
    sums = np.zeros(K)
    counts = np.zeros(K)
    for k, l in itertools.combinations(range(K), 2):
        for tail in itertools.product(range(K), repeat=G - 2):
            kl = phi[(k, l) + tail]
            if kl <= 0:
                raise NotDirichletConsistent(f"zero moment at {(k, l) + tail}")
            u = phi[(k, k) + tail] / kl
            v = phi[(l, l) + tail] / kl
            if not u * v > 1:
                raise NotDirichletConsistent(f"uv <= 1 for profiles ({k}, {l})")
            sums[k] += (u + 1) / (u * v - 1) - tail.count(k)
            sums[l] += (v + 1) / (u * v - 1) - tail.count(l)
            counts[k] += 1
            counts[l] += 1
    alpha = sums / counts
    if np.any(alpha <= 0):
        raise NotDirichletConsistent("recovered a non-positive alpha")
    back = core_tensor(alpha, G)
    if np.max(np.abs(back - phi) / np.abs(phi)) > rtol:
        raise NotDirichletConsistent("core tensor does not match any Dirichlet")
    return alpha
