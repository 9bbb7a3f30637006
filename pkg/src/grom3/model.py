"""Dimension-grouped mixed membership model: representation and exact evaluation.

Indexing is 0-based everywhere in the Python API: variable ``j`` belongs to
group ``s[j]`` in ``0..G-1``, categories of variable ``j`` are ``0..d_j-1``
and profiles are ``0..K-1``. Files on disk use 1-based codes (see
:mod:`grom3.io`).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from . import tensor
from .errors import CategoryOutOfRange, DimGuard, SameVariable

#: Largest K**G enumerated when evaluating response probabilities exactly.
MAX_CONFIGURATIONS = 10**7


@dataclass(frozen=True)
class ModelDims:
    p: int
    G: int
    K: int
    d: tuple

    def __post_init__(self):
        if not 1 <= self.G <= self.p:
            raise ValueError(f"need 1 <= G <= p, got G={self.G}, p={self.p}")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if len(self.d) != self.p or any(int(dj) < 2 for dj in self.d):
            raise ValueError("d must list p category counts, each >= 2")


def grouping_matrix(s, G):
    """The p x G binary matrix with a single one per row at column ``s[j]``."""
    s = np.asarray(s, dtype=int)
    L = np.zeros((len(s), G), dtype=int)
    L[np.arange(len(s)), s] = 1
    return L


def lcm_grouping(p):
    """All variables in one group (latent class model, CP decomposition)."""
    if p < 1:
        raise ValueError("p must be positive")
    return np.zeros(p, dtype=int)


def gom_grouping(p):
    """Every variable in its own group (grade of membership model, Tucker)."""
    if p < 1:
        raise ValueError("p must be positive")
    return np.arange(p, dtype=int)


def occupied_groups(s, G=None):
    return len(np.unique(np.asarray(s)))


@dataclass(frozen=True, eq=False)
class GroM3Model:
    """Grouping ``s``, conditional probability tables ``lambdas`` and Dirichlet ``alpha``.

    ``lambdas[j]`` is a ``d_j x K`` column-stochastic matrix. ``G`` is stored
    explicitly because some groups may be empty.
    """

    s: np.ndarray
    lambdas: tuple
    alpha: np.ndarray
    G: int

    def __init__(self, s, lambdas, alpha, G=None):
        s = np.array(s, dtype=int)
        lambdas = tuple(np.array(lam, dtype=float) for lam in lambdas)
        alpha = np.array(alpha, dtype=float).reshape(-1)
        if G is None:
            G = int(s.max()) + 1 if s.size else 1
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "G", int(G))
        for arr in (s, alpha, *lambdas):
            arr.setflags(write=False)
        self._validate()

    def _validate(self):
        p, K = len(self.lambdas), self.alpha.size
        if self.s.shape != (p,):
            raise ValueError(f"grouping has length {self.s.size}, expected p={p}")
        if p == 0 or K == 0:
            raise ValueError("model needs at least one variable and one profile")
        if np.any(self.s < 0) or np.any(self.s >= self.G):
            raise ValueError("group labels must lie in 0..G-1")
        if not np.all(np.isfinite(self.alpha)) or np.any(self.alpha <= 0):
            raise ValueError("alpha must be positive and finite")
        for j, lam in enumerate(self.lambdas):
            if lam.ndim != 2 or lam.shape[1] != K or lam.shape[0] < 2:
                raise ValueError(f"lambda[{j}] must be d_j x K with d_j >= 2")
            if np.any(lam < 0) or np.any(np.abs(lam.sum(axis=0) - 1) > 1e-10):
                raise ValueError(f"columns of lambda[{j}] must be probability vectors")
        ModelDims(p, self.G, K, self.d)

    @property
    def p(self):
        return len(self.lambdas)

    @property
    def K(self):
        return self.alpha.size

    @property
    def d(self):
        return tuple(lam.shape[0] for lam in self.lambdas)

    @property
    def dims(self):
        return ModelDims(self.p, self.G, self.K, self.d)

    @property
    def L(self):
        return grouping_matrix(self.s, self.G)

    def members(self, g):
        return np.flatnonzero(self.s == g)

    def __eq__(self, other):
        if not isinstance(other, GroM3Model):
            return NotImplemented
        return (
            self.G == other.G
            and np.array_equal(self.s, other.s)
            and np.array_equal(self.alpha, other.alpha)
            and len(self.lambdas) == len(other.lambdas)
            and all(np.array_equal(a, b) for a, b in zip(self.lambdas, other.lambdas))
        )

    def permute_profiles(self, perm):
        """Model with profile ``k`` of the result equal to profile ``perm[k]`` of ``self``."""
        perm = np.asarray(perm)
        return GroM3Model(self.s, [lam[:, perm] for lam in self.lambdas], self.alpha[perm], self.G)

    def relabel_groups(self, mapping):
        mapping = np.asarray(mapping)
        return GroM3Model(mapping[self.s], self.lambdas, self.alpha, self.G)


# --------------------------------------------------------------------------
# core tensor


def dirichlet_log_moment(alpha, counts):
    """``log E[prod_k pi_k**counts_k]`` for ``pi ~ Dirichlet(alpha)``.

    ``counts`` may have extra leading axes; the last axis indexes profiles.
    """
    alpha = np.asarray(alpha, dtype=float)
    counts = np.asarray(counts, dtype=float)
    a0 = alpha.sum()
    m = counts.sum(axis=-1)
    return (
        gammaln(a0)
        - gammaln(a0 + m)
        + np.sum(gammaln(alpha + counts) - gammaln(alpha), axis=-1)
    )


def _profile_counts(K, G):
    """For every tuple in [K]^G (C order), how many times each profile occurs."""
    idx = np.indices((K,) * G).reshape(G, -1).T
    counts = np.zeros((idx.shape[0], K))
    for g in range(G):
        counts[np.arange(idx.shape[0]), idx[:, g]] += 1
    return counts


def log_core_tensor(alpha, G):
    alpha = np.asarray(alpha, dtype=float)
    K = alpha.size
    if G < 1:
        raise ValueError("G must be at least 1")
    tensor.guard_size((K,) * G)
    return dirichlet_log_moment(alpha, _profile_counts(K, G)).reshape((K,) * G)


def core_tensor(alpha, G):
    """Joint moments ``E[pi_k1 ... pi_kG]`` under ``Dirichlet(alpha)`` as a G-mode tensor."""
    return np.exp(log_core_tensor(alpha, G))


# --------------------------------------------------------------------------
# probabilities of response patterns


def _check_responses(model, Y):
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.shape[1] != model.p:
        raise CategoryOutOfRange(f"expected {model.p} responses per row, got {Y.shape[1]}")
    d = np.array(model.d)
    if np.any(Y < 0) or np.any(Y >= d[None, :]) or not np.issubdtype(Y.dtype, np.integer):
        raise CategoryOutOfRange("responses must be integers in 0..d_j-1")
    return Y


def group_log_weights(model, Y):
    """``w[i, g, k] = sum_{j: s_j = g} log lambda_{j, y_ij, k}``."""
    Y = _check_responses(model, Y)
    n = Y.shape[0]
    w = np.zeros((n, model.G, model.K))
    with np.errstate(divide="ignore"):
        for j, lam in enumerate(model.lambdas):
            w[:, model.s[j], :] += np.log(lam[Y[:, j], :])
    return w


def log_prob(model, Y, chunk=None):
    """Exact log-probability of each response pattern (rows of ``Y``).

    Sums over all ``K**G`` latent configurations in log space.
    """
    K, G = model.K, model.G
    if K**G > MAX_CONFIGURATIONS:
        raise DimGuard(f"K**G = {K**G} exceeds {MAX_CONFIGURATIONS}")
    w = group_log_weights(model, Y)
    logphi = log_core_tensor(model.alpha, G).reshape(-1)
    # configuration index in C order: z_0 slowest
    idx = np.indices((K,) * G).reshape(G, -1)
    n = w.shape[0]
    if chunk is None:
        chunk = max(1, 2_000_000 // max(1, K**G))
    out = np.empty(n)
    for start in range(0, n, chunk):
        wc = w[start:start + chunk]
        tot = np.broadcast_to(logphi, (wc.shape[0], logphi.size)).copy()
        for g in range(G):
            tot += wc[:, g, idx[g]]
        out[start:start + chunk] = logsumexp(tot, axis=1)
    return out


def response_log_prob(model, y):
    """Log-probability of a single response vector ``y`` (0-based categories)."""
    return float(log_prob(model, np.asarray(y)[None, :])[0])


def gamma_tables(model):
    """Over-parameterized tables ``Gamma_j`` of shape ``d_j x K**G``.

    Column ``z`` (first group index fastest) of ``Gamma_j`` equals column
    ``z[s_j]`` of ``Lambda_j``.
    """
    K, G = model.K, model.G
    tensor.guard_size((K,) * G)
    z = np.indices((K,) * G).reshape(G, -1, order="F")
    # after the F-order reshape column t corresponds to vec position t
    return [lam[:, z[model.s[j]]] for j, lam in enumerate(model.lambdas)]


def block_order(model):
    """Variables sorted by group (stable), the order assumed by the vec identity."""
    return np.argsort(model.s, kind="stable")


def hybrid_factor_matrix(model):
    """Kronecker over groups of the Khatri-Rao product within each group.

    Rows follow the first-fastest vectorization over variables in
    :func:`block_order`; columns follow it over ``[K]**G``. Empty groups
    contribute a ``1 x K`` row of ones.
    """
    factors = []
    for g in range(model.G):
        mem = model.members(g)
        if mem.size == 0:
            factors.append(np.ones((1, model.K)))
        else:
            factors.append(
                tensor.khatri_rao_chain([model.lambdas[j] for j in mem], first_fastest=True)
            )
    return tensor.kronecker_chain(factors, first_fastest=True)


def marginal_probability_tensor(model):
    """Full ``d_1 x ... x d_p`` probability tensor of the response pattern.

    Computed as (hybrid factor matrix) @ vec(core tensor), then reordered
    from block order back to the original variable order.
    """
    order = block_order(model)
    d = np.array(model.d)
    tensor.guard_size(d)
    tensor.guard_size((model.K,) * model.G)
    M = hybrid_factor_matrix(model)
    phi = core_tensor(model.alpha, model.G)
    v = M @ tensor.vec_tensor(phi)
    block = tensor.unvec_tensor(v, d[order])
    # axis a of `block` is variable order[a]
    return np.transpose(block, np.argsort(order))


def pairwise_joint(model, j, m):
    """Joint distribution of ``(y_j, y_m)`` as a ``d_j x d_m`` matrix."""
    if j == m:
        raise SameVariable("pairwise_joint needs two distinct variables")
    A, B = model.lambdas[j], model.lambdas[m]
    if model.s[j] == model.s[m]:
        eta = model.alpha / model.alpha.sum()
        return (A * eta) @ B.T
    return A @ core_tensor(model.alpha, 2) @ B.T


# --------------------------------------------------------------------------
# Cramer's V


def cramers_v_from_joint(joint, normalization="classical"):
    """Cramer's V of a two-way joint distribution.

    ``normalization="classical"`` divides the mean-square contingency by
    ``min(r, c) - 1`` so that perfect association gives 1;
    ``"min_categories"`` divides by ``min(r, c)`` instead. Cells whose
    marginal product is zero are left out of the sum.
    """
    joint = np.asarray(joint, dtype=float)
    pr = joint.sum(axis=1)
    pc = joint.sum(axis=0)
    expected = np.outer(pr, pc)
    keep = expected > 0
    phi2 = np.sum((joint[keep] - expected[keep]) ** 2 / expected[keep])
    r, c = joint.shape
    if normalization == "classical":
        denom = min(r, c) - 1
    elif normalization == "min_categories":
        denom = min(r, c)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    if denom <= 0:
        return 0.0
    v = np.sqrt(phi2 / denom)
    # floating-point excursions past 1 are tiny; clamp them
    return float(min(v, 1.0))


def model_cramers_v(model, j, m, normalization="classical"):
    return cramers_v_from_joint(pairwise_joint(model, j, m), normalization)


def model_cramers_v_matrix(model, normalization="classical"):
    p = model.p
    out = np.eye(p)
    for j, m in itertools.combinations(range(p), 2):
        out[j, m] = out[m, j] = model_cramers_v(model, j, m, normalization)
    return out
