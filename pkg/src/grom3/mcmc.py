"""Posterior sampling: Metropolis-Hastings within Gibbs and a fully Gibbs variant.

One sweep updates, in order, the conditional probability tables, the
membership vectors, the per-group assignments, the grouping (unless fixed)
with its weights, and finally the Dirichlet parameters. Each conditional is
split into a deterministic part (``*_posterior`` functions returning the
parameters of the conditional) and a draw, so the deterministic parts can be
tested without randomness.

Internal arrays
---------------
``lam``      (p, dmax, K) padded tables; rows ``c >= d_j`` are zero.
``log_pi``   (n, K) log membership vectors; kept in log space because
             Dirichlet draws with tiny concentrations underflow.
``z``        (n, G) profile index for each subject and group.
``s``        (p,) group of each variable.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .association import cluster_variables
from .errors import DegenerateMembership
from .model import GroM3Model, log_core_tensor
from .simulate import Dataset, log_dirichlet

VARIANTS = ("mh", "gibbs")
INITS = ("prior", "cluster")
TINY = 1e-300
#: ``marginal_grouping=None`` turns the move on when ``K**G`` is at most this.
MARGINAL_GROUPING_CONFIGS = 64


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler settings.

    ``a_alpha``/``b_alpha`` are the shape/rate of the Gamma prior on
    ``alpha_0`` used by the MH variant; ``a0``/``b0`` the shape/rate of the
    independent Gamma priors on each ``alpha_k`` used by the Gibbs variant.
    ``alpha0_jacobian`` adds the change-of-variables factor that the
    textbook acceptance ratio leaves out (see :func:`mh_log_ratio`).
    ``collapsed_grouping`` follows the plain grouping update with
    :func:`step_grouping_collapsed` in every sweep.

    ``relabel_groups`` adds :func:`step_relabel_groups` to every sweep.
    ``marginal_grouping`` adds :func:`step_grouping_marginal` to every sweep;
    ``None`` enables it when ``K**G <= MARGINAL_GROUPING_CONFIGS``. That move
    starts with ``marginal_alpha_steps`` lognormal MH updates of alpha with
    scale ``marginal_sigma`` against the likelihood with memberships summed out.

    ``init="prior"`` draws every starting value from the prior.
    ``init="cluster"`` instead starts the grouping from
    :func:`~grom3.association.cluster_variables`, sets ``alpha`` to ones and
    draws ``z`` from its conditional given the random tables; the grouping is then
    held fixed for the first ``grouping_warmup`` sweeps (at most ``burn_in``) so the tables and
    assignments can adapt to it, and for the first ``alpha_warmup`` sweeps the MH variant
    updates alpha with the data-augmentation step of the Gibbs variant, which moves
    quickly to the right scale when the true alpha is far from one. For the first
    ``temper_sweeps`` sweeps the marginal grouping move also scores groupings with
    alpha scaled by ``marginal_temper``; a small alpha favours splitting variables
    between groups, which keeps the chain from settling on a one-group-like grouping
    whose fitted alpha is too large to leave it. All of these only affect burn-in.
    """

    G: int
    K: int
    iterations: int = 15000
    burn_in: int = 10000
    thin: int = 5
    sigma_alpha: float = 0.02
    a_alpha: float = 2.0
    b_alpha: float = 1.0
    a0: float = 1.0
    b0: float = 1.0
    seed: int = 0
    variant: str = "mh"
    fixed_grouping: tuple = None
    alpha0_jacobian: bool = False
    collapsed_grouping: bool = False
    relabel_groups: bool = True
    marginal_grouping: bool = None
    marginal_sigma: float = 0.1
    marginal_alpha_steps: int = 5
    marginal_temper: float = 0.25
    init: str = "cluster"
    grouping_warmup: int = 200
    alpha_warmup: int = 500
    temper_sweeps: int = 500
    store_latent: bool = True

    def __post_init__(self):
        if self.G < 1 or self.K < 1:
            raise ValueError("G and K must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if not self.sigma_alpha > 0 or not self.marginal_sigma > 0:
            raise ValueError("proposal scales must be positive")
        if self.marginal_alpha_steps < 0:
            raise ValueError("marginal_alpha_steps must be nonnegative")
        for name in ("a_alpha", "b_alpha", "a0", "b0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")
        if not 0 < self.marginal_temper <= 1:
            raise ValueError("marginal_temper must lie in (0, 1]")
        if min(self.grouping_warmup, self.alpha_warmup, self.temper_sweeps) < 0:
            raise ValueError("warmup lengths must be nonnegative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.fixed_grouping is not None:
            fg = tuple(int(v) for v in self.fixed_grouping)
            if min(fg) < 0 or max(fg) >= self.G:
                raise ValueError("fixed_grouping labels must lie in 0..G-1")
            object.__setattr__(self, "fixed_grouping", fg)

    @property
    def n_stored(self):
        return (self.iterations - self.burn_in) // self.thin

    @property
    def use_marginal_grouping(self):
        if self.marginal_grouping is None:
            return self.G > 1 and self.K > 1 and self.K**self.G <= MARGINAL_GROUPING_CONFIGS
        return bool(self.marginal_grouping)


@dataclass
class ChainState:
    lam: np.ndarray
    alpha: np.ndarray
    s: np.ndarray
    xi: np.ndarray
    log_pi: np.ndarray
    z: np.ndarray

    @property
    def pi(self):
        return np.exp(self.log_pi)

    def copy(self):
        return ChainState(*(np.array(getattr(self, f)) for f in
                            ("lam", "alpha", "s", "xi", "log_pi", "z")))

    def to_model(self, d):
        lambdas = [self.lam[j, :dj] for j, dj in enumerate(d)]
        return GroM3Model(self.s, lambdas, self.alpha, len(self.xi))


# --------------------------------------------------------------------------
# data helpers


class _Data:
    """Precomputed views of a dataset used by every sweep."""

    def __init__(self, data: Dataset):
        self.dataset = data
        self.Y = np.ascontiguousarray(data.responses, dtype=np.int64)
        self.d = np.array(data.d)
        self.n, self.p = self.Y.shape
        self.dmax = int(self.d.max())
        self.mask = np.arange(self.dmax)[None, :] < self.d[:, None]  # (p, dmax)
        self.cols = np.arange(self.p)


def _prep(data):
    return data if isinstance(data, _Data) else _Data(data)


def log_tables(lam):
    return np.log(np.maximum(lam, TINY))


def group_log_lik(loglam, D, s, G):
    """``out[i, g, k] = sum_{j: s_j = g} log lambda_{j, y_ij, k}``."""
    return _kernels.group_log_lik(loglam, D.Y, np.asarray(s, dtype=np.int64), G)


def _categorical_from_logits(rng, logits):
    """One draw per leading index from unnormalized log-probabilities (last axis)."""
    lead = logits.shape[:-1]
    flat = np.ascontiguousarray(logits.reshape(-1, logits.shape[-1]))
    return _kernels.categorical_from_logits(flat, rng.random(flat.shape[0])).reshape(lead)


def profile_counts(z, K):
    """``out[i, k] = #{g: z_ig = k}``."""
    return _kernels.profile_counts(np.asarray(z, dtype=np.int64), K)


# --------------------------------------------------------------------------
# conditionals: deterministic parameters


def lambda_posterior(state, data):
    """Dirichlet parameters ``1 + counts`` for every column, shape (p, dmax, K).

    Padded rows carry zero.
    """
    D = _prep(data)
    K = state.lam.shape[2]
    counts = _kernels.table_counts(D.Y, np.asarray(state.z, dtype=np.int64),
                                   np.asarray(state.s, dtype=np.int64), D.dmax, K)
    return np.where(D.mask[:, :, None], 1.0 + counts, 0.0)


def pi_posterior(state):
    return state.alpha[None, :] + profile_counts(state.z, state.alpha.size)


def z_log_posterior(state, data, loglam=None):
    """Unnormalized log-probabilities of ``z_ig = k``, shape (n, G, K)."""
    D = _prep(data)
    if loglam is None:
        loglam = log_tables(state.lam)
    return state.log_pi[:, None, :] + group_log_lik(loglam, D, state.s, state.xi.size)


def grouping_log_posterior(state, data, loglam=None):
    """Unnormalized log-probabilities of ``s_j = g``, shape (p, G)."""
    D = _prep(data)
    if loglam is None:
        loglam = log_tables(state.lam)
    ll = _kernels.grouping_log_lik(loglam, D.Y, np.asarray(state.z, dtype=np.int64))
    with np.errstate(divide="ignore"):
        return np.log(state.xi)[None, :] + ll


# --------------------------------------------------------------------------
# draws


def _dirichlet_rows(rng, conc, axis):
    g = rng.standard_gamma(np.maximum(conc, 1.0))
    g = np.where(conc > 0, g, 0.0)
    return g / g.sum(axis=axis, keepdims=True)


def step_lambda(state, data, rng):
    state.lam = _dirichlet_rows(rng, lambda_posterior(state, data), axis=1)
    return state.lam


def step_pi(state, rng):
    state.log_pi = log_dirichlet(rng, pi_posterior(state))
    return state.log_pi


def step_z(state, data, rng, loglam=None):
    state.z = _categorical_from_logits(rng, z_log_posterior(state, data, loglam))
    return state.z


def step_grouping(state, data, rng, loglam=None):
    """Draw ``s`` from its conditional, then ``xi ~ Dirichlet(1 + group sizes)``."""
    G = state.xi.size
    state.s = _categorical_from_logits(rng, grouping_log_posterior(state, data, loglam))
    sizes = np.bincount(state.s, minlength=G)
    state.xi = rng.dirichlet(1.0 + sizes)
    return state.s, state.xi


def step_grouping_collapsed(state, data, rng, loglam=None):
    """Scan over ``s_j`` with the assignments summed out, then redraw ``z``.

    Each ``s_j`` is drawn from ``p(s_j | s_-j, pi, lambda, xi, Y)`` with every
    ``z_ig`` marginalized, and ``z`` is then drawn from its full conditional.
    Together these form a blocked update of ``(s, z)`` that leaves the
    posterior invariant. Unlike :func:`step_grouping` it can move a variable
    into a group whose assignments were fitted without it.
    """
    D = _prep(data)
    if loglam is None:
        loglam = log_tables(state.lam)
    with np.errstate(divide="ignore"):
        log_xi = np.log(state.xi)
    state.s = _kernels.collapsed_grouping_scan(
        np.ascontiguousarray(state.log_pi), loglam, D.Y,
        np.asarray(state.s, dtype=np.int64), log_xi, rng.random(D.p))
    step_z(state, D, rng, loglam)
    return state.s


def _configs(K, G):
    """All assignment configurations as a (G, K**G) array, C order like the core tensor."""
    return np.indices((K,) * G).reshape(G, -1).astype(np.int64)


def alpha_log_prior(alpha, config):
    """Log prior density of alpha (up to a constant) as used by each variant.

    The MH variant's acceptance ratio implies ``(a - 1) log alpha_0 - b alpha_0``
    (minus ``(K - 1) log alpha_0`` with the Jacobian term); the Gibbs variant has
    independent ``Gamma(a0, b0)`` priors.
    """
    alpha = np.asarray(alpha, dtype=float)
    if config.variant == "gibbs":
        return float(np.sum((config.a0 - 1) * np.log(alpha) - config.b0 * alpha))
    a0 = alpha.sum()
    out = (config.a_alpha - 1) * np.log(a0) - config.b_alpha * a0
    if config.alpha0_jacobian:
        out -= (alpha.size - 1) * np.log(a0)
    return float(out)


def marginal_log_lik(alpha, S, configs_G):
    """``sum_i log sum_c phi_c(alpha) exp(S[i, c])``."""
    log_phi = log_core_tensor(alpha, configs_G).reshape(-1)
    x = S + log_phi[None, :]
    mx = x.max(axis=1, keepdims=True)
    return float(np.sum(mx[:, 0] + np.log(np.exp(x - mx).sum(axis=1))))


def step_grouping_marginal(state, data, rng, loglam=None, config=None, temper=1.0):
    """Update alpha and ``s`` with memberships and assignments summed out, then redraw them.

    First ``config.marginal_alpha_steps`` lognormal MH moves update alpha
    against ``p(alpha | s, lambda, Y)``. Then each ``s_j`` is drawn from
    ``p(s_j | s_-j, lambda, alpha, xi, Y)``, the
    likelihood of every subject being summed exactly over all ``K**G``
    assignment configurations weighted by the core tensor. Afterwards each
    subject's configuration is drawn from its exact conditional, ``pi`` from
    ``Dirichlet(alpha + counts)`` and ``xi`` from ``Dirichlet(1 + sizes)``.
    The whole move is a blocked Gibbs update, so it leaves the posterior
    invariant; with ``temper < 1`` the grouping and assignments are drawn with
    alpha scaled by ``temper``, which is only meant for burn-in. It can
    reorganize groupings that single-site moves cannot when ``alpha`` is small
    and most subjects use one profile for every group.
    """
    D = _prep(data)
    if loglam is None:
        loglam = log_tables(state.lam)
    K, G = state.alpha.size, state.xi.size
    configs = _configs(K, G)
    if config is not None and config.marginal_alpha_steps:
        W = group_log_lik(loglam, D, state.s, G)
        S = _kernels.config_log_lik(W, configs)
        cur = marginal_log_lik(state.alpha, S, G) + alpha_log_prior(state.alpha, config)
        for _ in range(config.marginal_alpha_steps):
            star = state.alpha * np.exp(config.marginal_sigma * rng.standard_normal(K))
            if np.any(star <= 0) or not np.all(np.isfinite(star)):
                rng.random()
                continue
            new = marginal_log_lik(star, S, G) + alpha_log_prior(star, config)
            if np.log(rng.random()) < new - cur + np.sum(np.log(star / state.alpha)):
                state.alpha, cur = star, new
    log_phi = log_core_tensor(state.alpha * temper, G).reshape(-1)
    with np.errstate(divide="ignore"):
        log_xi = np.log(state.xi)
    state.s, S = _kernels.marginal_grouping_scan(
        log_phi, configs, loglam, D.Y, np.asarray(state.s, dtype=np.int64), log_xi,
        rng.random(D.p))
    pick = _kernels.categorical_from_logits(log_phi[None, :] + S, rng.random(D.n))
    state.z = np.ascontiguousarray(configs[:, pick].T)
    step_pi(state, rng)
    state.xi = rng.dirichlet(1.0 + np.bincount(state.s, minlength=G))
    return state.s


#: Largest K for which relabeling draws from the whole permutation group.
FULL_RELABEL_K = 5


def _relabel_perms(K, rng):
    if K <= FULL_RELABEL_K:
        return np.array(list(itertools.permutations(range(K))), dtype=np.int64)
    # subgroup {identity, random transposition}; still a group, so the move stays exact
    a, b = rng.choice(K, size=2, replace=False)
    swap = np.arange(K)
    swap[[a, b]] = swap[[b, a]]
    return np.stack([np.arange(K), swap]).astype(np.int64)


def step_relabel_groups(state, rng):
    """Permute profile labels within each group, then redraw ``pi``.

    The likelihood and the priors on the tables are unchanged when the
    assignments of one group and the columns of that group's tables are
    permuted together; only the memberships see the change. With ``pi``
    integrated out, a permutation is drawn with probability proportional to
    the Dirichlet-multinomial weight of the relabeled assignments. This fixes
    groups whose labels disagree with the rest, which single-site updates
    cannot undo.
    """
    K = state.alpha.size
    if K == 1:
        return state.z
    G = state.z.shape[1]
    perms = _relabel_perms(K, rng)
    z, chosen = _kernels.group_relabel_scan(np.asarray(state.z, dtype=np.int64),
                                            state.alpha, perms, rng.random(G))
    for g in range(G):
        sigma = perms[chosen[g]]
        if np.any(sigma != np.arange(K)):
            mem = state.s == g
            new = np.empty_like(state.lam[mem])
            new[:, :, sigma] = state.lam[mem]
            state.lam[mem] = new
    state.z = z
    step_pi(state, rng)
    return state.z


def sum_log_pi(log_pi):
    """Column sums of ``log pi`` with non-finite entries clamped at ``log(1e-300)``."""
    log_pi = np.asarray(log_pi, dtype=float)
    if not np.all(np.isfinite(log_pi)):
        warnings.warn("membership weights of exactly zero clamped at 1e-300",
                      DegenerateMembership, stacklevel=2)
        log_pi = np.maximum(np.nan_to_num(log_pi, nan=np.log(TINY), neginf=np.log(TINY)),
                            np.log(TINY))
    return log_pi.sum(axis=0)


def mh_log_ratio(alpha, alpha_star, slp, n, a_alpha, b_alpha, jacobian=False):
    """Log acceptance ratio for moving ``alpha -> alpha_star``.

    ``slp[k] = sum_i log pi_ik``. The ratio combines the Gamma(a, b) density of
    ``alpha_0`` (shape/rate), the Dirichlet likelihood of the memberships and
    the lognormal proposal correction ``sum_k log(alpha*_k / alpha_k)``. When
    ``jacobian`` is true it also includes ``-(K-1) log(alpha*_0 / alpha_0)``,
    which makes ``alpha_0 ~ Gamma(a, b)`` with a uniform direction the exact
    prior; without it the implied prior on ``alpha_0`` is Gamma(a + K - 1, b).
    """
    alpha = np.asarray(alpha, dtype=float)
    alpha_star = np.asarray(alpha_star, dtype=float)
    a0, a0s = alpha.sum(), alpha_star.sum()
    K = alpha.size
    log_r = (
        (a_alpha - 1) * np.log(a0s / a0)
        - b_alpha * (a0s - a0)
        + n * (gammaln(a0s) - gammaln(a0) + np.sum(gammaln(alpha) - gammaln(alpha_star)))
        + np.sum((alpha_star - alpha) * slp)
        + np.sum(np.log(alpha_star / alpha))
    )
    if jacobian:
        log_r -= (K - 1) * np.log(a0s / a0)
    return float(log_r)


def step_alpha_mh(state, config, rng, alpha_star=None):
    """Lognormal random-walk MH update; returns ``(alpha, accepted, ratio)``.

    ``alpha_star`` overrides the proposal (test hook).
    """
    alpha = state.alpha
    if alpha_star is None:
        alpha_star = alpha * np.exp(config.sigma_alpha * rng.standard_normal(alpha.size))
    log_r = mh_log_ratio(alpha, alpha_star, sum_log_pi(state.log_pi), state.log_pi.shape[0],
                         config.a_alpha, config.b_alpha, config.alpha0_jacobian)
    ratio = float(np.exp(min(0.0, log_r)))
    accepted = bool(np.log(rng.random()) < log_r)
    if accepted:
        state.alpha = np.asarray(alpha_star, dtype=float)
    return state.alpha, accepted, ratio


def sample_crt(m, a, rng):
    """Chinese restaurant table count: sum of Bernoulli(a / (a + i)) for i < m.

    ``m`` and ``a`` broadcast; returns an integer array (or int for scalars).
    """
    m = np.asarray(m, dtype=np.int64)
    a = np.asarray(a, dtype=float)
    if np.any(m < 0) or np.any(a <= 0):
        raise ValueError("need m >= 0 and a > 0")
    m, a = np.broadcast_arrays(m, a)
    top = int(m.max()) if m.size else 0
    i = np.arange(top)
    u = rng.random(m.shape + (top,))
    hits = (u < a[..., None] / (a[..., None] + i)) & (i < m[..., None])
    out = hits.sum(axis=-1)
    return int(out) if out.ndim == 0 else out


def log_beta_complement(rng, a, b, size):
    """``log(1 - q)`` for ``q ~ Beta(a, b)``, accurate when ``1 - q`` is tiny."""
    def log_gamma_variate(shape):
        g = rng.standard_gamma(shape + 1.0, size=size)
        return np.log(g) + np.log(rng.random(size)) / shape

    x = log_gamma_variate(b)  # 1 - q = X / (X + W) with X ~ Gamma(b)
    w = log_gamma_variate(a)
    return x - np.logaddexp(x, w)


def step_alpha_gibbs(state, config, rng):
    """Data-augmentation update of alpha given the assignments.

    ``q_i ~ Beta(G, alpha_0)``, ``t_ik ~ CRT(Zmult_ik, alpha_k)`` and
    ``alpha_k ~ Gamma(a0 + sum_i t_ik, rate = b0 - sum_i log(1 - q_i))``.
    """
    alpha = state.alpha
    K = alpha.size
    n, G = state.z.shape
    zmult = profile_counts(state.z, K)
    if n:
        log1mq = log_beta_complement(rng, G, alpha.sum(), n)
        t = sample_crt(zmult, np.broadcast_to(alpha, zmult.shape), rng)
        shape = config.a0 + t.sum(axis=0)
        rate = config.b0 - log1mq.sum()
    else:
        shape, rate = np.full(K, config.a0), config.b0
    state.alpha = np.maximum(rng.standard_gamma(shape) / rate, TINY)
    return state.alpha


# --------------------------------------------------------------------------
# chain driver


def pointwise_log_lik(state, data, loglam=None):
    """``log p(y_i | lambda, pi_i, s)`` for every subject."""
    D = _prep(data)
    if loglam is None:
        loglam = log_tables(state.lam)
    gll = group_log_lik(loglam, D, state.s, state.xi.size)
    return _kernels.pointwise_log_lik(np.ascontiguousarray(state.log_pi), gll)


def init_state(data, config, rng, truth: GroM3Model = None, latent=None):
    """Draw an initial state from the prior, or start from ``truth``.

    With ``truth`` the tables, alpha and grouping are copied and ``xi`` is set
    to the group proportions; memberships and assignments come from
    ``latent`` when given, else from the prior given ``truth.alpha``.
    """
    D = _prep(data)
    G, K = config.G, config.K
    if D.n < 1:
        raise ValueError("data must be nonempty")
    if truth is not None:
        if truth.G != G or truth.K != K or truth.p != D.p:
            raise ValueError("truth dimensions do not match the config")
        lam = np.zeros((D.p, D.dmax, K))
        for j, L in enumerate(truth.lambdas):
            lam[j, : L.shape[0]] = L
        s = np.array(truth.s)
        xi = (np.bincount(s, minlength=G) + 1.0) / (D.p + G)
        alpha = np.array(truth.alpha)
    else:
        conc = np.where(D.mask[:, :, None], 1.0, 0.0) * np.ones((1, 1, K))
        lam = _dirichlet_rows(rng, conc, axis=1)
        xi = rng.dirichlet(np.ones(G))
        s = rng.choice(G, size=D.p, p=xi)
        alpha0 = rng.gamma(config.a_alpha, 1.0 / config.b_alpha)
        alpha = np.maximum(alpha0 * rng.dirichlet(np.ones(K)), TINY)
    if config.fixed_grouping is not None:
        s = np.array(config.fixed_grouping)
        if s.size != D.p:
            raise ValueError("fixed_grouping length does not match the data")
    if latent is not None:
        log_pi = np.log(np.maximum(latent.pi, TINY))
        z = np.array(latent.z)
    else:
        log_pi = log_dirichlet(rng, alpha, size=D.n)
        z = _categorical_from_logits(rng, np.broadcast_to(log_pi[:, None, :], (D.n, G, K)))
    return ChainState(lam, alpha, s.astype(np.int64), xi, log_pi, z.astype(np.int64))


def sweep(state, D, config, rng, update_grouping=True, gibbs_alpha=False, temper=1.0):
    """One full cycle; returns ``(accepted, ratio, log tables)``.

    ``gibbs_alpha`` forces the data-augmentation alpha update whatever the variant;
    ``temper`` is passed to :func:`step_grouping_marginal`.
    """
    step_lambda(state, D, rng)
    loglam = log_tables(state.lam)
    step_pi(state, rng)
    step_z(state, D, rng, loglam)
    if config.fixed_grouping is None and update_grouping:
        if config.collapsed_grouping:
            G = state.xi.size
            step_grouping(state, D, rng, loglam)
            step_grouping_collapsed(state, D, rng, loglam)
            state.xi = rng.dirichlet(1.0 + np.bincount(state.s, minlength=G))
        else:
            step_grouping(state, D, rng, loglam)
        if config.use_marginal_grouping:
            step_grouping_marginal(state, D, rng, loglam, config, temper)
    if config.relabel_groups:
        step_relabel_groups(state, rng)
        loglam = log_tables(state.lam)
    if config.variant == "mh" and not gibbs_alpha:
        _, accepted, ratio = step_alpha_mh(state, config, rng)
    else:
        step_alpha_gibbs(state, config, rng)
        accepted, ratio = True, 1.0
    return accepted, ratio, loglam


@dataclass
class Trace:
    """Thinned post-burn-in draws plus per-iteration diagnostics.

    Draw ``t`` was taken at iteration ``burn_in + (t + 1) * thin`` (1-based).
    """

    config: SamplerConfig
    d: tuple
    lam: np.ndarray          # (T, p, dmax, K)
    alpha: np.ndarray        # (T, K)
    s: np.ndarray            # (T, p)
    xi: np.ndarray           # (T, G)
    pointwise: np.ndarray    # (T, n) log p(y_i | draw)
    log_pi: np.ndarray = None   # (T, n, K) when latent draws are stored
    z: np.ndarray = None        # (T, n, G)
    accepted: np.ndarray = field(default=None)  # (iterations,)
    accept_ratio: np.ndarray = field(default=None)
    loglik: np.ndarray = field(default=None)

    def __len__(self):
        return self.alpha.shape[0]

    @property
    def iterations_stored(self):
        c = self.config
        return c.burn_in + c.thin * np.arange(1, len(self) + 1)

    def state(self, t):
        if self.log_pi is None:
            raise ValueError("latent draws were not stored")
        return ChainState(self.lam[t], self.alpha[t], self.s[t], self.xi[t],
                          self.log_pi[t], self.z[t])

    @property
    def states(self):
        return [self.state(t) for t in range(len(self))]

    def model(self, t):
        return self.state_model(t)

    def state_model(self, t):
        lambdas = [self.lam[t, j, :dj] for j, dj in enumerate(self.d)]
        return GroM3Model(self.s[t], lambdas, self.alpha[t], self.config.G)

    def mean_acceptance(self, post_burn_in=True):
        r = self.accept_ratio[self.config.burn_in:] if post_burn_in else self.accept_ratio
        return float(np.mean(r))


def run_chain(data, config: SamplerConfig, init: ChainState = None, callback=None):
    """Run one chain and return its :class:`Trace`.

    ``callback(iteration, state)`` is called after every sweep when given.
    """
    D = _prep(data)
    rng = np.random.default_rng(config.seed)
    warmup = alpha_warm = temper_until = 0
    if init is not None:
        state = init.copy()
    else:
        state = init_state(D, config, rng)
        if config.init == "cluster":
            if config.fixed_grouping is None:
                state.s = cluster_variables(D.dataset, config.G).astype(np.int64)
                warmup = min(config.grouping_warmup, config.burn_in)
            # a tiny prior draw of some alpha_k starves that profile for good
            state.alpha = np.ones(config.K)
            state.log_pi = log_dirichlet(rng, state.alpha, size=D.n)
            # assignments informed by the (random) starting tables break profile symmetry
            step_z(state, D, rng)
            alpha_warm = min(config.alpha_warmup, config.burn_in)
            temper_until = min(config.temper_sweeps, config.burn_in)
    T = config.n_stored
    p, K, G, n = D.p, config.K, config.G, D.n
    lam = np.empty((T, p, D.dmax, K))
    alpha = np.empty((T, K))
    s = np.empty((T, p), dtype=np.int64)
    xi = np.empty((T, G))
    pointwise = np.empty((T, n))
    log_pi = np.empty((T, n, K)) if config.store_latent else None
    z = np.empty((T, n, G), dtype=np.int16) if config.store_latent else None
    accepted = np.zeros(config.iterations, dtype=bool)
    ratio = np.zeros(config.iterations)
    loglik = np.zeros(config.iterations)
    t = 0
    for it in range(config.iterations):
        accepted[it], ratio[it], loglam = sweep(
            state, D, config, rng, it >= warmup, it < alpha_warm,
            config.marginal_temper if it < temper_until else 1.0)
        pw = pointwise_log_lik(state, D, loglam)
        loglik[it] = pw.sum()
        done = it + 1
        if done > config.burn_in and (done - config.burn_in) % config.thin == 0 and t < T:
            lam[t], alpha[t], s[t], xi[t] = state.lam, state.alpha, state.s, state.xi
            pointwise[t] = pw
            if config.store_latent:
                log_pi[t], z[t] = state.log_pi, state.z
            t += 1
        if callback is not None:
            callback(it, state)
    return Trace(config, tuple(int(v) for v in D.d), lam, alpha, s, xi, pointwise,
                 log_pi, z, accepted, ratio, loglik)


def config_with(config, **changes):
    return replace(config, **changes)
