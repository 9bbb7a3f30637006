"""Posterior summaries, evaluation metrics and WAIC-based model selection."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .association import sample_cramers_v, sample_cramers_v_matrix, sample_joint  # noqa: F401
from .errors import AllDiscarded, LengthMismatch, ShapeMismatch, TooFewSamples
from .mcmc import SamplerConfig, config_with, run_chain
from .model import GroM3Model


def summarize_grouping(trace_or_draws, G=None):
    """Posterior mode of each ``s_j``; ties go to the smallest group index.

    Accepts a :class:`~grom3.mcmc.Trace` or a (T, p) array of draws.
    """
    if hasattr(trace_or_draws, "s"):
        draws, G = trace_or_draws.s, trace_or_draws.config.G
    else:
        draws = np.asarray(trace_or_draws)
    if draws.ndim != 2 or draws.shape[0] == 0:
        raise ValueError("need a nonempty (T, p) array of grouping draws")
    G = int(draws.max()) + 1 if G is None else G
    counts = np.stack([(draws == g).sum(axis=0) for g in range(G)], axis=1)
    return counts.argmax(axis=1)  # argmax returns the first maximum


def _stack(tables):
    if isinstance(tables, np.ndarray) and tables.ndim == 2:
        return tables
    return np.vstack([np.asarray(t, dtype=float) for t in tables])


def align_profiles(est, truth):
    """Column order to apply to ``est`` so its profiles line up with ``truth``.

    Scores are ``truth.T @ est`` on the stacked tables; profile ``k`` of the
    truth takes the estimated column with the largest score in row ``k``.
    If that is not a permutation, columns are assigned greedily by
    decreasing score without reuse.

    Returns
    -------
    perm : ndarray
        ``est[:, perm]`` is aligned with ``truth``.
    """
    E, T = _stack(est), _stack(truth)
    if E.shape != T.shape:
        raise ShapeMismatch(f"tables have shapes {E.shape} and {T.shape}")
    score = T.T @ E
    perm = score.argmax(axis=1)
    if len(set(perm.tolist())) == perm.size:
        return perm
    K = score.shape[0]
    perm = np.full(K, -1)
    used_r, used_c = set(), set()
    order = np.argsort(-score, axis=None, kind="stable")
    for flat in order:
        r, c = divmod(int(flat), K)
        if r in used_r or c in used_c:
            continue
        perm[r] = c
        used_r.add(r)
        used_c.add(c)
    return perm


def rmse(est, truth):
    """Root mean squared difference over all entries."""
    if isinstance(est, (list, tuple)) or isinstance(truth, (list, tuple)):
        if len(est) != len(truth):
            raise ShapeMismatch("different number of blocks")
        for a, b in zip(est, truth):
            if np.shape(a) != np.shape(b):
                raise ShapeMismatch(f"shapes {np.shape(a)} and {np.shape(b)} differ")
        e = np.concatenate([np.ravel(a) for a in est]) if len(est) else np.zeros(0)
        t = np.concatenate([np.ravel(b) for b in truth]) if len(truth) else np.zeros(0)
    else:
        e, t = np.asarray(est, dtype=float), np.asarray(truth, dtype=float)
        if e.shape != t.shape:
            raise ShapeMismatch(f"shapes {e.shape} and {t.shape} differ")
    if e.size == 0:
        raise ShapeMismatch("nothing to compare")
    return float(np.sqrt(np.mean((np.asarray(e, float) - np.asarray(t, float)) ** 2)))


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2


def ari(a, b):
    """Hubert-Arabie adjusted Rand index between two labelings."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"labelings have lengths {a.size} and {b.size}")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(table, (ia, ib), 1)
    index = _comb2(table).sum()
    sa, sb = _comb2(table.sum(axis=1)).sum(), _comb2(table.sum(axis=0)).sum()
    total = _comb2(a.size)
    expected = sa * sb / total if total else 0.0
    max_index = (sa + sb) / 2
    if max_index == expected:
        # both partitions trivial in the same way; they agree
        return 1.0
    return float((index - expected) / (max_index - expected))


def waic_from_pointwise(logp):
    """WAIC from a (T, n) matrix of ``log p(y_i | theta_t)``.

    Returns ``(waic, lppd, p_waic2)`` with ``p_waic2`` the sum over subjects
    of the sample variance (divisor ``T - 1``).
    """
    logp = np.asarray(logp, dtype=float)
    T = logp.shape[0]
    if T < 2:
        raise TooFewSamples(f"WAIC needs at least 2 draws, got {T}")
    lppd = float(np.sum(logsumexp(logp, axis=0) - np.log(T)))
    p_waic2 = float(np.sum(np.var(logp, axis=0, ddof=1)))
    return -2.0 * (lppd - p_waic2), lppd, p_waic2


def waic(trace, data=None):
    """WAIC of a fitted chain.

    Uses the pointwise log-likelihoods recorded with each stored draw; with
    ``data`` and stored latent draws they are recomputed instead.
    """
    if data is not None and trace.log_pi is not None:
        from .mcmc import pointwise_log_lik
        logp = np.stack([pointwise_log_lik(trace.state(t), data) for t in range(len(trace))]) \
            if len(trace) else np.zeros((0, data.n))
    else:
        logp = trace.pointwise
    return waic_from_pointwise(logp)


@dataclass
class PosteriorSummary:
    lambda_mean: list
    alpha_mean: np.ndarray
    s_mode: np.ndarray
    G: int
    occupied_groups: int
    waic: float
    lppd: float
    p_waic2: float

    def __post_init__(self):
        if self.occupied_groups > self.G:
            raise ValueError("more occupied groups than groups")
        if not np.isclose(self.waic, -2.0 * (self.lppd - self.p_waic2), rtol=0, atol=1e-9 * max(1.0, abs(self.waic))):
            raise ValueError("waic must equal -2 (lppd - p_waic2)")

    def model(self):
        return GroM3Model(self.s_mode, self.lambda_mean, self.alpha_mean, self.G)


def summarize(trace, data=None):
    """Posterior means of tables and alpha (original scale), grouping mode and WAIC."""
    if len(trace) == 0:
        raise TooFewSamples("trace holds no draws")
    lam_mean = trace.lam.mean(axis=0)
    lambdas = [lam_mean[j, :dj] / lam_mean[j, :dj].sum(axis=0) for j, dj in enumerate(trace.d)]
    s_mode = summarize_grouping(trace)
    w, lppd, pw = waic(trace, data)
    return PosteriorSummary(lambdas, trace.alpha.mean(axis=0), s_mode, trace.config.G,
                            len(np.unique(s_mode)), w, lppd, pw)


def evaluate(summary_model, truth: GroM3Model):
    """ARI of the grouping, RMSE of aligned tables and RMSE of aligned alpha."""
    perm = align_profiles(summary_model.lambdas, truth.lambdas)
    lam = [t[:, perm] for t in summary_model.lambdas]
    return {
        "ari": ari(summary_model.s, truth.s),
        "rmse_lambda": rmse(lam, list(truth.lambdas)),
        "rmse_alpha": rmse(summary_model.alpha[perm], truth.alpha),
        "permutation": perm,
    }


def derived_seed(seed, *keys):
    """Independent integer seed for a sub-run identified by ``keys``."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


@dataclass
class ScanResult:
    table: list = field(default_factory=list)
    selected: tuple = None


def model_selection_scan(data, G_list, K_list, config: SamplerConfig, chains=1, progress=None):
    """Fit every ``(G, K)`` candidate and pick the smallest WAIC among full groupings.

    A candidate is discarded when the posterior mode of the grouping leaves
    some group empty. With ``chains > 1`` the median WAIC over chains is used.

    Raises
    ------
    AllDiscarded
        If every candidate has an empty group.
    """
    G_list, K_list = list(G_list), list(K_list)
    if not G_list or not K_list:
        raise ValueError("candidate lists must be nonempty")
    result = ScanResult()
    for G, K in itertools.product(G_list, K_list):
        waics, occ = [], []
        for c in range(chains):
            cfg = config_with(config, G=G, K=K, seed=derived_seed(config.seed, G, K, c),
                              fixed_grouping=None, store_latent=False)
            summ = summarize(run_chain(data, cfg))
            waics.append(summ.waic)
            occ.append(summ.occupied_groups)
        row = {"G": G, "K": K, "waic": float(np.median(waics)),
               "occupied_groups": int(min(occ)), "kept": bool(min(occ) == G)}
        result.table.append(row)
        if progress is not None:
            progress(row)
    kept = [r for r in result.table if r["kept"]]
    if not kept:
        raise AllDiscarded("every candidate left some group empty")
    best = min(kept, key=lambda r: r["waic"])
    result.selected = (best["G"], best["K"])
    return result
