"""Compiled inner loops for the sampler."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def group_log_lik(loglam, Y, s, G):
    """``out[i, g, k] = sum_{j: s_j = g} loglam[j, Y[i, j], k]``."""
    n, p = Y.shape
    K = loglam.shape[2]
    out = np.zeros((n, G, K))
    for i in range(n):
        for j in range(p):
            g = s[j]
            c = Y[i, j]
            for k in range(K):
                out[i, g, k] += loglam[j, c, k]
    return out


@njit(cache=True)
def pointwise_log_lik(log_pi, gll):
    """``out[i] = sum_g logsumexp_k(log_pi[i, k] + gll[i, g, k])``."""
    n, G, K = gll.shape
    out = np.zeros(n)
    buf = np.empty(K)
    for i in range(n):
        tot = 0.0
        for g in range(G):
            m = -np.inf
            for k in range(K):
                buf[k] = log_pi[i, k] + gll[i, g, k]
                if buf[k] > m:
                    m = buf[k]
            acc = 0.0
            for k in range(K):
                acc += np.exp(buf[k] - m)
            tot += m + np.log(acc)
        out[i] = tot
    return out


@njit(cache=True)
def categorical_from_logits(logits, u):
    """Inverse-CDF draws; ``logits`` is (m, K), ``u`` is (m,)."""
    m, K = logits.shape
    out = np.empty(m, dtype=np.int64)
    w = np.empty(K)
    for r in range(m):
        mx = -np.inf
        for k in range(K):
            if logits[r, k] > mx:
                mx = logits[r, k]
        tot = 0.0
        for k in range(K):
            tot += np.exp(logits[r, k] - mx)
            w[k] = tot
        thr = u[r] * tot
        idx = K - 1
        for k in range(K):
            if thr < w[k]:
                idx = k
                break
        out[r] = idx
    return out


@njit(cache=True)
def table_counts(Y, z, s, dmax, K):
    """``out[j, c, k] = #{i: y_ij = c, z_{i, s_j} = k}``."""
    n, p = Y.shape
    out = np.zeros((p, dmax, K))
    for i in range(n):
        for j in range(p):
            out[j, Y[i, j], z[i, s[j]]] += 1.0
    return out


@njit(cache=True)
def grouping_log_lik(loglam, Y, z):
    """``out[j, g] = sum_i loglam[j, y_ij, z_ig]``."""
    n, p = Y.shape
    G = z.shape[1]
    out = np.zeros((p, G))
    for i in range(n):
        for j in range(p):
            c = Y[i, j]
            for g in range(G):
                out[j, g] += loglam[j, c, z[i, g]]
    return out


@njit(cache=True)
def profile_counts(z, K):
    n, G = z.shape
    out = np.zeros((n, K), dtype=np.int64)
    for i in range(n):
        for g in range(G):
            out[i, z[i, g]] += 1
    return out


@njit(cache=True)
def _lse_row(log_pi, W, i, g, extra, j, K, buf):
    mx = -np.inf
    for k in range(K):
        v = log_pi[i, k] + W[i, g, k]
        if j >= 0:
            v += extra[j, i, k]
        buf[k] = v
        if v > mx:
            mx = v
    acc = 0.0
    for k in range(K):
        acc += np.exp(buf[k] - mx)
    return mx + np.log(acc)


@njit(cache=True)
def collapsed_grouping_scan(log_pi, loglam, Y, s, log_xi, u):
    """Systematic scan over variables drawing ``s_j`` with the assignments summed out.

    For each ``j`` in turn, ``P(s_j = g) ∝ xi_g * prod_i B_ig(j) / B_ig`` where
    ``B_ig = sum_k pi_ik prod_{l in g, l != j} lambda_{l, y_il, k}`` and
    ``B_ig(j)`` includes variable ``j`` as well. Returns the new ``s``.
    """
    n, p = Y.shape
    K = loglam.shape[2]
    G = log_xi.shape[0]
    s = s.copy()
    # per-variable observed log tables: obs[j, i, k]
    obs = np.empty((p, n, K))
    for i in range(n):
        for j in range(p):
            for k in range(K):
                obs[j, i, k] = loglam[j, Y[i, j], k]
    W = np.zeros((n, G, K))
    for j in range(p):
        g = s[j]
        for i in range(n):
            for k in range(K):
                W[i, g, k] += obs[j, i, k]
    base = np.empty((n, G))
    buf = np.empty(K)
    for i in range(n):
        for g in range(G):
            base[i, g] = _lse_row(log_pi, W, i, g, obs, -1, K, buf)
    logp = np.empty(G)
    for j in range(p):
        old = s[j]
        for i in range(n):
            for k in range(K):
                W[i, old, k] -= obs[j, i, k]
            base[i, old] = _lse_row(log_pi, W, i, old, obs, -1, K, buf)
        for g in range(G):
            tot = log_xi[g]
            for i in range(n):
                tot += _lse_row(log_pi, W, i, g, obs, j, K, buf) - base[i, g]
            logp[g] = tot
        mx = logp.max()
        cum = 0.0
        for g in range(G):
            cum += np.exp(logp[g] - mx)
            logp[g] = cum
        thr = u[j] * cum
        new = G - 1
        for g in range(G):
            if thr < logp[g]:
                new = g
                break
        s[j] = new
        for i in range(n):
            for k in range(K):
                W[i, new, k] += obs[j, i, k]
            base[i, new] = _lse_row(log_pi, W, i, new, obs, -1, K, buf)
    return s


@njit(cache=True)
def group_relabel_scan(z, alpha, perms, u):
    """Draw a profile relabeling for each group in turn.

    For group ``g`` the permutation ``sigma`` (a row of ``perms``) is chosen
    with probability proportional to ``prod_i DM(c_i(sigma))``, the
    Dirichlet-multinomial weight of subject ``i``'s profile counts after
    mapping ``z_ig -> sigma[z_ig]``. Returns the new ``z`` and the index of
    the chosen permutation for each group.
    """
    n, G = z.shape
    K = alpha.shape[0]
    P = perms.shape[0]
    z = z.copy()
    counts = np.zeros((n, K), dtype=np.int64)
    for i in range(n):
        for g in range(G):
            counts[i, z[i, g]] += 1
    lg = np.empty((K, G + 2))
    for k in range(K):
        for c in range(G + 2):
            lg[k, c] = math.lgamma(alpha[k] + c)
    chosen = np.empty(G, dtype=np.int64)
    logw = np.empty(P)
    for g in range(G):
        for q in range(P):
            tot = 0.0
            for i in range(n):
                a = z[i, g]
                b = perms[q, a]
                if a != b:
                    ca = counts[i, a]
                    cb = counts[i, b]
                    tot += lg[b, cb + 1] - lg[b, cb] + lg[a, ca - 1] - lg[a, ca]
            logw[q] = tot
        mx = logw.max()
        cum = 0.0
        for q in range(P):
            cum += np.exp(logw[q] - mx)
            logw[q] = cum
        thr = u[g] * cum
        pick = P - 1
        for q in range(P):
            if thr < logw[q]:
                pick = q
                break
        chosen[g] = pick
        for i in range(n):
            a = z[i, g]
            b = perms[pick, a]
            if a != b:
                counts[i, a] -= 1
                counts[i, b] += 1
                z[i, g] = b
    return z, chosen


@njit(cache=True)
def config_log_lik(W, configs):
    """``out[i, c] = sum_g W[i, g, configs[g, c]]``."""
    n, G, K = W.shape
    C = configs.shape[1]
    out = np.zeros((n, C))
    for i in range(n):
        for c in range(C):
            tot = 0.0
            for g in range(G):
                tot += W[i, g, configs[g, c]]
            out[i, c] = tot
    return out


@njit(cache=True)
def marginal_grouping_scan(log_phi, configs, loglam, Y, s, log_xi, u):
    """Systematic scan over variables drawing ``s_j`` with memberships and assignments summed out.

    ``P(s_j = g) ∝ xi_g * prod_i sum_c phi_c prod_l lambda_{l, y_il, c[s_l]}`` where
    ``c`` runs over every assignment configuration (columns of ``configs``).
    Returns the new ``s`` and the final per-configuration log-likelihoods.
    """
    n, p = Y.shape
    G, C = configs.shape
    G = log_xi.shape[0]
    s = s.copy()
    S = np.zeros((n, C))
    for i in range(n):
        for j in range(p):
            c_ = Y[i, j]
            g = s[j]
            for c in range(C):
                S[i, c] += loglam[j, c_, configs[g, c]]
    K = loglam.shape[2]
    logp = np.empty(G)
    E = np.empty(C)
    M = np.empty((G, K))
    lam = np.empty(K)
    for j in range(p):
        old = s[j]
        for i in range(n):
            c_ = Y[i, j]
            for c in range(C):
                S[i, c] -= loglam[j, c_, configs[old, c]]
        for g in range(G):
            logp[g] = log_xi[g]
        for i in range(n):
            # sum_c phi_c e^{S_ic} lambda_j(y, c_g) = sum_k lambda_j(y, k) M[g, k]
            mx = -np.inf
            for c in range(C):
                v = log_phi[c] + S[i, c]
                E[c] = v
                if v > mx:
                    mx = v
            M[:, :] = 0.0
            for c in range(C):
                e = np.exp(E[c] - mx)
                for g in range(G):
                    M[g, configs[g, c]] += e
            c_ = Y[i, j]
            lmx = -np.inf
            for k in range(K):
                if loglam[j, c_, k] > lmx:
                    lmx = loglam[j, c_, k]
            for k in range(K):
                lam[k] = np.exp(loglam[j, c_, k] - lmx)
            for g in range(G):
                acc = 0.0
                for k in range(K):
                    acc += lam[k] * M[g, k]
                logp[g] += mx + lmx + np.log(acc)
        mx = logp.max()
        cum = 0.0
        for g in range(G):
            cum += np.exp(logp[g] - mx)
            logp[g] = cum
        thr = u[j] * cum
        new = G - 1
        for g in range(G):
            if thr < logp[g]:
                new = g
                break
        s[j] = new
        for i in range(n):
            c_ = Y[i, j]
            for c in range(C):
                S[i, c] += loglam[j, c_, configs[new, c]]
    return s, S
