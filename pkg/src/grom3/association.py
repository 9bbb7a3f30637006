"""Empirical association between categorical variables."""
from __future__ import annotations

import itertools

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from .errors import SameVariable
from .model import cramers_v_from_joint


def sample_joint(data, j, m):
    """Empirical joint distribution of variables ``j`` and ``m``."""
    if j == m:
        raise SameVariable("need two distinct variables")
    Y = data.responses
    joint = np.zeros((data.d[j], data.d[m]))
    np.add.at(joint, (Y[:, j], Y[:, m]), 1)
    return joint / Y.shape[0]


def sample_cramers_v(data, j, m, normalization="classical"):
    """Cramer's V of the empirical contingency table of variables ``j`` and ``m``."""
    return cramers_v_from_joint(sample_joint(data, j, m), normalization)


def sample_cramers_v_matrix(data, normalization="classical"):
    p = data.p
    out = np.eye(p)
    for j, m in itertools.combinations(range(p), 2):
        out[j, m] = out[m, j] = sample_cramers_v(data, j, m, normalization)
    return out


def cluster_variables(data, G):
    """Split variables into ``G`` clusters by Ward linkage on ``1 - V``.

    Variables that share a latent assignment are more strongly associated
    than variables in different groups, so this gives a data-driven starting
    grouping. Labels are 0-based, numbered by first appearance.
    """
    p = data.p
    if G >= p:
        return np.arange(p) % G
    if G == 1:
        return np.zeros(p, dtype=int)
    dist = 1.0 - sample_cramers_v_matrix(data)
    np.fill_diagonal(dist, 0.0)
    lab = fcluster(linkage(squareform(dist, checks=False), "ward"), G, "maxclust")
    _, first = np.unique(lab, return_index=True)
    order = np.argsort(first)
    relabel = np.empty(order.size, dtype=int)
    relabel[order] = np.arange(order.size)
    return relabel[np.unique(lab, return_inverse=True)[1]]
