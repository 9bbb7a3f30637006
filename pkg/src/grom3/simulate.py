"""Forward simulation from the generative hierarchy and the benchmark presets."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownScenario
from .model import GroM3Model


@dataclass(eq=False)
class Dataset:
    """Categorical responses, 0-based: ``responses[i, j]`` lies in ``0..d[j]-1``."""

    responses: np.ndarray
    d: tuple
    item_names: list = field(default=None)

    def __post_init__(self):
        Y = np.asarray(self.responses)
        if Y.ndim != 2:
            raise ValueError("responses must be an n x p matrix")
        self.responses = Y.astype(np.int64, copy=False)
        self.d = tuple(int(v) for v in self.d)
        if len(self.d) != Y.shape[1]:
            raise ValueError("d must have one entry per column")
        if Y.size and (Y.min() < 0 or np.any(Y.max(axis=0) >= np.array(self.d))):
            raise ValueError("responses out of range for d")
        if self.item_names is None:
            self.item_names = [f"item{j + 1}" for j in range(Y.shape[1])]
        elif len(self.item_names) != Y.shape[1]:
            raise ValueError("item_names must have one entry per column")

    @property
    def n(self):
        return self.responses.shape[0]

    @property
    def p(self):
        return self.responses.shape[1]


@dataclass(eq=False)
class LatentRecord:
    pi: np.ndarray
    z: np.ndarray


def log_dirichlet(rng, alpha, size=None):
    """Log of a Dirichlet draw, stable for very small concentrations.

    Uses ``Gamma(a) = Gamma(a + 1) * U**(1/a)`` so tiny shapes do not
    underflow to zero before normalization.
    """
    alpha = np.asarray(alpha, dtype=float)
    shape = alpha.shape if size is None else tuple(np.atleast_1d(size)) + alpha.shape
    g = rng.standard_gamma(alpha + 1.0, size=shape)
    u = rng.random(shape)
    logg = np.log(g) + np.log(u) / alpha
    mx = logg.max(axis=-1, keepdims=True)
    return logg - (mx + np.log(np.exp(logg - mx).sum(axis=-1, keepdims=True)))


def subject_rng(seed, i):
    """Counter-based stream for subject ``i``; independent of any other subject."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(i)])))


def _categorical(u, probs):
    """Inverse-CDF draw from each row of ``probs`` using uniforms ``u``."""
    cdf = np.cumsum(probs, axis=-1)
    idx = (u[..., None] * cdf[..., -1:] >= cdf).sum(axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1)


def sample_dataset(model: GroM3Model, n: int, seed: int):
    """Draw ``n`` subjects from the model.

    Each subject uses its own Philox stream keyed on ``(seed, i)``, so the
    output does not depend on how subjects are scheduled.

    Returns
    -------
    (Dataset, LatentRecord)
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    p, G, K = model.p, model.G, model.K
    dmax = max(model.d)
    # padded tables: lam[j, c, k]
    lam = np.zeros((p, dmax, K))
    for j, L in enumerate(model.lambdas):
        lam[j, : L.shape[0]] = L
    pi = np.empty((n, K))
    z = np.empty((n, G), dtype=np.int64)
    Y = np.empty((n, p), dtype=np.int64)
    for i in range(n):
        rng = subject_rng(seed, i)
        pi_i = np.exp(log_dirichlet(rng, model.alpha))
        z_i = _categorical(rng.random(G), np.broadcast_to(pi_i, (G, K)))
        probs = lam[np.arange(p), :, z_i[model.s]]
        Y[i] = _categorical(rng.random(p), probs)
        pi[i], z[i] = pi_i, z_i
    return Dataset(Y, model.d), LatentRecord(pi, z)


# --------------------------------------------------------------------------
# benchmark presets

#: The six 3 x 4 templates; variable j uses template j mod 6.
PRESET_TEMPLATES = (
    np.array([[0.1, 0.7, 0.3, 0.1], [0.8, 0.2, 0.4, 0.1], [0.1, 0.1, 0.3, 0.8]]),
    np.array([[0.1, 0.8, 0.1, 0.2], [0.2, 0.1, 0.6, 0.5], [0.7, 0.1, 0.3, 0.3]]),
    np.array([[0.1, 0.8, 0.2, 0.9], [0.2, 0.1, 0.5, 0.05], [0.7, 0.1, 0.3, 0.05]]),
    np.array([[0.1, 0.1, 0.8, 0.3], [0.8, 0.2, 0.1, 0.6], [0.1, 0.7, 0.1, 0.1]]),
    np.array([[0.2, 0.7, 0.3, 0.1], [0.6, 0.2, 0.4, 0.1], [0.2, 0.1, 0.3, 0.8]]),
    np.array([[0.1, 0.8, 0.1, 0.2], [0.2, 0.1, 0.1, 0.6], [0.7, 0.1, 0.8, 0.2]]),
)

PRESET_ALPHA = {2: (0.4, 0.5), 3: (0.4, 0.5, 0.6), 4: (0.4, 0.5, 0.6, 0.7)}
PRESET_GROUPS = {30: 6, 60: 12, 90: 15}

SCENARIOS = tuple(f"K{K}-p{p}" for K in (2, 3, 4) for p in (30, 60, 90))


def preset_grouping(p, G, layout="round_robin"):
    """Stacked-identity grouping: round-robin ``j mod G`` or contiguous blocks."""
    if layout == "round_robin":
        return np.arange(p) % G
    if layout == "blocks":
        return np.repeat(np.arange(G), p // G)
    raise ValueError(f"unknown layout {layout!r}")


def preset_scenario(name, layout="round_robin"):
    """Benchmark model ``"K{K}-p{p}"`` with ``d_j = 3`` for every variable."""
    if name not in SCENARIOS:
        raise UnknownScenario(name)
    K = int(name[1])
    p = int(name.split("-p")[1])
    G = PRESET_GROUPS[p]
    lambdas = []
    for j in range(p):
        # decimal entries kept verbatim; some columns sum to 1 - 2**-53 in binary
        lambdas.append(PRESET_TEMPLATES[j % 6][:, :K].copy())
    return GroM3Model(preset_grouping(p, G, layout), lambdas, PRESET_ALPHA[K], G)
