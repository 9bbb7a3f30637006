import sys

import numpy as np
import pytest

from grom3.model import GroM3Model


def random_model(rng, p=4, G=2, K=2, d=2, s=None, alpha=None):
    """Random valid model with uniform-simplex table columns."""
    d = (d,) * p if np.isscalar(d) else tuple(d)
    s = np.arange(p) % G if s is None else np.asarray(s)
    lambdas = [rng.dirichlet(np.ones(dj), size=K).T for dj in d]
    alpha = rng.uniform(0.3, 3.0, size=K) if alpha is None else alpha
    return GroM3Model(s, lambdas, alpha, G)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_ITEMS = [f"criterion {i}" for i in range(1, 10)] + ["regression"]


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion that was collected."""
    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    results = mod.RESULTS
    ran = [name for name in ACCEPTANCE_ITEMS if name in results]
    if not ran and not terminalreporter.stats.get("failed"):
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in ACCEPTANCE_ITEMS:
        if name in results:
            ok, detail = results[name]
            terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'} {detail}")
        else:
            terminalreporter.write_line(f"{name}: NOT RUN or errored before a verdict")
