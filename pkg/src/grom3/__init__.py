"""Dimension-grouped mixed membership models for multivariate categorical data."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .model import (  # noqa: F401
    GroM3Model,
    ModelDims,
    core_tensor,
    gom_grouping,
    lcm_grouping,
    log_prob,
    marginal_probability_tensor,
    model_cramers_v,
    pairwise_joint,
    response_log_prob,
)
from .simulate import Dataset, LatentRecord, SCENARIOS, preset_scenario, sample_dataset  # noqa: F401
from .identifiability import (  # noqa: F401
    IdentifiabilityReport,
    check_theorem1,
    check_theorem2,
    check_theorem3,
    recover_alpha_from_core,
)
from .mcmc import ChainState, SamplerConfig, Trace, run_chain  # noqa: F401
from .posterior import (  # noqa: F401
    PosteriorSummary,
    align_profiles,
    ari,
    model_selection_scan,
    rmse,
    sample_cramers_v,
    summarize,
    summarize_grouping,
    waic,
)
