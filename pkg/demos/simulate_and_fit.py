"""Simulate from a preset, fit the sampler and compare with the truth.

Usage: python3 demos/simulate_and_fit.py [scenario] [n] [iterations]
"""
import sys
import time

import numpy as np

from grom3 import SamplerConfig, preset_scenario, run_chain, sample_dataset, summarize
from grom3.posterior import evaluate


def main(scenario="K3-p30", n=500, iterations=3000):
    truth = preset_scenario(scenario)
    data, _ = sample_dataset(truth, n, seed=1)
    cfg = SamplerConfig(G=truth.G, K=truth.K, iterations=iterations,
                        burn_in=iterations * 2 // 3, thin=5, seed=2)
    start = time.time()
    trace = run_chain(data, cfg)
    summ = summarize(trace)
    ev = evaluate(summ.model(), truth)
    print(f"{scenario}: n={n}, {iterations} sweeps in {time.time() - start:.1f} s")
    print(f"  mean MH acceptance  {trace.mean_acceptance():.3f}")
    print(f"  ARI of grouping     {ev['ari']:.3f}")
    print(f"  RMSE(Lambda)        {ev['rmse_lambda']:.4f}")
    print(f"  RMSE(alpha)         {ev['rmse_alpha']:.4f}")
    print(f"  alpha (true)        {np.round(truth.alpha, 3)}")
    print(f"  alpha (posterior)   {np.round(summ.alpha_mean[ev['permutation']], 3)}")
    print(f"  WAIC                {summ.waic:.1f}")


if __name__ == "__main__":
    args = sys.argv[1:]
    main(args[0] if args else "K3-p30", *(int(a) for a in args[1:3]))
