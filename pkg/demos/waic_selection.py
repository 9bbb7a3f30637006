"""Choose the number of variable groups by WAIC on simulated data.

Usage: python3 demos/waic_selection.py [n] [iterations]
"""
import sys

from grom3 import SamplerConfig, model_selection_scan, preset_scenario, sample_dataset


def main(n=500, iterations=2000):
    truth = preset_scenario("K3-p30")
    data, _ = sample_dataset(truth, n, seed=11)
    cfg = SamplerConfig(G=truth.G, K=truth.K, iterations=iterations,
                        burn_in=iterations * 2 // 3, seed=4)

    def show(row):
        flag = "" if row["kept"] else "  (discarded: empty group)"
        print(f"  G={row['G']} K={row['K']}  WAIC {row['waic']:.1f}{flag}", flush=True)

    print(f"true G={truth.G}, K={truth.K}; scanning G in 4..8 with K=3")
    result = model_selection_scan(data, range(4, 9), [3], cfg, progress=show)
    print("selected (G, K) =", result.selected)


if __name__ == "__main__":
    main(*(int(a) for a in sys.argv[1:3]))
