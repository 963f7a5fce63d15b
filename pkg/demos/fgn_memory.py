"""
Fractional Gaussian noise: memory and its one-step predictor
============================================================

Draw fGn paths for a few Hurst exponents, compare the sample
autocorrelation with the closed form, and show how much of the next
value is predictable from the past.
"""

import numpy as np

from vbsmc import FgnSpec, fgn_autocorrelation, sample_fgn
from vbsmc.fgn import FgnPredictor

rng = np.random.default_rng(0)
lags = np.arange(0, 11)

# sample autocorrelation from many short paths vs the closed form
for h in (0.5, 0.7, 0.8):
    paths = sample_fgn(64, FgnSpec(h, 1.0), rng, size=4000)
    emp = [np.mean(paths[:, : 64 - k] * paths[:, k:]) for k in lags]
    print(f"H={h}: rho(1..3) closed form {np.round(fgn_autocorrelation(lags[1:4], h), 3)}"
          f"  sample {np.round(emp[1:4], 3)}")

# predictable share of the variance grows with the history length
for h in (0.6, 0.8, 0.95):
    pred = FgnPredictor(h)
    print(f"H={h}: conditional variance after 1, 10, 100 steps",
          [round(float(pred.variance(k)), 4) for k in (1, 10, 100)])

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for h in (0.5, 0.7, 0.9):
        axes[0].plot(np.cumsum(sample_fgn(500, FgnSpec(h), rng)), label=f"H={h}")
        axes[1].plot(lags, fgn_autocorrelation(lags, h), "o-", label=f"H={h}")
    axes[0].set_title("cumulative sum (fBm)")
    axes[1].set_title("autocorrelation")
    axes[1].legend()
    fig.tight_layout()
    fig.savefig("fgn_memory.png", dpi=100)
    print("wrote fgn_memory.png")
