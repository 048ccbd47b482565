"""Over-parameterization: the final error is set by the initialization scale.

With r'=20 against a rank-3 target, gradient descent from a small start
plateaus at an error that shrinks roughly in proportion to alpha, and
improves with the sampling rate. Prints median errors over 5 seeds.
"""

import numpy as np

from mc_implicit.harness.config import load_config
from mc_implicit.harness.experiment import aggregate, run_sweep

sweep = aggregate(run_sweep(load_config("fig1b"), workers=2))
print("median final relative error at p=0.5, T=1000")
for cell in sweep:
    print(f"  r'={cell.r_prime:2d} alpha={cell.alpha:.0e}  {cell.median_error:.2e}")

by_rate = aggregate(run_sweep(load_config("fig1a"), workers=2))
print("median final relative error at alpha=1e-4")
for rp in (3, 20):
    row = [c.median_error for c in by_rate if c.r_prime == rp]
    print(f"  r'={rp:2d}  " + "  ".join(f"{e:.1e}" for e in row))
print("p grid:", [c.p for c in by_rate if c.r_prime == 3])
print("r'=20 errors nonincreasing in p:",
      bool(np.all(np.diff([c.median_error for c in by_rate if c.r_prime == 20]) <= 0)))
