"""Monte Carlo estimates of the sampling concentration constants."""

from mc_implicit import verify
from mc_implicit.harness.baselines import compare_to_baseline

for p in (0.3, 0.5):
    reports = verify.estimate_concentration_constants(100, p, 3, trials=20, seed=0)
    print(f"p={p}")
    print(verify.format_table(reports))
    print("exceeds recorded baseline:", compare_to_baseline(reports, 100, p, 3) or "no")
