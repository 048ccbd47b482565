"""Leave-one-out ghosts and the incoherence budget.

Classical ghosts drop row and column l from the mask and run their own
gradient descent; weakly coupled ghosts only borrow Sigma_t from the main run
and stay close to it. The three-term budget bounds the rows of V_t.
"""

import warnings

import numpy as np

from mc_implicit import loo
from mc_implicit.groundtruth import RegimeWarning
from mc_implicit.harness.config import load_config
from mc_implicit.harness.experiment import build_run_config
from mc_implicit.optimizer import run

warnings.simplefilter("ignore", RegimeWarning)

exp = load_config("thm1_overparam")
res = run(build_run_config(exp, exp.cells()[0], 0, keep_states=True))
gt = res.config.gt
rows = loo.sample_indices(gt.d, 8, exp.seeds(0)[3])
weak = loo.run_ghosts(res, rows, "weakly_coupled")
classical = loo.run_ghosts(res, rows, "classical")

target = np.sqrt(gt.mu * gt.r / (4 * gt.d))
print(f"rows {rows}, target sqrt(mu r / 4d) = {target:.3f}")
for t in (0, 50, 200, res.iterations):
    b = loo.incoherence_budget(res, weak, t)
    print(f"t={t:4d}  actual {b.actual:.3f} <= {b.bound:.3f} = {b.loo_err:.3f} + {b.prox_err:.3f} + {b.base:.3f}")
weak_max = max(r.prox_err for g in weak for r in loo.ghost_rows(res, g))
classical_max = max(r.prox_err for g in classical for r in loo.ghost_rows(res, g))
print(f"max weakly coupled prox {weak_max:.3f}, max classical dist(U_t, U_t^(l)) {classical_max:.3e}")
