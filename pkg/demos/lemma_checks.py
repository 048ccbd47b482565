"""Per-iteration checks of the bounds behind the convergence argument.

Bounds with explicit numerals are asserted; bounds with unspecified constants
report the constant each iteration needed.
"""

import warnings

from mc_implicit import verify
from mc_implicit.groundtruth import RegimeWarning
from mc_implicit.harness.config import load_config
from mc_implicit.harness.experiment import build_run_config
from mc_implicit.optimizer import run

warnings.simplefilter("ignore", RegimeWarning)

exp = load_config("thm1_overparam")
res = run(build_run_config(exp, exp.cells()[0], 0, keep_states=True))
reports = verify.run_all_checks(res)
print(verify.format_table(reports))
print("explicit-constant violations:", verify.explicit_violations(reports))
