"""Numerical tolerances used across the package.

Every tolerance lives here so a run can override them in one place::

    from mc_implicit import constants
    tol = constants.DEFAULT.replace(ortho_abs=1e-9)
"""

from dataclasses import dataclass, replace as _replace


@dataclass(frozen=True)
class Tolerances:
    ortho_abs: float = 1e-10      # ||V^T V - I||_F for an orthonormal basis
    recon_rel: float = 1e-8       # relative error of reconstructions
    sym_abs: float = 1e-10        # max |A - A^T| accepted as symmetric
    unit_norm: float = 1e-8       # | ||Z|| - 1 | for initialization directions
    rank_rel: float = 1e-12       # sigma_min / sigma_max below this is singular
    diverge_factor: float = 1e3   # err_fro > factor * ||X*||_F aborts a run

    def replace(self, **changes):
        return _replace(self, **changes)


DEFAULT = Tolerances()
