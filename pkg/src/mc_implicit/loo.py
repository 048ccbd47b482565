"""Leave-one-out ghost sequences and the incoherence budget they feed.

Two kinds of ghost run alongside a main gradient-descent trajectory:

* classical: ``U^(l)_{t+1} = (I - eta R_{Omega^(l)}(U^(l) U^(l)^T - X*)) U^(l)``,
  started at ``U_0``. It never reads row or column ``l`` of the mask.
* weakly coupled: an orthonormal basis ``Vt^(l)`` started at ``V*`` and
  driven by ``R_{Omega^(l)}(X* - Vt Sigma_t Vt^T)`` where
  ``Sigma_t = V_t^T U_t U_t^T V_t`` is borrowed from the main run.

For each row ``l`` the triangle inequality gives
``||(V_t)_l|| <= ||(V_t - Vt^(l))_l|| + ||(Vt^(l) - V*)_l|| + ||V*_l||``,
which is what :func:`incoherence_budget` evaluates.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import rng as rng_mod
from .errors import DimensionError, DivergenceError, SingularityError
from .groundtruth import materialize
from .matops import polar_orthonormalize, procrustes_dist, procrustes_rotation, two_inf_norm
from .sampling import apply_R_Omega_loo

KINDS = ("classical", "weakly_coupled")
BASIN_CONSTANT = 0.1
GHOST_FIELDS = ("t", "l", "kind", "prox_err", "loo_row_err", "dist_to_truth")


@dataclass(eq=False)
class LooGhost:
    l: int
    kind: str
    states: list

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")

    def __len__(self):
        return len(self.states)


class GhostRow(NamedTuple):
    t: int
    l: int
    kind: str
    prox_err: float
    loo_row_err: float
    dist_to_truth: float


class IncoherenceBudget(NamedTuple):
    t: int
    loo_err: float
    prox_err: float
    base: float
    bound: float
    actual: float
    complete: bool
    loo_within_target: bool
    prox_within_target: bool


class BasinEntry(NamedTuple):
    entered: bool
    margins: tuple
    distances: tuple
    threshold: float


def _check_index(d, l):
    if not 0 <= int(l) < d:
        raise DimensionError(f"l must lie in [0, {d}), got {l}")
    return int(l)


def run_classical_loo(config, l, U0, eta, n_steps):
    """Classical ghost ``U^(l)_0 .. U^(l)_{n_steps}`` started at ``U0``.

    Stops early (returning the finite prefix) if the ghost blows up.
    """
    gt, obs = config.gt, config.obs
    l = _check_index(gt.d, l)
    Xstar = materialize(gt)
    U = np.array(U0, dtype=float)
    states = [U]
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(int(n_steps)):
            # same operation order as the main update, so p = 1 reproduces it bit for bit
            U = U + eta * (apply_R_Omega_loo(obs, l, Xstar - U @ U.T) @ U)
            if not np.isfinite(U).all():
                break
            states.append(U)
    return LooGhost(l=l, kind="classical", states=states)


def run_weakly_coupled_loo(sigmas, config, l, eta):
    """Weakly coupled ghost driven by the main run's ``Sigma_t`` stream.

    ``sigmas[t]`` must be present for every ``t``; the ghost has
    ``len(sigmas)`` states, the first being ``V*``.
    """
    gt, obs = config.gt, config.obs
    l = _check_index(gt.d, l)
    if any(s is None for s in sigmas):
        missing = [t for t, s in enumerate(sigmas) if s is None]
        raise ValueError(f"Sigma_t stream is missing t={missing[:5]}")
    Xstar = materialize(gt)
    V = np.array(gt.basis, dtype=float)
    states = [V]
    for Sig in sigmas[:-1]:
        M = apply_R_Omega_loo(obs, l, Xstar - V @ Sig @ V.T)
        try:
            V = polar_orthonormalize(V + eta * (M @ V))
        except SingularityError as exc:
            raise DivergenceError(f"weakly coupled ghost l={l} became singular", t=len(states) - 1) from exc
        states.append(V)
    return LooGhost(l=l, kind="weakly_coupled", states=states)


def _require_states(result):
    if result.states is None:
        raise ValueError("main run must be executed with keep_states=True")
    ts = [t for t, _, _ in result.states]
    if ts != list(range(len(ts))):
        raise ValueError("main run must be recorded with record_every=1")


def classical_ghost(result, l):
    """Classical ghost matching a completed main run step for step."""
    return run_classical_loo(result.config, l, result.U0, result.eta, result.iterations)


def weakly_coupled_ghost(result, l):
    _require_states(result)
    return run_weakly_coupled_loo(result.sigma_stream(), result.config, l, result.eta)


def _ghost_job(args):
    result, l, kind = args
    return classical_ghost(result, l) if kind == "classical" else weakly_coupled_ghost(result, l)


def run_ghosts(result, indices, kind, workers=1):
    """Ghosts for every ``l`` in ``indices``, optionally in a process pool."""
    jobs = [(result, int(l), kind) for l in indices]
    if workers <= 1 or len(jobs) <= 1:
        return [_ghost_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_ghost_job, jobs))


def sample_indices(d, k, seed):
    """``min(d, k)`` distinct sorted indices drawn from a labelled stream."""
    k = min(int(d), int(k))
    gen = rng_mod.stream(seed, "loo-sample", int(d), k)
    return sorted(int(i) for i in gen.choice(d, size=k, replace=False))


def parse_index_list(spec, d, seed):
    """``"sample:k"``, ``"all"`` or a comma-separated list of indices."""
    spec = str(spec).strip()
    if spec == "all":
        return list(range(d))
    if spec.startswith("sample:"):
        return sample_indices(d, int(spec.split(":", 1)[1]), seed)
    return [_check_index(d, int(x)) for x in spec.split(",") if x.strip()]


def ghost_rows(result, ghost):
    """Per-t diagnostics of one ghost against the main run.

    classical: ``prox_err = dist(U_t, U_t^(l))`` (Procrustes),
    ``loo_row_err`` the row-``l`` norm of ``U_t - U_t^(l) O`` for the
    aligning rotation, ``dist_to_truth = ||U^(l) U^(l)^T - X*||_F``.
    weakly coupled: ``prox_err = ||V_t - Vt^(l)||_F``,
    ``loo_row_err = ||(V* - Vt^(l))_l||``, ``dist_to_truth = ||Vt^(l) - V*||_F``.
    """
    _require_states(result)
    gt = result.config.gt
    Vstar = gt.basis
    Xstar = materialize(gt)
    l = ghost.l
    n = min(len(ghost.states), len(result.states))
    rows = []
    for t in range(n):
        G = ghost.states[t]
        _, U, V = result.states[t]
        if ghost.kind == "classical":
            prox = procrustes_dist(U, G)
            O = procrustes_rotation(U, G)
            row = float(np.linalg.norm((U - G @ O)[l]))
            truth = float(np.linalg.norm(G @ G.T - Xstar))
        else:
            prox = float(np.linalg.norm(V - G))
            row = float(np.linalg.norm((Vstar - G)[l]))
            truth = float(np.linalg.norm(G - Vstar))
        rows.append(GhostRow(t, l, ghost.kind, prox, row, truth))
    return rows


def incoherence_budget(result, ghosts, t):
    """Three-term bound on the row norms of ``V_t`` covered by ``ghosts``.

    ``actual`` is the largest row norm of ``V_t`` over the ghost rows; it
    equals ``||V_t||_{2,inf}`` when every row has a ghost (``complete``).
    The soft flags compare ``loo_err`` and ``prox_err`` with ``sqrt(mu r / (4d))``.
    """
    _require_states(result)
    gt = result.config.gt
    if not ghosts:
        raise ValueError("incoherence budget needs at least one weakly coupled ghost")
    for g in ghosts:
        if g.kind != "weakly_coupled":
            raise ValueError("incoherence budget needs weakly coupled ghosts")
        if t >= len(g.states):
            raise ValueError(f"ghost l={g.l} has no state at t={t}")
    Vstar = gt.basis
    V = result.states[t][2]
    loo_err = max(float(np.linalg.norm((Vstar - g.states[t])[g.l])) for g in ghosts)
    prox_err = max(float(np.linalg.norm(V - g.states[t])) for g in ghosts)
    base = two_inf_norm(Vstar)
    rows = sorted({g.l for g in ghosts})
    actual = float(np.max(np.linalg.norm(V[rows], axis=1)))
    target = float(np.sqrt(gt.mu * gt.r / (4.0 * gt.d)))
    return IncoherenceBudget(
        t=int(t), loo_err=loo_err, prox_err=prox_err, base=base, bound=loo_err + prox_err + base,
        actual=actual, complete=len(rows) == gt.d,
        loo_within_target=loo_err <= target, prox_within_target=prox_err <= target,
    )


def basin_threshold(gt, p, constant=BASIN_CONSTANT):
    """``constant * sqrt(sigma_r mu^3 r^3 log d / (p d^2))``."""
    d, r = gt.d, gt.r
    return float(constant * np.sqrt(gt.sigma_r * gt.mu ** 3 * r ** 3 * np.log(d) / (p * d * d)))


def basin_entry_check(U, ghosts_classical, gt, obs, constant=BASIN_CONSTANT):
    """Compare the three local-convergence distances with the basin threshold.

    ``ghosts_classical`` is a list of ``U^(l)_t`` matrices at the same ``t``.
    Margins are ``threshold - distance`` for ``dist(U, U*)``,
    ``max_l dist(U, U^(l))`` and ``max_l dist(U^(l), U*)``.
    """
    U = np.asarray(U, dtype=float)
    if U.shape != (gt.d, gt.r):
        raise DimensionError(f"basin entry needs exact parameterization: U is {U.shape}, r={gt.r}")
    Ustar = gt.factor
    thr = basin_threshold(gt, obs.p, constant)
    d_main = procrustes_dist(U, Ustar)
    d_prox = max((procrustes_dist(U, G) for G in ghosts_classical), default=0.0)
    d_ghost = max((procrustes_dist(G, Ustar) for G in ghosts_classical), default=0.0)
    dists = (d_main, d_prox, d_ghost)
    margins = tuple(thr - x for x in dists)
    return BasinEntry(entered=all(m >= 0 for m in margins), margins=margins, distances=dists, threshold=thr)


def first_basin_entry(result, ghosts, constant=BASIN_CONSTANT):
    """Earliest ``t`` at which :func:`basin_entry_check` fires, or ``None``."""
    _require_states(result)
    gt, obs = result.config.gt, result.config.obs
    n = min([len(result.states)] + [len(g.states) for g in ghosts])
    for t in range(n):
        if basin_entry_check(result.states[t][1], [g.states[t] for g in ghosts], gt, obs, constant).entered:
            return t
    return None

