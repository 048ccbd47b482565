"""Gradient descent on ``f(U) = ||P_Omega(U U^T - X*)||_F^2 / (4p)`` with trace recording.

The U-update only ever sees ``P_Omega(X*)`` (the *observed* handle). The
signal/residual split ``U = S + E`` along the dynamic basis ``V_t`` starts
from ``V_0 = V*`` and therefore needs the ground truth; it is bookkeeping and
never feeds back into ``U``.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import constants
from .errors import DimensionError, DivergenceError, SingularityError
from .groundtruth import materialize
from .initialization import init_direction, scale_init
from .matops import lowrank_sym_op_norm, op_norm, polar_orthonormalize, two_inf_norm
from .sampling import apply_P_Omega

STATUSES = ("converged", "max_iters", "diverged")


class TraceRecord(NamedTuple):
    t: int
    loss: float
    err_fro: float
    err_op: float
    sig_min: float
    sig_max: float
    res_norm: float
    v_dist_op: float
    v_dist_fro: float
    v_incoh: float
    decoupling: float
    m_norm: float
    lambda_norm: float
    grad_norm: float


TRACE_FIELDS = TraceRecord._fields


@dataclass(frozen=True, eq=False)
class IterateState:
    t: int
    U: np.ndarray
    V: np.ndarray | None = None
    S: np.ndarray | None = None
    E: np.ndarray | None = None


@dataclass(frozen=True)
class EtaRule:
    kind: str
    value: float

    @classmethod
    def explicit(cls, eta):
        return cls("explicit", float(eta))

    @classmethod
    def theorem(cls, c_eta=0.25):
        return cls("theorem", float(c_eta))

    def __post_init__(self):
        if self.kind not in ("explicit", "theorem"):
            raise ValueError(f"eta rule kind must be 'explicit' or 'theorem', got {self.kind!r}")


@dataclass(frozen=True, eq=False)
class RunConfig:
    gt: object
    obs: object
    init: object
    eta_rule: EtaRule = EtaRule.theorem(0.25)
    max_iters: int = 1000
    stop_tol: float = 0.0
    record_every: int = 1
    keep_states: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.gt.d != self.obs.d:
            raise DimensionError(f"ground truth d={self.gt.d} but mask d={self.obs.d}")


@dataclass(eq=False)
class RunResult:
    config: RunConfig
    eta: float
    U0: np.ndarray
    trace: list
    final: IterateState
    status: str
    states: list | None = field(default=None, repr=False)

    @property
    def iterations(self):
        return self.final.t

    def column(self, name):
        i = TRACE_FIELDS.index(name)
        return np.array([rec[i] for rec in self.trace])

    def relative_error(self):
        return self.trace[-1].err_fro / float(np.linalg.norm(materialize(self.config.gt)))

    def sigma_stream(self):
        """``Sigma_t = V_t^T U_t U_t^T V_t`` for every stored state."""
        if self.states is None:
            raise ValueError("run was executed without keep_states")
        out = []
        for _, U, V in self.states:
            W = V.T @ U
            out.append(W @ W.T)
        return out


def residual_operator(obs, observed, U):
    """``M = R_Omega(X* - U U^T)`` computed from the observed entries only."""
    A = np.where(obs.mask, observed - U @ U.T, 0.0)
    return (A + A.T) / (2.0 * obs.p)


def objective(obs, observed, U):
    """``||P_Omega(U U^T - X*)||_F^2 / (4p)``."""
    U = np.asarray(U, dtype=float)
    observed = np.asarray(observed, dtype=float)
    if U.ndim != 2 or U.shape[0] != obs.d or observed.shape != (obs.d, obs.d):
        raise DimensionError("U must be d x r' and observed d x d")
    A = np.where(obs.mask, U @ U.T - observed, 0.0)
    return float(np.sum(A * A) / (4.0 * obs.p))


def gradient(obs, observed, U):
    """``R_Omega(U U^T - X*) U``."""
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != obs.d or np.shape(observed) != (obs.d, obs.d):
        raise DimensionError("U must be d x r' and observed d x d")
    return -residual_operator(obs, observed, U) @ U


def step_size(gt, obs, eta_rule):
    """Explicit step, or ``c_eta * mu * r / (sqrt(p d) * sigma_1)``."""
    if eta_rule.kind == "explicit":
        eta = eta_rule.value
    else:
        eta = eta_rule.value * gt.mu * gt.r / (np.sqrt(obs.p * gt.d) * gt.sigma1)
    if not eta > 0:
        raise ValueError(f"step size must be positive, got {eta}")
    return float(eta)


def split(U, V):
    S = V @ (V.T @ U)
    return S, U - S


def initial_state(U0, Vstar=None):
    U0 = np.array(U0, dtype=float)
    if Vstar is None:
        return IterateState(t=0, U=U0)
    V = np.array(Vstar, dtype=float)
    S, E = split(U0, V)
    return IterateState(t=0, U=U0, V=V, S=S, E=E)


def advance(state, obs, observed, eta, M=None):
    """One gradient step ``U <- U + eta M U`` and ``V <- polar((I + eta M) V)``."""
    U = state.U
    if M is None:
        M = residual_operator(obs, observed, U)
    U1 = U + eta * (M @ U)
    if state.V is None:
        return IterateState(t=state.t + 1, U=U1)
    try:
        V1 = polar_orthonormalize(state.V + eta * (M @ state.V))
    except (SingularityError, ValueError) as exc:
        raise DivergenceError(f"dynamic basis update broke down at t={state.t}: {exc}", t=state.t) from exc
    S1, E1 = split(U1, V1)
    return IterateState(t=state.t + 1, U=U1, V=V1, S=S1, E=E1)


def _sym(A):
    return (A + A.T) / 2.0


def make_record(state, M, obs, observed, Xstar, gt):
    """Full diagnostic vector at ``state``; ``M`` must be ``M_t`` for this state."""
    U, V = state.U, state.V
    Vstar, r = gt.basis, gt.r
    UUt = U @ U.T
    Delta = _sym(Xstar - UUt)
    A = np.where(obs.mask, UUt - observed, 0.0)
    s = np.linalg.svd(V.T @ U, compute_uv=False)
    S, E = state.S, state.E
    rp = U.shape[1]
    # Delta = [U*, U] diag(1, -1) [U*, U]^T and Lambda = U U^T - S S^T are low rank
    delta_op = lowrank_sym_op_norm(np.hstack([gt.factor, U]), np.r_[np.ones(r), -np.ones(rp)])
    lambda_op = lowrank_sym_op_norm(np.hstack([U, S]), np.r_[np.ones(rp), -np.ones(rp)])
    dV = V - Vstar
    return TraceRecord(
        t=int(state.t),
        loss=float(np.sum(A * A) / (4.0 * obs.p)),
        err_fro=float(np.linalg.norm(Delta)),
        err_op=delta_op,
        sig_min=float(s[r - 1]) if r <= s.size else 0.0,
        sig_max=float(s[0]),
        res_norm=float(np.linalg.norm(E, 2)),
        v_dist_op=float(np.linalg.norm(dV, 2)),
        v_dist_fro=float(np.linalg.norm(dV)),
        v_incoh=two_inf_norm(V),
        decoupling=op_norm(_sym(Delta - M)),
        m_norm=op_norm(M),
        lambda_norm=lambda_op,
        grad_norm=float(np.linalg.norm(M @ U)),
    )


def run(config, U0=None):
    """Run gradient descent until the stop rule, ``max_iters`` or divergence.

    The stop rule is ``||X* - U U^T||_F <= stop_tol * ||X*||_F``. A run
    diverges when that error exceeds ``1e3 * ||X*||_F`` or the dynamic basis
    update becomes singular. ``U0`` overrides the configured initialization.
    """
    gt, obs = config.gt, config.obs
    Xstar = materialize(gt)
    observed = apply_P_Omega(obs, Xstar)
    eta = step_size(gt, obs, config.eta_rule)
    if U0 is None:
        if config.init.r_prime < gt.r:
            raise DimensionError(f"r_prime={config.init.r_prime} is below the true rank r={gt.r}")
        Z = init_direction(config.init, gt.d, obs, observed)
        U0 = scale_init(Z, config.init.alpha)
    U0 = np.array(U0, dtype=float)
    if U0.ndim != 2 or U0.shape[0] != gt.d:
        raise DimensionError(f"U0 must have {gt.d} rows, got shape {U0.shape}")
    state = initial_state(U0, gt.basis)
    norm_x = float(np.linalg.norm(Xstar))
    blowup = constants.DEFAULT.diverge_factor * norm_x
    trace, states = [], ([] if config.keep_states else None)
    status = None
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            t = state.t
            M = residual_operator(obs, observed, state.U)
            err = float(np.linalg.norm(Xstar - state.U @ state.U.T))
            finite = np.isfinite(err) and np.isfinite(M).all()
            if not finite or err > blowup:
                status = "diverged"
            elif err <= config.stop_tol * norm_x:
                status = "converged"
            elif t >= config.max_iters:
                status = "max_iters"
            if finite and (t % config.record_every == 0 or status is not None):
                trace.append(make_record(state, M, obs, observed, Xstar, gt))
                if states is not None:
                    states.append((t, state.U, state.V))
            if status is not None:
                break
            try:
                state = advance(state, obs, observed, eta, M=M)
            except DivergenceError:
                status = "diverged"
                break
    return RunResult(config=config, eta=eta, U0=U0, trace=trace, final=state, status=status, states=states)


def gradient_descent(obs, observed, U0, eta, max_iters, grad_tol=1e-12):
    """Plain gradient descent that never touches unobserved data.

    Stops when ``||grad f||_F <= grad_tol * sigma_hat`` where ``sigma_hat``
    is the top eigenvalue magnitude of ``R_Omega(P_Omega(X*))``. Returns
    ``(U, iterations, status)``.
    """
    observed = np.asarray(observed, dtype=float)
    R0 = (np.where(obs.mask, observed, 0.0) + np.where(obs.mask, observed, 0.0).T) / (2.0 * obs.p)
    threshold = grad_tol * op_norm(R0)
    U = np.array(U0, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(max_iters):
            M = residual_operator(obs, observed, U)
            G = M @ U
            gnorm = float(np.linalg.norm(G))
            if not np.isfinite(gnorm):
                return U, t, "diverged"
            if gnorm <= threshold:
                return U, t, "converged"
            U = U + eta * G
    return U, max_iters, "max_iters"
