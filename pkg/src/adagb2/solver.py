"""The adaptive bound-constrained iteration.

One iteration: draw a gradient estimate g_k, form the projected direction
d_k = P_F(x_k - g_k) - x_k, accumulate the per-coordinate weights
w_{k,i} = sqrt(w_{k-1,i}^2 + d_{k,i}^2), build the trust box of radii
|d_{k,i}|/w_{k,i}, take the projected first-order step s^L, scale it to
the Cauchy point s^Q of the local quadratic model, and move.  The method
never evaluates the objective to make decisions; function values appear
in traces for diagnostics only.

Every iteration is checked against the per-realization inequalities the
theory guarantees (linear-decrease, Cauchy-decrease, step bounds,
feasibility, the criticality triangle inequality); violations are counted
and reported, and should be zero up to floating-point slack.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .curvature import CurvatureProvider, CurvatureSpec, ZeroCurvature, make_provider
from .errors import ConfigurationError, NumericalError
from .geometry import BoundBox, project_box
from .oracle import OracleDraw, OracleStream, draw, validate_model
from .problem import TestProblem

STEP_MODES = ("cauchy", "first_order", "sign_adagrad")

MONITORS = (
    "feasible",
    "step_bound",
    "gsl_lower",
    "gsl_norm",
    "cauchy_decrease",
    "model_decrease",
    "gen_decrease",
    "xi_triangle",
)


@dataclass(frozen=True)
class SolverParams:
    sigma: float = 0.01  # initial weight, also the event threshold
    tau: float = 1.0
    kappa_s: float = 1.0
    step_mode: str = "cauchy"

    def __post_init__(self):
        if not 0.0 < self.sigma <= 1.0:
            raise ValueError(f"sigma must be in (0, 1], got {self.sigma}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if self.kappa_s < 1.0:
            raise ValueError(f"kappa_s must be >= 1, got {self.kappa_s}")
        if self.step_mode not in STEP_MODES:
            raise ValueError(
                f"unknown step_mode {self.step_mode!r}; choose from {STEP_MODES}"
            )


@dataclass
class SolverState:
    x: np.ndarray
    w: np.ndarray
    k: int = 0

    @classmethod
    def initial(cls, x_ini, box: BoundBox, params: SolverParams) -> "SolverState":
        x0 = project_box(np.asarray(x_ini, dtype=np.float64), box)
        return cls(x=x0, w=np.full(box.n, params.sigma), k=0)


@dataclass
class IterationTrace:
    k: int
    g: np.ndarray
    d: np.ndarray
    delta: np.ndarray
    s_l: np.ndarray
    gamma: float
    s_q: np.ndarray
    s: np.ndarray
    norm_d: float
    norm_xi: float
    err_norm: float
    f_value: float
    monitors: dict


def first_order_quantities(state: SolverState, g, box: BoundBox):
    """d, updated weights, trust radii and the projected first-order step."""
    g = np.ascontiguousarray(g, dtype=np.float64)
    if g.shape != state.x.shape:
        raise ValueError(f"gradient shape {g.shape} does not match {state.x.shape}")
    if not np.isfinite(g).all():
        raise NumericalError(
            f"non-finite gradient estimate at iteration {state.k}: {g}"
        )
    n = g.shape[0]
    d = np.empty(n)
    w_new = np.empty(n)
    delta = np.empty(n)
    s_l = np.empty(n)
    _kernels.first_order(state.x, g, box.lower, box.upper, state.w, d, w_new,
                         delta, s_l)
    return d, w_new, delta, s_l


def _cauchy_gamma(g, s_l, curv: float) -> float:
    if curv > 0.0:
        return min(1.0, -float(g @ s_l) / curv)
    return 1.0


def cauchy_step(g, s_l, provider: CurvatureProvider, x):
    """Scaling of s^L that minimizes the quadratic model along it."""
    gamma = _cauchy_gamma(g, s_l, provider.quad_form(x, s_l))
    return gamma, gamma * np.asarray(s_l, dtype=np.float64)


def _sign_step(g, delta, x, box: BoundBox):
    s = -np.sign(g) * delta
    np.clip(s, box.lower - x, box.upper - x, out=s)
    return s


def select_step(mode, g, delta, s_l, s_q, provider, x, box, params):
    """Choose the step for this iteration; see ``step`` for the fast path."""
    if mode == "cauchy":
        return s_q.copy()
    if mode == "first_order":
        return s_l.copy()
    if not isinstance(provider, ZeroCurvature):
        raise ConfigurationError("sign_adagrad mode requires the zero provider")
    s = _sign_step(g, delta, x, box)
    # With B = 0 the model decrease condition reads g^T s <= tau g^T s_q;
    # the feasibility clamp can break it near an active bound, in which
    # case the projected first-order step is always admissible.
    if float(g @ s) > params.tau * float(g @ s_q):
        return s_l.copy()
    return s


def _tol(slack, *values):
    m = 1.0
    for v in values:
        av = abs(v)
        if av > m:
            m = av
    return slack * m


def step(state: SolverState, oracle_draw: OracleDraw,
         provider: CurvatureProvider, box: BoundBox, params: SolverParams,
         slack: float = 1e-10):
    """Advance one iteration and record the trace with monitor results."""
    x = state.x
    g = oracle_draw.g
    d, w_new, delta, s_l = first_order_quantities(state, g, box)

    qf_sl = provider.quad_form(x, s_l)
    gamma = _cauchy_gamma(g, s_l, qf_sl)
    s_q = gamma * s_l
    qf_sq = gamma * gamma * qf_sl

    mode = params.step_mode
    if mode == "cauchy":
        s, qf_s = s_q, qf_sq
    elif mode == "first_order":
        s, qf_s = s_l, qf_sl
    else:
        if not isinstance(provider, ZeroCurvature):
            raise ConfigurationError("sign_adagrad mode requires the zero provider")
        s = _sign_step(g, delta, x, box)
        qf_s = 0.0
        if float(g @ s) > params.tau * float(g @ s_q):
            s, qf_s = s_l, qf_sl

    # Per-realization inequality monitors (all provable, so violations
    # beyond fp slack indicate a bug).
    g_sl = float(g @ s_l)
    g_s = float(g @ s)
    sum_d2_w = float((d * d / w_new).sum())
    norm_sl_sq = float(s_l @ s_l)
    norm_delta_sq = float(delta @ delta)
    sigma, tau, kappa_s = params.sigma, params.tau, params.kappa_s
    kappa_b = provider.kappa_b
    model_q = float(g @ s_q) + 0.5 * qf_sq
    model_s = g_s + 0.5 * qf_s

    x_raw = x + s
    feas_tol = slack * (1.0 + np.abs(x))
    monitors = {
        "feasible": bool(
            (x_raw >= box.lower - feas_tol).all()
            and (x_raw <= box.upper + feas_tol).all()
        ),
        "step_bound": bool(
            (np.abs(s) <= kappa_s * delta + feas_tol).all()
        ),
        "gsl_lower": g_sl <= -sigma * sum_d2_w + _tol(slack, g_sl, sum_d2_w),
        "gsl_norm": abs(g_sl) >= sigma * norm_sl_sq - _tol(slack, g_sl, norm_sl_sq),
        "cauchy_decrease": model_q
        <= -(sigma**2 / (2.0 * kappa_b)) * sum_d2_w + _tol(slack, model_q, sum_d2_w),
        "model_decrease": model_s <= tau * model_q + _tol(slack, model_s, model_q),
        "gen_decrease": g_s
        <= -(tau * sigma**2 / (2.0 * kappa_b)) * sum_d2_w
        + 0.5 * kappa_s**2 * kappa_b * norm_delta_sq
        + _tol(slack, g_s, sum_d2_w, norm_delta_sq),
    }

    norm_d = math.sqrt(float(d @ d))
    if oracle_draw.g_true is not None:
        xi = project_box(x - oracle_draw.g_true, box) - x
        norm_xi = math.sqrt(float(xi @ xi))
        err = oracle_draw.err_norm
        monitors["xi_triangle"] = norm_xi <= norm_d + err + _tol(
            slack, norm_xi, norm_d
        )
    else:
        norm_xi = np.nan
        err = np.nan

    # Reprojection removes the last-ulp rounding of x + (P(..) - x).
    x_new = project_box(x_raw, box)
    new_state = SolverState(x=x_new, w=w_new, k=state.k + 1)
    trace = IterationTrace(
        k=state.k, g=g, d=d, delta=delta, s_l=s_l, gamma=gamma, s_q=s_q, s=s,
        norm_d=norm_d, norm_xi=norm_xi, err_norm=err, f_value=np.nan,
        monitors=monitors,
    )
    return new_state, trace


@dataclass
class RunResult:
    """Per-iteration scalar history of one replication."""

    horizon: int
    event_a: bool
    norm_d: np.ndarray
    norm_xi: np.ndarray
    err_norm: np.ndarray
    gamma: np.ndarray
    f_values: np.ndarray
    dir_err: np.ndarray  # |<G - g, s>| per iteration (directional-error diagnostic)
    step_sq: np.ndarray  # ||s||^2 per iteration
    violations: dict
    violation_count: np.ndarray  # failed monitors per iteration
    final_state: SolverState
    traces: list = field(default_factory=list)

    @property
    def run_avg_d(self) -> np.ndarray:
        return np.cumsum(self.norm_d) / np.arange(1, self.horizon + 1)

    @property
    def run_avg_xi(self) -> np.ndarray:
        return np.cumsum(self.norm_xi) / np.arange(1, self.horizon + 1)

    @property
    def min_xi(self) -> np.ndarray:
        return np.minimum.accumulate(self.norm_xi)

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())


def run(problem: TestProblem, oracle_model, curvature_spec: CurvatureSpec,
        params: SolverParams, horizon: int, base_seed: int,
        replication: int = 0, diagnostics: bool = True,
        keep_traces: bool = False, slack: float = 1e-10) -> RunResult:
    """Run the algorithm for a fixed horizon (no stopping test).

    The iterate sequence is fully determined by (base_seed, replication):
    oracle draws use counter-based streams indexed by iteration.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    obj = problem.objective
    validate_model(oracle_model, obj)
    if params.step_mode == "sign_adagrad" and curvature_spec.kind != "zero":
        raise ConfigurationError("sign_adagrad mode requires the zero provider")
    provider = make_provider(curvature_spec, obj)
    stream = OracleStream(base_seed, replication)
    state = SolverState.initial(problem.x_ini, problem.box, params)
    box = problem.box

    norm_d = np.empty(horizon)
    norm_xi = np.full(horizon, np.nan)
    err_norm = np.full(horizon, np.nan)
    gamma_hist = np.empty(horizon)
    f_values = np.full(horizon, np.nan)
    dir_err = np.full(horizon, np.nan)
    step_sq = np.empty(horizon)
    violations = {name: 0 for name in MONITORS}
    violation_count = np.zeros(horizon, dtype=np.int64)
    traces = []
    event_a = False
    g_prev = None
    x_prev = None

    for k in range(horizon):
        od = draw(obj, state.x, oracle_model, stream.rng_shared(k),
                  with_true=diagnostics)
        if k > 0:
            provider.observe(x_prev, state.x, g_prev, od.g)
        x_prev = state.x
        g_prev = od.g

        if diagnostics:
            fval = obj.f(state.x)
            if not np.isfinite(fval):
                raise NumericalError(
                    f"non-finite objective value {fval} at iteration {k}"
                )

        state, trace = step(state, od, provider, box, params, slack=slack)

        if k == 0:
            event_a = trace.norm_d**2 >= params.sigma
        norm_d[k] = trace.norm_d
        norm_xi[k] = trace.norm_xi
        err_norm[k] = trace.err_norm
        gamma_hist[k] = trace.gamma
        step_sq[k] = float(trace.s @ trace.s)
        if diagnostics:
            f_values[k] = fval
            trace.f_value = fval
            dir_err[k] = abs(float((od.g_true - od.g) @ trace.s))
        for name, ok in trace.monitors.items():
            if not ok:
                violations[name] += 1
                violation_count[k] += 1
        if keep_traces:
            traces.append(trace)

    return RunResult(
        horizon=horizon, event_a=bool(event_a), norm_d=norm_d, norm_xi=norm_xi,
        err_norm=err_norm, gamma=gamma_hist, f_values=f_values,
        dir_err=dir_err, step_sq=step_sq, violations=violations,
        violation_count=violation_count, final_state=state, traces=traces,
    )
