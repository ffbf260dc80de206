"""Deterministic primal-dual gradient solver.

Each iteration extrapolates the primal iterate, refreshes the dual point
by averaging toward the extrapolation, takes one full gradient there, and
performs a prox step:

    x~^t = alpha_t (x^{t-1} - x^{t-2}) + x^{t-1}
    x_^t = (x~^t + tau_t x_^{t-1}) / (1 + tau_t)
    g^t  = grad f(x_^t)
    x^t  = M_X(g^t, x^{t-1}, eta_t)

With the constant strongly convex policy this is a reparameterization of
the accelerated gradient scheme (see :func:`run_nesterov_ag`, kept as an
independent reference for the equivalence test). The ergodic output
xbar^k averages iterates with weights theta_t via the stable recursion
xbar^t = (1-w_t) xbar^{t-1} + w_t x^t, w_t = theta_t / sum_{s<=t} theta_s,
driven by the ratio theta_{t-1}/theta_t = alpha_t (never by theta_t
itself, which overflows).
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import schedules
from .model import (
    QuadKernelData,
    objective_value,
    primal_prox_distance,
    primal_prox_map,
    simple_argmin,
)
from .schedules import BoundParams, theoretical_upper_curve
from .trace import Trace


@dataclass
class PdgState:
    """Solver state; ``g`` always holds the full gradient at ``x_under``."""

    x_prev: np.ndarray
    x_prevprev: np.ndarray
    x_under: np.ndarray
    g: np.ndarray
    t: int
    ergodic_mean: np.ndarray
    erg_ratio: float  # running sum_{s<=t} theta_s / theta_t

    def copy(self):
        return PdgState(
            self.x_prev.copy(),
            self.x_prevprev.copy(),
            self.x_under.copy(),
            self.g.copy(),
            self.t,
            self.ergodic_mean.copy(),
            self.erg_ratio,
        )


def init_pdg_state(problem, x0):
    x0 = np.ascontiguousarray(x0, dtype=float)
    return PdgState(
        x_prev=x0.copy(),
        x_prevprev=x0.copy(),
        x_under=x0.copy(),
        g=problem.full_gradient(x0),
        t=0,
        ergodic_mean=x0.copy(),
        erg_ratio=0.0,
    )


def pdg_step(problem, state, params):
    """One iteration; ``params`` is (tau_t, eta_t, alpha_t).

    The ergodic weight ratio theta_{t-1}/theta_t equals alpha_t for every
    valid policy (it is one of the policy conditions), so alpha_t also
    drives the mean update.
    """
    tau, eta, alpha = params
    x_tilde = alpha * (state.x_prev - state.x_prevprev) + state.x_prev
    x_under = (x_tilde + tau * state.x_under) / (1.0 + tau)
    g = problem.full_gradient(x_under)
    x_new = primal_prox_map(problem, g, state.x_prev, eta)
    r = state.erg_ratio * alpha + 1.0
    w = 1.0 / r
    ergodic = (1.0 - w) * state.ergodic_mean + w * x_new
    return PdgState(
        x_prev=x_new,
        x_prevprev=state.x_prev,
        x_under=x_under,
        g=g,
        t=state.t + 1,
        ergodic_mean=ergodic,
        erg_ratio=r,
    )


@dataclass
class PdgResult:
    x_last: np.ndarray
    x_bar: np.ndarray
    g_bar: Optional[np.ndarray]
    trace: Trace
    history: Optional[list] = None
    under_history: Optional[list] = None


def run_pdg(
    problem,
    schedule,
    x0,
    k_max,
    stop=None,
    record_objective=True,
    keep_history=False,
    timing=False,
):
    """Run the deterministic solver for up to ``k_max`` iterations.

    ``stop`` may be ``("dist_tol", tol)`` to halt once P(x^t, x*) <= tol
    (requires a known minimizer). The trace records, per iteration, the
    distance P(x^t, x*) when known, objective values when oracles exist,
    and the matching theoretical bound curve.
    """
    if schedule.kind not in schedules.PDG_KINDS + (schedules.CUSTOM,):
        raise ValueError(f"not a deterministic-policy schedule: {schedule.kind}")
    if schedule.kind == schedules.PDG_STRONGLY_CONVEX and problem.mu <= 0:
        raise ValueError("strongly convex policy needs mu > 0")
    if schedule.kind == schedules.CUSTOM and schedule.contraction is None:
        raise ValueError("custom schedules need a contraction factor for the ergodic weights")
    x0 = np.ascontiguousarray(x0, dtype=float)
    opt = problem.opt_x
    p0 = primal_prox_distance(x0, opt) if opt is not None else None
    if schedule.kind == schedules.PDG_STRONGLY_CONVEX:
        bound_kind = "pdg_dist" if opt is not None else None
    elif schedule.kind == schedules.PDG_NONSTRONGLY:
        bound_kind = "pdg_gap" if opt is not None else None
    else:
        bound_kind = None
    bparams = (
        BoundParams(problem.mu, schedule.lip_f or problem.lip_f, schedule.contraction or 0.0, p0)
        if p0 is not None
        else None
    )

    dist_tol = None
    if stop is not None:
        mode, value = stop
        if mode != "dist_tol":
            raise ValueError(f"unknown stop rule {mode!r}")
        if opt is None:
            raise ValueError("dist_tol stop needs a known minimizer")
        dist_tol = float(value)

    state = init_pdg_state(problem, x0)
    g_erg = state.g.copy()
    history = [x0.copy()] if keep_history else None
    under_history = [] if keep_history else None

    rows_t, rows_dist, rows_obj, rows_objerg, rows_bound, rows_wall = [], [], [], [], [], []
    for t in range(1, k_max + 1):
        t0 = time.perf_counter_ns() if timing else 0
        params = schedule.params_at(t)
        state = pdg_step(problem, state, params)
        w = 1.0 / state.erg_ratio
        g_erg = (1.0 - w) * g_erg + w * state.g
        if keep_history:
            history.append(state.x_prev.copy())
            under_history.append(state.x_under.copy())
        rows_t.append(t)
        rows_wall.append(time.perf_counter_ns() - t0 if timing else 0)
        d = primal_prox_distance(state.x_prev, opt) if opt is not None else np.nan
        rows_dist.append(d)
        if record_objective and problem.objective_i is not None:
            rows_obj.append(objective_value(problem, state.x_prev))
            rows_objerg.append(objective_value(problem, state.ergodic_mean))
        else:
            rows_obj.append(np.nan)
            rows_objerg.append(np.nan)
        if bound_kind is not None and bparams is not None:
            rows_bound.append(theoretical_upper_curve(bound_kind, bparams, t))
        else:
            rows_bound.append(np.nan)
        if dist_tol is not None and d <= dist_tol:
            break

    k = len(rows_t)
    tr = Trace(
        t=np.array(rows_t, dtype=np.int64),
        grad_evals=np.array(rows_t, dtype=np.int64) * problem.m,
        wall_ns=np.array(rows_wall, dtype=np.int64),
        dist_p=np.array(rows_dist),
        obj=np.array(rows_obj),
        obj_ergodic=np.array(rows_objerg),
        bound_upper=np.array(rows_bound),
        bound_lower=np.full(k, np.nan),
    )
    return PdgResult(
        x_last=state.x_prev,
        x_bar=state.ergodic_mean,
        g_bar=g_erg,
        trace=tr,
        history=history,
        under_history=under_history,
    )


def run_nesterov_ag(problem, lambda_seq, eta_seq, x0, k):
    """Reference accelerated-gradient recursion (three-sequence form).

    x_^t = (1-lam_t) xbar^{t-1} + lam_t x^{t-1};  x^t = M_X(grad f(x_^t),
    x^{t-1}, eta_t);  xbar^t = (1-lam_t) xbar^{t-1} + lam_t x^t.
    Returns the (k+1, n) array of x iterates. It matches the primal-dual
    recursion under tau_t = (1-lam_t)/lam_t, alpha_t = lam_{t-1}(1-lam_t)/lam_t.
    """
    x0 = np.ascontiguousarray(x0, dtype=float)
    xs = np.empty((k + 1, x0.shape[0]))
    xs[0] = x0
    x_prev = x0.copy()
    x_bar = x0.copy()
    for t in range(1, k + 1):
        lam = float(lambda_seq[t - 1])
        if not 0.0 <= lam <= 1.0:
            raise ValueError("lambda_t must lie in [0, 1]")
        eta = float(eta_seq[t - 1])
        x_under = (1.0 - lam) * x_bar + lam * x_prev
        g = problem.full_gradient(x_under)
        x_new = primal_prox_map(problem, g, x_prev, eta)
        x_bar = (1.0 - lam) * x_bar + lam * x_new
        xs[t] = x_new
        x_prev = x_new
    return xs


def pd_gap_certificate(problem, x_bar, g_bar):
    """Computable saddle-point gap of (x_bar, g_bar) for quadratic instances.

    gap = Psi(x_bar) + J_f(g_bar) - min_{x in X} [h(x) + mu*omega(x) + <x, g_bar>]
    where J_f is the conjugate of the smooth sum, available in closed form
    for dense quadratic stacks with positive definite aggregate. Requires a
    bounded X (or mu > 0) so the inner minimum is attained.
    """
    kd = problem.kernel_data
    if not isinstance(kd, QuadKernelData):
        raise ValueError("gap certificate needs a dense quadratic instance")
    if not problem.feasible.bounded and problem.mu <= 0:
        raise ValueError("gap certificate needs a bounded X or mu > 0")
    # J_f(g) = 1/2 (g - bsum)' Qsum^{-1} (g - bsum) - csum
    r = np.linalg.solve(kd.qsum, g_bar - kd.bsum)
    j_f = 0.5 * float((g_bar - kd.bsum) @ r) - kd.csum
    x_min = simple_argmin(problem, g_bar)
    inner = (
        problem.h.value(x_min)
        + problem.mu * problem.omega.value(x_min)
        + float(g_bar @ x_min)
    )
    return objective_value(problem, x_bar) + j_f - inner
