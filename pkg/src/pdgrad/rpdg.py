"""Randomized primal-dual gradient solver.

One component is sampled per iteration; only its dual block is refreshed
(one gradient evaluation), and the prox step sees the aggregated gradient
plus the sampled block's change scaled by 1/p_i:

    x~^t   = alpha (x^{t-1} - x^{t-2}) + x^{t-1}
    x_i^t  = (x~^t + tau x_i^{t-1}) / (1 + tau)        (i = i_t only)
    y_i^t  = grad_i(x_i^t)                             (i = i_t only)
    x^t    = M_X(g^{t-1} + p_i^{-1}(y_i^t - y_i^{t-1}), x^{t-1}, eta)
    g^t    = g^{t-1} + y_i^t - y_i^{t-1}

The running aggregate g is re-summed from the blocks every
``kernels.RESUM_PERIOD`` iterations to bound float drift. Sampling is
inverse-CDF on a counter-based splitmix64 stream, so a run is a pure
function of (problem, schedule, x0, k_max, seed); structured instances
dispatch to the compiled loops in :mod:`pdgrad.kernels`.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels, schedules
from ._accel import pick_index, uniform01
from .model import (
    DualBlockState,
    QuadKernelData,
    TridiagKernelData,
    dual_ascent_step,
    objective_value,
    primal_prox_distance,
    primal_prox_map,
)
from .schedules import BoundParams, theoretical_upper_curve, validate_rpdg_conditions
from .trace import Trace

CONDITION_TOL = 1e-10


@dataclass(frozen=True)
class Sampler:
    """Seeded categorical sampler: inverse CDF over a splitmix64 stream.

    Draw t is a pure function of (seed, t); boundary ties resolve to the
    lower index.
    """

    probs: np.ndarray
    seed: int
    algorithm: str = "splitmix64"
    cum: Optional[np.ndarray] = None

    def __post_init__(self):
        p = np.ascontiguousarray(self.probs, dtype=float)
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        cum = np.cumsum(p)
        if abs(cum[-1] - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        cum[-1] = 1.0
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "cum", cum)
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)


def sample_index(sampler, t):
    """Component index for iteration t (deterministic given seed and t)."""
    u = uniform01(np.uint64(sampler.seed), np.uint64(t))
    return int(pick_index(sampler.cum, u))


@dataclass
class RpdgState:
    """Solver state; blocks[i].y = grad_i(blocks[i].x_under) at all times."""

    x_prev: np.ndarray
    x_prevprev: np.ndarray
    blocks: list
    g_sum: np.ndarray
    t: int
    grad_evals: int
    ergodic_mean: np.ndarray
    erg_ratio: float


def init_rpdg_state(problem, x0):
    x0 = np.ascontiguousarray(x0, dtype=float)
    blocks = []
    g = np.zeros(problem.n)
    for i in range(problem.m):
        y = problem.grad_i(i, x0)
        blocks.append(DualBlockState(x_under=x0.copy(), y=y))
        g += y
    return RpdgState(
        x_prev=x0.copy(),
        x_prevprev=x0.copy(),
        blocks=blocks,
        g_sum=g,
        t=0,
        grad_evals=problem.m,
        ergodic_mean=x0.copy(),
        erg_ratio=0.0,
    )


def resum_drift(state):
    """Norm gap between the running aggregate and a fresh block re-summation."""
    fresh = np.zeros_like(state.g_sum)
    for b in state.blocks:
        fresh += b.y
    return float(np.linalg.norm(fresh - state.g_sum))


def rpdg_step(problem, state, schedule, sampler):
    """One iteration (exactly one component-gradient evaluation)."""
    t = state.t + 1
    i = sample_index(sampler, t)
    tau, eta, alpha = schedule.params_at(t)
    x_tilde = alpha * (state.x_prev - state.x_prevprev) + state.x_prev
    new_block = dual_ascent_step(problem, i, x_tilde, state.blocks[i], tau)
    dy = new_block.y - state.blocks[i].y
    pg = state.g_sum + dy / schedule.probs[i]
    x_new = primal_prox_map(problem, pg, state.x_prev, eta)
    g_sum = state.g_sum + dy
    blocks = list(state.blocks)
    blocks[i] = new_block
    if t % kernels.RESUM_PERIOD == 0:
        g_sum = np.zeros_like(g_sum)
        for b in blocks:
            g_sum += b.y
    r = state.erg_ratio * schedule.theta_ratio_at(t) + 1.0
    w = 1.0 / r
    ergodic = (1.0 - w) * state.ergodic_mean + w * x_new
    return RpdgState(
        x_prev=x_new,
        x_prevprev=state.x_prev,
        blocks=blocks,
        g_sum=g_sum,
        t=t,
        grad_evals=state.grad_evals + 1,
        ergodic_mean=ergodic,
        erg_ratio=r,
    )


@dataclass
class RpdgResult:
    x_last: np.ndarray
    x_bar: np.ndarray
    trace: Trace
    state: Optional[RpdgState] = None


def _check_schedule(problem, schedule):
    if schedule.kind not in schedules.RPDG_KINDS and schedule.kind != schedules.CUSTOM:
        raise ValueError(f"not a randomized-policy schedule: {schedule.kind}")
    if schedule.probs is None or schedule.probs.shape[0] != problem.m:
        raise ValueError("schedule probabilities must match the component count")
    report = validate_rpdg_conditions(schedule, problem.lip, problem.mu)
    if not report.ok(CONDITION_TOL):
        name, slack = report.worst()
        raise ValueError(f"schedule violates the {name} condition (slack {slack:.3e})")


def _bound_column(problem, schedule, x0, k):
    opt = problem.opt_x
    if opt is None or schedule.contraction is None:
        return np.full(k, np.nan)
    p0 = primal_prox_distance(x0, opt)
    kind = {
        schedules.RPDG_NONUNIFORM: "rpdg_dist_nonuniform",
        schedules.RPDG_UNIFORM: "rpdg_dist_uniform",
    }.get(schedule.kind)
    if kind is None:
        return np.full(k, np.nan)
    bp = BoundParams(problem.mu, problem.lip_f, schedule.contraction, p0)
    return np.array([theoretical_upper_curve(kind, bp, t) for t in range(1, k + 1)])


def _kernel_eligible(problem):
    kd = problem.kernel_data
    if isinstance(kd, QuadKernelData):
        return True
    if isinstance(kd, TridiagKernelData):
        return problem.h.is_zero and problem.feasible.kind == "all"
    return False


def _run_kernel(problem, schedule, x0, k_max, sampler, record_objective):
    kd = problem.kernel_data
    n = problem.n
    opt = problem.opt_x
    has_star = opt is not None
    x_star = opt if has_star else np.zeros(n)
    fs = problem.feasible
    empty = np.zeros(0)
    if isinstance(kd, QuadKernelData):
        set_kind = {"all": kernels.SET_ALL, "box": kernels.SET_BOX, "ball": kernels.SET_BALL}[
            fs.kind
        ]
        if fs.kind == "ball" and problem.h.lam1 > 0.0:
            raise ValueError("no closed-form prox: l1 composite with a ball constraint")
        return kernels.rpdg_dense_quad(
            kd.qs,
            kd.bs,
            kd.qsum,
            kd.bsum,
            kd.csum,
            problem.mu,
            problem.h.lam1,
            problem.h.lin_or_zeros(n),
            problem.h.const,
            set_kind,
            fs.lo if fs.lo is not None else empty,
            fs.hi if fs.hi is not None else empty,
            fs.center if fs.center is not None else empty,
            fs.radius,
            schedule.tau,
            schedule.eta,
            schedule.alpha_extrap,
            sampler.probs,
            sampler.cum,
            np.ascontiguousarray(x0, dtype=float),
            k_max,
            np.uint64(sampler.seed),
            np.ascontiguousarray(x_star, dtype=float),
            has_star,
            record_objective,
        )
    return kernels.rpdg_tridiag(
        kd.m,
        kd.nt,
        kd.kappa,
        kd.scale,
        problem.mu,
        schedule.tau,
        schedule.eta,
        schedule.alpha_extrap,
        sampler.probs,
        sampler.cum,
        np.ascontiguousarray(x0, dtype=float),
        k_max,
        np.uint64(sampler.seed),
        np.ascontiguousarray(x_star, dtype=float),
        has_star,
        record_objective,
    )


def run_rpdg(
    problem,
    schedule,
    x0,
    k_max,
    seed,
    record_objective=False,
    use_kernel=None,
    keep_state=False,
    timing=False,
):
    """Run the randomized solver for ``k_max`` iterations with one seed.

    The trace records P(x^t, x*) when the minimizer is known, cumulative
    gradient evaluations (m initial + one per iteration), objective values
    when requested, and the matching expectation bound curve. Two runs
    with equal inputs produce identical traces bit for bit.
    """
    _check_schedule(problem, schedule)
    x0 = np.ascontiguousarray(x0, dtype=float)
    sampler = Sampler(probs=schedule.probs, seed=seed)
    if use_kernel is None:
        use_kernel = _kernel_eligible(problem)
    if use_kernel and not _kernel_eligible(problem):
        raise ValueError("instance has no compiled-kernel representation")

    t0 = time.perf_counter_ns() if timing else 0
    if use_kernel and not keep_state:
        x_last, x_bar, dist, obj, obj_erg, _, _ = _run_kernel(
            problem, schedule, x0, k_max, sampler, record_objective
        )
        state = None
    else:
        state = init_rpdg_state(problem, x0)
        dist = np.full(k_max, np.nan)
        obj = np.full(k_max, np.nan)
        obj_erg = np.full(k_max, np.nan)
        opt = problem.opt_x
        for t in range(1, k_max + 1):
            state = rpdg_step(problem, state, schedule, sampler)
            if opt is not None:
                dist[t - 1] = primal_prox_distance(state.x_prev, opt)
            if record_objective and problem.objective_i is not None:
                obj[t - 1] = objective_value(problem, state.x_prev)
                obj_erg[t - 1] = objective_value(problem, state.ergodic_mean)
        x_last, x_bar = state.x_prev, state.ergodic_mean
    wall = time.perf_counter_ns() - t0 if timing else 0

    ts = np.arange(1, k_max + 1, dtype=np.int64)
    wall_col = np.zeros(k_max, dtype=np.int64)
    if timing and k_max > 0:
        wall_col[-1] = wall
    tr = Trace(
        t=ts,
        grad_evals=ts + problem.m,
        wall_ns=wall_col,
        dist_p=dist,
        obj=obj,
        obj_ergodic=obj_erg,
        bound_upper=_bound_column(problem, schedule, x0, k_max),
        bound_lower=np.full(k_max, np.nan),
    )
    return RpdgResult(x_last=x_last, x_bar=x_bar, trace=tr, state=state)


@dataclass
class EnsembleStats:
    """Across-seed per-iteration statistics of a randomized run."""

    t: np.ndarray
    grad_evals: np.ndarray
    n_seeds: int
    dist_mean: np.ndarray
    dist_se: np.ndarray
    dist_q10: np.ndarray
    dist_q50: np.ndarray
    dist_q90: np.ndarray
    gap_mean: np.ndarray
    gap_se: np.ndarray
    bound_dist: np.ndarray
    bound_gap: np.ndarray


def _default_workers():
    return max(1, min(4, os.cpu_count() or 1))


def run_rpdg_ensemble(
    problem,
    schedule,
    x0,
    k_max,
    seeds,
    record_objective=True,
    use_kernel=None,
    workers=None,
):
    """Replicate a run across seeds; Monte-Carlo view of the expectation bounds.

    Returns per-iteration sample mean, standard error, and 10/50/90
    quantiles of P(x^t, x*), and of the ergodic objective gap when the
    optimal value is known. Seeds run on a thread pool; aggregation is
    ordered by seed index, so the result is independent of scheduling.
    """
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ValueError("an ensemble needs at least two seeds")
    _check_schedule(problem, schedule)
    x0 = np.ascontiguousarray(x0, dtype=float)

    def one(seed):
        res = run_rpdg(
            problem,
            schedule,
            x0,
            k_max,
            seed,
            record_objective=record_objective,
            use_kernel=use_kernel,
        )
        return res.trace

    n_workers = workers if workers is not None else _default_workers()
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            traces = list(pool.map(one, seeds))
    else:
        traces = [one(s) for s in seeds]

    s = len(seeds)
    dists = np.vstack([tr.dist_p for tr in traces])
    dist_mean = dists.mean(axis=0)
    dist_se = (
        dists.std(axis=0, ddof=1) / np.sqrt(s) if s > 1 else np.zeros(k_max)
    )
    q10, q50, q90 = np.quantile(dists, [0.1, 0.5, 0.9], axis=0)

    psi_star = problem.psi_star
    if record_objective and psi_star is not None:
        gaps = np.vstack([tr.obj_ergodic for tr in traces]) - psi_star
        gap_mean = gaps.mean(axis=0)
        gap_se = gaps.std(axis=0, ddof=1) / np.sqrt(s)
    else:
        gap_mean = np.full(k_max, np.nan)
        gap_se = np.full(k_max, np.nan)

    bound_dist = traces[0].bound_upper
    opt = problem.opt_x
    if opt is not None and schedule.contraction is not None:
        p0 = primal_prox_distance(x0, opt)
        bp = BoundParams(problem.mu, problem.lip_f, schedule.contraction, p0)
        bound_gap = np.array(
            [theoretical_upper_curve("rpdg_gap", bp, t) for t in range(1, k_max + 1)]
        )
    else:
        bound_gap = np.full(k_max, np.nan)

    ts = np.arange(1, k_max + 1, dtype=np.int64)
    return EnsembleStats(
        t=ts,
        grad_evals=ts + problem.m,
        n_seeds=s,
        dist_mean=dist_mean,
        dist_se=dist_se,
        dist_q10=q10,
        dist_q50=q50,
        dist_q90=q90,
        gap_mean=gap_mean,
        gap_se=gap_se,
        bound_dist=bound_dist,
        bound_gap=bound_gap,
    )
