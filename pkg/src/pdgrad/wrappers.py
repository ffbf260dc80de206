"""Reductions that extend the randomized solver beyond mu > 0 smooth problems.

* perturbation: mu = 0 over a bounded X — add delta * P(x0, .) with
  delta = eps/(2*Omega_X^2), solve the strongly convex surrogate;
* smoothing: max-structured nonsmooth components — replace each by its
  smoothed majorant-minorant with gradient constant |A_i|^2/delta,
  delta = eps/(2*Omega_Y^2);
* unconstrained: X = R^n, h = 0, mu = 0 — add delta/2 |x - x0|^2 with
  delta = L*eps/2 and report a scale-free relative accuracy.

Each wrapper derives its iteration budget from the bound calculators at
the surrogate's strong-convexity modulus, capped by the caller.
"""

import math
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np

from .model import (
    ALL_SPACE,
    ZERO_H,
    CompositeTerm,
    ProblemInstance,
    objective_value,
)
from .rpdg import run_rpdg
from .schedules import iteration_bound, rpdg_nonuniform_params
from .trace import Trace


def shift_composite(h, lin_shift, const_shift):
    """h'(x) = h(x) + <lin_shift, x> + const_shift."""
    lin = lin_shift if h.lin is None else h.lin + lin_shift
    return CompositeTerm(lam1=h.lam1, lin=lin, const=h.const + const_shift)


@dataclass(frozen=True)
class PerturbationSpec:
    """Accuracy target, anchor, and the induced regularization weight."""

    eps: float
    omega_x_sq: float
    x_anchor: np.ndarray

    def __post_init__(self):
        if self.eps <= 0 or self.omega_x_sq <= 0:
            raise ValueError("eps and omega_x_sq must be positive")
        object.__setattr__(
            self, "x_anchor", np.ascontiguousarray(self.x_anchor, dtype=float)
        )

    @property
    def delta(self):
        return self.eps / (2.0 * self.omega_x_sq)


def perturbed_problem(problem, delta, x_anchor):
    """The surrogate with mu' = mu + delta and the anchor's linear shift.

    Adding delta*P(x_anchor, x) = delta/2 |x|^2 - delta<x_anchor, x> +
    delta/2 |x_anchor|^2 keeps the smooth components (and their kernel
    data) untouched.
    """
    h2 = shift_composite(
        problem.h, -delta * x_anchor, 0.5 * delta * float(x_anchor @ x_anchor)
    )
    return replace(
        problem,
        mu=problem.mu + delta,
        h=h2,
        opt_x=None,
        name=problem.name + f"+perturb(delta={delta:g})",
    )


@dataclass
class WrapperResult:
    x_bar: np.ndarray
    trace: Trace
    delta: float
    budget: int
    schedule_kind: str
    objective: Optional[float] = None
    r_ac: Optional[float] = None
    lip_delta: Optional[float] = None


def perturb_solve(
    problem,
    eps,
    x0,
    mode="expectation",
    lam=None,
    seed=0,
    k_max=None,
):
    """Solve a mu = 0 problem over a bounded X to expected accuracy eps.

    Builds the delta-perturbed surrogate, runs the randomized solver with
    the Lipschitz-weighted distribution for the calculated budget (capped
    by ``k_max``), and returns its ergodic mean. ``mode="probability"``
    takes a confidence level ``lam`` and enlarges the budget accordingly.
    """
    if problem.mu != 0.0:
        raise ValueError("perturbation applies to mu = 0 problems")
    x0 = np.ascontiguousarray(x0, dtype=float)
    omega_sq = problem.feasible.max_prox_distance(x0)
    if omega_sq is None:
        raise ValueError(
            "unbounded feasible set: use unconstrained_solve for X = R^n"
        )
    if mode not in ("expectation", "probability"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "probability" and lam is None:
        raise ValueError("probability mode needs lam")
    pspec = PerturbationSpec(eps=eps, omega_x_sq=omega_sq, x_anchor=x0)
    delta = pspec.delta
    surrogate = perturbed_problem(problem, delta, x0)
    total = problem.lip_total
    budget = iteration_bound(
        "gap",
        problem.m,
        8.0 * total / delta,
        problem.lip_f / delta,
        omega_sq,
        eps / 2.0,
        lam=lam if mode == "probability" else None,
        mu=delta,
    )
    if k_max is not None:
        budget = min(budget, int(k_max))
    schedule = rpdg_nonuniform_params(problem.m, problem.lip, delta)
    res = run_rpdg(surrogate, schedule, x0, budget, seed)
    obj = None
    if problem.objective_i is not None:
        obj = objective_value(problem, res.x_bar)
    return WrapperResult(
        x_bar=res.x_bar,
        trace=res.trace,
        delta=delta,
        budget=budget,
        schedule_kind=schedule.kind,
        objective=obj,
    )


@dataclass(frozen=True)
class SmoothingSpec:
    """Saddle description of nonsmooth components f_i(x) = max_{y in Y_i}
    <A_i x, y> - <q_i, y>, with per-component box or ball dual sets.

    The smoother for component i is v_i(y) = 1/2 |y - y_c|^2 centered at
    the projection y_c of the origin onto Y_i; ``delta`` is unset until
    :meth:`with_delta` configures the smoothing level.
    """

    linear_maps: List[np.ndarray]
    dual_kinds: List[str]
    dual_lo: List[Optional[np.ndarray]]
    dual_hi: List[Optional[np.ndarray]]
    dual_centers: List[Optional[np.ndarray]]
    dual_radii: List[float]
    offsets: List[np.ndarray]
    delta: Optional[float] = None

    def __post_init__(self):
        for kind in self.dual_kinds:
            if kind not in ("box", "ball"):
                raise ValueError(f"unsupported dual set kind {kind!r}")

    @property
    def m(self):
        return len(self.linear_maps)

    @property
    def n(self):
        return self.linear_maps[0].shape[1]

    def with_delta(self, delta):
        if delta <= 0:
            raise ValueError("delta must be positive")
        return replace(self, delta=float(delta))

    def prox_center(self, i):
        """Projection of the origin onto Y_i."""
        if self.dual_kinds[i] == "box":
            return np.clip(np.zeros_like(self.dual_lo[i]), self.dual_lo[i], self.dual_hi[i])
        c = self.dual_centers[i]
        r = self.dual_radii[i]
        nc = float(np.linalg.norm(c))
        if nc <= r:
            return np.zeros_like(c)
        return c * (1.0 - r / nc)

    def project_dual(self, i, y):
        if self.dual_kinds[i] == "box":
            return np.clip(y, self.dual_lo[i], self.dual_hi[i])
        c = self.dual_centers[i]
        r = self.dual_radii[i]
        d = y - c
        nd = float(np.linalg.norm(d))
        if nd <= r:
            return y
        return c + (r / nd) * d

    def omega_yi_sq(self, i):
        """max_{y in Y_i} v_i(y), the component's smoothing range."""
        yc = self.prox_center(i)
        if self.dual_kinds[i] == "box":
            far = np.maximum((self.dual_lo[i] - yc) ** 2, (self.dual_hi[i] - yc) ** 2)
            return 0.5 * float(np.sum(far))
        return 0.5 * (float(np.linalg.norm(yc - self.dual_centers[i])) + self.dual_radii[i]) ** 2

    @property
    def omega_y_sq(self):
        return float(sum(self.omega_yi_sq(i) for i in range(self.m)))

    def op_norm(self, i):
        a = self.linear_maps[i]
        if a.shape[0] == 1:
            return float(np.linalg.norm(a[0]))
        return float(np.linalg.norm(a, 2))

    def lip_tilde(self):
        """Smoothed-gradient constants |A_i|^2 / delta (needs delta set)."""
        if self.delta is None:
            raise ValueError("smoothing level delta is unset")
        return np.array([self.op_norm(i) ** 2 / self.delta for i in range(self.m)])


def smooth_component_value_grad(spec, i, x):
    """Value and gradient of the smoothed component i at x (delta from spec).

    The inner maximizer is the projection of y_c + (A_i x - q_i)/delta
    onto Y_i; the gradient is A_i' applied to it.
    """
    if spec.delta is None:
        raise ValueError("smoothing level delta is unset")
    a = spec.linear_maps[i]
    r = a @ x - spec.offsets[i]
    yc = spec.prox_center(i)
    y_star = spec.project_dual(i, yc + r / spec.delta)
    value = float(r @ y_star) - 0.5 * spec.delta * float((y_star - yc) @ (y_star - yc))
    grad = a.T @ y_star
    return value, grad


def nonsmooth_component_value(spec, i, x):
    """Exact (unsmoothed) component value max_{y in Y_i} <A_i x - q_i, y>."""
    a = spec.linear_maps[i]
    r = a @ x - spec.offsets[i]
    if spec.dual_kinds[i] == "box":
        return float(np.sum(np.maximum(r * spec.dual_lo[i], r * spec.dual_hi[i])))
    return float(r @ spec.dual_centers[i]) + spec.dual_radii[i] * float(np.linalg.norm(r))


def smoothed_instance(spec, mu, h=ZERO_H, feasible=ALL_SPACE, name="smoothed"):
    """ProblemInstance whose components are the smoothed majorants."""
    if spec.delta is None:
        raise ValueError("smoothing level delta is unset")

    def grad_i(i, x):
        return smooth_component_value_grad(spec, i, x)[1]

    def objective_i(i, x):
        return smooth_component_value_grad(spec, i, x)[0]

    return ProblemInstance(
        m=spec.m,
        n=spec.n,
        grad_i=grad_i,
        lip=spec.lip_tilde(),
        mu=mu,
        h=h,
        feasible=feasible,
        objective_i=objective_i,
        name=name,
    )


def _dual_norm_bound(spec, i):
    """max_{y in Y_i} |y|, for crude minimizer-radius bounds."""
    if spec.dual_kinds[i] == "box":
        return float(np.linalg.norm(np.maximum(np.abs(spec.dual_lo[i]), np.abs(spec.dual_hi[i]))))
    return float(np.linalg.norm(spec.dual_centers[i])) + spec.dual_radii[i]


def _p0_bound_unconstrained(spec, mu, h, x0):
    """Upper bound on P(x0, x*) from subgradient norms at stationarity."""
    g_max = sum(spec.op_norm(i) * _dual_norm_bound(spec, i) for i in range(spec.m))
    if h.lin is not None:
        g_max += float(np.linalg.norm(h.lin))
    if h.lam1 > 0.0:
        g_max += h.lam1 * math.sqrt(spec.n)
    radius = g_max / mu
    return 0.5 * (float(np.linalg.norm(x0)) + radius) ** 2


def smooth_solve(
    spec,
    base,
    eps,
    x0,
    seed=0,
    k_max=None,
    p0=None,
):
    """Solve the nonsmooth problem described by ``spec`` and ``base`` to
    expected accuracy eps in the original objective.

    ``base`` supplies the composite parts (mu, h, feasible set) and the
    exact objective for diagnostics. Half the accuracy budget goes to the
    smoothing level, half to the inner solve; mu = 0 dispatches to the
    perturbation reduction and then needs a bounded X.
    """
    x0 = np.ascontiguousarray(x0, dtype=float)
    mu = base.mu
    h = getattr(base, "h", ZERO_H)
    feasible = getattr(base, "feasible", ALL_SPACE)
    omega_y_sq = spec.omega_y_sq
    delta = eps / (2.0 * omega_y_sq)
    cspec = spec.with_delta(delta)
    inst = smoothed_instance(cspec, mu=mu, h=h, feasible=feasible)

    if mu <= 0.0:
        if not feasible.bounded:
            raise ValueError("mu = 0 smoothing needs a bounded feasible set")
        inner = perturb_solve(inst, eps / 2.0, x0, seed=seed, k_max=k_max)
        inner.delta = delta
        if hasattr(base, "value"):
            inner.objective = float(base.value(inner.x_bar))
        return inner

    if p0 is None:
        p0 = feasible.max_prox_distance(x0)
        if p0 is None:
            p0 = _p0_bound_unconstrained(cspec, mu, h, x0)
    total = float(np.sum(inst.lip))
    budget = iteration_bound(
        "gap",
        inst.m,
        8.0 * total / mu,
        inst.lip_f / mu,
        p0,
        eps / 2.0,
        mu=mu,
    )
    if k_max is not None:
        budget = min(budget, int(k_max))
    schedule = rpdg_nonuniform_params(inst.m, inst.lip, mu)
    res = run_rpdg(inst, schedule, x0, budget, seed)
    obj = float(base.value(res.x_bar)) if hasattr(base, "value") else None
    return WrapperResult(
        x_bar=res.x_bar,
        trace=res.trace,
        delta=delta,
        budget=budget,
        schedule_kind=schedule.kind,
        objective=obj,
    )


def unconstrained_solve(
    problem,
    eps_rel,
    x0,
    seed=0,
    k_max=None,
    f_star=None,
    dist0_sq=None,
):
    """Solve min f(x) over R^n (h = 0, mu = 0) to expected relative accuracy.

    Perturbs with delta = L*eps/2 anchored at x0 and runs the randomized
    solver for a dimension-free budget. The relative accuracy
    2*(f(xbar) - f*) / (L*(1 + d0^2)) is reported when f* and the squared
    distance d0^2 from x0 to the nearest minimizer are available (falling
    back to the instance's known minimizer).
    """
    if eps_rel <= 0:
        raise ValueError("eps_rel must be positive")
    if problem.mu != 0.0 or not problem.h.is_zero:
        raise ValueError("reduction applies to h = 0, mu = 0 problems")
    if problem.feasible.kind != "all":
        raise ValueError("reduction applies to unconstrained problems")
    x0 = np.ascontiguousarray(x0, dtype=float)
    total = problem.lip_total
    delta = total * eps_rel / 2.0
    lip_delta = total + delta
    surrogate = perturbed_problem(problem, delta, x0)

    cond = 8.0 * (2.0 / eps_rel + 1.0)  # 8 * L_delta / delta
    root = math.sqrt((problem.m - 1.0) ** 2 + 4.0 * problem.m * cond)
    alpha = 1.0 - 1.0 / ((problem.m + 1.0) + root)
    bracket = problem.m + 2.0 * math.sqrt(2.0 * problem.m * (2.0 / eps_rel + 1.0))
    poly = 3.0 * eps_rel + 4.0 + (2.0 + eps_rel) * (2.0 / eps_rel + 1.0)
    budget = int(
        math.ceil(2.0 * math.log(8.0 * bracket * poly / eps_rel) / (-math.log(alpha)))
    )
    if k_max is not None:
        budget = min(budget, int(k_max))
    schedule = rpdg_nonuniform_params(problem.m, problem.lip, delta)
    res = run_rpdg(surrogate, schedule, x0, budget, seed)

    r_ac = None
    obj = None
    if problem.objective_i is not None:
        obj = objective_value(problem, res.x_bar)
        if f_star is None and problem.opt_x is not None:
            f_star = objective_value(problem, problem.opt_x)
        if dist0_sq is None and problem.opt_x is not None:
            d = x0 - problem.opt_x
            dist0_sq = float(d @ d)
        if f_star is not None and dist0_sq is not None:
            r_ac = 2.0 * (obj - f_star) / (total * (1.0 + dist0_sq))
    return WrapperResult(
        x_bar=res.x_bar,
        trace=res.trace,
        delta=delta,
        budget=budget,
        schedule_kind=schedule.kind,
        objective=obj,
        r_ac=r_ac,
        lip_delta=lip_delta,
    )
