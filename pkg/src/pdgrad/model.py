"""Problem representation and prox machinery.

A problem is ``min_{x in X} sum_i f_i(x) + h(x) + mu*omega(x)`` with smooth
convex components ``f_i`` (gradient oracles with Lipschitz constants),
a simple composite ``h`` (l1 + linear + constant), the Euclidean
regularizer ``omega(x) = 1/2 |x|_2^2`` and a closed convex feasible set
(all of R^n, a box, or a Euclidean ball).

The primal update primitive is the prox-mapping

    M_X(g, x0, eta) = argmin_{x in X} <g,x> + h(x) + mu*omega(x) + eta*P(x0,x)

with P(x0,x) = omega(x) - omega(x0) - <omega'(x0), x-x0> (Euclidean:
1/2 |x-x0|^2). The dual-side primitive is a dual prox-mapping on the
conjugate of one component, which reduces to a single gradient call:
the minimizer of <-x_tilde, y> + J_i(y) + tau*D_i(y0, y) is
grad_i((x_tilde + tau*z0)/(1+tau)) when y0 = grad_i(z0).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class NoClosedFormProxError(ValueError):
    """Raised for (X, h, omega) combinations without an exact prox."""


class ObjectiveUnavailableError(ValueError):
    """Raised when objective values are requested but no oracles exist."""


@dataclass(frozen=True)
class EuclideanOmega:
    """omega(x) = 1/2 |x|_2^2, the shipped strongly convex regularizer."""

    def value(self, x):
        return 0.5 * float(np.dot(x, x))

    def grad(self, x):
        return np.asarray(x, dtype=float)


EUCLIDEAN = EuclideanOmega()


@dataclass(frozen=True)
class CompositeTerm:
    """h(x) = lam1*|x|_1 + <lin, x> + const (any part may be absent)."""

    lam1: float = 0.0
    lin: Optional[np.ndarray] = None
    const: float = 0.0

    def __post_init__(self):
        if self.lam1 < 0:
            raise ValueError("lam1 must be nonnegative")
        if self.lin is not None:
            object.__setattr__(
                self, "lin", np.ascontiguousarray(self.lin, dtype=float)
            )

    @property
    def is_zero(self):
        return self.lam1 == 0.0 and self.lin is None and self.const == 0.0

    def value(self, x):
        v = self.const
        if self.lam1 > 0.0:
            v += self.lam1 * float(np.sum(np.abs(x)))
        if self.lin is not None:
            v += float(np.dot(self.lin, x))
        return v

    def lin_or_zeros(self, n):
        if self.lin is None:
            return np.zeros(n)
        return self.lin


ZERO_H = CompositeTerm()


@dataclass(frozen=True)
class FeasibleSet:
    """All of R^n, a box [lo, hi], or a Euclidean ball around a center."""

    kind: str = "all"
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    radius: float = 0.0

    def __post_init__(self):
        if self.kind not in ("all", "box", "ball"):
            raise ValueError(f"unknown feasible set kind {self.kind!r}")
        for name in ("lo", "hi", "center"):
            arr = getattr(self, name)
            if arr is not None:
                object.__setattr__(
                    self, name, np.ascontiguousarray(arr, dtype=float)
                )
        if self.kind == "box" and (self.lo is None or self.hi is None):
            raise ValueError("box set needs lo and hi")
        if self.kind == "ball" and (self.center is None or self.radius <= 0):
            raise ValueError("ball set needs center and positive radius")

    @property
    def bounded(self):
        return self.kind in ("box", "ball")

    def project(self, x):
        if self.kind == "box":
            return np.clip(x, self.lo, self.hi)
        if self.kind == "ball":
            d = x - self.center
            nd = float(np.linalg.norm(d))
            if nd <= self.radius:
                return np.array(x, dtype=float)
            return self.center + (self.radius / nd) * d
        return np.array(x, dtype=float)

    def contains(self, x, tol=1e-12):
        return bool(
            np.linalg.norm(x - self.project(x)) <= tol * (1.0 + np.linalg.norm(x))
        )

    def max_prox_distance(self, x0):
        """max_{x in X} P(x0, x) in closed form; None when X is unbounded."""
        if self.kind == "box":
            far = np.maximum((self.lo - x0) ** 2, (self.hi - x0) ** 2)
            return 0.5 * float(np.sum(far))
        if self.kind == "ball":
            return 0.5 * (float(np.linalg.norm(x0 - self.center)) + self.radius) ** 2
        return None

    def sample(self, rng, n):
        """A random feasible point (for property tests and diagnostics)."""
        if self.kind == "box":
            return self.lo + rng.random(n) * (self.hi - self.lo)
        if self.kind == "ball":
            d = rng.standard_normal(n)
            d /= np.linalg.norm(d)
            return self.center + self.radius * rng.random() ** (1.0 / n) * d
        return rng.standard_normal(n)


ALL_SPACE = FeasibleSet("all")


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable finite-sum composite problem with per-component oracles.

    ``grad_i(i, x)`` returns the gradient of component i anywhere on R^n
    (required by the randomized solver, whose dual points may leave X);
    ``lip[i]`` is its gradient Lipschitz constant and ``lip_f`` the
    constant of the summed gradient (defaults to sum(lip)). ``objective_i``
    and ``opt_x`` are optional diagnostics; ``grad_full`` is an optional
    aggregate-gradient shortcut; ``kernel_data`` marks instances whose
    runs can use the compiled loops.
    """

    m: int
    n: int
    grad_i: Callable[[int, np.ndarray], np.ndarray]
    lip: np.ndarray
    mu: float = 0.0
    h: CompositeTerm = ZERO_H
    omega: EuclideanOmega = EUCLIDEAN
    feasible: FeasibleSet = ALL_SPACE
    lip_f: Optional[float] = None
    objective_i: Optional[Callable[[int, np.ndarray], float]] = None
    opt_x: Optional[np.ndarray] = None
    grad_full: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kernel_data: object = None
    name: str = ""

    def __post_init__(self):
        lip = np.ascontiguousarray(self.lip, dtype=float)
        if lip.shape != (self.m,):
            raise ValueError(f"lip must have shape ({self.m},)")
        if np.any(lip < 0):
            raise ValueError("Lipschitz constants must be nonnegative")
        object.__setattr__(self, "lip", lip)
        if self.lip_f is None:
            object.__setattr__(self, "lip_f", float(np.sum(lip)))
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.opt_x is not None:
            object.__setattr__(
                self, "opt_x", np.ascontiguousarray(self.opt_x, dtype=float)
            )

    @property
    def lip_total(self):
        return float(np.sum(self.lip))

    def full_gradient(self, x):
        if self.grad_full is not None:
            return self.grad_full(x)
        g = np.zeros(self.n)
        for i in range(self.m):
            g += self.grad_i(i, x)
        return g

    def component_value(self, i, x):
        if self.objective_i is None:
            raise ObjectiveUnavailableError(
                "objective unavailable: no objective_i oracle"
            )
        return float(self.objective_i(i, x))

    def smooth_value(self, x):
        return float(sum(self.component_value(i, x) for i in range(self.m)))

    @property
    def psi_star(self):
        """Objective at the known minimizer; None when opt_x is absent."""
        if self.opt_x is None or self.objective_i is None:
            return None
        return objective_value(self, self.opt_x)


@dataclass
class DualBlockState:
    """Per-component dual memory: y = grad_i(x_under) at all times."""

    x_under: np.ndarray
    y: np.ndarray


def primal_prox_distance(x0, x):
    """Euclidean prox distance P(x0, x) = 1/2 |x - x0|_2^2."""
    x0 = np.asarray(x0, dtype=float)
    x = np.asarray(x, dtype=float)
    if x0.shape != x.shape:
        raise ValueError(f"dimension mismatch: {x0.shape} vs {x.shape}")
    d = x - x0
    return 0.5 * float(np.dot(d, d))


def _check_supported(problem):
    if not isinstance(problem.omega, EuclideanOmega):
        raise NoClosedFormProxError(
            "no closed-form prox: only the Euclidean omega is shipped"
        )
    if problem.feasible.kind == "ball" and problem.h.lam1 > 0.0:
        raise NoClosedFormProxError(
            "no closed-form prox: l1 composite with a ball constraint"
        )


def soft_threshold(v, lam):
    """Componentwise sign(v) * max(|v| - lam, 0)."""
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def primal_prox_map(problem, g, x0, eta):
    """Prox-mapping M_X(g, x0, eta); exact for every shipped (X, h, omega).

    Raises :class:`NoClosedFormProxError` for unsupported combinations
    rather than approximating.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    g = np.asarray(g, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(x0))):
        raise ValueError("prox inputs must be finite")
    _check_supported(problem)
    fs = problem.feasible
    h = problem.h
    v = eta * x0 - g
    if h.lin is not None:
        v = v - h.lin
    if h.lam1 > 0.0:
        v = soft_threshold(v, h.lam1)
    x = v / (problem.mu + eta)
    if fs.kind == "box":
        return np.clip(x, fs.lo, fs.hi)
    if fs.kind == "ball":
        return fs.project(x)
    return x


def simple_argmin(problem, g):
    """argmin_{x in X} <g,x> + h(x) + mu*omega(x) (the eta -> 0 prox).

    Needs mu > 0, or a bounded X with lam1 = 0; used by gap certificates.
    """
    _check_supported(problem)
    g = np.asarray(g, dtype=float)
    h = problem.h
    a = g if h.lin is None else g + h.lin
    fs = problem.feasible
    if problem.mu > 0.0:
        v = -a
        if h.lam1 > 0.0:
            v = soft_threshold(v, h.lam1)
        x = v / problem.mu
        return fs.project(x) if fs.bounded else x
    if h.lam1 > 0.0 or not fs.bounded:
        raise NoClosedFormProxError(
            "no closed-form minimizer: mu = 0 needs a bounded X and lam1 = 0"
        )
    if fs.kind == "box":
        return np.where(a > 0, fs.lo, np.where(a < 0, fs.hi, fs.lo)).astype(float)
    na = float(np.linalg.norm(a))
    if na == 0.0:
        return np.array(fs.center, dtype=float)
    return fs.center - fs.radius * a / na


def dual_ascent_step(problem, i, x_tilde, block, tau):
    """One dual prox-mapping on component i, realized as a gradient call.

    Returns the new block with x_under' = (x_tilde + tau*x_under)/(1+tau)
    and y' = grad_i(x_under').
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    x_under = (np.asarray(x_tilde, dtype=float) + tau * block.x_under) / (1.0 + tau)
    return DualBlockState(x_under=x_under, y=problem.grad_i(i, x_under))


def objective_value(problem, x):
    """Psi(x) = sum_i f_i(x) + h(x) + mu*omega(x); needs objective oracles."""
    x = np.asarray(x, dtype=float)
    return (
        problem.smooth_value(x)
        + problem.h.value(x)
        + problem.mu * problem.omega.value(x)
    )


@dataclass(frozen=True)
class QuadKernelData:
    """Dense quadratic stack: f_i(x) = 1/2 x'Q_i x + b_i'x + c_i."""

    qs: np.ndarray  # (m, n, n)
    bs: np.ndarray  # (m, n)
    cs: np.ndarray  # (m,)
    qsum: Optional[np.ndarray] = None
    bsum: Optional[np.ndarray] = None
    csum: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "qs", np.ascontiguousarray(self.qs, dtype=float))
        object.__setattr__(self, "bs", np.ascontiguousarray(self.bs, dtype=float))
        object.__setattr__(self, "cs", np.ascontiguousarray(self.cs, dtype=float))
        if self.qsum is None:
            object.__setattr__(self, "qsum", np.ascontiguousarray(self.qs.sum(axis=0)))
            object.__setattr__(self, "bsum", np.ascontiguousarray(self.bs.sum(axis=0)))
            object.__setattr__(self, "csum", float(self.cs.sum()))


@dataclass(frozen=True)
class TridiagKernelData:
    """Block-separable family: component i acts on block i via a tridiagonal map."""

    m: int
    nt: int
    kappa: float
    scale: float


def quad_problem_from_stack(kd, mu=0.0, h=ZERO_H, feasible=ALL_SPACE, opt_x=None, name=""):
    """Build a ProblemInstance over a dense quadratic stack (kernel-eligible)."""
    m, n = kd.bs.shape

    def grad_i(i, x):
        return kd.qs[i] @ x + kd.bs[i]

    def objective_i(i, x):
        return 0.5 * float(x @ (kd.qs[i] @ x)) + float(kd.bs[i] @ x) + float(kd.cs[i])

    def grad_full(x):
        return kd.qsum @ x + kd.bsum

    lip = np.array([float(np.linalg.eigvalsh(kd.qs[i])[-1]) for i in range(m)])
    lip_f = float(np.linalg.eigvalsh(kd.qsum)[-1])
    return ProblemInstance(
        m=m,
        n=n,
        grad_i=grad_i,
        lip=lip,
        mu=mu,
        h=h,
        feasible=feasible,
        lip_f=lip_f,
        objective_i=objective_i,
        opt_x=opt_x,
        grad_full=grad_full,
        kernel_data=kd,
        name=name,
    )
