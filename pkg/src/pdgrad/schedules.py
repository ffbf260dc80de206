"""Step-size policies, their validity conditions, and theoretical bound curves.

Constant policies for the strongly convex case carry scalars; the
non-strongly-convex deterministic policy varies per iteration and is
evaluated through :func:`pdg_nsc_params`. Ergodic-mean weights
theta_t = contraction^-t are never materialized (they overflow float64
long before useful horizons); solvers consume the ratio
theta_{t-1}/theta_t instead.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

PDG_STRONGLY_CONVEX = "pdg_strongly_convex"
PDG_NONSTRONGLY = "pdg_nonstrongly"
RPDG_NONUNIFORM = "rpdg_nonuniform"
RPDG_UNIFORM = "rpdg_uniform"
CUSTOM = "custom"

RPDG_KINDS = (RPDG_NONUNIFORM, RPDG_UNIFORM)
PDG_KINDS = (PDG_STRONGLY_CONVEX, PDG_NONSTRONGLY)


@dataclass(frozen=True)
class Schedule:
    """Per-iteration parameters (tau_t, eta_t, alpha_t), sampling probabilities,
    and the contraction factor driving the theoretical curves.

    For kind == "pdg_nonstrongly" the scalar fields hold the t=1 values and
    ``params_at`` computes the varying ones; all other kinds are constant.
    ``validated`` marks schedules produced by the shipped constructors;
    custom schedules start unvalidated.
    """

    kind: str
    tau: float
    eta: float
    alpha_extrap: float
    probs: Optional[np.ndarray] = None
    contraction: Optional[float] = None
    cond_const: Optional[float] = None
    lip_f: Optional[float] = None
    validated: bool = False

    def __post_init__(self):
        if self.probs is not None:
            p = np.ascontiguousarray(self.probs, dtype=float)
            if np.any(p < 0):
                raise ValueError("sampling probabilities must be nonnegative")
            if abs(float(p.sum()) - 1.0) > 1e-12:
                raise ValueError("sampling probabilities must sum to 1")
            object.__setattr__(self, "probs", p)

    @property
    def m(self):
        return None if self.probs is None else int(self.probs.shape[0])

    def params_at(self, t):
        """(tau_t, eta_t, alpha_t) for iteration t >= 1."""
        if t < 1:
            raise ValueError("iteration index starts at 1")
        if self.kind == PDG_NONSTRONGLY:
            tau_t, eta_t, alpha_t, _ = pdg_nsc_params(self.lip_f, t)
            return tau_t, eta_t, alpha_t
        return self.tau, self.eta, self.alpha_extrap

    def theta_ratio_at(self, t):
        """theta_{t-1} / theta_t, the stable ergodic-weight ratio."""
        if self.kind == PDG_NONSTRONGLY:
            return (t - 1.0) / t
        return self.contraction


def pdg_sc_params(lip_f, mu):
    """Constant deterministic policy for mu > 0.

    tau = sqrt(2*L_f/mu), eta = sqrt(2*L_f*mu), alpha = tau/(1+tau).
    """
    if mu <= 0:
        raise ValueError("mu must be positive; use pdg_nsc_params when mu = 0")
    if lip_f <= 0:
        raise ValueError("lip_f must be positive")
    tau = math.sqrt(2.0 * lip_f / mu)
    eta = math.sqrt(2.0 * lip_f * mu)
    alpha = tau / (1.0 + tau)
    return Schedule(
        kind=PDG_STRONGLY_CONVEX,
        tau=tau,
        eta=eta,
        alpha_extrap=alpha,
        contraction=alpha,
        lip_f=float(lip_f),
        validated=True,
    )


def pdg_nsc_params(lip_f, t):
    """Varying deterministic policy for mu = 0 at iteration t >= 1.

    Returns (tau_t, eta_t, alpha_t, theta_t) =
    ((t-1)/2, 4*L_f/t, (t-1)/t, t).
    """
    if t < 1:
        raise ValueError("iteration index starts at 1")
    if lip_f <= 0:
        raise ValueError("lip_f must be positive")
    return (t - 1.0) / 2.0, 4.0 * lip_f / t, (t - 1.0) / t, float(t)


def pdg_nsc_schedule(lip_f):
    """Schedule wrapper around :func:`pdg_nsc_params`."""
    tau1, eta1, alpha1, _ = pdg_nsc_params(lip_f, 1)
    return Schedule(
        kind=PDG_NONSTRONGLY,
        tau=tau1,
        eta=eta1,
        alpha_extrap=alpha1,
        contraction=None,
        lip_f=float(lip_f),
        validated=True,
    )


def _rpdg_constants(m, cond, mu):
    root = math.sqrt((m - 1.0) ** 2 + 4.0 * m * cond)
    tau = (root - (m - 1.0)) / (2.0 * m)
    eta = (mu * root + mu * (m - 1.0)) / 2.0
    return root, tau, eta


def rpdg_nonuniform_params(m, lip, mu):
    """Randomized policy with p_i = 1/(2m) + L_i/(2L) and C = 8L/mu."""
    lip = np.asarray(lip, dtype=float)
    if mu <= 0:
        raise ValueError("mu must be positive")
    if lip.shape != (m,) or np.any(lip < 0):
        raise ValueError("lip must be m nonnegative constants")
    total = float(lip.sum())
    if total <= 0:
        raise ValueError("at least one component must have a positive constant")
    probs = 1.0 / (2.0 * m) + lip / (2.0 * total)
    cond = 8.0 * total / mu
    root, tau, eta = _rpdg_constants(m, cond, mu)
    alpha = 1.0 - 1.0 / ((m + 1.0) + root)
    return Schedule(
        kind=RPDG_NONUNIFORM,
        tau=tau,
        eta=eta,
        alpha_extrap=alpha,
        probs=probs,
        contraction=alpha,
        cond_const=cond,
        validated=True,
    )


def rpdg_uniform_params(m, lip, mu):
    """Randomized policy with uniform sampling and Cbar = 4m*max(L_i)/mu."""
    lip = np.asarray(lip, dtype=float)
    if mu <= 0:
        raise ValueError("mu must be positive")
    if lip.shape != (m,) or np.any(lip < 0):
        raise ValueError("lip must be m nonnegative constants")
    lmax = float(lip.max())
    if lmax <= 0:
        raise ValueError("at least one component must have a positive constant")
    probs = np.full(m, 1.0 / m)
    cond = 4.0 * m * lmax / mu
    root, tau, eta = _rpdg_constants(m, cond, mu)
    alpha = 1.0 - 2.0 / ((m + 1.0) + root)
    return Schedule(
        kind=RPDG_UNIFORM,
        tau=tau,
        eta=eta,
        alpha_extrap=alpha,
        probs=probs,
        contraction=alpha,
        cond_const=cond,
        validated=True,
    )


@dataclass(frozen=True)
class ConditionReport:
    """Named slacks of a schedule's validity conditions (>= 0 means satisfied)."""

    names: tuple
    slacks: tuple

    def min_slack(self):
        return min(self.slacks)

    def ok(self, tol=0.0):
        return self.min_slack() >= -tol

    def worst(self):
        i = int(np.argmin(self.slacks))
        return self.names[i], self.slacks[i]

    def __iter__(self):
        return iter(zip(self.names, self.slacks))


def validate_rpdg_conditions(schedule, lip, mu):
    """Slacks of the three constant-policy conditions of the randomized method.

    contraction:   p_i - (1-alpha)(1+tau) >= 0 for all i
    primal-decay:  alpha*mu - eta*(1-alpha) >= 0  (i.e. eta <= alpha*(mu+eta))
    dual-coupling: eta*tau*p_i - 4*L_i >= 0 for all i
    """
    lip = np.asarray(lip, dtype=float)
    if schedule.probs is None:
        raise ValueError("schedule has no sampling probabilities")
    p = schedule.probs
    tau, eta, alpha = schedule.tau, schedule.eta, schedule.alpha_extrap
    s1 = float(np.min(p) - (1.0 - alpha) * (1.0 + tau))
    s2 = float(alpha * mu - eta * (1.0 - alpha))
    s3 = float(np.min(eta * tau * p - 4.0 * lip))
    return ConditionReport(
        names=("contraction", "primal-decay", "dual-coupling"),
        slacks=(s1, s2, s3),
    )


def validate_pdg_conditions(schedule, lip_f, mu, t_max=50):
    """Slacks of the five deterministic-policy conditions over t = 2..t_max.

    With weights theta_t, the policy must satisfy
      theta_t*tau_t       <= theta_{t-1}*(1+tau_{t-1})
      theta_t*eta_t       <= theta_{t-1}*(mu+eta_{t-1})
      eta_{t-1}*tau_t     >= 2*L_f*alpha_t
      eta_t*(1+tau_t)     >= 2*L_f          (terminal condition, checked at every t)
      alpha_t             == theta_{t-1}/theta_t
    """
    s_tau = s_eta = s_couple = s_term = s_ratio = math.inf
    for t in range(2, t_max + 1):
        tau_t, eta_t, alpha_t = schedule.params_at(t)
        tau_p, eta_p, _ = schedule.params_at(t - 1)
        ratio = schedule.theta_ratio_at(t)  # theta_{t-1}/theta_t
        s_tau = min(s_tau, (1.0 + tau_p) - tau_t / ratio)
        s_eta = min(s_eta, (mu + eta_p) - eta_t / ratio)
        s_couple = min(s_couple, eta_p * tau_t - 2.0 * lip_f * alpha_t)
        s_term = min(s_term, eta_t * (1.0 + tau_t) - 2.0 * lip_f)
        s_ratio = min(s_ratio, -abs(alpha_t - ratio))
    tau_1, eta_1, _ = schedule.params_at(1)
    s_term = min(s_term, eta_1 * (1.0 + tau_1) - 2.0 * lip_f)
    return ConditionReport(
        names=("theta-tau", "theta-eta", "coupling", "terminal", "alpha-ratio"),
        slacks=(float(s_tau), float(s_eta), float(s_couple), float(s_term), float(s_ratio)),
    )


def iteration_bound(
    kind,
    m,
    cond,
    lf_over_mu,
    p0,
    eps,
    lam=None,
    mu=1.0,
    distribution="nonuniform",
):
    """Iteration count guaranteeing an expected eps-solution (rounded up).

    kind = "dist": bound on iterations until E[P(x^k, x*)] <= eps, i.e.
      ceil([(m+1) + sqrt((m-1)^2 + 4mC)] * log[(1 + 3*L_f/mu) * P0 / eps])
    for the nonuniform distribution; the uniform variant halves the factor
    and uses (1 + L_f/mu) in the log.

    kind = "gap": bound until E[Psi(xbar^k) - Psi*] <= eps, i.e.
      ceil(2[(m+1) + sqrt(...)] * log[2*mu*(1+L_f/mu)^2 * (m+sqrt(mC)) * P0/eps]);
    the uniform variant halves the factor. ``mu`` scales the log argument
    for gap bounds (eps is an objective gap, P0 a squared distance).

    A probability level ``lam`` tightens eps to lam*eps. Nonpositive log
    arguments mean the target is already met: returns 0.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if p0 <= 0:
        raise ValueError("p0 must be positive")
    if lam is not None:
        if not 0.0 < lam < 1.0:
            raise ValueError("lam must lie in (0, 1)")
        eps = lam * eps
    factor = (m + 1.0) + math.sqrt((m - 1.0) ** 2 + 4.0 * m * cond)
    if kind == "dist":
        const = (1.0 + 3.0 * lf_over_mu) if distribution == "nonuniform" else (
            1.0 + lf_over_mu
        )
        arg = const * p0 / eps
        if distribution == "uniform":
            factor = factor / 2.0
        count = factor * math.log(arg) if arg > 1.0 else 0.0
    elif kind == "gap":
        arg = 2.0 * mu * (1.0 + lf_over_mu) ** 2 * (m + math.sqrt(m * cond)) * p0 / eps
        prefactor = 2.0 * factor if distribution == "nonuniform" else factor
        count = prefactor * math.log(arg) if arg > 1.0 else 0.0
    else:
        raise ValueError(f"unknown bound kind {kind!r}")
    return int(math.ceil(max(count, 0.0)))


@dataclass(frozen=True)
class BoundParams:
    """Constants feeding the theoretical curves."""

    mu: float
    lip_f: float
    alpha: float
    p0: float


def theoretical_upper_curve(kind, params, k):
    """Right-hand side of the cited convergence guarantee at iteration k.

    kind:
      pdg_dist             (mu+L_f)/mu * alpha^k * P0
      pdg_gap              8*L_f/(k(k+1)) * P0
      rpdg_dist_nonuniform (1 + 3*L_f/mu) * alpha^k * P0
      rpdg_dist_uniform    (1 + L_f/mu) * alpha^k * P0
      rpdg_gap             alpha^(k/2)/(1-alpha) * (mu + 2*L_f + L_f^2/mu) * P0
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    mu, lf, alpha, p0 = params.mu, params.lip_f, params.alpha, params.p0
    if kind == "pdg_dist":
        return (mu + lf) / mu * alpha**k * p0
    if kind == "pdg_gap":
        if k == 0:
            return math.inf
        return 8.0 * lf / (k * (k + 1.0)) * p0
    if kind == "rpdg_dist_nonuniform":
        return (1.0 + 3.0 * lf / mu) * alpha**k * p0
    if kind == "rpdg_dist_uniform":
        return (1.0 + lf / mu) * alpha**k * p0
    if kind == "rpdg_gap":
        return alpha ** (k / 2.0) / (1.0 - alpha) * (mu + 2.0 * lf + lf**2 / mu) * p0
    raise ValueError(f"unknown curve kind {kind!r}")
