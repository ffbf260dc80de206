"""Shipped problem families and dataset ingestion.

Quadratic families carry dense kernel data (compiled-loop eligible) and a
minimizer from the aggregate normal equations. Logistic and absolute-loss
families are oracle-driven; all gradients exist on the whole space, as the
randomized solver requires.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import (
    ALL_SPACE,
    ZERO_H,
    CompositeTerm,
    FeasibleSet,
    ProblemInstance,
    QuadKernelData,
    quad_problem_from_stack,
)
from .wrappers import SmoothingSpec


class DatasetFormatError(ValueError):
    """Raised on unparseable dataset files, with a line number."""


@dataclass(frozen=True)
class DatasetMatrix:
    """Dense rows + labels; one solver component per row by default."""

    a: np.ndarray
    b: np.ndarray
    source: str = ""

    def __post_init__(self):
        a = np.ascontiguousarray(self.a, dtype=float)
        b = np.ascontiguousarray(self.b, dtype=float)
        if a.ndim != 2 or b.ndim != 1 or a.shape[0] != b.shape[0]:
            raise ValueError("need a (m, n) matrix and m labels")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("dataset entries must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def m(self):
        return self.a.shape[0]

    @property
    def n(self):
        return self.a.shape[1]


def make_random_quadratic(m, n, mu, cond_target, seed, feasible=ALL_SPACE, h=ZERO_H):
    """Least-squares components f_i(x) = 1/2 |B_i x - c_i|^2 with shaped spectra.

    Singular values of each B_i are log-spaced so that the aggregate
    Hessian's condition number is near ``cond_target``; the minimizer
    comes from the aggregate normal equations (requires mu > 0 or a
    nonsingular aggregate). The returned instance is unconstrained/h-free
    by default so opt_x stays exact; pass ``feasible``/``h`` only when the
    caller supplies its own optimum handling.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    rng = np.random.default_rng(seed)
    r = max(2, min(n, 4))
    qs = np.empty((m, n, n))
    bs = np.empty((m, n))
    cs = np.empty(m)
    spread = math.sqrt(max(float(cond_target), 1.0))
    for i in range(m):
        gauss = rng.standard_normal((r, n))
        u, _, vt = np.linalg.svd(gauss, full_matrices=False)
        svals = np.geomspace(1.0, 1.0 / spread, r)
        bmat = (u * svals) @ vt
        c = rng.standard_normal(r)
        qs[i] = bmat.T @ bmat
        bs[i] = -bmat.T @ c
        cs[i] = 0.5 * float(c @ c)
    kd = QuadKernelData(qs=qs, bs=bs, cs=cs)
    hess = kd.qsum + mu * np.eye(n)
    if mu == 0.0:
        if np.linalg.matrix_rank(kd.qsum) < n:
            raise ValueError("singular aggregate with mu = 0: no unique minimizer")
    opt = np.linalg.solve(hess, -kd.bsum)
    if not (feasible.kind == "all" and h.is_zero):
        opt = None
    return quad_problem_from_stack(
        kd,
        mu=mu,
        h=h,
        feasible=feasible,
        opt_x=opt,
        name=f"random_quadratic(m={m}, n={n}, mu={mu:g})",
    )


def make_equal_quadratic(m, n, lip_each, mu, seed, shift_scale=1.0):
    """Isotropic components f_i(x) = L_i/2 |x - c_i|^2 with equal L_i.

    Hessians are aligned (L_i * I), so the summed gradient constant equals
    the sum of the component constants: the regime where randomized
    sampling saves the most gradient evaluations.
    """
    if lip_each <= 0:
        raise ValueError("lip_each must be positive")
    rng = np.random.default_rng(seed)
    centers = shift_scale * rng.standard_normal((m, n))
    eye = np.eye(n)
    qs = np.repeat(lip_each * eye[None, :, :], m, axis=0)
    bs = -lip_each * centers
    cs = 0.5 * lip_each * np.einsum("ij,ij->i", centers, centers)
    kd = QuadKernelData(qs=qs, bs=bs, cs=cs)
    opt = np.linalg.solve(kd.qsum + mu * eye, -kd.bsum)
    return quad_problem_from_stack(
        kd,
        mu=mu,
        opt_x=opt,
        name=f"equal_quadratic(m={m}, n={n}, L_i={lip_each:g}, mu={mu:g})",
    )


def _logsig(z):
    """log(1 + exp(z)) evaluated stably."""
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def make_logistic(data, mu, h=ZERO_H):
    """Logistic losses f_i(x) = log(1 + exp(-b_i a_i'x)), labels in {-1, +1}."""
    labels = np.unique(data.b)
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ValueError("logistic labels must be -1 or +1")
    a, b = data.a, data.b

    def grad_i(i, x):
        z = -b[i] * float(a[i] @ x)
        return (-b[i] * float(_sigmoid(np.array([z]))[0])) * a[i]

    def objective_i(i, x):
        return float(_logsig(-b[i] * float(a[i] @ x)))

    def grad_full(x):
        z = -b * (a @ x)
        return a.T @ (-b * _sigmoid(z))

    lip = 0.25 * np.einsum("ij,ij->i", a, a)
    return ProblemInstance(
        m=data.m,
        n=data.n,
        grad_i=grad_i,
        lip=lip,
        mu=mu,
        h=h,
        objective_i=objective_i,
        grad_full=grad_full,
        name=f"logistic(m={data.m}, n={data.n}, mu={mu:g})",
    )


@dataclass(frozen=True)
class NonsmoothProblem:
    """Unsmoothed absolute-loss objective, kept for oracle comparisons."""

    data: DatasetMatrix
    mu: float
    h: CompositeTerm = ZERO_H
    feasible: "FeasibleSet" = ALL_SPACE

    def value(self, x):
        res = self.data.a @ x - self.data.b
        return (
            float(np.sum(np.abs(res)))
            + self.h.value(x)
            + 0.5 * self.mu * float(x @ x)
        )

    def subgradient(self, x):
        res = self.data.a @ x - self.data.b
        g = self.data.a.T @ np.sign(res) + self.mu * x
        if self.h.lin is not None:
            g = g + self.h.lin
        if self.h.lam1 > 0.0:
            g = g + self.h.lam1 * np.sign(x)
        return g


def make_absloss_nonsmooth(data, mu):
    """Absolute losses f_i(x) = |a_i'x - b_i| in smoothable saddle form.

    Each component maximizes <a_i'x, y> - b_i*y over y in [-1, 1] with the
    quadratic smoother v(y) = y^2/2 (so each dual radius term is 1/2 and
    the total is m/2). Returns the smoothing description plus the
    unsmoothed objective for oracle checks.
    """
    rows = [data.a[i : i + 1] for i in range(data.m)]
    lo = np.array([-1.0])
    hi = np.array([1.0])
    spec = SmoothingSpec(
        linear_maps=rows,
        dual_kinds=["box"] * data.m,
        dual_lo=[lo] * data.m,
        dual_hi=[hi] * data.m,
        dual_centers=[None] * data.m,
        dual_radii=[0.0] * data.m,
        offsets=[np.array([data.b[i]]) for i in range(data.m)],
    )
    return spec, NonsmoothProblem(data=data, mu=mu)


def _parse_float(tok, lineno, path):
    try:
        return float(tok)
    except ValueError:
        raise DatasetFormatError(
            f"{path}:{lineno}: non-numeric field {tok!r}"
        ) from None


def load_dataset(path, fmt="csv"):
    """Load a dense dataset: csv (last column = label, optional header row)
    or svmlight-style text ("label idx:val ...", 1-based indices).

    Malformed input raises :class:`DatasetFormatError` with a line number;
    arbitrary bytes never crash the parser.
    """
    if fmt == "csv":
        return _load_csv(path)
    if fmt == "svmlight-text":
        return _load_svmlight(path)
    raise ValueError(f"unknown dataset format {fmt!r}")


def _read_lines(path):
    try:
        with open(path, "r", encoding="utf-8", errors="replace") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise DatasetFormatError(f"{path}: cannot read ({exc})") from exc


def _load_csv(path):
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(_read_lines(path))]
    lines = [(no, ln) for no, ln in lines if ln]
    if not lines:
        raise DatasetFormatError(f"{path}: empty dataset")
    first_no, first = lines[0]
    start = 0
    try:
        [float(tok) for tok in first.split(",")]
    except ValueError:
        start = 1  # header row
    rows = []
    width = None
    for no, ln in lines[start:]:
        toks = [t.strip() for t in ln.split(",")]
        if len(toks) < 2:
            raise DatasetFormatError(f"{path}:{no}: need at least one feature and a label")
        if width is None:
            width = len(toks)
        elif len(toks) != width:
            raise DatasetFormatError(
                f"{path}:{no}: ragged row ({len(toks)} fields, expected {width})"
            )
        rows.append([_parse_float(t, no, path) for t in toks])
    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    arr = np.array(rows)
    return DatasetMatrix(a=arr[:, :-1], b=arr[:, -1], source=f"{path} (csv)")


def _load_svmlight(path, n=None):
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(_read_lines(path))]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise DatasetFormatError(f"{path}: empty dataset")
    parsed = []
    max_idx = 0
    for no, ln in lines:
        toks = ln.split()
        label = _parse_float(toks[0], no, path)
        feats = []
        for tok in toks[1:]:
            if ":" not in tok:
                raise DatasetFormatError(f"{path}:{no}: expected idx:val, got {tok!r}")
            idx_s, val_s = tok.split(":", 1)
            try:
                idx = int(idx_s)
            except ValueError:
                raise DatasetFormatError(
                    f"{path}:{no}: non-integer index {idx_s!r}"
                ) from None
            if idx < 1 or idx > 10**7:
                raise DatasetFormatError(f"{path}:{no}: index {idx} out of range")
            feats.append((idx, _parse_float(val_s, no, path)))
            max_idx = max(max_idx, idx)
        parsed.append((label, feats))
    width = n if n is not None else max_idx
    if width == 0:
        raise DatasetFormatError(f"{path}: no feature indices found")
    a = np.zeros((len(parsed), width))
    b = np.empty(len(parsed))
    for row, (label, feats) in enumerate(parsed):
        b[row] = label
        for idx, val in feats:
            a[row, idx - 1] = val
    return DatasetMatrix(a=a, b=b, source=f"{path} (svmlight-text)")


def group_rows(data, m):
    """Regroup rows into m row blocks (component count independent of rows).

    Block i gets rows i, i+m, i+2m, ...; each block becomes one
    half-squared-loss component when fed to the quadratic builder.
    """
    if m < 1 or m > data.m:
        raise ValueError("m must lie in [1, rows]")
    return [
        (data.a[i::m], data.b[i::m]) for i in range(m)
    ]


def make_least_squares(data, mu, m=None, feasible=ALL_SPACE, h=ZERO_H):
    """Least-squares instance: components 1/2 |A_i x - b_i|^2 over row blocks."""
    m = data.m if m is None else m
    blocks = group_rows(data, m)
    n = data.n
    qs = np.empty((m, n, n))
    bs = np.empty((m, n))
    cs = np.empty(m)
    for i, (ai, bi) in enumerate(blocks):
        qs[i] = ai.T @ ai
        bs[i] = -ai.T @ bi
        cs[i] = 0.5 * float(bi @ bi)
    kd = QuadKernelData(qs=qs, bs=bs, cs=cs)
    opt = None
    if feasible.kind == "all" and h.is_zero:
        hess = kd.qsum + mu * np.eye(n)
        if mu > 0.0 or np.linalg.matrix_rank(kd.qsum) == n:
            opt = np.linalg.solve(hess, -kd.bsum)
    return quad_problem_from_stack(
        kd,
        mu=mu,
        h=h,
        feasible=feasible,
        opt_x=opt,
        name=f"least_squares(m={m}, n={n}, mu={mu:g})",
    )
