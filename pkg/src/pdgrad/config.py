"""Run configuration: INI-style text files with three sections.

Grammar (flat key = value entries; unknown sections or keys are errors)::

    [instance]
    family = worstcase | random_quadratic | equal_quadratic |
             least_squares | logistic | absloss
    # family parameters, see FAMILY_KEYS below; dataset families take
    # path = ... and format = csv | svmlight-text

    [solver]
    method = pdg | rpdg | perturb | smooth | unconstrained
    schedule = auto | pdg_strongly_convex | pdg_nonstrongly |
               rpdg_nonuniform | rpdg_uniform
    k_max = 300
    eps = 1e-2            # wrappers
    eps_rel = 1e-2        # unconstrained reduction
    lam = 0.1             # optional confidence level
    record_objective = true | false
    x0 = zeros | ones

    [run]
    seeds = 1,2,3         # or: seed_count = 200  /  seed_base = 0
    out = traces          # default: $PDGRAD_OUT or the working directory
    workers = 4
"""

import configparser
import hashlib
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import instances, schedules, worstcase
from .model import ALL_SPACE, FeasibleSet


class ConfigError(ValueError):
    """Raised on malformed or unknown configuration entries."""


FAMILY_KEYS = {
    "worstcase": {"m", "n_tilde", "mu", "q_cond"},
    "random_quadratic": {"m", "n", "mu", "cond_target", "seed"},
    "equal_quadratic": {"m", "n", "lip_each", "mu", "seed"},
    "least_squares": {"path", "format", "mu", "m", "box_lo", "box_hi"},
    "logistic": {"path", "format", "mu"},
    "absloss": {"path", "format", "mu"},
}

SOLVER_KEYS = {
    "method",
    "schedule",
    "k_max",
    "eps",
    "eps_rel",
    "lam",
    "record_objective",
    "x0",
}
RUN_KEYS = {"seeds", "seed_count", "seed_base", "out", "workers"}

METHODS = ("pdg", "rpdg", "perturb", "smooth", "unconstrained")
SCHEDULE_NAMES = (
    "auto",
    schedules.PDG_STRONGLY_CONVEX,
    schedules.PDG_NONSTRONGLY,
    schedules.RPDG_NONUNIFORM,
    schedules.RPDG_UNIFORM,
)


@dataclass
class RunConfig:
    family: str
    instance_params: dict
    method: str
    schedule: str = "auto"
    k_max: int = 100
    eps: Optional[float] = None
    eps_rel: Optional[float] = None
    lam: Optional[float] = None
    record_objective: bool = True
    x0_kind: str = "zeros"
    seeds: list = field(default_factory=lambda: [0])
    out: Optional[str] = None
    workers: Optional[int] = None
    digest: str = ""

    def out_dir(self):
        return self.out or os.environ.get("PDGRAD_OUT", ".")


def _parse_number(section, key, raw, conv):
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r}: not a valid number") from None


def load_config(path):
    """Parse and validate a config file into a RunConfig."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        parser.read_string(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc

    known_sections = {"instance", "solver", "run"}
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    if "instance" not in parser or "solver" not in parser:
        raise ConfigError("config needs [instance] and [solver] sections")

    inst = dict(parser["instance"])
    family = inst.pop("family", None)
    if family not in FAMILY_KEYS:
        raise ConfigError(
            f"[instance] family must be one of {sorted(FAMILY_KEYS)}; got {family!r}"
        )
    bad = set(inst) - FAMILY_KEYS[family]
    if bad:
        raise ConfigError(f"[instance] unknown keys for {family}: {sorted(bad)}")

    sol = dict(parser["solver"])
    bad = set(sol) - SOLVER_KEYS
    if bad:
        raise ConfigError(f"[solver] unknown keys: {sorted(bad)}")
    method = sol.get("method")
    if method not in METHODS:
        raise ConfigError(f"[solver] method must be one of {METHODS}; got {method!r}")
    schedule = sol.get("schedule", "auto")
    if schedule not in SCHEDULE_NAMES:
        raise ConfigError(f"[solver] unknown schedule {schedule!r}")
    x0_kind = sol.get("x0", "zeros")
    if x0_kind not in ("zeros", "ones"):
        raise ConfigError(f"[solver] x0 must be zeros or ones; got {x0_kind!r}")

    run = dict(parser["run"]) if "run" in parser else {}
    bad = set(run) - RUN_KEYS
    if bad:
        raise ConfigError(f"[run] unknown keys: {sorted(bad)}")
    if "seeds" in run:
        if "seed_count" in run or "seed_base" in run:
            raise ConfigError("[run] give either seeds or seed_count/seed_base")
        try:
            seeds = [int(s.strip()) for s in run["seeds"].split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"[run] bad seeds list {run['seeds']!r}") from None
        if not seeds:
            raise ConfigError("[run] seeds list is empty")
    else:
        count = _parse_number("run", "seed_count", run.get("seed_count", "1"), int)
        base = _parse_number("run", "seed_base", run.get("seed_base", "0"), int)
        if count < 1:
            raise ConfigError("[run] seed_count must be positive")
        seeds = list(range(base, base + count))

    cfg = RunConfig(
        family=family,
        instance_params=inst,
        method=method,
        schedule=schedule,
        k_max=_parse_number("solver", "k_max", sol.get("k_max", "100"), int),
        eps=(
            _parse_number("solver", "eps", sol["eps"], float) if "eps" in sol else None
        ),
        eps_rel=(
            _parse_number("solver", "eps_rel", sol["eps_rel"], float)
            if "eps_rel" in sol
            else None
        ),
        lam=(
            _parse_number("solver", "lam", sol["lam"], float) if "lam" in sol else None
        ),
        record_objective=sol.get("record_objective", "true").lower()
        in ("1", "true", "yes"),
        x0_kind=x0_kind,
        seeds=seeds,
        out=run.get("out"),
        workers=(
            _parse_number("run", "workers", run["workers"], int)
            if "workers" in run
            else None
        ),
        digest=hashlib.sha256(text.encode("utf-8")).hexdigest()[:16],
    )
    if cfg.k_max < 0:
        raise ConfigError("[solver] k_max must be nonnegative")
    return cfg


def _get(params, key, conv, default=None, family=""):
    if key not in params:
        if default is not None:
            return default
        raise ConfigError(f"[instance] {family} needs {key}")
    return _parse_number("instance", key, params[key], conv)


def build_problem(cfg):
    """Instantiate the configured problem family."""
    p = cfg.instance_params
    fam = cfg.family
    if fam == "worstcase":
        spec = worstcase.WorstCaseSpec(
            m=_get(p, "m", int, family=fam),
            n_tilde=_get(p, "n_tilde", int, family=fam),
            mu=_get(p, "mu", float, 1.0, fam),
            big_q=_get(p, "q_cond", float, family=fam),
        )
        return worstcase.build_worstcase(spec)
    if fam == "random_quadratic":
        return instances.make_random_quadratic(
            m=_get(p, "m", int, family=fam),
            n=_get(p, "n", int, family=fam),
            mu=_get(p, "mu", float, 0.0, fam),
            cond_target=_get(p, "cond_target", float, 10.0, fam),
            seed=_get(p, "seed", int, 0, fam),
        )
    if fam == "equal_quadratic":
        return instances.make_equal_quadratic(
            m=_get(p, "m", int, family=fam),
            n=_get(p, "n", int, family=fam),
            lip_each=_get(p, "lip_each", float, 1.0, fam),
            mu=_get(p, "mu", float, 1.0, fam),
            seed=_get(p, "seed", int, 0, fam),
        )
    if fam in ("least_squares", "logistic", "absloss"):
        if "path" not in p:
            raise ConfigError(f"[instance] {fam} needs path")
        data = instances.load_dataset(p["path"], p.get("format", "csv"))
        mu = _get(p, "mu", float, 0.0, fam)
        if fam == "logistic":
            return instances.make_logistic(data, mu)
        if fam == "absloss":
            return instances.make_absloss_nonsmooth(data, mu)
        feasible = ALL_SPACE
        if "box_lo" in p or "box_hi" in p:
            lo = _get(p, "box_lo", float, family=fam)
            hi = _get(p, "box_hi", float, family=fam)
            feasible = FeasibleSet(
                "box", lo=np.full(data.n, lo), hi=np.full(data.n, hi)
            )
        m = _get(p, "m", int, 0, fam) or None
        return instances.make_least_squares(data, mu, m=m, feasible=feasible)
    raise ConfigError(f"unknown family {fam!r}")


def initial_point(cfg, n):
    if cfg.x0_kind == "ones":
        return np.ones(n)
    return np.zeros(n)
