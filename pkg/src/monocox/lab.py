"""Simulation lab for the cube-root limit theory.

Data are drawn from a Cox model with a closed-form baseline, independent
uniform censoring and bounded covariates. The lab also provides the exact
risk-set function ``Phi(beta0, x0) = E[{T >= x0} exp(beta0'Z)]``, the
normalizing constants of the limit laws, a sampler for the Chernoff
distribution ``argmin_t {W(t) + t^2}``, and a Monte Carlo experiment runner.

Random streams
--------------
``generate`` draws covariates, then the standard exponentials behind the
event times, then the censoring times, all from one generator. The
experiment runner gives replicate ``r`` of the ``k``-th sample size its own
stream ``SeedSequence(seed, spawn_key=(k, r))``, so results do not depend on
scheduling or on how many workers run.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate, stats

from .core import SurvivalSample
from .cox import fit_beta
from .estimators import NONDECREASING, NONINCREASING, _shape, estimate
from .exceptions import MonocoxError, TheoremConditionError

__all__ = [
    "Weibull",
    "Exponential",
    "HazardTable",
    "UniformCovariates",
    "BernoulliCovariates",
    "FixedDesign",
    "NoCovariates",
    "UniformCensoring",
    "GeneratorSpec",
    "generate",
    "PhiValue",
    "phi_true",
    "ScalingConstant",
    "scaling_constant",
    "chernoff_sample",
    "ExperimentSpec",
    "ExperimentReport",
    "run_experiment",
    "ks_distance",
    "worker_count",
]


# ---------------------------------------------------------------- baselines


@dataclass(frozen=True)
class Weibull:
    """Baseline with cumulative hazard ``(rate * x) ** shape``."""

    shape: float = 2.0
    rate: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("weibull shape and rate must be positive")

    def cumhaz(self, x):
        return (self.rate * np.asarray(x, dtype=float)) ** self.shape

    def inverse_cumhaz(self, y):
        return np.asarray(y, dtype=float) ** (1.0 / self.shape) / self.rate

    def hazard(self, x):
        k, r = self.shape, self.rate
        return k * r * (r * np.asarray(x, dtype=float)) ** (k - 1)

    def hazard_derivative(self, x):
        k, r = self.shape, self.rate
        if k == 1:
            return np.zeros_like(np.asarray(x, dtype=float))
        return k * (k - 1) * r * r * (r * np.asarray(x, dtype=float)) ** (k - 2)

    def to_dict(self):
        return {"type": "weibull", "shape": self.shape, "rate": self.rate}


@dataclass(frozen=True)
class Exponential(Weibull):
    """Constant baseline hazard ``rate``."""

    shape: float = field(default=1.0, init=False)
    rate: float = 1.0

    def to_dict(self):
        return {"type": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class HazardTable:
    """Piecewise-constant baseline hazard.

    ``rates[i]`` holds on ``[breaks[i], breaks[i+1])`` with ``breaks[0] = 0``;
    the last rate extends to infinity.
    """

    breaks: tuple
    rates: tuple

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        r = np.asarray(self.rates, dtype=float)
        if b.size != r.size or b.size == 0:
            raise ValueError("hazard table needs one rate per break")
        if b[0] != 0 or np.any(np.diff(b) <= 0):
            raise ValueError("hazard table breaks must start at 0 and increase")
        if np.any(r < 0) or r[-1] <= 0:
            raise ValueError("hazard table rates must be nonnegative, the last positive")
        object.__setattr__(self, "breaks", tuple(b.tolist()))
        object.__setattr__(self, "rates", tuple(r.tolist()))

    def _knots(self):
        b = np.asarray(self.breaks)
        r = np.asarray(self.rates)
        return b, r, np.concatenate([[0.0], np.cumsum(np.diff(b) * r[:-1])])

    def cumhaz(self, x):
        b, r, cum = self._knots()
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(b, x, side="right") - 1
        return cum[i] + r[i] * (x - b[i])

    def inverse_cumhaz(self, y):
        b, r, cum = self._knots()
        y = np.asarray(y, dtype=float)
        # generalized inverse inf{x : Lambda(x) >= y}; the chosen piece always has a positive rate
        i = np.maximum(np.searchsorted(cum, y, side="left") - 1, 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(y <= 0, 0.0, b[i] + (y - cum[i]) / r[i])

    def hazard(self, x):
        b, r, _ = self._knots()
        return r[np.searchsorted(b, np.asarray(x, dtype=float), side="right") - 1]

    def hazard_derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def to_dict(self):
        return {"type": "table", "breaks": list(self.breaks), "rates": list(self.rates)}


def _baseline_density(b, x):
    return b.hazard(x) * np.exp(-b.cumhaz(x))


def _baseline_density_derivative(b, x):
    lam = b.hazard(x)
    return (b.hazard_derivative(x) - lam * lam) * np.exp(-b.cumhaz(x))


def _baseline_cdf(b, x):
    return -np.expm1(-b.cumhaz(x))


for _cls in (Weibull, HazardTable):
    _cls.density = _baseline_density
    _cls.density_derivative = _baseline_density_derivative
    _cls.cdf = _baseline_cdf


def _baseline_from_dict(d):
    kind = d.get("type")
    if kind == "weibull":
        return Weibull(float(d.get("shape", 2.0)), float(d.get("rate", 1.0)))
    if kind == "exponential":
        return Exponential(rate=float(d.get("rate", 1.0)))
    if kind == "table":
        return HazardTable(tuple(d["breaks"]), tuple(d["rates"]))
    raise ValueError(f"unknown baseline type {kind!r}")


# --------------------------------------------------------------- covariates


@dataclass(frozen=True)
class UniformCovariates:
    """Independent ``U(low, high)`` components."""

    p: int = 1
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if self.p < 1 or not self.high > self.low:
            raise ValueError("uniform covariates need p >= 1 and high > low")

    def draw(self, rng, n):
        return rng.uniform(self.low, self.high, size=(n, self.p))

    def to_dict(self):
        return {"type": "uniform", "p": self.p, "low": self.low, "high": self.high}


@dataclass(frozen=True)
class BernoulliCovariates:
    """Independent 0/1 components with success probability ``prob``."""

    prob: float = 0.5
    p: int = 1

    def __post_init__(self):
        if self.p < 1 or not 0 <= self.prob <= 1:
            raise ValueError("bernoulli covariates need p >= 1 and prob in [0, 1]")

    def draw(self, rng, n):
        return (rng.random(size=(n, self.p)) < self.prob).astype(float)

    def to_dict(self):
        return {"type": "bernoulli", "p": self.p, "prob": self.prob}


@dataclass(frozen=True)
class FixedDesign:
    """Deterministic design: subject ``i`` gets row ``i mod len(rows)``."""

    rows: tuple

    def __post_init__(self):
        a = np.asarray(self.rows, dtype=float)
        if a.ndim == 1:
            a = a.reshape(-1, 1)
        if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
            raise ValueError("fixed design needs a nonempty matrix of rows")
        object.__setattr__(self, "rows", tuple(map(tuple, a.tolist())))

    @property
    def p(self):
        return len(self.rows[0])

    def draw(self, rng, n):
        a = np.asarray(self.rows, dtype=float)
        return a[np.arange(n) % a.shape[0]]

    def to_dict(self):
        return {"type": "fixed", "rows": [list(r) for r in self.rows]}


@dataclass(frozen=True)
class NoCovariates:
    """Covariate-free model (``p = 0``)."""

    p: int = field(default=0, init=False)

    def draw(self, rng, n):
        return np.zeros((n, 0))

    def to_dict(self):
        return {"type": "none"}


def _covariates_from_dict(d):
    kind = d.get("type")
    if kind == "uniform":
        return UniformCovariates(int(d.get("p", 1)), float(d.get("low", 0.0)), float(d.get("high", 1.0)))
    if kind == "bernoulli":
        return BernoulliCovariates(float(d.get("prob", 0.5)), int(d.get("p", 1)))
    if kind == "fixed":
        return FixedDesign(d["rows"])
    if kind == "none":
        return NoCovariates()
    raise ValueError(f"unknown covariate law {kind!r}")


@dataclass(frozen=True)
class UniformCensoring:
    """Censoring times ``U(0, c_max)``; ``c_max = inf`` switches censoring off."""

    c_max: float = 3.0

    def __post_init__(self):
        if not self.c_max >= 0:
            raise ValueError("c_max must be nonnegative")

    def draw(self, rng, n):
        if math.isinf(self.c_max):
            return np.full(n, np.inf)
        return rng.uniform(0.0, self.c_max, size=n)

    def survival(self, x):
        """``P(C >= x)``."""
        if math.isinf(self.c_max):
            return 1.0
        if self.c_max == 0:
            return float(x <= 0)
        return float(np.clip(1.0 - x / self.c_max, 0.0, 1.0))

    def to_dict(self):
        return {"type": "uniform", "c_max": None if math.isinf(self.c_max) else self.c_max}


def _censoring_from_dict(d):
    if d is None or d.get("type") == "none":
        return UniformCensoring(math.inf)
    if d.get("type", "uniform") != "uniform":
        raise ValueError(f"unknown censoring law {d.get('type')!r}")
    c = d.get("c_max")
    return UniformCensoring(math.inf if c is None else float(c))


# ---------------------------------------------------------------- generator


@dataclass(frozen=True)
class GeneratorSpec:
    """Everything needed to draw one Cox-model sample."""

    baseline: object = field(default_factory=Weibull)
    beta0: tuple = (0.5,)
    covariates: object = field(default_factory=UniformCovariates)
    censoring: UniformCensoring = field(default_factory=UniformCensoring)
    n: int = 100
    seed: int = 0

    def __post_init__(self):
        beta = tuple(float(b) for b in np.atleast_1d(np.asarray(self.beta0, dtype=float)))
        object.__setattr__(self, "beta0", beta)
        if len(beta) != self.covariates.p:
            raise ValueError(f"beta0 has length {len(beta)} but the covariate law has p={self.covariates.p}")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError("n must be a nonnegative integer")

    @property
    def beta(self) -> np.ndarray:
        return np.asarray(self.beta0, dtype=float)

    def with_n(self, n: int) -> "GeneratorSpec":
        return replace(self, n=int(n))

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline.to_dict(),
            "beta0": list(self.beta0),
            "covariates": self.covariates.to_dict(),
            "censoring": self.censoring.to_dict(),
            "n": int(self.n),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        cov = _covariates_from_dict(d.get("covariates", {"type": "uniform"}))
        beta = d.get("beta0", [0.0] * cov.p)
        return cls(
            baseline=_baseline_from_dict(d.get("baseline", {"type": "weibull"})),
            beta0=tuple(np.atleast_1d(np.asarray(beta, dtype=float)).tolist()),
            covariates=cov,
            censoring=_censoring_from_dict(d.get("censoring")),
            n=int(d.get("n", 100)),
            seed=int(d.get("seed", 0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "GeneratorSpec":
        return cls.from_dict(json.loads(s))


def simulate_latent(spec: GeneratorSpec, rng=None):
    """Draw ``(Z, X, C)`` before censoring is applied."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    n = int(spec.n)
    z = spec.covariates.draw(rng, n)
    e = rng.standard_exponential(n)
    x = spec.baseline.inverse_cumhaz(e * np.exp(-(z @ spec.beta)))
    c = spec.censoring.draw(rng, n)
    return z, x, c


def generate(spec: GeneratorSpec, rng=None) -> SurvivalSample:
    """Draw a right-censored sample ``T = min(X, C)``, ``Delta = {X <= C}``."""
    z, x, c = simulate_latent(spec, rng)
    return SurvivalSample(np.minimum(x, c), (x <= c).astype(int), z)


# ---------------------------------------------------------------------- Phi


@dataclass(frozen=True)
class PhiValue:
    value: float
    stderr: float
    method: str


def _phi_integrand(spec, x0):
    lam = float(spec.baseline.cumhaz(x0))
    sc = spec.censoring.survival(x0)

    def g(eta):
        s = np.exp(eta)
        return s * np.exp(-lam * s) * sc

    return g


def phi_true(spec: GeneratorSpec, x0: float, mc_reps: int | None = None, seed: int = 0) -> PhiValue:
    """``Phi(beta0, x0) = E[{T >= x0} exp(beta0'Z)]`` under ``spec``.

    By independence of censoring and ``X`` given ``Z`` this is
    ``E[exp(beta0'Z) exp(-Lambda0(x0) exp(beta0'Z))] P(C >= x0)``. The
    expectation over ``Z`` is computed exactly when possible: by quadrature
    for one uniform covariate, by enumeration for Bernoulli laws
    (``p <= 12``) and fixed designs. Otherwise, or when ``mc_reps`` is
    given, a Monte Carlo average of the same integrand over ``mc_reps``
    covariate draws is returned with its standard error.
    """
    g = _phi_integrand(spec, x0)
    cov = spec.covariates
    beta = spec.beta
    if mc_reps is None:
        if isinstance(cov, NoCovariates):
            return PhiValue(float(g(0.0)), 0.0, "exact")
        if isinstance(cov, UniformCovariates) and cov.p == 1:
            b = beta[0]
            val, _ = integrate.quad(lambda z: g(b * z), cov.low, cov.high, epsabs=1e-14, epsrel=1e-13)
            return PhiValue(float(val / (cov.high - cov.low)), 0.0, "quadrature")
        if isinstance(cov, BernoulliCovariates) and cov.p <= 12:
            total = 0.0
            for bits in itertools.product((0.0, 1.0), repeat=cov.p):
                z = np.asarray(bits)
                k = z.sum()
                total += cov.prob**k * (1 - cov.prob) ** (cov.p - k) * g(z @ beta)
            return PhiValue(float(total), 0.0, "enumeration")
        if isinstance(cov, FixedDesign):
            rows = np.asarray(cov.rows)
            return PhiValue(float(np.mean(g(rows @ beta))), 0.0, "enumeration")
        mc_reps = 10**6
    rng = np.random.default_rng(seed)
    vals = g(cov.draw(rng, int(mc_reps)) @ beta)
    return PhiValue(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mc_reps)), "monte-carlo")


# ------------------------------------------------------- scaling constants


@dataclass(frozen=True)
class ScalingConstant:
    """Normalizing constant ``A(x0)`` and the pieces it is built from.

    ``n^{1/3} A(x0) (estimate - truth)`` tends to ``argmin_t {W(t) + t^2}``.
    """

    value: float
    target: str
    components: dict

    def to_dict(self):
        return {"value": self.value, "target": self.target, "components": dict(self.components)}


def scaling_constant(spec: GeneratorSpec, x0: float, target: str = "hazard", phi: PhiValue | None = None) -> ScalingConstant:
    """``|Phi / (4 lam0 lam0')|^{1/3}`` (hazard) or ``|Phi / (4 f0 f0' (1 - F0))|^{1/3}`` (density).

    Raises
    ------
    TheoremConditionError
        The derivative of the target vanishes at ``x0`` (for example any
        hazard target with an exponential baseline).
    """
    b = spec.baseline
    phi = phi_true(spec, x0) if phi is None else phi
    if target == "hazard":
        lam0 = float(b.hazard(x0))
        dlam0 = float(b.hazard_derivative(x0))
        if lam0 == 0 or dlam0 == 0:
            raise TheoremConditionError(
                f"theorem conditions violated: baseline hazard derivative is {dlam0!r} at x0={x0!r}"
            )
        value = abs(phi.value / (4 * lam0 * dlam0)) ** (1 / 3)
        comps = {"phi0": phi.value, "lam0": lam0, "dlam0": dlam0}
    elif target == "density":
        f0 = float(b.density(x0))
        df0 = float(b.density_derivative(x0))
        F0 = float(b.cdf(x0))
        if f0 == 0 or df0 == 0:
            raise TheoremConditionError(
                f"theorem conditions violated: baseline density derivative is {df0!r} at x0={x0!r}"
            )
        value = abs(phi.value / (4 * f0 * df0 * (1 - F0))) ** (1 / 3)
        comps = {"phi0": phi.value, "f0": f0, "df0": df0, "F0": F0}
    else:
        raise ValueError(f"unknown target {target!r}")
    return ScalingConstant(float(value), target, comps)


# ----------------------------------------------------------------- Chernoff


def chernoff_sample(L: float = 2.0, h: float = 0.005, reps: int = 10**5, seed: int = 0) -> np.ndarray:
    """Draws of ``argmin_{|t| <= L} {W(t) + t^2}`` on the grid of step ``h``.

    ``W`` is a two-sided Brownian motion with ``W(0) = 0``, built from
    independent ``N(0, h)`` increments on each side. Ties go to the largest
    minimizer. The result is cached and returned read-only.
    """
    if L < 2 or not 0 < h <= 0.01:
        raise ValueError("chernoff_sample needs L >= 2 and 0 < h <= 0.01")
    return _chernoff_cached(float(L), float(h), int(reps), int(seed))


@lru_cache(maxsize=8)
def _chernoff_cached(L, h, reps, seed):
    m = int(round(L / h))
    t = np.arange(-m, m + 1) * h
    rng = np.random.default_rng(seed)
    out = np.empty(reps)
    chunk = 1000
    for start in range(0, reps, chunk):
        k = min(chunk, reps - start)
        inc = rng.normal(0.0, math.sqrt(h), size=(k, 2 * m))
        w = np.empty((k, 2 * m + 1))
        w[:, m] = 0.0
        w[:, m + 1:] = np.cumsum(inc[:, :m], axis=1)
        w[:, m - 1::-1] = np.cumsum(inc[:, m:], axis=1)
        obj = w + t * t
        # last minimizer: argmin on the reversed grid
        out[start:start + k] = t[2 * m - np.argmin(obj[:, ::-1], axis=1)]
    out.setflags(write=False)
    return out


def ks_distance(sample, reference) -> float:
    """Two-sample Kolmogorov-Smirnov distance."""
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0:
        return math.nan
    return float(stats.ks_2samp(sample, np.asarray(reference, dtype=float)).statistic)


# --------------------------------------------------------------- experiment


def worker_count(requested: int | None = None) -> int:
    """Worker processes to use: ``requested``, capped by ``MONOCOX_THREADS``."""
    env = os.environ.get("MONOCOX_THREADS")
    cap = None
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ValueError(f"MONOCOX_THREADS must be an integer, got {env!r}") from None
    if requested is None:
        requested = cap if cap is not None else 1
    return max(1, min(requested, cap) if cap is not None else requested)


@dataclass(frozen=True)
class ExperimentSpec:
    """A Monte Carlo campaign: generator, target point, estimator, sizes."""

    generator: GeneratorSpec
    x0: float = 0.5
    estimator: str = "npmle"
    target: str = "hazard"
    shape: str = NONDECREASING
    reps: int = 100
    n_list: tuple = (500,)
    seed: int | None = None
    chernoff: dict = field(default_factory=lambda: {"L": 2.0, "h": 0.005, "reps": 10**5, "seed": 0})

    def __post_init__(self):
        object.__setattr__(self, "shape", _shape(self.shape))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if self.estimator not in ("npmle", "grenander"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.target not in ("hazard", "density"):
            raise ValueError(f"unknown target {self.target!r}")
        if self.target == "density" and (self.estimator != "grenander" or self.shape != NONINCREASING):
            raise ValueError("density target is supported for the nonincreasing grenander estimator only")
        if self.reps < 0 or any(n < 1 for n in self.n_list):
            raise ValueError("reps must be >= 0 and every n >= 1")

    @property
    def root_seed(self) -> int:
        return int(self.generator.seed if self.seed is None else self.seed)

    def to_dict(self) -> dict:
        return {
            "generator": self.generator.to_dict(),
            "x0": self.x0,
            "estimator": self.estimator,
            "target": self.target,
            "shape": self.shape,
            "reps": self.reps,
            "n_list": list(self.n_list),
            "seed": self.root_seed,
            "chernoff": dict(self.chernoff),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = {"generator", "x0", "estimator", "target", "shape", "reps", "n_list", "seed", "chernoff"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown experiment keys {sorted(extra)}")
        if "generator" not in d:
            raise ValueError("experiment spec needs a 'generator' section")
        chern = {"L": 2.0, "h": 0.005, "reps": 10**5, "seed": 0}
        chern.update(d.get("chernoff", {}))
        return cls(
            generator=GeneratorSpec.from_dict(d["generator"]),
            x0=float(d.get("x0", 0.5)),
            estimator=d.get("estimator", "npmle"),
            target=d.get("target", "hazard"),
            shape=d.get("shape", NONDECREASING),
            reps=int(d.get("reps", 100)),
            n_list=tuple(d.get("n_list", [500])),
            seed=d.get("seed"),
            chernoff=chern,
        )


def _truth(spec: ExperimentSpec) -> float:
    b = spec.generator.baseline
    f = b.hazard if spec.target == "hazard" else b.density
    return float(f(spec.x0))


def _replicate(args):
    """One replicate; returns a plain dict so it pickles cheaply."""
    spec, k, r = args
    n = spec.n_list[k]
    rng = np.random.default_rng(np.random.SeedSequence(spec.root_seed, spawn_key=(k, r)))
    sample = generate(spec.generator.with_n(n), rng)
    rec = {"n": n, "rep": r, "estimate": math.nan, "paired": math.nan, "beta_hat": [], "excluded": False, "reason": ""}
    try:
        beta = fit_beta(sample).beta_hat if sample.p else np.zeros(0)
        rec["beta_hat"] = [float(b) for b in beta]
        est = estimate(sample, spec.estimator, spec.target, spec.shape, beta=beta)
        rec["estimate"] = float(est(spec.x0))
        if spec.target == "hazard":
            other = "grenander" if spec.estimator == "npmle" else "npmle"
            alt = estimate(sample, other, "hazard", spec.shape, beta=beta)
            rec["paired"] = float(n ** (1 / 3) * abs(alt(spec.x0) - rec["estimate"]))
    except MonocoxError as exc:
        rec["excluded"] = True
        rec["reason"] = f"{type(exc).__name__}: {exc}"
    return rec


@dataclass
class ExperimentReport:
    """Per-replicate errors and per-size summaries of one campaign.

    ``runtime`` is informational and left out of :meth:`to_dict`, so the
    JSON form depends on the spec and seed only.
    """

    spec: ExperimentSpec
    truth: float
    scaling: ScalingConstant | None
    records: list
    summary: list
    runtime: float = 0.0
    notes: list = field(default_factory=list)

    def _rows(self, n):
        return [r for r in self.records if r["n"] == n and not r["excluded"]]

    def raw_errors(self, n) -> np.ndarray:
        return np.array([r["raw_error"] for r in self._rows(n)])

    def scaled_errors(self, n) -> np.ndarray:
        return np.array([r["scaled_error"] for r in self._rows(n)])

    def estimates(self, n) -> np.ndarray:
        return np.array([r["estimate"] for r in self._rows(n)])

    def paired(self, n) -> np.ndarray:
        return np.array([r["paired"] for r in self._rows(n)])

    def betas(self, n) -> np.ndarray:
        return np.array([r["beta_hat"] for r in self._rows(n)])

    def attach_chernoff_ks(self) -> None:
        """Add the KS distance between each size's scaled errors and a Chernoff sample to the summary."""
        c = self.spec.chernoff
        reference = None
        for s in self.summary:
            errs = self.scaled_errors(s["n"])
            errs = errs[np.isfinite(errs)]
            if self.scaling is None or errs.size == 0:
                s["ks_chernoff"] = math.nan
                continue
            if reference is None:
                reference = chernoff_sample(c["L"], c["h"], int(c["reps"]), int(c["seed"]))
            s["ks_chernoff"] = ks_distance(errs, reference)

    def summary_for(self, n) -> dict:
        for s in self.summary:
            if s["n"] == n:
                return s
        raise KeyError(n)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "truth": self.truth,
            "scaling": None if self.scaling is None else self.scaling.to_dict(),
            "records": self.records,
            "summary": self.summary,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(_json_safe(self.to_dict()), sort_keys=True, indent=1, allow_nan=False)

    def write_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    def write_csv(self, path):
        """Columns ``n, rep, raw_error, scaled_error, excluded_flag``."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("n,rep,raw_error,scaled_error,excluded_flag\n")
            for r in self.records:
                fh.write(
                    f"{r['n']},{r['rep']},{_fmt(r['raw_error'])},{_fmt(r['scaled_error'])},{int(r['excluded'])}\n"
                )


def _fmt(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def _json_safe(obj):
    if isinstance(obj, float):
        return None if not math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def _summarize(n, rows, prev_rmse):
    ok = [r for r in rows if not r["excluded"]]
    out = {"n": n, "reps": len(rows), "excluded": len(rows) - len(ok)}
    raw = np.array([r["raw_error"] for r in ok])
    scaled = np.array([r["scaled_error"] for r in ok])
    paired = np.array([r["paired"] for r in ok])
    if raw.size:
        out["rmse"] = float(np.sqrt(np.mean(raw**2)))
        out["mean_abs_error"] = float(np.mean(np.abs(raw)))
        out["mean_error"] = float(np.mean(raw))
        fin = scaled[np.isfinite(scaled)]
        out["scaled_quantiles"] = {str(q): float(np.quantile(fin, q)) for q in _QUANTILES} if fin.size else None
        fp = paired[np.isfinite(paired)]
        out["median_paired"] = float(np.median(fp)) if fp.size else math.nan
        betas = [r["beta_hat"] for r in ok]
        out["mean_beta"] = np.mean(np.asarray(betas, dtype=float), axis=0).tolist() if betas and betas[0] else []
    else:
        out.update(rmse=math.nan, mean_abs_error=math.nan, mean_error=math.nan,
                   scaled_quantiles=None, median_paired=math.nan, mean_beta=[])
    out["rate_ratio"] = (
        prev_rmse / out["rmse"] if prev_rmse is not None and out["rmse"] > 0 else math.nan
    )
    return out


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> ExperimentReport:
    """Run a campaign and collect per-replicate errors at ``spec.x0``.

    For every ``n`` in ``spec.n_list`` and every replicate: draw a sample,
    fit ``beta``, evaluate the estimate at ``x0`` and record the raw error
    and the scaled error ``n^{1/3} A(x0) (estimate - truth)``. For hazard
    targets the paired statistic ``n^{1/3} |grenander(x0) - npmle(x0)|`` is
    recorded too. Replicates in which ``x0`` falls outside the estimate's
    domain, or the fit fails, are flagged as excluded and counted.
    """
    started = _time.perf_counter()
    notes = []
    truth = _truth(spec)
    try:
        scaling = scaling_constant(spec.generator, spec.x0, spec.target)
    except TheoremConditionError as exc:
        scaling = None
        notes.append(str(exc))
    tasks = [(spec, k, r) for k in range(len(spec.n_list)) for r in range(spec.reps)]
    nworkers = worker_count(workers)
    if nworkers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            records = list(pool.map(_replicate, tasks, chunksize=max(1, len(tasks) // (4 * nworkers))))
    else:
        records = [_replicate(t) for t in tasks]
    for rec in records:
        est = rec["estimate"]
        rec["raw_error"] = est - truth if not rec["excluded"] else math.nan
        if rec["excluded"] or scaling is None:
            rec["scaled_error"] = math.nan
        else:
            rec["scaled_error"] = rec["n"] ** (1 / 3) * scaling.value * rec["raw_error"]
    summary = []
    prev = None
    for n in spec.n_list:
        s = _summarize(n, [r for r in records if r["n"] == n], prev)
        summary.append(s)
        prev = s["rmse"] if math.isfinite(s["rmse"]) else None
    return ExperimentReport(spec, truth, scaling, records, summary, _time.perf_counter() - started, notes)
