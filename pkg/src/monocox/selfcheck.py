"""Invariant battery run by ``monocox selfcheck``.

Every check draws its own seeded random instances and compares two
independent computations of the same object:

* ``duality``: hull slopes of the NPMLE against the max-min formula;
* ``switching``: threshold events of each estimator against locations of
  its inverse process;
* ``marshall``: the convex minorant of the Breslow estimator is no farther
  from a convex truth than the Breslow estimator itself;
* ``nelson-aalen``: without covariates the Breslow estimator and its
  Grenander slopes match a plain loop implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .breslow import breslow_lambda
from .core import SurvivalSample
from .cox import fit_beta
from .estimators import (
    NONDECREASING,
    NONINCREASING,
    grenander_density,
    grenander_hazard,
    inverse_process,
    maxmin_oracle,
    npmle_hazard,
    switching_events,
)
from .exceptions import MonocoxError
from .lab import GeneratorSpec, UniformCensoring, UniformCovariates, Weibull, generate

__all__ = [
    "CheckResult",
    "random_instance",
    "check_duality",
    "check_switching",
    "check_marshall",
    "check_nelson_aalen",
    "nelson_aalen",
    "brute_force_gcm",
    "run_selfcheck",
    "INJECTIONS",
]

INJECTIONS = ("gcm-off-by-one",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    cases: int
    worst: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.cases} cases, worst {self.worst:.3g}{'; ' + self.detail if self.detail else ''}"


def random_instance(rng, n_max: int = 40, p: int = 1, ties: bool | None = None):
    """Random sample with mixed censoring and a random ``beta``.

    Roughly a third of the instances have times rounded to one decimal, which
    creates ties. At least one event is guaranteed.
    """
    n = int(rng.integers(2, n_max + 1))
    z = rng.uniform(-1, 1, size=(n, p))
    beta = rng.normal(0, 1, size=p)
    x = rng.exponential(1.0, size=n) * np.exp(-(z @ beta)) + 1e-3
    c = rng.exponential(rng.uniform(0.5, 4.0), size=n) + 1e-3
    t = np.minimum(x, c)
    if ties is None:
        ties = rng.random() < 1 / 3
    if ties:
        t = np.maximum(np.round(t, 1), 0.1)
    status = (x <= c).astype(int)
    if status.sum() == 0:
        status[rng.integers(n)] = 1
    return SurvivalSample(t, status, z), beta


def check_duality(n_datasets: int = 200, seed: int = 0, n_max: int = 40, inject=None, tol=1e-10) -> CheckResult:
    rng = np.random.default_rng([seed, 1])
    worst = 0.0
    cases = 0
    for _ in range(n_datasets):
        sample, beta = random_instance(rng, n_max)
        for shape in (NONDECREASING, NONINCREASING):
            if shape == NONDECREASING and np.unique(sample.time).size < 2:
                continue
            slopes = npmle_hazard(sample, beta, shape).slopes
            if inject == "gcm-off-by-one":
                slopes = np.roll(slopes, 1)
            oracle = maxmin_oracle(sample, beta, shape)
            err = float(np.max(np.abs(slopes - oracle) / np.maximum(1.0, np.abs(oracle))))
            worst = max(worst, err)
            cases += 1
    return CheckResult("duality", worst <= tol, cases, worst, f"tolerance {tol:g}")


_SWITCH_KINDS = (
    ("npmle_hazard", NONDECREASING),
    ("npmle_hazard", NONINCREASING),
    ("grenander_hazard", NONDECREASING),
    ("grenander_hazard", NONINCREASING),
    ("grenander_density", NONINCREASING),
)


def _fit(kind, sample, beta, shape):
    if kind == "npmle_hazard":
        return npmle_hazard(sample, beta, shape)
    if kind == "grenander_hazard":
        return grenander_hazard(sample, beta, shape)
    return grenander_density(sample, beta)


def check_switching(n_datasets: int = 50, n_levels: int = 10, n_points: int = 10, seed: int = 0, n_max: int = 40) -> CheckResult:
    """Switching relations at random levels ``a`` and random points ``x`` in ``(0, T_(n))``."""
    rng = np.random.default_rng([seed, 2])
    violations = 0
    cases = 0
    first = ""
    for _ in range(n_datasets):
        sample, beta = random_instance(rng, n_max)
        tmax = float(sample.time.max())
        if np.unique(sample.time).size < 2:
            continue
        for kind, shape in _SWITCH_KINDS:
            est = _fit(kind, sample, beta, shape)
            top = float(np.max(est.slopes))
            levels = rng.uniform(0, 1.2 * top if top > 0 else 1.0, size=n_levels)
            levels = levels[levels > 0]
            xs = rng.uniform(0, tmax, size=n_points)
            xs = xs[(xs > 0) & ~np.isin(xs, sample.time)]
            for a in levels:
                inv = inverse_process(sample, beta, kind, shape, float(a))
                for x in xs:
                    lhs, rhs = switching_events(est, inv, float(x))
                    cases += 1
                    if lhs != rhs:
                        violations += 1
                        if not first:
                            first = f"{kind}/{shape} a={a!r} x={x!r}"
    return CheckResult("switching", violations == 0, cases, float(violations), first or "zero violations")


def check_marshall(n_samples: int = 50, n: int = 100, seed: int = 0, tol: float = 1e-12) -> CheckResult:
    """Convex truth ``Lambda0(x) = x^2`` from a Weibull(2, 1) design."""
    spec = GeneratorSpec(Weibull(2.0, 1.0), (0.5,), UniformCovariates(), UniformCensoring(3.0), n=n)
    worst = -np.inf
    failures = 0
    cases = 0
    for r in range(n_samples):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(3, r)))
        sample = generate(spec, rng)
        try:
            beta = fit_beta(sample).beta_hat
        except MonocoxError:
            continue
        lam = breslow_lambda(sample, beta)
        end = float(sample.time.max())
        tilde = grenander_hazard(sample, beta, NONDECREASING)
        grid = np.unique(np.concatenate([np.linspace(0, end, 2001), lam.breakpoints[lam.breakpoints <= end]]))
        truth = spec.baseline.cumhaz(grid)
        minorant = _minorant_values(tilde, lam, grid)
        lhs = np.max(np.abs(minorant - truth))
        rhs = max(np.max(np.abs(lam(grid) - truth)), np.max(np.abs(lam.left_limit(grid) - truth)))
        worst = max(worst, lhs - rhs)
        failures += lhs > rhs + tol
        cases += 1
    return CheckResult("marshall", failures == 0, cases, float(worst), f"{failures} violations")


def _minorant_values(tilde, lam, grid):
    # integrate the slope: the minorant starts at Lambda_n(0)
    knots = tilde.estimate.breakpoints
    slopes = tilde.estimate.values
    vals = np.concatenate([[lam(knots[0])], lam(knots[0]) + np.cumsum(slopes * np.diff(knots))])
    return np.interp(grid, knots, vals)


def nelson_aalen(time, status):
    """Nelson-Aalen jumps by explicit loops: ``(event_times, cumulative)``."""
    out_t, out_v = [], []
    total = 0.0
    for t in sorted(set(float(v) for v, s in zip(time, status) if s == 1)):
        d = sum(1 for v, s in zip(time, status) if v == t and s == 1)
        at_risk = sum(1 for v in time if v >= t)
        total += d / at_risk
        out_t.append(t)
        out_v.append(total)
    return np.array(out_t), np.array(out_v)


def brute_force_gcm(xs, ys, at):
    """Greatest convex minorant of a point cloud, evaluated at ``at``.

    At each query point the value is the minimum over all chords whose
    endpoints bracket it. Cubic cost; for verification only.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    out = []
    for q in np.atleast_1d(at):
        best = np.inf
        left = np.flatnonzero(xs <= q)
        right = np.flatnonzero(xs >= q)
        for i in left:
            for k in right:
                if xs[k] == xs[i]:
                    v = ys[i] if xs[i] == q else np.inf
                else:
                    v = ys[i] + (ys[k] - ys[i]) * (q - xs[i]) / (xs[k] - xs[i])
                best = min(best, v)
        out.append(best)
    return np.array(out)


def check_nelson_aalen(n_samples: int = 30, seed: int = 0, n_max: int = 40, tol: float = 1e-12) -> CheckResult:
    """Covariate-free Breslow against Nelson-Aalen, and Grenander slopes against a brute-force hull.

    ``tol`` bounds the cumulative hazard difference; slopes, which divide
    by short gaps, are compared with relative tolerance ``1e-9``.
    """
    rng = np.random.default_rng([seed, 4])
    worst_na = 0.0
    worst_slope = 0.0
    cases = 0
    for _ in range(n_samples):
        s, _ = random_instance(rng, n_max)
        sample = SurvivalSample(s.time, s.status)
        lam = breslow_lambda(sample)
        et, na = nelson_aalen(sample.time.tolist(), sample.status.tolist())
        if lam.breakpoints.size != et.size or np.any(lam.breakpoints != et):
            return CheckResult("nelson-aalen", False, cases, np.inf, "jump times differ")
        worst_na = max(worst_na, float(np.max(np.abs(lam.values - na))))
        end = float(sample.time.max())
        # graph of the step function: both corners at every jump plus the endpoints
        inner = et[(et > 0) & (et < end)]
        before = np.concatenate([[0.0], na])[np.searchsorted(et, inner, side="left")]
        gx = np.concatenate([[0.0], inner, inner, [end, end]])
        gy = np.concatenate([[lam(0.0)], before, lam(inner), [lam.left_limit(end), lam(end)]])
        tilde = grenander_hazard(sample, None, NONDECREASING)
        knots = np.unique(np.concatenate([[0.0], inner, [end]]))
        ref = np.diff(brute_force_gcm(gx, gy, knots)) / np.diff(knots)
        got = tilde((knots[:-1] + knots[1:]) / 2)
        worst_slope = max(worst_slope, float(np.max(np.abs(got - ref) / np.maximum(1.0, np.abs(ref)))))
        cases += 1
    ok = worst_na <= tol and worst_slope <= 1e-9
    return CheckResult(
        "nelson-aalen", ok, cases, max(worst_na, worst_slope),
        f"cumulative hazard {worst_na:.3g}, slopes {worst_slope:.3g}",
    )


def run_selfcheck(seed: int = 0, inject: str | None = None) -> list[CheckResult]:
    """Run the fast battery; stops after the first failing property."""
    if inject is not None and inject not in INJECTIONS:
        raise ValueError(f"unknown fault injection {inject!r}")
    results = []
    for check in (
        lambda: check_duality(200, seed, inject=inject),
        lambda: check_switching(40, 5, 5, seed),
        lambda: check_marshall(40, 100, seed),
        lambda: check_nelson_aalen(30, seed),
    ):
        res = check()
        results.append(res)
        if not res.passed:
            break
    return results
