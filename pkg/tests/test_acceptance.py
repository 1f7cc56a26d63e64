"""Acceptance criteria. Each test prints one PASS/FAIL line; run with ``-s`` to see them inline."""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from monocox.cli import main
from monocox.cox import log_partial_likelihood, partial_likelihood_derivatives
from monocox.estimators import NONDECREASING, NONINCREASING, maxmin_oracle, npmle_hazard
from monocox.lab import (
    Exponential,
    ExperimentSpec,
    GeneratorSpec,
    UniformCensoring,
    UniformCovariates,
    Weibull,
    chernoff_sample,
    ks_distance,
    run_experiment,
)
from monocox.selfcheck import check_marshall, check_nelson_aalen, check_switching, random_instance

X0 = 0.5
SEED = 2024
CHERNOFF = {"L": 2.0, "h": 0.005, "reps": 10**5, "seed": 0}


def _report(number, title, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} [{number}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def _weibull_design():
    return GeneratorSpec(Weibull(2.0, 1.0), (0.5,), UniformCovariates(1, 0.0, 1.0), UniformCensoring(3.0), seed=SEED)


def _exponential_design():
    return GeneratorSpec(Exponential(1.0), (0.5,), UniformCovariates(1, 0.0, 1.0), UniformCensoring(3.0), seed=SEED)


def _run(generator, estimator, target, shape, reps, n_list, seed=SEED):
    spec = ExperimentSpec(generator, X0, estimator, target, shape, reps, tuple(n_list), seed, dict(CHERNOFF))
    return run_experiment(spec, workers=1)


def _mean_abs(report, n):
    return float(np.nanmean(np.abs(report.raw_errors(n))))


def _rmse(report, n):
    return float(np.sqrt(np.nanmean(report.raw_errors(n) ** 2)))


def test_01_maxmin_duality():
    start = time.perf_counter()
    rng = np.random.default_rng([SEED, 1])
    worst, cases = 0.0, 0
    for _ in range(1000):
        sample, beta = random_instance(rng, 40)
        for shape in (NONDECREASING, NONINCREASING):
            if shape == NONDECREASING and np.unique(sample.time).size < 2:
                continue
            slopes = npmle_hazard(sample, beta, shape).slopes
            worst = max(worst, float(np.max(np.abs(slopes - maxmin_oracle(sample, beta, shape)))))
            cases += 1
    elapsed = time.perf_counter() - start
    _report(1, "max-min duality", worst <= 1e-10 and elapsed <= 60,
            f"{cases} fits, worst |slope - oracle| {worst:.2e} (tol 1e-10), {elapsed:.1f}s (limit 60s)")


def test_02_switching():
    res = check_switching(200, 10, 10, seed=SEED)
    _report(2, "switching relations", res.passed and res.worst == 0,
            f"{res.cases} checks over 5 estimator/shape kinds, {int(res.worst)} violations (limit 0)")


def test_03_marshall():
    res = check_marshall(500, 100, seed=SEED, tol=1e-12)
    _report(3, "Marshall inequality", res.passed and res.cases == 500, f"{res.cases} of 500 samples checked, n = 100, {res.detail}")


def test_04_covariate_free_reduction():
    res = check_nelson_aalen(100, seed=SEED, tol=1e-12)
    _report(4, "covariate-free reduction", res.passed, f"{res.cases} samples, worst {res.worst:.2e}; {res.detail}")


def test_05_consistency():
    start = time.perf_counter()
    parts, ok = [], True
    for estimator in ("npmle", "grenander"):
        rep = _run(_weibull_design(), estimator, "hazard", NONDECREASING, 200, (500, 4000))
        a, b = _mean_abs(rep, 500), _mean_abs(rep, 4000)
        ok &= b < a
        parts.append(f"{estimator} hazard {a:.4f} -> {b:.4f}")
    rep = _run(_exponential_design(), "grenander", "density", NONINCREASING, 200, (500, 4000))
    assert rep.truth == pytest.approx(np.exp(-0.5))
    a, b = _mean_abs(rep, 500), _mean_abs(rep, 4000)
    ok &= b < a
    parts.append(f"density {a:.4f} -> {b:.4f}")
    elapsed = time.perf_counter() - start
    _report(5, "consistency (mean |error|, n 500 -> 4000)", ok and elapsed <= 600,
            "; ".join(parts) + f"; {elapsed:.1f}s (limit 600s)")


def test_06_cube_root_rate():
    rep = _run(_weibull_design(), "npmle", "hazard", NONDECREASING, 300, (500, 4000))
    ratio = _rmse(rep, 500) / _rmse(rep, 4000)
    _report(6, "cube-root rate", 1.4 <= ratio <= 2.8, f"RMSE(500)/RMSE(4000) = {ratio:.3f} (range [1.4, 2.8], ideal 2)")


def test_07_asymptotic_equivalence():
    rep = _run(_weibull_design(), "npmle", "hazard", NONDECREASING, 300, (500, 2000, 8000))
    med = [float(np.nanmedian(rep.paired(n))) for n in (500, 2000, 8000)]
    ok = med[0] > med[1] > med[2]
    _report(7, "asymptotic equivalence", ok,
            "median n^(1/3)|grenander - npmle| at 500, 2000, 8000 = " + ", ".join(f"{m:.4f}" for m in med))


def test_08_chernoff_limit():
    start = time.perf_counter()
    reference = chernoff_sample(CHERNOFF["L"], CHERNOFF["h"], CHERNOFF["reps"], CHERNOFF["seed"])
    haz = _run(_weibull_design(), "npmle", "hazard", NONDECREASING, 400, (8000,))
    den = _run(_exponential_design(), "grenander", "density", NONINCREASING, 400, (8000,))
    ks = []
    for rep in (haz, den):
        errs = rep.scaled_errors(8000)
        ks.append(ks_distance(errs[np.isfinite(errs)], reference))
    elapsed = time.perf_counter() - start
    _report(8, "Chernoff limit", max(ks) <= 0.15 and elapsed <= 1800,
            f"KS hazard {ks[0]:.4f}, KS density {ks[1]:.4f} (limit 0.15), {elapsed:.1f}s (limit 1800s)")


def test_09_beta_recovery():
    rep = _run(_weibull_design(), "npmle", "hazard", NONDECREASING, 200, (2000,))
    betas = rep.betas(2000)
    bias = abs(float(np.mean(betas)) - 0.5)
    rng = np.random.default_rng([SEED, 9])
    worst = 0.0
    for _ in range(100):
        p = int(rng.integers(1, 4))
        sample, _ = random_instance(rng, 40, p=p)
        beta = rng.normal(0, 0.5, p)
        _, grad, _ = partial_likelihood_derivatives(sample, beta)
        fd = np.empty(p)
        for j in range(p):
            h = 1e-6 * (1 + abs(beta[j]))
            up, dn = beta.copy(), beta.copy()
            up[j] += h
            dn[j] -= h
            fd[j] = (log_partial_likelihood(sample, up) - log_partial_likelihood(sample, dn)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(grad - fd) / np.maximum(1.0, np.abs(fd)))))
    _report(9, "beta recovery", bias <= 0.05 and worst <= 1e-5 and betas.shape == (200, 1),
            f"|mean beta - 0.5| = {bias:.4f} (limit 0.05); gradient vs finite difference worst {worst:.2e} (limit 1e-5)")


def test_10_determinism(tmp_path, capsys):
    from pathlib import Path

    data = Path(__file__).parent / "data"
    commands = {
        "simulate": lambda out: ["simulate", "--spec", str(data / "smoke_spec.json"), "--output", str(out)],
        "fit": lambda out: ["fit", "--input", str(data / "cox40.csv"), "--shape", "increasing", "--output", str(out)],
        "chernoff": lambda out: ["chernoff", "--reps", "2000", "--seed", "5", "--output", str(out) + ".csv"],
    }
    identical = True
    for name, build in commands.items():
        digests = []
        for run in ("a", "b"):
            out = tmp_path / f"{name}_{run}"
            assert main(build(out)) == 0
            digests.append(sorted((p.suffix, p.read_bytes()) for p in tmp_path.glob(f"{name}_{run}.*")))
        identical &= digests[0] == digests[1] and len(digests[0]) > 0
    capsys.readouterr()
    outs = []
    for _ in range(2):
        assert main(["selfcheck", "--seed", "3"]) == 0
        outs.append(capsys.readouterr().out)
    identical &= outs[0] == outs[1]
    _report(10, "determinism", identical, "simulate, fit, chernoff files and selfcheck output compared byte for byte")
