"""Empirical processes of the Cox model and the Breslow estimator.

For a fixed coefficient vector ``beta`` and the empirical measure ``P_n`` of
``(T_i, Delta_i, Z_i)``:

* ``Phi_n(beta, x) = (1/n) sum_i {T_i >= x} exp(beta'Z_i)``
* ``W_n(beta, x)   = (1/n) sum_i exp(beta'Z_i) min(T_i, x)``
* ``V_n(x)         = (1/n) sum_i Delta_i {T_i < x}``   (left-continuous)
* ``Y_n(x)         = (1/n) sum_i Delta_i {T_i <= x}``  (right-continuous)
* ``Lambda_n(x)    = sum_{event times t <= x} d(t) / (n Phi_n(beta, t))``
* ``F_n(x)         = 1 - exp(-Lambda_n(x))``
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LAST, LEFT, RIGHT, StepFunction, SurvivalSample
from .exceptions import NoEventsError

__all__ = [
    "PiecewiseLinear",
    "DistinctTimes",
    "BaselineProcesses",
    "baseline_processes",
    "phi_n",
    "w_n",
    "v_n",
    "y_n",
    "w_n_function",
    "v_n_function",
    "y_n_function",
    "breslow_lambda",
    "breslow_lambda_integral",
    "breslow_F",
]


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Continuous piecewise-linear function through ``(knots, values)``.

    Held constant outside ``[knots[0], knots[-1]]``.
    """

    knots: np.ndarray
    values: np.ndarray

    def __call__(self, x):
        out = np.interp(np.asarray(x, dtype=float), self.knots, self.values)
        return float(out) if np.ndim(out) == 0 else out


def _beta(sample, beta):
    if beta is None:
        return np.zeros(sample.p)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != sample.p:
        raise ValueError(f"beta has length {beta.shape[0]}, expected p={sample.p}")
    return beta


class DistinctTimes:
    """Sample collapsed onto its distinct follow-up times.

    Attributes
    ----------
    u : ndarray
        Distinct follow-up times in increasing order.
    d : ndarray
        Number of events at each ``u``.
    risk : ndarray
        ``Phi_n(beta, u_k)``: the normalized risk-set sum at each ``u``.
    w_at : ndarray
        ``W_n(beta, u_k)``.
    """

    def __init__(self, sample: SurvivalSample, beta=None):
        beta = _beta(sample, beta)
        self.n = sample.n
        if self.n == 0:
            raise ValueError("empty sample")
        eta = sample.z @ beta
        order = np.argsort(sample.time, kind="stable")
        t = sample.time[order]
        score = np.exp(eta[order])
        self.u, first, counts = np.unique(t, return_index=True, return_counts=True)
        self.d = np.add.reduceat(sample.status[order], first).astype(float)
        tail = np.cumsum(score[::-1])[::-1]
        self.risk = tail[first] / self.n
        self.w_inc = np.diff(np.concatenate([[0.0], self.u])) * self.risk
        self.w_at = np.cumsum(self.w_inc)

    @property
    def event_mask(self):
        return self.d > 0


def phi_n(sample: SurvivalSample, beta, x):
    """``(1/n) sum_i {T_i >= x} exp(beta'Z_i)``, nonincreasing in ``x``."""
    beta = _beta(sample, beta)
    score = np.exp(sample.z @ beta)
    xa = np.asarray(x, dtype=float)
    out = (sample.time[None, :] >= xa.reshape(-1, 1)) @ score / sample.n
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def w_n(sample: SurvivalSample, beta, x):
    """``(1/n) sum_i exp(beta'Z_i) min(T_i, x)`` for ``x >= 0``."""
    beta = _beta(sample, beta)
    score = np.exp(sample.z @ beta)
    xa = np.asarray(x, dtype=float)
    out = np.minimum(sample.time[None, :], xa.reshape(-1, 1)) @ score / sample.n
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def v_n(sample: SurvivalSample, x):
    """``(1/n) sum_i Delta_i {T_i < x}``."""
    xa = np.asarray(x, dtype=float)
    ev = sample.time[sample.status == 1]
    out = (ev[None, :] < xa.reshape(-1, 1)).sum(axis=1) / sample.n
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def y_n(sample: SurvivalSample, x):
    """``(1/n) sum_i Delta_i {T_i <= x}``."""
    xa = np.asarray(x, dtype=float)
    ev = sample.time[sample.status == 1]
    out = (ev[None, :] <= xa.reshape(-1, 1)).sum(axis=1) / sample.n
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def w_n_function(sample: SurvivalSample, beta=None, *, _dt=None) -> PiecewiseLinear:
    dt = _dt or DistinctTimes(sample, beta)
    return PiecewiseLinear(np.concatenate([[0.0], dt.u]), np.concatenate([[0.0], dt.w_at]))


def _event_counts(dt):
    mask = dt.event_mask
    return dt.u[mask], np.cumsum(dt.d[mask]) / dt.n


def v_n_function(sample: SurvivalSample, *, _dt=None) -> StepFunction:
    dt = _dt or DistinctTimes(sample)
    times, cum = _event_counts(dt)
    return StepFunction(times, cum, LEFT, 0.0, LAST, "nondecreasing")


def y_n_function(sample: SurvivalSample, *, _dt=None) -> StepFunction:
    dt = _dt or DistinctTimes(sample)
    times, cum = _event_counts(dt)
    return StepFunction(times, cum, RIGHT, 0.0, LAST, "nondecreasing")


def _breslow_from(dt: DistinctTimes) -> StepFunction:
    mask = dt.event_mask
    if not np.any(mask):
        raise NoEventsError()
    jumps = dt.d[mask] / (dt.n * dt.risk[mask])
    return StepFunction(dt.u[mask], np.cumsum(jumps), RIGHT, 0.0, LAST, "nondecreasing")


def breslow_lambda(sample: SurvivalSample, beta=None) -> StepFunction:
    """Breslow estimator of the baseline cumulative hazard.

    Right-continuous, zero before the first event, with a jump of
    ``d_i / sum_j {T_j >= X_(i)} exp(beta'Z_j)`` at each distinct event time
    ``X_(i)``; tied events are pooled into ``d_i``.

    Raises
    ------
    NoEventsError
        When every observation is censored.
    """
    return _breslow_from(DistinctTimes(sample, beta))


def breslow_lambda_integral(sample: SurvivalSample, beta, x):
    """Breslow estimator written as ``int delta {u <= x} / Phi_n(beta, u) dP_n``.

    Evaluated record by record with :func:`phi_n`; used to cross-check
    :func:`breslow_lambda`.
    """
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    ev = sample.status == 1
    t_ev = sample.time[ev]
    denom = phi_n(sample, beta, t_ev)
    contrib = 1.0 / (sample.n * np.atleast_1d(denom))
    out = np.array([contrib[t_ev <= xi].sum() for xi in xa])
    return float(out[0]) if np.ndim(x) == 0 else out


def breslow_F(sample: SurvivalSample, beta=None) -> StepFunction:
    """Baseline distribution estimator ``1 - exp(-Lambda_n)``."""
    lam = breslow_lambda(sample, beta)
    return StepFunction(
        lam.breakpoints, -np.expm1(-lam.values), RIGHT, 0.0, LAST, "nondecreasing"
    )


@dataclass(frozen=True, eq=False)
class BaselineProcesses:
    """All empirical processes of one sample at one coefficient vector."""

    sample: SurvivalSample
    beta_used: np.ndarray
    w_n: PiecewiseLinear
    v_n: StepFunction
    y_n: StepFunction
    lambda_n: StepFunction
    f_n: StepFunction

    def phi_n(self, x, beta=None):
        return phi_n(self.sample, self.beta_used if beta is None else beta, x)


def baseline_processes(sample: SurvivalSample, beta=None) -> BaselineProcesses:
    """Build :class:`BaselineProcesses` for ``sample`` at ``beta``."""
    beta = _beta(sample, beta)
    dt = DistinctTimes(sample, beta)
    lam = _breslow_from(dt)
    f = StepFunction(lam.breakpoints, -np.expm1(-lam.values), RIGHT, 0.0, LAST, "nondecreasing")
    return BaselineProcesses(
        sample=sample,
        beta_used=beta,
        w_n=w_n_function(sample, _dt=dt),
        v_n=v_n_function(sample, _dt=dt),
        y_n=y_n_function(sample, _dt=dt),
        lambda_n=lam,
        f_n=f,
    )
