"""Monotone baseline hazard and decreasing baseline density estimators.

Two hazard estimators are available for either monotone shape:

* ``npmle``: the nonparametric maximum likelihood estimator for fixed
  ``beta``, obtained as the left slopes of the convex minorant (nondecreasing)
  or concave majorant (nonincreasing) of a cumulative sum diagram built from
  ``W_n`` and ``V_n`` / ``Y_n``.
* ``grenander``: the left derivative of the convex minorant / concave
  majorant of the Breslow estimator on ``[0, T_(n)]``.

The decreasing density estimator is the left derivative of the concave
majorant of ``F_n = 1 - exp(-Lambda_n)``.

Notes
-----
A related nondecreasing-hazard estimator moves every censoring time back to
the preceding event time before building the diagram. That variant is not
provided here; it has the same limit behaviour but gives steeper slopes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .breslow import DistinctTimes, baseline_processes, breslow_F, breslow_lambda
from .core import LEFT, RIGHT, UNDEFINED, StepFunction, SurvivalSample
from .cox import fit_beta
from .exceptions import EstimationError, NoEventsError
from .minorant import CumSumDiagram, block_slopes, gcm, gcm_of_function, lcm, lcm_of_function

__all__ = [
    "NONDECREASING",
    "NONINCREASING",
    "MonotoneEstimate",
    "InverseProcessValue",
    "npmle_hazard",
    "maxmin_oracle",
    "grenander_hazard",
    "grenander_density",
    "inverse_process",
    "switching_events",
    "pseudo_loglikelihood",
    "estimate",
]

NONDECREASING = "nondecreasing"
NONINCREASING = "nonincreasing"

_SHAPE_ALIASES = {
    "nondecreasing": NONDECREASING,
    "increasing": NONDECREASING,
    "incr": NONDECREASING,
    "nonincreasing": NONINCREASING,
    "decreasing": NONINCREASING,
    "decr": NONINCREASING,
}


def _shape(shape: str) -> str:
    try:
        return _SHAPE_ALIASES[shape]
    except KeyError:
        raise ValueError(f"unknown shape {shape!r}") from None


def _beta(sample, beta):
    if beta is None:
        return np.zeros(sample.p)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != sample.p:
        raise ValueError(f"beta has length {beta.shape[0]}, expected p={sample.p}")
    return beta


@dataclass(frozen=True, eq=False)
class MonotoneEstimate:
    """A shape-constrained estimate together with how it was obtained.

    Calling the object evaluates the underlying step function. Beyond
    ``domain_end`` (the largest follow-up time) the estimate is left
    undefined, since the likelihood does not pin it down there.
    """

    estimate: StepFunction
    method: str
    target: str
    shape: str
    beta_used: np.ndarray
    domain_end: float
    slopes: np.ndarray = field(repr=False, default=None)
    diagram: CumSumDiagram = field(repr=False, default=None)

    def __call__(self, x):
        return self.estimate(x)

    def metadata(self) -> dict:
        return {
            "method": self.method,
            "target": self.target,
            "shape": self.shape,
            "beta": [float(b) for b in self.beta_used],
            "domain_end": float(self.domain_end),
        }


@dataclass(frozen=True)
class InverseProcessValue:
    """Location ``u`` of the largest extremizer at slope level ``a``."""

    a: float
    u: float


def _require_events(dt):
    if not np.any(dt.event_mask):
        raise NoEventsError()


def npmle_hazard(sample: SurvivalSample, beta=None, shape: str = NONDECREASING) -> MonotoneEstimate:
    """NPMLE of a monotone baseline hazard for fixed ``beta``.

    The diagram is built on the distinct follow-up times ``u_1 < ... < u_K``
    (identical to the order statistics when there are no ties).

    Nondecreasing
        Points ``(W_n(u_{j+1}) - W_n(u_1), V_n(u_{j+1}))``, ``j = 1..K-1``,
        after the origin. The estimate is 0 before ``u_1``, the ``j``-th
        convex-minorant slope on ``[u_j, u_{j+1})`` and undefined from
        ``u_K`` on.
    Nonincreasing
        Points ``(W_n(u_j), Y_n(u_j))``, ``j = 1..K``, after the origin. The
        ``j``-th concave-majorant slope holds on ``(u_{j-1}, u_j]`` with
        ``u_0 = 0``; undefined beyond ``u_K``.
    """
    shape = _shape(shape)
    beta = _beta(sample, beta)
    dt = DistinctTimes(sample, beta)
    _require_events(dt)
    cum_events = np.cumsum(dt.d) / dt.n
    u = dt.u
    if shape == NONDECREASING:
        if u.size < 2:
            raise EstimationError("the nondecreasing NPMLE needs two distinct follow-up times")
        x = np.concatenate([[0.0], dt.w_at[1:] - dt.w_at[0]])
        y = np.concatenate([[0.0], cum_events[:-1]])
        diagram = CumSumDiagram(x, y)
        slopes = block_slopes(gcm(diagram), dt.w_inc[1:], dt.d[:-1] / dt.n)
        est = StepFunction(u, slopes, RIGHT, 0.0, UNDEFINED, NONDECREASING)
    else:
        if u[0] <= 0:
            raise EstimationError("the nonincreasing NPMLE is unbounded with a follow-up time at 0")
        x = np.concatenate([[0.0], dt.w_at])
        y = np.concatenate([[0.0], cum_events])
        diagram = CumSumDiagram(x, y)
        slopes = block_slopes(lcm(diagram), dt.w_inc, dt.d / dt.n)
        est = StepFunction(np.concatenate([[0.0], u]), slopes, LEFT, slopes[0], UNDEFINED, NONINCREASING)
    return MonotoneEstimate(est, "npmle", "hazard", shape, beta, float(u[-1]), slopes, diagram)


def _oracle_terms(sample, beta, shape):
    """Numerators and weights of the max-min formula, from the raw records."""
    t = sample.time
    score = np.exp(sample.z @ beta)
    u = np.unique(t)
    d = np.array([sample.status[t == v].sum() for v in u], dtype=float)
    at_risk = np.array([score[t >= v].sum() for v in u])
    if shape == NONDECREASING:
        num = d[:-1]
        den = np.diff(u) * at_risk[1:]
    else:
        num = d
        den = np.diff(np.concatenate([[0.0], u])) * at_risk
    return num, den


def maxmin_oracle(sample: SurvivalSample, beta=None, shape: str = NONDECREASING, i=None):
    """Direct max-min evaluation of the NPMLE slopes.

    Nondecreasing: ``max_{s<=i} min_{t>=i} sum_{s..t} d_j / sum_{s..t} w_j``
    with ``w_j = (u_{j+1} - u_j) sum_l {T_l >= u_{j+1}} exp(beta'Z_l)``.
    Nonincreasing: ``min_{s<=i} max_{t>=i}`` of the same ratio with
    ``w_j = (u_j - u_{j-1}) sum_l {T_l >= u_j} exp(beta'Z_l)``.

    Parameters
    ----------
    i : int, optional
        One-based slope index. All slopes are returned when omitted.

    Notes
    -----
    This is an O(n^2) reference computation meant for verification; it
    shares no code with the hull algorithm.
    """
    shape = _shape(shape)
    beta = _beta(sample, beta)
    num, den = _oracle_terms(sample, beta, shape)
    m = num.size
    # ratio[s, t] summed from s onward, so short blocks are not differences of long sums
    ratio = np.full((m, m), np.nan)
    with np.errstate(invalid="ignore", divide="ignore"):
        for s in range(m):
            ratio[s, s:] = np.cumsum(num[s:]) / np.cumsum(den[s:])
    indices = range(1, m + 1) if i is None else [i]
    out = []
    for k in indices:
        if not 1 <= k <= m:
            raise IndexError(f"slope index {k} outside 1..{m}")
        block = ratio[:k, k - 1:]
        if shape == NONDECREASING:
            out.append(block.min(axis=1).max())
        else:
            out.append(block.max(axis=1).min())
    return np.array(out) if i is None else float(out[0])


def grenander_hazard(sample: SurvivalSample, beta=None, shape: str = NONDECREASING) -> MonotoneEstimate:
    """Left derivative of the convex minorant / concave majorant of the Breslow estimator on ``[0, T_(n)]``."""
    shape = _shape(shape)
    beta = _beta(sample, beta)
    lam = breslow_lambda(sample, beta)
    end = float(sample.time.max())
    if end <= 0:
        raise EstimationError("all follow-up times are zero")
    hull = (gcm_of_function if shape == NONDECREASING else lcm_of_function)(lam, (0.0, end))
    return MonotoneEstimate(
        hull.slope, "grenander", "hazard", shape, beta, end, hull.hull.left_slopes, hull.hull.diagram
    )


def grenander_density(sample: SurvivalSample, beta=None) -> MonotoneEstimate:
    """Left derivative of the concave majorant of ``F_n`` on ``[0, T_(n)]``; nonincreasing."""
    beta = _beta(sample, beta)
    f = breslow_F(sample, beta)
    end = float(sample.time.max())
    if end <= 0:
        raise EstimationError("all follow-up times are zero")
    hull = lcm_of_function(f, (0.0, end))
    return MonotoneEstimate(
        hull.slope, "grenander", "density", NONINCREASING, beta, end, hull.hull.left_slopes, hull.hull.diagram
    )


def _sup_extremizer(candidates, objective, minimize):
    best = objective.min() if minimize else objective.max()
    return float(candidates[np.flatnonzero(objective == best)[-1]])


def inverse_process(
    sample: SurvivalSample, beta, kind: str, shape: str, a: float
) -> InverseProcessValue:
    """Inverse process of an estimator at level ``a > 0``.

    ``kind`` is one of ``"npmle_hazard"``, ``"grenander_hazard"``,
    ``"grenander_density"``. For nondecreasing hazards the location is the
    largest minimizer of

    * ``V_n(x) - a (W_n(x) - W_n(T_(1)))`` over ``[T_(1), T_(n)]`` (npmle),
    * ``Lambda_n(x) - a x`` over ``[0, T_(n)]`` (grenander);

    for nonincreasing hazards it is the largest maximizer of
    ``Y_n(x) - a W_n(x)`` or ``Lambda_n(x) - a x`` over ``[0, T_(n)]``, and for
    the density the largest maximizer of ``F_n(x) - a x``.

    The processes jump only at follow-up times and are linear in between, so
    the search runs over ``{0} U {follow-up times}`` with each process taken at
    its semicontinuous value (left limits when minimizing over upward jumps).
    """
    if not a > 0:
        raise ValueError(f"level a must be positive, got {a!r}")
    shape = _shape(shape)
    beta = _beta(sample, beta)
    proc = baseline_processes(sample, beta)
    u = np.unique(sample.time)
    with_zero = np.concatenate([[0.0], u]) if u[0] > 0 else u
    if kind == "npmle_hazard":
        if shape == NONDECREASING:
            obj = proc.v_n(u) - a * (proc.w_n(u) - proc.w_n(u[0]))
            return InverseProcessValue(a, _sup_extremizer(u, obj, True))
        obj = proc.y_n(with_zero) - a * proc.w_n(with_zero)
        return InverseProcessValue(a, _sup_extremizer(with_zero, obj, False))
    if kind == "grenander_hazard":
        f = proc.lambda_n
    elif kind == "grenander_density":
        if shape != NONINCREASING:
            raise ValueError("the density estimator is nonincreasing only")
        f = proc.f_n
    else:
        raise ValueError(f"unknown estimator kind {kind!r}")
    lo = np.minimum(f.left_limit(with_zero), f(with_zero))
    lo[0] = f(with_zero[0])
    if shape == NONDECREASING:
        return InverseProcessValue(a, _sup_extremizer(with_zero, lo - a * with_zero, True))
    hi = np.maximum(f.left_limit(with_zero), f(with_zero))
    return InverseProcessValue(a, _sup_extremizer(with_zero, hi - a * with_zero, False))


def switching_events(est: MonotoneEstimate, inv: InverseProcessValue, x: float):
    """The two events linked by the switching relation at ``(a, x)``.

    Returns ``(estimate_event, inverse_event)``:

    * nondecreasing: ``(est(x) <= a, U(a) >= x)``
    * nonincreasing: ``(est(x) > a, U(a) > x)``

    They coincide for every ``x`` in ``(0, T_(n))`` that is not a follow-up
    time.
    """
    value = est(x)
    if est.shape == NONDECREASING:
        return bool(value <= inv.a), bool(inv.u >= x)
    return bool(value > inv.a), bool(inv.u > x)


def pseudo_loglikelihood(sample: SurvivalSample, beta, hazard_levels) -> float:
    """Pseudo loglikelihood of a nondecreasing step hazard for fixed ``beta``.

    ``hazard_levels[i]`` is the hazard on ``[u_i, u_{i+1})`` for the distinct
    follow-up times ``u_1 < ... < u_K``; the term at ``u_K`` is dropped because
    the hazard there is unconstrained. Evaluates

    ``sum_{i<K} [d_i log h_i - h_i (u_{i+1} - u_i) sum_l {T_l >= u_{i+1}} exp(beta'Z_l)]``

    with ``0 log 0 = 0``.
    """
    beta = _beta(sample, beta)
    dt = DistinctTimes(sample, beta)
    h = np.asarray(hazard_levels, dtype=float)
    if h.size != dt.u.size - 1:
        raise ValueError(f"expected {dt.u.size - 1} hazard levels, got {h.size}")
    d = dt.d[:-1]
    exposure = np.diff(dt.u) * dt.risk[1:] * dt.n
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(d > 0, d * np.log(h), 0.0)
    return float(np.sum(logs - h * exposure))


def estimate(
    sample: SurvivalSample,
    method: str = "npmle",
    target: str = "hazard",
    shape: str = NONDECREASING,
    beta=None,
    **fit_options,
) -> MonotoneEstimate:
    """Fit ``beta`` by maximum partial likelihood (unless given) and estimate.

    With no covariates ``beta`` is empty and the estimators reduce to their
    classical random-censorship versions.
    """
    if beta is None:
        beta = fit_beta(sample, **fit_options).beta_hat if sample.p else np.zeros(0)
    shape = _shape(shape)
    if target == "hazard":
        if method == "npmle":
            return npmle_hazard(sample, beta, shape)
        if method == "grenander":
            return grenander_hazard(sample, beta, shape)
        raise ValueError(f"unknown method {method!r}")
    if target == "density":
        if method != "grenander":
            raise ValueError("only the grenander estimator is available for a density")
        if shape != NONINCREASING:
            raise ValueError("the density estimator is for a nonincreasing density")
        return grenander_density(sample, beta)
    raise ValueError(f"unknown target {target!r}")
