"""Maximum partial likelihood estimation of the Cox regression coefficients.

Ties are handled with the Breslow convention: every event at time ``t``
shares the risk set ``{j : T_j >= t}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .core import SurvivalSample
from .exceptions import EstimationError, NoEventsError, NoFiniteMaximizerError

__all__ = [
    "CoxFit",
    "log_partial_likelihood",
    "partial_likelihood_derivatives",
    "fit_beta",
]


@dataclass(frozen=True)
class CoxFit:
    """Result of :func:`fit_beta`.

    ``flat`` is set when the partial likelihood does not depend on some
    direction of ``beta`` (for example a constant covariate column); the
    fit then keeps the initial value along that direction.
    """

    beta_hat: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    gradient_norm: float
    flat: bool = False

    def to_dict(self) -> dict:
        return {
            "beta": [float(b) for b in self.beta_hat],
            "loglik": float(self.loglik),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class _RiskSets:
    """Sorted layout shared by the likelihood, gradient and Hessian."""

    def __init__(self, sample: SurvivalSample):
        order = np.argsort(sample.time, kind="stable")
        t = sample.time[order]
        self.z = sample.z[order]
        self.status = sample.status[order].astype(bool)
        # first index of each tie group: the risk set of record i is the
        # suffix starting there
        self.start = np.searchsorted(t, t, side="left")
        self.n, self.p = self.z.shape

    def eta(self, beta):
        return self.z @ beta


def _check_beta(sample, beta):
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != sample.p:
        raise ValueError(f"beta has length {beta.shape[0]}, expected p={sample.p}")
    return beta


def _suffix_logsumexp(eta):
    return np.logaddexp.accumulate(eta[::-1])[::-1]


def log_partial_likelihood(sample: SurvivalSample, beta) -> float:
    """Breslow log partial likelihood at ``beta``.

    ``sum_{i: Delta_i = 1} [beta'Z_i - log sum_{j: T_j >= T_i} exp(beta'Z_j)]``,
    evaluated with a suffix log-sum-exp so large linear predictors do not
    overflow. Returns 0 when there are no events.
    """
    beta = _check_beta(sample, beta)
    if sample.n == 0 or sample.n_events == 0:
        return 0.0
    rs = _RiskSets(sample)
    eta = rs.eta(beta)
    lse = _suffix_logsumexp(eta)[rs.start]
    return float(np.sum((eta - lse)[rs.status]))


def _derivatives(rs: _RiskSets, beta):
    eta = rs.eta(beta)
    lse = _suffix_logsumexp(eta)[rs.start]
    loglik = float(np.sum((eta - lse)[rs.status]))
    w = np.exp(eta - eta.max())
    s0 = np.cumsum(w[::-1])[::-1][rs.start]
    s1 = np.cumsum((w[:, None] * rs.z)[::-1], axis=0)[::-1][rs.start]
    zz = rs.z[:, :, None] * rs.z[:, None, :]
    s2 = np.cumsum((w[:, None, None] * zz)[::-1], axis=0)[::-1][rs.start]
    ev = rs.status
    mean = s1[ev] / s0[ev, None]
    grad = np.sum(rs.z[ev] - mean, axis=0)
    second = s2[ev] / s0[ev, None, None]
    hess = -np.sum(second - mean[:, :, None] * mean[:, None, :], axis=0)
    return loglik, grad, hess


def partial_likelihood_derivatives(sample: SurvivalSample, beta):
    """Return ``(loglik, gradient, hessian)`` of the log partial likelihood."""
    beta = _check_beta(sample, beta)
    if sample.n_events == 0:
        raise NoEventsError()
    return _derivatives(_RiskSets(sample), beta)


def _recession_direction(rs: _RiskSets):
    """Direction along which the log partial likelihood strictly increases forever.

    Such a direction ``d`` exists iff ``d'Z_i >= d'Z_j`` for every event ``i``
    and every ``j`` in its risk set, with strict inequality somewhere. For
    ``p = 1`` this is checked with running extrema; otherwise a small linear
    program is solved. Returns ``None`` when the maximizer is finite.
    """
    ev = np.flatnonzero(rs.status)
    if rs.p == 1:
        z = rs.z[:, 0]
        suf_max = np.maximum.accumulate(z[::-1])[::-1][rs.start]
        suf_min = np.minimum.accumulate(z[::-1])[::-1][rs.start]
        for d, ok, strict in (
            (1.0, z[ev] >= suf_max[ev], z[ev] > suf_min[ev]),
            (-1.0, z[ev] <= suf_min[ev], z[ev] < suf_max[ev]),
        ):
            if np.all(ok) and np.any(strict):
                return np.array([d])
        return None
    rows = [rs.z[i] - rs.z[rs.start[i]:] for i in ev]
    a = np.vstack(rows)
    a = a[np.any(a != 0, axis=1)]
    if a.shape[0] == 0:
        return None
    p = rs.p
    # maximize total slack sum(A d) subject to A d >= 0, |d| <= 1
    res = linprog(
        -a.sum(axis=0),
        A_ub=-a,
        b_ub=np.zeros(a.shape[0]),
        bounds=[(-1, 1)] * p,
        method="highs",
    )
    if res.status == 0 and -res.fun > 1e-9 * max(1.0, np.abs(a).max()):
        return res.x
    return None


def fit_beta(
    sample: SurvivalSample,
    tolerance: float = 1e-8,
    max_iterations: int = 50,
    initial_beta=None,
    divergence_bound: float = 50.0,
) -> CoxFit:
    """Maximize the Breslow partial likelihood by damped Newton iterations.

    Parameters
    ----------
    sample : SurvivalSample
        Data with ``p >= 1`` covariates and at least one event.
    tolerance : float
        Convergence threshold on the infinity norm of the gradient.
    max_iterations : int
        Newton step budget.
    initial_beta : array-like, optional
        Starting point, zeros by default.
    divergence_bound : float
        Iterates with Euclidean norm above this bound are taken as evidence
        of a monotone likelihood.

    Returns
    -------
    CoxFit

    Raises
    ------
    NoEventsError
        All observations are censored.
    NoFiniteMaximizerError
        The partial likelihood has no finite maximizer.
    EstimationError
        The Hessian stays singular after regularization or the iteration
        budget is exhausted.
    """
    if sample.p < 1:
        raise ValueError("fit_beta needs at least one covariate")
    if sample.n_events == 0:
        raise NoEventsError()
    rs = _RiskSets(sample)
    beta = np.zeros(sample.p) if initial_beta is None else _check_beta(sample, initial_beta)
    beta = beta.copy()

    if sample.p == 1:
        _raise_if_monotone(rs)

    loglik, grad, hess = _derivatives(rs, beta)
    scale = max(1.0, float(np.abs(hess).max()))
    info0 = max(1.0, float(np.linalg.eigvalsh(-hess).max()))
    flat_dirs = np.abs(np.diag(hess)) <= 1e-12 * scale
    iterations = 0
    while True:
        gnorm = float(np.abs(grad).max())
        if gnorm <= tolerance:
            break
        if iterations >= max_iterations:
            _raise_if_monotone(rs)
            raise EstimationError(
                f"Newton iterations did not converge in {max_iterations} steps "
                f"(gradient norm {gnorm:.3g})"
            )
        step = _newton_step(hess, grad)
        t = 1.0
        # near the optimum the gain drops below rounding noise in loglik
        slack = 1e-12 * max(1.0, abs(loglik))
        while True:
            cand = beta + t * step
            cand_ll, cand_grad, cand_hess = _derivatives(rs, cand)
            if cand_ll >= loglik - slack or t < 1e-10:
                break
            t *= 0.5
        beta, loglik, grad, hess = cand, cand_ll, cand_grad, cand_hess
        iterations += 1
        if np.linalg.norm(beta) > divergence_bound:
            raise NoFiniteMaximizerError(
                f"no finite maximizer: |beta| exceeded {divergence_bound} "
                f"with gradient norm {float(np.abs(grad).max()):.3g}"
            )
    if sample.p > 1 and np.linalg.eigvalsh(-hess).min() <= 1e-6 * info0:
        # near-singular information at the solution: rule out a direction
        # of recession before reporting a finite maximizer
        _raise_if_monotone(rs)
    return CoxFit(
        beta_hat=beta,
        loglik=log_partial_likelihood(sample, beta),
        iterations=iterations,
        converged=True,
        gradient_norm=float(np.abs(grad).max()),
        flat=bool(np.any(flat_dirs)),
    )


def _raise_if_monotone(rs):
    direction = _recession_direction(rs)
    if direction is not None:
        raise NoFiniteMaximizerError(
            "no finite maximizer: the partial likelihood is monotone along "
            f"direction {np.round(direction, 6).tolist()}"
        )


def _newton_step(hess, grad):
    # ascent step solves (-H) s = g; -H is positive semidefinite
    info = -hess
    try:
        c = np.linalg.cond(info)
    except np.linalg.LinAlgError:
        c = np.inf
    if np.isfinite(c) and c < 1e12:
        return np.linalg.solve(info, grad)
    ridge = 1e-8 * max(1.0, float(np.trace(info)))
    try:
        return np.linalg.solve(info + ridge * np.eye(info.shape[0]), grad)
    except np.linalg.LinAlgError:
        raise EstimationError("singular Hessian, regularized retry failed") from None
