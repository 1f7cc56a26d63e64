"""Greatest convex minorants and least concave majorants.

The hull of a cumulative sum diagram ``P_0, ..., P_m`` is found with one
monotone-stack pass. Its left-hand slopes at ``P_1, ..., P_m`` solve the
associated weighted isotonic problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .breslow import PiecewiseLinear
from .core import LEFT, UNDEFINED, StepFunction

__all__ = [
    "CumSumDiagram",
    "HullResult",
    "FunctionHull",
    "gcm",
    "lcm",
    "gcm_of_function",
    "lcm_of_function",
]


@dataclass(frozen=True, eq=False)
class CumSumDiagram:
    """Planar points with strictly increasing abscissae.

    The first point plays the role of the origin ``P_0``; slopes are reported
    for every later point.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise ValueError("x and y must have the same length")
        if x.size < 1:
            raise ValueError("a diagram needs at least one point")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("diagram coordinates must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("diagram abscissae must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_points(cls, points, origin=(0.0, 0.0)):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if origin is not None:
            pts = np.vstack([np.asarray(origin, dtype=float), pts])
        return cls(pts[:, 0], pts[:, 1])

    def __len__(self):
        return self.x.size


@dataclass(frozen=True, eq=False)
class HullResult:
    """Hull vertices (indices into the diagram) and left slopes."""

    diagram: CumSumDiagram
    vertex_index: np.ndarray
    left_slopes: np.ndarray
    kind: str

    @property
    def vertices(self) -> np.ndarray:
        return np.column_stack([self.diagram.x, self.diagram.y])[self.vertex_index]

    def values_at_points(self) -> np.ndarray:
        """Hull ordinate above/below every diagram abscissa."""
        v = self.vertex_index
        return np.interp(self.diagram.x, self.diagram.x[v], self.diagram.y[v])


def _lower_hull(x, y):
    # collinear points stay on the hull: pop only on a strict concave turn
    x, y = x.tolist(), y.tolist()
    stack = [0]
    for k in range(1, len(x)):
        while len(stack) >= 2:
            i, j = stack[-2], stack[-1]
            if (y[j] - y[i]) * (x[k] - x[j]) > (y[k] - y[j]) * (x[j] - x[i]):
                stack.pop()
            else:
                break
        stack.append(k)
    return np.array(stack, dtype=int)


def _slopes_from_vertices(x, y, v):
    seg = (y[v[1:]] - y[v[:-1]]) / (x[v[1:]] - x[v[:-1]])
    return np.repeat(seg, np.diff(v))


def block_slopes(hull: HullResult, dx, dy) -> np.ndarray:
    """Left slopes of ``hull`` recomputed from the diagram increments.

    ``dx[i]`` and ``dy[i]`` are the increments from point ``i`` to point
    ``i + 1``. Summing them block by block avoids the cancellation of
    differencing long cumulative sums over short blocks.
    """
    dx, dy = np.asarray(dx, float), np.asarray(dy, float)
    v = hull.vertex_index
    if v.size < 2:
        return np.zeros(0)
    seg = np.add.reduceat(dy, v[:-1]) / np.add.reduceat(dx, v[:-1])
    return np.repeat(seg, np.diff(v))


def gcm(diagram: CumSumDiagram) -> HullResult:
    """Greatest convex minorant of ``diagram``.

    ``left_slopes[i - 1]`` is the slope of the hull segment covering
    ``(x_{i-1}, x_i]``; the slopes are nondecreasing.
    """
    v = _lower_hull(diagram.x, diagram.y)
    return HullResult(diagram, v, _slopes_from_vertices(diagram.x, diagram.y, v), "gcm")


def lcm(diagram: CumSumDiagram) -> HullResult:
    """Least concave majorant of ``diagram`` (nonincreasing left slopes)."""
    v = _lower_hull(diagram.x, -diagram.y)
    return HullResult(diagram, v, _slopes_from_vertices(diagram.x, diagram.y, v), "lcm")


@dataclass(frozen=True, eq=False)
class FunctionHull:
    """Convex minorant or concave majorant of a function graph on ``[a, b]``."""

    hull: HullResult
    minorant: PiecewiseLinear
    slope: StepFunction


def _function_diagram(f: StepFunction, a: float, b: float, pick):
    if not b > a:
        raise ValueError(f"empty domain [{a}, {b}]")
    bp = f.breakpoints
    inner = bp[(bp > a) & (bp < b)]
    xs = np.concatenate([[a], inner, [b]])
    # one-sided values at each point of (a, b]; at b the graph holds f(b-) and f(b)
    lo = np.atleast_1d(f.left_limit(xs[1:]))
    hi = np.append(np.atleast_1d(f.right_limit(inner)), f(b))
    ys = np.concatenate([[f(a)], pick(lo, hi)])
    return CumSumDiagram(xs, ys)


def _function_hull(f, a, b, kind):
    if kind == "gcm":
        diagram = _function_diagram(f, a, b, np.minimum)
        h = gcm(diagram)
        monotone = "nondecreasing"
    else:
        diagram = _function_diagram(f, a, b, np.maximum)
        h = lcm(diagram)
        monotone = "nonincreasing"
    vx = diagram.x[h.vertex_index]
    vy = diagram.y[h.vertex_index]
    seg = np.diff(vy) / np.diff(vx)
    slope = StepFunction(vx, seg, LEFT, seg[0], UNDEFINED, monotone)
    return FunctionHull(h, PiecewiseLinear(vx, vy), slope)


def gcm_of_function(f: StepFunction, domain) -> FunctionHull:
    """Greatest convex minorant of the graph of ``f`` over ``domain = (a, b)``.

    The graph is anchored at ``(a, f(a))``. At every breakpoint inside
    ``(a, b]`` the lower of the two one-sided values is used, so for a
    right-continuous nondecreasing ``f`` the minorant passes below the
    lower corners ``(b_i, f(b_i-))`` and never exceeds ``f``. The returned
    slope function is left-continuous (left derivative of the minorant).
    """
    a, b = map(float, domain)
    return _function_hull(f, a, b, "gcm")


def lcm_of_function(f: StepFunction, domain) -> FunctionHull:
    """Least concave majorant of the graph of ``f`` over ``domain = (a, b)``.

    Mirror of :func:`gcm_of_function`, using the upper one-sided value at
    each breakpoint; for a right-continuous nondecreasing ``f`` these are
    the points ``(b_i, f(b_i))``.
    """
    a, b = map(float, domain)
    return _function_hull(f, a, b, "lcm")
