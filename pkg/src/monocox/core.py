"""Right-censored survival data and step functions.

Two value types live here. :class:`SurvivalSample` stores the observed
triplets ``(time, status, z)`` and :class:`StepFunction` represents every
piecewise-constant object the estimators produce (cumulative hazards,
counting processes, monotone hazard and density estimates).
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .exceptions import DomainError, ParseError

__all__ = [
    "SurvivalSample",
    "StepFunction",
    "load_csv",
    "write_csv",
    "sort_view",
    "evaluate",
]

RIGHT = "right"
LEFT = "left"
LAST = "last"
UNDEFINED = "undefined"


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SurvivalSample:
    """Observed follow-up times, event indicators and covariates.

    Parameters
    ----------
    time : array-like of shape (n,)
        Follow-up times ``T_i = min(X_i, C_i)``; finite and nonnegative.
    status : array-like of shape (n,)
        Event indicators ``Delta_i``; 1 for an observed event, 0 for censored.
    z : array-like of shape (n, p), optional
        Time-invariant covariates. ``p = 0`` is allowed.

    Notes
    -----
    Arrays are copied and made read-only, so a sample can be shared freely.
    Exact ties in ``time`` are allowed; :attr:`n_ties` counts the records
    whose time repeats an earlier record.
    """

    time: np.ndarray
    status: np.ndarray
    z: np.ndarray = None
    n_ties: int = field(init=False)

    def __post_init__(self):
        time = np.asarray(self.time, dtype=float).reshape(-1)
        n = time.shape[0]
        status = np.asarray(self.status).reshape(-1)
        if status.shape[0] != n:
            raise ValueError("time and status must have the same length")
        if not np.all((status == 0) | (status == 1)):
            raise ValueError("status values must be 0 or 1")
        if self.z is None:
            z = np.zeros((n, 0))
        else:
            z = np.asarray(self.z, dtype=float)
            if z.ndim == 1:
                z = z.reshape(-1, 1)
            if z.ndim != 2 or z.shape[0] != n:
                raise ValueError("z must have shape (n, p)")
        if not np.all(np.isfinite(time)):
            raise ValueError("times must be finite")
        if np.any(time < 0):
            raise ValueError("times must be nonnegative")
        if not np.all(np.isfinite(z)):
            raise ValueError("covariates must be finite")
        object.__setattr__(self, "time", _frozen(time, float))
        object.__setattr__(self, "status", _frozen(status, np.int64))
        object.__setattr__(self, "z", _frozen(z, float))
        object.__setattr__(self, "n_ties", int(n - np.unique(time).size))

    @property
    def n(self) -> int:
        return int(self.time.shape[0])

    @property
    def p(self) -> int:
        return int(self.z.shape[1])

    @property
    def n_events(self) -> int:
        return int(self.status.sum())

    def __len__(self):
        return self.n

    def sorted(self) -> "SurvivalSample":
        """Return a copy with records reordered by :func:`sort_view`."""
        perm = sort_view(self)
        return SurvivalSample(self.time[perm], self.status[perm], self.z[perm])

    def to_dict(self) -> dict:
        return {
            "time": self.time.tolist(),
            "status": self.status.tolist(),
            "z": self.z.tolist(),
        }


def sort_view(sample: SurvivalSample) -> np.ndarray:
    """Permutation that orders the sample by follow-up time.

    Ties are broken by placing uncensored records before censored ones and
    then by original position, so the result is deterministic.

    Returns
    -------
    numpy.ndarray of int
        Zero-based indices ``perm`` with ``sample.time[perm]`` nondecreasing.
    """
    idx = np.arange(sample.n)
    # lexsort uses the last key as the primary key
    return np.lexsort((idx, -sample.status, sample.time))


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Piecewise-constant function with an explicit continuity convention.

    Let ``b_1 < ... < b_m`` be the breakpoints and ``v_1, v_2, ...`` the
    values. Value ``v_i`` is the level of the interval that starts at
    ``b_i``:

    * ``side="right"``: ``f = left_extension`` on ``(-inf, b_1)`` and
      ``f = v_i`` on ``[b_i, b_{i+1})``.
    * ``side="left"``: ``f = left_extension`` on ``(-inf, b_1]`` and
      ``f = v_i`` on ``(b_i, b_{i+1}]``.

    With ``right_extension="last"`` there are ``m`` values and ``v_m``
    extends to infinity. With ``right_extension="undefined"`` there are
    ``m - 1`` values and evaluation past ``b_m`` (``x >= b_m`` on the right
    side, ``x > b_m`` on the left side) raises :class:`DomainError`.

    Parameters
    ----------
    monotone : {None, "nondecreasing", "nonincreasing"}
        When set, the values (including ``left_extension``) are checked to be
        sorted accordingly.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    side: str = RIGHT
    left_extension: float = 0.0
    right_extension: str = LAST
    monotone: str | None = None

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if self.side not in (RIGHT, LEFT):
            raise ValueError(f"side must be 'right' or 'left', got {self.side!r}")
        if self.right_extension not in (LAST, UNDEFINED):
            raise ValueError("right_extension must be 'last' or 'undefined'")
        if b.size and not np.all(np.diff(b) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        expected = b.size if self.right_extension == LAST else max(b.size - 1, 0)
        if v.size != expected:
            raise ValueError(
                f"expected {expected} values for {b.size} breakpoints "
                f"with right_extension={self.right_extension!r}, got {v.size}"
            )
        if self.monotone is not None:
            seq = np.concatenate([[self.left_extension], v])
            d = np.diff(seq)
            if self.monotone == "nondecreasing":
                ok = np.all(d >= 0)
            elif self.monotone == "nonincreasing":
                ok = np.all(d <= 0)
            else:
                raise ValueError(f"unknown monotonicity flag {self.monotone!r}")
            if not ok:
                raise ValueError(f"values are not {self.monotone}")
        object.__setattr__(self, "breakpoints", _frozen(b, float))
        object.__setattr__(self, "values", _frozen(v, float))
        object.__setattr__(self, "left_extension", float(self.left_extension))

    @property
    def domain_end(self) -> float:
        """Right end of the domain (``inf`` when the last value extends)."""
        if self.right_extension == LAST or self.breakpoints.size == 0:
            return math.inf
        return float(self.breakpoints[-1])

    def __call__(self, x):
        """Evaluate at a scalar or array ``x``."""
        xa = np.asarray(x, dtype=float)
        b = self.breakpoints
        how = "right" if self.side == RIGHT else "left"
        idx = np.searchsorted(b, xa, side=how) - 1
        if self.right_extension == UNDEFINED and b.size:
            beyond = idx >= b.size - 1
            if np.any(beyond):
                bad = np.atleast_1d(xa)[np.atleast_1d(beyond)][0]
                raise DomainError(
                    f"x={bad!r} is beyond the last breakpoint {b[-1]!r} "
                    "and the right extension is undefined"
                )
        table = np.concatenate([[self.left_extension], self.values])
        out = table[idx + 1]
        if out.ndim == 0:
            return float(out)
        return out

    def left_limit(self, x):
        """Limit ``f(x-)`` from the left."""
        xa = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, xa, side="left") - 1
        table = np.concatenate([[self.left_extension], self.values])
        if self.right_extension == UNDEFINED and self.breakpoints.size:
            if np.any(idx >= self.breakpoints.size - 1):
                raise DomainError("left limit requested beyond the domain")
        out = table[idx + 1]
        return float(out) if out.ndim == 0 else out

    def right_limit(self, x):
        """Limit ``f(x+)`` from the right."""
        xa = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, xa, side="right") - 1
        table = np.concatenate([[self.left_extension], self.values])
        if self.right_extension == UNDEFINED and self.breakpoints.size:
            if np.any(idx >= self.breakpoints.size - 1):
                raise DomainError("right limit requested beyond the domain")
        out = table[idx + 1]
        return float(out) if out.ndim == 0 else out

    def intervals(self, extend_last: bool = False):
        """Yield ``(start, end, value)`` rows, ``end`` may be ``inf``.

        A leading row covers ``[0, b_1)`` when the first breakpoint is
        positive. ``extend_last`` clamps an undefined right extension to the
        last available value.
        """
        b = self.breakpoints
        rows = []
        if b.size and b[0] > 0:
            rows.append((0.0, float(b[0]), self.left_extension))
        for i, v in enumerate(self.values):
            end = float(b[i + 1]) if i + 1 < b.size else math.inf
            rows.append((float(b[i]), end, float(v)))
        if self.right_extension == UNDEFINED and extend_last and b.size:
            last = float(self.values[-1]) if self.values.size else self.left_extension
            rows.append((float(b[-1]), math.inf, last))
        return rows

    def with_last_extension(self) -> "StepFunction":
        """Copy whose undefined right extension is clamped to the last value."""
        if self.right_extension == LAST:
            return self
        last = self.values[-1] if self.values.size else self.left_extension
        return StepFunction(
            self.breakpoints,
            np.append(self.values, last),
            self.side,
            self.left_extension,
            LAST,
            self.monotone,
        )

    def to_dict(self) -> dict:
        return {
            "breakpoints": self.breakpoints.tolist(),
            "values": self.values.tolist(),
            "side": self.side,
            "left_extension": self.left_extension,
            "right_extension": self.right_extension,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping) -> "StepFunction":
        return cls(
            d["breakpoints"],
            d["values"],
            d.get("side", RIGHT),
            d.get("left_extension", 0.0),
            d.get("right_extension", LAST),
        )

    @classmethod
    def from_json(cls, s: str) -> "StepFunction":
        return cls.from_dict(json.loads(s))


def evaluate(f: StepFunction, x):
    """Evaluate ``f`` at ``x`` honouring its continuity side."""
    return f(x)


_Z_COLUMN = re.compile(r"^z(\d+)$")


def _resolve_schema(header: Sequence[str], schema: Mapping | None):
    schema = dict(schema or {})
    time_col = schema.get("time", "time")
    status_col = schema.get("status", "status")
    z_cols = schema.get("z")
    if z_cols is None:
        found = [(int(m.group(1)), h) for h in header if (m := _Z_COLUMN.match(h))]
        z_cols = [h for _, h in sorted(found)]
    for col in [time_col, status_col, *z_cols]:
        if col not in header:
            raise ParseError("missing column", column=col)
    return time_col, status_col, list(z_cols)


def _cell(value: str, row: int, column: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"non-numeric value {value!r}", row=row, column=column) from None
    if not math.isfinite(out):
        raise ParseError(f"non-finite value {value!r}", row=row, column=column)
    return out


def load_csv(path, schema: Mapping | None = None) -> SurvivalSample:
    """Read a comma-separated file with a header row.

    Parameters
    ----------
    path : str or path-like
        File to read (UTF-8).
    schema : mapping, optional
        Column names for ``"time"``, ``"status"`` and a list under ``"z"``.
        By default the columns ``time``, ``status`` and every ``z<k>`` column
        (ordered by ``k``) are used.

    Raises
    ------
    ParseError
        Missing column, non-numeric cell, negative time or a status outside
        ``{0, 1}``. The message names the (1-based, header excluded) row and
        the column.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file, header row required") from None
        time_col, status_col, z_cols = _resolve_schema(header, schema)
        pos = {h: i for i, h in enumerate(header)}
        times, status, zs = [], [], []
        for row_no, record in enumerate(reader, start=1):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(record)}", row=row_no
                )
            t = _cell(record[pos[time_col]], row_no, time_col)
            if t < 0:
                raise ParseError("negative time", row=row_no, column=time_col)
            s = _cell(record[pos[status_col]], row_no, status_col)
            if s not in (0.0, 1.0):
                raise ParseError("status must be 0 or 1", row=row_no, column=status_col)
            times.append(t)
            status.append(int(s))
            zs.append([_cell(record[pos[c]], row_no, c) for c in z_cols])
    z = np.array(zs, dtype=float).reshape(len(times), len(z_cols))
    return SurvivalSample(np.array(times), np.array(status, dtype=int), z)


def write_csv(sample: SurvivalSample, path) -> None:
    """Write ``sample`` in the format read by :func:`load_csv`.

    Floats are written with ``repr`` so a round trip is exact.
    """
    header = ["time", "status"] + [f"z{k + 1}" for k in range(sample.p)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, s, z in zip(sample.time, sample.status, sample.z):
            w.writerow([repr(float(t)), int(s), *(repr(float(v)) for v in z)])
