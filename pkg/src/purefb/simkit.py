"""Fixed-step closed-loop integration and trajectory recording.

The augmented state (plant state, adaptive gains, squared-error integrals)
is advanced by classical fourth-order Runge-Kutta with a constant step, so
a run is a pure function of its configuration: identical settings produce
bit-identical trajectories.  Time-varying inputs are sampled exactly at the
stage times t, t + h/2, t + h.

Divergence is handled as data, not as a crash: a non-finite stage
evaluation or a component exceeding the abort threshold ends the run early
with the partial trajectory and a failure flag, which the Monte-Carlo
harness aggregates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

__all__ = [
    "DivergenceError",
    "StatePoint",
    "Trajectory",
    "integrate",
    "measure_order",
    "rk4_step",
]

ABORT_LIMIT = 1e9


class StatePoint(NamedTuple):
    """Snapshot of the augmented closed-loop state at one instant."""

    t: float
    y: tuple


class DivergenceError(RuntimeError):
    """An integration step produced a non-finite evaluation."""

    def __init__(self, t, y, detail="non-finite stage evaluation"):
        self.point = StatePoint(float(t), tuple(float(v) for v in y))
        super().__init__("%s at t=%.6g" % (detail, t))


def rk4_step(rhs, y, t, h):
    """One classical Runge-Kutta step from t to t+h.

    y is a sequence of floats; returns a list.  Any arithmetic failure or
    non-finite result inside the four stage evaluations raises
    DivergenceError carrying the pre-step state.
    """
    try:
        k1 = rhs(t, y)
        h2 = 0.5 * h
        t2 = t + h2
        y2 = [yi + h2 * ki for yi, ki in zip(y, k1)]
        k2 = rhs(t2, y2)
        y3 = [yi + h2 * ki for yi, ki in zip(y, k2)]
        k3 = rhs(t2, y3)
        y4 = [yi + h * ki for yi, ki in zip(y, k3)]
        k4 = rhs(t + h, y4)
        out = [
            yi + h * (a + 2.0 * b + 2.0 * c + d) / 6.0
            for yi, a, b, c, d in zip(y, k1, k2, k3, k4)
        ]
    except (ArithmeticError, ValueError) as exc:
        raise DivergenceError(t, y, detail=str(exc) or "arithmetic failure") from exc
    if not math.isfinite(sum(out)):
        raise DivergenceError(t, y)
    return out


@dataclass
class Trajectory:
    """Decimated record of one closed-loop run.

    data holds one row per retained sample; columns[0] is always "t".
    CSV serialization uses shortest round-trip float formatting, so the
    file bytes are as deterministic as the run itself.
    """

    sid: str
    columns: tuple
    data: np.ndarray
    h: float
    seed: Optional[int] = None
    diverged: bool = False
    failure: Optional[StatePoint] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != len(self.columns):
            raise ValueError("data shape does not match column names")
        t = self.data[:, 0]
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("sample times must be strictly increasing")

    def col(self, name):
        """Column by name as a 1-D array."""
        try:
            j = self.columns.index(name)
        except ValueError:
            raise KeyError("no column %r; have %s" % (name, list(self.columns)))
        return self.data[:, j]

    @property
    def t(self):
        return self.data[:, 0]

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    def summary(self):
        """Terminal values, per-column extrema and flags as plain data."""
        out = {
            "scenario": self.sid,
            "h": self.h,
            "seed": self.seed,
            "samples": int(self.data.shape[0]),
            "diverged": self.diverged,
            "t_final": float(self.data[-1, 0]),
            "terminal": {},
            "max_abs": {},
        }
        for j, name in enumerate(self.columns):
            if name == "t":
                continue
            colv = self.data[:, j]
            out["terminal"][name] = float(colv[-1])
            out["max_abs"][name] = float(np.max(np.abs(colv)))
        if self.failure is not None:
            out["failure_t"] = self.failure.t
        out.update(self.meta)
        return out


def read_csv(path, sid="", h=0.0, seed=None):
    """Load a trajectory table written by Trajectory.write_csv."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header:
            raise ValueError("empty trajectory file %s" % path)
        columns = tuple(header.split(","))
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return Trajectory(sid=sid, columns=columns, data=data, h=h, seed=seed)


def integrate(
    rhs,
    y0,
    T,
    h,
    decimation=1,
    recorder=None,
    sid="",
    seed=None,
    abort_limit=ABORT_LIMIT,
    meta=None,
):
    """Integrate dy/dt = rhs(t, y) on [0, T] and record every decimation-th step.

    recorder, when given, is a (column_names, build) pair; build maps
    (t, y) to the full sample row after "t" (state components interleaved
    with derived values such as the control input and gain shapes).  By
    default the raw state is recorded under names y1..ym.  The step count
    T/h must be an integer and divisible by decimation, giving
    floor(T/h/decimation) + 1 retained samples.  A non-finite step or a
    component beyond abort_limit stops the run with the partial trajectory
    flagged instead of raising.
    """
    if not T > 0.0:
        raise ValueError("horizon T must be positive")
    if not h > 0.0:
        raise ValueError("step h must be positive")
    steps = int(round(T / h))
    if steps < 1 or abs(steps * h - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError("T must be an integer multiple of h")
    decimation = int(decimation)
    if decimation < 1 or steps % decimation:
        raise ValueError(
            "decimation must divide the %d integration steps, got %d"
            % (steps, decimation)
        )
    y = [float(v) for v in y0]
    if recorder is None:
        names = tuple("y%d" % (i + 1) for i in range(len(y)))
        build = lambda t, yv: yv
    else:
        names, build = recorder
    columns = ("t",) + tuple(names)
    rows = []

    def record(t, yv):
        rows.append([t] + [float(v) for v in build(t, yv)])

    diverged = False
    failure = None
    record(0.0, y)
    for s in range(steps):
        t = s * h
        try:
            y = rk4_step(rhs, y, t, h)
        except DivergenceError as exc:
            diverged = True
            failure = exc.point
            break
        if max(abs(v) for v in y) > abort_limit:
            diverged = True
            failure = StatePoint(t + h, tuple(y))
            break
        if (s + 1) % decimation == 0:
            record((s + 1) * h, y)
    return Trajectory(
        sid=sid,
        columns=columns,
        data=np.array(rows, dtype=float),
        h=h,
        seed=seed,
        diverged=diverged,
        failure=failure,
        meta=dict(meta or {}),
    )


def measure_order(rhs, y0, T, h):
    """Self-convergence order of the integrator on a smooth problem.

    Runs at steps 2h, h, h/2 and compares terminal states: for a 4th-order
    method the coarse/fine difference ratio is about 16, so the returned
    log2 ratio is about 4.
    """
    finals = []
    for step in (2.0 * h, h, 0.5 * h):
        n = int(round(T / step))
        y = [float(v) for v in y0]
        for s in range(n):
            y = rk4_step(rhs, y, s * step, step)
        finals.append(y)
    d_coarse = max(abs(a - b) for a, b in zip(finals[0], finals[1]))
    d_fine = max(abs(a - b) for a, b in zip(finals[1], finals[2]))
    if d_fine == 0.0 or d_coarse == 0.0:
        raise ValueError("test problem too simple to measure an order")
    return math.log2(d_coarse / d_fine)
