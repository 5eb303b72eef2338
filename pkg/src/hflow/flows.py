"""Gradient-flow semigroups and the proximal point algorithm."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidInput, SolverFailure
from .prox import default_tol, slope_upper, solve_generic

ABSORB_TOL = 1e-14
ABSORB_RUN = 5
SLOPE_PROBE = 1e-4


# schedules -------------------------------------------------------------------


class StepSchedule:
    divergent = True

    def step(self, n):
        raise NotImplementedError

    def steps(self, count):
        return [self.step(n) for n in range(1, count + 1)]


@dataclass(frozen=True)
class Constant(StepSchedule):
    lam: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise InvalidInput(f"step must be positive, got {self.lam}")

    def step(self, n):
        return self.lam

    def to_json(self):
        return {"kind": "constant", "lambda": self.lam}


@dataclass(frozen=True)
class Harmonic(StepSchedule):
    """lam_n = c / n, whose sum diverges."""

    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0.0:
            raise InvalidInput(f"harmonic constant must be positive, got {self.c}")

    def step(self, n):
        return self.c / n

    def to_json(self):
        return {"kind": "harmonic", "c": self.c}


@dataclass(frozen=True)
class CustomSchedule(StepSchedule):
    """Explicit finite list of steps; ``divergent`` is the caller's declaration."""

    values: tuple
    divergent: bool = False

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals or any(not v > 0.0 for v in vals):
            raise InvalidInput("custom schedule needs a nonempty list of positive steps")
        object.__setattr__(self, "values", vals)

    def step(self, n):
        if n > len(self.values):
            raise InvalidInput(f"custom schedule has only {len(self.values)} steps")
        return self.values[n - 1]

    def to_json(self):
        return {"kind": "custom", "values": list(self.values)}


def schedule_from_json(obj):
    kind = obj.get("kind", "harmonic")
    if kind == "constant":
        return Constant(float(obj["lambda"]))
    if kind == "harmonic":
        return Harmonic(float(obj.get("c", 1.0)))
    if kind == "custom":
        return CustomSchedule(tuple(obj["values"]), bool(obj.get("divergent", False)))
    raise InvalidInput(f"unknown schedule kind {kind!r}")


# trajectories ----------------------------------------------------------------


@dataclass(frozen=True)
class Record:
    n: int
    lam: float
    point: object
    value: float
    step_move: float


@dataclass
class Trajectory:
    """Iterates x_1, x_2, ... of a flow, PPA run or resolvent path, started at ``start``."""

    space: object
    start: object
    records: list = field(default_factory=list)
    reference_distances: list | None = None
    converged: bool = False

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def final(self):
        return self.records[-1].point if self.records else self.start

    def points(self, include_start=True):
        pts = [r.point for r in self.records]
        return [self.start] + pts if include_start else pts

    def values(self):
        return np.array([r.value for r in self.records])

    def moves(self):
        return np.array([r.step_move for r in self.records])

    def lambdas(self):
        return np.array([r.lam for r in self.records])


# resolvent stepping -----------------------------------------------------------


def _step(f, x, lam, tol):
    y = f.resolvent_exact(x, lam)
    if y is None:
        y, _, _ = solve_generic(f, x, lam, tol if tol is not None else default_tol(f, x))
    return y


def semigroup_fixed(f, x, t, n, tol=None):
    """(J_{t/n})^n x, the n-step implicit Euler approximation of S_t x."""
    if not t >= 0.0:
        raise InvalidInput(f"t must be nonnegative, got {t}")
    if t == 0.0:
        return x
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidInput(f"n must be a positive integer, got {n!r}")
    lam = t / n
    y = x
    for k in range(1, n + 1):
        try:
            y = _step(f, y, lam, tol)
        except SolverFailure as err:
            err.step = k
            raise
        if k == 1 and not math.isfinite(f(y)):
            raise DomainError("starting point is outside the closure of dom f")
    return y


@dataclass(frozen=True)
class AdaptiveResult:
    point: object
    n: int
    bound: float

    def __iter__(self):
        return iter((self.point, self.n, self.bound))


def semigroup_adaptive(f, x, t, target_err, tol=None):
    """Choose n from d(S_t x, (J_{t/n})^n x) <= t |∂f|(x) / (sqrt(2) n) and run it."""
    if not target_err > 0.0:
        raise InvalidInput("target error must be positive")
    if t == 0.0:
        return AdaptiveResult(x, 0, 0.0)
    scale = max(1.0, f.scale(x))
    s_hat = slope_upper(f, x, SLOPE_PROBE * scale, tol)
    if not math.isfinite(s_hat):
        raise DomainError("slope estimate is not finite: start outside dom |∂f|")
    n = max(1, math.ceil(t * s_hat / (math.sqrt(2.0) * target_err)))
    point = semigroup_fixed(f, x, t, n, tol)
    return AdaptiveResult(point, n, t * s_hat / (math.sqrt(2.0) * n))


def error_bound(f, x, t, n, tol=None):
    """A-priori bound t * s_hat / (sqrt(2) n) with s_hat = slope_upper at a small step."""
    scale = max(1.0, f.scale(x))
    return t * slope_upper(f, x, SLOPE_PROBE * scale, tol) / (math.sqrt(2.0) * n)


def ppa_run(f, x0, schedule=None, N=100, tol=None, reference=None, stop_absorbing=True):
    """Proximal point iterates x_n = J_{lam_n}(x_{n-1}) for n = 1..N."""
    if schedule is None:
        schedule = Harmonic(1.0)
    if N < 1:
        raise InvalidInput("N must be at least 1")
    space = f.space
    traj = Trajectory(space, x0, [], [] if reference is not None else None)
    scale = 1.0 + f.scale(x0)
    run = 0
    x = x0
    for n in range(1, N + 1):
        lam = schedule.step(n)
        try:
            y = _step(f, x, lam, tol)
        except SolverFailure as err:
            err.step = n
            err.partial = traj
            raise
        move = float(space.distance(x, y))
        traj.records.append(Record(n, lam, y, f(y), move))
        if reference is not None:
            traj.reference_distances.append(float(space.distance(y, reference)))
        x = y
        run = run + 1 if move < ABSORB_TOL * scale else 0
        if stop_absorbing and run >= ABSORB_RUN:
            traj.converged = True
            break
    return traj


def resolvent_path(f, x0, lams, tol=None, reference=None):
    """J_lam x0 for each lam of an ascending list."""
    lams = [float(v) for v in lams]
    if any(not v > 0.0 for v in lams) or any(b < a for a, b in zip(lams, lams[1:])):
        raise InvalidInput("lambda list must be positive and ascending")
    space = f.space
    traj = Trajectory(space, x0, [], [] if reference is not None else None)
    prev = x0
    for n, lam in enumerate(lams, start=1):
        try:
            y = _step(f, x0, lam, tol)
        except SolverFailure as err:
            err.step = n
            err.partial = traj
            raise
        traj.records.append(Record(n, lam, y, f(y), float(space.distance(prev, y))))
        if reference is not None:
            traj.reference_distances.append(float(space.distance(y, reference)))
        prev = y
    return traj


def fejer_slacks(traj, witnesses):
    """Matrix with entries d(x_n, c) - d(x_{n+1}, c), rows over n, columns over witnesses."""
    space = traj.space
    pts = traj.points()
    d = np.array([[float(space.distance(p, c)) for c in witnesses] for p in pts])
    if len(pts) < 2:
        return np.zeros((0, len(witnesses)))
    return d[:-1] - d[1:]
