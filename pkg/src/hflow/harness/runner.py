"""Dispatch of validated experiment configs to the library operations."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import mosco, varying
from ..errors import CertificationFailure, DomainError, InvalidInput, SolverFailure, UnsupportedVariant
from ..flows import (
    Constant,
    Harmonic,
    Record,
    Trajectory,
    error_bound,
    fejer_slacks,
    ppa_run,
    schedule_from_json,
    semigroup_adaptive,
)
from ..functionals import SequenceWindow, fermat_weber, functional_from_json
from ..geometry import MetricTree, Product, sampled_cat0_slacks, space_from_json
from ..prox import resolvent
from ..weak import asymptotic_center, weak_limit_score
from .config import ConfigError, load_config, validate_summary
from .io import emit_table, emit_trace, format_point, ingest_points

EXIT_PASS, EXIT_CONFIG, EXIT_FAIL, EXIT_SOLVER = 0, 1, 2, 3
STATUS_EXIT = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "solver-failure": EXIT_SOLVER}
SPACE_CHECK_CHUNKS = 8
# wall-clock time lives outside summary.json so summaries stay byte-identical
TIMING_FILE = "timing.json"
BARYCENTER_TOL = 1e-12


@dataclass
class RunSummary:
    operation: str
    status: str
    seed: int
    config: dict
    metrics: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    message: str = ""
    runtime: float = 0.0

    @property
    def exit_code(self):
        return STATUS_EXIT[self.status]

    def to_json(self):
        """Summary without the runtime, so reruns with one seed are byte-identical."""
        out = {
            "operation": self.operation,
            "status": self.status,
            "seed": self.seed,
            "config": self.config,
            "metrics": _clean(self.metrics),
            "artifacts": list(self.artifacts),
        }
        if self.message:
            out["message"] = self.message
        return out


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def threads():
    try:
        return max(1, int(os.environ.get("HFLOW_THREADS", "1")))
    except ValueError:
        return 1


# context ---------------------------------------------------------------------


class _Run:
    def __init__(self, config, out_dir, seed):
        self.config = config
        self.params = config.get("params", {})
        self.seed = seed
        self.seq = np.random.SeedSequence(seed)
        self.out_dir = None if out_dir is None else Path(out_dir)
        self.artifacts = []
        self.space = space_from_json(config["space"]) if "space" in config else None

    def rngs(self, count):
        """Independent generators, one per trial, split from the run seed."""
        return [np.random.default_rng(s) for s in self.seq.spawn(count)]

    def param(self, name, default=None, required=False):
        if name in self.params:
            return self.params[name]
        if required:
            raise ConfigError(f"'{name}' is required for {self.config['operation']}", "$.params")
        return default

    def point(self, obj, space=None):
        space = self.space if space is None else space
        return parse_point(space, obj)

    def _path(self, key, default):
        name = self.config.get("output", {}).get(key, default)
        return self.out_dir / name

    def write_trace(self, traj):
        if self.out_dir is None:
            return
        path = self._path("trace", "trace.csv")
        emit_trace(traj, path)
        self.artifacts.append(path.name)

    def write_table(self, header, rows, name="trace.csv"):
        if self.out_dir is None:
            return
        path = self._path("trace", name)
        emit_table(header, rows, path)
        self.artifacts.append(path.name)


def parse_point(space, obj):
    """Point from config JSON: coordinate lists, nested SPD lists, tree labels or dicts."""
    if isinstance(space, MetricTree):
        if isinstance(obj, str):
            if obj.startswith("e") and ":" in obj:
                k, s = obj[1:].split(":")
                return space.point(int(k), float(s))
            return space.node(obj)
        return space.from_json(obj)
    if isinstance(space, Product):
        if isinstance(obj, dict):
            obj = obj["coords"]
        return tuple(parse_point(f, c) for f, c in zip(space.factors, obj))
    if isinstance(obj, dict):
        return space.from_json(obj)
    return space.check(np.asarray(obj, dtype=float))


def _functional(run):
    return functional_from_json(run.space, run.config["functional"])


def _values_increase(traj, start_value):
    vals = np.concatenate([[start_value], traj.values()])
    finite = np.isfinite(vals)
    if not finite.all():
        return 0.0 if not finite[1:].any() or finite[1:].all() else math.inf
    return float(np.max(np.diff(vals), initial=0.0))


def _expect(run, space, final):
    exp = run.config.get("expect")
    if not exp or "final_point" not in exp:
        return None
    target = run.point(exp["final_point"], space)
    return float(space.distance(final, target)), float(exp.get("atol", 1e-8))


# operations --------------------------------------------------------------------


def _space_check(run):
    space = run.space
    samples = int(run.param("samples", 10000))
    tol = float(run.param("tol", 1e-9))
    sizes = [samples // SPACE_CHECK_CHUNKS + (1 if i < samples % SPACE_CHECK_CHUNKS else 0) for i in range(SPACE_CHECK_CHUNKS)]
    rngs = run.rngs(SPACE_CHECK_CHUNKS)

    def trial(i):
        if sizes[i] == 0:
            return math.inf
        return float(np.min(sampled_cat0_slacks(space, rngs[i], sizes[i])))

    with ThreadPoolExecutor(max_workers=threads()) as pool:
        mins = list(pool.map(trial, range(SPACE_CHECK_CHUNKS)))
    worst = min(mins)
    metrics = {"min_slack": worst, "samples": samples, "tol": tol, "space": space.describe()}
    return ("pass" if worst >= -tol else "fail"), metrics


def _prox(run):
    f = _functional(run)
    x = run.point(run.config["x0"])
    lam = float(run.param("lambda", required=True))
    tol = run.param("tol")
    res = resolvent(f, x, lam, tol)
    traj = Trajectory(f.space, x, [Record(1, lam, res.point, f(res.point), float(f.space.distance(x, res.point)))])
    run.write_trace(traj)
    allowance = 1e-8 * (1.0 + abs(res.objective))
    metrics = {
        "point": format_point(f.space, res.point),
        "objective": res.objective,
        "growth_gap": res.growth_gap,
        "method": res.method,
        "iterations": res.iterations,
    }
    ok = res.growth_gap >= -allowance
    check = _expect(run, f.space, res.point)
    if check is not None:
        metrics["expect_distance"] = check[0]
        ok = ok and check[0] <= check[1]
    return ("pass" if ok else "fail"), metrics


def _flow(run):
    f = _functional(run)
    x = run.point(run.config["x0"])
    t = float(run.param("t", required=True))
    tol = run.param("tol")
    if "target_err" in run.params:
        n = semigroup_adaptive(f, x, t, float(run.params["target_err"]), tol).n
    else:
        n = int(run.param("n", 100))
    metrics = {"t": t, "n": n}
    if t == 0.0 or n == 0:
        metrics.update(point=format_point(f.space, x), value=f(x), error_bound=0.0)
        return "pass", metrics
    traj = ppa_run(f, x, Constant(t / n), n, tol, stop_absorbing=False)
    run.write_trace(traj)
    increase = _values_increase(traj, f(x))
    metrics.update(
        point=format_point(f.space, traj.final),
        value=f(traj.final),
        error_bound=error_bound(f, x, t, n, tol),
        max_value_increase=increase,
    )
    ok = increase <= 1e-9 * (1.0 + abs(f(x)))
    check = _expect(run, f.space, traj.final)
    if check is not None:
        metrics["expect_distance"] = check[0]
        ok = ok and check[0] <= check[1]
    return ("pass" if ok else "fail"), metrics


def _schedule(run, default):
    if "schedule" in run.params:
        return schedule_from_json(run.params["schedule"])
    if "lambda" in run.params:
        return Constant(float(run.params["lambda"]))
    return default


def _ppa_common(run, f, x0, default_schedule, default_N, default_tol=None):
    N = int(run.param("N", default_N))
    tol = run.param("tol", default_tol)
    schedule = _schedule(run, default_schedule)
    ref = run.point(run.config["reference"]) if "reference" in run.config else f.minimizer()
    traj = ppa_run(f, x0, schedule, N, tol, reference=ref)
    run.write_trace(traj)
    increase = _values_increase(traj, f(x0))
    metrics = {
        "iterations": len(traj),
        "converged": traj.converged,
        "point": format_point(f.space, traj.final),
        "value": f(traj.final),
        "max_value_increase": increase,
    }
    ok = increase <= 1e-9 * (1.0 + abs(f(x0)) if math.isfinite(f(x0)) else 1.0)
    if ref is not None:
        slacks = fejer_slacks(traj, [ref])
        metrics["reference_distance"] = traj.reference_distances[-1]
        metrics["min_fejer_slack"] = float(slacks.min()) if slacks.size else 0.0
        ok = ok and metrics["min_fejer_slack"] >= -1e-9
    check = _expect(run, f.space, traj.final)
    if check is not None:
        metrics["expect_distance"] = check[0]
        ok = ok and check[0] <= check[1]
    return ok, metrics, traj


def _ppa(run):
    f = _functional(run)
    x0 = run.point(run.config["x0"])
    ok, metrics, _ = _ppa_common(run, f, x0, Harmonic(1.0), 100)
    return ("pass" if ok else "fail"), metrics


def _points(run):
    if "points_csv" in run.config:
        return ingest_points(run.config["points_csv"], run.space)
    return [run.point(p) for p in run.config["points"]]


def _barycenter(run, p):
    pts = _points(run)
    weights = run.config.get("weights")
    if weights is not None:
        if len(weights) != len(pts):
            raise ConfigError("one weight per point", "$.weights")
        total = float(sum(weights))
        weights = [w / total for w in weights]
    f = fermat_weber(run.space, pts, weights, p)
    x0 = run.point(run.config["x0"]) if "x0" in run.config else pts[0]
    # barycenters are the answer itself, so solve each step well below the library default
    tol = float(run.param("tol", BARYCENTER_TOL))
    ok, metrics, traj = _ppa_common(run, f, x0, Constant(1.0), 500, tol)
    stat_tol = float(run.param("stationarity_tol", 1e-6 * (1.0 + f.scale(traj.final))))
    y = resolvent(f, traj.final, 1.0, 1e-2 * tol, certify=False).point
    stationarity = float(f.space.distance(traj.final, y))
    metrics["stationarity"] = stationarity
    ok = ok and stationarity <= stat_tol
    return ("pass" if ok else "fail"), metrics


def _median(run):
    return _barycenter(run, 1)


def _mean(run):
    return _barycenter(run, 2)


def _center(run):
    space = run.space
    window = SequenceWindow(space, _points(run), int(run.config.get("window_start", 0)))
    tol = float(run.param("tol", 1e-8))
    res = asymptotic_center(space, window, tol)
    probes = [run.point(p) for p in run.config["probes"]] if "probes" in run.config else None
    score = weak_limit_score(space, window, res.center, probes)
    metrics = {
        "center": format_point(space, res.center),
        "weak": {
            "score": score,
            "omega": res.omega_value,
            "sensitivity": res.window_sensitivity,
            "growth_gap": res.growth_gap,
            "window": [window.start, window.start + len(window) - 1],
        },
    }
    ok = res.growth_gap >= -tol * (1.0 + res.omega_value)
    return ("pass" if ok else "fail"), metrics


def _mosco(run):
    seq = mosco.family_from_json(run.config["family"])
    if not isinstance(seq, mosco.FunctionalSequence):
        raise ConfigError("mosco needs a functional family", "$.family")
    x = run.point(run.config["x"], seq.space)
    lam = float(run.param("lambda", 1.0))
    N = int(run.param("N", 1000))
    tol = float(run.param("tol", 1e-10))
    report = mosco.envelope_resolvent_convergence(seq, x, lam, N, tol)
    m2 = mosco.mosco_check(seq, x, (), N, tol)
    header = ["n", "env_gap", "res_gap"]
    rows = report.rows()
    ok = report.passed and m2.passed
    metrics = {**report.to_json(seq.name), "m2_gap": m2.m2_gap, "m2_status": m2.m2_status, "m1_mode": m2.m1_mode}
    if "t" in run.params:
        sem = mosco.semigroup_convergence(seq, x, float(run.params["t"]), N, int(run.param("n_steps", 100)), tol)
        header.append("sem_gap")
        rows = [r + [g] for r, g in zip(rows, sem.sem_gaps)]
        metrics["sem_gaps"] = sem.rows()
        ok = ok and sem.passed
    metrics["failures"] = {str(k): v for k, v in report.failures.items()}
    run.write_table(header, rows)
    return ("pass" if ok else "fail"), metrics


def _wijsman(run):
    seq = mosco.family_from_json(run.config["family"])
    if not isinstance(seq, mosco.SetSequence):
        raise ConfigError("wijsman needs a set family", "$.family")
    x = run.point(run.config["x"], seq.space)
    N = int(run.param("N", 1000))
    tol = float(run.param("tol", 1e-12))
    report = mosco.wijsman_check(seq, x, N, tol)
    run.write_table(["n", "dist_gap", "proj_gap"], report.rows())
    metrics = {"family": seq.name, "gaps": report.rows(), "passed": report.passed}
    if seq.monotone != "none":
        try:
            metrics["monotone_limit"] = mosco.monotone_set_limit(seq).to_json()
        except UnsupportedVariant:
            metrics["monotone_limit"] = None
    return ("pass" if report.passed else "fail"), metrics


def _sequence_for(run, inst):
    spec = dict(run.config.get("sequence", {}))
    kind = spec.pop("kind", "pd_quadratics" if inst.name == "pd_norm" else "tree_quadratics")
    if kind == "tree_quadratics":
        anchors = [run.point(a, inst.limit) for a in spec.get("anchors", [])] or None
        return varying.tree_quadratics(inst, anchors, float(spec.get("weight", 2.0)), bool(spec.get("absolute", False)))
    if kind == "pd_quadratics":
        return varying.pd_quadratics(inst, spec.get("anchor"))
    raise ConfigError(f"unknown varying sequence {kind!r}", "$.sequence.kind")


def _ar(run):
    inst = varying.instance_from_json(run.config["ar"])
    vseq = _sequence_for(run, inst)
    x = run.point(run.config["x"], inst.limit)
    lam = float(run.param("lambda", 1.0))
    t = float(run.param("t", 1.0))
    N = int(run.param("N", 1000))
    n_steps = int(run.param("n_steps", 100))
    tol = float(run.param("tol", 1e-10))
    metrics = {"instance": inst.to_json(), "lambda": lam, "t": t}
    try:
        axioms = varying.ar_axioms_check(inst, int(run.param("samples", 100)), 1e-12, N, seed=int(run.seq.generate_state(1)[0]))
    except CertificationFailure as err:
        metrics["axioms"] = {"violation": str(err)}
        return "fail", metrics
    metrics["axioms"] = axioms.to_json()
    report = varying.mosco_ar_check(inst, vseq, x, lam, N, tol)
    grid, sem = varying.semigroup_ar_check(inst, vseq, x, t, N, n_steps, tol)
    rows = [r + [g] for r, g in zip(report.rows(), sem)]
    run.write_table(["n", "env_gap", "res_gap", "epsilon_n", "sem_gap"], rows)
    metrics["gaps"] = rows
    allowance = float(run.param("gap_tol", 10.0 * inst.epsilon(N) + tol))
    last = rows[-1]
    ok = not report.failures and max(last[1], last[2], last[4]) <= allowance
    ok = ok and all(d <= e + 1e-12 for d, e in zip(axioms.distortion, axioms.epsilon))
    metrics["allowance"] = allowance
    return ("pass" if ok else "fail"), metrics


HANDLERS = {
    "space-check": _space_check,
    "prox": _prox,
    "flow": _flow,
    "ppa": _ppa,
    "median": _median,
    "mean": _mean,
    "center": _center,
    "mosco": _mosco,
    "wijsman": _wijsman,
    "ar": _ar,
}


def run_experiment(config, out_dir=None, seed=None):
    """Validate ``config``, run its operation and write the trace and summary into ``out_dir``.

    Raises :class:`ConfigError` for configs that do not validate or name
    unknown parts. Solver failures and failed assertions are reported in the
    summary status.
    """
    config = load_config(config)
    if seed is not None:
        config["seed"] = int(seed)
    seed = int(config.setdefault("seed", 0))
    validate_summary({"operation": config["operation"], "status": "pass", "seed": seed, "config": config, "metrics": {}, "artifacts": []})
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        run = _Run(config, out_dir, seed)
        status, metrics = HANDLERS[config["operation"]](run)
        message = ""
    except SolverFailure as err:
        status, metrics, message = "solver-failure", {"gap": err.gap, "step": err.step}, str(err)
        run_artifacts = []
    except (ConfigError, KeyError) as err:
        raise err if isinstance(err, ConfigError) else ConfigError(f"missing field {err}") from None
    except (InvalidInput, DomainError, UnsupportedVariant) as err:
        raise ConfigError(str(err)) from None
    else:
        run_artifacts = run.artifacts
    summary = RunSummary(config["operation"], status, seed, config, metrics, run_artifacts, message)
    summary.runtime = time.perf_counter() - start
    if out_dir is not None:
        name = config.get("output", {}).get("summary", "summary.json")
        (Path(out_dir) / TIMING_FILE).write_text(json.dumps({"runtime_seconds": summary.runtime}) + "\n")
        summary.artifacts += [TIMING_FILE, name]
        payload = validate_summary(summary.to_json())
        (Path(out_dir) / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return summary
