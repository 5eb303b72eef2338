"""CSV ingestion of points and CSV traces of trajectories."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from ..errors import DomainError, InvalidInput
from ..geometry import SPD, Euclidean, Hyperboloid, InnerProduct, MetricTree, Product
from ..geometry.jacobi import jacobi_eigh

TRACE_HEADER = ("n", "lambda", "point", "f_value", "step_move")


def _arity(space):
    if isinstance(space, (Euclidean, InnerProduct)):
        return space.dim
    if isinstance(space, Hyperboloid):
        return space.dim + 1
    if isinstance(space, SPD):
        return space.n * space.n
    if isinstance(space, MetricTree):
        return 2
    if isinstance(space, Product):
        return sum(_arity(f) for f in space.factors)
    raise InvalidInput(f"no CSV layout for {space.kind} spaces")


def _floats(cells, where):
    try:
        return np.array([float(c) for c in cells])
    except ValueError:
        raise InvalidInput(f"{where}: expected numbers, got {cells!r}") from None


def _parse_tree(tree, cells, where):
    if len(cells) == 1:
        label = cells[0].strip()
        if label in tree.index:
            return tree.node(label)
        raise InvalidInput(f"{where}: unknown tree node {label!r}")
    if len(cells) != 2:
        raise InvalidInput(f"{where}: tree rows are 'e<edge>,<offset>' or a node label")
    edge = cells[0].strip()
    if edge.startswith("e"):
        edge = edge[1:]
    try:
        k, s = int(edge), float(cells[1])
    except ValueError:
        raise InvalidInput(f"{where}: bad tree row {cells!r}") from None
    if not 0 <= k < len(tree.edges):
        raise InvalidInput(f"{where}: edge {k} does not exist")
    if not 0.0 <= s <= tree.edges[k][2]:
        raise InvalidInput(f"{where}: offset {s} outside edge {k} of length {tree.edges[k][2]}")
    return tree.point(k, s)


def _parse_flat(space, values, where):
    if isinstance(space, SPD):
        m = values.reshape(space.n, space.n)
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(m).max())):
            raise DomainError(f"{where}: matrix is not symmetric")
        m = 0.5 * (m + m.T)
        w, _ = jacobi_eigh(m)
        if not w.min() > 0.0:
            raise DomainError(f"{where}: matrix is not positive definite (eigenvalues {np.array2string(w)})")
        return space.check(m)
    if isinstance(space, Product):
        parts, i = [], 0
        for f in space.factors:
            k = _arity(f)
            parts.append(_parse_flat(f, values[i : i + k], where))
            i += k
        return tuple(parts)
    try:
        return space.check(values)
    except (InvalidInput, DomainError) as err:
        raise type(err)(f"{where}: {err}") from None


def parse_row(space, cells, where="row"):
    cells = [c.strip() for c in cells]
    if isinstance(space, MetricTree):
        return _parse_tree(space, cells, where)
    if isinstance(space, Product) and any(isinstance(f, MetricTree) for f in space.factors):
        raise InvalidInput("CSV rows cannot mix tree and array factors")
    k = _arity(space)
    if len(cells) != k:
        raise InvalidInput(f"{where}: expected {k} values, got {len(cells)}")
    return _parse_flat(space, _floats(cells, where), where)


def ingest_points(path, space):
    """Points of ``space`` from a CSV file, one per row; '#' lines and blank lines are skipped.

    Euclidean rows hold coordinates, hyperboloid rows the ambient coordinates,
    SPD rows the matrix flattened row-major, tree rows 'e<edge>,<offset>' or a
    node label, and product rows the factors concatenated.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise InvalidInput(f"cannot read {path}: {err}") from None
    points = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
            continue
        points.append(parse_row(space, row, f"{path}:{lineno}"))
    if not points:
        raise InvalidInput(f"{path}: no points")
    return points


def _num(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def format_point(space, p):
    """Single CSV cell for a point: space-separated numbers, tree 'e<edge>:<offset>' or node label."""
    if isinstance(space, MetricTree):
        return space.labels[p.node] if p.node is not None else f"e{p.edge}:{_num(p.offset)}"
    if isinstance(space, Product):
        return "|".join(format_point(f, c) for f, c in zip(space.factors, p))
    return " ".join(_num(v) for v in np.ravel(p))


def trace_rows(traj):
    space = traj.space
    for r in traj.records:
        yield (str(r.n), _num(r.lam), format_point(space, r.point), _num(r.value), _num(r.step_move))


def emit_trace(traj, path):
    """Write the trajectory as CSV with header n,lambda,point,f_value,step_move."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_HEADER)
            writer.writerows(trace_rows(traj))
    except OSError as err:
        raise OSError(f"cannot write trace {path}: {err}") from err


def emit_table(header, rows, path):
    """Plain CSV table of numbers (gap reports and the like)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_num(v) if isinstance(v, float) else v for v in row])
