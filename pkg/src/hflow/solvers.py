"""Minimizers for strongly convex proximal objectives.

Each solver minimizes g(y) = f(y) + d(x, y)^2 / (2 lam) for a particular
structure of f and returns ``(point, iterations)``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import SolverFailure
from .geometry import MetricTree, Product
from .optimize import golden_section

ANCHOR_SNAP = 1e-13
STAGNATION = 4e-16


# trees ---------------------------------------------------------------------


def _node_distances(tree, p):
    """d(w, p) for every vertex w."""
    return np.min([tree.dist[:, a] + da for a, da in tree.ends(p)], axis=0)


def _edge_coordinates(tree, p, node_d):
    """c_k such that d(point at offset s on edge k, p) = |s - c_k| for s in [0, L_k]."""
    eu, ev, length = tree._eu, tree._ev, tree._elen
    du, dv = node_d[eu], node_d[ev]
    c = np.where(du <= dv, -du, length + dv)
    if p.node is None:
        c[p.edge] = p.offset
    return c


def tree_point_terms_prox(tree: MetricTree, terms, x, lam):
    """Exact minimizer of sum_k lin_k d(y, a_k) + quad_k/2 d(y, a_k)^2 + d(y, x)^2/(2 lam).

    On each edge every distance is |s - c| in the offset s, so g restricted to
    an edge is a convex piecewise quadratic; its minimizer is found among the
    breakpoints and the stationary points of the quadratic pieces.
    """
    anchors = [a for a, _, _ in terms] + [x]
    lin = np.array([t[1] for t in terms] + [0.0])
    quad = np.array([t[2] for t in terms] + [1.0 / lam])
    coords = np.stack([_edge_coordinates(tree, a, _node_distances(tree, a)) for a in anchors], axis=1)
    length = tree._elen[:, None]
    brk = np.sort(np.concatenate([np.zeros_like(length), np.clip(coords, 0.0, length), length], axis=1), axis=1)
    lo, hi = brk[:, :-1], brk[:, 1:]
    mid = 0.5 * (lo + hi)
    sgn = np.sign(mid[:, :, None] - coords[:, None, :])
    q_tot = quad.sum()
    station = (np.sum(quad * coords, axis=1)[:, None] - np.sum(lin * sgn, axis=2)) / q_tot
    cand = np.concatenate([brk, np.clip(station, lo, hi)], axis=1)
    diff = cand[:, :, None] - coords[:, None, :]
    phi = np.sum(lin * np.abs(diff) + 0.5 * quad * diff**2, axis=2)
    flat = int(np.argmin(phi))
    k, j = divmod(flat, phi.shape[1])
    return tree.point(k, float(cand[k, j])), 1


def tree_convex_prox(tree: MetricTree, g):
    """Minimize a strongly convex finite g on a tree.

    Along the geodesic from the best vertex v to the minimizer g is
    non-increasing, so no other vertex lies strictly inside it: the minimizer is
    on an edge incident to v. Each such edge gets a golden-section search.
    """
    nodes = tree.node_points()
    values = [g(p) for p in nodes]
    best = int(np.argmin(values))
    point, value = nodes[best], values[best]
    evals = len(nodes)
    for k in tree.incident(best):
        s, v = golden_section(lambda s: g(tree.move_from_node(best, k, s)), 0.0, tree.edges[k][2])
        evals += 100
        if v < value:
            point, value = tree.move_from_node(best, k, s), v
    return point, evals


def line_point_terms_prox(terms, x, lam):
    """Exact minimizer of the same objective on the real line.

    Between consecutive anchors the objective is one quadratic, so the
    minimizer is a clipped stationary point of some piece.
    """
    c = np.array([float(np.asarray(a).reshape(-1)[0]) for a, _, _ in terms] + [float(np.asarray(x).reshape(-1)[0])])
    lin = np.array([t[1] for t in terms] + [0.0])
    quad = np.array([t[2] for t in terms] + [1.0 / lam])
    brk = np.unique(c)
    lo = np.concatenate([[-np.inf], brk])
    hi = np.concatenate([brk, [np.inf]])
    mid = np.where(np.isinf(lo), hi - 1.0, np.where(np.isinf(hi), lo + 1.0, 0.5 * (lo + hi)))
    sgn = np.sign(mid[:, None] - c[None, :])
    station = (np.sum(quad * c) - sgn @ lin) / quad.sum()
    cand = np.concatenate([brk, np.clip(station, lo, hi)])
    diff = cand[:, None] - c[None, :]
    phi = np.sum(lin * np.abs(diff) + 0.5 * quad * diff**2, axis=1)
    return np.array([cand[int(np.argmin(phi))]]), 1


# Riemannian models -----------------------------------------------------------


def _stack(space, points):
    if isinstance(space, Product):
        return tuple(np.stack([p[i] for p in points]) for i in range(len(space.factors)))
    return np.stack(points)


def _combine(space, coeff, logs):
    if isinstance(space, Product):
        return tuple(np.tensordot(coeff, part, axes=1) for part in logs)
    return np.tensordot(coeff, logs, axes=1)


def _scaled(space, v, c):
    if isinstance(space, Product):
        return tuple(c * part for part in v)
    return c * v


def _point_terms_value(space, y, stacked, lin, quad):
    d = np.asarray(space.distance(y, stacked), dtype=float)
    return float(np.sum(lin * d + 0.5 * quad * d * d))


def _newton_step(space, y, logs, d, lin, quad, coeff, stacked):
    """Damped Newton step with the exact Hessians of the distance terms, or ``None``.

    Hess 1/2 d_j^2 comes from the backend; Hess d_j = (Hess 1/2 d_j^2 - u_j u_j^T) / d_j.
    The step is accepted on an Armijo decrease of the objective.
    """
    c = np.asarray(space.tangent_coords(y, logs), dtype=float)
    H = space.sq_dist_hessians(y, c)
    if H is None:
        return None
    descent = coeff @ c
    hess = np.tensordot(quad, H, axes=1)
    for j in np.flatnonzero((lin > 0.0) & (d > 0.0)):
        u = c[j] / d[j]
        hess += lin[j] / d[j] * (H[j] - np.outer(u, u))
    try:
        s = np.linalg.solve(hess, descent)
    except np.linalg.LinAlgError:
        return None
    decrease = float(descent @ s)
    if not decrease > 0.0:
        return None
    g0 = float(np.sum(lin * d + 0.5 * quad * d * d))
    t = 1.0
    for _ in range(30):
        trial = space.exp(y, space.from_tangent_coords(y, t * s))
        if _point_terms_value(space, trial, stacked, lin, quad) <= g0 - 1e-4 * t * decrease:
            return space.from_tangent_coords(y, t * s)
        t *= 0.5
    return None


def riemannian_point_terms_prox(space, terms, x, lam, tol, max_iter=20000):
    """Weiszfeld iteration for sum_k lin_k d(., a_k) + quad_k/2 d(., a_k)^2 + d(., x)^2/(2 lam).

    Each step is a damped Newton step with exact Hessians where the backend has them,
    otherwise (or when the line search fails) the Weiszfeld step to
    exp_y(sum c_j log_y p_j / sum c_j) with c_j = quad_j + lin_j / d(y, p_j),
    the minimizer of the quadratic majorant in flat space. The objective is
    (1/lam)-strongly convex, so d(y, y*) <= lam |grad g(y)|, which is the stopping rule.
    At an anchor the Vardi–Zhang test decides optimality or the escape step.
    """
    anchors = [a for a, _, _ in terms] + [x]
    lin = np.array([t[1] for t in terms] + [0.0])
    quad = np.array([t[2] for t in terms] + [1.0 / lam])
    stacked = _stack(space, anchors)
    y = x
    best, best_bound = x, math.inf
    for it in range(1, max_iter + 1):
        logs = space.log(y, stacked)
        d = np.asarray(space.norm(y, logs), dtype=float)
        scale = 1.0 + float(d.max())
        at = np.flatnonzero((lin > 0.0) & (d <= ANCHOR_SNAP * scale))
        safe = np.where(d > 0.0, d, 1.0)
        coeff = quad + np.where(d > 0.0, lin / safe, 0.0)
        if at.size:
            k = int(at[0])
            coeff[k] = quad[k]
            r_vec = _combine(space, coeff, logs)
            r = float(space.norm(y, r_vec))
            # d(y, y*) <= lam * dist(0, subdifferential) = lam * max(r - lin_k, 0)
            bound = lam * max(r - lin[k], 0.0)
            if bound <= tol:
                return y, it
            step = _scaled(space, r_vec, (1.0 - lin[k] / r) / coeff.sum())
        else:
            grad = _combine(space, coeff, logs)
            bound = lam * float(space.norm(y, grad))
            if bound <= tol:
                return y, it
            newton = _newton_step(space, y, logs, d, lin, quad, coeff, stacked)
            step = newton if newton is not None else _scaled(space, grad, 1.0 / coeff.sum())
            # snap to the nearest weighted anchor when it satisfies the optimality test
            k = int(np.argmin(np.where(lin > 0.0, d, np.inf)))
            if lin[k] > 0.0 and d[k] <= 1e-3 * scale:
                cand = anchors[k]
                logs_k = space.log(cand, stacked)
                dk = np.asarray(space.norm(cand, logs_k), dtype=float)
                ck = quad + np.where(dk > 0.0, lin / np.where(dk > 0.0, dk, 1.0), 0.0)
                ck[k] = quad[k]
                rk = float(space.norm(cand, _combine(space, ck, logs_k)))
                if lam * max(rk - lin[k], 0.0) <= tol:
                    return cand, it
        if bound < best_bound:
            best, best_bound = y, bound
        if float(space.norm(y, step)) <= STAGNATION * scale:
            # the update is below the resolution of floating point at this scale
            return y, it
        y = space.exp(y, step)
    raise SolverFailure(
        f"Weiszfeld iteration did not certify tol={tol:g} in {max_iter} steps",
        best=best,
        gap=best_bound,
    )


# generic -------------------------------------------------------------------


def line_prox(g, x, lam, lipschitz=None):
    """Minimize a convex g on the real line, starting from the scalar x."""
    x0 = float(np.asarray(x).reshape(-1)[0])
    g0 = g(x0)
    if lipschitz is not None:
        # d(x, J x) / lam <= |∂f|(J x) <= L
        radius = lam * lipschitz * (1.0 + 1e-12) + 1e-300
    else:
        radius = max(1.0, abs(x0)) * 1e-3
        for _ in range(200):
            if g(x0 - radius) > g0 and g(x0 + radius) > g0:
                break
            radius *= 2.0
    s, _ = golden_section(g, x0 - radius, x0 + radius)
    return s, 1


def cyclic_splitting(f, x, lam, space, objective, certify, tol, max_steps=10**6):
    """Cyclic proximal splitting over the terms of a sum plus the quadratic term.

    Sweep k applies each exact sub-resolvent with step lam / k; the best iterate
    by objective value is kept. Stops when the probe certificate ``certify``
    reports a gap below tol^2 / (2 lam).
    """
    terms = list(f.terms)
    y = x
    best, best_val = x, objective(x)
    steps = 0
    sweep = 0
    gap = math.inf
    while steps < max_steps:
        sweep += 1
        mu = lam / sweep
        for g, w in terms:
            y = g.resolvent_exact(y, mu * w)
        s = mu / lam
        y = space.geodesic(y, x, s / (1.0 + s))
        steps += len(terms) + 1
        val = objective(y)
        if val < best_val:
            best, best_val = y, val
        if sweep % 25 == 0:
            gap = certify(best)
            if gap <= tol * tol / (2.0 * lam):
                return best, steps
    raise SolverFailure(
        f"cyclic splitting did not certify tol={tol:g} within {max_steps} term steps",
        best=best,
        gap=gap,
    )
