"""Exact p-Wasserstein distances and optimal couplings for discrete measures.

`wasserstein_exact` runs a transportation simplex (northwest-corner start,
dual "MODI" reduced costs, Bland's anti-cycling pivot rule) and returns an
optimal vertex of the coupling polytope. Two independent routes check it:
`wasserstein_1d_oracle` builds the monotone quantile coupling on the line,
which is optimal for every convex cost |x-y|^p with p >= 1, and
`brute_force_oracle` enumerates polytope vertices outright on tiny instances.

Costs are |x-y|^p in double precision; the p-th root is taken once on the
final optimal cost. Values below 1e-12 are clamped to zero to stay aligned
with the atom-merge tolerance of `discrete_measure`.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

from .discrete_measure import DiscreteMeasure
from .errors import (
    DimensionError,
    DomainError,
    InstanceTooLarge,
    NumericalInconsistency,
    SolverStalled,
)

DIST_CLAMP = 1e-12       # pair distances below this count as zero
VALUE_CLAMP = 1e-12      # returned distances below this are exactly zero
MARGINAL_TOL = 1e-10     # coupling marginals must match this tightly
_ENTER_TOL = 1e-11       # reduced-cost threshold on the unit-scaled cost matrix
_DEGENERACY_TOL = 1e-12  # prefix-sum coincidence that triggers perturbation
_PERTURB = 1e-13         # per-row marginal perturbation unit


@dataclass(frozen=True, eq=False)
class Coupling:
    """Sparse transport plan between two discrete measures."""

    source: DiscreteMeasure
    target: DiscreteMeasure
    rows: np.ndarray    # (k,) int atom indices into source
    cols: np.ndarray    # (k,) int atom indices into target
    masses: np.ndarray  # (k,) positive masses

    @property
    def n_entries(self) -> int:
        return self.rows.shape[0]

    def row_sums(self) -> np.ndarray:
        out = np.zeros(self.source.n_atoms)
        np.add.at(out, self.rows, self.masses)
        return out

    def col_sums(self) -> np.ndarray:
        out = np.zeros(self.target.n_atoms)
        np.add.at(out, self.cols, self.masses)
        return out

    def as_dense(self) -> np.ndarray:
        out = np.zeros((self.source.n_atoms, self.target.n_atoms))
        out[self.rows, self.cols] = self.masses
        return out

    def validate(self, tol: float = MARGINAL_TOL) -> None:
        gap_r = float(np.max(np.abs(self.row_sums() - self.source.weights)))
        gap_c = float(np.max(np.abs(self.col_sums() - self.target.weights)))
        if max(gap_r, gap_c) > tol:
            raise NumericalInconsistency(
                f"coupling marginals off by {max(gap_r, gap_c):.3e} (> {tol})"
            )

    def plan_list(self) -> list[list]:
        return [[int(i), int(j), float(m)]
                for i, j, m in zip(self.rows, self.cols, self.masses)]


@dataclass(frozen=True, eq=False)
class TransportResult:
    """Optimal transport value with its certifying plan."""

    value: float   # W_p, equals cost ** (1/p)
    cost: float    # optimal integral of |x-y|^p
    plan: Coupling
    solver: str    # "simplex" | "quantile1d" | "bruteforce"
    p: float

    def to_json_dict(self) -> dict:
        return {
            "value": float(self.value),
            "p": float(self.p),
            "solver": self.solver,
            "plan": self.plan.plan_list(),
        }


def _check_pair(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> None:
    if mu.dim != nu.dim:
        raise DimensionError(f"measures live in R^{mu.dim} vs R^{nu.dim}")
    if p < 1.0:
        raise DomainError(f"exponent p={p} must be at least 1")


def _distance_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure) -> np.ndarray:
    if mu.dim == 1:
        D = np.abs(mu.support[:, 0][:, None] - nu.support[:, 0][None, :])
    else:
        diff = mu.support[:, None, :] - nu.support[None, :, :]
        D = np.sqrt(np.sum(diff * diff, axis=2))
    D[D < DIST_CLAMP] = 0.0
    return D


def _cost_matrix(D: np.ndarray, p: float) -> np.ndarray:
    return D.copy() if p == 1.0 else D**p


def _finish(mu, nu, p, rows, cols, masses, cost, solver) -> TransportResult:
    rows = np.asarray(rows, dtype=int)
    cols = np.asarray(cols, dtype=int)
    masses = np.asarray(masses, dtype=float)
    keep = masses > 0.0
    plan = Coupling(mu, nu, rows[keep], cols[keep], masses[keep])
    plan.validate()
    cost = max(float(cost), 0.0)
    value = cost if p == 1.0 else cost ** (1.0 / p)
    if value < VALUE_CLAMP:
        value = 0.0
    return TransportResult(value, cost, plan, solver, p)


# ---------------------------------------------------------------------------
# transportation simplex
# ---------------------------------------------------------------------------

def _perturbed_marginals(a: np.ndarray, b: np.ndarray):
    """Break prefix-sum ties that would make the northwest start degenerate."""
    ca, cb = np.cumsum(a)[:-1], np.cumsum(b)[:-1]
    if ca.size == 0 or cb.size == 0:
        return a, b
    if np.min(np.abs(ca[:, None] - cb[None, :])) > _DEGENERACY_TOL:
        return a, b
    bump = _PERTURB * np.arange(1, a.shape[0] + 1)
    a2 = a + bump
    b2 = b.copy()
    b2[-1] += bump.sum()
    return a2, b2


def _northwest(a: np.ndarray, b: np.ndarray):
    """Northwest-corner start: n+m-1 basis cells with their allocations."""
    n, m = a.shape[0], b.shape[0]
    ra, rb = a.astype(float).copy(), b.astype(float).copy()
    cells: list[tuple[int, int]] = []
    flows: list[float] = []
    i = j = 0
    while True:
        t = ra[i] if ra[i] <= rb[j] else rb[j]
        cells.append((i, j))
        flows.append(max(t, 0.0))
        ra[i] -= t
        rb[j] -= t
        if i == n - 1 and j == m - 1:
            break
        # advance exactly one index per step; on a tie close the row so the
        # basis keeps n+m-1 cells and stays a spanning tree
        if ra[i] <= rb[j] and i < n - 1:
            i += 1
        elif j < m - 1:
            j += 1
        else:
            i += 1
    return cells, np.array(flows)


def _potentials(cells, C: np.ndarray, n: int, m: int):
    """Dual variables with u[0]=0 solved over the basis tree."""
    adj: list[list[int]] = [[] for _ in range(n + m)]
    for i, j in cells:
        adj[i].append(n + j)
        adj[n + j].append(i)
    u = np.empty(n)
    v = np.empty(m)
    seen = np.zeros(n + m, dtype=bool)
    u[0] = 0.0
    seen[0] = True
    stack = [0]
    while stack:
        node = stack.pop()
        for nb in adj[node]:
            if seen[nb]:
                continue
            seen[nb] = True
            if node < n:
                v[nb - n] = C[node, nb - n] - u[node]
            else:
                u[nb] = C[nb, node - n] - v[node - n]
            stack.append(nb)
    if not seen.all():
        raise NumericalInconsistency("basis does not span the bipartite graph")
    return u, v


def _tree_path(cells, n: int, start: int, goal: int) -> list[int]:
    adj: dict[int, list[int]] = {}
    for i, j in cells:
        adj.setdefault(i, []).append(n + j)
        adj.setdefault(n + j, []).append(i)
    parent = {start: -1}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nb in adj[node]:
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def _simplex_basis(C: np.ndarray, a: np.ndarray, b: np.ndarray) -> list[tuple[int, int]]:
    """Optimal basis tree via the transportation simplex with Bland's rule."""
    n, m = C.shape
    cells, flows = _northwest(a, b)
    flow_of = {cell: k for k, cell in enumerate(cells)}
    basic = np.zeros((n, m), dtype=bool)
    for i, j in cells:
        basic[i, j] = True
    cap = 10 * (n + m) ** 2
    for _ in range(cap):
        u, v = _potentials(cells, C, n, m)
        R = C - u[:, None] - v[None, :]
        R[basic] = 0.0
        negative = np.flatnonzero(R.ravel() < -_ENTER_TOL)
        if negative.size == 0:
            return cells
        ei, ej = divmod(int(negative[0]), m)

        path = _tree_path(cells, n, ei, n + ej)
        cycle: list[tuple[tuple[int, int], int]] = []
        for t in range(len(path) - 1):
            x, y = path[t], path[t + 1]
            cell = (x, y - n) if x < n else (y, x - n)
            cycle.append((cell, -1 if t % 2 == 0 else 1))

        theta = min(flows[flow_of[c]] for c, s in cycle if s < 0)
        leaving = min(c for c, s in cycle if s < 0 and flows[flow_of[c]] <= theta)
        theta = max(theta, 0.0)

        for c, s in cycle:
            flows[flow_of[c]] += s * theta
        k = flow_of.pop(leaving)
        basic[leaving] = False
        last_cell = cells[-1]
        cells[k] = cells[-1]
        flows[k] = flows[-1]
        if last_cell != leaving:
            flow_of[last_cell] = k
        cells.pop()
        flows = flows[:-1]
        cells.append((ei, ej))
        flows = np.append(flows, theta)
        flow_of[(ei, ej)] = len(cells) - 1
        basic[ei, ej] = True
    raise SolverStalled(f"simplex exceeded {cap} pivots on a {n}x{m} instance")


def _tree_flows(cells, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact flows on a spanning-tree basis by leaf elimination."""
    n, m = a.shape[0], b.shape[0]
    V = n + m
    deg = [0] * V
    incident: list[list[int]] = [[] for _ in range(V)]
    for k, (i, j) in enumerate(cells):
        deg[i] += 1
        deg[n + j] += 1
        incident[i].append(k)
        incident[n + j].append(k)
    balance = np.concatenate([a, b]).astype(float)
    used = [False] * len(cells)
    flow = np.zeros(len(cells))
    leaves = [x for x in range(V) if deg[x] == 1]
    while leaves:
        x = leaves.pop()
        k = next((kk for kk in incident[x] if not used[kk]), None)
        if k is None:
            continue
        used[k] = True
        i, j = cells[k]
        other = (n + j) if x == i else i
        flow[k] = balance[x]
        balance[other] -= balance[x]
        balance[x] = 0.0
        deg[x] -= 1
        deg[other] -= 1
        if deg[other] == 1:
            leaves.append(other)
    return flow


def wasserstein_exact(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> TransportResult:
    """Exact W_p distance with an optimal vertex plan.

    Dirac-vs-anything instances short-circuit to the unique product
    coupling. Degenerate marginals are perturbed for pivoting only; the
    returned flows are re-solved on the optimal basis from the original
    marginals, so the plan is exact for the problem as posed.
    """
    _check_pair(mu, nu, p)
    n, m = mu.n_atoms, nu.n_atoms
    D = _distance_matrix(mu, nu)
    C = _cost_matrix(D, p)

    if n == 1:
        cost = float(np.dot(nu.weights, C[0]))
        return _finish(mu, nu, p, np.zeros(m, dtype=int), np.arange(m),
                       nu.weights.copy(), cost, "simplex")
    if m == 1:
        cost = float(np.dot(mu.weights, C[:, 0]))
        return _finish(mu, nu, p, np.arange(n), np.zeros(n, dtype=int),
                       mu.weights.copy(), cost, "simplex")

    a, b = mu.weights, nu.weights
    a2, b2 = _perturbed_marginals(a, b)
    scale = float(C.max())
    Cs = C / scale if scale > 0.0 else C
    cells = _simplex_basis(Cs, a2, b2)
    flow = _tree_flows(cells, a, b)
    if float(flow.min()) < -1e-9:
        raise NumericalInconsistency(
            f"basis re-solve produced flow {float(flow.min()):.3e} < 0"
        )
    flow = np.maximum(flow, 0.0)
    idx = np.array(cells, dtype=int)
    cost = float(np.dot(flow, C[idx[:, 0], idx[:, 1]]))
    return _finish(mu, nu, p, idx[:, 0], idx[:, 1], flow, cost, "simplex")


# ---------------------------------------------------------------------------
# 1-d quantile oracle
# ---------------------------------------------------------------------------

def _monotone_walk(w: np.ndarray, v: np.ndarray):
    """Pair quantile intervals of two sorted weight vectors."""
    cw, cv = np.cumsum(w), np.cumsum(v)
    end = max(cw[-1], cv[-1])
    cw[-1] = end
    cv[-1] = end
    out = []
    i = j = 0
    prev = 0.0
    while i < w.shape[0] and j < v.shape[0]:
        upper = min(cw[i], cv[j])
        take = upper - prev
        if take > 0.0:
            out.append((i, j, take))
        prev = upper
        step_i = cw[i] <= cv[j]
        step_j = cv[j] <= cw[i]
        if step_i:
            i += 1
        if step_j:
            j += 1
    return out


def wasserstein_1d_oracle(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> TransportResult:
    """Monotone quantile coupling on the line; optimal for every p >= 1.

    Independent of the simplex: the plan is read straight off the merged
    quantile grid of the two weight vectors (supports are stored sorted).
    """
    _check_pair(mu, nu, p)
    if mu.dim != 1:
        raise DimensionError(f"the quantile oracle needs d=1, got d={mu.dim}")
    x = mu.support[:, 0]
    y = nu.support[:, 0]
    pairs = _monotone_walk(mu.weights, nu.weights)
    rows = [i for i, _, _ in pairs]
    cols = [j for _, j, _ in pairs]
    masses = [t for _, _, t in pairs]
    dists = np.abs(x[rows] - y[cols])
    dists[dists < DIST_CLAMP] = 0.0
    cost = float(np.dot(masses, dists if p == 1.0 else dists**p))
    return _finish(mu, nu, p, rows, cols, masses, cost, "quantile1d")


# ---------------------------------------------------------------------------
# brute-force vertex enumeration
# ---------------------------------------------------------------------------

MAX_PERMUTATION_SIZE = 7
MAX_ENUM_SUPPORT = 10


def _is_uniform(w: np.ndarray) -> bool:
    return bool(np.max(np.abs(w - 1.0 / w.shape[0])) <= 1e-12)


def _best_permutation(C: np.ndarray, a: np.ndarray):
    n = C.shape[0]
    rows = np.arange(n)
    best_cost = np.inf
    best_perm = None
    for perm in itertools.permutations(range(n)):
        c = float(np.dot(a, C[rows, perm]))
        if c < best_cost:
            best_cost = c
            best_perm = perm
    return best_cost, best_perm


def _best_tree_vertex(C: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Minimum cost over all basic feasible solutions.

    Every vertex of the coupling polytope is the flow vector of some
    spanning tree of the complete bipartite support graph, so enumerating
    trees (union-find with rollback, dead-branch pruning) covers them all.
    """
    n, m = C.shape
    V = n + m
    need = V - 1
    edges = [(i, j) for i in range(n) for j in range(m)]
    E = len(edges)
    parent = list(range(V))
    size = [1] * V
    avail = [m] * n + [n] * m
    attached = [0] * V
    chosen: list[int] = []
    best = {"cost": np.inf, "cells": None, "flow": None}

    def find(x: int) -> int:
        while parent[x] != x:
            x = parent[x]
        return x

    def record() -> None:
        cells = [edges[k] for k in chosen]
        flow = _tree_flows(cells, a, b)
        if float(flow.min()) < -1e-15:
            return
        flow = np.maximum(flow, 0.0)
        idx = np.array(cells, dtype=int)
        cost = float(np.dot(flow, C[idx[:, 0], idx[:, 1]]))
        if cost < best["cost"]:
            best["cost"] = cost
            best["cells"] = cells
            best["flow"] = flow

    def recurse(e_idx: int) -> None:
        if len(chosen) == need:
            record()
            return
        if E - e_idx < need - len(chosen):
            return
        i, j = edges[e_idx]
        x, y = i, n + j
        rx, ry = find(x), find(y)
        if rx != ry:
            if size[rx] < size[ry]:
                rx, ry = ry, rx
            parent[ry] = rx
            size[rx] += size[ry]
            attached[x] += 1
            attached[y] += 1
            chosen.append(e_idx)
            recurse(e_idx + 1)
            chosen.pop()
            attached[x] -= 1
            attached[y] -= 1
            size[rx] -= size[ry]
            parent[ry] = ry
        avail[x] -= 1
        avail[y] -= 1
        if (avail[x] > 0 or attached[x] > 0) and (avail[y] > 0 or attached[y] > 0):
            recurse(e_idx + 1)
        avail[x] += 1
        avail[y] += 1

    recurse(0)
    return best["cost"], best["cells"], best["flow"]


def brute_force_oracle(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> TransportResult:
    """Ground-truth optimum by exhaustive vertex enumeration.

    Supported regimes: uniform weights with n = m <= 7 (permutation
    vertices), Dirac on either side (unique product plan), or total support
    n + m <= 10 (all spanning-tree vertices).
    """
    _check_pair(mu, nu, p)
    n, m = mu.n_atoms, nu.n_atoms
    D = _distance_matrix(mu, nu)
    C = _cost_matrix(D, p)

    if n == 1:
        cost = float(np.dot(nu.weights, C[0]))
        return _finish(mu, nu, p, np.zeros(m, dtype=int), np.arange(m),
                       nu.weights.copy(), cost, "bruteforce")
    if m == 1:
        cost = float(np.dot(mu.weights, C[:, 0]))
        return _finish(mu, nu, p, np.arange(n), np.zeros(n, dtype=int),
                       mu.weights.copy(), cost, "bruteforce")

    if n == m and n <= MAX_PERMUTATION_SIZE and _is_uniform(mu.weights) and _is_uniform(nu.weights):
        cost, perm = _best_permutation(C, mu.weights)
        rows = np.arange(n)
        cols = np.array(perm, dtype=int)
        return _finish(mu, nu, p, rows, cols, mu.weights.copy(), cost, "bruteforce")

    if n + m <= MAX_ENUM_SUPPORT:
        cost, cells, flow = _best_tree_vertex(C, mu.weights, nu.weights)
        idx = np.array(cells, dtype=int)
        return _finish(mu, nu, p, idx[:, 0], idx[:, 1], flow, cost, "bruteforce")

    raise InstanceTooLarge(
        f"brute force supports uniform n=m<={MAX_PERMUTATION_SIZE} or "
        f"n+m<={MAX_ENUM_SUPPORT}, got {n}+{m}"
    )
