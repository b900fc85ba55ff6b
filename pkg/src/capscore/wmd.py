"""Word Mover's Distance: exact optimal transport between bag-of-words masses.

Sentences become normalized token-mass distributions; the ground cost is the
Euclidean distance between word embeddings. The exact solver is a
transportation simplex over the dense bipartite problem, initialized with
Vogel's approximation and pivoting deterministically, so repeated runs give
identical plans. A cheap nearest-neighbor relaxation provides a lower bound.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .embeddings import EmbeddingStore
from .errors import AllTokensOOV, NumericalFailure
from .text import Caption

__all__ = [
    "TransportProblem",
    "TransportPlan",
    "build_problem",
    "solve_exact",
    "relaxed_lower_bound",
    "word_movers_distance",
]

_OPTIMALITY_TOL = 1e-11
_FEASIBILITY_TOL = 1e-9


@dataclass
class TransportProblem:
    """Supplies and demands (token, mass) with the pairwise ground-cost matrix."""

    supply_tokens: tuple[str, ...]
    supply: np.ndarray
    demand_tokens: tuple[str, ...]
    demand: np.ndarray
    cost: np.ndarray


@dataclass
class TransportPlan:
    """Sparse optimal flows (supply index, demand index, mass) and their cost."""

    flows: list[tuple[int, int, float]]
    objective: float


def _mass_distribution(caption: Caption, words: EmbeddingStore, drop: set[str]) -> list[tuple[str, float]]:
    kept = [t for t in caption.tokens if t in words and t not in drop]
    if not kept:
        raise AllTokensOOV(f"no in-vocabulary tokens left in caption {caption.raw!r}")
    counts = Counter(kept)
    total = sum(counts.values())
    return [(token, counts[token] / total) for token in sorted(counts)]


def build_problem(
    a: Caption,
    b: Caption,
    words: EmbeddingStore,
    stopwords: Iterable[str] = (),
) -> TransportProblem:
    """Normalized bag-of-words transport problem between two captions.

    Out-of-vocabulary tokens (and optional stopwords) are dropped with the
    remaining masses renormalized; AllTokensOOV when a side loses everything.
    """
    drop = set(stopwords)
    supply_side = _mass_distribution(a, words, drop)
    demand_side = _mass_distribution(b, words, drop)
    supply_vecs = np.stack([words[t] for t, _ in supply_side]).astype(np.float64)
    demand_vecs = np.stack([words[t] for t, _ in demand_side]).astype(np.float64)
    diff = supply_vecs[:, None, :] - demand_vecs[None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=2))
    return TransportProblem(
        supply_tokens=tuple(t for t, _ in supply_side),
        supply=np.array([m for _, m in supply_side]),
        demand_tokens=tuple(t for t, _ in demand_side),
        demand=np.array([m for _, m in demand_side]),
        cost=cost,
    )


# --- transportation simplex ------------------------------------------------------

def _vogel_initial_basis(supply: np.ndarray, demand: np.ndarray, cost: np.ndarray) -> list[tuple[int, int]]:
    """Initial basic cells via Vogel's approximation, padded to a spanning tree."""
    m, n = cost.shape
    remaining_s = supply.astype(np.float64).copy()
    remaining_d = demand.astype(np.float64).copy()
    rows = set(range(m))
    cols = set(range(n))
    basis: list[tuple[int, int]] = []

    def penalty(costs: list[float]) -> float:
        if len(costs) >= 2:
            smallest = sorted(costs)[:2]
            return smallest[1] - smallest[0]
        return costs[0]

    while rows and cols:
        if len(rows) == 1 and len(cols) == 1:
            i, j = next(iter(rows)), next(iter(cols))
            basis.append((i, j))
            break
        # (penalty, axis, index); larger penalty wins, rows beat columns on ties
        candidates = []
        for i in sorted(rows):
            candidates.append((penalty([cost[i, j] for j in sorted(cols)]), 0, i))
        for j in sorted(cols):
            candidates.append((penalty([cost[i, j] for i in sorted(rows)]), 1, j))
        _, axis, index = max(candidates, key=lambda t: (t[0], -t[1], -t[2]))
        if axis == 0:
            i = index
            j = min(sorted(cols), key=lambda jj: (cost[i, jj], jj))
        else:
            j = index
            i = min(sorted(rows), key=lambda ii: (cost[ii, j], ii))
        amount = min(remaining_s[i], remaining_d[j])
        basis.append((i, j))
        remaining_s[i] -= amount
        remaining_d[j] -= amount
        # exhaust exactly one side per allocation to stay tree-shaped
        if remaining_s[i] <= remaining_d[j]:
            rows.discard(i)
        else:
            cols.discard(j)
    return _pad_to_spanning_tree(basis, m, n)


def _pad_to_spanning_tree(basis: list[tuple[int, int]], m: int, n: int) -> list[tuple[int, int]]:
    # union-find over m supply nodes and n demand nodes
    parent = list(range(m + n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: int, y: int) -> bool:
        rx, ry = find(x), find(y)
        if rx == ry:
            return False
        parent[rx] = ry
        return True

    tree: list[tuple[int, int]] = []
    for i, j in basis:
        if union(i, m + j):
            tree.append((i, j))
    if len(tree) < m + n - 1:
        for i in range(m):
            for j in range(n):
                if len(tree) == m + n - 1:
                    break
                if union(i, m + j):
                    tree.append((i, j))
    return tree


def _compute_duals(basis: Sequence[tuple[int, int]], cost: np.ndarray, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    adjacency: dict[int, list[tuple[int, int, int]]] = {}
    for i, j in basis:
        adjacency.setdefault(i, []).append((i, j, m + j))
        adjacency.setdefault(m + j, []).append((i, j, i))
    u[0] = 0.0
    stack = [0]
    seen = {0}
    while stack:
        node = stack.pop()
        for i, j, other in adjacency.get(node, []):
            if other in seen:
                continue
            if other >= m:
                v[j] = cost[i, j] - u[i]
            else:
                u[i] = cost[i, j] - v[j]
            seen.add(other)
            stack.append(other)
    if np.isnan(u).any() or np.isnan(v).any():
        raise NumericalFailure("basis does not span the transportation graph")
    return u, v


def _find_cycle(basis: Sequence[tuple[int, int]], entering: tuple[int, int], m: int) -> list[tuple[int, int]]:
    """Cycle created by the entering cell: path through the tree plus the cell."""
    adjacency: dict[int, list[tuple[tuple[int, int], int]]] = {}
    for i, j in basis:
        adjacency.setdefault(i, []).append(((i, j), m + j))
        adjacency.setdefault(m + j, []).append(((i, j), i))
    start, goal = entering[0], m + entering[1]
    prev: dict[int, tuple[tuple[int, int], int]] = {}
    stack = [start]
    seen = {start}
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for cell, other in adjacency.get(node, []):
            if other not in seen:
                seen.add(other)
                prev[other] = (cell, node)
                stack.append(other)
    if goal not in seen:
        raise NumericalFailure("entering cell closes no cycle; basis is not a tree")
    path_cells = []
    node = goal
    while node != start:
        cell, parent_node = prev[node]
        path_cells.append(cell)
        node = parent_node
    return [entering] + path_cells


def _flows_from_tree(
    basis: Sequence[tuple[int, int]], supply: np.ndarray, demand: np.ndarray
) -> dict[tuple[int, int], float]:
    """Exact basic flows by peeling leaves off the spanning tree."""
    m, n = len(supply), len(demand)
    marg = np.concatenate([supply.astype(np.float64), demand.astype(np.float64)])
    degree = np.zeros(m + n, dtype=int)
    adjacency: dict[int, list[tuple[tuple[int, int], int]]] = {}
    for i, j in basis:
        degree[i] += 1
        degree[m + j] += 1
        adjacency.setdefault(i, []).append(((i, j), m + j))
        adjacency.setdefault(m + j, []).append(((i, j), i))
    removed_cells: set[tuple[int, int]] = set()
    removed_nodes: set[int] = set()
    flows: dict[tuple[int, int], float] = {}
    leaves = [x for x in range(m + n) if degree[x] == 1]
    while leaves:
        node = leaves.pop()
        if node in removed_nodes:
            continue
        removed_nodes.add(node)
        for cell, other in adjacency.get(node, []):
            if cell in removed_cells or other in removed_nodes:
                continue
            amount = marg[node]
            flows[cell] = amount
            marg[node] = 0.0
            marg[other] -= amount
            removed_cells.add(cell)
            degree[other] -= 1
            if degree[other] == 1:
                leaves.append(other)
            break
    return flows


def solve_exact(problem: TransportProblem, max_iterations: int = 0) -> TransportPlan:
    """Optimal transport plan by the transportation simplex.

    Pivot choice is the most negative reduced cost with lexicographic tie
    breaks; if an iteration cap is hit the solver restarts with Bland's rule
    before giving up with NumericalFailure.
    """
    supply, demand, cost = problem.supply, problem.demand, problem.cost
    m, n = cost.shape
    if abs(float(supply.sum()) - float(demand.sum())) > 1e-9:
        raise NumericalFailure("supply and demand masses are unbalanced")
    if not max_iterations:
        max_iterations = 200 * (m + n) ** 2 + 1000

    def run(blands_rule: bool) -> list[tuple[int, int]] | None:
        basis = _vogel_initial_basis(supply, demand, cost)
        flows = _flows_from_tree(basis, supply, demand)
        for _ in range(max_iterations):
            u, v = _compute_duals(basis, cost, m, n)
            reduced = cost - u[:, None] - v[None, :]
            for i, j in basis:
                reduced[i, j] = 0.0
            entering = None
            if blands_rule:
                mask = reduced < -_OPTIMALITY_TOL
                if mask.any():
                    flat = int(np.flatnonzero(mask.ravel())[0])
                    entering = divmod(flat, n)
            else:
                flat = int(reduced.argmin())
                i, j = divmod(flat, n)
                if reduced[i, j] < -_OPTIMALITY_TOL:
                    entering = (i, j)
            if entering is None:
                return basis
            cycle = _find_cycle(basis, entering, m)
            givers = cycle[1::2]
            theta, leaving = min(
                ((flows.get(cell, 0.0), cell) for cell in givers),
                key=lambda t: (t[0], t[1]),
            )
            for idx, cell in enumerate(cycle):
                flows[cell] = flows.get(cell, 0.0) + (theta if idx % 2 == 0 else -theta)
            del flows[leaving]
            basis.remove(leaving)
            basis.append(entering)
        return None

    basis = run(blands_rule=False)
    if basis is None:
        basis = run(blands_rule=True)
    if basis is None:
        raise NumericalFailure("transportation simplex did not converge")

    final_flows = _flows_from_tree(basis, supply, demand)
    flows: list[tuple[int, int, float]] = []
    for (i, j), mass in sorted(final_flows.items()):
        if mass < -_FEASIBILITY_TOL:
            raise NumericalFailure(f"negative basic flow {mass} at cell {(i, j)}")
        if mass > 0.0:
            flows.append((i, j, float(mass)))
    objective = float(sum(mass * cost[i, j] for i, j, mass in flows))
    return TransportPlan(flows=flows, objective=objective)


def relaxed_lower_bound(problem: TransportProblem) -> float:
    """Best of the two one-sided relaxations: every mass point ships to its
    nearest counterpart; never exceeds the exact optimum."""
    to_nearest_demand = float(problem.supply @ problem.cost.min(axis=1))
    to_nearest_supply = float(problem.demand @ problem.cost.min(axis=0))
    return max(to_nearest_demand, to_nearest_supply)


def word_movers_distance(
    a: Caption,
    b: Caption,
    words: EmbeddingStore,
    stopwords: Iterable[str] = (),
) -> float:
    """Exact WMD between two captions; raises AllTokensOOV when undefined."""
    return solve_exact(build_problem(a, b, words, stopwords)).objective
