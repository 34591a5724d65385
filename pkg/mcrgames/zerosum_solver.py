"""
Values and optimal strategies of two-player zero-sum turn-based MCR games.

Min wants to reach a target cheaply, Max wants to prevent it or make it
expensive. Two solvers are provided:

- solve_acyclic: backward induction when the non-target part is a DAG.
- solve_value_iteration: Jacobi sweeps from (0 on targets, +inf elsewhere)
  for arbitrary graphs, with -inf classification once a value drops below
  every simple-path payoff.

Ties are broken towards the lowest successor index. Min's choice at a
vertex is recorded at the sweep where its current value was first reached,
so following Min's strategy never circles on a zero-weight cycle.

Usage:
    vm = solve(zs)
    vm.value_of("A"), vm.choice_of("A")
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Hashable, List, Optional, Tuple

import networkx as nx

from mcrgames.errors import BudgetExceededError, SolverError
from mcrgames.game_model import NEG_INF, POS_INF, ExtCost
from mcrgames.transforms import MAX, MIN, ZeroSumGame

logger = logging.getLogger(__name__)

INF = math.inf


@dataclass(frozen=True)
class ValueMap:
    """
    Per-vertex values and the owner's optimal successor.

    choices[i] is the successor index chosen at vertex i. It is None at
    targets and at Min vertices whose value is not finite; Max vertices
    always keep a choice, which is how a punishing coalition plays.
    """
    game: ZeroSumGame
    values: Tuple[ExtCost, ...]
    choices: Tuple[Optional[int], ...]
    method: str

    def value_of(self, label: Hashable) -> ExtCost:
        return self.values[self.game.position(label)]

    def choice_of(self, label: Hashable) -> Optional[Hashable]:
        c = self.choices[self.game.position(label)]
        return None if c is None else self.game.vertices[c]

    @property
    def initial_value(self) -> ExtCost:
        return self.values[self.game.initial]

    def strategy(self, owner: str) -> dict:
        """Positional strategy of one side: label -> successor label."""
        g = self.game
        return {
            g.vertices[i]: g.vertices[c]
            for i, c in enumerate(self.choices)
            if c is not None and g.owners[i] == owner and i not in g.targets
        }


def _to_ext(x) -> ExtCost:
    if x == INF:
        return POS_INF
    if x == -INF:
        return NEG_INF
    return ExtCost(int(x))


def _pick(owner: str, options: List[Tuple[float, int]]) -> Tuple[float, int]:
    """Best (value, successor) for the owner; first in index order on ties."""
    best_val, best_succ = options[0]
    for val, succ in options[1:]:
        if (owner == MIN and val < best_val) or (owner == MAX and val > best_val):
            best_val, best_succ = val, succ
    return best_val, best_succ


def _topological_order(zs: ZeroSumGame) -> List[int]:
    try:
        return list(nx.topological_sort(zs.graph()))
    except nx.NetworkXUnfeasible:
        raise SolverError("cycle detected outside targets; use value iteration") from None


def solve_acyclic(zs: ZeroSumGame) -> ValueMap:
    """
    Backward induction over a game whose non-target part is a DAG.

    Targets have value 0, vertices that cannot reach a target get +inf.

    Raises:
        SolverError: If the non-target part has a cycle.
    """
    order = _topological_order(zs)
    n = len(zs.vertices)
    val: List[float] = [INF] * n
    choice: List[Optional[int]] = [None] * n
    for i in reversed(order):
        if i in zs.targets:
            val[i] = 0
            continue
        options = [(w + val[j] if val[j] != INF else INF, j) for j, w in zs.succ[i]]
        best, succ = _pick(zs.owners[i], options)
        val[i] = best
        if best != INF or zs.owners[i] == MAX:
            choice[i] = succ
    logger.debug("solve_acyclic: %d vertices", n)
    return ValueMap(zs, tuple(_to_ext(x) for x in val), tuple(choice), "backward")


def solve_value_iteration(zs: ZeroSumGame, max_sweeps: Optional[int] = None) -> ValueMap:
    """
    Value iteration from X0 = (0 on targets, +inf elsewhere).

    Each sweep computes X_{k+1}(v) from X_k (Jacobi). Values falling below
    -(|V|-1)*W, with W the largest absolute weight, are classified -inf.
    Iterates are asserted non-increasing.

    Raises:
        SolverError: If an iterate increases or max_sweeps is exhausted.
    """
    n = len(zs.vertices)
    threshold = -(n - 1) * zs.max_abs_weight()
    cur: List[float] = [0 if i in zs.targets else INF for i in range(n)]
    choice: List[Optional[int]] = [None] * n
    limit = max_sweeps if max_sweeps is not None else 4 * n * (n * max(1, zs.max_abs_weight()) + 2) + 4
    sweeps = 0
    while True:
        sweeps += 1
        if sweeps > limit:
            raise SolverError(f"value iteration did not converge in {limit} sweeps")
        nxt = list(cur)
        changed = False
        for i in range(n):
            if i in zs.targets or cur[i] == -INF:
                continue
            options = []
            for j, w in zs.succ[i]:
                x = cur[j]
                options.append((x if x in (INF, -INF) else w + x, j))
            best, succ = _pick(zs.owners[i], options)
            if best != -INF and best < threshold:
                best = -INF
            if best > cur[i]:
                raise SolverError(f"value iteration increased at {zs.vertices[i]!r}")
            if best < cur[i]:
                nxt[i] = best
                changed = True
                if zs.owners[i] == MIN:
                    choice[i] = succ
            if zs.owners[i] == MAX:
                choice[i] = succ
        cur = nxt
        if not changed:
            break
    for i in range(n):
        if cur[i] in (INF, -INF) and zs.owners[i] == MIN:
            choice[i] = None
    logger.debug("solve_value_iteration: %d vertices, %d sweeps", n, sweeps)
    return ValueMap(zs, tuple(_to_ext(x) for x in cur), tuple(choice), "iterate")


def solve(zs: ZeroSumGame, method: str = "auto") -> ValueMap:
    """Solve with backward induction when possible, else value iteration."""
    if method == "backward":
        return solve_acyclic(zs)
    if method == "iterate":
        return solve_value_iteration(zs)
    if method != "auto":
        raise SolverError(f"unknown method {method!r}")
    if zs.is_acyclic():
        return solve_acyclic(zs)
    return solve_value_iteration(zs)


def value(zs: ZeroSumGame) -> ExtCost:
    """Value of the game at its initial vertex."""
    return solve(zs).initial_value


# ===== ORACLE =====

def best_response_value(zs: ZeroSumGame, max_choice: dict) -> ExtCost:
    """
    Min's optimal cost from the initial vertex once Max plays the positional
    choices in max_choice (vertex index -> successor index). Min may use
    memory, so a reachable negative cycle that can still reach a target
    gives -inf.
    """
    g = nx.DiGraph()
    g.add_nodes_from(range(len(zs.vertices)))
    for i, s in enumerate(zs.succ):
        if i in zs.targets:
            continue
        for j, w in s:
            if zs.owners[i] == MAX and max_choice.get(i, j) != j:
                continue
            if g.has_edge(i, j):
                w = min(w, g[i][j]["weight"])
            g.add_edge(i, j, weight=w)
    reach = nx.descendants(g, zs.initial) | {zs.initial}
    coreach = set(zs.targets)
    for t in zs.targets:
        coreach |= nx.ancestors(g, t)
    live = reach & coreach
    if zs.initial not in live:
        return POS_INF
    sub = g.subgraph(live).copy()
    for v in sub.nodes:
        if sub.has_edge(v, v) and sub[v][v]["weight"] < 0:
            return NEG_INF
    if nx.negative_edge_cycle(sub, weight="weight"):
        return NEG_INF
    dist = nx.single_source_bellman_ford_path_length(sub, zs.initial, weight="weight")
    return ExtCost(min(d for v, d in dist.items() if v in zs.targets))


def brute_force_value(zs: ZeroSumGame, budget: int = 100_000) -> ExtCost:
    """
    Value by enumeration: the maximum over positional Max strategies of Min's
    exact best response (a shortest path with negative-cycle detection).
    Test oracle for small games.
    """
    max_vertices = [i for i in range(len(zs.vertices)) if zs.owners[i] == MAX and i not in zs.targets]
    count = 1
    for i in max_vertices:
        count *= len(zs.succ[i])
    if count > budget:
        raise BudgetExceededError(f"{count} Max strategies exceed budget {budget}", count, budget)
    best = None
    for picks in itertools.product(*([j for j, _ in zs.succ[i]] for i in max_vertices)):
        resp = best_response_value(zs, dict(zip(max_vertices, picks)))
        if best is None or resp > best:
            best = resp
    return best if best is not None else best_response_value(zs, {})
