"""
Seeded random games for property tests.

Every factory takes a numpy Generator so that a failing example is
reproduced from its seed alone.
"""
from typing import Dict, Tuple

import numpy as np

from mcrgames.game_model import ConcurrentGame
from mcrgames.transforms import MAX, MIN, ZeroSumGame


def random_turn_based_game(rng: np.random.Generator, players: int = 2, vertices: int = 5,
                           max_out: int = 2, weights: Tuple[int, int] = (-3, 3),
                           acyclic: bool = True) -> ConcurrentGame:
    """
    Turn-based, action-visible game over v0..v{n-1}; the last vertex is the
    only target and v0 is initial. In the acyclic variant edges only go to
    higher indices, so every play reaches the target.
    """
    names = [f"v{i}" for i in range(vertices)]
    target = names[-1]
    moves: Dict = {}
    edge_weights: Dict = {}
    for i, v in enumerate(names[:-1]):
        pool = list(range(i + 1, vertices)) if acyclic else [j for j in range(vertices) if j != i]
        k = int(rng.integers(1, min(max_out, len(pool)) + 1))
        succ = sorted(int(j) for j in rng.choice(pool, size=k, replace=False))
        if not acyclic and vertices - 1 not in succ and rng.random() < 0.5:
            succ[-1] = vertices - 1
            succ = sorted(set(succ))
        owner = int(rng.integers(0, players))
        table = {}
        for a, j in enumerate(succ):
            profile = tuple(a if p == owner else 0 for p in range(players))
            table[profile] = names[j]
            edge_weights[(v, names[j])] = tuple(int(x) for x in rng.integers(weights[0], weights[1] + 1, size=players))
        moves[v] = table
    actions = [[str(a) for a in range(max_out)] for _ in range(players)]
    return ConcurrentGame.build(players, moves, edge_weights, [target], actions, initial=names[0],
                                vertices=names)


def random_zero_sum(rng: np.random.Generator, vertices: int = 5, max_out: int = 2,
                    weights: Tuple[int, int] = (-3, 3), acyclic: bool = False) -> ZeroSumGame:
    """Random zero-sum game; vertex n-1 is the target, vertex 0 initial."""
    edges = {}
    owners = {}
    for i in range(vertices - 1):
        pool = list(range(i + 1, vertices)) if acyclic else list(range(vertices))
        k = int(rng.integers(1, min(max_out, len(pool)) + 1))
        for j in rng.choice(pool, size=k, replace=False):
            edges[(i, int(j))] = int(rng.integers(weights[0], weights[1] + 1))
        owners[i] = MIN if rng.random() < 0.5 else MAX
    return ZeroSumGame.build(range(vertices), owners, edges, [vertices - 1], 0)
