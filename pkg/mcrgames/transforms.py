"""
Game-to-game constructions.

- bound_below_certificate / to_nonnegative: turn a game whose player-i payoffs
  are bounded below into one with non-negative player-i weights, tracking the
  negative part of the running payoff as a "debt" in the vertex.
- lift_strategy / project_strategy: move strategies across that transform.
- turnify_round_robin: split each concurrent step into one move per player.
- coalition_game: the two-player zero-sum game of player i against the
  coalition of all other players, who commit their joint action first.

Usage:
    cert = bound_below_certificate(game, 1, "v0")
    shifted = to_nonnegative(game, 1, cert, "v0")
    zs = coalition_game(game, 1, ("A",))
"""
import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import (
    Callable, Dict, FrozenSet, Hashable, List, Mapping, Optional, Sequence, Tuple, Union,
)

import networkx as nx

from mcrgames.errors import GameError, NotActionVisibleError, UnboundedError
from mcrgames.game_model import (
    ConcurrentGame, FinitePlay, Strategy, Vertex, check_play, is_action_visible,
)

logger = logging.getLogger(__name__)

MIN = "min"
MAX = "max"


# ===== ZERO-SUM GAMES =====

@dataclass(frozen=True)
class ZeroSumGame:
    """
    Turn-based two-player zero-sum MCR game, stored by vertex index.

    Attributes:
        vertices: Vertex labels; position = index.
        owners: MIN or MAX per vertex.
        succ: Per vertex, (successor index, weight) pairs sorted by index.
        targets: Target indices (each carries a zero self-loop).
        initial: Initial vertex index.
    """
    vertices: Tuple[Hashable, ...]
    owners: Tuple[str, ...]
    succ: Tuple[Tuple[Tuple[int, int], ...], ...]
    targets: FrozenSet[int]
    initial: int = 0
    index: Dict[Hashable, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {v: i for i, v in enumerate(self.vertices)})

    @classmethod
    def build(
        cls,
        vertices: Sequence[Hashable],
        owners: Mapping[Hashable, str],
        edges: Mapping[Tuple[Hashable, Hashable], int],
        targets,
        initial: Hashable,
    ) -> "ZeroSumGame":
        """Assemble from labelled edges; targets get a single zero self-loop."""
        vertices = tuple(vertices)
        index = {v: i for i, v in enumerate(vertices)}
        targets = frozenset(index[t] for t in targets)
        succ: List[List[Tuple[int, int]]] = [[] for _ in vertices]
        for (u, w), weight in edges.items():
            iu = index[u]
            if iu not in targets:
                succ[iu].append((index[w], weight))
        for t in targets:
            succ[t] = [(t, 0)]
        for i, v in enumerate(vertices):
            if not succ[i]:
                raise GameError(f"zero-sum vertex {v!r} has no successor")
        return cls(
            vertices=vertices,
            owners=tuple(owners.get(v, MIN) for v in vertices),
            succ=tuple(tuple(sorted(s)) for s in succ),
            targets=targets,
            initial=index[initial],
        )

    def __len__(self):
        return len(self.vertices)

    def position(self, label: Hashable) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise GameError(f"unknown zero-sum vertex {label!r}") from None

    def max_abs_weight(self) -> int:
        return max((abs(w) for s in self.succ for _, w in s), default=0)

    def graph(self) -> nx.DiGraph:
        """
        Non-target edges as a weighted directed graph over indices. The
        self-loop of an absorbing vertex is left out: it never reaches a
        target and its value is +inf whoever owns it.
        """
        g = nx.DiGraph()
        g.add_nodes_from(range(len(self.vertices)))
        for i, s in enumerate(self.succ):
            if i in self.targets or self.is_absorbing(i):
                continue
            for j, w in s:
                g.add_edge(i, j, weight=w)
        return g

    def is_absorbing(self, i: int) -> bool:
        return all(j == i for j, _ in self.succ[i])

    def is_acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.graph())

    def with_initial(self, label: Hashable) -> "ZeroSumGame":
        return ZeroSumGame(self.vertices, self.owners, self.succ, self.targets, self.position(label))


# ===== BOUNDED-BELOW CERTIFICATES =====

@dataclass(frozen=True)
class BoundCertificate:
    """
    Lower bound -bound on the player's total payoff of every path segment
    reachable from the initial vertex, or, when bound is None, a negative
    cycle reachable from it (witness, listed without repeating its first
    vertex).
    """
    player: int
    bound: Optional[int]
    witness: Optional[Tuple[Vertex, ...]] = None

    @property
    def bounded(self) -> bool:
        return self.bound is not None


@dataclass(frozen=True)
class _SegmentSource:
    """Auxiliary vertex with a 0-weight edge to every reachable vertex."""


def _player_graph(game: ConcurrentGame, player: int, start: Vertex) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_node(start)
    k = player - 1
    for v in game.reachable(start):
        for w in game.successors(v):
            g.add_edge(v, w, weight=game.weights[(v, w)][k])
    return g


def bound_below_certificate(game: ConcurrentGame, player: int, initial: Vertex) -> BoundCertificate:
    """
    Decide whether the player's payoffs from `initial` are bounded below.

    Bellman-Ford over the part reachable from the initial vertex: a reachable
    negative cycle makes the payoffs unbounded; otherwise the bound is the
    negated minimum total weight of a path segment starting at any reachable
    vertex (0 if none goes negative). That covers every debt to_nonnegative
    can accumulate.
    """
    game.check_player(player)
    game.check_vertex(initial)
    g = _player_graph(game, player, initial)

    # Negative self-loops first; Bellman-Ford cycle recovery needs a real cycle.
    for v in g.nodes:
        if g.has_edge(v, v) and g[v][v]["weight"] < 0:
            return BoundCertificate(player, None, (v,))
    try:
        cycle = nx.find_negative_cycle(g, initial, weight="weight")
    except nx.NetworkXError:
        cycle = None
    if cycle:
        if len(cycle) > 1 and cycle[0] == cycle[-1]:
            cycle = cycle[:-1]
        return BoundCertificate(player, None, tuple(cycle))

    # Debts sum segments starting anywhere, so measure from a source tied to every vertex.
    source = _SegmentSource()
    g.add_edges_from(((source, v) for v in list(g.nodes)), weight=0)
    dist = nx.single_source_bellman_ford_path_length(g, source, weight="weight")
    bound = -min(0, min(dist.values()))
    logger.debug("player %d bounded below by -%d from %r", player, bound, initial)
    return BoundCertificate(player, bound)


# ===== NON-NEGATIVE TRANSFORM =====

@dataclass(frozen=True)
class AugmentedVertex:
    """A vertex of the base game paired with the current debt (<= 0)."""
    base: Vertex
    debt: int

    def __str__(self):
        return f"{self.base}@{self.debt}"


@dataclass(frozen=True)
class FreshTarget:
    """The single target added by to_nonnegative for one player."""
    player: int

    def __str__(self):
        return f"T{self.player}"


def to_nonnegative(game: ConcurrentGame, player: int, cert: BoundCertificate,
                   initial: Optional[Vertex] = None) -> ConcurrentGame:
    """
    Build the game with non-negative player-i weights.

    From (v, c) a move to w leads to (w, min(0, c + w_i)) and weighs
    max(0, c + w_i) for player i; other players keep their weights. Every old
    target (t, c) moves to the fresh target at cost bound + c. Player-i costs
    shift by +bound, other costs are unchanged.

    Args:
        game: Source game.
        player: Player whose weights are made non-negative.
        cert: Finite certificate for that player.
        initial: Initial vertex (defaults to game.initial).

    Returns:
        ConcurrentGame: Reachable part from (initial, 0), with that as initial.
    """
    game.check_player(player)
    if cert.player != player:
        raise GameError(f"certificate is for player {cert.player}, not {player}")
    if not cert.bounded:
        raise UnboundedError(f"player {player} payoffs are unbounded below (cycle {cert.witness})")
    initial = game.initial if initial is None else initial
    if initial is None:
        raise GameError("to_nonnegative needs an initial vertex")
    game.check_vertex(initial)

    b = cert.bound
    k = player - 1
    n = game.num_players
    sink = FreshTarget(player)
    start = AugmentedVertex(initial, 0)
    moves: Dict[Vertex, Dict] = {}
    weights: Dict = {}
    order = [start]
    seen = {start}
    i = 0
    while i < len(order):
        node = order[i]
        i += 1
        v, c = node.base, node.debt
        table = {}
        if v in game.targets:
            for profile in game.moves[v]:
                table[profile] = sink
            final = [0] * n
            final[k] = b + c
            weights[(node, sink)] = tuple(final)
        else:
            for profile, w in game.moves[v].items():
                ws = game.weights[(v, w)]
                c2 = min(0, c + ws[k])
                if c2 < -b:
                    raise GameError(f"certificate bound {b} violated at {v!r} -> {w!r}")
                child = AugmentedVertex(w, c2)
                table[profile] = child
                shifted = list(ws)
                shifted[k] = max(0, c + ws[k])
                weights[(node, child)] = tuple(shifted)
                if child not in seen:
                    seen.add(child)
                    order.append(child)
        moves[node] = table
    order.append(sink)
    moves[sink] = {(0,) * n: sink}
    weights[(sink, sink)] = (0,) * n
    logger.debug("to_nonnegative(player=%d, bound=%d): %d vertices", player, b, len(order))
    return ConcurrentGame(
        num_players=n,
        vertices=tuple(order),
        targets=frozenset({sink}),
        moves=moves,
        weights=weights,
        action_names=game.action_names,
        initial=start,
    )


def to_nonnegative_all(game: ConcurrentGame, initial: Optional[Vertex] = None) -> Tuple[ConcurrentGame, Tuple[int, ...]]:
    """
    Apply to_nonnegative for every player in turn.

    Returns:
        tuple: The transformed game and the per-player bounds (cost shifts).
    """
    current = game
    start = game.initial if initial is None else initial
    bounds = []
    for p in game.players:
        cert = bound_below_certificate(current, p, start)
        if not cert.bounded:
            raise UnboundedError(f"player {p} payoffs are unbounded below (cycle {cert.witness})")
        current = to_nonnegative(current, p, cert, start)
        start = current.initial
        bounds.append(cert.bound)
    return current, tuple(bounds)


def _base_vertex(x: Vertex) -> Vertex:
    while isinstance(x, AugmentedVertex):
        x = x.base
    return x


def strip_history(history: Sequence[Vertex]) -> FinitePlay:
    """
    Project a history of the transformed game onto the base game, through
    every nesting level left by to_nonnegative_all.
    """
    return tuple(_base_vertex(x) for x in history if isinstance(x, AugmentedVertex))


def lift_history(gprime: ConcurrentGame, history: Sequence[Vertex]) -> Optional[FinitePlay]:
    """Replay a base-game history in the transformed game; None if it leaves it."""
    node = AugmentedVertex(history[0], 0)
    if node not in gprime:
        return None
    out = [node]
    for w in history[1:]:
        for cand in gprime.successors(node):
            if isinstance(cand, AugmentedVertex) and cand.base == w:
                node = cand
                break
        else:
            return None
        out.append(node)
    return tuple(out)


@dataclass(frozen=True)
class LiftedStrategy(Strategy):
    """Plays a base-game strategy inside the transformed game."""
    player: int
    inner: Strategy

    def decide(self, history):
        h = strip_history(history)
        return self.inner.decide(h) if h else None


@dataclass(frozen=True)
class ProjectedStrategy(Strategy):
    """Plays a transformed-game strategy in the base game; the debt is its memory."""
    player: int
    inner: Strategy
    gprime: ConcurrentGame = field(repr=False)

    def decide(self, history):
        lifted = lift_history(self.gprime, history)
        return None if lifted is None else self.inner.decide(lifted)


def lift_strategy(gprime: ConcurrentGame, strategy: Strategy) -> Strategy:
    """Strategy of the base game -> strategy of the transformed game."""
    if isinstance(strategy, ProjectedStrategy) and strategy.gprime is gprime:
        return strategy.inner
    return LiftedStrategy(strategy.player, strategy)


def project_strategy(gprime: ConcurrentGame, strategy: Strategy) -> Strategy:
    """Strategy of the transformed game -> strategy of the base game."""
    if isinstance(strategy, LiftedStrategy):
        return strategy.inner
    return ProjectedStrategy(strategy.player, strategy, gprime)


# ===== ROUND-ROBIN TURNIFICATION =====

@dataclass(frozen=True)
class Stage:
    """Intermediate vertex of a split step: base vertex and actions chosen so far."""
    vertex: Vertex
    chosen: Tuple[int, ...]

    def __str__(self):
        return f"{self.vertex}#{'.'.join(map(str, self.chosen))}"


WAIT = "wait"

Order = Union[Sequence[int], Callable[[Vertex], Sequence[int]]]


def _check_order(order: Sequence[int], n: int) -> Tuple[int, ...]:
    order = tuple(order)
    if sorted(order) != list(range(1, n + 1)):
        raise GameError(f"{order} is not a permutation of players 1..{n}")
    return order


def turnify_round_robin(game: ConcurrentGame, order: Order) -> ConcurrentGame:
    """
    Split every concurrent step into N sequential moves.

    At a non-target vertex v the players move in `order` (a permutation of
    1..N, or a function giving one per vertex). Stage 1 is v itself; later
    stages are Stage(v, chosen) vertices. Players other than the mover play
    the extra "wait" action. Every weight is charged on the last stage edge;
    intermediate edges weigh 0. The result is turn-based, and it is
    action-visible iff the input is.
    """
    n = game.num_players
    if n == 1:
        return game
    order_of = order if callable(order) else (lambda _v, fixed=_check_order(order, n): fixed)
    wait_ids = tuple(len(game.action_names[p]) for p in range(n))
    names = tuple(tuple(game.action_names[p]) + (WAIT,) for p in range(n))
    zeros = (0,) * n
    moves: Dict[Vertex, Dict] = {}
    weights: Dict = {}
    vertices: List[Vertex] = []

    for v in game.vertices:
        vertices.append(v)
        if v in game.targets:
            moves[v] = dict(game.moves[v])
            weights[(v, v)] = game.weights[(v, v)]
            continue
        seq = _check_order(order_of(v), n)
        avail = [game.available(v, p) for p in range(1, n + 1)]
        frontier = [(v, ())]
        for k, mover in enumerate(seq):
            nxt = []
            for node, chosen in frontier:
                table = {}
                for a in avail[mover - 1]:
                    profile = list(wait_ids)
                    profile[mover - 1] = a
                    step = chosen + (a,)
                    if k == n - 1:
                        full = [0] * n
                        for p, act in zip(seq, step):
                            full[p - 1] = act
                        w = game.next(v, tuple(full))
                        weights[(node, w)] = game.weights[(v, w)]
                        table[tuple(profile)] = w
                    else:
                        child = Stage(v, step)
                        weights[(node, child)] = zeros
                        table[tuple(profile)] = child
                        vertices.append(child)
                        nxt.append((child, step))
                moves[node] = table
            frontier = nxt

    logger.debug("turnify_round_robin: %d -> %d vertices", len(game.vertices), len(vertices))
    return ConcurrentGame(
        num_players=n,
        vertices=tuple(vertices),
        targets=game.targets,
        moves=moves,
        weights=weights,
        action_names=names,
        initial=game.initial,
    )


def project_turnified_play(play: Sequence[Vertex]) -> FinitePlay:
    """Drop the intermediate stage vertices of a turnified play."""
    return tuple(v for v in play if not isinstance(v, Stage))


def origin(v: Vertex) -> Vertex:
    """The state of the source game a derived vertex stands for."""
    while True:
        if isinstance(v, Stage):
            v = v.vertex
        elif hasattr(v, "base"):
            v = v.base
        else:
            return v


def state_multiplicity(game: ConcurrentGame) -> int:
    """Largest number of extra copies of one source state among the vertices."""
    counts = Counter(origin(v) for v in game.vertices)
    return max(counts.values(), default=1) - 1


# ===== COALITION GAMES =====

@dataclass(frozen=True)
class Commit:
    """Coalition vertex after the coalition committed `joint` at `vertex`."""
    vertex: Vertex
    joint: Tuple[Optional[int], ...]

    def __str__(self):
        return f"{self.vertex}!{','.join('_' if a is None else str(a) for a in self.joint)}"


def coalition_arena(game: ConcurrentGame, player: int, root: Optional[Vertex] = None) -> ZeroSumGame:
    """
    Zero-sum arena of `player` (Min) against the coalition of the others (Max)
    over every vertex reachable from root (all vertices when root is None).

    The coalition commits its joint action first, then the player answers.
    When one side has a single choice at a vertex the commit stage is skipped
    and the other side owns the vertex directly. The answer edge carries the
    player's weight of the resulting edge; commit edges weigh 0.
    """
    game.check_player(player)
    k = player - 1
    others = [p for p in game.players if p != player]
    starts = list(game.vertices) if root is None else [root]
    labels: List[Hashable] = []
    owners: Dict[Hashable, str] = {}
    edges: Dict[Tuple[Hashable, Hashable], int] = {}
    seen = set()
    stack = list(reversed(starts))
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        labels.append(v)
        if v in game.targets:
            owners[v] = MIN
            continue
        joints = list(itertools.product(*(game.available(v, p) for p in others)))
        own = game.available(v, player)
        table = game.moves[v]
        fresh = []
        if len(joints) == 1 or len(own) == 1:
            owners[v] = MIN if len(joints) == 1 else MAX
            for profile, w in table.items():
                edges[(v, w)] = game.weights[(v, w)][k]
                fresh.append(w)
        else:
            owners[v] = MAX
            for joint in joints:
                jt = list(joint)
                jt.insert(k, None)
                node = Commit(v, tuple(jt))
                labels.append(node)
                owners[node] = MIN
                edges[(v, node)] = 0
                for a in own:
                    profile = tuple(a if i == k else jt[i] for i in range(game.num_players))
                    w = table[profile]
                    edges[(node, w)] = game.weights[(v, w)][k]
                    fresh.append(w)
        for w in reversed(fresh):
            if w not in seen:
                stack.append(w)
    first = starts[0] if starts else None
    return ZeroSumGame.build(labels, owners, edges, [t for t in labels if t in game.targets], first)


def coalition_game(game: ConcurrentGame, player: int, prefix: Sequence[Vertex]) -> ZeroSumGame:
    """
    The zero-sum game of `player` against the others after `prefix`.

    Values start fresh at the last vertex of prefix; the payoff accumulated
    along the prefix is accounted for separately by the caller.
    """
    game.check_player(player)
    if not is_action_visible(game):
        raise NotActionVisibleError("coalition games need an action-visible game")
    check_play(game, prefix)
    return coalition_arena(game, player, prefix[-1])
