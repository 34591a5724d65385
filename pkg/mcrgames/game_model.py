"""
Concurrent multi-player min-cost reachability (MCR) games.

A game is a finite graph whose vertices are controlled jointly: at every
vertex each player picks an action, and the action profile determines the
successor. Every player owns an integer weight function on the edges and
wants to reach a target while paying as little as possible.

This module holds the structure (ConcurrentGame), its well-formedness rules
(validate_game), plays and their payoffs, strategies and the outcome of a
strategy profile, plus the structural predicates used by the equilibrium
machinery (turn-based ownership, action visibility).

Usage:
    game = ConcurrentGame.build(
        num_players=1,
        moves={"v": {(0,): "t"}},
        weights={("v", "t"): (5,)},
        targets={"t"},
    )
    total_payoff(game, 1, ("v", "t"))   # 5
"""
import itertools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from functools import total_ordering
from typing import (
    Dict, FrozenSet, Hashable, Iterable, Iterator, List, Mapping, Optional,
    Sequence, Tuple, Union,
)

from mcrgames.errors import ExtCostError, GameError, PlayError, StrategyError

logger = logging.getLogger(__name__)

Vertex = Hashable
Profile = Tuple[int, ...]
Edge = Tuple[Vertex, Vertex]
FinitePlay = Tuple[Vertex, ...]


# ===== EXTENDED COSTS =====

@total_ordering
class ExtCost:
    """
    An integer extended with +inf and -inf.

    Addition is total except for (+inf) + (-inf), which raises ExtCostError.
    Values compare with each other and with plain integers.
    """

    __slots__ = ("_v",)

    def __init__(self, value: Union[int, float, "ExtCost"]):
        if isinstance(value, ExtCost):
            value = value._v
        if isinstance(value, float):
            if value == math.inf or value == -math.inf:
                self._v = value
                return
            if not value.is_integer():
                raise ValueError(f"ExtCost needs an integer, got {value!r}")
            value = int(value)
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"ExtCost needs an integer, got {type(value).__name__}")
        self._v = value

    # --- classification ---

    @property
    def raw(self) -> Union[int, float]:
        """The integer value, or +/- math.inf."""
        return self._v

    def is_finite(self) -> bool:
        return not isinstance(self._v, float)

    def is_pos_inf(self) -> bool:
        return self._v == math.inf

    def is_neg_inf(self) -> bool:
        return self._v == -math.inf

    def __int__(self) -> int:
        if not self.is_finite():
            raise ExtCostError(f"{self} has no integer value")
        return self._v

    # --- arithmetic ---

    def __add__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            other = ExtCost(other)
        if not isinstance(other, ExtCost):
            return NotImplemented
        a, b = self._v, other._v
        if (a == math.inf and b == -math.inf) or (a == -math.inf and b == math.inf):
            raise ExtCostError("(+inf) + (-inf) is undefined")
        return ExtCost(a + b)

    __radd__ = __add__

    def __neg__(self):
        return ExtCost(-self._v)

    def __sub__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            other = ExtCost(other)
        if not isinstance(other, ExtCost):
            return NotImplemented
        return self + (-other)

    # --- ordering ---

    def _coerce(self, other):
        if isinstance(other, ExtCost):
            return other._v
        if isinstance(other, int) and not isinstance(other, bool):
            return other
        return None

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._v == o

    def __lt__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._v < o

    def __hash__(self):
        return hash(self._v)

    # --- presentation ---

    def __str__(self):
        if self._v == math.inf:
            return "+inf"
        if self._v == -math.inf:
            return "-inf"
        return str(self._v)

    def __repr__(self):
        return f"ExtCost({self})"

    def to_json(self) -> Union[int, str]:
        return self._v if self.is_finite() else str(self)

    @classmethod
    def from_json(cls, value: Union[int, str]) -> "ExtCost":
        if value == "+inf":
            return POS_INF
        if value == "-inf":
            return NEG_INF
        if isinstance(value, int) and not isinstance(value, bool):
            return cls(value)
        raise ValueError(f"not an extended cost: {value!r}")


POS_INF = ExtCost(math.inf)
NEG_INF = ExtCost(-math.inf)


# ===== GAME STRUCTURE =====

@dataclass(frozen=True)
class Violation:
    """One broken well-formedness rule, e.g. Violation("DeadlockAt", "v", ...)."""
    rule: str
    subject: str
    message: str

    def __str__(self):
        return f"{self.rule}({self.subject}): {self.message}"


@dataclass(frozen=True)
class ConcurrentGame:
    """
    A concurrent N-player MCR game.

    Attributes:
        num_players: Number of players N >= 1; players are numbered 1..N.
        vertices: Ordered vertices; the position of a vertex is its index and
            drives every deterministic tie-break.
        targets: Target vertices.
        moves: For each vertex, the enabled action profiles and their successor.
            The enabled profiles of a vertex form the product of the players'
            available actions there.
        weights: For each edge (v, w), one integer weight per player.
        action_names: Per-player symbol table; action ids index into it.
        initial: Optional designated initial vertex.
    """
    num_players: int
    vertices: Tuple[Vertex, ...]
    targets: FrozenSet[Vertex]
    moves: Mapping[Vertex, Mapping[Profile, Vertex]]
    weights: Mapping[Edge, Tuple[int, ...]]
    action_names: Tuple[Tuple[str, ...], ...] = ()
    initial: Optional[Vertex] = None

    _index: Dict[Vertex, int] = field(init=False, repr=False, compare=False)
    _succ: Dict[Vertex, Tuple[Vertex, ...]] = field(init=False, repr=False, compare=False)
    _avail: Dict[Vertex, Tuple[Tuple[int, ...], ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for i, v in enumerate(self.vertices):
            index.setdefault(v, i)
        succ: Dict[Vertex, set] = {v: set() for v in self.vertices}
        for (u, w) in self.weights:
            succ.setdefault(u, set()).add(w)
        ordered = {
            v: tuple(sorted(ws, key=lambda w: index.get(w, len(index))))
            for v, ws in succ.items()
        }
        avail = {}
        for v in self.vertices:
            per_player = [set() for _ in range(max(self.num_players, 0))]
            for profile in self.moves.get(v, {}):
                for p, a in enumerate(profile[:len(per_player)]):
                    per_player[p].add(a)
            avail[v] = tuple(tuple(sorted(s)) for s in per_player)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_succ", ordered)
        object.__setattr__(self, "_avail", avail)

    @classmethod
    def build(
        cls,
        num_players: int,
        moves: Mapping[Vertex, Mapping[Profile, Vertex]],
        weights: Mapping[Edge, Sequence[int]],
        targets: Iterable[Vertex],
        action_names: Optional[Sequence[Sequence[str]]] = None,
        initial: Optional[Vertex] = None,
        vertices: Optional[Sequence[Vertex]] = None,
        normalize: bool = True,
    ) -> "ConcurrentGame":
        """
        Assemble a game from plain mappings.

        Args:
            num_players: Number of players.
            moves: vertex -> {profile: successor}.
            weights: (v, w) -> per-player weights.
            targets: Target vertices.
            action_names: Optional per-player symbol tables; inferred as
                "0", "1", ... from the largest id used otherwise.
            initial: Optional initial vertex.
            vertices: Optional vertex order; defaults to first appearance.
            normalize: Give every target a single zero-weight self-loop.

        Returns:
            ConcurrentGame: The assembled game (not validated).
        """
        if vertices is None:
            seen: Dict[Vertex, None] = {}
            if initial is not None:
                seen[initial] = None
            for v, table in moves.items():
                seen.setdefault(v, None)
                for w in table.values():
                    seen.setdefault(w, None)
            for (u, w) in weights:
                seen.setdefault(u, None)
                seen.setdefault(w, None)
            for t in targets:
                seen.setdefault(t, None)
            vertices = tuple(seen)
        if action_names is None:
            sizes = [1] * num_players
            for table in moves.values():
                for profile in table:
                    for p, a in enumerate(profile[:num_players]):
                        sizes[p] = max(sizes[p], a + 1)
            action_names = tuple(tuple(str(a) for a in range(n)) for n in sizes)
        game = cls(
            num_players=num_players,
            vertices=tuple(vertices),
            targets=frozenset(targets),
            moves={v: dict(t) for v, t in moves.items()},
            weights={e: tuple(w) for e, w in weights.items()},
            action_names=tuple(tuple(names) for names in action_names),
            initial=initial,
        )
        return normalize_targets(game) if normalize else game

    # --- lookups ---

    @property
    def players(self) -> range:
        return range(1, self.num_players + 1)

    def check_player(self, player: int) -> None:
        if not isinstance(player, int) or not 1 <= player <= self.num_players:
            raise GameError(f"unknown player {player!r} (game has {self.num_players})")

    def check_vertex(self, v: Vertex) -> None:
        if v not in self._index:
            raise GameError(f"unknown vertex {v!r}")

    def index(self, v: Vertex) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise GameError(f"unknown vertex {v!r}") from None

    def __contains__(self, v) -> bool:
        return v in self._index

    def is_target(self, v: Vertex) -> bool:
        return v in self.targets

    def successors(self, v: Vertex) -> Tuple[Vertex, ...]:
        """Successors of v along edges, in vertex-index order."""
        return self._succ.get(v, ())

    def has_edge(self, v: Vertex, w: Vertex) -> bool:
        return (v, w) in self.weights

    def weight(self, player: int, v: Vertex, w: Vertex) -> int:
        return self.weights[(v, w)][player - 1]

    def available(self, v: Vertex, player: int) -> Tuple[int, ...]:
        """Actions of player available at v, sorted by id."""
        return self._avail[v][player - 1]

    def profiles(self, v: Vertex) -> Iterator[Profile]:
        """Enabled profiles at v in lexicographic order."""
        return iter(sorted(self.moves.get(v, {})))

    def next(self, v: Vertex, profile: Profile) -> Vertex:
        try:
            return self.moves[v][tuple(profile)]
        except KeyError:
            raise GameError(f"profile {tuple(profile)} is not enabled at {v!r}") from None

    def profiles_to(self, v: Vertex, w: Vertex) -> List[Profile]:
        """All enabled profiles at v leading to w."""
        return sorted(p for p, succ in self.moves.get(v, {}).items() if succ == w)

    def action_name(self, player: int, action: int) -> str:
        names = self.action_names[player - 1] if self.action_names else ()
        return names[action] if action < len(names) else str(action)

    def max_abs_weight(self, player: Optional[int] = None) -> int:
        best = 0
        for ws in self.weights.values():
            vals = ws if player is None else (ws[player - 1],)
            for x in vals:
                best = max(best, abs(x))
        return best

    def with_initial(self, initial: Vertex) -> "ConcurrentGame":
        self.check_vertex(initial)
        return replace(self, initial=initial)

    def reachable(self, start: Vertex) -> List[Vertex]:
        """Vertices reachable from start, in breadth-first discovery order."""
        self.check_vertex(start)
        seen = {start}
        order = [start]
        i = 0
        while i < len(order):
            for w in self.successors(order[i]):
                if w not in seen:
                    seen.add(w)
                    order.append(w)
            i += 1
        return order


def normalize_targets(game: ConcurrentGame) -> ConcurrentGame:
    """
    Give every target exactly one outgoing edge: a self-loop weighing 0 for
    every player, enabled by the all-zero profile.
    """
    zero_profile = (0,) * game.num_players
    zeros = (0,) * game.num_players
    moves = dict(game.moves)
    weights = {e: w for e, w in game.weights.items() if e[0] not in game.targets}
    for t in game.targets:
        moves[t] = {zero_profile: t}
        weights[(t, t)] = zeros
    return replace(game, moves=moves, weights=weights)


def validate_game(game: ConcurrentGame) -> List[Violation]:
    """
    Check the well-formedness rules of a game.

    Rules: players exist, vertices are unique, every referenced vertex is
    declared, no vertex deadlocks, every profile is well-typed and the enabled
    profiles of a vertex form a product, Next stays on edges, targets carry a
    single zero self-loop, and weights are defined exactly on the edges with
    one entry per player.

    Returns:
        list[Violation]: Empty iff the game is well-formed.
    """
    out: List[Violation] = []
    n = game.num_players
    if n < 1:
        return [Violation("NoPlayers", "game", f"need at least one player, got {n}")]

    seen = set()
    for v in game.vertices:
        if v in seen:
            out.append(Violation("DuplicateVertex", str(v), "vertex declared twice"))
        seen.add(v)

    if game.action_names and len(game.action_names) != n:
        out.append(Violation("ActionTableArity", "game",
                             f"{len(game.action_names)} action tables for {n} players"))
    if game.initial is not None and game.initial not in seen:
        out.append(Violation("UnknownVertex", str(game.initial), "initial vertex is not declared"))
    for t in sorted(game.targets, key=str):
        if t not in seen:
            out.append(Violation("UnknownVertex", str(t), "target is not declared"))
    for v in game.moves:
        if v not in seen:
            out.append(Violation("UnknownVertex", str(v), "transition table for undeclared vertex"))

    for (u, w), ws in game.weights.items():
        for x in (u, w):
            if x not in seen:
                out.append(Violation("UnknownVertex", str(x), f"edge {u}->{w} uses undeclared vertex"))
        if len(ws) != n:
            out.append(Violation("WeightArity", f"{u}->{w}", f"{len(ws)} weights for {n} players"))

    used_edges = set()
    for v in game.vertices:
        table = game.moves.get(v, {})
        if not table or not game.successors(v):
            out.append(Violation("DeadlockAt", str(v), "vertex has no outgoing move"))
            continue
        bad_profile = False
        for profile, w in table.items():
            if len(profile) != n:
                out.append(Violation("ProfileArity", str(v), f"profile {profile} has {len(profile)} actions"))
                bad_profile = True
                continue
            for p, a in enumerate(profile):
                names = game.action_names[p] if p < len(game.action_names) else None
                if a < 0 or (names is not None and a >= len(names)):
                    out.append(Violation("UnknownAction", str(v), f"player {p + 1} action id {a} out of range"))
                    bad_profile = True
            if (v, w) not in game.weights:
                label = ",".join(game.action_name(p + 1, a) for p, a in enumerate(profile))
                out.append(Violation("NextOffEdge", f"{v},({label})", f"successor {w} is not an edge of {v}"))
            used_edges.add((v, w))
        if not bad_profile:
            product = set(itertools.product(*(game.available(v, p) for p in game.players)))
            if product != set(table):
                out.append(Violation("ProfilesNotProduct", str(v),
                                     "enabled profiles are not the product of available actions"))

    for t in sorted(game.targets, key=str):
        if t not in seen:
            continue
        outs = game.successors(t)
        if outs != (t,):
            out.append(Violation("TargetNotNormalized", str(t), "target must have its self-loop as only edge"))
        elif any(game.weights[(t, t)]):
            out.append(Violation("TargetNotNormalized", str(t), "target self-loop must weigh 0"))
    logger.debug("validate_game: %d violations", len(out))
    return out


# ===== PLAYS AND PAYOFFS =====

@dataclass(frozen=True)
class Lasso:
    """
    An eventually periodic infinite play: prefix followed by cycle repeated
    forever. The prefix may be empty; the cycle may not.
    """
    prefix: FinitePlay
    cycle: FinitePlay

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "cycle", tuple(self.cycle))
        if not self.cycle:
            raise PlayError("lasso cycle must be non-empty")

    def unroll(self, length: int) -> FinitePlay:
        """The first `length` vertices of the infinite play."""
        out = list(self.prefix[:length])
        k = 0
        while len(out) < length:
            out.append(self.cycle[k % len(self.cycle)])
            k += 1
        return tuple(out)

    def check(self, game: ConcurrentGame) -> None:
        check_play(game, self.prefix + self.cycle + self.cycle[:1])


Play = Union[FinitePlay, Lasso]


def check_play(game: ConcurrentGame, play: Sequence[Vertex]) -> None:
    """Raise PlayError unless play is a non-empty path of game."""
    if not play:
        raise PlayError("a play needs at least one vertex")
    for v in play:
        if v not in game:
            raise PlayError(f"unknown vertex {v!r} in play")
    for u, w in zip(play, play[1:]):
        if not game.has_edge(u, w):
            raise PlayError(f"{u!r} -> {w!r} is not an edge")


def total_payoff(game: ConcurrentGame, player: int, play: Sequence[Vertex]) -> int:
    """
    Sum of the player's weights along a finite play.

    Args:
        game: The game.
        player: Player index in 1..N.
        play: A finite play (non-empty sequence of vertices).

    Returns:
        int: The total payoff; 0 for a single-vertex play.
    """
    game.check_player(player)
    check_play(game, play)
    k = player - 1
    return sum(game.weights[(u, w)][k] for u, w in zip(play, play[1:]))


def first_target_index(game: ConcurrentGame, play: Sequence[Vertex]) -> Optional[int]:
    for i, v in enumerate(play):
        if v in game.targets:
            return i
    return None


def cost_of_play(game: ConcurrentGame, player: int, play: Play) -> ExtCost:
    """
    Cost of a play for a player: the total payoff up to the first target,
    or +inf when no target is visited.
    """
    game.check_player(player)
    if isinstance(play, Lasso):
        play.check(game)
        seq = play.prefix + play.cycle
    else:
        seq = tuple(play)
        check_play(game, seq)
    k = first_target_index(game, seq)
    if k is None:
        return POS_INF
    return ExtCost(total_payoff(game, player, seq[:k + 1]))


# ===== STRATEGIES =====

class Strategy(ABC):
    """A strategy of one player: maps histories to actions."""

    player: int

    @abstractmethod
    def decide(self, history: FinitePlay) -> Optional[int]:
        """Action for the history, or None when undefined."""

    def act(self, game: ConcurrentGame, history: FinitePlay) -> int:
        """
        Legal action at the last vertex of history. A player with a single
        available action needs no decision there.
        """
        v = history[-1]
        avail = game.available(v, self.player)
        if len(avail) == 1:
            return avail[0]
        a = self.decide(history)
        if a is None:
            raise StrategyError(f"strategy of player {self.player} undefined at {v!r}")
        if a not in avail:
            raise StrategyError(f"action {a} of player {self.player} is not available at {v!r}")
        return a


@dataclass(frozen=True)
class PositionalStrategy(Strategy):
    """Decides from the current vertex only."""
    player: int
    choices: Mapping[Vertex, int]

    def decide(self, history):
        return self.choices.get(history[-1])


@dataclass(frozen=True)
class TabularStrategy(Strategy):
    """
    Decides from a table keyed by whole histories, falling back to a
    per-vertex default action.
    """
    player: int
    table: Mapping[FinitePlay, int]
    default: Mapping[Vertex, int] = field(default_factory=dict)

    def decide(self, history):
        a = self.table.get(tuple(history))
        if a is None:
            a = self.default.get(history[-1])
        return a


StrategyProfile = Tuple[Strategy, ...]


def check_profile(game: ConcurrentGame, profile: Sequence[Strategy]) -> None:
    if len(profile) != game.num_players:
        raise StrategyError(f"profile has {len(profile)} strategies for {game.num_players} players")
    for i, s in enumerate(profile, start=1):
        if s.player != i:
            raise StrategyError(f"strategy at position {i} belongs to player {s.player}")


def loop_strategy(game: ConcurrentGame, player: int, vertex: Vertex,
                  loop_action: int, exit_action: int, n: int) -> TabularStrategy:
    """
    Take the loop at `vertex` n-1 times, then leave through exit_action.
    """
    if n < 1:
        raise StrategyError("loop count must be at least 1")
    table = {(vertex,) * k: loop_action for k in range(1, n)}
    return TabularStrategy(player, table, {vertex: exit_action})


@dataclass(frozen=True)
class Outcome:
    """Play prefix produced by a profile and whether a target was reached."""
    play: FinitePlay
    reached: bool

    def cost(self, game: ConcurrentGame, player: int) -> ExtCost:
        return cost_of_play(game, player, self.play) if self.reached else POS_INF


def decide_profile(game: ConcurrentGame, profile: Sequence[Strategy], history: FinitePlay) -> Profile:
    return tuple(s.act(game, history) for s in profile)


def outcome(game: ConcurrentGame, start: Vertex, profile: Sequence[Strategy], horizon: int) -> Outcome:
    """
    Unfold a strategy profile from start.

    Args:
        game: The game.
        start: Starting vertex.
        profile: One strategy per player, in player order.
        horizon: Maximum number of steps (>= 1).

    Returns:
        Outcome: Stops at the first target (reached) or after `horizon`
        steps (not reached).
    """
    if horizon < 1:
        raise GameError(f"horizon must be at least 1, got {horizon}")
    game.check_vertex(start)
    check_profile(game, profile)
    play = [start]
    while True:
        v = play[-1]
        if v in game.targets:
            return Outcome(tuple(play), True)
        if len(play) - 1 >= horizon:
            return Outcome(tuple(play), False)
        play.append(game.next(v, decide_profile(game, profile, tuple(play))))


# ===== STRUCTURAL PREDICATES =====

def owner_of(game: ConcurrentGame, v: Vertex) -> Optional[int]:
    """Lowest player whose action alone fixes the successor of v, if any."""
    table = game.moves.get(v, {})
    for p in range(game.num_players):
        by_action: Dict[int, Vertex] = {}
        for profile, w in table.items():
            prev = by_action.setdefault(profile[p], w)
            if prev != w:
                break
        else:
            return p + 1
    return None


def is_turn_based(game: ConcurrentGame) -> Optional[Dict[Vertex, int]]:
    """
    Owner map of a turn-based game, or None when some vertex has no owner.
    """
    owners = {}
    for v in game.vertices:
        o = owner_of(game, v)
        if o is None:
            return None
        owners[v] = o
    return owners


def is_action_visible(game: ConcurrentGame) -> bool:
    """True iff at every vertex distinct profiles lead to distinct successors."""
    for v in game.vertices:
        table = game.moves.get(v, {})
        if len(set(table.values())) != len(table):
            return False
    return True


def unique_profile(game: ConcurrentGame, v: Vertex, w: Vertex) -> Profile:
    """The single profile leading from v to w in an action-visible game."""
    found = game.profiles_to(v, w)
    if len(found) != 1:
        raise PlayError(f"{len(found)} profiles lead from {v!r} to {w!r}")
    return found[0]
