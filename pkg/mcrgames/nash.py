"""
Pure Nash equilibria of MCR games.

In an action-visible game a play is the outcome of a Nash equilibrium iff,
for every player i and every i-deviation pi' of it (a prefix of the play
followed by one move where only i changed its action),

    cost_i(play) <= TP_i(pi') + value(G_{i,pi'})

where G_{i,pi'} is the coalition game of i against everybody else started
at the last vertex of pi'. check_ne_outcome evaluates exactly these checks;
construct_ne_heuristic builds a candidate play from the players' coalition
strategies; search_ne_outcome walks all candidate plays up to a horizon;
brute_force_ne enumerates strategy profiles and serves as the test oracle.

Usage:
    cert = check_ne_outcome(game, ("A", "C"))
    if not cert.valid:
        for check in cert.failing_checks: ...
"""
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from mcrgames.config import BaseConfig
from mcrgames.errors import (
    BudgetExceededError, GameError, NotActionVisibleError, NotTurnBasedError, PlayError,
)
from mcrgames.game_model import (
    POS_INF, ConcurrentGame, ExtCost, FinitePlay, Outcome, PositionalStrategy,
    TabularStrategy, Vertex, check_play, first_target_index, is_action_visible,
    is_turn_based, outcome, total_payoff, unique_profile,
)
from mcrgames.transforms import MAX, Commit, ZeroSumGame, coalition_arena, state_multiplicity
from mcrgames.zerosum_solver import ValueMap, solve

logger = logging.getLogger(__name__)


# ===== DATA STRUCTURES =====

@dataclass(frozen=True)
class Deviation:
    """
    One i-deviation of a play: at position `position` player i replaced
    `replaced_action` by `action`, leading to `new_vertex`.
    """
    player: int
    position: int
    replaced_action: int
    action: int
    new_vertex: Vertex
    prefix_play: FinitePlay


@dataclass(frozen=True)
class DeviationCheck:
    """lhs <= deviation_payoff + retaliation, evaluated for one deviation."""
    deviation: Deviation
    lhs: ExtCost
    deviation_payoff: ExtCost
    retaliation: ExtCost
    passed: bool

    @property
    def gap(self) -> ExtCost:
        """How much the deviation gains: lhs - (payoff + retaliation)."""
        return self.lhs - (self.deviation_payoff + self.retaliation)


@dataclass(frozen=True)
class PunishmentTable:
    """
    Positional coalition strategy against `player` after a deviation to
    `start`: for each coalition-controlled vertex, the joint action of the
    other players (None in the punished player's slot).
    """
    player: int
    start: Vertex
    actions: Mapping[Vertex, Tuple[Optional[int], ...]]


@dataclass(frozen=True)
class NashCertificate:
    """Outcome of the deviation checks for one play."""
    play: FinitePlay
    costs: Tuple[ExtCost, ...]
    checks: Tuple[DeviationCheck, ...]
    reaches_target: bool = True
    punishments: Mapping[Tuple[int, Vertex], PunishmentTable] = field(default_factory=dict)
    profile: Optional[Tuple] = None
    flags: Tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return self.reaches_target and all(c.passed for c in self.checks)

    @property
    def failing_checks(self) -> List[DeviationCheck]:
        return [c for c in self.checks if not c.passed]


@dataclass(frozen=True)
class HeuristicFailure:
    """Why no equilibrium outcome was produced, with the failing checks."""
    reason: str
    play: FinitePlay
    checks: Tuple[DeviationCheck, ...] = ()
    candidates: Tuple[NashCertificate, ...] = ()

    valid = False


NashResult = Union[NashCertificate, HeuristicFailure]


# ===== COALITION ORACLE =====

class CoalitionOracle:
    """
    Solves each player's coalition arena once and answers value and
    punishment queries for every vertex. The value of G_{i,pi'} only depends
    on the last vertex of pi', so one solve per player serves every check.
    """

    def __init__(self, game: ConcurrentGame, threads: int = 1):
        if not is_action_visible(game):
            raise NotActionVisibleError("coalition games need an action-visible game")
        self.game = game
        self.threads = max(1, threads)
        self._solutions: Dict[int, ValueMap] = {}

    def prepare(self, players: Optional[Iterable[int]] = None) -> None:
        """Solve the arenas of the given players (all by default), in parallel."""
        todo = [p for p in (players or self.game.players) if p not in self._solutions]
        if not todo:
            return
        if self.threads == 1 or len(todo) == 1:
            for p in todo:
                self.solution(p)
            return
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            solved = list(pool.map(self._solve, todo))
        for p, vm in zip(todo, solved):
            self._solutions[p] = vm

    def _solve(self, player: int) -> ValueMap:
        zs = coalition_arena(self.game, player)
        vm = solve(zs)
        logger.debug("coalition arena of player %d: %d vertices (%s)", player, len(zs), vm.method)
        return vm

    def solution(self, player: int) -> ValueMap:
        self.game.check_player(player)
        if player not in self._solutions:
            self._solutions[player] = self._solve(player)
        return self._solutions[player]

    def arena(self, player: int) -> ZeroSumGame:
        return self.solution(player).game

    def value_at(self, player: int, v: Vertex) -> ExtCost:
        return self.solution(player).value_of(v)

    def player_choice(self, player: int, v: Vertex) -> Optional[int]:
        """The player's own optimal action at v where it alone decides."""
        vm = self.solution(player)
        w = vm.choice_of(v)
        if w is None or isinstance(w, Commit) or vm.game.owners[vm.game.position(v)] == MAX:
            return None
        return unique_profile(self.game, v, w)[player - 1]

    def punishment(self, player: int, start: Vertex) -> PunishmentTable:
        """Coalition's optimal positional strategy from start."""
        vm = self.solution(player)
        zs = vm.game
        k = player - 1
        actions: Dict[Vertex, Tuple[Optional[int], ...]] = {}
        seen = {zs.position(start)}
        stack = [zs.position(start)]
        while stack:
            i = stack.pop()
            if i in zs.targets:
                continue
            if zs.owners[i] == MAX:
                nexts = [vm.choices[i]] if vm.choices[i] is not None else [j for j, _ in zs.succ[i]]
                v, w = zs.vertices[i], zs.vertices[nexts[0]]
                if isinstance(w, Commit):
                    actions[v] = w.joint
                else:
                    profile = list(unique_profile(self.game, v, w))
                    profile[k] = None
                    actions[v] = tuple(profile)
            else:
                nexts = [j for j, _ in zs.succ[i]]
            for j in nexts:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return PunishmentTable(player, start, actions)


# ===== DEVIATIONS =====

def _deviations(game: ConcurrentGame, play: FinitePlay, upto: int) -> List[Deviation]:
    out: List[Deviation] = []
    for pos in range(upto):
        v, w = play[pos], play[pos + 1]
        profile = unique_profile(game, v, w)
        for p in game.players:
            k = p - 1
            for a in game.available(v, p):
                if a == profile[k]:
                    continue
                alt = profile[:k] + (a,) + profile[k + 1:]
                v2 = game.next(v, alt)
                out.append(Deviation(p, pos, profile[k], a, v2, play[:pos + 1] + (v2,)))
    out.sort(key=lambda d: (d.player, d.position, d.action))
    return out


def enumerate_deviations(game: ConcurrentGame, play: Sequence[Vertex]) -> List[Deviation]:
    """
    All i-deviations of a target-reaching play, grouped by player.

    Raises:
        NotActionVisibleError: If the game is not action-visible.
        PlayError: If the play is invalid or never reaches a target.
    """
    if not is_action_visible(game):
        raise NotActionVisibleError("deviations are only observable in action-visible games")
    play = tuple(play)
    check_play(game, play)
    k = first_target_index(game, play)
    if k is None:
        raise PlayError("play never reaches a target")
    return _deviations(game, play[:k + 1], k)


def check_ne_outcome(game: ConcurrentGame, play: Sequence[Vertex],
                     oracle: Optional[CoalitionOracle] = None,
                     players: Optional[Iterable[int]] = None) -> NashCertificate:
    """
    Evaluate every deviation check of a play.

    A play that never reaches a target is treated as a truncation costing
    +inf for everybody; its checks are reported but its certificate is never
    valid. Plays are cut at their first target.

    Args:
        game: An action-visible game.
        play: The agreed play.
        oracle: Optional shared coalition oracle for the game.
        players: Restrict the checks to these players.

    Returns:
        NashCertificate: With punishment tables attached when valid.
    """
    if oracle is None:
        oracle = CoalitionOracle(game)
    elif oracle.game is not game:
        raise GameError("coalition oracle belongs to another game")
    play = tuple(play)
    check_play(game, play)
    k = first_target_index(game, play)
    if k is None:
        reaches, upto = False, len(play) - 1
        costs = tuple(POS_INF for _ in game.players)
    else:
        play = play[:k + 1]
        reaches, upto = True, k
        costs = tuple(ExtCost(total_payoff(game, p, play)) for p in game.players)
    wanted = set(players) if players is not None else set(game.players)
    oracle.prepare(sorted(wanted))

    checks = []
    for dev in _deviations(game, play, upto):
        if dev.player not in wanted:
            continue
        lhs = costs[dev.player - 1]
        payoff = ExtCost(total_payoff(game, dev.player, dev.prefix_play))
        retaliation = oracle.value_at(dev.player, dev.new_vertex)
        checks.append(DeviationCheck(dev, lhs, payoff, retaliation, lhs <= payoff + retaliation))

    punishments = {}
    if reaches and all(c.passed for c in checks):
        for c in checks:
            key = (c.deviation.player, c.deviation.new_vertex)
            if key not in punishments:
                punishments[key] = oracle.punishment(*key)
    cert = NashCertificate(play, costs, tuple(checks), reaches, punishments)
    logger.debug("check_ne_outcome: %d checks, valid=%s", len(checks), cert.valid)
    return cert


# ===== CONSTRUCTION =====

def coalition_profile(game: ConcurrentGame, oracle: CoalitionOracle) -> Tuple[PositionalStrategy, ...]:
    """
    Each player's positional strategy that is optimal against the coalition
    of the others, on a turn-based game.
    """
    owners = is_turn_based(game)
    if owners is None:
        raise NotTurnBasedError("the construction needs a turn-based game; turnify it first")
    oracle.prepare()
    choices: Dict[int, Dict[Vertex, int]] = {p: {} for p in game.players}
    for v, p in owners.items():
        if v in game.targets or len(game.available(v, p)) == 1:
            continue
        a = oracle.player_choice(p, v)
        choices[p][v] = game.available(v, p)[0] if a is None else a
    return tuple(PositionalStrategy(p, choices[p]) for p in game.players)


def construct_ne_heuristic(game: ConcurrentGame, start: Vertex,
                           oracle: Optional[CoalitionOracle] = None,
                           horizon: Optional[int] = None) -> NashResult:
    """
    Build an equilibrium outcome from the players' coalition strategies.

    Steps: solve every player's coalition game, play the resulting
    positional profile from start, check the outcome, attach the coalition's
    punishment strategies. The construction does not always succeed; the
    failure report carries the violated checks.

    Args:
        game: A turn-based, action-visible game.
        start: Initial vertex.
        oracle: Optional shared coalition oracle.
        horizon: Outcome length cap; defaults to |V| * (1 + m) with m the
            largest number of extra copies of a source state (stages of a
            turnified game, debts, penalty flags).
    """
    if not is_action_visible(game):
        raise NotActionVisibleError("the construction needs an action-visible game")
    game.check_vertex(start)
    oracle = oracle or CoalitionOracle(game)
    profile = coalition_profile(game, oracle)
    cap = horizon or max(1, len(game.vertices) * (1 + state_multiplicity(game)))
    out = outcome(game, start, profile, cap)
    cert = check_ne_outcome(game, out.play, oracle)
    if not out.reached:
        logger.info("heuristic outcome does not reach a target within %d steps", cap)
        return HeuristicFailure("outcome never reaches a target", out.play, tuple(cert.failing_checks))
    if not cert.valid:
        logger.info("heuristic outcome fails %d deviation checks", len(cert.failing_checks))
        return HeuristicFailure("deviation check failed", out.play, tuple(cert.failing_checks))
    return NashCertificate(cert.play, cert.costs, cert.checks, True, cert.punishments, profile)


def candidate_plays(game: ConcurrentGame, start: Vertex, horizon: int,
                    budget: int = BaseConfig.BRUTE_FORCE_BUDGET) -> List[FinitePlay]:
    """Target-reaching plays from start with at most `horizon` steps, depth-first."""
    out: List[FinitePlay] = []
    stack = [(start,)]
    while stack:
        play = stack.pop()
        v = play[-1]
        if v in game.targets:
            out.append(play)
            if len(out) > budget:
                raise BudgetExceededError(f"more than {budget} candidate plays", len(out), budget)
            continue
        if len(play) - 1 >= horizon:
            continue
        for w in reversed(game.successors(v)):
            stack.append(play + (w,))
    return out


def search_ne_outcome(game: ConcurrentGame, start: Vertex, horizon: int,
                      oracle: Optional[CoalitionOracle] = None) -> NashResult:
    """
    First target-reaching play within the horizon that passes every
    deviation check, or a failure listing each candidate's failing checks.
    """
    oracle = oracle or CoalitionOracle(game)
    failed = []
    for play in candidate_plays(game, start, horizon):
        cert = check_ne_outcome(game, play, oracle)
        if cert.valid:
            return cert
        failed.append(cert)
    return HeuristicFailure(
        f"no target-reaching play within {horizon} steps is an equilibrium outcome",
        (start,),
        tuple(c for cert in failed for c in cert.failing_checks),
        tuple(failed),
    )


# ===== BRUTE FORCE ORACLE =====

@dataclass(frozen=True)
class BruteForceEquilibrium:
    """A pure equilibrium of the horizon-unrolled game."""
    strategies: Tuple[TabularStrategy, ...]
    outcome: Outcome
    costs: Tuple[ExtCost, ...]


def _unroll(game: ConcurrentGame, start: Vertex, horizon: int):
    """History tree: per node its history and its children by profile."""
    histories: List[FinitePlay] = [(start,)]
    children: List[Dict[Tuple[int, ...], int]] = []
    i = 0
    while i < len(histories):
        h = histories[i]
        kids = {}
        if h[-1] not in game.targets and len(h) - 1 < horizon:
            for profile, w in sorted(game.moves[h[-1]].items()):
                kids[profile] = len(histories)
                histories.append(h + (w,))
        children.append(kids)
        i += 1
    return histories, children


def brute_force_ne(game: ConcurrentGame, start: Vertex, horizon: int,
                   budget: int = BaseConfig.BRUTE_FORCE_BUDGET) -> List[BruteForceEquilibrium]:
    """
    Enumerate every pure strategy profile of the game unrolled into its
    history tree up to `horizon` steps and keep the equilibria. Plays that
    have not reached a target at the horizon cost +inf.

    Raises:
        BudgetExceededError: If the number of profiles exceeds budget.
    """
    game.check_vertex(start)
    histories, children = _unroll(game, start, horizon)
    n = game.num_players
    slots = []
    for node, kids in enumerate(children):
        if not kids:
            continue
        v = histories[node][-1]
        for p in game.players:
            if len(game.available(v, p)) > 1:
                slots.append((node, p))
    count = 1
    for node, p in slots:
        count *= len(game.available(histories[node][-1], p))
        if count > budget:
            raise BudgetExceededError(f"more than {budget} strategy profiles", count, budget)
    slot_index = {s: i for i, s in enumerate(slots)}
    options = [game.available(histories[node][-1], p) for node, p in slots]
    fixed = {
        (node, p): game.available(histories[node][-1], p)[0]
        for node, kids in enumerate(children) if kids
        for p in game.players if (node, p) not in slot_index
    }
    weights = game.weights

    def action(choice, node, p):
        i = slot_index.get((node, p))
        return fixed[(node, p)] if i is None else choice[i]

    def path_costs(choice):
        node, total = 0, [0] * n
        while children[node]:
            profile = tuple(action(choice, node, p) for p in game.players)
            nxt = children[node][profile]
            ws = weights[(histories[node][-1], histories[nxt][-1])]
            for k in range(n):
                total[k] += ws[k]
            node = nxt
        if histories[node][-1] not in game.targets:
            return node, [math.inf] * n
        return node, total

    def best_response(choice, p):
        k = p - 1
        memo: Dict[int, float] = {}
        for node in range(len(histories) - 1, -1, -1):
            kids = children[node]
            if not kids:
                memo[node] = 0 if histories[node][-1] in game.targets else math.inf
                continue
            v = histories[node][-1]
            base = [action(choice, node, q) for q in game.players]
            best = math.inf
            for a in game.available(v, p):
                base[k] = a
                child = kids[tuple(base)]
                sub = memo[child]
                if sub != math.inf:
                    best = min(best, weights[(v, histories[child][-1])][k] + sub)
            memo[node] = best
        return memo[0]

    found = []
    for choice in itertools.product(*options):
        leaf, costs = path_costs(choice)
        if all(costs[p - 1] <= best_response(choice, p) for p in game.players):
            strategies = []
            for p in game.players:
                table = {histories[node]: choice[i] for (node, q), i in slot_index.items() if q == p}
                strategies.append(TabularStrategy(p, table))
            found.append(BruteForceEquilibrium(
                tuple(strategies),
                Outcome(histories[leaf], histories[leaf][-1] in game.targets),
                tuple(POS_INF if c == math.inf else ExtCost(c) for c in costs),
            ))
    logger.debug("brute_force_ne: %d profiles, %d equilibria", count, len(found))
    return found
