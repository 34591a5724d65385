"""
Penalty mechanism and grid equilibria.

A global controller prescribes a play of the turnified billed game together
with a positional strategy profile. A house that departs from its
prescribed strategy pays a one-off surcharge on the edge of its first
departure; the surcharge is at least the bill the house can secure on its
own against the coalition of the others, so any deviation costs it at least
twice that bill. A negative floor is used as is and flagged.

Two prescriptions are offered:

- "heuristic": the outcome of the per-house bill-minimizing profile.
- "energy": the import-minimizing schedule with the best normalized bills,
  the behavior of a controller that keeps imported energy minimal.

Usage:
    eq = grid_equilibrium(inst, order_seed=7)
    eq.certificate.valid, eq.report.totals
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from mcrgames.config import BaseConfig
from mcrgames.errors import McrError, SolverError, StrategyError
from mcrgames.game_model import (
    POS_INF, ConcurrentGame, ExtCost, FinitePlay, PositionalStrategy, Strategy, Vertex,
    outcome, unique_profile,
)
from mcrgames.microgrid.billing import BillReport, bill_schedule
from mcrgames.microgrid.games import (
    TurnifiedGame, build_turnified_billed_game, optimal_coalition_schedule, play_of_schedule,
    schedule_of_play,
)
from mcrgames.microgrid.instance import GridInstance, Schedule
from mcrgames.nash import CoalitionOracle, NashCertificate, check_ne_outcome, coalition_profile
from mcrgames.transforms import MAX, coalition_arena, project_turnified_play, state_multiplicity

logger = logging.getLogger(__name__)

PRESCRIPTIONS = ("heuristic", "energy")


@dataclass(frozen=True)
class Flagged:
    """Vertex of a penalized game: base vertex and the players already flagged."""
    base: Vertex
    flags: FrozenSet[int]

    def __str__(self):
        if not self.flags:
            return str(self.base)
        return f"{self.base}^{','.join(map(str, sorted(self.flags)))}"


def penalize(game: ConcurrentGame, profile: Sequence[Strategy], surcharges: Sequence[int],
             track: Optional[Iterable[int]] = None) -> ConcurrentGame:
    """
    Augment a game with one deviated-flag per tracked player.

    A player with several available actions at v whose action differs from
    its strategy's choice at v gets its flag set on that edge and pays its
    surcharge there. Flags are never reset, so a player pays at most once.

    Args:
        game: Base game with an initial vertex.
        profile: Positional strategies, one per player.
        surcharges: Integer surcharge per player (game weight units).
        track: Players whose flags are kept (all by default).

    Raises:
        StrategyError: If a strategy is undefined at a reachable decision point.
    """
    tracked = frozenset(game.players if track is None else track)
    n = game.num_players
    start = Flagged(game.initial, frozenset())
    zeros = (0,) * n
    order: List[Flagged] = [start]
    seen = {start}
    moves: Dict[Vertex, Dict] = {}
    weights: Dict = {}
    i = 0
    while i < len(order):
        node = order[i]
        i += 1
        v = node.base
        if v in game.targets:
            moves[node] = {p: node for p in game.moves[v]}
            weights[(node, node)] = zeros
            continue
        prescribed = {}
        for p in tracked:
            if p in node.flags or len(game.available(v, p)) == 1:
                continue
            a = profile[p - 1].decide((v,))
            if a is None:
                raise StrategyError(f"strategy of player {p} undefined at {v!r}")
            prescribed[p] = a
        table = {}
        for prof, w in game.moves[v].items():
            newly = frozenset(p for p, a in prescribed.items() if prof[p - 1] != a)
            child = Flagged(w, node.flags | newly)
            table[prof] = child
            ws = list(game.weights[(v, w)])
            for p in newly:
                ws[p - 1] += surcharges[p - 1]
            weights[(node, child)] = tuple(ws)
            if child not in seen:
                seen.add(child)
                order.append(child)
        moves[node] = table
    logger.debug("penalize(track=%s): %d -> %d vertices", sorted(tracked), len(game.vertices), len(order))
    return ConcurrentGame(
        num_players=n,
        vertices=tuple(order),
        targets=frozenset(x for x in order if x.base in game.targets),
        moves=moves,
        weights=weights,
        action_names=game.action_names,
        initial=start,
    )


def build_penalized_game(turnified: TurnifiedGame, profile: Sequence[Strategy],
                         penalties: Sequence[Fraction], track: Optional[Iterable[int]] = None) -> ConcurrentGame:
    """Penalized turnified billed game; penalties are bills, scaled here."""
    scale = turnified.billed.scale
    scaled = []
    for p in penalties:
        x = Fraction(p) * scale
        if x.denominator != 1:
            raise McrError(f"penalty {p} is not a multiple of 1/{scale}")
        scaled.append(int(x))
    return penalize(turnified.game, profile, scaled, track)


def flag_free(play: Sequence[Vertex]) -> FinitePlay:
    return tuple(Flagged(v, frozenset()) for v in play)


def certify_penalized(game: ConcurrentGame, profile: Sequence[Strategy], surcharges: Sequence[int],
                      play: Sequence[Vertex], threads: int = 1) -> NashCertificate:
    """
    Deviation checks of a flag-free play in the penalized game.

    Player i's coalition values only depend on i's own flag, so each player
    is checked on the view tracking that flag alone and the checks are merged.
    """
    lifted = flag_free(play)

    def one(player: int) -> NashCertificate:
        view = penalize(game, profile, surcharges, track=[player])
        return check_ne_outcome(view, lifted, CoalitionOracle(view), players=[player])

    if threads > 1 and game.num_players > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, game.players))
    else:
        parts = [one(p) for p in game.players]
    checks = tuple(c for part in parts for c in part.checks)
    punishments = {}
    for part in parts:
        punishments.update(part.punishments)
    costs = tuple(parts[p - 1].costs[p - 1] for p in game.players)
    return NashCertificate(parts[0].play, costs, checks, all(p.reaches_target for p in parts),
                           punishments, tuple(profile))


def deviation_floor(penalized: ConcurrentGame, player: int) -> ExtCost:
    """
    Least cost the player can secure against the others when it has to
    depart from its prescribed strategy at least once. Targets reached with
    the player's flag unset count as +inf.
    """
    zs = coalition_arena(penalized, player, penalized.initial)
    try:
        order = list(nx.topological_sort(zs.graph()))
    except nx.NetworkXUnfeasible:
        raise SolverError("deviation floor needs an acyclic penalized game") from None
    inf = float("inf")
    val = [inf] * len(zs.vertices)
    for i in reversed(order):
        label = zs.vertices[i]
        if i in zs.targets:
            val[i] = 0 if player in label.flags else inf
            continue
        options = [w + val[j] for j, w in zs.succ[i]]
        val[i] = max(options) if zs.owners[i] == MAX else min(options)
    x = val[zs.initial]
    return POS_INF if x == inf else ExtCost(int(x))


# ===== PRESCRIPTIONS =====

def prescribed_energy_schedule(inst: GridInstance, turnified: TurnifiedGame,
                               reference: Optional[Schedule] = None) -> Schedule:
    """
    Among import-minimizing schedules, the one minimizing the sum over
    houses of bill / max(1, |reference bill|). Ties go to the lowest
    successor index.
    """
    billed = turnified.billed
    energy = billed.energy
    g = energy.game
    if reference is None:
        reference, _ = optimal_coalition_schedule(inst, energy)
    ref = bill_schedule(inst, reference).totals
    norm = tuple(max(Fraction(1), abs(r)) for r in ref)
    n = inst.num_houses
    best: Dict[Vertex, Tuple[int, Fraction]] = {}
    choice: Dict[Vertex, Vertex] = {}
    for v in reversed(g.vertices):
        if v in g.targets:
            best[v] = (0, Fraction(0))
            continue
        for w in g.successors(v):
            if w == v or w not in best:
                continue
            imp, bills = best[w]
            e = (v, w)
            key = (imp + energy.imported(e), bills + sum(billed.bills[e][k] / norm[k] for k in range(n)))
            if v not in best or key < best[v]:
                best[v] = key
                choice[v] = w
    if g.initial not in best:
        raise SolverError("no complete schedule in the pruned energy game")
    play = [g.initial]
    while play[-1] not in g.targets:
        play.append(choice[play[-1]])
    return schedule_of_play(energy, play)


def follow_play(game: ConcurrentGame, base: Sequence[PositionalStrategy],
                play: Sequence[Vertex]) -> Tuple[PositionalStrategy, ...]:
    """Positional profile equal to `base` except that it follows `play`."""
    choices = [dict(s.choices) for s in base]
    for u, w in zip(play, play[1:]):
        if u in game.targets:
            break
        prof = unique_profile(game, u, w)
        for p in game.players:
            if len(game.available(u, p)) > 1:
                choices[p - 1][u] = prof[p - 1]
    return tuple(PositionalStrategy(p, choices[p - 1]) for p in game.players)


# ===== GRID EQUILIBRIUM =====

@dataclass(frozen=True)
class GridEquilibrium:
    """
    A prescribed outcome of the turnified billed game with its penalties.

    Attributes:
        turnified: The game the equilibrium lives in.
        prescription: "energy" or "heuristic".
        schedule: The prescribed schedule.
        play: The prescribed play of the turnified game.
        profile: Positional profile whose outcome is play.
        floors: Per-house bill secured against the coalition.
        penalties: Per-house surcharge paid on a first deviation.
        unpenalized: Deviation checks in the game without penalties.
        certificate: Deviation checks in the penalized game.
        report: Bills of the schedule, with the penalties.
    """
    turnified: TurnifiedGame
    prescription: str
    schedule: Schedule
    play: FinitePlay
    profile: Tuple[PositionalStrategy, ...]
    floors: Tuple[Fraction, ...]
    penalties: Tuple[Fraction, ...]
    unpenalized: NashCertificate
    certificate: NashCertificate
    report: BillReport

    @property
    def instance(self) -> GridInstance:
        return self.turnified.instance

    @property
    def valid(self) -> bool:
        return self.certificate.valid

    @property
    def flags(self) -> Tuple[str, ...]:
        return self.certificate.flags


def _max_gaps(cert: NashCertificate, num_players: int) -> List[Optional[int]]:
    """Largest deviation gain per player; None for players with no deviation."""
    gaps: List[Optional[int]] = [None] * num_players
    for c in cert.checks:
        g = c.gap
        if not g.is_finite():
            raise SolverError(f"deviation gap {g} of player {c.deviation.player} is not finite")
        k = c.deviation.player - 1
        gaps[k] = int(g) if gaps[k] is None else max(gaps[k], int(g))
    return gaps


def grid_equilibrium(inst: GridInstance, order_seed: Optional[int] = None, prescription: str = "heuristic",
                     threads: int = BaseConfig.DEFAULT_THREADS,
                     turnified: Optional[TurnifiedGame] = None) -> GridEquilibrium:
    """
    Prescribe a play of the turnified billed game and the penalties that
    make it an equilibrium outcome.

    Steps: solve every house's coalition game (floor bills and the
    bill-minimizing profile), pick the prescribed play, measure how much
    each house could gain by deviating without penalties, set the surcharge
    to max(floor, gain), and check the play in the penalized game.

    Args:
        inst: A valid instance.
        order_seed: Seed of the per-slot house order (identity when None).
        prescription: "heuristic" (default) or "energy".
        threads: Worker cap for the per-house solves.
        turnified: Prebuilt turnified game for inst.
    """
    if prescription not in PRESCRIPTIONS:
        raise McrError(f"unknown prescription {prescription!r}")
    tg = turnified or build_turnified_billed_game(inst, order_seed)
    game = tg.game
    scale = tg.billed.scale
    oracle = CoalitionOracle(game, threads)
    oracle.prepare()
    floors_scaled = []
    for p in game.players:
        v = oracle.value_at(p, game.initial)
        if not v.is_finite():
            raise SolverError(f"house {inst.houses[p - 1]} floor bill is {v}")
        floors_scaled.append(int(v))
    sigma = coalition_profile(game, oracle)

    if prescription == "heuristic":
        out = outcome(game, game.initial, sigma, max(1, len(game.vertices) * (1 + state_multiplicity(game))))
        play = out.play
        schedule = schedule_of_play(tg.billed.energy, project_turnified_play(play))
    else:
        schedule = prescribed_energy_schedule(inst, tg)
        play = tg.lift_play(play_of_schedule(tg.billed.energy, schedule))
    profile = follow_play(game, sigma, play)

    unpenalized = check_ne_outcome(game, play, oracle)
    gaps = _max_gaps(unpenalized, inst.num_houses)
    surcharges = [f if g is None else max(f, g) for f, g in zip(floors_scaled, gaps)]
    flags = []
    for k, f in enumerate(floors_scaled):
        if f < 0:
            flags.append(f"floor_negative:{inst.houses[k]}")
            logger.warning("house %s secures a negative bill %s; penalty kept as is",
                           inst.houses[k], Fraction(f, scale))

    cert = certify_penalized(game, profile, surcharges, play, threads)
    cert = NashCertificate(cert.play, cert.costs, cert.checks, cert.reaches_target,
                           cert.punishments, profile, tuple(flags))
    penalties = tuple(Fraction(s, scale) for s in surcharges)
    floors = tuple(Fraction(f, scale) for f in floors_scaled)
    report = bill_schedule(inst, schedule, penalties)
    logger.debug("grid equilibrium (%s): %s, valid=%s", prescription, schedule.describe(), cert.valid)
    return GridEquilibrium(tg, prescription, schedule, tuple(play), profile, floors, penalties,
                           unpenalized, cert, report)
