"""
Games of the micro-grid case study.

- Energy game: vertices (d, p) with p the tasks already performed per
  house; in slot d every house starts a subset of its eligible tasks and
  the play moves to (d + 1, p updated). House weights are the energy it
  consumes minus the production; the auxiliary global weight is
  min(0, N * prod(d) - consumption), so its negation is the imported energy.
- Billed game: same arena, house weights are the slot bills scaled to
  integers.
- Turnified billed game: every slot split into one move per house, in an
  order drawn per vertex from a seeded generator.

Usage:
    energy = build_energy_game(inst)
    schedule, e_min = optimal_coalition_schedule(inst)
    turnified = build_turnified_billed_game(inst, order_seed=7)
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from mcrgames.config import BaseConfig
from mcrgames.errors import BudgetExceededError, ScheduleError, UnschedulableError
from mcrgames.game_model import ConcurrentGame, Edge, FinitePlay, Vertex, unique_profile
from mcrgames.microgrid.billing import slot_bill
from mcrgames.microgrid.instance import GridInstance, Schedule
from mcrgames.transforms import MIN, Stage, ZeroSumGame, project_turnified_play, turnify_round_robin
from mcrgames.zerosum_solver import solve

logger = logging.getLogger(__name__)

IDLE = "-"


@dataclass(frozen=True)
class GridState:
    """Slot about to be played and the tasks already performed per house."""
    slot: int
    done: Tuple[FrozenSet[str], ...]

    def __str__(self):
        parts = ["+".join(sorted(ts)) or IDLE for ts in self.done]
        return f"d{self.slot}|{'|'.join(parts)}"


@dataclass(frozen=True)
class DayOver:
    """Absorbing state of plays that end the day with tasks still pending."""
    slot: int

    def __str__(self):
        return "day-over"


def subset_name(tasks: Sequence[str]) -> str:
    return "+".join(sorted(tasks)) or IDLE


def house_action_table(inst: GridInstance, house: str) -> Tuple[FrozenSet[str], ...]:
    """All subsets of a house's tasks, by size then by sorted ids."""
    ids = sorted(t.id for t in inst.tasks_of(house))
    subsets = [frozenset(c) for r in range(len(ids) + 1) for c in itertools.combinations(ids, r)]
    return tuple(subsets)


@dataclass(frozen=True)
class EnergyGame:
    """
    The energy game with its auxiliary data.

    Attributes:
        instance: The instance it was built from.
        game: The concurrent game (initial vertex set).
        global_weights: Edge -> min(0, N * prod(d) - consumption).
        new_tasks: Edge -> per-house tasks started along it.
        actions: Per-house action tables (subsets).
    """
    instance: GridInstance
    game: ConcurrentGame
    global_weights: Mapping[Edge, int]
    new_tasks: Mapping[Edge, Tuple[FrozenSet[str], ...]]
    actions: Tuple[Tuple[FrozenSet[str], ...], ...]

    def imported(self, edge: Edge) -> int:
        return -self.global_weights[edge]


def build_energy_game(inst: GridInstance, prune_deadlines: bool = False,
                      max_vertices: int = BaseConfig.MAX_GRID_VERTICES) -> EnergyGame:
    """
    Build the energy game reachable from (1, nothing performed).

    Args:
        inst: A valid instance.
        prune_deadlines: Force every task to be performed at the last slot
            of its interval at the latest.
        max_vertices: Enumeration budget.

    Returns:
        EnergyGame: Action-visible, and acyclic apart from the absorbing
        vertices. Every play ending the day with tasks left enters a single
        non-target sink (cost +inf).
    """
    inst.validate()
    n = inst.num_houses
    tables = tuple(house_action_table(inst, h) for h in inst.houses)
    ids = tuple({s: a for a, s in enumerate(table)} for table in tables)
    all_tasks = frozenset(t.id for t in inst.tasks)
    zeros = (0,) * n
    sink = DayOver(inst.slots + 1)

    start = GridState(1, tuple(frozenset() for _ in inst.houses))
    order: List[Vertex] = [start]
    seen = {start}
    moves: Dict[Vertex, Dict] = {}
    weights: Dict[Edge, Tuple[int, ...]] = {}
    global_w: Dict[Edge, int] = {}
    new_tasks: Dict[Edge, Tuple[FrozenSet[str], ...]] = {}
    targets = set()
    i = 0
    while i < len(order):
        state = order[i]
        i += 1
        d = state.slot
        if frozenset().union(*state.done) == all_tasks:
            targets.add(state)
            moves[state] = {zeros: state}
            weights[(state, state)] = zeros
            continue
        options = []
        for k, h in enumerate(inst.houses):
            eligible = sorted(t.id for t in inst.tasks_of(h) if t.eligible(d) and t.id not in state.done[k])
            forced = {t.id for t in inst.tasks_of(h) if t.end == d and t.id not in state.done[k]} if prune_deadlines else set()
            subs = [frozenset(c) for r in range(len(eligible) + 1) for c in itertools.combinations(eligible, r)]
            options.append([s for s in subs if forced <= s])
        prod = inst.prod(d)
        table = {}
        for combo in itertools.product(*options):
            profile = tuple(ids[k][s] for k, s in enumerate(combo))
            succ = GridState(d + 1, tuple(state.done[k] | combo[k] for k in range(n)))
            if d == inst.slots and frozenset().union(*succ.done) != all_tasks:
                table[profile] = sink
                weights[(state, sink)] = zeros
                global_w[(state, sink)] = 0
                new_tasks[(state, sink)] = tuple(frozenset() for _ in range(n))
                continue
            used = [inst.energy(s) for s in combo]
            table[profile] = succ
            edge = (state, succ)
            weights[edge] = tuple(u - prod for u in used)
            global_w[edge] = min(0, n * prod - sum(used))
            new_tasks[edge] = tuple(combo)
            if succ not in seen:
                seen.add(succ)
                order.append(succ)
                if len(order) > max_vertices:
                    raise BudgetExceededError(f"energy game exceeds {max_vertices} vertices", len(order), max_vertices)
        moves[state] = table

    if any(sink in table.values() for table in moves.values()):
        order.append(sink)
        moves[sink] = {zeros: sink}
        weights[(sink, sink)] = zeros

    names = tuple(tuple(subset_name(s) for s in table) for table in tables)
    game = ConcurrentGame(
        num_players=n,
        vertices=tuple(order),
        targets=frozenset(targets),
        moves=moves,
        weights=weights,
        action_names=names,
        initial=start,
    )
    logger.debug("energy game: %d vertices, %d targets (prune=%s)", len(order), len(targets), prune_deadlines)
    return EnergyGame(inst, game, global_w, new_tasks, tables)


def schedule_of_play(energy: EnergyGame, play: Sequence[Vertex]) -> Schedule:
    """Read the schedule off a play of the energy (or billed) game."""
    inst = energy.instance
    sets = {}
    for u, w in zip(play, play[1:]):
        if u == w:
            continue
        sets[u.slot] = {h: ts for h, ts in zip(inst.houses, energy.new_tasks[(u, w)]) if ts}
    return Schedule.from_sets(sets)


def play_of_schedule(energy: EnergyGame, schedule: Schedule) -> FinitePlay:
    """The play of the energy game following a complete schedule."""
    inst = energy.instance
    schedule.validate(inst)
    g = energy.game
    ids = [{s: a for a, s in enumerate(table)} for table in energy.actions]
    play = [g.initial]
    while play[-1] not in g.targets:
        v = play[-1]
        if v.slot > inst.slots:
            raise ScheduleError("schedule does not complete within the day")
        performed = schedule.performed_at(inst, v.slot)
        profile = tuple(ids[k][performed[k]] for k in range(inst.num_houses))
        if profile not in g.moves[v]:
            raise ScheduleError(f"slot {v.slot} assignment is not playable (deadline pruning)")
        play.append(g.next(v, profile))
    return tuple(play)


def imported_energy(inst: GridInstance, schedule: Schedule) -> int:
    """Energy bought from outside over the played slots."""
    total = 0
    for d in range(1, schedule.last_slot + 1):
        used = sum(inst.energy(ts) for ts in schedule.performed_at(inst, d))
        total += max(0, used - inst.num_houses * inst.prod(d))
    return total


def exported_energy(inst: GridInstance, schedule: Schedule) -> int:
    """Local surplus left unused over the played slots."""
    total = 0
    for d in range(1, schedule.last_slot + 1):
        used = sum(inst.energy(ts) for ts in schedule.performed_at(inst, d))
        total += max(0, inst.num_houses * inst.prod(d) - used)
    return total


def coalition_zero_sum(energy: EnergyGame) -> ZeroSumGame:
    """All houses as one Min player minimizing imported energy."""
    g = energy.game
    edges = {e: -energy.global_weights.get(e, 0) for e in g.weights if e[0] not in g.targets}
    owners = {v: MIN for v in g.vertices}
    return ZeroSumGame.build(g.vertices, owners, edges, g.targets, g.initial)


def optimal_coalition_schedule(inst: GridInstance, energy: Optional[EnergyGame] = None) -> Tuple[Schedule, int]:
    """
    Schedule minimizing imported energy, found by backward induction with
    lowest-index tie-breaking. Deadline pruning keeps every complete
    schedule and makes the arena acyclic.

    Returns:
        tuple: (schedule, E_min).

    Raises:
        UnschedulableError: If no complete schedule exists.
    """
    energy = energy or build_energy_game(inst, prune_deadlines=True)
    zs = coalition_zero_sum(energy)
    vm = solve(zs)
    e_min = vm.initial_value
    if not e_min.is_finite():
        raise UnschedulableError("no schedule completes every task")
    play = [zs.initial]
    while play[-1] not in zs.targets:
        play.append(vm.choices[play[-1]])
    labels = [zs.vertices[i] for i in play]
    schedule = schedule_of_play(energy, labels)
    logger.debug("coalition schedule %s imports %s", schedule.describe(), e_min)
    return schedule, int(e_min)


# ===== BILLED GAMES =====

@dataclass(frozen=True)
class BilledGame:
    """
    Energy game re-weighted by slot bills.

    Attributes:
        energy: The underlying energy game.
        game: Same arena, weights = bills * scale (integers).
        bills: Edge -> exact per-house bills.
        scale: Common denominator of all bills.
    """
    energy: EnergyGame
    game: ConcurrentGame
    bills: Mapping[Edge, Tuple[Fraction, ...]]
    scale: int

    def unscale(self, x: int) -> Fraction:
        return Fraction(x, self.scale)


def build_billed_game(inst: GridInstance, prune_deadlines: bool = True,
                      energy: Optional[EnergyGame] = None) -> BilledGame:
    """
    The billed game; pruning is on by default so that no coalition can keep
    a house from completing its tasks.
    """
    energy = energy or build_energy_game(inst, prune_deadlines=prune_deadlines)
    g = energy.game
    n = inst.num_houses
    bills: Dict[Edge, Tuple[Fraction, ...]] = {}
    for edge in g.weights:
        u, w = edge
        if u == w:
            bills[edge] = tuple(Fraction(0) for _ in range(n))
        else:
            bills[edge] = slot_bill(inst, u.slot, energy.new_tasks[edge])
    scale = 1
    for bs in bills.values():
        for b in bs:
            scale = math.lcm(scale, b.denominator)
    weights = {e: tuple(int(b * scale) for b in bs) for e, bs in bills.items()}
    game = ConcurrentGame(
        num_players=n,
        vertices=g.vertices,
        targets=g.targets,
        moves=g.moves,
        weights=weights,
        action_names=g.action_names,
        initial=g.initial,
    )
    logger.debug("billed game: scale %d", scale)
    return BilledGame(energy, game, bills, scale)


def random_orders(vertices: Sequence[Vertex], num_houses: int, order_seed: Optional[int]) -> Dict[Vertex, Tuple[int, ...]]:
    """Per-vertex house orders; identity order when order_seed is None."""
    if order_seed is None:
        fixed = tuple(range(1, num_houses + 1))
        return {v: fixed for v in vertices}
    rng = np.random.default_rng(order_seed)
    return {v: tuple(int(p) + 1 for p in rng.permutation(num_houses)) for v in vertices}


@dataclass(frozen=True)
class TurnifiedGame:
    """Billed game with every slot split into one move per house."""
    billed: BilledGame
    game: ConcurrentGame
    orders: Mapping[Vertex, Tuple[int, ...]]

    @property
    def instance(self) -> GridInstance:
        return self.billed.energy.instance

    def lift_play(self, energy_play: Sequence[Vertex]) -> FinitePlay:
        """Turnified play following an energy-game play."""
        base = self.billed.game
        out = [energy_play[0]]
        for u, w in zip(energy_play, energy_play[1:]):
            if u in base.targets:
                break
            profile = unique_profile(base, u, w)
            order = self.orders[u]
            chosen = ()
            for mover in order[:-1]:
                chosen = chosen + (profile[mover - 1],)
                out.append(Stage(u, chosen))
            out.append(w)
        return tuple(out)

    def energy_play(self, play: Sequence[Vertex]) -> FinitePlay:
        return project_turnified_play(play)


def build_turnified_billed_game(inst: GridInstance, order_seed: Optional[int] = None,
                                prune_deadlines: bool = True,
                                max_vertices: int = BaseConfig.MAX_GRID_VERTICES) -> TurnifiedGame:
    """
    Turnified billed game with a per-slot house order drawn from order_seed.
    """
    billed = build_billed_game(inst, prune_deadlines=prune_deadlines)
    base = billed.game
    orders = random_orders(base.vertices, inst.num_houses, order_seed)
    estimate = sum(len(base.moves[v]) for v in base.vertices) * inst.num_houses
    if estimate > max_vertices:
        raise BudgetExceededError(f"turnified game exceeds {max_vertices} vertices", estimate, max_vertices)
    game = turnify_round_robin(base, lambda v: orders[v])
    return TurnifiedGame(billed, game, orders)
