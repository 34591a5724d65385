"""
Micro-grid instances and schedules.

A day is split into S slots. Every house owns a list of tasks; a task needs
E_T energy units and must run in exactly one slot of its interval
[start, end]. Every house receives the same solar production prod(d) in
slot d. Energy bought from outside costs P_in per unit when it replaces
local surplus and P_out per unit otherwise.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from mcrgames.config import BaseConfig
from mcrgames.errors import InstanceError, ScheduleError, UnschedulableError

logger = logging.getLogger(__name__)


class BillingMode(str, Enum):
    """How a slot's bill is split between the houses."""
    BALANCED = "balanced"
    LITERAL = "literal"


@dataclass(frozen=True)
class Task:
    id: str
    house: str
    energy: int
    start: int
    end: int

    def eligible(self, slot: int) -> bool:
        return self.start <= slot <= self.end


@dataclass(frozen=True)
class GridInstance:
    """
    A micro-grid scheduling instance.

    Attributes:
        houses: House ids, in player order (house k is player k+1).
        slots: Number of slots S.
        production: prod(d) for d = 1..S, per house.
        tasks: All tasks; ids are globally unique.
        p_in: Price of one unit bought in place of local surplus.
        p_out: Price of one unit bought from outside.
        billing_mode: Split rule for slot bills.
        credit_exports: Whether sellers are credited for surplus sent outside.
    """
    houses: Tuple[str, ...]
    slots: int
    production: Tuple[int, ...]
    tasks: Tuple[Task, ...]
    p_in: Fraction = Fraction(BaseConfig.DEFAULT_P_IN)
    p_out: Fraction = Fraction(BaseConfig.DEFAULT_P_OUT)
    billing_mode: BillingMode = BillingMode.BALANCED
    credit_exports: bool = False

    _by_house: Dict[str, Tuple[Task, ...]] = field(init=False, repr=False, compare=False)
    _by_id: Dict[str, Task] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "houses", tuple(self.houses))
        object.__setattr__(self, "production", tuple(int(x) for x in self.production))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "p_in", Fraction(self.p_in))
        object.__setattr__(self, "p_out", Fraction(self.p_out))
        object.__setattr__(self, "billing_mode", BillingMode(self.billing_mode))
        by_house = {h: tuple(t for t in self.tasks if t.house == h) for h in self.houses}
        object.__setattr__(self, "_by_house", by_house)
        object.__setattr__(self, "_by_id", {t.id: t for t in self.tasks})

    @property
    def num_houses(self) -> int:
        return len(self.houses)

    def prod(self, slot: int) -> int:
        return self.production[slot - 1]

    def tasks_of(self, house: str) -> Tuple[Task, ...]:
        return self._by_house[house]

    def task(self, task_id: str) -> Task:
        try:
            return self._by_id[task_id]
        except KeyError:
            raise InstanceError(f"unknown task {task_id!r}") from None

    def house_index(self, house: str) -> int:
        try:
            return self.houses.index(house)
        except ValueError:
            raise InstanceError(f"unknown house {house!r}") from None

    def energy(self, task_ids: Iterable[str]) -> int:
        return sum(self._by_id[t].energy for t in task_ids)

    def validate(self) -> None:
        """
        Raises:
            InstanceError: On any broken rule.
            UnschedulableError: If a task interval is empty or outside [1, S].
        """
        if not self.houses:
            raise InstanceError("instance needs at least one house")
        if len(set(self.houses)) != len(self.houses):
            raise InstanceError("house ids must be unique")
        if self.slots < 1:
            raise InstanceError(f"slots must be positive, got {self.slots}")
        if len(self.production) != self.slots:
            raise InstanceError(f"production covers {len(self.production)} slots, expected {self.slots}")
        if any(p < 0 for p in self.production):
            raise InstanceError("production must be non-negative")
        if not (self.p_out >= self.p_in >= 0):
            raise InstanceError(f"prices must satisfy P_out >= P_in >= 0, got {self.p_in}, {self.p_out}")
        if len(self._by_id) != len(self.tasks):
            raise InstanceError("task ids must be unique across houses")
        for t in self.tasks:
            if t.house not in self._by_house:
                raise InstanceError(f"task {t.id} belongs to unknown house {t.house!r}")
            if t.energy < 0:
                raise InstanceError(f"task {t.id} has negative energy")
            if not (1 <= t.start <= t.end <= self.slots):
                raise UnschedulableError(f"task {t.id} interval [{t.start}, {t.end}] is empty or outside [1, {self.slots}]")


# ===== SCHEDULES =====

@dataclass(frozen=True)
class Schedule:
    """Per slot, per house, the set of tasks started in that slot."""
    assignments: Mapping[int, Mapping[str, FrozenSet[str]]]

    @classmethod
    def from_sets(cls, sets: Mapping[int, Mapping[str, Iterable[str]]]) -> "Schedule":
        clean = {}
        for d, per_house in sets.items():
            row = {h: frozenset(ts) for h, ts in per_house.items() if ts}
            if row:
                clean[int(d)] = row
        return cls(clean)

    def performed_at(self, inst: GridInstance, slot: int) -> Tuple[FrozenSet[str], ...]:
        row = self.assignments.get(slot, {})
        return tuple(row.get(h, frozenset()) for h in inst.houses)

    def task_slots(self) -> Dict[str, int]:
        out = {}
        for d, row in self.assignments.items():
            for ts in row.values():
                for t in ts:
                    out[t] = d
        return out

    @property
    def last_slot(self) -> int:
        return max(self.assignments, default=0)

    def validate(self, inst: GridInstance, complete: bool = True) -> None:
        """
        Raises:
            ScheduleError: On a task scheduled twice, outside its interval or
                for the wrong house, and (when complete) on missing tasks.
        """
        seen = set()
        for d, row in sorted(self.assignments.items()):
            for h, ts in row.items():
                inst.house_index(h)
                for tid in ts:
                    t = inst.task(tid)
                    if tid in seen:
                        raise ScheduleError(f"task {tid} scheduled twice")
                    seen.add(tid)
                    if t.house != h:
                        raise ScheduleError(f"task {tid} belongs to {t.house}, not {h}")
                    if not t.eligible(d):
                        raise ScheduleError(f"task {tid} scheduled at slot {d}, outside [{t.start}, {t.end}]")
        if complete:
            missing = sorted(t.id for t in inst.tasks if t.id not in seen)
            if missing:
                raise ScheduleError(f"schedule misses tasks {', '.join(missing)}", missing)

    def describe(self) -> str:
        parts = []
        for d in sorted(self.assignments):
            row = self.assignments[d]
            parts.append(f"{d}:" + ";".join(f"{h}={'+'.join(sorted(ts))}" for h, ts in sorted(row.items())))
        return " ".join(parts) or "(empty)"


# ===== RANDOM INSTANCES =====

def random_instance(
    num_houses: int,
    num_tasks: int,
    slots: int,
    rng: np.random.Generator,
    p_in=BaseConfig.DEFAULT_P_IN,
    p_out=BaseConfig.DEFAULT_P_OUT,
    billing_mode: BillingMode = BillingMode.BALANCED,
    credit_exports: bool = False,
    max_interval: int = BaseConfig.MAX_INTERVAL,
) -> GridInstance:
    """
    Draw an instance from one seeded generator.

    Production is piecewise constant with at most PRODUCTION_PIECES segments
    and levels in [1, MAX_PRODUCTION]. Every house gets num_tasks tasks with
    energy uniform in [1, 2 * mean production] and an interval with a uniform
    start and a uniform length in [1, max_interval] clipped to the day.
    """
    if num_houses < 1 or num_tasks < 0 or slots < 1:
        raise InstanceError("need at least one house and one slot")
    pieces = int(rng.integers(1, min(BaseConfig.PRODUCTION_PIECES, slots) + 1))
    cuts = sorted(int(c) for c in rng.choice(np.arange(1, slots), size=pieces - 1, replace=False)) if pieces > 1 else []
    levels = rng.integers(1, BaseConfig.MAX_PRODUCTION + 1, size=pieces)
    production = []
    bounds = [0] + cuts + [slots]
    for k in range(pieces):
        production.extend([int(levels[k])] * (bounds[k + 1] - bounds[k]))
    top = max(1, int(np.ceil(2 * np.mean(production))))

    houses = tuple(f"H{i + 1}" for i in range(num_houses))
    tasks = []
    counter = 1
    for h in houses:
        for _ in range(num_tasks):
            energy = int(rng.integers(1, top + 1))
            start = int(rng.integers(1, slots + 1))
            length = int(rng.integers(1, max_interval + 1))
            tasks.append(Task(f"t{counter}", h, energy, start, min(slots, start + length - 1)))
            counter += 1
    inst = GridInstance(houses, slots, tuple(production), tuple(tasks),
                        Fraction(p_in), Fraction(p_out), billing_mode, credit_exports)
    inst.validate()
    logger.debug("random instance: %d houses, %d tasks, production %s", num_houses, len(tasks), production)
    return inst


def example_instance(billing_mode: BillingMode = BillingMode.BALANCED, credit_exports: bool = False) -> GridInstance:
    """Two houses, two slots, production (4, 2), tasks t1 (4 units) and t2 (5 units)."""
    return GridInstance(
        houses=("H1", "H2"),
        slots=2,
        production=(4, 2),
        tasks=(Task("t1", "H1", 4, 1, 2), Task("t2", "H2", 5, 1, 2)),
        p_in=Fraction(1),
        p_out=Fraction(2),
        billing_mode=billing_mode,
        credit_exports=credit_exports,
    )
