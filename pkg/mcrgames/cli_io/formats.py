"""
Versioned JSON artifacts.

Every file is a msgspec Struct with a "version" field and unknown fields
rejected. Rationals are [numerator, denominator] pairs and extended costs
are integers or the strings "+inf" / "-inf". Emission is deterministic:
fields in declaration order, two-space indentation, trailing newline.

Usage:
    game = parse_game(path.read_bytes())
    text = emit(game_to_file(game))
"""
import logging
import re
from fractions import Fraction
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Type, TypeVar, Union

import msgspec

from mcrgames.config import BaseConfig
from mcrgames.errors import FormatError
from mcrgames.game_model import ConcurrentGame, ExtCost, Vertex, validate_game
from mcrgames.microgrid.billing import BillReport, SlotBill
from mcrgames.microgrid.experiment import Metrics
from mcrgames.microgrid.games import imported_energy
from mcrgames.microgrid.instance import BillingMode, GridInstance, Schedule, Task
from mcrgames.microgrid.penalty import GridEquilibrium
from mcrgames.nash import HeuristicFailure, NashResult
from mcrgames.zerosum_solver import ValueMap

logger = logging.getLogger(__name__)

VERSION = BaseConfig.SCHEMA_VERSION

Rational = Tuple[int, int]
Cost = Union[int, str]

T = TypeVar("T")


class Artifact(msgspec.Struct, forbid_unknown_fields=True):
    """Common base of every file type."""


# ===== SCHEMAS =====

class VertexEntry(Artifact, omit_defaults=True):
    name: str
    target: bool = False


class EdgeEntry(Artifact):
    source: str = msgspec.field(name="from")
    dest: str = msgspec.field(name="to")
    weights: List[int]


class MoveEntry(Artifact):
    vertex: str
    profile: List[str]
    next: str


class GameFile(Artifact, omit_defaults=True):
    version: int
    players: int
    actions: List[List[str]]
    vertices: List[VertexEntry]
    edges: List[EdgeEntry]
    moves: List[MoveEntry]
    initial: Optional[str] = None


class PlayFile(Artifact):
    version: int
    play: List[str]


class TaskEntry(Artifact):
    id: str
    house: str
    energy: int
    start: int
    end: int


class InstanceFile(Artifact):
    version: int
    houses: List[str]
    slots: int
    production: List[int]
    tasks: List[TaskEntry]
    p_in: Rational = (BaseConfig.DEFAULT_P_IN, 1)
    p_out: Rational = (BaseConfig.DEFAULT_P_OUT, 1)
    billing: Literal["balanced", "literal"] = "balanced"
    credit_exports: bool = False


class SlotEntry(Artifact):
    slot: int
    tasks: Dict[str, List[str]]


class ScheduleFile(Artifact, omit_defaults=True):
    version: int
    assignments: List[SlotEntry]
    imported_energy: Optional[int] = None


class CheckEntry(Artifact):
    player: int
    position: int
    replaced: str
    action: str
    vertex: str
    lhs: Cost
    payoff: Cost
    retaliation: Cost
    passed: bool


class PunishmentEntry(Artifact):
    player: int
    start: str
    actions: Dict[str, List[Optional[str]]]


class CertificateFile(Artifact, omit_defaults=True):
    version: int
    valid: bool
    play: List[str]
    costs: List[Cost] = []
    checks: List[CheckEntry] = []
    punishments: List[PunishmentEntry] = []
    reason: Optional[str] = None
    flags: List[str] = []


class ValueEntry(Artifact, omit_defaults=True):
    vertex: str
    owner: str
    value: Cost
    choice: Optional[str] = None


class ValueMapFile(Artifact):
    version: int
    player: int
    method: str
    initial_value: Cost
    values: List[ValueEntry]


class SlotBillEntry(Artifact):
    slot: int
    excess: List[int]
    tot_c: int
    tot_s: int
    tot_o: int
    b_tot: Rational
    bills: List[Rational]


class BillReportFile(Artifact):
    version: int
    houses: List[str]
    slots: List[SlotBillEntry]
    totals: List[Rational]
    penalties: List[Rational]


class GridEquilibriumFile(Artifact):
    version: int
    prescription: str
    schedule: ScheduleFile
    floors: List[Rational]
    penalties: List[Rational]
    certificate: CertificateFile
    bills: BillReportFile


class EvaluationFile(Artifact):
    version: int
    imported_energy: int
    exported_energy: int
    e_min: int
    energy_gap: int
    bills: List[Rational]
    reference_bills: List[Rational]
    bill_gap_percent: List[Rational]


# ===== DECODING =====

_BYTE = re.compile(r"byte (\d+)")


def _line_at(data: bytes, offset: int) -> int:
    return data.count(b"\n", 0, offset) + 1


def line_of(data: bytes, name: str) -> Optional[int]:
    """1-based line of the first occurrence of name as a JSON string."""
    for candidate in (name, re.split(r"->|,", name)[0]):
        pos = data.find(msgspec.json.encode(candidate))
        if pos >= 0:
            return _line_at(data, pos)
    return None


def decode(data: Union[bytes, str], kind: Type[T]) -> T:
    """
    Decode one artifact and check its version.

    Raises:
        FormatError: On a syntax error (with byte offset and line), a schema
            violation, or an unsupported version.
    """
    if isinstance(data, str):
        data = data.encode()
    try:
        doc = msgspec.json.decode(data, type=kind)
    except msgspec.ValidationError as exc:
        raise FormatError(f"schema violation: {exc}") from None
    except msgspec.DecodeError as exc:
        text = str(exc)
        if "truncated" in text:
            offset = len(data)
        else:
            m = _BYTE.search(text)
            offset = int(m.group(1)) if m else None
        line = _line_at(data, offset) if offset is not None else None
        raise FormatError(f"syntax error: {text}", offset, line) from None
    if doc.version != VERSION:
        raise FormatError(f"unsupported version {doc.version}, expected {VERSION}")
    return doc


def emit(doc: Artifact) -> str:
    return msgspec.json.format(msgspec.json.encode(doc), indent=2).decode() + "\n"


def _rational(x) -> Rational:
    x = Fraction(x)
    return (x.numerator, x.denominator)


def _fraction(pair: Rational) -> Fraction:
    num, den = pair
    if den == 0:
        raise FormatError(f"rational {num}/{den} has a zero denominator")
    return Fraction(num, den)


# ===== GAMES AND PLAYS =====

def file_to_game(doc: GameFile, data: bytes = b"") -> ConcurrentGame:
    """Build the game described by a GameFile; unknown action names are fatal."""
    ids = []
    for p, names in enumerate(doc.actions, start=1):
        table = {}
        for a, name in enumerate(names):
            if name in table:
                raise FormatError(f"player {p} declares action {name!r} twice")
            table[name] = a
        ids.append(table)
    moves: Dict[Vertex, Dict] = {}
    for m in doc.moves:
        if len(m.profile) > len(ids):
            raise FormatError(f"profile {m.profile} at {m.vertex!r} has more actions than players",
                              line=line_of(data, m.vertex))
        try:
            profile = tuple(ids[p][a] for p, a in enumerate(m.profile))
        except KeyError as exc:
            raise FormatError(f"unknown action {exc.args[0]!r} at {m.vertex!r}",
                              line=line_of(data, m.vertex)) from None
        moves.setdefault(m.vertex, {})[profile] = m.next
    return ConcurrentGame.build(
        num_players=doc.players,
        moves=moves,
        weights={(e.source, e.dest): tuple(e.weights) for e in doc.edges},
        targets=[v.name for v in doc.vertices if v.target],
        action_names=doc.actions,
        initial=doc.initial,
        vertices=[v.name for v in doc.vertices],
        normalize=False,
    )


def parse_game(data: Union[bytes, str], validate: bool = True) -> ConcurrentGame:
    """
    Parse a game file.

    Args:
        data: File contents.
        validate: Reject games violating the well-formedness rules, citing
            the line of the first offending vertex.
    """
    if isinstance(data, str):
        data = data.encode()
    game = file_to_game(decode(data, GameFile), data)
    if validate:
        violations = validate_game(game)
        if violations:
            first = violations[0]
            raise FormatError(str(first), line=line_of(data, first.subject))
    return game


def game_to_file(game: ConcurrentGame) -> GameFile:
    names = [tuple(game.action_names[p]) if game.action_names else () for p in range(game.num_players)]

    def act(p: int, a: int) -> str:
        return names[p][a] if a < len(names[p]) else str(a)

    edges, moves = [], []
    for v in game.vertices:
        for w in game.successors(v):
            edges.append(EdgeEntry(str(v), str(w), list(game.weights[(v, w)])))
        for profile in game.profiles(v):
            moves.append(MoveEntry(str(v), [act(p, a) for p, a in enumerate(profile)],
                                   str(game.moves[v][profile])))
    return GameFile(
        version=VERSION,
        players=game.num_players,
        actions=[list(n) for n in names],
        vertices=[VertexEntry(str(v), v in game.targets) for v in game.vertices],
        edges=edges,
        moves=moves,
        initial=None if game.initial is None else str(game.initial),
    )


def parse_play(data: Union[bytes, str]) -> Tuple[str, ...]:
    doc = decode(data, PlayFile)
    if not doc.play:
        raise FormatError("play needs at least one vertex")
    return tuple(doc.play)


def play_to_file(play: Sequence[Vertex]) -> PlayFile:
    return PlayFile(VERSION, [str(v) for v in play])


# ===== INSTANCES AND SCHEDULES =====

def file_to_instance(doc: InstanceFile) -> GridInstance:
    inst = GridInstance(
        houses=tuple(doc.houses),
        slots=doc.slots,
        production=tuple(doc.production),
        tasks=tuple(Task(t.id, t.house, t.energy, t.start, t.end) for t in doc.tasks),
        p_in=_fraction(doc.p_in),
        p_out=_fraction(doc.p_out),
        billing_mode=BillingMode(doc.billing),
        credit_exports=doc.credit_exports,
    )
    inst.validate()
    return inst


def parse_instance(data: Union[bytes, str]) -> GridInstance:
    return file_to_instance(decode(data, InstanceFile))


def instance_to_file(inst: GridInstance) -> InstanceFile:
    return InstanceFile(
        version=VERSION,
        houses=list(inst.houses),
        slots=inst.slots,
        production=list(inst.production),
        tasks=[TaskEntry(t.id, t.house, t.energy, t.start, t.end) for t in inst.tasks],
        p_in=_rational(inst.p_in),
        p_out=_rational(inst.p_out),
        billing=inst.billing_mode.value,
        credit_exports=inst.credit_exports,
    )


def file_to_schedule(doc: ScheduleFile) -> Schedule:
    sets: Dict[int, Dict[str, List[str]]] = {}
    for entry in doc.assignments:
        if entry.slot in sets:
            raise FormatError(f"slot {entry.slot} listed twice")
        sets[entry.slot] = entry.tasks
    return Schedule.from_sets(sets)


def parse_schedule(data: Union[bytes, str]) -> Schedule:
    return file_to_schedule(decode(data, ScheduleFile))


def schedule_to_file(schedule: Schedule, imported: Optional[int] = None) -> ScheduleFile:
    entries = [
        SlotEntry(d, {h: sorted(ts) for h, ts in sorted(schedule.assignments[d].items())})
        for d in sorted(schedule.assignments)
    ]
    return ScheduleFile(VERSION, entries, imported)


# ===== RESULTS =====

def _cost(x: ExtCost) -> Cost:
    return x.to_json()


def certificate_to_file(game: ConcurrentGame, result: NashResult) -> CertificateFile:
    checks = [
        CheckEntry(
            player=c.deviation.player,
            position=c.deviation.position,
            replaced=game.action_name(c.deviation.player, c.deviation.replaced_action),
            action=game.action_name(c.deviation.player, c.deviation.action),
            vertex=str(c.deviation.new_vertex),
            lhs=_cost(c.lhs),
            payoff=_cost(c.deviation_payoff),
            retaliation=_cost(c.retaliation),
            passed=c.passed,
        )
        for c in result.checks
    ]
    if isinstance(result, HeuristicFailure):
        return CertificateFile(VERSION, False, [str(v) for v in result.play], checks=checks,
                               reason=result.reason)
    punishments = []
    for (player, start), table in sorted(result.punishments.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        actions = {
            str(v): [None if a is None else game.action_name(p + 1, a) for p, a in enumerate(joint)]
            for v, joint in sorted(table.actions.items(), key=lambda kv: str(kv[0]))
        }
        punishments.append(PunishmentEntry(player, str(start), actions))
    return CertificateFile(
        version=VERSION,
        valid=result.valid,
        play=[str(v) for v in result.play],
        costs=[_cost(c) for c in result.costs],
        checks=checks,
        punishments=punishments,
        flags=list(result.flags),
    )


def value_map_to_file(vm: ValueMap, player: int) -> ValueMapFile:
    zs = vm.game
    values = []
    for i, label in enumerate(zs.vertices):
        c = vm.choices[i]
        values.append(ValueEntry(str(label), zs.owners[i], _cost(vm.values[i]),
                                 None if c is None or i in zs.targets else str(zs.vertices[c])))
    return ValueMapFile(VERSION, player, vm.method, _cost(vm.initial_value), values)


def bill_report_to_file(report: BillReport) -> BillReportFile:
    slots = [
        SlotBillEntry(s.slot, list(s.excess), s.tot_c, s.tot_s, s.tot_o, _rational(s.b_tot),
                      [_rational(b) for b in s.bills])
        for s in report.slots
    ]
    return BillReportFile(VERSION, list(report.houses), slots,
                          [_rational(b) for b in report.totals],
                          [_rational(p) for p in report.penalties])


def equilibrium_to_file(eq: GridEquilibrium) -> GridEquilibriumFile:
    return GridEquilibriumFile(
        version=VERSION,
        prescription=eq.prescription,
        schedule=schedule_to_file(eq.schedule, imported_energy(eq.instance, eq.schedule)),
        floors=[_rational(f) for f in eq.floors],
        penalties=[_rational(p) for p in eq.penalties],
        certificate=certificate_to_file(eq.turnified.game, eq.certificate),
        bills=bill_report_to_file(eq.report),
    )


def metrics_to_file(m: Metrics) -> EvaluationFile:
    return EvaluationFile(
        version=VERSION,
        imported_energy=m.imported_energy,
        exported_energy=m.exported_energy,
        e_min=m.e_min,
        energy_gap=m.energy_gap,
        bills=[_rational(b) for b in m.bills],
        reference_bills=[_rational(b) for b in m.reference_bills],
        bill_gap_percent=[_rational(g) for g in m.bill_gap_percent],
    )


# ===== READING RESULTS BACK =====

def _ext(x: Cost, where: str) -> ExtCost:
    try:
        return ExtCost.from_json(x)
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def parse_certificate(data: Union[bytes, str]) -> CertificateFile:
    """
    Read a certificate back. Vertices and actions stay names: they only
    mean something next to the game the certificate was written for.
    """
    return _check_certificate(decode(data, CertificateFile))


def _check_certificate(doc: CertificateFile) -> CertificateFile:
    if not doc.play:
        raise FormatError("certificate play needs at least one vertex")
    for c in doc.costs:
        _ext(c, "cost")
    for c in doc.checks:
        for x in (c.lhs, c.payoff, c.retaliation):
            _ext(x, f"check of player {c.player} at position {c.position}")
    return doc


def certificate_costs(doc: CertificateFile) -> Tuple[ExtCost, ...]:
    return tuple(_ext(c, "cost") for c in doc.costs)


def parse_value_map(data: Union[bytes, str]) -> Dict[str, ExtCost]:
    """Values by vertex name."""
    doc = decode(data, ValueMapFile)
    values = {}
    for entry in doc.values:
        if entry.vertex in values:
            raise FormatError(f"vertex {entry.vertex!r} listed twice")
        values[entry.vertex] = _ext(entry.value, f"value of {entry.vertex!r}")
    _ext(doc.initial_value, "initial value")
    return values


def file_to_bill_report(doc: BillReportFile) -> BillReport:
    n = len(doc.houses)
    slots = []
    for s in doc.slots:
        if len(s.excess) != n or len(s.bills) != n:
            raise FormatError(f"slot {s.slot} lists {len(s.bills)} bills for {n} houses")
        slots.append(SlotBill(s.slot, tuple(s.excess), s.tot_c, s.tot_s, s.tot_o, _fraction(s.b_tot),
                              tuple(_fraction(b) for b in s.bills)))
    report = BillReport(tuple(doc.houses), tuple(slots), tuple(_fraction(p) for p in doc.penalties))
    if [_rational(t) for t in report.totals] != [tuple(t) for t in doc.totals]:
        raise FormatError("totals do not add up to the slot bills")
    return report


def parse_bill_report(data: Union[bytes, str]) -> BillReport:
    return file_to_bill_report(decode(data, BillReportFile))


def parse_metrics(data: Union[bytes, str]) -> Metrics:
    """Evaluation figures; the derived gaps must agree with the raw figures."""
    doc = decode(data, EvaluationFile)
    m = Metrics(
        imported_energy=doc.imported_energy,
        exported_energy=doc.exported_energy,
        bills=tuple(_fraction(b) for b in doc.bills),
        e_min=doc.e_min,
        reference_bills=tuple(_fraction(b) for b in doc.reference_bills),
    )
    if m.energy_gap != doc.energy_gap:
        raise FormatError(f"energy gap {doc.energy_gap} disagrees with {m.imported_energy} - {m.e_min}")
    if [_rational(g) for g in m.bill_gap_percent] != [tuple(g) for g in doc.bill_gap_percent]:
        raise FormatError("bill gaps disagree with the bills")
    return m


def parse_equilibrium(data: Union[bytes, str]) -> GridEquilibriumFile:
    """Read a grid equilibrium document, checking every nested part."""
    doc = decode(data, GridEquilibriumFile)
    file_to_schedule(doc.schedule)
    report = file_to_bill_report(doc.bills)
    _check_certificate(doc.certificate)
    n = len(report.houses)
    if len(doc.floors) != n or len(doc.penalties) != n:
        raise FormatError(f"floors and penalties need one entry per house ({n})")
    if [_fraction(p) for p in doc.penalties] != list(report.penalties):
        raise FormatError("penalties disagree with the bill report")
    return doc
