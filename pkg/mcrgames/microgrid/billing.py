"""
Slot bills.

In slot d house i has excess_i = (energy of the tasks it starts) - prod(d).
Tot_C sums the positive excesses (energy bought individually), Tot_S the
negative ones (local surplus) and Tot_O = Tot_C - Tot_S is the net energy
exchanged with the outside.

LITERAL mode: B_Tot = (Tot_C - Tot_O) * P_in + Tot_O * P_out and every house
pays (B_Tot / Tot_C) * excess_i; all bills are 0 when Tot_C = 0.

BALANCED mode: buyers pay per unit
(min(Tot_C, Tot_S) * P_in + max(Tot_O, 0) * P_out) / Tot_C and sellers
receive per unit
(min(Tot_C, Tot_S) * P_in + [credit_exports] * max(-Tot_O, 0) * P_out) / Tot_S,
so the bills of a slot add up to the net outside flow cost.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, Sequence, Tuple

from mcrgames.errors import ScheduleError
from mcrgames.microgrid.instance import BillingMode, GridInstance, Schedule


@dataclass(frozen=True)
class SlotBill:
    slot: int
    excess: Tuple[int, ...]
    tot_c: int
    tot_s: int
    tot_o: int
    b_tot: Fraction
    bills: Tuple[Fraction, ...]


def slot_bill_report(inst: GridInstance, slot: int, performed: Sequence[FrozenSet[str]]) -> SlotBill:
    """Full billing figures of one slot."""
    if len(performed) != inst.num_houses:
        raise ScheduleError(f"{len(performed)} task sets for {inst.num_houses} houses")
    prod = inst.prod(slot)
    excess = tuple(inst.energy(ts) - prod for ts in performed)
    tot_c = sum(max(0, x) for x in excess)
    tot_s = sum(max(0, -x) for x in excess)
    tot_o = sum(excess)
    zero = Fraction(0)

    if inst.billing_mode == BillingMode.LITERAL:
        b_tot = (tot_c - tot_o) * inst.p_in + tot_o * inst.p_out
        if tot_c == 0:
            bills = tuple(zero for _ in excess)
        else:
            bills = tuple(b_tot / tot_c * x for x in excess)
        return SlotBill(slot, excess, tot_c, tot_s, tot_o, Fraction(b_tot), bills)

    local = min(tot_c, tot_s)
    buy_unit = (local * inst.p_in + max(tot_o, 0) * inst.p_out) / tot_c if tot_c else zero
    credit = max(-tot_o, 0) * inst.p_out if inst.credit_exports else 0
    sell_unit = (local * inst.p_in + credit) / tot_s if tot_s else zero
    bills = tuple(
        buy_unit * x if x > 0 else (sell_unit * x if x < 0 else zero)
        for x in excess
    )
    return SlotBill(slot, excess, tot_c, tot_s, tot_o, sum(bills, zero), bills)


def slot_bill(inst: GridInstance, slot: int, performed: Sequence[FrozenSet[str]]) -> Tuple[Fraction, ...]:
    """Per-house bills of one slot."""
    return slot_bill_report(inst, slot, performed).bills


def outside_flow_cost(inst: GridInstance, tot_o: int) -> Fraction:
    """What the grid as a whole pays the outside in a slot with net flow tot_o."""
    paid = max(tot_o, 0) * inst.p_out
    if inst.credit_exports:
        paid -= max(-tot_o, 0) * inst.p_out
    return Fraction(paid)


@dataclass(frozen=True)
class BillReport:
    """
    Bills of a complete schedule. Slots run from 1 to the slot of the last
    task, the part of the day during which the game is played.
    """
    houses: Tuple[str, ...]
    slots: Tuple[SlotBill, ...]
    penalties: Tuple[Fraction, ...]

    @property
    def totals(self) -> Tuple[Fraction, ...]:
        out = [Fraction(0)] * len(self.houses)
        for s in self.slots:
            for k, b in enumerate(s.bills):
                out[k] += b
        return tuple(out)


def bill_schedule(inst: GridInstance, schedule: Schedule, penalties: Sequence[Fraction] = ()) -> BillReport:
    schedule.validate(inst)
    rows = tuple(slot_bill_report(inst, d, schedule.performed_at(inst, d))
                 for d in range(1, schedule.last_slot + 1))
    pens = tuple(Fraction(p) for p in penalties) or tuple(Fraction(0) for _ in inst.houses)
    return BillReport(inst.houses, rows, pens)
