"""
Tests for penalized billed games and the micro-grid equilibrium pipeline.
"""
from fractions import Fraction

import numpy as np
import pytest

from mcrgames.errors import McrError
from mcrgames.game_model import total_payoff
from mcrgames.microgrid import (
    Flagged, GridInstance, Schedule, Task, build_penalized_game, build_turnified_billed_game,
    certify_penalized, deviation_floor, grid_equilibrium, imported_energy, optimal_coalition_schedule,
    random_instance,
)
from mcrgames.microgrid.penalty import flag_free
from mcrgames.nash import check_ne_outcome


@pytest.fixture
def energy_eq(grid_instance):
    return grid_equilibrium(grid_instance, prescription="energy")


@pytest.fixture
def heuristic_eq(grid_instance):
    return grid_equilibrium(grid_instance, prescription="heuristic")


# ===== PRESCRIPTIONS =====

def test_energy_prescription_imports_nothing(grid_instance, energy_eq):
    assert energy_eq.valid
    assert energy_eq.schedule == Schedule.from_sets({1: {"H2": ["t2"]}, 2: {"H1": ["t1"]}})
    assert imported_energy(grid_instance, energy_eq.schedule) == 0
    assert energy_eq.report.totals == (1, -1)
    assert energy_eq.floors == (0, 2)
    assert energy_eq.penalties == (1, 2)
    assert energy_eq.flags == ()


def test_unpenalized_energy_outcome_tempts_the_first_house(energy_eq):
    assert not energy_eq.unpenalized.valid
    assert {c.deviation.player for c in energy_eq.unpenalized.failing_checks} == {1}


def test_heuristic_prescription_shares_the_first_slot(grid_instance, heuristic_eq):
    assert heuristic_eq.valid
    assert heuristic_eq.unpenalized.valid
    assert heuristic_eq.schedule == Schedule.from_sets({1: {"H1": ["t1"], "H2": ["t2"]}})
    assert imported_energy(grid_instance, heuristic_eq.schedule) == 1
    assert heuristic_eq.report.totals == (0, 2)
    assert heuristic_eq.penalties == heuristic_eq.floors == (0, 2)


def test_unknown_prescription(grid_instance):
    with pytest.raises(McrError):
        grid_equilibrium(grid_instance, prescription="fairest")


# ===== PENALIZED GAMES =====

def test_prescribed_play_carries_no_penalty(energy_eq):
    tg = energy_eq.turnified
    penalized = build_penalized_game(tg, energy_eq.profile, energy_eq.penalties)
    lifted = flag_free(energy_eq.play)
    for p in (1, 2):
        assert total_payoff(penalized, p, lifted) == total_payoff(tg.game, p, energy_eq.play)


def test_first_deviation_pays_the_surcharge(energy_eq):
    tg = energy_eq.turnified
    scale = tg.billed.scale
    penalized = build_penalized_game(tg, energy_eq.profile, energy_eq.penalties)
    root = penalized.initial
    for profile, child in penalized.moves[root].items():
        base = tg.game.moves[root.base][profile]
        assert child.base == base
        for p in child.flags:
            expected = tg.game.weights[(root.base, base)][p - 1] + energy_eq.penalties[p - 1] * scale
            assert penalized.weights[(root, child)][p - 1] == expected
    flagged = [c for c in penalized.moves[root].values() if c.flags]
    assert flagged and all(c.flags == frozenset({1}) for c in flagged)


def test_flags_are_never_reset(energy_eq):
    penalized = build_penalized_game(energy_eq.turnified, energy_eq.profile, energy_eq.penalties)
    for (u, w) in penalized.weights:
        assert isinstance(u, Flagged) and u.flags <= w.flags


def test_penalties_must_fit_the_bill_scale(energy_eq):
    with pytest.raises(McrError):
        build_penalized_game(energy_eq.turnified, energy_eq.profile, (Fraction(1, 7), Fraction(0)))


def test_per_player_views_agree_with_the_full_game(energy_eq):
    tg = energy_eq.turnified
    scale = tg.billed.scale
    surcharges = [int(p * scale) for p in energy_eq.penalties]
    merged = certify_penalized(tg.game, energy_eq.profile, surcharges, energy_eq.play)
    full = build_penalized_game(tg, energy_eq.profile, energy_eq.penalties)
    direct = check_ne_outcome(full, flag_free(energy_eq.play))

    def summary(cert):
        return sorted((c.deviation.player, c.deviation.position, c.deviation.action, c.passed, c.gap)
                      for c in cert.checks)

    assert merged.valid == direct.valid
    assert summary(merged) == summary(direct)
    assert merged.costs == direct.costs


def test_deviation_floor_exceeds_floor_plus_surcharge(energy_eq):
    tg = energy_eq.turnified
    scale = tg.billed.scale
    full = build_penalized_game(tg, energy_eq.profile, energy_eq.penalties)
    assert deviation_floor(full, 1) == 1 * scale
    assert deviation_floor(full, 2) == 8 * scale
    for p in (1, 2):
        assert deviation_floor(full, p) >= int((energy_eq.floors[p - 1] + energy_eq.penalties[p - 1]) * scale)


# ===== RANDOM INSTANCES =====

@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("prescription", ["energy", "heuristic"])
def test_penalized_outcomes_are_equilibria(seed, prescription):
    rng = np.random.default_rng(seed)
    inst = random_instance(2, 2, 4, rng)
    eq = grid_equilibrium(inst, order_seed=seed, prescription=prescription)
    assert eq.valid
    scale = eq.turnified.billed.scale
    for k, (floor, penalty) in enumerate(zip(eq.floors, eq.penalties)):
        assert penalty >= floor
        if floor < 0:
            assert f"floor_negative:{inst.houses[k]}" in eq.flags
    for c in eq.unpenalized.checks:
        assert eq.penalties[c.deviation.player - 1] * scale >= int(c.gap)
    if prescription == "energy":
        _, e_min = optimal_coalition_schedule(inst)
        assert imported_energy(inst, eq.schedule) == e_min


def _exporting_houses(slots):
    tasks = (Task("t1", "H1", 1, 1, slots), Task("t2", "H2", 1, 1, slots))
    return GridInstance(("H1", "H2"), slots, (3,) * slots, tasks, p_in=Fraction(1), p_out=Fraction(2),
                        credit_exports=True)


def test_negative_floor_is_the_penalty_when_nobody_can_deviate():
    inst = _exporting_houses(1)
    eq = grid_equilibrium(inst)
    assert eq.floors == (-4, -4)
    assert eq.penalties == (-4, -4)
    assert eq.report.totals == (-4, -4)
    assert eq.flags == ("floor_negative:H1", "floor_negative:H2")
    assert eq.valid


def test_negative_floor_gives_way_to_the_deviation_gain():
    inst = _exporting_houses(2)
    eq = grid_equilibrium(inst)
    assert eq.floors == (-10, -10)
    assert eq.penalties == (0, 0)
    assert set(eq.flags) == {"floor_negative:H1", "floor_negative:H2"}
    assert eq.valid



@pytest.mark.slow
@pytest.mark.parametrize("seed", range(3))
def test_deviation_floor_on_random_instances(seed):
    inst = random_instance(3, 1, 3, np.random.default_rng(50 + seed))
    tg = build_turnified_billed_game(inst, order_seed=seed)
    eq = grid_equilibrium(inst, prescription="energy", turnified=tg)
    full = build_penalized_game(tg, eq.profile, eq.penalties)
    scale = tg.billed.scale
    for p in range(1, inst.num_houses + 1):
        assert deviation_floor(full, p) >= int((eq.floors[p - 1] + eq.penalties[p - 1]) * scale)
