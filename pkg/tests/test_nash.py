"""
Tests for the equilibrium machinery: deviation checks, the coalition-based
construction, the bounded search and the brute-force oracle.
"""
import numpy as np
import pytest

from mcrgames.errors import NotTurnBasedError, PlayError
from mcrgames.game_model import POS_INF, loop_strategy, outcome, total_payoff
from mcrgames.nash import (
    CoalitionOracle, HeuristicFailure, NashCertificate, brute_force_ne, candidate_plays,
    check_ne_outcome, coalition_profile, construct_ne_heuristic, enumerate_deviations,
    search_ne_outcome,
)
from mcrgames.transforms import Stage, state_multiplicity, turnify_round_robin
from tests.factories import random_turn_based_game


# ===== DEVIATION CHECKS =====

def test_matching_pennies_outcome_is_not_an_equilibrium(pennies):
    cert = check_ne_outcome(pennies, ("s", "t_aa"))
    assert not cert.valid
    assert cert.costs == (1, 0)
    failing = cert.failing_checks
    assert [c.deviation.player for c in failing] == [1]
    assert failing[0].deviation.new_vertex == "t_ba"
    assert failing[0].lhs == 1
    assert failing[0].deviation_payoff + failing[0].retaliation == 0
    assert cert.punishments == {}


def test_ping_pong_direct_exit_fails_for_player_one(ping_pong):
    devs = enumerate_deviations(ping_pong, ("A", "C"))
    assert [(d.player, d.new_vertex) for d in devs] == [(1, "B")]
    cert = check_ne_outcome(ping_pong, ("A", "C"))
    assert cert.costs == (0, -1)
    assert not cert.valid
    check = cert.checks[0]
    assert check.deviation_payoff == 0
    assert check.retaliation == -1


def test_non_target_play_is_never_valid(ping_pong):
    cert = check_ne_outcome(ping_pong, ("A", "B", "A"))
    assert not cert.reaches_target
    assert cert.costs == (POS_INF, POS_INF)
    assert not cert.valid
    with pytest.raises(PlayError):
        enumerate_deviations(ping_pong, ("A", "B", "A"))


def test_plays_are_cut_at_their_first_target(ping_pong):
    cert = check_ne_outcome(ping_pong, ("A", "C", "C", "C"))
    assert cert.play == ("A", "C")


def test_checks_can_be_restricted_to_some_players(ping_pong):
    cert = check_ne_outcome(ping_pong, ("A", "B", "C"), players=[2])
    assert {c.deviation.player for c in cert.checks} == {2}


@pytest.mark.parametrize("target", ["t_aa", "t_ab", "t_ba", "t_bb"])
def test_no_pennies_play_is_an_equilibrium(pennies, target):
    cert = check_ne_outcome(pennies, ("s", target))
    assert not cert.valid
    assert len(cert.failing_checks) == 1


def test_pennies_has_no_equilibrium_profile(pennies):
    assert brute_force_ne(pennies, "s", 1) == []
    assert brute_force_ne(pennies, "s", 3) == []


def _failing_players(game, play):
    cert = check_ne_outcome(game, play)
    assert not cert.valid
    return {c.deviation.player for c in cert.failing_checks}


@pytest.mark.parametrize("n", range(21))
def test_ping_pong_exit_by_the_first_player_tempts_it_to_continue(ping_pong, n):
    play = ("A",) + ("B", "A") * n + ("C",)
    assert check_ne_outcome(ping_pong, play).costs == (-n, -(n + 1))
    assert _failing_players(ping_pong, play) == {1}


@pytest.mark.parametrize("n", range(1, 21))
def test_ping_pong_exit_by_the_second_player_tempts_it_to_continue(ping_pong, n):
    play = ("A", "B") * n + ("C",)
    assert check_ne_outcome(ping_pong, play).costs == (-n, -n)
    assert _failing_players(ping_pong, play) == {2}


@pytest.mark.parametrize("n", range(1, 21))
def test_endless_ping_pong_is_never_an_equilibrium(ping_pong, n):
    cert = check_ne_outcome(ping_pong, ("A", "B") * n)
    assert not cert.reaches_target
    assert not cert.valid


# ===== CONSTRUCTION =====

def test_construction_on_turnified_pennies(pennies):
    game = turnify_round_robin(pennies, (1, 2))
    result = construct_ne_heuristic(game, "s")
    assert isinstance(result, NashCertificate)
    assert result.valid
    assert result.play == ("s", Stage("s", (0,)), "t_aa")
    assert result.costs == (1, 0)
    assert (1, Stage("s", (1,))) in result.punishments


def test_construction_needs_turn_based_games(pennies):
    with pytest.raises(NotTurnBasedError):
        coalition_profile(pennies, CoalitionOracle(pennies))


def test_ping_pong_has_no_equilibrium_outcome(ping_pong):
    result = construct_ne_heuristic(ping_pong, "A")
    assert isinstance(result, HeuristicFailure)
    assert "never reaches" in result.reason

    searched = search_ne_outcome(ping_pong, "A", 2 * len(ping_pong.vertices) + 1)
    assert isinstance(searched, HeuristicFailure)
    assert searched.candidates
    assert all(not cert.valid for cert in searched.candidates)
    assert all(cert.failing_checks for cert in searched.candidates)


def test_unbounded_reward_defeats_every_candidate(negative_loop):
    result = construct_ne_heuristic(negative_loop, "v1")
    assert isinstance(result, HeuristicFailure)
    searched = search_ne_outcome(negative_loop, "v1", 6)
    assert isinstance(searched, HeuristicFailure)
    assert len(searched.candidates) == 6


def test_candidate_plays_are_bounded(ping_pong):
    plays = candidate_plays(ping_pong, "A", 3)
    assert ("A", "C") in plays
    assert ("A", "B", "C") in plays
    assert ("A", "B", "A", "C") in plays
    assert all(len(p) <= 4 for p in plays)


def test_failed_construction_stops_after_the_play_cap(ping_pong):
    assert state_multiplicity(ping_pong) == 0
    result = construct_ne_heuristic(ping_pong, "A")
    assert len(result.play) == len(ping_pong.vertices) + 1

    game = turnify_round_robin(ping_pong, (1, 2))
    assert state_multiplicity(game) == 2
    result = construct_ne_heuristic(game, "A")
    assert isinstance(result, HeuristicFailure)
    assert "never reaches" in result.reason
    assert len(result.play) == 3 * len(game.vertices) + 1


def _punished_plays(game, table, play):
    """Continuations of play in which the coalition follows the punishment table."""
    u = play[-1]
    if u in game.targets:
        yield play
        return
    joint = table.actions.get(u)
    succ = {w for profile, w in game.moves[u].items()
            if joint is None or all(a is None or a == b for a, b in zip(joint, profile))}
    for w in sorted(succ, key=str):
        yield from _punished_plays(game, table, play + (w,))


def _check_punishments(game, cert):
    for c in cert.checks:
        i = c.deviation.player
        table = cert.punishments[(i, c.deviation.new_vertex)]
        for play in _punished_plays(game, table, c.deviation.prefix_play):
            assert total_payoff(game, i, play) >= cert.costs[i - 1]


def test_punishments_on_turnified_pennies(pennies):
    game = turnify_round_robin(pennies, (1, 2))
    cert = construct_ne_heuristic(game, "s")
    assert cert.checks
    _check_punishments(game, cert)


def test_punishments_hold_deviators_to_their_prescribed_cost():
    certified = 0
    for seed in range(30):
        game = random_turn_based_game(np.random.default_rng(300 + seed), players=2, vertices=6, max_out=2)
        result = construct_ne_heuristic(game, game.initial)
        if isinstance(result, NashCertificate):
            certified += 1
            _check_punishments(game, result)
    assert certified > 0


# ===== BRUTE FORCE =====

@pytest.mark.parametrize("horizon", [1, 3, 5])
def test_longest_loop_is_the_only_equilibrium(negative_loop, horizon):
    found = brute_force_ne(negative_loop, "v1", horizon)
    assert len(found) == 1
    assert found[0].costs == (-horizon,)
    assert found[0].outcome.reached
    sigma = loop_strategy(negative_loop, 1, "v1", 0, 1, horizon)
    assert outcome(negative_loop, "v1", (sigma,), horizon).play == found[0].outcome.play


@pytest.mark.parametrize("seed", range(8))
def test_deviation_checks_agree_with_brute_force(seed):
    game = random_turn_based_game(np.random.default_rng(seed), players=2, vertices=5, max_out=2)
    horizon = len(game.vertices)
    equilibria = {eq.outcome.play for eq in brute_force_ne(game, game.initial, horizon, budget=50_000)
                  if eq.outcome.reached}
    oracle = CoalitionOracle(game)
    for play in candidate_plays(game, game.initial, horizon):
        assert check_ne_outcome(game, play, oracle).valid == (play in equilibria)


@pytest.mark.parametrize("seed", range(8))
def test_construction_is_sound_on_acyclic_games(seed):
    game = random_turn_based_game(np.random.default_rng(100 + seed), players=2, vertices=5, max_out=2)
    result = construct_ne_heuristic(game, game.initial)
    if isinstance(result, NashCertificate):
        found = brute_force_ne(game, game.initial, len(game.vertices), budget=50_000)
        assert result.play in {eq.outcome.play for eq in found}
