"""
Tests for the game model: extended costs, well-formedness rules, plays,
payoffs, strategies and the structural predicates.
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcrgames.errors import ExtCostError, GameError, PlayError, StrategyError
from mcrgames.game_model import (
    NEG_INF, POS_INF, ConcurrentGame, ExtCost, Lasso, PositionalStrategy, cost_of_play,
    is_action_visible, is_turn_based, loop_strategy, outcome, total_payoff, validate_game,
)
from tests.factories import random_turn_based_game


# ===== EXTENDED COSTS =====

@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))
def test_extcost_addition_matches_integers(a, b):
    assert ExtCost(a) + ExtCost(b) == a + b
    assert ExtCost(a) + b == ExtCost(b) + a


@given(st.integers(-10**6, 10**6))
def test_infinities_absorb_finite_values(a):
    assert POS_INF + a == POS_INF
    assert NEG_INF + a == NEG_INF
    assert NEG_INF < ExtCost(a) < POS_INF


def test_opposite_infinities_do_not_add():
    with pytest.raises(ExtCostError):
        POS_INF + NEG_INF
    with pytest.raises(ExtCostError):
        int(POS_INF)


def test_extcost_json_forms():
    assert POS_INF.to_json() == "+inf"
    assert ExtCost.from_json("-inf") == NEG_INF
    assert ExtCost.from_json(-3) == -3
    with pytest.raises(ValueError):
        ExtCost.from_json("inf")


# ===== WELL-FORMEDNESS =====

def test_example_games_are_well_formed(pennies, ping_pong, negative_loop):
    for game in (pennies, ping_pong, negative_loop):
        assert validate_game(game) == []


def _rules(game):
    return {v.rule for v in validate_game(game)}


def test_deadlock_is_reported():
    game = ConcurrentGame.build(1, {"a": {(0,): "b"}}, {("a", "b"): (1,)}, ["t"], initial="a")
    violations = validate_game(game)
    assert any(v.rule == "DeadlockAt" and v.subject == "b" for v in violations)


def test_successor_must_be_an_edge():
    game = ConcurrentGame.build(
        1, {"a": {(0,): "t", (1,): "b"}, "b": {(0,): "t"}},
        {("a", "t"): (0,), ("b", "t"): (0,)}, ["t"], initial="a",
    )
    assert "NextOffEdge" in _rules(game)


def test_profiles_must_form_a_product():
    moves = {"a": {(0, 0): "t", (1, 1): "u"}, "u": {(0, 0): "t"}}
    weights = {("a", "t"): (0, 0), ("a", "u"): (0, 0), ("u", "t"): (0, 0)}
    game = ConcurrentGame.build(2, moves, weights, ["t"], initial="a")
    assert "ProfilesNotProduct" in _rules(game)


def test_target_needs_its_zero_self_loop(pennies):
    moves = dict(pennies.moves)
    weights = dict(pennies.weights)
    weights[("t_aa", "t_aa")] = (1, 0)
    broken = ConcurrentGame(pennies.num_players, pennies.vertices, pennies.targets, moves, weights,
                            pennies.action_names, pennies.initial)
    assert "TargetNotNormalized" in _rules(broken)


def test_unknown_initial_vertex(pennies):
    broken = ConcurrentGame(pennies.num_players, pennies.vertices, pennies.targets, pennies.moves,
                            pennies.weights, pennies.action_names, "nowhere")
    assert "UnknownVertex" in _rules(broken)


# ===== PLAYS AND PAYOFFS =====

def test_costs_stop_at_first_target(ping_pong):
    assert cost_of_play(ping_pong, 1, ("A", "B", "C")) == -1
    assert cost_of_play(ping_pong, 2, ("A", "B", "C")) == -1
    assert cost_of_play(ping_pong, 1, ("A", "C", "C", "C")) == 0


def test_plays_without_target_cost_infinity(ping_pong):
    assert cost_of_play(ping_pong, 1, ("A", "B", "A")) == POS_INF
    assert cost_of_play(ping_pong, 2, Lasso(("A",), ("B", "A"))) == POS_INF


def test_invalid_play_is_rejected(ping_pong):
    with pytest.raises(PlayError):
        total_payoff(ping_pong, 1, ("A", "A"))
    with pytest.raises(PlayError):
        total_payoff(ping_pong, 1, ())
    with pytest.raises(GameError):
        total_payoff(ping_pong, 3, ("A",))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_total_payoff_is_additive(seed, cut):
    game = random_turn_based_game(np.random.default_rng(seed), vertices=6, acyclic=False)
    rng = np.random.default_rng(seed + 1)
    play = [game.initial]
    for _ in range(8):
        succ = game.successors(play[-1])
        play.append(succ[int(rng.integers(len(succ)))])
    k = min(cut, len(play) - 1)
    for p in game.players:
        assert total_payoff(game, p, play) == (
            total_payoff(game, p, play[:k + 1]) + total_payoff(game, p, play[k:])
        )


# ===== STRATEGIES =====

@pytest.mark.parametrize("n", range(1, 51))
def test_loop_strategy_reward_grows_with_loops(negative_loop, n):
    sigma = loop_strategy(negative_loop, 1, "v1", 0, 1, n)
    out = outcome(negative_loop, "v1", (sigma,), n + 1)
    assert out.reached
    assert len(out.play) == n + 1
    assert out.cost(negative_loop, 1) == -n
    longer = outcome(negative_loop, "v1", (loop_strategy(negative_loop, 1, "v1", 0, 1, n + 1),), n + 2)
    assert longer.cost(negative_loop, 1) < out.cost(negative_loop, 1)


def test_outcome_respects_horizon(negative_loop):
    always_loop = PositionalStrategy(1, {"v1": 0})
    out = outcome(negative_loop, "v1", (always_loop,), 4)
    assert not out.reached
    assert out.play == ("v1",) * 5
    assert out.cost(negative_loop, 1) == POS_INF


def test_undefined_strategy_raises(ping_pong):
    sigma = (PositionalStrategy(1, {}), PositionalStrategy(2, {"B": 2}))
    with pytest.raises(StrategyError):
        outcome(ping_pong, "A", sigma, 3)


# ===== STRUCTURE =====

def test_turn_based_owners(pennies, ping_pong):
    assert is_turn_based(ping_pong) == {"A": 1, "B": 2, "C": 1}
    assert is_turn_based(pennies) is None


def test_action_visibility(pennies, ping_pong):
    assert is_action_visible(pennies)
    assert is_action_visible(ping_pong)
    hidden = ConcurrentGame.build(
        2, {"a": {(0, 0): "t", (0, 1): "t", (1, 0): "t", (1, 1): "t"}}, {("a", "t"): (0, 0)}, ["t"],
        initial="a",
    )
    assert not is_action_visible(hidden)
