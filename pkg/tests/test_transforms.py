"""
Tests for the game transforms: bounded-below certificates, the non-negative
weight transform, round-robin turnification and the coalition arenas.
"""
import itertools

import numpy as np
import pytest

from mcrgames.errors import BudgetExceededError, GameError, UnboundedError
from mcrgames.game_model import (
    ConcurrentGame, PositionalStrategy, cost_of_play, is_action_visible, is_turn_based, outcome,
    total_payoff, validate_game,
)
from mcrgames.nash import brute_force_ne
from mcrgames.transforms import (
    MAX, MIN, AugmentedVertex, Commit, FreshTarget, Stage, bound_below_certificate, coalition_arena,
    coalition_game, lift_history, lift_strategy, project_strategy, project_turnified_play,
    to_nonnegative, to_nonnegative_all, turnify_round_robin,
)
from mcrgames.zerosum_solver import solve
from tests.factories import random_turn_based_game


@pytest.fixture
def dip():
    """s -> u -> t, with a branch s -> t; player 1 dips to -2 before climbing back."""
    moves = {"s": {(0, 0): "u", (1, 0): "t"}, "u": {(0, 0): "t"}}
    weights = {("s", "u"): (-2, 1), ("u", "t"): (1, 1), ("s", "t"): (3, 0)}
    return ConcurrentGame.build(2, moves, weights, ["t"], initial="s")


# ===== CERTIFICATES =====

def test_bound_is_the_deepest_segment(dip):
    cert = bound_below_certificate(dip, 1, "s")
    assert cert.bounded
    assert cert.bound == 2
    assert bound_below_certificate(dip, 2, "s").bound == 0


def test_negative_cycle_is_a_witness(negative_loop, ping_pong):
    cert = bound_below_certificate(negative_loop, 1, "v1")
    assert not cert.bounded
    assert cert.witness == ("v1",)

    cert = bound_below_certificate(ping_pong, 1, "A")
    assert not cert.bounded
    assert set(cert.witness) == {"A", "B"}


# ===== NON-NEGATIVE WEIGHTS =====

def test_nonnegative_transform_shifts_player_cost(dip):
    cert = bound_below_certificate(dip, 1, "s")
    g2 = to_nonnegative(dip, 1, cert)
    assert validate_game(g2) == []
    assert all(ws[0] >= 0 for ws in g2.weights.values())

    sink = FreshTarget(1)
    play = (AugmentedVertex("s", 0), AugmentedVertex("u", -2), AugmentedVertex("t", -1), sink)
    assert cost_of_play(g2, 1, play) == cost_of_play(dip, 1, ("s", "u", "t")) + 2
    assert cost_of_play(g2, 2, play) == cost_of_play(dip, 2, ("s", "u", "t"))

    direct = (AugmentedVertex("s", 0), AugmentedVertex("t", 0), sink)
    assert cost_of_play(g2, 1, direct) == 3 + 2


def test_nonnegative_transform_rejects_unbounded_players(negative_loop):
    cert = bound_below_certificate(negative_loop, 1, "v1")
    with pytest.raises(UnboundedError):
        to_nonnegative(negative_loop, 1, cert)
    with pytest.raises(UnboundedError):
        to_nonnegative_all(negative_loop)


def test_nonnegative_all_keeps_outcome_costs(dip):
    g2, bounds = to_nonnegative_all(dip)
    assert bounds == (2, 0)
    for branch in (0, 1):
        base = (PositionalStrategy(1, {"s": branch}), PositionalStrategy(2, {}))
        lifted = tuple(lift_strategy(g2, s) for s in base)
        out = outcome(dip, "s", base, 5)
        out2 = outcome(g2, g2.initial, lifted, 10)
        assert out2.reached
        for p in dip.players:
            assert out2.cost(g2, p) == out.cost(dip, p) + bounds[p - 1]


def test_lift_and_project_are_inverse(dip):
    cert = bound_below_certificate(dip, 1, "s")
    g2 = to_nonnegative(dip, 1, cert)
    sigma = PositionalStrategy(1, {"s": 1})
    assert project_strategy(g2, lift_strategy(g2, sigma)) is sigma
    projected = project_strategy(g2, PositionalStrategy(1, {AugmentedVertex("s", 0): 0}))
    assert projected.decide(("s",)) == 0


def test_certificate_for_another_player_is_refused(dip):
    cert = bound_below_certificate(dip, 2, "s")
    with pytest.raises(GameError):
        to_nonnegative(dip, 1, cert)


def test_bound_covers_segments_after_a_climb():
    """A debt can start after the play has banked a positive payoff."""
    climb = ConcurrentGame.build(1, {"s": {(0,): "u"}, "u": {(0,): "t"}},
                                 {("s", "u"): (5,), ("u", "t"): (-3,)}, ["t"], initial="s")
    cert = bound_below_certificate(climb, 1, "s")
    assert cert.bound == 3
    g2 = to_nonnegative(climb, 1, cert)
    play = (AugmentedVertex("s", 0), AugmentedVertex("u", 0), AugmentedVertex("t", -3), FreshTarget(1))
    assert cost_of_play(g2, 1, play) == 2 + 3


# ===== RANDOM TRANSFORM CORPUS =====

def _plays(game, start, max_len):
    """Every play from start of at most max_len vertices, cut at its first target."""
    stack = [(start,)]
    while stack:
        play = stack.pop()
        yield play
        if play[-1] in game.targets or len(play) == max_len:
            continue
        for w in game.successors(play[-1]):
            stack.append(play + (w,))


def _bounded_players(game):
    certs = [bound_below_certificate(game, p, game.initial) for p in game.players]
    return certs if all(c.bounded for c in certs) else None


def _check_debts(seed, max_len):
    game = random_turn_based_game(np.random.default_rng(seed), players=2, vertices=int(3 + seed % 4),
                                  max_out=2, weights=(-4, 4), acyclic=False)
    certs = _bounded_players(game)
    if certs is None:
        return False
    for cert in certs:
        p = cert.player
        g2 = to_nonnegative(game, p, cert)
        assert all(ws[p - 1] >= 0 for ws in g2.weights.values())
        for play in _plays(game, game.initial, max_len):
            lifted = lift_history(g2, play)
            assert lifted is not None
            prefix = list(itertools.accumulate((game.weights[e][p - 1] for e in zip(play, play[1:])), initial=0))
            lifted_prefix = list(itertools.accumulate(
                (g2.weights[e][p - 1] for e in zip(lifted, lifted[1:])), initial=0))
            for k, node in enumerate(lifted):
                # the debt is the cheapest segment ending here, the empty one included
                assert node.debt == min(prefix[k] - prefix[j] for j in range(k + 1))
                assert node.debt >= -cert.bound
                assert lifted_prefix[k] == prefix[k] - node.debt
    return True


def _check_equilibria(seed):
    game = random_turn_based_game(np.random.default_rng(seed), players=2, vertices=int(3 + seed % 3),
                                  max_out=2, weights=(-4, 4), acyclic=True)
    horizon = len(game.vertices)
    g2, bounds = to_nonnegative_all(game)
    found = brute_force_ne(game, game.initial, horizon, budget=50_000)
    assert found
    shifted = {tuple(int(c) + b for c, b in zip(eq.costs, bounds)) for eq in found}
    lifted = {tuple(int(c) for c in eq.costs)
              for eq in brute_force_ne(g2, g2.initial, horizon + game.num_players, budget=50_000)}
    assert shifted == lifted


@pytest.mark.parametrize("seed", range(60))
def test_debts_follow_segment_payoffs(seed):
    _check_debts(seed, 8)


@pytest.mark.parametrize("seed", range(40))
def test_equilibria_survive_the_transform(seed):
    _check_equilibria(seed)


@pytest.mark.parametrize("seed", range(40))
def test_bounded_cyclic_games_have_an_equilibrium(seed):
    game = random_turn_based_game(np.random.default_rng(700 + seed), players=2, vertices=3 + seed % 2,
                                  max_out=2, weights=(-4, 4), acyclic=False)
    if _bounded_players(game) is None:
        pytest.skip("payoffs unbounded below")
    try:
        found = brute_force_ne(game, game.initial, 5, budget=50_000)
    except BudgetExceededError:
        pytest.skip("history tree too large to enumerate")
    assert found


@pytest.mark.slow
def test_transform_corpus():
    bounded = sum(_check_debts(seed, 12) for seed in range(500))
    assert bounded > 0
    for seed in range(500):
        _check_equilibria(seed)


# ===== TURNIFICATION =====

def test_turnified_game_is_turn_based(pennies):
    g = turnify_round_robin(pennies, (1, 2))
    assert validate_game(g) == []
    owners = is_turn_based(g)
    assert owners is not None
    assert owners["s"] == 1
    assert owners[Stage("s", (0,))] == 2
    assert is_action_visible(g)
    assert len(g.vertices) == len(pennies.vertices) + 2


def test_turnified_outcomes_match_the_concurrent_ones(pennies):
    for order in ((1, 2), (2, 1)):
        g = turnify_round_robin(pennies, order)
        for a1, a2 in itertools.product((0, 1), repeat=2):
            chosen = {1: a1, 2: a2}
            first = order[0]
            profile = (
                PositionalStrategy(1, {v: chosen[1] for v in g.vertices}),
                PositionalStrategy(2, {v: chosen[2] for v in g.vertices}),
            )
            out = outcome(g, "s", profile, 4)
            target = pennies.next("s", (a1, a2))
            assert project_turnified_play(out.play) == ("s", target)
            assert out.play[1] == Stage("s", (chosen[first],))
            for p in pennies.players:
                assert out.cost(g, p) == pennies.weight(p, "s", target)


def test_turnify_rejects_bad_orders(pennies):
    with pytest.raises(GameError):
        turnify_round_robin(pennies, (1, 1))


def test_single_player_game_is_returned_as_is(negative_loop):
    assert turnify_round_robin(negative_loop, (1,)) is negative_loop


# ===== COALITION ARENAS =====

def test_concurrent_arena_commits_before_the_answer(pennies):
    zs = coalition_arena(pennies, 1, "s")
    assert zs.owners[zs.position("s")] == MAX
    commits = [v for v in zs.vertices if isinstance(v, Commit)]
    assert len(commits) == 2
    assert all(zs.owners[zs.position(c)] == MIN for c in commits)
    # the answering player always finds the free target
    assert solve(zs).initial_value == 0


def test_turnified_arena_values(pennies):
    g = turnify_round_robin(pennies, (1, 2))
    assert solve(coalition_game(g, 1, ("s",))).initial_value == 1
    assert solve(coalition_game(g, 2, ("s",))).initial_value == 0


def test_coalition_game_of_ping_pong(ping_pong):
    vm = solve(coalition_game(ping_pong, 1, ("A",)))
    assert vm.initial_value == -1
    assert vm.choice_of("A") == "B"
    vm2 = solve(coalition_game(ping_pong, 2, ("A", "B")))
    assert vm2.initial_value == -1
    assert vm2.choice_of("B") == "A"
