"""
Tests for the zero-sum solvers: backward induction, value iteration and the
brute-force oracle.
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcrgames.errors import SolverError
from mcrgames.game_model import NEG_INF, POS_INF
from mcrgames.transforms import MAX, MIN, ZeroSumGame, coalition_game
from mcrgames.zerosum_solver import (
    brute_force_value, solve, solve_acyclic, solve_value_iteration, value,
)
from tests.factories import random_zero_sum


def test_one_player_loop_has_no_finite_value(negative_loop):
    zs = coalition_game(negative_loop, 1, ("v1",))
    vm = solve(zs)
    assert vm.method == "iterate"
    assert vm.initial_value == NEG_INF
    assert vm.choice_of("v1") is None
    assert brute_force_value(zs) == NEG_INF


def test_unreachable_target_is_infinite():
    zs = ZeroSumGame.build(["a", "b", "t"], {"a": MIN, "b": MAX}, {("a", "b"): 1, ("b", "a"): 1}, ["t"], "a")
    assert value(zs) == POS_INF
    assert brute_force_value(zs) == POS_INF


def test_max_prefers_the_costlier_branch():
    edges = {("m", "x"): 0, ("m", "y"): 0, ("x", "t"): 2, ("y", "t"): 5}
    zs = ZeroSumGame.build(["m", "x", "y", "t"], {"m": MAX}, edges, ["t"], "m")
    vm = solve_acyclic(zs)
    assert vm.initial_value == 5
    assert vm.choice_of("m") == "y"
    assert vm.strategy(MAX) == {"m": "y"}


def test_backward_induction_refuses_cycles(negative_loop):
    with pytest.raises(SolverError):
        solve_acyclic(coalition_game(negative_loop, 1, ("v1",)))


def test_unknown_method_is_rejected():
    zs = ZeroSumGame.build(["t"], {}, {}, ["t"], "t")
    with pytest.raises(SolverError):
        solve(zs, "guess")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_backward_induction_matches_value_iteration(seed):
    zs = random_zero_sum(np.random.default_rng(seed), vertices=7, max_out=3, acyclic=True)
    a = solve_acyclic(zs)
    b = solve_value_iteration(zs)
    assert a.values == b.values


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_value_iteration_matches_brute_force(seed):
    zs = random_zero_sum(np.random.default_rng(seed), vertices=6, max_out=2, acyclic=False)
    assert solve_value_iteration(zs).initial_value == brute_force_value(zs)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_values_are_fixed_points(seed):
    zs = random_zero_sum(np.random.default_rng(seed), vertices=6, max_out=3, acyclic=False)
    vm = solve(zs)
    for i in range(len(zs)):
        if i in zs.targets:
            assert vm.values[i] == 0
            continue
        options = []
        for j, w in zs.succ[i]:
            x = vm.values[j]
            options.append(x if not x.is_finite() else x + w)
        best = max(options) if zs.owners[i] == MAX else min(options)
        assert vm.values[i] == best


@pytest.mark.slow
def test_solvers_agree_on_the_dag_corpus():
    for seed in range(200):
        rng = np.random.default_rng(seed)
        zs = random_zero_sum(rng, vertices=3 + seed % 10, max_out=3, weights=(-5, 5), acyclic=True)
        assert solve_acyclic(zs).values == solve_value_iteration(zs).values, seed


@pytest.mark.slow
def test_value_iteration_agrees_with_brute_force_on_the_cyclic_corpus():
    for seed in range(100):
        zs = random_zero_sum(np.random.default_rng(10_000 + seed), vertices=3 + seed % 4, max_out=2,
                             acyclic=False)
        assert solve_value_iteration(zs).initial_value == brute_force_value(zs), seed
