"""
Command-line interface.

Data goes to standard output (or --out), diagnostics to standard error.
Exit codes: 0 success, 1 input error, 2 no equilibrium / invalid play,
3 infinite zero-sum value.

Usage:
    python run.py find-ne tests/fixtures/pennies.json
    python run.py grid bench --houses 2 --tasks 3 --cases 10 --seed 7
"""
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import click
import numpy as np
from rich.console import Console

from mcrgames import __version__, configure_logging
from mcrgames.cli_io import formats
from mcrgames.config import BaseConfig
from mcrgames.errors import FormatError, McrError
from mcrgames.game_model import is_action_visible, is_turn_based, validate_game
from mcrgames.microgrid import (
    PRESCRIPTIONS, BillingMode, ExperimentConfig, evaluate_profile, format_rows, grid_equilibrium,
    optimal_coalition_schedule, random_instance, run_experiment,
)
from mcrgames.nash import (
    CoalitionOracle, HeuristicFailure, check_ne_outcome, construct_ne_heuristic, search_ne_outcome,
)
from mcrgames.transforms import coalition_game, turnify_round_robin
from mcrgames.zerosum_solver import solve

logger = logging.getLogger(__name__)

console = Console(stderr=True)

EXIT_INPUT = 1
EXIT_NO_EQUILIBRIUM = 2
EXIT_INFINITE = 3


@dataclass
class CliState:
    threads: int
    debug: bool
    out: Optional[str]


class McrGroup(click.Group):
    """Group mapping usage errors and library errors to exit code 1."""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as exc:
            exc.exit_code = EXIT_INPUT
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as exc:
            exc.exit_code = EXIT_INPUT
            raise
        except McrError as exc:
            state = ctx.find_object(CliState)
            if state is not None and state.debug:
                console.print_exception()
            console.print(f"[red]error:[/red] {exc}", highlight=False)
            ctx.exit(EXIT_INPUT)


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None


def _write(ctx: click.Context, text: str) -> None:
    state = ctx.find_object(CliState)
    if state is not None and state.out:
        with click.open_file(state.out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@click.group(cls=McrGroup)
@click.option("--threads", type=click.IntRange(min=1), default=BaseConfig.DEFAULT_THREADS,
              show_default=True, help="Worker threads for per-player solves and experiment cases.")
@click.option("--debug", is_flag=True, help="Verbose logs and tracebacks.")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write data to this file instead of standard output.")
@click.version_option(version=__version__, prog_name="mcrgames")
@click.pass_context
def cli(ctx, threads, debug, out):
    """Multi-player min-cost reachability games and the micro-grid case study."""
    configure_logging(BaseConfig, "DEBUG" if debug else None)
    ctx.obj = CliState(threads, debug, out)


# ===== GAMES =====

@cli.command()
@click.argument("game_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def validate(ctx, game_file):
    """Check the well-formedness rules of a game file."""
    data = _read(game_file)
    game = formats.parse_game(data, validate=False)
    violations = validate_game(game)
    for v in violations:
        line = formats.line_of(data, v.subject)
        where = f"line {line}: " if line else ""
        console.print(f"{where}{v}", highlight=False)
    if violations:
        ctx.exit(EXIT_INPUT)
    console.print(f"ok: {len(game.vertices)} vertices, {game.num_players} players", highlight=False)


@cli.command("solve-zerosum")
@click.argument("game_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--player", type=int, required=True, help="Player minimizing against the others.")
@click.option("--method", type=click.Choice(["auto", "backward", "iterate"]), default="auto", show_default=True)
@click.pass_context
def solve_zerosum(ctx, game_file, player, method):
    """Values of a player against the coalition of all other players."""
    game = formats.parse_game(_read(game_file))
    if game.initial is None:
        raise FormatError("game file has no initial vertex")
    game.check_player(player)
    vm = solve(coalition_game(game, player, (game.initial,)), method)
    _write(ctx, formats.emit(formats.value_map_to_file(vm, player)))
    console.print(f"value of player {player} at {game.initial}: {vm.initial_value}", highlight=False)
    if not vm.initial_value.is_finite():
        ctx.exit(EXIT_INFINITE)


@cli.command("find-ne")
@click.argument("game_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--horizon", type=click.IntRange(min=1), default=None,
              help="Length bound of the fallback search (default 2|V|+1).")
@click.pass_context
def find_ne(ctx, game_file, horizon):
    """Construct a Nash equilibrium outcome and its certificate."""
    state = ctx.find_object(CliState)
    game = formats.parse_game(_read(game_file))
    if game.initial is None:
        raise FormatError("game file has no initial vertex")
    if not is_action_visible(game):
        raise McrError("find-ne needs an action-visible game")
    if is_turn_based(game) is None:
        logger.info("game is concurrent; splitting every step round-robin")
        game = turnify_round_robin(game, tuple(game.players))
    oracle = CoalitionOracle(game, state.threads)
    result = construct_ne_heuristic(game, game.initial, oracle)
    if isinstance(result, HeuristicFailure):
        bound = horizon or 2 * len(game.vertices) + 1
        console.print(f"construction failed ({result.reason}); searching plays up to {bound} steps",
                      highlight=False)
        result = search_ne_outcome(game, game.initial, bound, oracle)
    _write(ctx, formats.emit(formats.certificate_to_file(game, result)))
    if isinstance(result, HeuristicFailure):
        console.print(f"no equilibrium outcome: {result.reason}", highlight=False)
        ctx.exit(EXIT_NO_EQUILIBRIUM)
    console.print(f"equilibrium outcome {' '.join(map(str, result.play))}", highlight=False)


@cli.command("check-ne")
@click.argument("game_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("play_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def check_ne(ctx, game_file, play_file):
    """Check whether a play is the outcome of a Nash equilibrium."""
    state = ctx.find_object(CliState)
    game = formats.parse_game(_read(game_file))
    play = formats.parse_play(_read(play_file))
    cert = check_ne_outcome(game, play, CoalitionOracle(game, state.threads))
    _write(ctx, formats.emit(formats.certificate_to_file(game, cert)))
    for c in cert.failing_checks:
        d = c.deviation
        console.print(f"player {d.player} gains by deviating at step {d.position} to {d.new_vertex}: "
                      f"{c.lhs} > {c.deviation_payoff} + {c.retaliation}", highlight=False)
    if not cert.valid:
        ctx.exit(EXIT_NO_EQUILIBRIUM)


# ===== MICRO-GRID =====

@cli.group(cls=McrGroup)
def grid():
    """Micro-grid case study."""


def _load_instance(path: str, billing: Optional[str] = None, credit_exports: Optional[bool] = None):
    inst = formats.parse_instance(_read(path))
    changes = {}
    if billing is not None:
        changes["billing_mode"] = BillingMode(billing)
    if credit_exports is not None:
        changes["credit_exports"] = credit_exports
    if changes:
        inst = replace(inst, **changes)
    return inst


@grid.command("schedule")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def grid_schedule(ctx, instance_file):
    """Import-minimizing coalition schedule and E_min."""
    inst = _load_instance(instance_file)
    schedule, e_min = optimal_coalition_schedule(inst)
    _write(ctx, formats.emit(formats.schedule_to_file(schedule, e_min)))
    console.print(f"E_min = {e_min}: {schedule.describe()}", highlight=False)


@grid.command("ne")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--billing", type=click.Choice(["balanced", "literal"]), default=None)
@click.option("--credit-exports/--no-credit-exports", default=None)
@click.option("--order-seed", type=int, default=None, help="Seed of the per-slot house order.")
@click.option("--prescription", type=click.Choice(list(PRESCRIPTIONS)), default="heuristic", show_default=True)
@click.pass_context
def grid_ne(ctx, instance_file, billing, credit_exports, order_seed, prescription):
    """Prescribed schedule, penalties and certificate in the penalized game."""
    state = ctx.find_object(CliState)
    inst = _load_instance(instance_file, billing, credit_exports)
    eq = grid_equilibrium(inst, order_seed, prescription, state.threads)
    _write(ctx, formats.emit(formats.equilibrium_to_file(eq)))
    totals = ", ".join(f"{h}={b}" for h, b in zip(inst.houses, eq.report.totals))
    console.print(f"{eq.schedule.describe()} bills {totals}", highlight=False)
    if not eq.valid:
        ctx.exit(EXIT_NO_EQUILIBRIUM)


@grid.command("eval")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("schedule_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def grid_eval(ctx, instance_file, schedule_file):
    """Imported energy and bills of a schedule next to the coalition optimum."""
    inst = _load_instance(instance_file)
    schedule = formats.parse_schedule(_read(schedule_file))
    metrics = evaluate_profile(inst, schedule)
    _write(ctx, formats.emit(formats.metrics_to_file(metrics)))
    console.print(f"imported {metrics.imported_energy} (E_min {metrics.e_min})", highlight=False)


@grid.command("gen")
@click.option("--houses", type=click.IntRange(min=1), required=True)
@click.option("--tasks", type=click.IntRange(min=0), required=True, help="Tasks per house.")
@click.option("--slots", type=click.IntRange(min=1), default=BaseConfig.DEFAULT_SLOTS, show_default=True)
@click.option("--seed", type=int, required=True)
@click.pass_context
def grid_gen(ctx, houses, tasks, slots, seed):
    """Random instance drawn from a seed."""
    inst = random_instance(houses, tasks, slots, np.random.default_rng(seed))
    _write(ctx, formats.emit(formats.instance_to_file(inst)))


@grid.command("bench")
@click.option("--houses", type=click.IntRange(min=1), required=True)
@click.option("--tasks", type=click.IntRange(min=0), required=True, help="Tasks per house.")
@click.option("--cases", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--slots", type=click.IntRange(min=1), default=BaseConfig.BENCH_SLOTS, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--billing", type=click.Choice(["balanced", "literal"]), default="balanced", show_default=True)
@click.option("--credit-exports", is_flag=True)
@click.option("--prescription", type=click.Choice(list(PRESCRIPTIONS)), default="heuristic", show_default=True)
@click.pass_context
def grid_bench(ctx, houses, tasks, cases, slots, seed, billing, credit_exports, prescription):
    """One row of the results table over seeded random cases."""
    state = ctx.find_object(CliState)
    config = ExperimentConfig(
        num_houses=houses, num_tasks=tasks, num_cases=cases, slots=slots, seed=seed,
        billing_mode=BillingMode(billing), credit_exports=credit_exports,
        prescription=prescription, threads=state.threads,
    )
    row = run_experiment(config)
    _write(ctx, format_rows([row]))
    uncertified = sum(1 for r in row.results if not r.certified)
    if uncertified:
        console.print(f"{uncertified} case(s) without a valid penalized certificate", highlight=False)
