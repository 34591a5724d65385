"""
Benchmark of the equilibrium pipeline against the coalition optimum.

For every seeded random instance the equilibrium schedule is compared with
the import-minimizing coalition schedule: imported energy difference and
per-house bill difference in percent, averaged over houses then cases.

Usage:
    row = run_experiment(ExperimentConfig(num_houses=2, num_tasks=3, num_cases=10, seed=7))
    print(format_rows([row]))
"""
import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np

from mcrgames.config import BaseConfig
from mcrgames.errors import FormatError
from mcrgames.microgrid.billing import bill_schedule
from mcrgames.microgrid.games import exported_energy, imported_energy, optimal_coalition_schedule
from mcrgames.microgrid.instance import BillingMode, GridInstance, Schedule, random_instance
from mcrgames.microgrid.penalty import GridEquilibrium, grid_equilibrium

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ("Houses", "Tasks", "Number of cases", "Total energy difference", "Average bill difference")


@dataclass(frozen=True)
class Metrics:
    """Figures of one schedule next to the coalition-optimal reference."""
    imported_energy: int
    exported_energy: int
    bills: Tuple[Fraction, ...]
    e_min: int
    reference_bills: Tuple[Fraction, ...]

    @property
    def energy_gap(self) -> int:
        return self.imported_energy - self.e_min

    @property
    def bill_gap_percent(self) -> Tuple[Fraction, ...]:
        return tuple(
            100 * (b - r) / max(Fraction(1), abs(r))
            for b, r in zip(self.bills, self.reference_bills)
        )

    @property
    def mean_bill_gap_percent(self) -> Fraction:
        gaps = self.bill_gap_percent
        return sum(gaps, Fraction(0)) / len(gaps) if gaps else Fraction(0)


def evaluate_profile(inst: GridInstance, subject: Union[Schedule, GridEquilibrium],
                     reference: Optional[Schedule] = None) -> Metrics:
    """
    Metrics of a complete schedule, or of an equilibrium's prescribed
    schedule. Penalties are not part of the bills: no house deviates.

    Raises:
        ScheduleError: If the schedule is incomplete (carries the missing tasks).
    """
    schedule = subject.schedule if isinstance(subject, GridEquilibrium) else subject
    schedule.validate(inst)
    if reference is None:
        reference, e_min = optimal_coalition_schedule(inst)
    else:
        reference.validate(inst)
        e_min = imported_energy(inst, reference)
    return Metrics(
        imported_energy=imported_energy(inst, schedule),
        exported_energy=exported_energy(inst, schedule),
        bills=bill_schedule(inst, schedule).totals,
        e_min=e_min,
        reference_bills=bill_schedule(inst, reference).totals,
    )


@dataclass(frozen=True)
class ExperimentConfig:
    num_houses: int
    num_tasks: int
    num_cases: int = 10
    slots: int = BaseConfig.BENCH_SLOTS
    seed: int = 0
    p_in: Fraction = Fraction(BaseConfig.DEFAULT_P_IN)
    p_out: Fraction = Fraction(BaseConfig.DEFAULT_P_OUT)
    billing_mode: BillingMode = BillingMode.BALANCED
    credit_exports: bool = False
    prescription: str = "heuristic"
    threads: int = BaseConfig.DEFAULT_THREADS


@dataclass(frozen=True)
class CaseResult:
    index: int
    instance: GridInstance
    order_seed: int
    metrics: Metrics
    certified: bool


@dataclass(frozen=True)
class ExperimentRow:
    """One line of the results table."""
    houses: int
    tasks: int
    cases: int
    energy_difference: float
    bill_difference: float
    results: Tuple[CaseResult, ...] = ()

    def as_row(self) -> Tuple:
        return (self.houses, self.tasks, self.cases,
                f"{self.energy_difference:.2f}", f"{self.bill_difference:.2f}")


def _mean(values: Iterable) -> float:
    ordered = sorted(float(v) for v in values)
    if not ordered:
        return 0.0
    return round(float(np.mean(ordered)), 2) + 0.0


def run_case(config: ExperimentConfig, index: int, seq: np.random.SeedSequence) -> CaseResult:
    """Generate, solve and measure one case from its own seed sequence."""
    rng = np.random.default_rng(seq)
    inst = random_instance(config.num_houses, config.num_tasks, config.slots, rng,
                           config.p_in, config.p_out, config.billing_mode, config.credit_exports)
    order_seed = int(rng.integers(2**32))
    eq = grid_equilibrium(inst, order_seed, config.prescription)
    reference, _ = optimal_coalition_schedule(inst)
    metrics = evaluate_profile(inst, eq, reference)
    logger.debug("case %d: energy gap %d, bill gap %s%%, certified=%s",
                 index, metrics.energy_gap, float(metrics.mean_bill_gap_percent), eq.valid)
    return CaseResult(index, inst, order_seed, metrics, eq.valid)


def run_experiment(config: ExperimentConfig) -> ExperimentRow:
    """
    Run every case of a configuration and average the differences.

    Case seeds are spawned from the master seed, so the row only depends on
    the configuration, whatever the number of worker threads.
    """
    seqs = np.random.SeedSequence(config.seed).spawn(config.num_cases)
    workers = max(1, config.threads)
    if workers == 1:
        results = [run_case(config, i, s) for i, s in enumerate(seqs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda pair: run_case(config, *pair), enumerate(seqs)))
    results.sort(key=lambda r: r.index)
    row = ExperimentRow(
        houses=config.num_houses,
        tasks=config.num_tasks,
        cases=config.num_cases,
        energy_difference=_mean(r.metrics.energy_gap for r in results),
        bill_difference=_mean(r.metrics.mean_bill_gap_percent for r in results),
        results=tuple(results),
    )
    logger.info("experiment %d houses x %d tasks: energy %.2f, bill %.2f%%",
                row.houses, row.tasks, row.energy_difference, row.bill_difference)
    return row


def format_rows(rows: Iterable[ExperimentRow], header: bool = True) -> str:
    """Comma-separated table with the column names of the results table."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(TABLE_COLUMNS)
    for row in rows:
        writer.writerow(row.as_row())
    return buf.getvalue()


def parse_rows(text: str) -> List[ExperimentRow]:
    """
    Read a table written by format_rows; the header line is optional.

    Raises:
        FormatError: On a foreign header or a malformed row.
    """
    rows = []
    for n, fields in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not fields:
            continue
        if n == 1 and not fields[0].lstrip("-").isdigit():
            if tuple(fields) != TABLE_COLUMNS:
                raise FormatError(f"unexpected header {fields}", line=1)
            continue
        if len(fields) != len(TABLE_COLUMNS):
            raise FormatError(f"{len(fields)} fields, expected {len(TABLE_COLUMNS)}", line=n)
        try:
            rows.append(ExperimentRow(int(fields[0]), int(fields[1]), int(fields[2]),
                                      float(fields[3]), float(fields[4])))
        except ValueError as exc:
            raise FormatError(str(exc), line=n) from None
    return rows
