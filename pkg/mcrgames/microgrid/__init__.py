"""
Micro-grid case study: houses share solar production, schedule their tasks
over the slots of a day and split the bill of energy bought from outside.
"""
from mcrgames.microgrid.billing import BillReport, SlotBill, bill_schedule, slot_bill, slot_bill_report
from mcrgames.microgrid.experiment import (
    ExperimentConfig, ExperimentRow, Metrics, evaluate_profile, format_rows, parse_rows,
    run_experiment,
)
from mcrgames.microgrid.games import (
    BilledGame, DayOver, EnergyGame, GridState, TurnifiedGame, build_billed_game, build_energy_game,
    build_turnified_billed_game, exported_energy, imported_energy, optimal_coalition_schedule,
)
from mcrgames.microgrid.instance import (
    BillingMode, GridInstance, Schedule, Task, example_instance, random_instance,
)
from mcrgames.microgrid.penalty import (
    PRESCRIPTIONS, Flagged, GridEquilibrium, build_penalized_game, certify_penalized, deviation_floor,
    grid_equilibrium, penalize,
)

__all__ = [
    "BillReport", "SlotBill", "bill_schedule", "slot_bill", "slot_bill_report",
    "ExperimentConfig", "ExperimentRow", "Metrics", "evaluate_profile", "format_rows", "parse_rows",
    "run_experiment",
    "BilledGame", "DayOver", "EnergyGame", "GridState", "TurnifiedGame", "build_billed_game", "build_energy_game",
    "build_turnified_billed_game", "exported_energy", "imported_energy", "optimal_coalition_schedule",
    "BillingMode", "GridInstance", "Schedule", "Task", "example_instance", "random_instance",
    "Flagged", "GridEquilibrium", "build_penalized_game", "certify_penalized", "deviation_floor",
    "PRESCRIPTIONS", "grid_equilibrium", "penalize",
]
