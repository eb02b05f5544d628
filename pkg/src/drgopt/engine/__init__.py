from .log import CSV_HEADER, ConvergenceLog, LogRow, dissipation_audit
from .roots import bisect, brent_dekker, brent_dekker_batch, expand_bracket
from .schedules import StepSchedule, StopRule
from .sweep import (EnergyProblem, Problem, RunResult, SolverOptions, SweepState, SweepStats,
                    colored_sweep, coordinate_residual, itoh_abe_drg, itoh_abe_sweep, run,
                    solve_coordinate)
