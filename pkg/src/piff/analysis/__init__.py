"""Mean-field analysis, fast simulation and bounded PCTL checking."""

from piff.analysis.meanfield import (aggregate_trajectory, fast_simulation, meanfield_trajectory,
                                     point_mass)
from piff.analysis.pctl import Checker, Verdict, check_pctl, check_pctl_naive, format_formula, parse_pctl

__all__ = [
    "Checker", "Verdict", "aggregate_trajectory", "check_pctl", "check_pctl_naive",
    "fast_simulation", "format_formula", "meanfield_trajectory", "parse_pctl", "point_mass",
]
