from .formula import (
    Predicate, Region, Not, And, Or, Always, Eventually, Until, StlFormula,
    formula_horizon, walk
)
from .robustness import robustness, robustness_signal
from .syntax import StlSyntaxError, parse_formula, format_formula
from .encode import (
    MAX_HORIZON, EPSILON, MilpEncoding, StlPlan, encode_stl_milp, solve_stl,
    plan_stl
)
