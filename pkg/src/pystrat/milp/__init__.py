from .problem import (
    Sense, Relation, Status, LinearProgram, MilpProblem, MilpSolution,
    ProblemBuilder
)
from .simplex import simplex_solve
from .highs import highs_solve
from .bnb import branch_and_bound, solve_lp, LP_METHODS
from .lpformat import write_lp
