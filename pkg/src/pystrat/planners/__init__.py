from .params import RrtVariant, AstarParams, RrtParams, CemParams, GradParams
from .path import Path
from .astar import occupancy_grid, grid_search, astar
from .rrt import rrt
from .objective import Target, TrajectoryCost
from .cem import CemResult, CrossEntropyOptimizer, cem_optimize, cem_plan
from .grad import cost_gradient, grad_plan
