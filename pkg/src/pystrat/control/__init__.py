from .reference import reference_states, state_error, tracked_dims
from .pid import PidGains, PidState, pid_control, pid_track
from .lqr import (
    LqrWeights, solve_dare, lqr_gain, lqr_track, tracking_cost, DARE_TOL,
    DARE_MAX_ITERS
)
from .mpc import (
    MpcParams, MpcProblem, MpcResult, box_qp, solve_mpc, mpc_solve, mpc_track
)
