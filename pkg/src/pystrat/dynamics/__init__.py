from .model import (
    ModelKind, Method, DynamicsModel, LinearSystem, AnyModel,
    MODEL_DIMS, DEFAULT_PARAMS, DEFAULT_CONTROL_BOUNDS
)
from .trajectory import Trajectory
from .ops import (
    eval_f, jacobians, step, linearize, rollout, rollout_states,
    nominal_controls, wrap_angle, step_jacobians
)
