from .geometry import (
    Circle, Rect, Obstacle, Workspace, obstacle_from_dict,
    point_segment_distance, collides_point, collides_segment,
    segments_collide, points_collide, trajectory_collision_free,
    first_collision_step, signed_distance
)
from .feasibility import free_grid, path_exists
from .scenario import (
    SCHEMA_VERSION, DT, GOAL_RADIUS, HORIZONS, ScenarioKind, GoalDisc,
    ScenarioSpec, generate_scenario, dump_scenario, load_scenario
)
from .render import render_task_description, summarize_environment
from .outcome import EPS_TRACK, OutcomeReason, TaskOutcome, check_outcome
