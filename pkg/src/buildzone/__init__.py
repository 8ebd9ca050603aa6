"""buildzone: a fast voxel build-zone environment with alignment-invariant rewards."""

from .grid import (
    AIR,
    BLUE,
    COLOR_NAMES,
    COLOR_RGB,
    GREEN,
    ORANGE,
    PURPLE,
    RED,
    YELLOW,
    ZONE_X,
    ZONE_Y,
    ZONE_Z,
    BlockChange,
    Grid,
    RayHit,
    connected_components,
    raycast,
    rotate_y90,
    translate_xz,
)
from .intersect import (
    F1Report,
    IntersectionResult,
    IntersectionTracker,
    f1_score,
    max_intersection_naive,
    shaped_reward,
    shaped_reward_for_distance,
    step_reward,
    tracker_init,
)
from .env import Action, AgentPose, Environment, EpisodeConfig, Observation, StepResult
from .tasks import (
    Subtask,
    TaskRecord,
    generate_task,
    label_skills,
    load_tasks,
    next_subtask,
    save_tasks,
)

__version__ = "0.1.0"

__all__ = [
    "AIR",
    "BLUE",
    "GREEN",
    "RED",
    "ORANGE",
    "PURPLE",
    "YELLOW",
    "COLOR_NAMES",
    "COLOR_RGB",
    "ZONE_X",
    "ZONE_Y",
    "ZONE_Z",
    "Grid",
    "BlockChange",
    "RayHit",
    "connected_components",
    "raycast",
    "rotate_y90",
    "translate_xz",
    "F1Report",
    "IntersectionResult",
    "IntersectionTracker",
    "f1_score",
    "max_intersection_naive",
    "shaped_reward",
    "shaped_reward_for_distance",
    "step_reward",
    "tracker_init",
    "Action",
    "AgentPose",
    "Environment",
    "EpisodeConfig",
    "Observation",
    "StepResult",
    "Subtask",
    "TaskRecord",
    "generate_task",
    "label_skills",
    "load_tasks",
    "next_subtask",
    "save_tasks",
]
