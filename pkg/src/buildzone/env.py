"""Episode state machine: action decoding, agent kinematics, and rewards.

The agent is an axis-aligned box (0.6 wide, 1.8 tall) walking the zone floor.
Movement verbs translate 0.25 blocks per step relative to yaw; a jump clears
exactly one block; gravity pulls at 0.08 blocks/step^2 down to a terminal
velocity of 3. Blocks are placed and broken by casting a ray from the eye
(1.6 above the feet) along the view direction with a 3-block reach.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import tasks as tasks_mod
from .grid import (
    ZONE_X,
    ZONE_Y,
    ZONE_Z,
    BlockChange,
    Grid,
    face_normal,
    in_zone,
    raycast,
)
from .intersect import (
    IntersectionTracker,
    f1_from_counts,
    shaped_reward,
    shaped_reward_for_distance,
)

STEP_SIZE = 0.25
EYE_HEIGHT = 1.6
BODY_HALF_WIDTH = 0.3
BODY_HEIGHT = 1.8
GRAVITY = 0.08
TERMINAL_VELOCITY = 3.0
JUMP_VELOCITY = 0.42
CAMERA_MAX_STEP = 5.0
REACH = 3.0

VERB_NOOP = 0
VERB_FORWARD = 1
VERB_BACKWARD = 2
VERB_RIGHT = 3
VERB_LEFT = 4
VERB_JUMP = 5
VERB_BREAK = 6
VERB_PLACE = 7
VERB_SELECT_BASE = 8  # 8..13 select colors 1..6
VERB_END_EPISODE = 14

VERB_NAMES = (
    "noop",
    "step_forward",
    "step_backward",
    "step_right",
    "step_left",
    "jump",
    "break_block",
    "place_block",
    "select_1",
    "select_2",
    "select_3",
    "select_4",
    "select_5",
    "select_6",
    "end_episode",
)
VERB_IDS = {name: i for i, name in enumerate(VERB_NAMES)}

N_BASE_VERBS = 14

REWARD_MODES = ("max_intersection_delta", "shaped_subtask")
INVENTORY_MODES = ("unlimited", "counted")
PROFILES = ("visual", "full")


@dataclass
class Action:
    verb: int
    camera: Tuple[float, float] = (0.0, 0.0)  # (delta pitch, delta yaw) degrees


@dataclass
class AgentPose:
    x: float
    y: float
    z: float
    pitch: float = 0.0
    yaw: float = 0.0
    vertical_velocity: float = 0.0

    def feet_cell(self) -> Tuple[int, int, int]:
        return (int(math.floor(self.x)), int(math.floor(self.y)), int(math.floor(self.z)))

    def eye(self) -> Tuple[float, float, float]:
        return (self.x, self.y + EYE_HEIGHT, self.z)

    def view_direction(self) -> Tuple[float, float, float]:
        """Unit view vector; yaw 0 faces -z, positive pitch looks up."""
        pitch = math.radians(self.pitch)
        yaw = math.radians(self.yaw)
        cos_p = math.cos(pitch)
        return (math.sin(yaw) * cos_p, math.sin(pitch), -math.cos(yaw) * cos_p)


@dataclass
class Inventory:
    counts: List[int] = field(default_factory=lambda: [0] * 6)
    selected: int = 1


@dataclass
class EpisodeConfig:
    max_steps: int = 500
    reward_mode: str = "max_intersection_delta"
    render: bool = False
    end_action_enabled: bool = False
    inventory_mode: str = "unlimited"
    inventory_count: int = 20
    profile: str = "full"

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if self.reward_mode not in REWARD_MODES:
            raise ValueError(f"unknown reward_mode {self.reward_mode!r}")
        if self.inventory_mode not in INVENTORY_MODES:
            raise ValueError(f"unknown inventory_mode {self.inventory_mode!r}")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")

    @classmethod
    def from_dict(cls, data: Dict) -> "EpisodeConfig":
        profile = data.get("profile")
        defaults = {}
        if profile == "visual":
            defaults["render"] = True
        fields = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**{**defaults, **fields})

    def to_dict(self) -> Dict:
        return {
            "max_steps": self.max_steps,
            "reward_mode": self.reward_mode,
            "render": self.render,
            "end_action_enabled": self.end_action_enabled,
            "inventory_mode": self.inventory_mode,
            "inventory_count": self.inventory_count,
            "profile": self.profile,
        }


@dataclass
class Observation:
    grid: Grid
    inventory: List[int]
    selected: int
    pose: Tuple[float, float, float, float, float]  # x, y, z, pitch, yaw
    compass: float
    chat: str
    pov: Optional[np.ndarray] = None


@dataclass
class StepResult:
    observation: Observation
    reward: float
    done: bool
    info: Dict


def wrap_yaw(yaw: float) -> float:
    return yaw % 360.0


def signed_angle(degrees: float) -> float:
    """Wrap to [-180, 180)."""
    return (degrees + 180.0) % 360.0 - 180.0


class Environment:
    """One build-zone episode; owns its grids, tracker, and agent state."""

    def __init__(self, config: Optional[EpisodeConfig] = None):
        self.config = config or EpisodeConfig()
        self.task: Optional[tasks_mod.TaskRecord] = None
        self.grid = Grid()
        self.target = Grid()
        self.tracker: Optional[IntersectionTracker] = None
        self.pose = AgentPose(ZONE_X / 2.0, 0.0, ZONE_Z / 2.0)
        self.inventory = Inventory()
        self.steps = 0
        self.done = False
        self.termination_reason: Optional[str] = None
        self.seed = 0
        self._last_change: Optional[BlockChange] = None
        self._chat = ""

    # -- lifecycle ---------------------------------------------------------

    def reset(self, task: "tasks_mod.TaskRecord", seed: int = 0) -> Observation:
        """Start an episode on the given task; deterministic for a fixed seed."""
        self.task = task
        self.seed = seed
        self.grid = task.starting_grid.copy()
        self.target = task.target_grid.copy()
        self.tracker = IntersectionTracker(self.target, self.grid)
        spawn_col = (ZONE_X // 2, ZONE_Z // 2)
        spawn_y = float(self.grid.column_top(*spawn_col))
        self.pose = AgentPose(ZONE_X / 2.0, spawn_y, ZONE_Z / 2.0, pitch=0.0, yaw=0.0)
        if self.config.inventory_mode == "counted":
            self.inventory = Inventory(counts=[self.config.inventory_count] * 6)
        else:
            self.inventory = Inventory()
        self.steps = 0
        self.done = False
        self.termination_reason = None
        self._last_change = None
        self._chat = "\n".join(list(task.context_utterances) + [task.instruction]).strip()
        return self.observe()

    def step(self, action: Action) -> StepResult:
        if self.done:
            raise RuntimeError("step() called on a finished episode")
        if self.tracker is None:
            raise RuntimeError("step() before reset()")

        verb = action.verb
        if verb == VERB_END_EPISODE and not self.config.end_action_enabled:
            raise ValueError("end_episode action is disabled in this configuration")
        if not 0 <= verb <= (VERB_END_EPISODE if self.config.end_action_enabled else N_BASE_VERBS - 1):
            raise ValueError(f"unknown verb {verb}")

        # Camera first, clamped per-step.
        dp = min(max(action.camera[0], -CAMERA_MAX_STEP), CAMERA_MAX_STEP)
        dy = min(max(action.camera[1], -CAMERA_MAX_STEP), CAMERA_MAX_STEP)
        self.pose.pitch = min(max(self.pose.pitch + dp, -90.0), 90.0)
        self.pose.yaw = wrap_yaw(self.pose.yaw + dy)
        self._last_change = None

        prev_size = self.tracker.size
        change: Optional[BlockChange] = None
        shaped_target = None
        if self.config.reward_mode == "shaped_subtask":
            shaped_target = tasks_mod.next_subtask(self.grid, self.target)

        move_dx = move_dz = 0.0
        if verb == VERB_FORWARD or verb == VERB_BACKWARD:
            sign = 1.0 if verb == VERB_FORWARD else -1.0
            yaw = math.radians(self.pose.yaw)
            move_dx = sign * math.sin(yaw) * STEP_SIZE
            move_dz = -sign * math.cos(yaw) * STEP_SIZE
        elif verb == VERB_RIGHT or verb == VERB_LEFT:
            sign = 1.0 if verb == VERB_RIGHT else -1.0
            yaw = math.radians(self.pose.yaw)
            move_dx = sign * math.cos(yaw) * STEP_SIZE
            move_dz = sign * math.sin(yaw) * STEP_SIZE
        elif verb == VERB_JUMP:
            if self._grounded():
                self.pose.vertical_velocity = JUMP_VELOCITY
        elif verb == VERB_BREAK:
            change = self._try_break()
        elif verb == VERB_PLACE:
            change = self._try_place()
        elif VERB_SELECT_BASE <= verb < VERB_SELECT_BASE + 6:
            self.inventory.selected = verb - VERB_SELECT_BASE + 1

        self._kinematics_tick(move_dx, move_dz)

        new_size = prev_size
        if change is not None:
            new_size = self.tracker.apply(change)
            self._last_change = change

        if self.config.reward_mode == "max_intersection_delta":
            reward = float(new_size - prev_size)
        else:
            reward = self._shaped_reward(change, shaped_target)

        self.steps += 1
        target_count = self.target.nonzero_count
        if verb == VERB_END_EPISODE:
            self.done = True
            self.termination_reason = "end_action"
        elif new_size == target_count and self.grid.nonzero_count == target_count:
            self.done = True
            self.termination_reason = "complete"
        elif self.steps >= self.config.max_steps:
            self.done = True
            self.termination_reason = "time_limit"

        obs = self.observe()
        info = {
            "intersection_size": new_size,
            "f1_so_far": f1_from_counts(new_size, self.grid.nonzero_count, target_count)[2],
            "termination_reason": self.termination_reason,
        }
        return StepResult(obs, reward, self.done, info)

    def _shaped_reward(self, change: Optional[BlockChange], subtask) -> float:
        if change is None or subtask is None:
            return 0.0
        if change.new != 0:
            return shaped_reward(
                (change.x, change.y, change.z), subtask.cell, self.pose.feet_cell()
            )
        d = sum(abs(a - b) for a, b in zip((change.x, change.y, change.z), subtask.cell))
        return shaped_reward_for_distance(d)

    # -- kinematics --------------------------------------------------------

    def _collides(self, x: float, y: float, z: float) -> bool:
        """Body box at feet (x, y, z) overlaps a solid cell or the floor."""
        if y < 0.0:
            return True
        x0, x1 = x - BODY_HALF_WIDTH, x + BODY_HALF_WIDTH
        z0, z1 = z - BODY_HALF_WIDTH, z + BODY_HALF_WIDTH
        cy_hi = min(int(math.floor(y + BODY_HEIGHT - 1e-9)), ZONE_Y - 1)
        cy_lo = max(int(math.floor(y + 1e-9)), 0)
        if cy_lo > cy_hi:
            return False
        cells = self.grid.cells
        for cx in range(int(math.floor(x0)), int(math.floor(x1 - 1e-9)) + 1):
            if not 0 <= cx < ZONE_X:
                continue
            for cz in range(int(math.floor(z0)), int(math.floor(z1 - 1e-9)) + 1):
                if not 0 <= cz < ZONE_Z:
                    continue
                for cy in range(cy_lo, cy_hi + 1):
                    if cells[cy, cx, cz] != 0:
                        return True
        return False

    def _grounded(self) -> bool:
        if self.pose.vertical_velocity > 0.0:
            return False
        if self.pose.y <= 0.0:
            return True
        return self._collides(self.pose.x, self.pose.y - 1e-6, self.pose.z) and not self._collides(
            self.pose.x, self.pose.y, self.pose.z
        )

    def _kinematics_tick(self, dx: float, dz: float) -> None:
        pose = self.pose
        # Horizontal, axis-separated; a blocked axis leaves that axis in place.
        if dx != 0.0:
            nx = min(max(pose.x + dx, BODY_HALF_WIDTH), ZONE_X - BODY_HALF_WIDTH)
            if not self._collides(nx, pose.y, pose.z):
                pose.x = nx
        if dz != 0.0:
            nz = min(max(pose.z + dz, BODY_HALF_WIDTH), ZONE_Z - BODY_HALF_WIDTH)
            if not self._collides(pose.x, pose.y, nz):
                pose.z = nz
        # Vertical, in sub-block moves so fast falls cannot skip a landing.
        remaining = pose.vertical_velocity
        while remaining != 0.0:
            d = min(max(remaining, -0.9), 0.9)
            ny = pose.y + d
            if d < 0.0:
                if ny < 0.0:
                    pose.y = 0.0
                    pose.vertical_velocity = 0.0
                    return self._apply_gravity()
                if self._collides(pose.x, ny, pose.z):
                    pose.y = float(math.floor(ny) + 1)
                    pose.vertical_velocity = 0.0
                    return self._apply_gravity()
            else:
                if self._collides(pose.x, ny, pose.z):
                    pose.vertical_velocity = 0.0
                    return self._apply_gravity()
            pose.y = ny
            remaining -= d
        self._apply_gravity()

    def _apply_gravity(self) -> None:
        self.pose.vertical_velocity = max(
            self.pose.vertical_velocity - GRAVITY, -TERMINAL_VELOCITY
        )
        if self.pose.vertical_velocity < 0.0 and self._grounded():
            self.pose.vertical_velocity = 0.0

    # -- block edits -------------------------------------------------------

    def _cell_overlaps_body(self, cell: Tuple[int, int, int]) -> bool:
        cx, cy, cz = cell
        p = self.pose
        return (
            cx < p.x + BODY_HALF_WIDTH
            and cx + 1 > p.x - BODY_HALF_WIDTH
            and cz < p.z + BODY_HALF_WIDTH
            and cz + 1 > p.z - BODY_HALF_WIDTH
            and cy < p.y + BODY_HEIGHT
            and cy + 1 > p.y
        )

    def _try_place(self) -> Optional[BlockChange]:
        color = self.inventory.selected
        counted = self.config.inventory_mode == "counted"
        if counted and self.inventory.counts[color - 1] <= 0:
            return None
        hit = raycast(self.grid, self.pose.eye(), self.pose.view_direction(), REACH)
        if hit is None:
            return None
        if hit.ground:
            candidate = hit.cell
        else:
            n = face_normal(hit.face)
            candidate = (hit.cell[0] + n[0], hit.cell[1] + n[1], hit.cell[2] + n[2])
        if not in_zone(*candidate):
            return None
        if self.grid.get(*candidate) != 0:
            return None
        if self._cell_overlaps_body(candidate):
            # Pillar-up: filling the feet cell is allowed when the agent can
            # ride up onto the new block.
            if candidate[1] != int(math.floor(self.pose.y)):
                return None
            lift_y = float(candidate[1] + 1)
            change = self.grid.set(candidate[0], candidate[1], candidate[2], color)
            if self._collides(self.pose.x, lift_y, self.pose.z):
                self.grid.set(candidate[0], candidate[1], candidate[2], 0)
                return None
            self.pose.y = lift_y
            self.pose.vertical_velocity = 0.0
        else:
            change = self.grid.set(candidate[0], candidate[1], candidate[2], color)
        if counted:
            self.inventory.counts[color - 1] -= 1
        return change

    def _try_break(self) -> Optional[BlockChange]:
        hit = raycast(self.grid, self.pose.eye(), self.pose.view_direction(), REACH)
        if hit is None or hit.ground:
            return None
        change = self.grid.set(hit.cell[0], hit.cell[1], hit.cell[2], 0)
        if self.config.inventory_mode == "counted":
            self.inventory.counts[change.old - 1] += 1
        return change

    # -- observations ------------------------------------------------------

    def compass(self) -> float:
        dx = ZONE_X / 2.0 - self.pose.x
        dz = ZONE_Z / 2.0 - self.pose.z
        if dx == 0.0 and dz == 0.0:
            return 0.0
        bearing = math.degrees(math.atan2(dx, -dz))
        return signed_angle(bearing - self.pose.yaw)

    def observe(self) -> Observation:
        pov = None
        if self.config.render:
            from . import render as render_mod

            pov = render_mod.render(self.pose, self.grid)
        p = self.pose
        return Observation(
            grid=self.grid.copy(),
            inventory=list(self.inventory.counts),
            selected=self.inventory.selected,
            pose=(p.x, p.y, p.z, p.pitch, p.yaw),
            compass=self.compass(),
            chat=self._chat,
            pov=pov,
        )
