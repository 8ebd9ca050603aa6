"""Privileged greedy builder: solves a task from the true grids.

The builder walks the column graph (step up at most one block, step down any
height), picks the next pending single-block edit that currently has support,
and lines up a raycast-verified shot before emitting place or break. Vertical
columns are built by riding them: place under the feet, get lifted, repeat.
Top faces just out of standing reach are placed mid-jump. It validates the
whole environment stack; it is not a learned policy.
"""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from .env import (
    CAMERA_MAX_STEP,
    EYE_HEIGHT,
    REACH,
    VERB_BACKWARD,
    VERB_BREAK,
    VERB_FORWARD,
    VERB_JUMP,
    VERB_LEFT,
    VERB_NOOP,
    VERB_PLACE,
    VERB_RIGHT,
    VERB_SELECT_BASE,
    Action,
    Environment,
    signed_angle,
)
from .grid import ZONE_X, ZONE_Z, Grid, raycast
from .tasks import Subtask, apply_subtask, next_subtask

AIM_TOLERANCE = 2.0  # accept an aim once inside this cone
AIM_EXACT = 0.01  # keep turning until the angles land exactly
MAX_CONSECUTIVE_FAILURES = 5
SUBTASK_STEP_BUDGET = 250
STAND_SEARCH_RADIUS = 4
JUMP_EYE_RISE = 1.0  # planning height for mid-jump shots (true peak is 1.32)
CENTER_TOLERANCE = 0.2

_FACE_BY_NORMAL = {
    (1, 0, 0): "+x",
    (-1, 0, 0): "-x",
    (0, 1, 0): "+y",
    (0, -1, 0): "-y",
    (0, 0, 1): "+z",
    (0, 0, -1): "-z",
}


@dataclass
class Shot:
    stand: Tuple[int, int]
    stand_height: int
    aim: Tuple[float, float, float]
    verb: int  # VERB_PLACE or VERB_BREAK
    want_cell: Tuple[int, int, int]
    want_face: Optional[str]
    want_ground: bool = False
    path: List[Tuple[int, int]] = field(default_factory=list)
    pillar: bool = False
    jump: bool = False
    want_pitch: float = 0.0
    want_yaw: float = 0.0
    yaw_free: bool = False


@dataclass
class BuilderPlan:
    """Scan-order subtask list; navigation is resolved during execution
    because every placement reshapes the walk graph."""

    subtasks: List[Subtask] = field(default_factory=list)
    current: int = 0
    unreachable: List[Subtask] = field(default_factory=list)


def enumerate_subtasks(current: Grid, target: Grid) -> List[Subtask]:
    """All single-block edits to convergence, in scan order."""
    sim = current.copy()
    out = []
    while (st := next_subtask(sim, target)) is not None:
        out.append(st)
        apply_subtask(sim, st)
    return out


def plan(current: Grid, target: Grid) -> BuilderPlan:
    return BuilderPlan(subtasks=enumerate_subtasks(current, target))


def column_heights(grid: Grid) -> Dict[Tuple[int, int], int]:
    return {(x, z): grid.column_top(x, z) for x in range(ZONE_X) for z in range(ZONE_Z)}


def walk_graph_bfs(
    heights: Dict[Tuple[int, int], int], start: Tuple[int, int]
) -> Dict[Tuple[int, int], Tuple[int, Optional[Tuple[int, int]]]]:
    """(distance, predecessor) per reachable column; up 1 by jump, down any."""
    reach: Dict[Tuple[int, int], Tuple[int, Optional[Tuple[int, int]]]] = {start: (0, None)}
    queue = deque([start])
    while queue:
        col = queue.popleft()
        dist, _ = reach[col]
        h = heights[col]
        for dx, dz in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nxt = (col[0] + dx, col[1] + dz)
            if nxt in reach or not (0 <= nxt[0] < ZONE_X and 0 <= nxt[1] < ZONE_Z):
                continue
            if heights[nxt] - h > 1:
                continue
            reach[nxt] = (dist + 1, col)
            queue.append(nxt)
    return reach


def path_to(reach, col) -> List[Tuple[int, int]]:
    path = []
    cur = col
    while cur is not None:
        path.append(cur)
        cur = reach[cur][1]
    path.reverse()
    return path


def _body_overlaps_cell(stand: Tuple[int, int], feet: float, cell: Tuple[int, int, int]) -> bool:
    cx, cy, cz = cell
    x, z = stand[0] + 0.5, stand[1] + 0.5
    return (
        cx < x + 0.3
        and cx + 1 > x - 0.3
        and cz < z + 0.3
        and cz + 1 > z - 0.3
        and cy < feet + 1.8
        and cy + 1 > feet
    )


def _aim_points_for_face(support: Tuple[int, int, int], normal: Tuple[int, int, int]):
    """Face center plus four insets, all nudged just inside the support."""
    sx, sy, sz = support
    nx, ny, nz = normal
    cx = sx + 0.5 + nx * 0.49
    cy = sy + 0.5 + ny * 0.49
    cz = sz + 0.5 + nz * 0.49
    yield (cx, cy, cz)
    offsets = []
    if nx == 0:
        offsets += [(0.3, 0, 0), (-0.3, 0, 0)]
    if ny == 0:
        offsets += [(0, 0.3, 0), (0, -0.3, 0)]
    if nz == 0:
        offsets += [(0, 0, 0.3), (0, 0, -0.3)]
    for ox, oy, oz in offsets:
        yield (cx + ox, cy + oy, cz + oz)


def _shot_hits(grid: Grid, eye, aim, want_cell, want_face=None, want_ground=False) -> bool:
    d = (aim[0] - eye[0], aim[1] - eye[1], aim[2] - eye[2])
    norm = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
    if norm < 1e-9 or norm > REACH:
        return False
    hit = raycast(grid, eye, (d[0] / norm, d[1] / norm, d[2] / norm), REACH)
    if hit is None:
        return False
    if want_ground:
        return hit.ground and hit.cell == want_cell
    if hit.ground or hit.cell != want_cell:
        return False
    return want_face is None or hit.face == want_face


def _aim_angles(eye, aim) -> Tuple[float, float, bool]:
    """(pitch, yaw, yaw_free): yaw is meaningless for a straight vertical aim."""
    dx, dy, dz = aim[0] - eye[0], aim[1] - eye[1], aim[2] - eye[2]
    horiz = math.sqrt(dx * dx + dz * dz)
    pitch = math.degrees(math.atan2(dy, horiz))
    if horiz < 0.05:
        return pitch, 0.0, True
    return pitch, math.degrees(math.atan2(dx, -dz)) % 360.0, False


class ScriptedBuilder:
    """Closed-loop controller around the support-aware subtask order."""

    def __init__(self, env: Environment):
        self.env = env
        self.subtask: Optional[Subtask] = None
        self.shot: Optional[Shot] = None
        self.path_i = 0
        self.failures = 0
        self.subtask_steps = 0
        self.expected_nonzero: Optional[int] = None
        self.blocked: Set[Subtask] = set()
        self.tried_shots: Set[Tuple] = set()
        self.unreachable: List[Subtask] = []

    # -- selection -----------------------------------------------------------

    def _supported(self, st: Subtask, grid: Grid) -> bool:
        if st.kind == "remove":
            return True
        x, y, z = st.cell
        if y == 0:
            return True
        return any(grid.is_solid(x + dx, y + dy, z + dz) for dx, dy, dz in _FACE_BY_NORMAL)

    def _choose_subtask(self) -> Optional[Subtask]:
        grid, target = self.env.grid, self.env.target
        pending = enumerate_subtasks(grid, target)
        if not pending:
            return None
        usable = [st for st in pending if st not in self.blocked]
        removals = [st for st in usable if st.kind == "remove"]
        # A wrong color sitting on a target cell blocks that cell's add; fix
        # those first. Stray extras (escape scaffolding) can wait until the
        # structure is done so tearing them down cannot strand the build.
        blocking = [st for st in removals if target.get(*st.cell) != 0]
        if blocking:
            return blocking[0]
        adds = [st for st in usable if st.kind == "add"]
        supported = [st for st in adds if self._supported(st, grid)]
        if supported:
            feet = self.env.pose.feet_cell()
            for st in supported:
                if (st.cell[0], st.cell[2]) == (feet[0], feet[2]) and st.cell[1] == feet[1]:
                    return st
            return supported[0]
        if removals:
            return removals[0]
        if adds:
            # Floating cells no placement can ever support: report and stop.
            for st in adds:
                if st not in self.unreachable:
                    self.unreachable.append(st)
        return None

    # -- shot planning ---------------------------------------------------------

    @staticmethod
    def _shot_key(col, aim, verb, jump=False):
        return (col, round(aim[0], 2), round(aim[1], 2), round(aim[2], 2), verb, jump)

    def _make_shot(self, col, h, aim, verb, want_cell, want_face, reach, **kw) -> Optional[Shot]:
        if self._shot_key(col, aim, verb, kw.get("jump", False)) in self.tried_shots:
            return None
        eye_h = h + EYE_HEIGHT + (JUMP_EYE_RISE if kw.get("jump") else 0.0)
        eye = (col[0] + 0.5, eye_h, col[1] + 0.5)
        pitch, yaw, yaw_free = _aim_angles(eye, aim)
        return Shot(
            stand=col,
            stand_height=h,
            aim=aim,
            verb=verb,
            want_cell=want_cell,
            want_face=want_face,
            path=path_to(reach, col),
            want_pitch=pitch,
            want_yaw=yaw,
            yaw_free=yaw_free,
            **kw,
        )

    def _plan_shot(self, st: Subtask) -> Optional[Shot]:
        grid = self.env.grid
        pose = self.env.pose
        heights = column_heights(grid)
        start = (
            min(max(int(math.floor(pose.x)), 0), ZONE_X - 1),
            min(max(int(math.floor(pose.z)), 0), ZONE_Z - 1),
        )
        reach = walk_graph_bfs(heights, start)
        c = st.cell
        order = sorted(
            (col for col in reach if abs(col[0] - c[0]) + abs(col[1] - c[2]) <= STAND_SEARCH_RADIUS),
            key=lambda col: (abs(col[0] - c[0]) + abs(col[1] - c[2]), reach[col][0]),
        )
        jump_shot: Optional[Shot] = None
        for col in order:
            h = heights[col]
            eye = (col[0] + 0.5, h + EYE_HEIGHT, col[1] + 0.5)
            if st.kind == "remove":
                aims = [(c[0] + 0.5, c[1] + 0.5, c[2] + 0.5)]
                for n in _FACE_BY_NORMAL:
                    aims.extend(_aim_points_for_face(c, n))
                for aim in aims:
                    if _shot_hits(grid, eye, aim, c):
                        shot = self._make_shot(col, h, aim, VERB_BREAK, c, None, reach)
                        if shot is not None:
                            return shot
                continue
            if col == (c[0], c[2]):
                # Our body fills the target column: only the pillar-up works.
                if h == c[1] and c[1] >= 1 and grid.is_solid(c[0], c[1] - 1, c[2]):
                    aim = (c[0] + 0.5, h - 0.5, c[2] + 0.5)
                    shot = self._make_shot(
                        col, h, aim, VERB_PLACE, (c[0], c[1] - 1, c[2]), "+y", reach, pillar=True
                    )
                    if shot is not None:
                        return shot
                continue
            if _body_overlaps_cell(col, h, c):
                continue
            if c[1] == 0:
                aim = (c[0] + 0.5, -0.01, c[2] + 0.5)
                if _shot_hits(grid, eye, aim, (c[0], 0, c[2]), want_ground=True):
                    shot = self._make_shot(
                        col, h, aim, VERB_PLACE, (c[0], 0, c[2]), "+y", reach, want_ground=True
                    )
                    if shot is not None:
                        return shot
            for n, face in _FACE_BY_NORMAL.items():
                support = (c[0] - n[0], c[1] - n[1], c[2] - n[2])
                if support[1] < 0 or not grid.is_solid(*support):
                    continue
                for aim in _aim_points_for_face(support, n):
                    if _shot_hits(grid, eye, aim, support, want_face=face):
                        shot = self._make_shot(col, h, aim, VERB_PLACE, support, face, reach)
                        if shot is not None:
                            return shot
            # Top face just above standing reach: place it mid-jump.
            below = (c[0], c[1] - 1, c[2])
            if jump_shot is None and grid.is_solid(*below):
                jump_eye = (eye[0], eye[1] + JUMP_EYE_RISE, eye[2])
                for aim in _aim_points_for_face(below, (0, 1, 0)):
                    if _shot_hits(grid, jump_eye, aim, below, want_face="+y"):
                        jump_shot = self._make_shot(
                            col, h, aim, VERB_PLACE, below, "+y", reach, jump=True
                        )
                        if jump_shot is not None:
                            break
        return jump_shot

    # -- control ---------------------------------------------------------------

    def _near_center(self, col: Tuple[int, int], tol: float = 0.2) -> bool:
        pose = self.env.pose
        return abs(pose.x - (col[0] + 0.5)) < tol and abs(pose.z - (col[1] + 0.5)) < tol

    def _movement_verb_toward(self, wx: float, wz: float) -> int:
        pose = self.env.pose
        dx, dz = wx - pose.x, wz - pose.z
        yaw = math.radians(pose.yaw)
        sin_y, cos_y = math.sin(yaw), math.cos(yaw)
        candidates = (
            (VERB_FORWARD, sin_y, -cos_y),
            (VERB_BACKWARD, -sin_y, cos_y),
            (VERB_RIGHT, cos_y, sin_y),
            (VERB_LEFT, -cos_y, -sin_y),
        )
        return max(candidates, key=lambda cand: cand[1] * dx + cand[2] * dz)[0]

    def _aim_camera(self, shot: Shot) -> Optional[Tuple[float, float]]:
        # Drive to the exact planned angles (well inside the 2-degree cone):
        # at reach-3 range a 2-degree error already misses a face inset.
        pose = self.env.pose
        dp = shot.want_pitch - pose.pitch
        dyaw = 0.0 if shot.yaw_free else signed_angle(shot.want_yaw - pose.yaw)
        if abs(dp) <= AIM_EXACT and abs(dyaw) <= AIM_EXACT:
            return None
        clamp = lambda v: max(-CAMERA_MAX_STEP, min(CAMERA_MAX_STEP, v))
        return (clamp(dp), clamp(dyaw))

    def _live_check(self, shot: Shot) -> bool:
        """Would the environment's own ray, cast right now, do what we want?"""
        env = self.env
        hit = raycast(env.grid, env.pose.eye(), env.pose.view_direction(), REACH)
        if hit is None:
            return False
        if shot.verb == VERB_BREAK:
            return not hit.ground and hit.cell == self.subtask.cell
        if hit.ground:
            candidate = hit.cell
        else:
            n = {v: k for k, v in _FACE_BY_NORMAL.items()}[hit.face]
            candidate = (hit.cell[0] + n[0], hit.cell[1] + n[1], hit.cell[2] + n[2])
        if candidate != self.subtask.cell:
            return False
        if not (0 <= candidate[0] < ZONE_X and 0 <= candidate[1] < 9 and 0 <= candidate[2] < ZONE_Z):
            return False
        if env.grid.get(*candidate) != 0:
            return False
        if shot.pillar:
            return candidate[1] == int(math.floor(env.pose.y))
        return not env._cell_overlaps_body(candidate)

    def _navigate(self, shot: Shot) -> Optional[Action]:
        """Next movement action, or None once standing at the shot column."""
        env = self.env
        pose = env.pose
        if self._near_center(shot.stand):
            if pose.y == float(shot.stand_height):
                return None
            if shot.jump and not env._grounded():
                return None  # mid-jump at the right column
            if pose.y > shot.stand_height or not env._grounded():
                return Action(VERB_NOOP)  # settle down onto the column
            # Grounded below the planned height: the column changed; replan.
            self.shot = None
            return Action(VERB_NOOP)
        while self.path_i < len(shot.path) - 1 and self._near_center(shot.path[self.path_i]):
            self.path_i += 1
        col = shot.path[self.path_i] if shot.path else shot.stand
        wx, wz = col[0] + 0.5, col[1] + 0.5
        need_h = env.grid.column_top(col[0], col[1])
        dist = abs(pose.x - wx) + abs(pose.z - wz)
        if need_h - pose.y > 0.5 and dist < 1.6 and env._grounded():
            return Action(VERB_JUMP)
        return Action(self._movement_verb_toward(wx, wz))

    def act(self) -> Action:
        """One action from the privileged state; total, never raises."""
        env = self.env
        if self.expected_nonzero is not None:
            if env.grid.nonzero_count == self.expected_nonzero:
                self.blocked.clear()
                self._reset_subtask()
            else:
                self.failures += 1
                if self.failures >= MAX_CONSECUTIVE_FAILURES and self.shot is not None:
                    self.tried_shots.add(
                        self._shot_key(self.shot.stand, self.shot.aim, self.shot.verb, self.shot.jump)
                    )
                    self.shot = None  # replan this subtask with a fresh shot
                    self.failures = 0
            self.expected_nonzero = None

        if self.subtask is not None:
            self.subtask_steps += 1
            if self.subtask_steps > SUBTASK_STEP_BUDGET:
                self.blocked.add(self.subtask)
                self.unreachable.append(self.subtask)
                self._reset_subtask()

        if self.subtask is None:
            self.subtask = self._choose_subtask()
            self.shot = None
            self.subtask_steps = 0
            if self.subtask is None:
                return Action(VERB_NOOP)

        if self.shot is None:
            self.shot = self._plan_shot(self.subtask)
            self.path_i = 0
            if self.shot is None:
                escape = self._escape_action()
                if escape is not None:
                    return escape
                scaffold = self._scaffold_subtask(self.subtask)
                if scaffold is not None and scaffold not in self.blocked:
                    self.subtask = scaffold
                    self.subtask_steps = 0
                    self.tried_shots.clear()
                    return Action(VERB_NOOP)
                self.blocked.add(self.subtask)
                self.unreachable.append(self.subtask)
                self._reset_subtask()
                return Action(VERB_NOOP)

        shot = self.shot
        move = self._navigate(shot)
        if move is not None:
            return move

        cam = self._aim_camera(shot)
        if cam is not None:
            return Action(VERB_NOOP, cam)

        if self.subtask.kind == "add" and env.inventory.selected != self.subtask.color:
            return Action(VERB_SELECT_BASE + self.subtask.color - 1)

        if shot.jump:
            if env._grounded():
                return Action(VERB_JUMP)
            if not self._live_check(shot):
                return Action(VERB_NOOP)  # wait for the firing window mid-flight
            self.expected_nonzero = env.grid.nonzero_count + 1
            return Action(shot.verb)

        if not self._live_check(shot):
            # Aimed but the real ray misses: the eye is off the planned stand
            # center. Nudge toward it; give the shot up after a few tries.
            self.failures += 1
            if self.failures >= MAX_CONSECUTIVE_FAILURES:
                self.tried_shots.add(
                    self._shot_key(shot.stand, shot.aim, shot.verb, shot.jump)
                )
                self.shot = None
                self.failures = 0
                return Action(VERB_NOOP)
            pose = env.pose
            cx, cz = shot.stand[0] + 0.5, shot.stand[1] + 0.5
            if abs(pose.x - cx) > 0.05 or abs(pose.z - cz) > 0.05:
                return Action(self._movement_verb_toward(cx, cz))
            return Action(VERB_NOOP)

        self.expected_nonzero = env.grid.nonzero_count + (1 if shot.verb == VERB_PLACE else -1)
        return Action(shot.verb)

    def _scaffold_subtask(self, st: Subtask) -> Optional[Subtask]:
        """Temporary block that buys a vantage point for an unshootable add.

        Prefers growing the cell's own column (so the pillar-up ride finishes
        the job); otherwise raises an adjacent column. Scaffold blocks are
        extras, torn down by the deferred-removal pass once building is done.
        """
        if st.kind != "add":
            return None
        grid = self.env.grid
        c = st.cell
        options = [(c[0], c[2]), (c[0] + 1, c[2]), (c[0] - 1, c[2]), (c[0], c[2] + 1), (c[0], c[2] - 1)]
        for col in options:
            if not (0 <= col[0] < ZONE_X and 0 <= col[1] < ZONE_Z):
                continue
            top = grid.column_top(col[0], col[1])
            if top >= c[1]:
                continue
            cell = (col[0], top, col[1])
            color = self.env.target.get(*cell)
            if color == 0:
                color = st.color or self.env.inventory.selected
            return Subtask("add", cell, color)
        return None

    def _escape_action(self) -> Optional[Action]:
        """Pillar out of a walled-in pocket: place scaffold under the feet.

        Scaffold cells are not in the target, so they surface later as
        ordinary removals once the structure itself is finished.
        """
        env = self.env
        pose = env.pose
        heights = column_heights(env.grid)
        start = (
            min(max(int(math.floor(pose.x)), 0), ZONE_X - 1),
            min(max(int(math.floor(pose.z)), 0), ZONE_Z - 1),
        )
        if len(walk_graph_bfs(heights, start)) > 12:
            return None  # not boxed in; the subtask is genuinely unreachable
        if not env._grounded():
            return Action(VERB_NOOP)
        feet = pose.feet_cell()
        if feet[1] > 7:
            return None
        if abs(pose.x - (start[0] + 0.5)) > 0.2 or abs(pose.z - (start[1] + 0.5)) > 0.2:
            return Action(self._movement_verb_toward(start[0] + 0.5, start[1] + 0.5))
        dp = -90.0 - pose.pitch
        if abs(dp) > AIM_EXACT:
            return Action(VERB_NOOP, (max(-CAMERA_MAX_STEP, min(CAMERA_MAX_STEP, dp)), 0.0))
        self.expected_nonzero = env.grid.nonzero_count + 1
        return Action(VERB_PLACE)

    def _reset_subtask(self) -> None:
        self.subtask = None
        self.shot = None
        self.failures = 0
        self.subtask_steps = 0
        self.tried_shots.clear()


class RandomAgent:
    """Seeded uniform policy over the base verbs and the camera box."""

    def __init__(self, env: Environment, seed: int = 0):
        self.env = env
        self.rng = random.Random(seed)

    def act(self) -> Action:
        return Action(
            self.rng.randint(0, 13),
            (self.rng.uniform(-5.0, 5.0), self.rng.uniform(-5.0, 5.0)),
        )


def run_episode(env: Environment, agent, max_steps: Optional[int] = None) -> Dict:
    """Drive one episode to termination; returns the per-episode report."""
    from .intersect import f1_score

    steps = 0
    reward_sum = 0.0
    limit = max_steps if max_steps is not None else env.config.max_steps
    info: Dict = {"termination_reason": None}
    while not env.done and steps < limit:
        res = env.step(agent.act())
        reward_sum += res.reward
        info = res.info
        steps += 1
    report = f1_score(env.grid, env.target)
    return {
        "task_id": env.task.task_id if env.task else "",
        "steps": steps,
        "reward_sum": reward_sum,
        "f1": report.f1,
        "intersection_size": report.intersection_size,
        "termination_reason": info.get("termination_reason"),
    }
