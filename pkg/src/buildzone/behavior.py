"""Raw play-session logs: parsing, grid replay, and demonstration conversion.

A session record is a JSON object with avatar info, the final world state,
and a ``tape``: a newline-separated event stream of action lines, block
changes, position updates, and look updates. Real logs use a foreign
coordinate frame and numeric block ids, so every consumer takes an
``IdOffsetMap`` describing the id-to-color table and the world origin.
"""
from __future__ import annotations

import ast
import json
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .env import VERB_IDS, signed_angle
from .grid import Grid, in_zone
from .tasks import TaskRecord

TELEPORT_THRESHOLD = 1.0  # position jumps beyond one step's kinematic reach
CAMERA_MAX_STEP = 5.0

PLACE_ACTION = "select_and_place_block"
RECOVER_START = "start_recover_world_state"
RECOVER_FINISH = "finish_recover_world_state"


class BehaviorParseError(ValueError):
    """Structurally invalid record; message carries line/column context."""


class ReplayError(ValueError):
    """Tape references ids or coordinates the map cannot place in the zone."""


class ReplayWarning(UserWarning):
    pass


@dataclass(frozen=True)
class IdOffsetMap:
    """Foreign-log conventions: block-id table, world origin, look units."""

    id_to_color: Tuple[Tuple[int, int], ...] = ((50, 1), (59, 2), (60, 3), (61, 4), (62, 5), (63, 6))
    x_off: int = 0
    y_off: int = 63
    z_off: int = 0
    look_unit: str = "radians"  # or "degrees"

    def color_of(self, raw_id: int) -> int:
        for rid, color in self.id_to_color:
            if rid == raw_id:
                return color
        raise ReplayError(f"raw block id {raw_id} is not in the id map")

    def raw_of(self, color: int) -> int:
        for rid, c in self.id_to_color:
            if c == color:
                return rid
        raise ReplayError(f"color {color} has no raw id in the map")

    def cell_of(self, x: int, y: int, z: int) -> Tuple[int, int, int]:
        cell = (x - self.x_off, y - self.y_off, z - self.z_off)
        if not in_zone(*cell):
            raise ReplayError(f"raw coordinate ({x}, {y}, {z}) maps outside the zone to {cell}")
        return cell

    def raw_cell(self, x: int, y: int, z: int) -> Tuple[int, int, int]:
        return (x + self.x_off, y + self.y_off, z + self.z_off)

    def look_degrees(self, value: float) -> float:
        return math.degrees(value) if self.look_unit == "radians" else value

    def look_raw(self, degrees: float) -> float:
        return math.radians(degrees) if self.look_unit == "radians" else degrees

    @classmethod
    def from_dict(cls, data: Dict) -> "IdOffsetMap":
        kwargs = {}
        if "id_to_color" in data:
            kwargs["id_to_color"] = tuple(
                (int(k), int(v)) for k, v in dict(data["id_to_color"]).items()
            ) if isinstance(data["id_to_color"], dict) else tuple(
                (int(a), int(b)) for a, b in data["id_to_color"]
            )
        for key in ("x_off", "y_off", "z_off"):
            if key in data:
                kwargs[key] = int(data[key])
        if "look_unit" in data:
            if data["look_unit"] not in ("radians", "degrees"):
                raise ValueError(f"look_unit must be radians or degrees, got {data['look_unit']!r}")
            kwargs["look_unit"] = data["look_unit"]
        return cls(**kwargs)

    def to_dict(self) -> Dict:
        return {
            "id_to_color": [[rid, c] for rid, c in self.id_to_color],
            "x_off": self.x_off,
            "y_off": self.y_off,
            "z_off": self.z_off,
            "look_unit": self.look_unit,
        }


DEFAULT_ID_OFFSET_MAP = IdOffsetMap()


@dataclass(frozen=True)
class TapeEvent:
    kind: str  # action | block_change | pos_change | set_look | opaque
    raw: str
    name: str = ""  # action name
    args: Tuple = ()
    changes: Tuple[Tuple[int, int, int, int, int], ...] = ()
    pos: Optional[Tuple[float, float, float]] = None
    look: Optional[Tuple[float, float]] = None


@dataclass
class BehaviorRecord:
    game_id: int
    step_id: int
    avatar_pos: Tuple[float, float, float]
    avatar_look: Tuple[float, float]
    world_ending_blocks: List[List[int]]
    clarification_question: Optional[str]
    tape: List[TapeEvent]
    parse_warnings: List[str] = field(default_factory=list)


_TUPLE_RE = re.compile(r"\(([^)]*)\)")


def _num(token: str):
    try:
        return int(token)
    except ValueError:
        try:
            return float(token)
        except ValueError:
            return token


def _parse_tape_line(line: str, lineno: int, warns: List[str]) -> TapeEvent:
    tokens = line.split()
    kind = tokens[0]
    if kind == "action":
        if len(tokens) < 2:
            raise BehaviorParseError(f"tape line {lineno}: action without a name")
        return TapeEvent("action", line, name=tokens[1], args=tuple(_num(t) for t in tokens[2:]))
    if kind in ("block_change", "pos_change", "set_look"):
        groups = _TUPLE_RE.findall(line)
        values = []
        for g in groups:
            parts = [p.strip() for p in g.split(",") if p.strip()]
            values.append(tuple(_num(p) for p in parts))
        if kind == "block_change":
            if not groups or any(len(v) != 5 for v in values):
                raise BehaviorParseError(f"tape line {lineno}: block_change needs (x, y, z, old, new) tuples")
            return TapeEvent("block_change", line, changes=tuple(values))
        if kind == "pos_change":
            if len(values) != 1 or len(values[0]) != 3:
                raise BehaviorParseError(f"tape line {lineno}: pos_change needs one (x, y, z) tuple")
            return TapeEvent("pos_change", line, pos=values[0])
        if len(values) != 1 or len(values[0]) != 2:
            raise BehaviorParseError(f"tape line {lineno}: set_look needs one (pitch, yaw) tuple")
        return TapeEvent("set_look", line, look=values[0])
    warns.append(f"tape line {lineno}: unrecognized event kept opaque: {line!r}")
    return TapeEvent("opaque", line)


def parse_record(source) -> BehaviorRecord:
    """Parse a raw session record from JSON text, a dict, or a python-literal string.

    The tape parser is tolerant: unknown action names and unrecognized lines
    are preserved as opaque events; only missing structure (no tape, no world
    ending state) is an error.
    """
    if isinstance(source, dict):
        data = source
    else:
        text = source.read_text() if isinstance(source, Path) else str(source)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as json_err:
            try:
                data = ast.literal_eval(text)
            except (ValueError, SyntaxError):
                raise BehaviorParseError(
                    f"record is neither JSON (line {json_err.lineno} column {json_err.colno}: "
                    f"{json_err.msg}) nor a python literal"
                ) from json_err
        if not isinstance(data, dict):
            raise BehaviorParseError("record must be a JSON object")

    if "tape" not in data or not str(data["tape"]).strip():
        raise BehaviorParseError("record has no tape")
    ending = data.get("worldEndingState")
    if not isinstance(ending, dict) or "blocks" not in ending:
        raise BehaviorParseError("record has no worldEndingState.blocks")

    warns: List[str] = []
    events = []
    for lineno, line in enumerate(str(data["tape"]).splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        events.append(_parse_tape_line(line, lineno, warns))
    if not events:
        raise BehaviorParseError("record has no tape")

    avatar = data.get("avatarInfo") or {}
    clarification = data.get("clarification_question")
    if clarification in ("null", ""):
        clarification = None
    return BehaviorRecord(
        game_id=int(data.get("gameId", 0)),
        step_id=int(data.get("stepId", 0)),
        avatar_pos=tuple(float(v) for v in avatar.get("pos", (0.0, 0.0, 0.0))),
        avatar_look=tuple(float(v) for v in avatar.get("look", (0.0, 0.0))),
        world_ending_blocks=[list(map(int, b)) for b in ending["blocks"]],
        clarification_question=clarification,
        tape=events,
        parse_warnings=warns,
    )


def serialize_record(rec: BehaviorRecord) -> str:
    """Canonical JSON form; parsing it back yields an identical record."""
    payload = {
        "gameId": rec.game_id,
        "stepId": rec.step_id,
        "avatarInfo": {"pos": list(rec.avatar_pos), "look": list(rec.avatar_look)},
        "worldEndingState": {"blocks": [list(b) for b in rec.world_ending_blocks]},
        "clarification_question": rec.clarification_question,
        "tape": "\n".join(e.raw for e in rec.tape),
    }
    return json.dumps(payload, indent=1)


def map_ending_blocks(rec: BehaviorRecord, id_map: IdOffsetMap = DEFAULT_ID_OFFSET_MAP) -> Grid:
    grid = Grid()
    for x, y, z, raw_id in rec.world_ending_blocks:
        cx, cy, cz = id_map.cell_of(x, y, z)
        grid.set(cx, cy, cz, id_map.color_of(raw_id))
    return grid


def _apply_change(grid: Grid, cell, old_color, new_color, lineno_hint: str) -> bool:
    """Authoritative block_change application; returns True if grid changed."""
    current = grid.get(*cell)
    if current == new_color:
        return False  # already applied by the paired action event
    if current != old_color:
        warnings.warn(
            f"{lineno_hint}: block_change expected {old_color} at {cell}, found {current}; applying new value",
            ReplayWarning,
            stacklevel=3,
        )
    grid.set(cell[0], cell[1], cell[2], new_color)
    return True


def replay_tape(rec: BehaviorRecord, id_map: IdOffsetMap = DEFAULT_ID_OFFSET_MAP) -> Grid:
    """Rebuild the final grid from the tape's placement events.

    Placement actions apply immediately; block_change events are
    authoritative: one that repeats a placement is consumed silently, one
    that disagrees with the current cell warns and then wins.
    """
    grid = Grid()
    for i, event in enumerate(rec.tape, start=1):
        if event.kind == "action" and event.name == PLACE_ACTION and len(event.args) >= 4:
            raw_id, x, y, z = (int(v) for v in event.args[:4])
            cell = id_map.cell_of(x, y, z)
            grid.set(cell[0], cell[1], cell[2], id_map.color_of(raw_id))
        elif event.kind == "block_change":
            for x, y, z, old, new in event.changes:
                cell = id_map.cell_of(x, y, z)
                old_color = 0 if old == 0 else id_map.color_of(old)
                new_color = 0 if new == 0 else id_map.color_of(new)
                _apply_change(grid, cell, old_color, new_color, f"tape event {i}")
    return grid


@dataclass
class DemoStep:
    index: int
    kind: str  # action | annotation
    verb: Optional[str] = None
    camera: Tuple[float, float] = (0.0, 0.0)
    note: Optional[str] = None
    pose: Tuple[float, float, float, float, float] = (0.0, 0.0, 0.0, 0.0, 0.0)
    blocks: List[List[int]] = field(default_factory=list)


@dataclass
class DemoTrajectory:
    game_id: int
    step_id: int
    starting_grid: Grid
    final_grid: Grid
    steps: List[DemoStep]

    @property
    def task_id(self) -> str:
        return f"game{self.game_id}-step{self.step_id}"

    def to_task(self, instruction: str = "") -> TaskRecord:
        from .tasks import label_skills

        return TaskRecord(
            task_id=self.task_id,
            starting_grid=self.starting_grid.copy(),
            target_grid=self.final_grid.copy(),
            instruction=instruction or (self.task_id + " replayed session"),
            skills=label_skills(self.final_grid),
        )


class _TrajectoryBuilder:
    def __init__(self, rec: BehaviorRecord, id_map: IdOffsetMap):
        self.id_map = id_map
        self.grid = Grid()
        px, py, pz = rec.avatar_pos
        self.pose = [
            px - id_map.x_off,
            py - id_map.y_off,
            pz - id_map.z_off,
            id_map.look_degrees(rec.avatar_look[0]),
            id_map.look_degrees(rec.avatar_look[1]),
        ]
        self.steps: List[DemoStep] = []
        self.recording = RECOVER_FINISH not in {
            e.name for e in rec.tape if e.kind == "action"
        }

    def pose_tuple(self):
        return tuple(self.pose)

    def emit(self, kind, **kwargs):
        step = DemoStep(
            index=len(self.steps),
            kind=kind,
            pose=self.pose_tuple(),
            blocks=self.grid.block_list(),
            **kwargs,
        )
        self.steps.append(step)

    def on_action(self, event: TapeEvent):
        if event.name == RECOVER_FINISH:
            self.recording = True
            return
        if event.name == RECOVER_START:
            return
        if event.name == PLACE_ACTION and len(event.args) >= 4:
            raw_id, x, y, z = (int(v) for v in event.args[:4])
            cell = self.id_map.cell_of(x, y, z)
            color = self.id_map.color_of(raw_id)
            changed = self.grid.get(*cell) != color
            if self.recording:
                self.emit("action", verb=f"select_{color}")
                self.grid.set(cell[0], cell[1], cell[2], color)
                self.emit("action", verb="place_block")
            elif changed:
                self.grid.set(cell[0], cell[1], cell[2], color)
            return
        if self.recording:
            if event.name in VERB_IDS:
                self.emit("action", verb=event.name)
            else:
                self.emit("annotation", note=f"action {event.name}")

    def on_block_change(self, event: TapeEvent, hint: str):
        for x, y, z, old, new in event.changes:
            cell = self.id_map.cell_of(x, y, z)
            old_color = 0 if old == 0 else self.id_map.color_of(old)
            new_color = 0 if new == 0 else self.id_map.color_of(new)
            if _apply_change(self.grid, cell, old_color, new_color, hint) and self.recording:
                self.emit("annotation", note=f"block_change {cell} -> {new_color}")

    def on_pos_change(self, event: TapeEvent):
        x, y, z = event.pos
        nx, ny, nz = x - self.id_map.x_off, y - self.id_map.y_off, z - self.id_map.z_off
        dist = math.sqrt(
            (nx - self.pose[0]) ** 2 + (ny - self.pose[1]) ** 2 + (nz - self.pose[2]) ** 2
        )
        self.pose[0], self.pose[1], self.pose[2] = nx, ny, nz
        if not self.recording:
            return
        if dist > TELEPORT_THRESHOLD:
            self.emit("annotation", note=f"teleport {dist:.2f} blocks")
        elif self.steps:
            # Small drift belongs to the preceding step.
            self.steps[-1].pose = self.pose_tuple()

    def on_set_look(self, event: TapeEvent):
        pitch = self.id_map.look_degrees(event.look[0])
        yaw = self.id_map.look_degrees(event.look[1])
        dp = pitch - self.pose[3]
        dy = signed_angle(yaw - self.pose[4])
        if not self.recording:
            self.pose[3], self.pose[4] = pitch, yaw
            return
        n = max(1, math.ceil(abs(dp) / CAMERA_MAX_STEP), math.ceil(abs(dy) / CAMERA_MAX_STEP))
        for k in range(n):
            self.pose[3] += dp / n
            self.pose[4] += dy / n
            if k == n - 1:  # absorb float residue so the final look is exact
                self.pose[3], self.pose[4] = pitch, yaw
            self.emit("action", verb="noop", camera=(dp / n, dy / n))


def to_trajectory(rec: BehaviorRecord, id_map: IdOffsetMap = DEFAULT_ID_OFFSET_MAP) -> DemoTrajectory:
    """Convert a parsed record into an environment-shaped demonstration.

    Everything before the world-recovery marker initializes the starting
    grid. After it, movement actions map to verbs by name, look changes
    become camera deltas clamped to 5 degrees per step, position jumps
    beyond one step's reach become teleport annotations, and each emitted
    step carries the grid snapshot, so consecutive snapshots never differ
    by more than one block.
    """
    b = _TrajectoryBuilder(rec, id_map)
    starting: Optional[Grid] = None if not b.recording else Grid()
    for i, event in enumerate(rec.tape, start=1):
        if event.kind == "action":
            b.on_action(event)
            if b.recording and starting is None:
                starting = b.grid.copy()
        elif event.kind == "block_change":
            b.on_block_change(event, f"tape event {i}")
        elif event.kind == "pos_change":
            b.on_pos_change(event)
        elif event.kind == "set_look":
            b.on_set_look(event)
    return DemoTrajectory(
        game_id=rec.game_id,
        step_id=rec.step_id,
        starting_grid=starting if starting is not None else Grid(),
        final_grid=b.grid.copy(),
        steps=b.steps,
    )


# -- demonstration files ------------------------------------------------------


def write_demos(trajectories: Sequence[DemoTrajectory], path) -> None:
    """JSON-lines demo file: one step per line, tagged with its task id."""
    with open(Path(path), "w") as f:
        for traj in trajectories:
            for step in traj.steps:
                f.write(
                    json.dumps(
                        {
                            "task_id": traj.task_id,
                            "step": step.index,
                            "kind": step.kind,
                            "verb": step.verb,
                            "camera": list(step.camera),
                            "note": step.note,
                            "pose": list(step.pose),
                            "blocks": step.blocks,
                        }
                    )
                    + "\n"
                )


def load_demo_snapshots(path) -> Dict[str, Grid]:
    """Final grid snapshot per task id from a demo file."""
    finals: Dict[str, List[List[int]]] = {}
    with open(Path(path)) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise BehaviorParseError(f"{path}: line {lineno}: {e.msg}") from e
            finals[row["task_id"]] = row["blocks"]
    return {task_id: Grid.from_blocks(blocks) for task_id, blocks in finals.items()}


# -- session recording --------------------------------------------------------


class RecordBuilder:
    """Accumulates a live session's tape and emits a raw-format record."""

    def __init__(self, game_id: int, step_id: int = 1, id_map: IdOffsetMap = DEFAULT_ID_OFFSET_MAP):
        self.game_id = game_id
        self.step_id = step_id
        self.id_map = id_map
        self.lines: List[str] = []

    def log_action(self, name: str) -> None:
        self.lines.append(f"action {name}")

    def log_block_change(self, x: int, y: int, z: int, old: int, new: int) -> None:
        rx, ry, rz = self.id_map.raw_cell(x, y, z)
        raw_old = 0 if old == 0 else self.id_map.raw_of(old)
        raw_new = 0 if new == 0 else self.id_map.raw_of(new)
        self.lines.append(f"block_change  ({rx}, {ry}, {rz}, {raw_old}, {raw_new})")

    def log_pos(self, x: float, y: float, z: float) -> None:
        rx, ry, rz = x + self.id_map.x_off, y + self.id_map.y_off, z + self.id_map.z_off
        self.lines.append(f"pos_change ({rx}, {ry}, {rz})")

    def log_look(self, pitch_degrees: float, yaw_degrees: float) -> None:
        p = self.id_map.look_raw(pitch_degrees)
        y = self.id_map.look_raw(yaw_degrees)
        self.lines.append(f"set_look ({p}, {y})")

    def build(
        self,
        final_grid: Grid,
        pose: Tuple[float, float, float, float, float],
        clarification_question: Optional[str] = None,
    ) -> Dict:
        blocks = []
        for x, y, z, c in final_grid.block_list():
            rx, ry, rz = self.id_map.raw_cell(x, y, z)
            blocks.append([rx, ry, rz, self.id_map.raw_of(c)])
        return {
            "gameId": self.game_id,
            "stepId": self.step_id,
            "avatarInfo": {
                "pos": [
                    pose[0] + self.id_map.x_off,
                    pose[1] + self.id_map.y_off,
                    pose[2] + self.id_map.z_off,
                ],
                "look": [self.id_map.look_raw(pose[3]), self.id_map.look_raw(pose[4])],
            },
            "worldEndingState": {"blocks": blocks},
            "clarification_question": clarification_question,
            "tape": "\n".join(self.lines),
        }
