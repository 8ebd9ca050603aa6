"""Task records, random compact target generation, subtasks, and skill labels."""
from __future__ import annotations

import json
import random
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .grid import ZONE_X, ZONE_Y, ZONE_Z, COLOR_NAMES, Grid, connected_components, in_zone

SKILL_FLAT = "flat"
SKILL_FLYING = "flying"
SKILL_TRICKY = "tricky"
SKILL_TALL = "tall"
SKILLS = (SKILL_FLAT, SKILL_FLYING, SKILL_TRICKY, SKILL_TALL)

# Blocks at this height or above cannot be reached from the ground with the
# 3-block placement radius; building them needs elevation.
TALL_MIN_HEIGHT = 4

HORIZONTAL_BIAS = 0.7


class TaskFileError(ValueError):
    """Malformed task file; message carries the offending task/block position."""


@dataclass
class TaskRecord:
    task_id: str
    starting_grid: Grid
    target_grid: Grid
    instruction: str = ""
    context_utterances: List[str] = field(default_factory=list)
    skills: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.target_grid.nonzero_count == 0:
            raise ValueError(f"task {self.task_id!r}: target grid has no blocks")


@dataclass(frozen=True)
class Subtask:
    kind: str  # "add" | "remove"
    cell: Tuple[int, int, int]
    color: Optional[int] = None


def next_subtask(current: Grid, target: Grid) -> Optional[Subtask]:
    """First pending single-block edit in (y, x, z) scan order.

    Wrong or extra blocks are removed before anything is added, so a
    mismatched cell costs one remove now and one add on a later call.
    Returns None once the grids match.
    """
    cur = current.cells
    tgt = target.cells
    removals = np.argwhere((cur != 0) & (cur != tgt))
    if removals.size:
        y, x, z = (int(v) for v in removals[0])
        return Subtask("remove", (x, y, z))
    additions = np.argwhere((tgt != 0) & (cur == 0))
    if additions.size:
        y, x, z = (int(v) for v in additions[0])
        return Subtask("add", (x, y, z), int(tgt[y, x, z]))
    return None


def apply_subtask(grid: Grid, subtask: Subtask) -> None:
    x, y, z = subtask.cell
    grid.set(x, y, z, 0 if subtask.kind == "remove" else subtask.color)


def label_skills(target: Grid) -> List[str]:
    """Skill labels a target structure demands.

    flat: everything sits on the ground layer. flying: some connected piece
    never touches the ground. tall: the build reaches height 4 or more.
    tricky: a block is fully hidden behind its six face neighbors.
    """
    if target.nonzero_count == 0:
        raise ValueError("cannot label an empty target")
    ys, xs, zs = np.nonzero(target.cells)
    labels = []
    if int(ys.max()) == 0:
        labels.append(SKILL_FLAT)
    if any(min(y for _, y, _ in comp) > 0 for comp in connected_components(target)):
        labels.append(SKILL_FLYING)
    if _has_hidden_block(target):
        labels.append(SKILL_TRICKY)
    if int(ys.max()) >= TALL_MIN_HEIGHT:
        labels.append(SKILL_TALL)
    return labels


def _has_hidden_block(target: Grid) -> bool:
    solid = target.cells != 0
    if target.nonzero_count < 7:
        return False
    inner = (
        solid[1:-1, 1:-1, 1:-1]
        & solid[:-2, 1:-1, 1:-1]
        & solid[2:, 1:-1, 1:-1]
        & solid[1:-1, :-2, 1:-1]
        & solid[1:-1, 2:, 1:-1]
        & solid[1:-1, 1:-1, :-2]
        & solid[1:-1, 1:-1, 2:]
    )
    return bool(inner.any())


def generate_task(
    seed: int,
    n_blocks: int = 8,
    max_height: int = 5,
    n_colors: int = 6,
) -> TaskRecord:
    """Grow a compact connected structure by seeded random attachment.

    Growth starts from a random ground cell and repeatedly glues a block onto
    a face of the existing structure, choosing a horizontal direction with
    probability 0.7 and a vertical one otherwise, so targets stay connected
    to the ground. The starting grid is empty.
    """
    if not 1 <= n_blocks <= 30:
        raise ValueError("n_blocks must be in [1, 30]")
    if not 1 <= max_height <= ZONE_Y - 1:
        raise ValueError(f"max_height must be in [1, {ZONE_Y - 1}]")
    if not 1 <= n_colors <= 6:
        raise ValueError("n_colors must be in [1, 6]")
    rng = random.Random(seed)
    target = Grid()
    x0, z0 = rng.randrange(ZONE_X), rng.randrange(ZONE_Z)
    target.set(x0, 0, z0, rng.randint(1, n_colors))
    cells = [(x0, 0, z0)]
    horizontal = ((1, 0, 0), (-1, 0, 0), (0, 0, 1), (0, 0, -1))
    vertical = ((0, 1, 0), (0, -1, 0))
    while len(cells) < n_blocks:
        for _ in range(200):
            bx, by, bz = cells[rng.randrange(len(cells))]
            if rng.random() < HORIZONTAL_BIAS:
                d = horizontal[rng.randrange(4)]
            else:
                d = vertical[rng.randrange(2)]
            nx, ny, nz = bx + d[0], by + d[1], bz + d[2]
            if in_zone(nx, ny, nz) and ny < max_height and target.get(nx, ny, nz) == 0:
                target.set(nx, ny, nz, rng.randint(1, n_colors))
                cells.append((nx, ny, nz))
                break
        else:
            # Dense pocket: fall back to scanning every open attachment point.
            frontier = sorted(
                (bx + d[0], by + d[1], bz + d[2])
                for bx, by, bz in cells
                for d in horizontal + vertical
                if in_zone(bx + d[0], by + d[1], bz + d[2])
                and by + d[1] < max_height
                and target.get(bx + d[0], by + d[1], bz + d[2]) == 0
            )
            nx, ny, nz = frontier[rng.randrange(len(frontier))]
            target.set(nx, ny, nz, rng.randint(1, n_colors))
            cells.append((nx, ny, nz))
    skills = label_skills(target)
    colors_used = sorted({target.get(x, y, z) for x, y, z in cells})
    names = ", ".join(COLOR_NAMES[c] for c in colors_used)
    instruction = f"Build the {n_blocks}-block structure from {names} blocks."
    return TaskRecord(
        task_id=f"gen-{seed}-{n_blocks}",
        starting_grid=Grid(),
        target_grid=target,
        instruction=instruction,
        skills=skills,
    )


# -- task files --------------------------------------------------------------


def _grid_from_entry(blocks, where: str) -> Grid:
    grid = Grid()
    for i, b in enumerate(blocks):
        if not isinstance(b, (list, tuple)) or len(b) != 4:
            raise TaskFileError(f"{where}: block {i} is not an [x, y, z, color] quadruple")
        x, y, z, c = b
        if not in_zone(int(x), int(y), int(z)):
            raise TaskFileError(f"{where}: block {i} at ({x}, {y}, {z}) is outside the zone")
        if not 0 <= int(c) <= 6:
            raise TaskFileError(f"{where}: block {i} has color {c} outside [0, 6]")
        grid.set(int(x), int(y), int(z), int(c))
    return grid


def _task_from_dict(data: Dict, where: str) -> TaskRecord:
    if not isinstance(data, dict):
        raise TaskFileError(f"{where}: task entry is not an object")
    task_id = str(data.get("task_id", where))
    if "target_blocks" not in data:
        raise TaskFileError(f"{where}: missing target_blocks")
    target = _grid_from_entry(data["target_blocks"], f"{where}.target_blocks")
    if "context_segments" in data:
        starting = Grid()
        for si, segment in enumerate(data["context_segments"]):
            seg = _grid_from_entry(segment, f"{where}.context_segments[{si}]")
            mask = seg.cells != 0
            starting.cells[mask] = seg.cells[mask]
        starting = Grid(starting.cells)
    else:
        starting = _grid_from_entry(data.get("starting_blocks", []), f"{where}.starting_blocks")
    record = TaskRecord(
        task_id=task_id,
        starting_grid=starting,
        target_grid=target,
        instruction=str(data.get("instruction", "")),
        context_utterances=[str(u) for u in data.get("context_utterances", [])],
        skills=label_skills(target),
    )
    stored = data.get("skills")
    if stored is not None and sorted(stored) != sorted(record.skills):
        warnings.warn(
            f"{where}: stored skills {sorted(stored)} != recomputed {sorted(record.skills)}",
            stacklevel=2,
        )
    return record


def load_tasks(path) -> List[TaskRecord]:
    """Read a task file: a single task object, a list, or {"tasks": [...]}."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise TaskFileError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from e
    if isinstance(data, dict) and "tasks" in data:
        entries = data["tasks"]
    elif isinstance(data, dict):
        entries = [data]
    elif isinstance(data, list):
        entries = data
    else:
        raise TaskFileError(f"{path}: top level must be a task object or list")
    out = []
    for i, entry in enumerate(entries):
        where = f"{path}: task[{i}]"
        try:
            out.append(_task_from_dict(entry, where))
        except ValueError as e:
            if isinstance(e, TaskFileError):
                raise
            raise TaskFileError(f"{where}: {e}") from e
    return out


def save_tasks(records: Sequence[TaskRecord], path) -> None:
    payload = {
        "tasks": [
            {
                "task_id": r.task_id,
                "starting_blocks": r.starting_grid.block_list(),
                "target_blocks": r.target_grid.block_list(),
                "instruction": r.instruction,
                "context_utterances": list(r.context_utterances),
                "skills": list(r.skills),
            }
            for r in records
        ]
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")
