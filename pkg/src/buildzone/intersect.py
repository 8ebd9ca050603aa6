"""Alignment-maximized structure intersection, episodic rewards, and F1.

The overlap score between the built grid and a target is the largest count of
cells that match in color after rotating the built grid by any multiple of 90
degrees and shifting it horizontally. ``max_intersection_naive`` scans every
alignment from scratch; ``IntersectionTracker`` keeps the whole per-alignment
count table current under single-cell edits, so stepping an episode never
pays the full rescan.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .grid import ZONE_X, ZONE_Z, BlockChange, Grid, rotate_y90

N_ROTATIONS = 4
SHIFT_RANGE = ZONE_X  # translations dx, dz in [-11, 11]
TABLE_WIDTH = 2 * SHIFT_RANGE + 1

# Reward for a placed block at Manhattan distance 0..5 from the wanted cell;
# beyond that the penalty grows linearly with slope FAR_PENALTY_SLOPE.
SHAPED_NEAR_REWARDS = (1.0, 0.25, 0.05, 0.001, -0.0001, -0.001)
FAR_PENALTY_SLOPE = 0.01
UNDER_FEET_BONUS = 0.5


@dataclass(frozen=True)
class IntersectionResult:
    size: int
    rotation: int
    dx: int
    dz: int


@dataclass(frozen=True)
class F1Report:
    precision: float
    recall: float
    f1: float
    intersection_size: int
    rotation: int = 0
    dx: int = 0
    dz: int = 0

    def to_dict(self) -> Dict[str, object]:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "intersection_size": self.intersection_size,
            "best_alignment": {"rotation": self.rotation, "dx": self.dx, "dz": self.dz},
        }


def rotate_cell_xz(x: int, z: int, rotation: int) -> Tuple[int, int]:
    """Where cell (x, z) lands after ``rotation`` 90-degree turns of the zone."""
    r = rotation % 4
    if r == 0:
        return x, z
    if r == 1:
        return z, ZONE_X - 1 - x
    if r == 2:
        return ZONE_X - 1 - x, ZONE_Z - 1 - z
    return ZONE_Z - 1 - z, x


def max_intersection_naive(current: Grid, target: Grid) -> IntersectionResult:
    """Exhaustively score all 4 rotations x 23x23 translations.

    An aligned cell counts when the shifted built grid matches the target
    color at a nonzero target cell. Ties take the first alignment in
    rotation-major, then dx, then dz ascending order.
    """
    tgt = target.cells
    tgt_nz = tgt != 0
    best_size = -1
    best = (0, -SHIFT_RANGE, -SHIFT_RANGE)
    rotated = current
    for rot in range(N_ROTATIONS):
        cur = rotated.cells
        for dx in range(-SHIFT_RANGE, SHIFT_RANGE + 1):
            x_lo, x_hi = max(0, dx), min(ZONE_X, ZONE_X + dx)
            for dz in range(-SHIFT_RANGE, SHIFT_RANGE + 1):
                z_lo, z_hi = max(0, dz), min(ZONE_Z, ZONE_Z + dz)
                if x_lo >= x_hi or z_lo >= z_hi:
                    size = 0  # empty overlap: the shift pushes everything out
                else:
                    t_slab = tgt[:, x_lo:x_hi, z_lo:z_hi]
                    c_slab = cur[:, x_lo - dx : x_hi - dx, z_lo - dz : z_hi - dz]
                    size = int(
                        np.count_nonzero((t_slab == c_slab) & tgt_nz[:, x_lo:x_hi, z_lo:z_hi])
                    )
                if size > best_size:
                    best_size = size
                    best = (rot, dx, dz)
        rotated = rotate_y90(rotated)
    return IntersectionResult(best_size, *best)


class IntersectionTracker:
    """Per-alignment intersection counts maintained under single-cell edits.

    A block change touches one cell, so for each rotation only the 11x11
    window of shifts that keeps the rotated cell in-zone can gain or lose a
    match, and the window contents are exactly one target layer. ``apply``
    therefore costs four small window adds plus a table max.

    With ``prune_cut_alignments`` the reported maximum skips alignments under
    which any currently placed block would shift outside the zone; the full
    table is still maintained, so the flag only filters the readout. Default
    off, which reproduces the exhaustive scan exactly.
    """

    def __init__(self, target: Grid, current: Optional[Grid] = None, prune_cut_alignments: bool = False):
        self.target = target.copy()
        self.prune_cut_alignments = prune_cut_alignments
        self.counts = np.zeros((N_ROTATIONS, TABLE_WIDTH, TABLE_WIDTH), dtype=np.int32)
        # Per-alignment count of placed blocks that stay in-zone, for pruning.
        self._in_zone = np.zeros_like(self.counts)
        self._placed = 0
        self._size = 0
        # target.cells[y] == c tables, built lazily per (y, color).
        self._layer_eq: Dict[Tuple[int, int], np.ndarray] = {}
        if current is not None:
            ys, xs, zs = np.nonzero(current.cells)
            for y, x, z in zip(ys.tolist(), xs.tolist(), zs.tolist()):
                self._shift_cell(x, y, z, int(current.cells[y, x, z]), +1)
            self._placed = current.nonzero_count
        self._size = self._table_max()

    def _layer_matches(self, y: int, color: int) -> np.ndarray:
        key = (y, color)
        table = self._layer_eq.get(key)
        if table is None:
            table = (self.target.cells[y] == color).astype(np.int32)
            self._layer_eq[key] = table
        return table

    def _shift_cell(self, x: int, y: int, z: int, color: int, sign: int) -> None:
        for rot in range(N_ROTATIONS):
            xr, zr = rotate_cell_xz(x, z, rot)
            x_lo = SHIFT_RANGE - xr
            z_lo = SHIFT_RANGE - zr
            window = self.counts[rot, x_lo : x_lo + ZONE_X, z_lo : z_lo + ZONE_Z]
            if sign > 0:
                window += self._layer_matches(y, color)
            else:
                window -= self._layer_matches(y, color)
            self._in_zone[rot, x_lo : x_lo + ZONE_X, z_lo : z_lo + ZONE_Z] += sign

    def _table_max(self) -> int:
        if self.prune_cut_alignments:
            valid = self._in_zone == self._placed
            return int(self.counts[valid].max())
        return int(self.counts.max())

    @property
    def size(self) -> int:
        return self._size

    def apply(self, change: BlockChange) -> int:
        """Fold one block change into the table; returns the new maximum."""
        if change.old == change.new:
            raise ValueError("block change with old == new")
        if change.old != 0:
            self._shift_cell(change.x, change.y, change.z, change.old, -1)
            self._placed -= 1
        if change.new != 0:
            self._shift_cell(change.x, change.y, change.z, change.new, +1)
            self._placed += 1
        self._size = self._table_max()
        return self._size

    def best(self) -> IntersectionResult:
        """Maximum with its first achieving alignment in scan order."""
        if self.prune_cut_alignments:
            masked = np.where(self._in_zone == self._placed, self.counts, -1)
            flat = int(np.argmax(masked))
        else:
            flat = int(np.argmax(self.counts))
        rot, rest = divmod(flat, TABLE_WIDTH * TABLE_WIDTH)
        ix, iz = divmod(rest, TABLE_WIDTH)
        return IntersectionResult(self._size, rot, ix - SHIFT_RANGE, iz - SHIFT_RANGE)


def tracker_init(target: Grid, current: Grid, prune_cut_alignments: bool = False) -> IntersectionTracker:
    return IntersectionTracker(target, current, prune_cut_alignments=prune_cut_alignments)


def step_reward(prev_size: int, new_size: int) -> float:
    """Per-step reward: the change in maximal intersection."""
    return float(new_size - prev_size)


def f1_from_counts(intersection: int, n_snapshot: int, n_target: int) -> Tuple[float, float, float]:
    """Precision/recall/F1 from an intersection size and nonzero counts.

    Both grids empty scores a perfect 1.0; one-sided empties score 0.
    """
    if n_snapshot == 0 and n_target == 0:
        return 1.0, 1.0, 1.0
    precision = intersection / n_snapshot if n_snapshot > 0 else 0.0
    recall = intersection / n_target if n_target > 0 else 0.0
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2.0 * precision * recall / (precision + recall)


def f1_score(snapshot: Grid, target: Grid, alignment_maximized: bool = True) -> F1Report:
    """Score a final build-zone snapshot against the target structure.

    By default the intersection is maximized over rotations and horizontal
    shifts, matching the reward's indifference to where the structure stands;
    ``alignment_maximized=False`` scores the identity alignment only.
    """
    if alignment_maximized:
        res = max_intersection_naive(snapshot, target)
    else:
        size = int(
            np.count_nonzero((snapshot.cells == target.cells) & (target.cells != 0))
        )
        res = IntersectionResult(size, 0, 0, 0)
    precision, recall, f1 = f1_from_counts(
        res.size, snapshot.nonzero_count, target.nonzero_count
    )
    return F1Report(precision, recall, f1, res.size, res.rotation, res.dx, res.dz)


def shaped_reward_for_distance(distance: int) -> float:
    """Table value for a placement at the given Manhattan distance."""
    if distance < 0:
        raise ValueError("distance must be nonnegative")
    if distance < len(SHAPED_NEAR_REWARDS):
        return SHAPED_NEAR_REWARDS[distance]
    return -FAR_PENALTY_SLOPE * (distance - 5)


def shaped_reward(
    placed: Tuple[int, int, int],
    subtask_target: Tuple[int, int, int],
    agent_feet_cell: Tuple[int, int, int],
) -> float:
    """Distance-shaped placement reward plus the under-feet bonus.

    The bonus pays out only for a correct placement directly beneath the
    agent's feet cell (the pillar-up move).
    """
    px, py, pz = placed
    tx, ty, tz = subtask_target
    d = abs(px - tx) + abs(py - ty) + abs(pz - tz)
    reward = shaped_reward_for_distance(d)
    fx, fy, fz = agent_feet_cell
    if d == 0 and px == fx and pz == fz and py == fy - 1:
        reward += UNDER_FEET_BONUS
    return reward
