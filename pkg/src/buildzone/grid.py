"""Block grid for the 11x11x9 build zone: storage, transforms, and ray queries.

Coordinates are integer cells ``(x, y, z)`` with ``x, z`` in ``[0, 10]`` and
``y`` (vertical) in ``[0, 8]``. Storage is a dense ``(y, x, z)`` int8 tensor
so horizontal transforms are plain axis operations. Cell values are block
colors: 0 is air, 1..6 are the placeable colors.
"""
from __future__ import annotations

import math
from typing import Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np

# Zone extents in cells. x/z span the square footprint, y is vertical.
ZONE_X = 11
ZONE_Y = 9
ZONE_Z = 11

AIR = 0
BLUE = 1
GREEN = 2
RED = 3
ORANGE = 4
PURPLE = 5
YELLOW = 6

COLOR_NAMES = {
    AIR: "air",
    BLUE: "blue",
    GREEN: "green",
    RED: "red",
    ORANGE: "orange",
    PURPLE: "purple",
    YELLOW: "yellow",
}

# RGB used by the software renderer and the browser viewer.
COLOR_RGB = {
    BLUE: (63, 96, 217),
    GREEN: (76, 160, 73),
    RED: (204, 58, 48),
    ORANGE: (224, 133, 36),
    PURPLE: (138, 66, 184),
    YELLOW: (232, 208, 63),
}

FACE_DIRECTIONS: Tuple[Tuple[int, int, int], ...] = (
    (1, 0, 0),
    (-1, 0, 0),
    (0, 1, 0),
    (0, -1, 0),
    (0, 0, 1),
    (0, 0, -1),
)

# Face identifiers for ray hits, as (axis, sign) names.
FACE_POS_X = "+x"
FACE_NEG_X = "-x"
FACE_POS_Y = "+y"
FACE_NEG_Y = "-y"
FACE_POS_Z = "+z"
FACE_NEG_Z = "-z"

_FACE_NORMALS = {
    FACE_POS_X: (1, 0, 0),
    FACE_NEG_X: (-1, 0, 0),
    FACE_POS_Y: (0, 1, 0),
    FACE_NEG_Y: (0, -1, 0),
    FACE_POS_Z: (0, 0, 1),
    FACE_NEG_Z: (0, 0, -1),
}


def face_normal(face: str) -> Tuple[int, int, int]:
    """Unit outward normal of a hit face."""
    return _FACE_NORMALS[face]


def in_zone(x: int, y: int, z: int) -> bool:
    return 0 <= x < ZONE_X and 0 <= y < ZONE_Y and 0 <= z < ZONE_Z


def check_color(value: int) -> int:
    v = int(value)
    if not 0 <= v <= 6:
        raise ValueError(f"block color {value} outside [0, 6]")
    return v


class BlockChange(NamedTuple):
    """Single-cell write event: (cell, previous value, new value)."""

    x: int
    y: int
    z: int
    old: int
    new: int


class RayHit(NamedTuple):
    """First boundary crossed by a ray: a solid cell or the ground plane.

    For ground-plane hits ``cell`` is the in-zone column cell at y=0,
    ``face`` is ``+y`` and ``ground`` is True.
    """

    cell: Tuple[int, int, int]
    face: str
    distance: float
    ground: bool = False


class Grid:
    """Dense block grid over the build zone with a cached nonzero count."""

    __slots__ = ("cells", "_nonzero")

    def __init__(self, cells: Optional[np.ndarray] = None):
        if cells is None:
            self.cells = np.zeros((ZONE_Y, ZONE_X, ZONE_Z), dtype=np.int8)
            self._nonzero = 0
        else:
            arr = np.asarray(cells, dtype=np.int8)
            if arr.shape != (ZONE_Y, ZONE_X, ZONE_Z):
                raise ValueError(f"grid shape {arr.shape} != {(ZONE_Y, ZONE_X, ZONE_Z)}")
            if arr.min() < 0 or arr.max() > 6:
                raise ValueError("grid values outside [0, 6]")
            self.cells = arr.copy()
            self._nonzero = int(np.count_nonzero(arr))

    @classmethod
    def from_blocks(cls, blocks: Iterable[Sequence[int]]) -> "Grid":
        """Build a grid from ``[x, y, z, color]`` quadruples."""
        g = cls()
        for b in blocks:
            x, y, z, c = (int(v) for v in b)
            if not in_zone(x, y, z):
                raise ValueError(f"block ({x}, {y}, {z}) outside the build zone")
            g.set(x, y, z, check_color(c))
        return g

    @property
    def nonzero_count(self) -> int:
        return self._nonzero

    def get(self, x: int, y: int, z: int) -> int:
        if not in_zone(x, y, z):
            raise IndexError(f"cell ({x}, {y}, {z}) outside the build zone")
        return int(self.cells[y, x, z])

    def set(self, x: int, y: int, z: int, value: int) -> BlockChange:
        """Write one cell, keep the nonzero count current, report the change."""
        if not in_zone(x, y, z):
            raise IndexError(f"cell ({x}, {y}, {z}) outside the build zone")
        v = check_color(value)
        old = int(self.cells[y, x, z])
        self.cells[y, x, z] = v
        if old == 0 and v != 0:
            self._nonzero += 1
        elif old != 0 and v == 0:
            self._nonzero -= 1
        return BlockChange(x, y, z, old, v)

    def is_solid(self, x: int, y: int, z: int) -> bool:
        """True for in-zone nonzero cells; out-of-zone is never solid."""
        if not in_zone(x, y, z):
            return False
        return self.cells[y, x, z] != 0

    def copy(self) -> "Grid":
        g = Grid.__new__(Grid)
        g.cells = self.cells.copy()
        g._nonzero = self._nonzero
        return g

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return bool(np.array_equal(self.cells, other.cells))

    def __hash__(self):  # mutable container
        raise TypeError("Grid is unhashable")

    def block_list(self) -> List[List[int]]:
        """Nonzero cells as ``[x, y, z, color]``, sorted by (y, x, z)."""
        ys, xs, zs = np.nonzero(self.cells)
        colors = self.cells[ys, xs, zs]
        return [
            [int(x), int(y), int(z), int(c)]
            for y, x, z, c in zip(ys.tolist(), xs.tolist(), zs.tolist(), colors.tolist())
        ]

    def per_color_counts(self) -> List[int]:
        """Counts for colors 1..6."""
        return [int(np.count_nonzero(self.cells == c)) for c in range(1, 7)]

    def column_top(self, x: int, z: int) -> int:
        """Height of column (x, z): index above the highest solid cell, 0 if empty."""
        col = self.cells[:, x, z]
        solid = np.nonzero(col)[0]
        if solid.size == 0:
            return 0
        return int(solid[-1]) + 1


def rotate_y90(grid: Grid) -> Grid:
    """Rotate the horizontal plane 90 degrees about the zone center.

    Cell mapping: (x, z) -> (z, ZONE_X - 1 - x); y layers are untouched.
    """
    out = Grid.__new__(Grid)
    out.cells = np.ascontiguousarray(grid.cells.transpose(0, 2, 1)[:, :, ::-1])
    out._nonzero = grid._nonzero
    return out


def translate_xz(grid: Grid, dx: int, dz: int) -> Grid:
    """Shift blocks horizontally; blocks pushed past the zone edge are dropped."""
    if not -ZONE_X <= dx <= ZONE_X or not -ZONE_Z <= dz <= ZONE_Z:
        raise ValueError(f"translation ({dx}, {dz}) outside [-11, 11]")
    out = Grid()
    src = grid.cells
    x_src_lo, x_src_hi = max(0, -dx), min(ZONE_X, ZONE_X - dx)
    z_src_lo, z_src_hi = max(0, -dz), min(ZONE_Z, ZONE_Z - dz)
    if x_src_lo < x_src_hi and z_src_lo < z_src_hi:
        out.cells[:, x_src_lo + dx : x_src_hi + dx, z_src_lo + dz : z_src_hi + dz] = src[
            :, x_src_lo:x_src_hi, z_src_lo:z_src_hi
        ]
    out._nonzero = int(np.count_nonzero(out.cells))
    return out


def connected_components(grid: Grid) -> List[Set[Tuple[int, int, int]]]:
    """Partition nonzero cells into 6-connected (face adjacency) components."""
    visited = np.zeros_like(grid.cells, dtype=bool)
    components: List[Set[Tuple[int, int, int]]] = []
    ys, xs, zs = np.nonzero(grid.cells)
    for y0, x0, z0 in zip(ys.tolist(), xs.tolist(), zs.tolist()):
        if visited[y0, x0, z0]:
            continue
        comp: Set[Tuple[int, int, int]] = set()
        stack = [(x0, y0, z0)]
        visited[y0, x0, z0] = True
        while stack:
            x, y, z = stack.pop()
            comp.add((x, y, z))
            for ddx, ddy, ddz in FACE_DIRECTIONS:
                nx, ny, nz = x + ddx, y + ddy, z + ddz
                if in_zone(nx, ny, nz) and not visited[ny, nx, nz] and grid.cells[ny, nx, nz] != 0:
                    visited[ny, nx, nz] = True
                    stack.append((nx, ny, nz))
        components.append(comp)
    return components


def raycast(
    grid: Grid,
    origin: Tuple[float, float, float],
    direction: Tuple[float, float, float],
    reach: float,
) -> Optional[RayHit]:
    """Walk the ray across cell boundaries and return the first solid hit.

    The traversal advances to the nearest axis boundary each step, so cells
    are visited in strictly increasing distance order. A downward crossing of
    the ground plane (y=0) inside the zone footprint counts as a hit with face
    ``+y`` on the column's y=0 cell. Returns None when nothing solid lies
    within ``reach``.
    """
    ox, oy, oz = origin
    dx, dy, dz = direction
    norm = math.sqrt(dx * dx + dy * dy + dz * dz)
    if norm == 0.0:
        raise ValueError("ray direction must be nonzero")
    dx, dy, dz = dx / norm, dy / norm, dz / norm

    # Current cell indices; origin on a boundary belongs to the cell ahead.
    cx = math.floor(ox)
    cy = math.floor(oy)
    cz = math.floor(oz)

    step_x = 1 if dx > 0 else -1
    step_y = 1 if dy > 0 else -1
    step_z = 1 if dz > 0 else -1

    inf = math.inf
    # Distance along the ray to the first boundary per axis, and per-cell increments.
    if dx != 0.0:
        next_x = cx + 1 if dx > 0 else cx
        t_max_x = (next_x - ox) / dx
        t_delta_x = abs(1.0 / dx)
    else:
        t_max_x, t_delta_x = inf, inf
    if dy != 0.0:
        next_y = cy + 1 if dy > 0 else cy
        t_max_y = (next_y - oy) / dy
        t_delta_y = abs(1.0 / dy)
    else:
        t_max_y, t_delta_y = inf, inf
    if dz != 0.0:
        next_z = cz + 1 if dz > 0 else cz
        t_max_z = (next_z - oz) / dz
        t_delta_z = abs(1.0 / dz)
    else:
        t_max_z, t_delta_z = inf, inf

    # Check the starting cell too: a ray born inside a solid block hits it at t=0.
    if grid.is_solid(cx, cy, cz):
        face = FACE_NEG_X if dx > 0 else FACE_POS_X
        return RayHit((cx, cy, cz), face, 0.0)

    t = 0.0
    while True:
        if t_max_x <= t_max_y and t_max_x <= t_max_z:
            t = t_max_x
            t_max_x += t_delta_x
            cx += step_x
            face = FACE_NEG_X if step_x > 0 else FACE_POS_X
        elif t_max_y <= t_max_z:
            t = t_max_y
            t_max_y += t_delta_y
            cy += step_y
            face = FACE_NEG_Y if step_y > 0 else FACE_POS_Y
        else:
            t = t_max_z
            t_max_z += t_delta_z
            cz += step_z
            face = FACE_NEG_Z if step_z > 0 else FACE_POS_Z
        if t > reach:
            return None
        if grid.is_solid(cx, cy, cz):
            return RayHit((cx, cy, cz), face, t)
        if cy < 0 and step_y < 0:
            # Crossed the ground plane going down: the boundary just crossed
            # was y=0 iff the y axis won this step.
            if face == FACE_POS_Y:
                px = ox + dx * t
                pz = oz + dz * t
                gx, gz = math.floor(px), math.floor(pz)
                if 0 <= gx < ZONE_X and 0 <= gz < ZONE_Z:
                    return RayHit((gx, 0, gz), FACE_POS_Y, t, ground=True)
            return None
        # Outside the zone with no chance of re-entry once past all bounds.
        if (
            (cx < 0 and step_x < 0)
            or (cx >= ZONE_X and step_x > 0)
            or (cz < 0 and step_z < 0)
            or (cz >= ZONE_Z and step_z > 0)
            or (cy >= ZONE_Y and step_y > 0 and oy + dy * t >= ZONE_Y)
        ):
            # Still may cross the ground plane later if heading down.
            if dy < 0 and oy > 0:
                t_ground = -oy / dy
                if t_ground <= reach:
                    px = ox + dx * t_ground
                    pz = oz + dz * t_ground
                    gx, gz = math.floor(px), math.floor(pz)
                    if 0 <= gx < ZONE_X and 0 <= gz < ZONE_Z:
                        return RayHit((gx, 0, gz), FACE_POS_Y, t_ground, ground=True)
            return None
