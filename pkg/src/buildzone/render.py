"""Software first-person renderer: one boundary-stepping ray per pixel.

Every pixel of the 64x64 view casts a ray through the block grid using the
same advance-to-nearest-axis-boundary traversal as the gameplay raycast, but
batched over all rays with numpy. Shading is flat: block color scaled by a
per-face brightness, a light/dark checker on the ground plane, and a constant
sky. The output is a closed palette, byte-identical across repeat renders.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

from .grid import ZONE_X, ZONE_Y, ZONE_Z, COLOR_RGB, Grid

IMAGE_SIZE = 64

SKY_RGB = (122, 173, 255)
CHECKER_LIGHT_RGB = (196, 196, 196)
CHECKER_DARK_RGB = (142, 142, 142)

# Face brightnesses: top, bottom, x sides, z sides.
FACE_BRIGHTNESS = (1.0, 0.5, 0.8, 0.7)
_FACE_TOP, _FACE_BOTTOM, _FACE_X, _FACE_Z = 0, 1, 2, 3

# Shaded block palette, uint8, indexed [color][face kind].
SHADED_RGB = np.zeros((7, 4, 3), dtype=np.uint8)
for _color, _rgb in COLOR_RGB.items():
    for _k, _b in enumerate(FACE_BRIGHTNESS):
        SHADED_RGB[_color, _k] = tuple(int(c * _b) for c in _rgb)


@dataclass(frozen=True)
class CameraParams:
    fov_degrees: float = 70.0  # vertical field of view
    near: float = 0.05
    far: float = 32.0

    def __post_init__(self):
        if not 0.0 < self.fov_degrees < 180.0:
            raise ValueError("fov must be inside (0, 180)")


DEFAULT_CAMERA = CameraParams()

_pixel_grid_cache = {}


def _pixel_offsets(fov_degrees: float) -> Tuple[np.ndarray, np.ndarray]:
    """Screen-space offsets (u right, v up) per pixel at unit focal distance."""
    key = (IMAGE_SIZE, fov_degrees)
    cached = _pixel_grid_cache.get(key)
    if cached is None:
        half = math.tan(math.radians(fov_degrees) / 2.0)
        centers = (np.arange(IMAGE_SIZE) + 0.5) / IMAGE_SIZE * 2.0 - 1.0
        u = np.broadcast_to(centers * half, (IMAGE_SIZE, IMAGE_SIZE))
        v = np.broadcast_to((-centers * half)[:, None], (IMAGE_SIZE, IMAGE_SIZE))
        cached = (np.ascontiguousarray(u), np.ascontiguousarray(v))
        _pixel_grid_cache[key] = cached
    return cached


def camera_rays(pose, cam: CameraParams = DEFAULT_CAMERA) -> np.ndarray:
    """Unit direction per pixel, row-major from the top-left, shape (64, 64, 3)."""
    pitch = math.radians(pose.pitch)
    yaw = math.radians(pose.yaw)
    cos_p, sin_p = math.cos(pitch), math.sin(pitch)
    forward = np.array([math.sin(yaw) * cos_p, sin_p, -math.cos(yaw) * cos_p])
    right = np.array([math.cos(yaw), 0.0, math.sin(yaw)])
    up = np.cross(right, forward)
    u, v = _pixel_offsets(cam.fov_degrees)
    dirs = (
        forward[None, None, :]
        + u[:, :, None] * right[None, None, :]
        + v[:, :, None] * up[None, None, :]
    )
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    return dirs


def render(pose, grid: Grid, cam: CameraParams = DEFAULT_CAMERA) -> np.ndarray:
    """Render the agent's point of view; deterministic uint8 (64, 64, 3)."""
    eye = np.array(pose.eye(), dtype=np.float64)
    dirs = camera_rays(pose, cam).reshape(-1, 3)
    n = dirs.shape[0]

    d_safe = np.where(dirs == 0.0, 1e-30, dirs)
    inv = 1.0 / d_safe

    t_block = np.full(n, np.inf)
    face_kind = np.zeros(n, dtype=np.int8)
    block_color = np.zeros(n, dtype=np.int8)

    # Trace only inside the occupied bounding box; everything outside is air.
    ys, xs, zs = np.nonzero(grid.cells)
    if ys.size:
        lo = np.array([xs.min(), ys.min(), zs.min()], dtype=np.float64)
        hi = np.array([xs.max() + 1.0, ys.max() + 1.0, zs.max() + 1.0])
        t_lo = (lo - eye) * inv
        t_hi = (hi - eye) * inv
        t_near_axis = np.minimum(t_lo, t_hi)
        t_far_axis = np.maximum(t_lo, t_hi)
        t_enter = t_near_axis.max(axis=1)
        enter_axis = t_near_axis.argmax(axis=1)
        t_exit = t_far_axis.min(axis=1)
        walkers = np.nonzero((t_exit >= np.maximum(t_enter, cam.near)) & (t_enter <= cam.far))[0]
    else:
        t_enter = t_exit = enter_axis = np.zeros(0)
        walkers = np.zeros(0, dtype=np.int64)
    if walkers.size:
        t0 = np.maximum(t_enter[walkers], cam.near) + 1e-9
        start = eye[None, :] + dirs[walkers] * t0[:, None]
        cell = np.floor(start).astype(np.int64)
        np.clip(cell[:, 0], 0, ZONE_X - 1, out=cell[:, 0])
        np.clip(cell[:, 1], 0, ZONE_Y - 1, out=cell[:, 1])
        np.clip(cell[:, 2], 0, ZONE_Z - 1, out=cell[:, 2])
        w_dirs = dirs[walkers]
        w_inv = inv[walkers]
        step = np.where(w_dirs > 0.0, 1, -1).astype(np.int64)
        boundary = cell + (step > 0)
        t_max = (boundary - eye[None, :]) * w_inv
        t_delta = np.abs(w_inv)
        # Entry face per walker: +y entry means the ray came down onto a top.
        entry_axis = enter_axis[walkers]
        inside = t_enter[walkers] < cam.near  # eye inside the box: no meaningful entry face
        face = np.where(entry_axis == 1, np.where(w_dirs[:, 1] < 0, _FACE_TOP, _FACE_BOTTOM), 0)
        face = np.where(entry_axis == 0, _FACE_X, face)
        face = np.where(entry_axis == 2, _FACE_Z, face)
        face = np.where(inside, _FACE_X, face).astype(np.int8)
        entry_t = t0

        cells_flat = grid.cells
        alive = np.arange(walkers.size)
        limit = np.minimum(t_exit[walkers], cam.far)
        for _ in range(ZONE_X + ZONE_Y + ZONE_Z + 2):
            if not alive.size:
                break
            c = cell[alive]
            colors = cells_flat[c[:, 1], c[:, 0], c[:, 2]]
            solid = colors != 0
            if solid.any():
                hit = alive[solid]
                rays = walkers[hit]
                t_block[rays] = entry_t[hit]
                face_kind[rays] = face[hit]
                block_color[rays] = colors[solid]
                alive = alive[~solid]
                if not alive.size:
                    break
            # Advance survivors across their nearest boundary.
            tm = t_max[alive]
            axis = tm.argmin(axis=1)
            rows = np.arange(alive.size)
            t_cross = tm[rows, axis]
            cell[alive, axis] += step[alive, axis]
            t_max[alive, axis] += t_delta[alive, axis]
            entry_t[alive] = t_cross
            down = w_dirs[alive, 1] < 0.0
            new_face = np.where(axis == 0, _FACE_X, np.where(axis == 2, _FACE_Z, 0))
            new_face = np.where(axis == 1, np.where(down, _FACE_TOP, _FACE_BOTTOM), new_face)
            face[alive] = new_face.astype(np.int8)
            # Rays that stepped past their exit are done.
            out = t_cross > limit[alive]
            coords = cell[alive]
            oob = (
                (coords[:, 0] < 0)
                | (coords[:, 0] >= ZONE_X)
                | (coords[:, 1] < 0)
                | (coords[:, 1] >= ZONE_Y)
                | (coords[:, 2] < 0)
                | (coords[:, 2] >= ZONE_Z)
            )
            alive = alive[~(out | oob)]

    # Ground plane: first downward crossing of y=0, an infinite checker.
    down_rays = dirs[:, 1] < 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = np.where(down_rays, -eye[1] / d_safe[:, 1], np.inf)
    t_ground = np.where((t_ground >= cam.near) & (t_ground <= cam.far), t_ground, np.inf)

    img = np.empty((n, 3), dtype=np.uint8)
    img[:] = SKY_RGB
    ground_first = t_ground < t_block
    if ground_first.any():
        gx = np.floor(eye[0] + dirs[ground_first, 0] * t_ground[ground_first]).astype(np.int64)
        gz = np.floor(eye[2] + dirs[ground_first, 2] * t_ground[ground_first]).astype(np.int64)
        checker = ((gx + gz) & 1).astype(bool)
        ground_rgb = np.where(
            checker[:, None],
            np.array(CHECKER_DARK_RGB, dtype=np.uint8)[None, :],
            np.array(CHECKER_LIGHT_RGB, dtype=np.uint8)[None, :],
        )
        img[ground_first] = ground_rgb
    block_first = np.isfinite(t_block) & ~ground_first
    if block_first.any():
        img[block_first] = SHADED_RGB[block_color[block_first], face_kind[block_first]]
    return img.reshape(IMAGE_SIZE, IMAGE_SIZE, 3)


def write_ppm(image: np.ndarray, path) -> None:
    """Dump a frame as binary PPM (P6)."""
    h, w = image.shape[:2]
    with open(Path(path), "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(np.ascontiguousarray(image, dtype=np.uint8).tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    header, _, rest = data.partition(b"255\n")
    fields = header.split()
    if fields[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM file")
    w, h = int(fields[1]), int(fields[2])
    return np.frombuffer(rest, dtype=np.uint8, count=w * h * 3).reshape(h, w, 3)
