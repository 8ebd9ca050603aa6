"""Array-facade bindings: reset/step with contiguous numpy observations.

A handle wraps exactly one core environment and adds no behavior of its own,
so a rollout through the bindings is bit-identical to one through the core.
Observations are plain arrays: grid int8 (9, 11, 11), inventory int32 (6,),
pose float32 (5,), compass float32 (1,), and, with rendering on, pov uint8
(64, 64, 3); the dialog text rides along as ``chat``.
"""
from __future__ import annotations

from typing import Dict, Optional, Tuple

import numpy as np

from buildzone.env import Action, Environment, EpisodeConfig, Observation
from buildzone.tasks import TaskRecord, generate_task, load_tasks

__all__ = ["EnvHandle", "make_env"]


def _as_config(config) -> EpisodeConfig:
    if config is None:
        return EpisodeConfig()
    if isinstance(config, EpisodeConfig):
        return config
    return EpisodeConfig.from_dict(dict(config))


def make_env(
    task: Optional[TaskRecord] = None,
    task_file: Optional[str] = None,
    generator: Optional[Dict] = None,
    config=None,
) -> "EnvHandle":
    """One environment handle from a task record, a task file, or generator
    parameters ({seed, n_blocks, max_height, n_colors})."""
    if sum(x is not None for x in (task, task_file, generator)) != 1:
        raise ValueError("pass exactly one of task, task_file, generator")
    if task_file is not None:
        records = load_tasks(task_file)
        if not records:
            raise ValueError(f"{task_file}: no tasks")
        task = records[0]
    elif generator is not None:
        params = dict(generator)
        task = generate_task(
            seed=int(params.get("seed", 0)),
            n_blocks=int(params.get("n_blocks", 8)),
            max_height=int(params.get("max_height", 5)),
            n_colors=int(params.get("n_colors", 6)),
        )
    return EnvHandle(task, _as_config(config))


class EnvHandle:
    """Facade over one core environment; single-threaded like the core."""

    def __init__(self, task: TaskRecord, config: EpisodeConfig):
        self.task = task
        self.env = Environment(config)

    def reset(self, seed: int = 0) -> Dict:
        return self._pack(self.env.reset(self.task, seed=seed))

    def step(self, action: Dict) -> Tuple[Dict, float, bool, Dict]:
        verb = int(action["verb"])
        camera = action.get("camera", (0.0, 0.0))
        result = self.env.step(Action(verb, (float(camera[0]), float(camera[1]))))
        return self._pack(result.observation), result.reward, result.done, result.info

    def render(self) -> np.ndarray:
        from buildzone.render import render

        return render(self.env.pose, self.env.grid)

    def _pack(self, obs: Observation) -> Dict:
        # The grid array inside the observation is already this step's
        # snapshot copy; reuse it rather than copying again.
        packed = {
            "grid": np.ascontiguousarray(obs.grid.cells, dtype=np.int8),
            "inventory": np.asarray(obs.inventory, dtype=np.int32),
            "pose": np.asarray(obs.pose, dtype=np.float32),
            "compass": np.asarray([obs.compass], dtype=np.float32),
            "chat": obs.chat,
            "selected": obs.selected,
        }
        if obs.pov is not None:
            packed["pov"] = obs.pov
        return packed
