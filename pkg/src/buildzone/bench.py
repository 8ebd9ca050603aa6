"""Throughput harness: steps-per-second of the environment loop."""
from __future__ import annotations

import statistics
import time
from pathlib import Path
from typing import Dict, List, Optional

from .agent import RandomAgent
from .env import Environment, EpisodeConfig
from .tasks import generate_task


def run_benchmark(
    steps: int = 100_000,
    render: bool = False,
    episodes: int = 0,
    seed: int = 0,
    max_steps_per_episode: int = 1000,
    dump_frames_dir: Optional[str] = None,
    dump_frame_count: int = 5,
) -> Dict:
    """Step seeded random-action episodes and report wall-clock throughput.

    ``episodes`` bounds the episode count (0 = as many as ``steps`` needs).
    The action stream and final grids depend only on the seed, never on the
    renderer, so rendered and headless runs can be diffed.
    """
    config = EpisodeConfig(max_steps=max_steps_per_episode, render=render)
    env = Environment(config)
    latencies: List[float] = []
    final_grids = []
    dumped = 0
    episode = 0
    done_steps = 0
    t_start = time.perf_counter()
    while done_steps < steps and (episodes <= 0 or episode < episodes):
        task = generate_task(seed=seed + episode, n_blocks=8 + (episode % 8))
        env.reset(task, seed=seed + episode)
        agent = RandomAgent(env, seed=seed + episode)
        while not env.done and done_steps < steps:
            t0 = time.perf_counter()
            res = env.step(agent.act())
            latencies.append(time.perf_counter() - t0)
            done_steps += 1
            if render and dump_frames_dir and dumped < dump_frame_count:
                from .render import write_ppm

                Path(dump_frames_dir).mkdir(parents=True, exist_ok=True)
                write_ppm(res.observation.pov, Path(dump_frames_dir) / f"frame_{dumped:03d}.ppm")
                dumped += 1
        final_grids.append(env.grid.block_list())
        episode += 1
    elapsed = time.perf_counter() - t_start
    latencies.sort()
    return {
        "steps": done_steps,
        "episodes": episode,
        "render": render,
        "seed": seed,
        "elapsed_seconds": elapsed,
        "sps": done_steps / elapsed if elapsed > 0 else 0.0,
        "p50_latency_ms": 1000 * statistics.median(latencies) if latencies else 0.0,
        "p99_latency_ms": 1000 * latencies[int(0.99 * (len(latencies) - 1))] if latencies else 0.0,
        "final_grids": final_grids,
    }


def format_report(report: Dict) -> str:
    lines = [
        f"steps            {report['steps']}",
        f"episodes         {report['episodes']}",
        f"render           {'on' if report['render'] else 'off'}",
        f"elapsed          {report['elapsed_seconds']:.3f} s",
        f"throughput       {report['sps']:.0f} steps/s",
        f"p50 step latency {report['p50_latency_ms']:.4f} ms",
        f"p99 step latency {report['p99_latency_ms']:.4f} ms",
    ]
    return "\n".join(lines)
