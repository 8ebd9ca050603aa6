"""Command-line entry points: bench, run, eval, convert, serve.

Exit codes: 0 success, 1 input error, 2 internal error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional

DEFAULT_PORT = int(os.environ.get("BUILDZONE_PORT", "8712"))


def _hash_blocks(blocks) -> str:
    return hashlib.sha1(json.dumps(blocks).encode()).hexdigest()[:16]


def cmd_bench(args) -> int:
    from .bench import format_report, run_benchmark

    report = run_benchmark(
        steps=args.steps,
        render=args.render == "on",
        episodes=args.episodes,
        seed=args.seed,
        dump_frames_dir=args.dump_frames,
    )
    grids = report.pop("final_grids")
    report["final_grids_sha1"] = _hash_blocks(grids)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(format_report(report))
        print(f"final grids sha1  {report['final_grids_sha1']}")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    return 0


def _write_trace(env, agent, limit, trace_path) -> Dict:
    """Step an episode while dumping one JSON line of state per step."""
    with open(trace_path, "a") as f:
        steps = 0
        reward_sum = 0.0
        while not env.done and steps < limit:
            action = agent.act()
            res = env.step(action)
            obs = res.observation
            f.write(
                json.dumps(
                    {
                        "task_id": env.task.task_id,
                        "step": steps,
                        "verb": action.verb,
                        "camera": [action.camera[0], action.camera[1]],
                        "reward": res.reward,
                        "done": res.done,
                        "pose": list(obs.pose),
                        "compass": obs.compass,
                        "inventory": obs.inventory,
                        "selected": obs.selected,
                        "grid_sha1": _hash_blocks(obs.grid.block_list()),
                        "intersection": res.info["intersection_size"],
                    }
                )
                + "\n"
            )
            reward_sum += res.reward
            steps += 1
    from .intersect import f1_score

    rep = f1_score(env.grid, env.target)
    return {
        "task_id": env.task.task_id,
        "steps": steps,
        "reward_sum": reward_sum,
        "f1": rep.f1,
        "intersection_size": rep.intersection_size,
        "termination_reason": env.termination_reason,
    }


def cmd_run(args) -> int:
    from .agent import RandomAgent, ScriptedBuilder, run_episode
    from .env import Environment, EpisodeConfig
    from .tasks import TaskFileError, generate_task, load_tasks

    if args.task:
        try:
            tasks = load_tasks(args.task)
        except (TaskFileError, OSError) as e:
            print(f"error: {e}", file=sys.stderr)
            return 1
    else:
        tasks = [
            generate_task(seed=args.seed + i, n_blocks=args.n_blocks, max_height=args.max_height)
            for i in range(args.generate)
        ]
    if args.trace:
        Path(args.trace).write_text("")

    reports: List[Dict] = []
    for i, task in enumerate(tasks):
        env = Environment(
            EpisodeConfig(max_steps=args.max_steps, render=args.render == "on")
        )
        env.reset(task, seed=args.seed + i)
        agent = (
            ScriptedBuilder(env)
            if args.agent == "scripted"
            else RandomAgent(env, seed=args.seed + i)
        )
        if args.trace:
            rep = _write_trace(env, agent, args.max_steps, args.trace)
        else:
            rep = run_episode(env, agent)
        rep["skills"] = list(task.skills)
        reports.append(rep)
        print(
            f"{rep['task_id']:24s} f1={rep['f1']:.3f} steps={rep['steps']:5d} "
            f"reward={rep['reward_sum']:8.3f} end={rep['termination_reason']}"
        )

    by_skill: Dict[str, List[float]] = defaultdict(list)
    for rep in reports:
        for skill in rep["skills"] or ["unlabeled"]:
            by_skill[skill].append(rep["f1"])
    summary = {
        "mean_f1": sum(r["f1"] for r in reports) / len(reports) if reports else 0.0,
        "episodes": len(reports),
        "per_skill_mean_f1": {k: sum(v) / len(v) for k, v in sorted(by_skill.items())},
    }
    print(f"mean f1 over all tasks: {summary['mean_f1']:.4f}")
    for skill, mean in summary["per_skill_mean_f1"].items():
        print(f"  {skill:10s} {mean:.4f}  (n={len(by_skill[skill])})")
    if args.out:
        Path(args.out).write_text(
            json.dumps({"episodes": reports, "summary": summary}, indent=2) + "\n"
        )
    return 0


def cmd_eval(args) -> int:
    from .behavior import BehaviorParseError, load_demo_snapshots
    from .intersect import f1_score
    from .tasks import TaskFileError, load_tasks

    try:
        snapshots = load_demo_snapshots(args.log)
        tasks = {t.task_id: t for t in load_tasks(args.tasks)}
    except (BehaviorParseError, TaskFileError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    missing = sorted(set(snapshots) - set(tasks))
    if missing:
        print(f"error: demo task ids not in task file: {missing}", file=sys.stderr)
        return 1
    results = {}
    for task_id, snapshot in sorted(snapshots.items()):
        rep = f1_score(snapshot, tasks[task_id].target_grid)
        results[task_id] = rep.to_dict()
        print(
            f"{task_id:24s} f1={rep.f1:.3f} precision={rep.precision:.3f} "
            f"recall={rep.recall:.3f} intersection={rep.intersection_size}"
        )
    if results:
        mean = sum(r["f1"] for r in results.values()) / len(results)
        print(f"mean f1: {mean:.4f}")
    if args.out:
        Path(args.out).write_text(json.dumps(results, indent=2) + "\n")
    return 0


def cmd_convert(args) -> int:
    import warnings as warnings_mod

    from .behavior import (
        BehaviorParseError,
        IdOffsetMap,
        DEFAULT_ID_OFFSET_MAP,
        ReplayError,
        map_ending_blocks,
        parse_record,
        replay_tape,
        to_trajectory,
        write_demos,
    )
    from .tasks import save_tasks

    id_map = DEFAULT_ID_OFFSET_MAP
    if args.map:
        try:
            id_map = IdOffsetMap.from_dict(json.loads(Path(args.map).read_text()))
        except (ValueError, OSError) as e:
            print(f"error: bad map file: {e}", file=sys.stderr)
            return 1
    try:
        text = Path(args.raw).read_text()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = text  # python-literal single record; parse_record sorts it out
    records_in = data if isinstance(data, list) else [data]

    summary = {"parsed": 0, "replay_ok": 0, "warnings": 0, "failed": 0}
    trajectories = []
    for i, raw in enumerate(records_in):
        try:
            rec = parse_record(raw)
            summary["parsed"] += 1
            summary["warnings"] += len(rec.parse_warnings)
            with warnings_mod.catch_warnings(record=True) as caught:
                warnings_mod.simplefilter("always")
                final = replay_tape(rec, id_map)
                traj = to_trajectory(rec, id_map)
            summary["warnings"] += len(caught)
            if final == map_ending_blocks(rec, id_map):
                summary["replay_ok"] += 1
            trajectories.append(traj)
        except (BehaviorParseError, ReplayError, ValueError) as e:
            summary["failed"] += 1
            print(f"record[{i}]: {e}", file=sys.stderr)
    write_demos(trajectories, args.out)
    tasks_out = args.tasks_out or str(Path(args.out).with_suffix(".tasks.json"))
    tasks = [t.to_task() for t in trajectories if t.final_grid.nonzero_count > 0]
    if tasks:
        save_tasks(tasks, tasks_out)
    print(json.dumps(summary))
    return 0 if summary["failed"] == 0 else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    static_dir = args.static or "frontend/dist"  # the browser client bundle
    if not Path(static_dir).is_dir():
        static_dir = None
    app = create_app(mode=args.mode, static_dir=static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="buildzone", description="Voxel build-zone environment toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="measure environment steps per second")
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--render", choices=("on", "off"), default="off")
    p.add_argument("--episodes", type=int, default=0, help="0 = unlimited")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="print the JSON report")
    p.add_argument("--out", help="also write the JSON report to a file")
    p.add_argument("--dump-frames", help="directory for PPM dumps of the first frames")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("run", help="run episodes with an agent")
    p.add_argument("--task", help="task file (JSON)")
    p.add_argument("--agent", choices=("scripted", "random"), default="scripted")
    p.add_argument("--max-steps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--render", choices=("on", "off"), default="off")
    p.add_argument("--generate", type=int, default=10, help="generate N tasks if no --task")
    p.add_argument("--n-blocks", type=int, default=8)
    p.add_argument("--max-height", type=int, default=5)
    p.add_argument("--out", help="write per-episode reports (JSON)")
    p.add_argument("--trace", help="write one JSON line of state per step")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score demonstration logs against task targets")
    p.add_argument("--log", required=True, help="demo file (JSON lines)")
    p.add_argument("--tasks", required=True, help="task file with matching task ids")
    p.add_argument("--out", help="write the metric report (JSON)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("convert", help="convert raw session records to demonstrations")
    p.add_argument("--raw", required=True, help="raw record file (JSON or python literal)")
    p.add_argument("--out", required=True, help="demo output file (JSON lines)")
    p.add_argument("--map", help="id/offset map file (JSON)")
    p.add_argument("--tasks-out", help="task file for the final grids")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("serve", help="run the session server")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--mode", choices=("human_collect", "agent_eval"), default="human_collect")
    p.add_argument("--static", help="static asset directory for the browser client")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except Exception as e:  # internal failure contract
        print(f"internal error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
