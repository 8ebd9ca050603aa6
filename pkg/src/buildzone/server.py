"""Session server: drives environments for remote clients over WebSockets.

One connection is one session with its own environment and behavior tape.
Messages are JSON objects with a per-direction strictly increasing ``seq``;
every server reply echoes the ``seq`` of the client message it answers.
A human-collect session records a raw-format tape that replays exactly to
the session's final grid.
"""
from __future__ import annotations

import asyncio
import base64
import io
import json
from typing import Dict, Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .behavior import DEFAULT_ID_OFFSET_MAP, RecordBuilder
from .env import VERB_IDS, VERB_NAMES, Action, Environment, EpisodeConfig
from .grid import ZONE_Y, Grid
from .tasks import TaskRecord, generate_task

PROTOCOL_VERSION = 1
MAX_SESSIONS = 64
MODES = ("human_collect", "agent_eval")

# Open-ended collect sessions still need a target for the reward stack; this
# one (a full top-layer ring) is never matched by accident.
_COLLECT_SENTINEL_BLOCKS = [[x, ZONE_Y - 1, z, 1] for x in (0, 10) for z in range(11)] + [
    [x, ZONE_Y - 1, z, 1] for x in range(1, 10) for z in (0, 10)
]


def _collect_task() -> TaskRecord:
    return TaskRecord(
        task_id="free-build",
        starting_grid=Grid(),
        target_grid=Grid.from_blocks(_COLLECT_SENTINEL_BLOCKS),
        instruction="Build anything you like, then describe it.",
    )


def _encode_pov_png(pov) -> str:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(pov).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class Session:
    """Server-side state for one connection."""

    def __init__(self, session_id: int, mode: str):
        self.session_id = session_id
        self.mode = mode
        self.config = EpisodeConfig(
            max_steps=100_000 if mode == "human_collect" else 500,
            render=False,
        )
        self.env: Optional[Environment] = None
        self.recorder = RecordBuilder(game_id=session_id, id_map=DEFAULT_ID_OFFSET_MAP)
        self.instruction: Optional[str] = None
        self.server_seq = 0
        self.last_client_seq: Optional[int] = None
        self.greeted = False

    def next_seq(self) -> int:
        self.server_seq += 1
        return self.server_seq

    def ensure_env(self) -> Environment:
        if self.env is None:
            self.env = Environment(self.config)
            task = _collect_task() if self.mode == "human_collect" else generate_task(seed=0)
            self.env.reset(task)
        return self.env

    def observation_payload(self, reward=0.0, done=False, info=None) -> Dict:
        env = self.ensure_env()
        obs = env.observe()
        payload = {
            "step": env.steps,
            "reward": reward,
            "done": done,
            "info": info or {},
            "chat": obs.chat,
            "compass": obs.compass,
            "inventory": obs.inventory,
            "selected": obs.selected,
        }
        if obs.pov is not None:
            payload["pov_png"] = _encode_pov_png(obs.pov)
        if self.config.profile == "full":
            payload["grid"] = obs.grid.block_list()
            payload["pose"] = list(obs.pose)
        return payload

    # -- handlers ------------------------------------------------------------

    def handle(self, msg: Dict) -> Dict:
        """Process one message, mutate state, and return the reply payload."""
        mtype = msg.get("type")
        seq = msg.get("seq")
        if not isinstance(seq, int):
            return self.error("message has no integer seq", seq)
        if self.last_client_seq is not None and seq <= self.last_client_seq:
            return self.error(f"seq {seq} is not greater than {self.last_client_seq}", seq)
        self.last_client_seq = seq

        if mtype == "hello":
            if msg.get("version") != PROTOCOL_VERSION:
                return {
                    "type": "error",
                    "seq": self.next_seq(),
                    "echo": seq,
                    "message": f"protocol version {msg.get('version')} != {PROTOCOL_VERSION}",
                    "fatal": True,
                }
            self.greeted = True
            return {
                "type": "hello",
                "seq": self.next_seq(),
                "echo": seq,
                "session_id": self.session_id,
                "mode": self.mode,
                "version": PROTOCOL_VERSION,
            }
        if not self.greeted:
            return self.error("hello required first", seq)
        if mtype == "config":
            return self.on_config(msg, seq)
        if mtype == "action":
            return self.on_action(msg, seq)
        if mtype == "instruction_submit":
            text = str(msg.get("text", "")).strip()
            if not text:
                return self.error("instruction text is empty", seq)
            self.instruction = text
            self.recorder.log_action("submit_instruction")
            return {"type": "ack", "seq": self.next_seq(), "echo": seq}
        if mtype == "export_log":
            return self.on_export(seq)
        if mtype == "end_episode":
            env = self.ensure_env()
            env.done = True
            env.termination_reason = "end_action"
            return {"type": "ack", "seq": self.next_seq(), "echo": seq}
        return self.error(f"unknown message type {mtype!r}", seq)

    def error(self, message: str, echo=None) -> Dict:
        reply = {"type": "error", "seq": self.next_seq(), "message": message}
        if echo is not None:
            reply["echo"] = echo
        return reply

    def on_config(self, msg: Dict, seq: int) -> Dict:
        try:
            if "config" in msg:
                self.config = EpisodeConfig.from_dict(dict(msg["config"]))
                if self.mode == "human_collect":
                    self.config.max_steps = max(self.config.max_steps, 100_000)
            task = None
            if "task" in msg:
                from .tasks import _task_from_dict

                task = _task_from_dict(dict(msg["task"]), "wire-task")
            elif "generator" in msg:
                g = dict(msg["generator"])
                task = generate_task(
                    seed=int(g.get("seed", 0)),
                    n_blocks=int(g.get("n_blocks", 8)),
                    max_height=int(g.get("max_height", 5)),
                    n_colors=int(g.get("n_colors", 6)),
                )
            elif self.mode == "human_collect":
                task = _collect_task()
            else:
                task = generate_task(seed=0)
        except (ValueError, KeyError) as e:
            return self.error(f"bad config: {e}", seq)
        self.env = Environment(self.config)
        obs = self.env.reset(task)
        self.recorder = RecordBuilder(game_id=self.session_id, id_map=DEFAULT_ID_OFFSET_MAP)
        self.recorder.log_action("start_recover_world_state")
        for x, y, z, c in task.starting_grid.block_list():
            self.recorder.log_block_change(x, y, z, 0, c)
        p = self.env.pose
        self.recorder.log_pos(p.x, p.y, p.z)
        self.recorder.log_look(p.pitch, p.yaw)
        self.recorder.log_action("finish_recover_world_state")
        reply = {"type": "observation", "seq": self.next_seq(), "echo": seq}
        reply.update(self.observation_payload())
        return reply

    def on_action(self, msg: Dict, seq: int) -> Dict:
        env = self.ensure_env()
        verb = msg.get("verb", 0)
        if isinstance(verb, str):
            if verb not in VERB_IDS:
                return self.error(f"unknown verb {verb!r}", seq)
            verb = VERB_IDS[verb]
        if not isinstance(verb, int) or not 0 <= verb < len(VERB_NAMES):
            return self.error(f"unknown verb {verb!r}", seq)
        camera = msg.get("camera", (0.0, 0.0))
        try:
            dp, dy = float(camera[0]), float(camera[1])
        except (TypeError, ValueError, IndexError):
            return self.error("camera must be [dpitch, dyaw]", seq)
        if env.done:
            return self.error("episode already finished", seq)

        before = env.pose
        prev = (before.x, before.y, before.z, before.pitch, before.yaw)
        try:
            result = env.step(Action(int(verb), (dp, dy)))
        except ValueError as e:
            return self.error(str(e), seq)

        self.recorder.log_action(VERB_NAMES[int(verb)])
        change = env._last_change  # set only by the step that edited the grid
        if change is not None:
            self.recorder.log_block_change(change.x, change.y, change.z, change.old, change.new)
        pose = env.pose
        if (pose.x, pose.y, pose.z) != prev[:3]:
            self.recorder.log_pos(pose.x, pose.y, pose.z)
        if (pose.pitch, pose.yaw) != prev[3:]:
            self.recorder.log_look(pose.pitch, pose.yaw)

        reply = {"type": "observation", "seq": self.next_seq(), "echo": seq}
        reply.update(self.observation_payload(result.reward, result.done, result.info))
        return reply

    def on_export(self, seq: int) -> Dict:
        env = self.ensure_env()
        p = env.pose
        record = self.recorder.build(
            env.grid,
            (p.x, p.y, p.z, p.pitch, p.yaw),
            clarification_question=None,
        )
        if self.instruction is not None:
            record["instruction"] = self.instruction
        return {"type": "record", "seq": self.next_seq(), "echo": seq, "record": record}


def create_app(mode: str = "human_collect", static_dir: Optional[str] = None) -> FastAPI:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    app = FastAPI(title="buildzone session server")
    sessions: Dict[int, Session] = {}
    lock = asyncio.Lock()
    counter = {"next": 1}

    @app.websocket("/session")
    async def session_endpoint(ws: WebSocket):
        await ws.accept()
        async with lock:
            if len(sessions) >= MAX_SESSIONS:
                await ws.send_text(json.dumps({"type": "error", "seq": 1, "message": "server full"}))
                await ws.close()
                return
            session_id = counter["next"]
            counter["next"] += 1
            session = Session(session_id, mode)
            sessions[session_id] = session
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                    if not isinstance(msg, dict):
                        raise ValueError("message must be an object")
                except (json.JSONDecodeError, ValueError) as e:
                    await ws.send_text(json.dumps(session.error(f"malformed message: {e}")))
                    continue
                reply = session.handle(msg)
                await ws.send_text(json.dumps(reply))
                if reply.get("fatal"):
                    await ws.close()
                    break
        except WebSocketDisconnect:
            pass
        finally:
            async with lock:
                sessions.pop(session_id, None)

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "mode": mode, "sessions": len(sessions)}

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="client")
    return app
