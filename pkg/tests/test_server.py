import json
import warnings

import pytest
from fastapi.testclient import TestClient

from buildzone.behavior import ReplayWarning, map_ending_blocks, parse_record, replay_tape
from buildzone.grid import Grid
from buildzone.server import PROTOCOL_VERSION, create_app


@pytest.fixture()
def client():
    app = create_app(mode="human_collect")
    with TestClient(app) as tc:
        yield tc


class Wire:
    """Tiny helper tracking the client-side sequence number."""

    def __init__(self, ws):
        self.ws = ws
        self.seq = 0

    def send(self, type_, **fields):
        self.seq += 1
        self.ws.send_text(json.dumps({"type": type_, "seq": self.seq, **fields}))
        return json.loads(self.ws.receive_text())

    def hello(self, version=PROTOCOL_VERSION):
        return self.send("hello", version=version)


class TestHandshake:
    def test_hello_reports_session_and_mode(self, client):
        with client.websocket_connect("/session") as ws:
            w = Wire(ws)
            reply = w.hello()
            assert reply["type"] == "hello"
            assert reply["mode"] == "human_collect"
            assert reply["echo"] == 1
            assert reply["version"] == PROTOCOL_VERSION

    def test_version_mismatch_refused(self, client):
        with client.websocket_connect("/session") as ws:
            w = Wire(ws)
            reply = w.hello(version=99)
            assert reply["type"] == "error"
            assert reply["fatal"] is True

    def test_message_before_hello_rejected(self, client):
        with client.websocket_connect("/session") as ws:
            w = Wire(ws)
            reply = w.send("action", verb=0)
            assert reply["type"] == "error"

    def test_noop_after_config_reports_step_one(self, client):
        with client.websocket_connect("/session") as ws:
            w = Wire(ws)
            w.hello()
            obs0 = w.send("config", config={"max_steps": 100})
            assert obs0["type"] == "observation"
            assert obs0["step"] == 0
            obs1 = w.send("action", verb="noop", camera=[0, 0])
            assert obs1["type"] == "observation"
            assert obs1["step"] == 1
            assert obs1["echo"] == w.seq


class TestProtocol:
    def test_server_seq_strictly_increases(self, client):
        with client.websocket_connect("/session") as ws:
            w = Wire(ws)
            seqs = [w.hello()["seq"]]
            seqs.append(w.send("config", config={})["seq"])
            for _ in range(3):
                seqs.append(w.send("action", verb=0)["seq"])
            assert seqs == sorted(seqs)
            assert len(set(seqs)) == len(seqs)

    def test_stale_client_seq_rejected(self, client):
        with client.websocket_connect("/session") as ws:
            w = Wire(ws)
            w.hello()
            ws.send_text(json.dumps({"type": "action", "seq": 1, "verb": 0}))
            reply = json.loads(ws.receive_text())
            assert reply["type"] == "error"
            assert "seq" in reply["message"]

    def test_malformed_message_keeps_session(self, client):
        with client.websocket_connect("/session") as ws:
            w = Wire(ws)
            w.hello()
            ws.send_text("this is not json")
            reply = json.loads(ws.receive_text())
            assert reply["type"] == "error"
            obs = w.send("config", config={})
            assert obs["type"] == "observation"

    def test_unknown_verb_is_error_not_crash(self, client):
        with client.websocket_connect("/session") as ws:
            w = Wire(ws)
            w.hello()
            w.send("config", config={})
            reply = w.send("action", verb="fly")
            assert reply["type"] == "error"
            assert w.send("action", verb="noop")["type"] == "observation"

    def test_empty_instruction_rejected(self, client):
        with client.websocket_connect("/session") as ws:
            w = Wire(ws)
            w.hello()
            w.send("config", config={})
            assert w.send("instruction_submit", text="  ")["type"] == "error"
            assert w.send("instruction_submit", text="two towers")["type"] == "ack"


class TestProfiles:
    def test_full_profile_includes_grid_and_pose(self, client):
        with client.websocket_connect("/session") as ws:
            w = Wire(ws)
            w.hello()
            obs = w.send("config", config={"profile": "full"})
            assert "grid" in obs and "pose" in obs
            assert "pov_png" not in obs  # render off by default in full profile

    def test_visual_profile_hides_grid_and_sends_image(self):
        app = create_app(mode="agent_eval")
        with TestClient(app) as tc:
            with tc.websocket_connect("/session") as ws:
                w = Wire(ws)
                w.hello()
                obs = w.send("config", config={"profile": "visual"}, generator={"seed": 5})
                assert "grid" not in obs and "pose" not in obs
                assert "pov_png" in obs
                assert {"chat", "compass", "inventory"} <= set(obs)


class TestSessions:
    def test_two_sessions_are_isolated(self, client):
        with client.websocket_connect("/session") as a, client.websocket_connect("/session") as b:
            wa, wb = Wire(a), Wire(b)
            ha, hb = wa.hello(), wb.hello()
            assert ha["session_id"] != hb["session_id"]
            wa.send("config", config={})
            wb.send("config", config={})
            # Session A builds a block; session B must not see it.
            wa.send("action", verb="noop", camera=[-5, 0])
            for _ in range(17):
                wa.send("action", verb="noop", camera=[-5, 0])
            obs_a = wa.send("action", verb="place_block")
            obs_b = wb.send("action", verb="noop")
            assert len(obs_a["grid"]) == 1
            assert obs_b["grid"] == []

    def test_human_session_round_trip(self, client):
        """Build a few blocks, submit an instruction, export, replay."""
        with client.websocket_connect("/session") as ws:
            w = Wire(ws)
            w.hello()
            w.send("config", config={})
            # Pitch down to -90 at the 5-degree camera cap, then pillar up twice.
            for _ in range(18):
                obs = w.send("action", verb="noop", camera=[-5, 0])
            obs = w.send("action", verb="place_block")
            assert len(obs["grid"]) == 1
            obs = w.send("action", verb="place_block")
            assert len(obs["grid"]) == 2
            # Walk off the stack, land, and drop a third block of another color.
            for _ in range(4):
                w.send("action", verb="step_forward")
            for _ in range(10):
                w.send("action", verb="noop")  # fall back to the ground
            w.send("action", verb="select_3")
            obs = w.send("action", verb="place_block")
            assert len(obs["grid"]) == 3
            final_grid = Grid.from_blocks(obs["grid"])
            assert w.send("instruction_submit", text="a small stack")["type"] == "ack"
            reply = w.send("export_log")
            assert reply["type"] == "record"
            record = reply["record"]
        rec = parse_record(json.dumps(record))
        assert not rec.parse_warnings
        with warnings.catch_warnings():
            warnings.simplefilter("error", ReplayWarning)
            replayed = replay_tape(rec)
        assert replayed == final_grid
        assert map_ending_blocks(rec) == final_grid

    def test_health_endpoint(self, client):
        res = client.get("/healthz")
        assert res.status_code == 200
        assert res.json()["ok"] is True
