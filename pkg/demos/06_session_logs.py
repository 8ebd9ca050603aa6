# Raw play-session logs: parse the tape, replay the grid, convert to demos.
#
# Run: python3 demos/06_session_logs.py

import json
from pathlib import Path

from buildzone.behavior import (
    DEFAULT_ID_OFFSET_MAP,
    map_ending_blocks,
    parse_record,
    replay_tape,
    to_trajectory,
)
from buildzone.intersect import f1_score

record_path = Path(__file__).parent.parent / "tests" / "data" / "session_example.json"
record = parse_record(record_path.read_text())
print(f"game {record.game_id}, step {record.step_id}")
print("ending blocks (raw frame):", len(record.world_ending_blocks))
print("tape events:", len(record.tape))

# Logs use a foreign frame: ground at raw y=63, numeric block ids. The map
# carries the id table and offsets.
print("id map:", json.dumps(DEFAULT_ID_OFFSET_MAP.to_dict()))

# Replaying the tape's block events rebuilds exactly the recorded end state.
final = replay_tape(record)
assert final == map_ending_blocks(record)
print("replayed grid:", final.block_list())

# Conversion produces environment-shaped steps: verbs by name, camera deltas
# split to the 5-degree cap, teleport annotations for unexplained jumps.
traj = to_trajectory(record)
kinds = [s.verb or s.note for s in traj.steps]
print("steps:", len(traj.steps))
print("first six:", kinds[:6])
print("starting grid (recovered world):", traj.starting_grid.nonzero_count, "blocks")
print("final vs itself F1:", f1_score(traj.final_grid, traj.final_grid).f1)
