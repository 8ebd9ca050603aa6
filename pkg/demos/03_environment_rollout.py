# Stepping the environment: actions, kinematics, placing, and rewards.
#
# Run: python3 demos/03_environment_rollout.py

from buildzone import Action, Environment, EpisodeConfig, Grid, TaskRecord
from buildzone.env import VERB_FORWARD, VERB_JUMP, VERB_NOOP, VERB_PLACE

task = TaskRecord(
    task_id="demo",
    starting_grid=Grid(),
    target_grid=Grid.from_blocks([[5, 0, 5, 1], [5, 1, 5, 1], [5, 2, 5, 1]]),
    instruction="stack three blue blocks in the middle",
)

env = Environment(EpisodeConfig(max_steps=200))
obs = env.reset(task, seed=0)
print("spawn pose:", obs.pose)  # feet at the zone center, on the floor
print("chat:", obs.chat)

# Walk one step, jump, look around. Movement is yaw-relative, 0.25 blocks per
# step; the camera turns at most 5 degrees per axis per step.
env.step(Action(VERB_FORWARD))
env.step(Action(VERB_JUMP))
for _ in range(3):
    env.step(Action(VERB_NOOP, camera=(0.0, 5.0)))
print("after moving:", env.observe().pose)

# Pillar up: look straight down and place; the agent rides the new block.
env2 = Environment(EpisodeConfig(max_steps=200))
env2.reset(task, seed=0)
for _ in range(18):  # pitch to -90 at the per-step cap
    env2.step(Action(VERB_NOOP, camera=(-5.0, 0.0)))
total = 0.0
for i in range(3):
    result = env2.step(Action(VERB_PLACE))
    total += result.reward
    print(
        f"place {i}: feet at y={env2.pose.y}, reward={result.reward}, "
        f"overlap={result.info['intersection_size']}, done={result.done}"
    )
print("episode reward:", total, "| termination:", result.info["termination_reason"])
assert result.done and result.info["termination_reason"] == "complete"
