import math
import random

import numpy as np
import pytest

from buildzone.env import (
    VERB_BACKWARD,
    VERB_BREAK,
    VERB_END_EPISODE,
    VERB_FORWARD,
    VERB_JUMP,
    VERB_LEFT,
    VERB_NOOP,
    VERB_PLACE,
    VERB_RIGHT,
    VERB_SELECT_BASE,
    Action,
    Environment,
    EpisodeConfig,
)
from buildzone.grid import Grid
from buildzone.intersect import f1_score
from buildzone.tasks import TaskRecord, generate_task


def make_task(target_blocks, starting_blocks=(), instruction="build it"):
    return TaskRecord(
        task_id="fixture",
        starting_grid=Grid.from_blocks(starting_blocks),
        target_grid=Grid.from_blocks(target_blocks),
        instruction=instruction,
    )


def fresh_env(target_blocks=((5, 0, 4, 1),), starting_blocks=(), **config):
    env = Environment(EpisodeConfig(**config))
    env.reset(make_task(target_blocks, starting_blocks), seed=0)
    return env


def random_actions(seed, n, include_end=False):
    rng = random.Random(seed)
    hi = 14 if include_end else 13
    return [
        Action(rng.randint(0, hi), (rng.uniform(-5, 5), rng.uniform(-5, 5)))
        for _ in range(n)
    ]


class TestReset:
    def test_spawn_at_zone_center_on_empty_grid(self):
        env = fresh_env()
        assert env.pose.x == 5.5
        assert env.pose.y == 0.0
        assert env.pose.z == 5.5
        assert env.pose.yaw == 0.0 and env.pose.pitch == 0.0

    def test_spawn_on_top_of_blocks_in_spawn_column(self):
        env = fresh_env(starting_blocks=[[5, 0, 5, 1], [5, 1, 5, 2]])
        assert env.pose.y == 2.0

    def test_reset_is_deterministic(self):
        task = make_task([[3, 0, 3, 2]])
        a = Environment(EpisodeConfig()).reset(task, seed=7)
        b = Environment(EpisodeConfig()).reset(task, seed=7)
        assert np.array_equal(a.grid.cells, b.grid.cells)
        assert a.pose == b.pose
        assert a.compass == b.compass
        assert a.chat == b.chat

    def test_starting_grid_copied_into_observation(self):
        env = fresh_env(starting_blocks=[[1, 0, 1, 4]])
        assert env.observe().grid.get(1, 0, 1) == 4


class TestMovement:
    def test_forward_at_yaw_zero_decreases_z(self):
        env = fresh_env()
        env.step(Action(VERB_FORWARD))
        assert env.pose.z == pytest.approx(5.25)
        assert env.pose.x == pytest.approx(5.5)

    def test_backward_left_right_conventions(self):
        env = fresh_env()
        env.step(Action(VERB_BACKWARD))
        assert env.pose.z == pytest.approx(5.75)
        env = fresh_env()
        env.step(Action(VERB_RIGHT))
        assert env.pose.x == pytest.approx(5.75)
        env = fresh_env()
        env.step(Action(VERB_LEFT))
        assert env.pose.x == pytest.approx(5.25)

    def test_yaw_rotates_movement_frame(self):
        env = fresh_env()
        for _ in range(18):  # rotate 90 degrees at the 5-degree cap
            env.step(Action(VERB_NOOP, (0.0, 5.0)))
        assert env.pose.yaw == pytest.approx(90.0)
        env.step(Action(VERB_FORWARD))
        assert env.pose.x == pytest.approx(5.75)
        assert env.pose.z == pytest.approx(5.5)

    def test_walk_into_wall_stops(self):
        env = fresh_env(starting_blocks=[[5, 0, 4, 1], [5, 1, 4, 1]])
        for _ in range(12):
            env.step(Action(VERB_FORWARD))
        # Block front face is at z=5; body half-width keeps feet at >= 5.3.
        assert env.pose.z >= 5.3
        assert env.pose.x == pytest.approx(5.5)

    def test_cannot_leave_zone_footprint(self):
        env = fresh_env()
        for _ in range(40):
            env.step(Action(VERB_FORWARD))
        assert env.pose.z == pytest.approx(0.3)

    def test_jump_clears_exactly_one_block(self):
        env = fresh_env()
        heights = [env.pose.y]
        env.step(Action(VERB_JUMP))
        for _ in range(20):
            env.step(Action(VERB_NOOP))
            heights.append(env.pose.y)
        assert max(heights) >= 1.0  # clears one block
        assert max(heights) < 2.0  # but never two
        assert env.pose.y == 0.0  # back on the ground

    def test_jump_while_walking_mounts_one_high_block(self):
        env = fresh_env(target_blocks=[[0, 0, 0, 1], [0, 1, 0, 2]], starting_blocks=[[5, 0, 3, 1]])
        for _ in range(4):
            env.step(Action(VERB_FORWARD))
        env.step(Action(VERB_JUMP))
        for _ in range(4):
            env.step(Action(VERB_FORWARD))
        for _ in range(10):
            env.step(Action(VERB_NOOP))
        assert env.pose.y == 1.0  # feet on top of the block
        assert env._grounded()  # supported: the block is the only thing at height 1

    def test_gravity_settles_spawned_in_air(self):
        env = fresh_env(starting_blocks=[[5, 0, 5, 1]])
        assert env.pose.y == 1.0  # spawned on the block
        env.grid.set(5, 0, 5, 0)  # pull the rug
        env.tracker.apply(env.grid.set(5, 0, 5, 1))  # keep tracker happy; restore
        env.grid.set(5, 0, 5, 0)
        for _ in range(30):
            env.step(Action(VERB_NOOP))
        assert env.pose.y == 0.0


class TestPlaceBreak:
    def test_place_on_ground_plane(self):
        env = fresh_env()
        env.pose.pitch = -60.0
        res = env.step(Action(VERB_PLACE))
        assert env.grid.get(5, 0, 4) == 1
        assert res.reward == 1.0  # completes the one-block target

    def test_place_onto_block_face(self):
        # Aim at the near side of the block: the candidate is the air cell
        # between it and the agent.
        env = fresh_env(
            target_blocks=[[0, 0, 0, 1], [0, 1, 0, 2]], starting_blocks=[[5, 0, 2, 1]]
        )
        env.pose.pitch = math.degrees(math.atan2(-1.1, 3.0))  # at the side face center
        env.step(Action(VERB_PLACE))
        assert env.grid.get(5, 0, 3) == 1

    def test_place_into_sky_is_noop(self):
        env = fresh_env()
        env.pose.pitch = 45.0
        res = env.step(Action(VERB_PLACE))
        assert res.reward == 0.0
        assert env.grid.nonzero_count == 0

    def test_pillar_up_lifts_agent(self):
        env = fresh_env(starting_blocks=[[5, 0, 5, 2]])
        assert env.pose.y == 1.0
        env.pose.pitch = -90.0
        env.step(Action(VERB_PLACE))
        assert env.grid.get(5, 1, 5) == 1
        assert env.pose.y == 2.0

    def test_pillar_up_from_bare_ground(self):
        env = fresh_env()
        env.pose.pitch = -90.0
        env.step(Action(VERB_PLACE))
        assert env.grid.get(5, 0, 5) == 1
        assert env.pose.y == 1.0

    def test_selected_color_is_placed(self):
        env = fresh_env()
        env.step(Action(VERB_SELECT_BASE + 3))  # select color 4
        env.pose.pitch = -90.0
        env.step(Action(VERB_PLACE))
        assert env.grid.get(5, 0, 5) == 4

    def test_break_only_block(self):
        env = fresh_env(starting_blocks=[[5, 0, 3, 4]], inventory_mode="counted", inventory_count=5)
        env.pose.pitch = math.degrees(math.atan2(-1.1, 2.0))
        res = env.step(Action(VERB_BREAK))
        assert env.grid.nonzero_count == 0
        assert env.inventory.counts[3] == 6
        assert res.reward == 0.0  # block was not part of the target intersection

    def test_break_nothing_in_reach_is_noop(self):
        env = fresh_env()
        env.pose.pitch = 10.0
        env.step(Action(VERB_BREAK))
        assert env.grid.nonzero_count == 0

    def test_break_support_leaves_floater(self):
        env = fresh_env(starting_blocks=[[5, 0, 3, 1], [5, 1, 3, 2]])
        env.pose.pitch = math.degrees(math.atan2(-1.1, 2.0))
        env.step(Action(VERB_BREAK))
        assert env.grid.get(5, 0, 3) == 0
        assert env.grid.get(5, 1, 3) == 2  # no falling-block physics

    def test_counted_inventory_blocks_placement_when_empty(self):
        env = fresh_env(inventory_mode="counted", inventory_count=0)
        env.pose.pitch = -90.0
        env.step(Action(VERB_PLACE))
        assert env.grid.nonzero_count == 0


class TestEpisode:
    def test_noop_reward_zero_and_pose_stable(self):
        env = fresh_env()
        res = env.step(Action(VERB_NOOP))
        assert res.reward == 0.0
        assert (env.pose.x, env.pose.y, env.pose.z) == (5.5, 0.0, 5.5)

    def test_completion_on_last_block(self):
        env = fresh_env()
        env.pose.pitch = -60.0
        res = env.step(Action(VERB_PLACE))
        assert res.done
        assert res.info["termination_reason"] == "complete"
        assert res.info["f1_so_far"] == 1.0

    def test_time_limit(self):
        env = fresh_env(max_steps=5)
        for _ in range(4):
            res = env.step(Action(VERB_NOOP))
            assert not res.done
        res = env.step(Action(VERB_NOOP))
        assert res.done
        assert res.info["termination_reason"] == "time_limit"

    def test_step_after_done_raises(self):
        env = fresh_env(max_steps=1)
        env.step(Action(VERB_NOOP))
        with pytest.raises(RuntimeError):
            env.step(Action(VERB_NOOP))

    def test_end_action_gating(self):
        env = fresh_env()
        with pytest.raises(ValueError):
            env.step(Action(VERB_END_EPISODE))
        env = fresh_env(end_action_enabled=True)
        res = env.step(Action(VERB_END_EPISODE))
        assert res.done
        assert res.info["termination_reason"] == "end_action"

    def test_extra_block_prevents_completion(self):
        env = fresh_env(target_blocks=[[5, 0, 4, 1]], starting_blocks=[[9, 0, 9, 1]])
        env.pose.pitch = -60.0
        res = env.step(Action(VERB_PLACE))
        assert env.grid.get(5, 0, 4) == 1
        assert not res.done  # snapshot has one extra block

    def test_completion_implies_perfect_f1(self):
        env = fresh_env(target_blocks=[[5, 0, 4, 1]])
        env.pose.pitch = -60.0
        res = env.step(Action(VERB_PLACE))
        assert res.done
        assert f1_score(env.grid, env.target).f1 == 1.0


class TestObservation:
    def test_grid_matches_internal_after_every_step(self):
        env = fresh_env()
        for a in random_actions(1, 60):
            res = env.step(a)
            assert np.array_equal(res.observation.grid.cells, env.grid.cells)
            if res.done:
                break

    def test_compass_zero_at_center(self):
        env = fresh_env()
        assert env.observe().compass == 0.0

    def test_compass_zero_facing_center_from_north(self):
        env = fresh_env()
        env.pose.z = 2.5
        env.pose.yaw = 180.0
        assert env.observe().compass == pytest.approx(0.0)

    def test_compass_sign(self):
        env = fresh_env()
        env.pose.z = 2.5
        env.pose.yaw = 170.0
        assert env.observe().compass == pytest.approx(10.0)

    def test_pov_absent_when_render_disabled(self):
        env = fresh_env(render=False)
        obs = env.observe()
        assert obs.pov is None
        assert obs.pose == (5.5, 0.0, 5.5, 0.0, 0.0)

    def test_chat_carries_context_and_instruction(self):
        task = TaskRecord(
            task_id="t",
            starting_grid=Grid(),
            target_grid=Grid.from_blocks([[0, 0, 0, 1]]),
            instruction="now add one",
            context_utterances=["two rows built"],
        )
        env = Environment(EpisodeConfig())
        obs = env.reset(task)
        assert obs.chat == "two rows built\nnow add one"


class TestInvariants:
    def test_inventory_conservation_counted_mode(self):
        env = fresh_env(
            target_blocks=[[5, 0, 4, 1]],
            starting_blocks=[[4, 0, 4, 2], [6, 0, 4, 3]],
            inventory_mode="counted",
            inventory_count=10,
        )
        initial = [g + i for g, i in zip(env.grid.per_color_counts(), env.inventory.counts)]
        for a in random_actions(3, 300):
            res = env.step(a)
            totals = [g + i for g, i in zip(env.grid.per_color_counts(), env.inventory.counts)]
            assert totals == initial
            if res.done:
                break

    def test_pose_collision_free_after_every_step(self):
        env = fresh_env(starting_blocks=[[5, 0, 4, 1], [6, 0, 5, 2], [4, 1, 5, 3]])
        for a in random_actions(4, 300):
            res = env.step(a)
            assert not env._collides(env.pose.x, env.pose.y, env.pose.z)
            if res.done:
                break

    def test_delta_rewards_telescope(self):
        env = fresh_env(target_blocks=[[5, 0, 4, 1], [5, 0, 6, 2], [4, 0, 5, 3]])
        initial = env.tracker.size
        total = 0.0
        for a in random_actions(5, 400):
            res = env.step(a)
            total += res.reward
            if res.done:
                break
        assert total == env.tracker.size - initial

    def test_bit_identical_replay(self):
        task = make_task([[5, 0, 4, 1], [5, 0, 6, 2]], starting_blocks=[[4, 0, 4, 5]])
        actions = random_actions(6, 250)
        streams = []
        for _ in range(2):
            env = Environment(EpisodeConfig(inventory_mode="counted"))
            env.reset(task, seed=3)
            stream = []
            for a in actions:
                res = env.step(a)
                stream.append(
                    (
                        res.reward,
                        res.observation.pose,
                        res.observation.compass,
                        res.observation.grid.cells.tobytes(),
                        tuple(res.observation.inventory),
                        res.done,
                    )
                )
                if res.done:
                    break
            streams.append(stream)
        assert streams[0] == streams[1]


class TestShapedMode:
    def test_correct_placement_scores_table_value(self):
        env = fresh_env(target_blocks=[[5, 0, 4, 1]], reward_mode="shaped_subtask")
        env.pose.pitch = -60.0
        res = env.step(Action(VERB_PLACE))
        assert res.reward == 1.0

    def test_pillar_up_under_feet_bonus(self):
        # Subtask cell is the spawn column floor cell; placing it under the
        # agent's feet pays the table value plus the 0.5 bonus.
        env = fresh_env(target_blocks=[[5, 0, 5, 1]], reward_mode="shaped_subtask")
        env.pose.pitch = -90.0
        res = env.step(Action(VERB_PLACE))
        assert res.reward == 1.5

    def test_wrong_cell_scores_by_distance(self):
        env = fresh_env(target_blocks=[[5, 0, 3, 1]], reward_mode="shaped_subtask")
        env.pose.pitch = -90.0
        res = env.step(Action(VERB_PLACE))  # places at (5, 0, 5), distance 2
        assert res.reward == 0.05

    def test_movement_steps_score_zero(self):
        env = fresh_env(reward_mode="shaped_subtask")
        assert env.step(Action(VERB_FORWARD)).reward == 0.0


class TestConfig:
    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            EpisodeConfig(max_steps=0)
        with pytest.raises(ValueError):
            EpisodeConfig(reward_mode="nope")
        with pytest.raises(ValueError):
            EpisodeConfig(inventory_mode="magic")
        with pytest.raises(ValueError):
            EpisodeConfig(profile="other")

    def test_round_trip_dict(self):
        cfg = EpisodeConfig(max_steps=42, render=True, profile="visual")
        assert EpisodeConfig.from_dict(cfg.to_dict()) == cfg

    def test_visual_profile_defaults_render_on(self):
        cfg = EpisodeConfig.from_dict({"profile": "visual"})
        assert cfg.render is True

    def test_generated_task_playable(self):
        task = generate_task(seed=1, n_blocks=4)
        env = Environment(EpisodeConfig())
        obs = env.reset(task)
        assert obs.grid.nonzero_count == 0
        assert env.target.nonzero_count == 4
