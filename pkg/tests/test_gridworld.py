import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import room_world, text_world
from frontiernav.config import NavConfig
from frontiernav.errors import ConfigurationError, EpisodeTerminatedError, GenerationError, InvalidInputError, InvalidPoseError
from frontiernav.geometry import CameraModel, Pose
from frontiernav.gridworld import (
    FREE,
    NO_INSTANCE,
    OCCUPIED,
    UNKNOWN,
    Action,
    AgentState,
    BeliefGrid,
    generate_world,
    integrate_observation,
    label_matches,
    render_observation,
    sample_start_pose,
    step,
    success_check,
    success_region,
    world_digest,
    world_from_text,
    world_to_text,
)


def flood(grid, start):
    seen = {start}
    queue = deque([start])
    h, w = grid.shape
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            n = (r + dr, c + dc)
            if 0 <= n[0] < h and 0 <= n[1] < w and n not in seen and grid[n] == FREE:
                seen.add(n)
                queue.append(n)
    return seen


def scalar_march(world, obs):
    """Per-column loop: cells sampled strictly before the reported depth, and the hit cell."""
    cam, pose = obs.camera, obs.camera_pose
    res = world.resolution
    h, w = world.grid.shape
    x0, _, z0 = pose.position
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    free, hit = set(), set()
    for u in range(cam.width):
        lx = (u - cam.cx) / cam.fx
        dx, dz = c * lx + s, -s * lx + c
        ds = (res * 0.25) / np.hypot(dx, dz)
        depth = float(obs.depths[u])
        k = 0
        while k * ds <= cam.max_depth:
            t = k * ds
            cell = (math.floor((z0 + t * dz) / res), math.floor((x0 + t * dx) / res))
            inside = 0 <= cell[0] < h and 0 <= cell[1] < w
            if t < depth and inside:
                free.add(cell)
            elif t >= depth:
                if inside and depth < cam.max_depth:
                    hit.add(cell)
                break
            k += 1
    return free, hit


# -- generation ---------------------------------------------------------------


def test_single_room_no_objects():
    world = generate_world(0, n_rooms=1, n_objects=0)
    rows, cols = np.nonzero(world.grid == FREE)
    box = world.grid[rows.min() : rows.max() + 1, cols.min() : cols.max() + 1]
    assert (box == FREE).all()
    assert world.objects == ()


def test_generation_is_deterministic():
    a, b = generate_world(7), generate_world(7)
    assert a == b
    assert world_to_text(a) == world_to_text(b)
    assert generate_world(8) != a


@pytest.mark.parametrize("seed", range(12))
def test_free_space_connected(seed):
    world = generate_world(seed)
    free = list(zip(*np.nonzero(world.grid == FREE)))
    assert len(flood(world.grid, free[0])) == len(free)


@pytest.mark.parametrize("seed", range(6))
def test_objects_inside_grid_and_backed_by_walls(seed):
    world = generate_world(seed, n_objects=4)
    assert len(world.objects) == 4
    for obj in world.objects:
        assert obj.cells and obj.label
        assert all(world.grid[c] == OCCUPIED for c in obj.cells)


def test_generation_errors():
    with pytest.raises(InvalidInputError):
        generate_world(0, width=16)
    with pytest.raises(InvalidInputError):
        generate_world(0, n_rooms=0)
    with pytest.raises(GenerationError):
        generate_world(0, width=32, height=32, n_rooms=1, n_objects=200)


def test_text_round_trip_is_lossless():
    world = generate_world(3)
    text = world_to_text(world)
    assert text.startswith("gridworld v1 64 64 0.1\n")
    back = world_from_text(text)
    assert back == world
    assert world_digest(back) == world_digest(world)


@pytest.mark.parametrize("text", ["", "gridworld v2 2 1 0.1\n..\n", "gridworld v1 3 1 0.1\n..\n", "gridworld v1 2 1 0.1\n.x\n", "gridworld v1 2 1 0.1\n..\nfoo 1\n"])
def test_bad_world_text(text):
    with pytest.raises(InvalidInputError):
        world_from_text(text)


def test_label_matching_uses_head_noun():
    assert label_matches("tv_monitor", "monitor")
    assert label_matches("bed", "double bed")
    assert not label_matches("bed", "bedside table")
    assert not label_matches("", "")


# -- agent --------------------------------------------------------------------


def test_twelve_left_turns_return_heading():
    world = room_world()
    state = AgentState(Pose.planar(1.0, 1.0, 0.3))
    for _ in range(12):
        state = step(world, state, Action.TURN_LEFT)
    assert state.pose.heading == pytest.approx(0.3, abs=1e-9)
    assert state.step_count == 12 and state.path_length_so_far == 0.0


def test_forward_in_open_space():
    world = room_world()
    state = step(world, AgentState(Pose.planar(1.0, 0.5, 0.0)), Action.MOVE_FORWARD)
    assert state.pose.xz[1] - 0.5 == pytest.approx(0.25, abs=1e-9)
    assert state.path_length_so_far == pytest.approx(0.25, abs=1e-9)
    assert not state.collided_last_step


def test_forward_into_wall_is_blocked():
    world = room_world()
    start = Pose.planar(1.0, 1.8, 0.0)  # wall row starts at z = 1.9
    state = step(world, AgentState(start), Action.MOVE_FORWARD)
    assert state.pose == start
    assert state.collided_last_step
    assert state.path_length_so_far == 0.0
    assert state.step_count == 1


def test_step_after_stop_or_budget():
    world = room_world()
    state = step(world, AgentState(Pose.planar(1.0, 1.0)), Action.STOP)
    assert state.stopped and state.step_count == 1
    with pytest.raises(EpisodeTerminatedError):
        step(world, state, Action.TURN_LEFT)
    cfg = NavConfig(max_steps=2)
    state = AgentState(Pose.planar(1.0, 1.0))
    state = step(world, step(world, state, Action.TURN_LEFT, cfg), Action.TURN_LEFT, cfg)
    with pytest.raises(EpisodeTerminatedError):
        step(world, state, Action.TURN_LEFT, cfg)


actions = st.lists(st.sampled_from([Action.MOVE_FORWARD, Action.TURN_LEFT, Action.TURN_RIGHT]), min_size=1, max_size=60)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 5), acts=actions)
def test_random_walk_accounting_and_belief_soundness(seed, acts):
    world = generate_world(seed, n_objects=2)
    cam = CameraModel.from_fov(width=48, height=8)
    start = sample_start_pose(world, np.random.default_rng(seed))
    state = AgentState(start)
    belief = integrate_observation(BeliefGrid.for_world(world), render_observation(world, start, cam))
    total = 0.0
    previous = belief.cells.copy()
    for act in acts:
        nxt = step(world, state, act)
        total += math.dist(state.pose.position, nxt.pose.position)
        assert nxt.path_length_so_far >= state.path_length_so_far
        state = nxt
        belief = integrate_observation(belief, render_observation(world, state.pose, cam))
        known = previous != UNKNOWN
        assert (belief.cells[known] == previous[known]).all()
        previous = belief.cells.copy()
    assert state.path_length_so_far == pytest.approx(total, abs=1e-9)
    assert (world.grid[belief.cells == FREE] == FREE).all()
    assert (world.grid[belief.cells == OCCUPIED] == OCCUPIED).all()


def test_same_actions_same_trajectory():
    world = generate_world(2)
    cam = CameraModel.from_fov(width=32, height=8)
    rng = np.random.default_rng(0)
    acts = [Action(a) for a in rng.choice(["move_forward", "turn_left", "turn_right"], 80)]
    runs = []
    for _ in range(2):
        state = AgentState(sample_start_pose(world, np.random.default_rng(1)))
        trace = []
        for a in acts:
            state = step(world, state, a)
            obs = render_observation(world, state.pose, cam)
            trace.append((state, obs.depths.tobytes(), obs.instance_ids.tobytes()))
        runs.append(trace)
    assert runs[0] == runs[1]


# -- sensing ------------------------------------------------------------------


def test_flat_wall_depth(camera):
    world = room_world(40, 40)
    obs = render_observation(world, Pose.planar(2.0, 1.8, 0.0), camera)  # wall face at z = 3.9
    assert len(obs.depths) == len(obs.instance_ids) == camera.width
    assert obs.depths[camera.width // 2] == pytest.approx(2.1, abs=0.1)


def test_empty_world_reads_max_depth(camera):
    world = room_world(100, 100)
    obs = render_observation(world, Pose.planar(5.0, 5.0, 1.0), camera)
    assert (obs.depths == camera.max_depth).all()
    assert (obs.instance_ids == NO_INSTANCE).all()


def test_pose_must_be_free(camera):
    with pytest.raises(InvalidPoseError):
        render_observation(room_world(), Pose.planar(0.05, 0.05), camera)


@pytest.mark.parametrize("heading", [0.0, 0.7, 2.0, -2.5])
def test_visible_ids_lie_in_frustum(camera, heading):
    world = room_world(40, 40, objects=[("chair", [(r, c) for r in range(18, 21) for c in range(24, 27)])])
    pose = Pose.planar(1.0, 1.0, heading)
    obs = render_observation(world, pose, camera)
    for inst in obs.visible_instances():
        cells = world.object(inst).cells
        half = camera.hfov / 2
        ok = False
        for r, c in cells:
            for cx, cz in ((c * 0.1 + a, r * 0.1 + b) for a in (0, 0.1) for b in (0, 0.1)):
                ang = math.atan2(cx - 1.0, cz - 1.0) - heading
                ang = (ang + math.pi) % (2 * math.pi) - math.pi
                if abs(ang) <= half and math.hypot(cx - 1.0, cz - 1.0) <= camera.max_depth + 0.15:
                    ok = True
        assert ok


def test_chair_is_seen_when_faced(camera):
    world = room_world(40, 40, objects=[("chair", [(r, c) for r in range(18, 21) for c in range(9, 12)])])
    obs = render_observation(world, Pose.planar(1.0, 0.5, 0.0), camera)
    assert obs.visible_instances() == {0}


@pytest.mark.parametrize("heading", [0.0, 1.1, -2.9])
def test_integration_matches_scalar_march(camera, heading):
    world = generate_world(4)
    pose = sample_start_pose(world, np.random.default_rng(3)).with_heading(heading)
    obs = render_observation(world, pose, camera)
    belief = integrate_observation(BeliefGrid.for_world(world), obs)
    free, hit = scalar_march(world, obs)
    expected = np.full(world.shape, UNKNOWN)
    for cell in free:
        expected[cell] = FREE
    for cell in hit:
        if expected[cell] == UNKNOWN:
            expected[cell] = OCCUPIED
    assert np.array_equal(belief.cells, expected)
    assert belief.count(FREE) == len(free)


def test_integration_is_idempotent(camera):
    world = generate_world(1)
    obs = render_observation(world, sample_start_pose(world, np.random.default_rng(0)), camera)
    once = integrate_observation(BeliefGrid.for_world(world), obs)
    assert integrate_observation(once, obs) == once


def test_full_scan_fills_closed_room(camera):
    world = room_world(22, 22)
    belief = BeliefGrid.for_world(world)
    for k in range(12):
        belief = integrate_observation(belief, render_observation(world, Pose.planar(1.1, 1.1, k * math.pi / 6), camera))
    assert (belief.cells[1:-1, 1:-1] == FREE).all()


# -- success oracle -----------------------------------------------------------


def test_success_examples():
    rows = ["##########"] + ["#........#"] * 8 + ["##########"]
    rows = [list(r) for r in rows]
    rows[5][8] = "b"
    world = text_world(["".join(r) for r in rows], {"b": "bed"})
    # object cell spans x in [0.8, 0.9], z in [0.5, 0.6]
    assert success_check(world, Pose.planar(0.3, 0.55), "bed").success
    assert success_check(world, Pose.planar(0.3, 0.55), "bed").matched_instance == 0

    wide = room_world(20, 40, objects=[("bed", [(10, 30)])])
    assert success_check(wide, Pose.planar(2.5, 1.05), "bed").success
    assert not success_check(wide, Pose.planar(1.5, 1.05), "bed").success  # 1.5 m away


def test_success_blocked_by_wall():
    world = room_world(20, 20, objects=[("bed", [(10, 14)])])
    grid = world.grid.copy()
    grid[1:-1, 12] = OCCUPIED
    from frontiernav.gridworld import WorldSpec

    walled = WorldSpec(grid=grid, resolution=0.1, objects=world.objects)
    pose = Pose.planar(0.95, 1.05)  # 0.45 m from the object, wall in between
    assert success_check(world, pose, "bed").success
    assert not success_check(walled, pose, "bed").success


def test_unknown_goal_is_configuration_error():
    with pytest.raises(ConfigurationError):
        success_check(room_world(), Pose.planar(1.0, 1.0), "piano")


def test_success_region_agrees_with_check():
    world = generate_world(5)
    goal = world.objects[0].label
    region = success_region(world, goal)
    assert region.any()
    rng = np.random.default_rng(0)
    cells = list(zip(*np.nonzero(world.grid == FREE)))
    for k in rng.choice(len(cells), 300, replace=False):
        r, c = cells[k]
        hit = success_check(world, Pose.planar((c + 0.5) * 0.1, (r + 0.5) * 0.1), goal).success
        assert hit == bool(region[r, c])
