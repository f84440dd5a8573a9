import heapq
import math

import numpy as np
import pytest
from scipy.sparse import lil_matrix
from scipy.sparse.csgraph import dijkstra

from conftest import room_world
from frontiernav.errors import InvalidInputError
from frontiernav.geometry import Pose
from frontiernav.gridworld import FREE, OCCUPIED, UNKNOWN, Action, AgentState, BeliefGrid, generate_world, step
from frontiernav.planner import (
    SQRT2,
    Path,
    geodesic_distance,
    geodesic_field,
    inflate_obstacles,
    next_action,
    pair_cost,
    plan,
    plan_cells,
)

WEIGHT = {FREE: 1, UNKNOWN: 3}


def moves(cells, r, c, free_only=False):
    h, w = cells.shape
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == dc == 0:
                continue
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h and 0 <= nc < w):
                continue
            v = cells[nr, nc]
            if v == OCCUPIED or (free_only and v != FREE):
                continue
            if dr and dc and (cells[r, nc] == OCCUPIED or cells[nr, c] == OCCUPIED):
                continue
            wgt = 1 if free_only else WEIGHT[int(v)]
            yield (nr, nc), ((0, wgt) if dr and dc else (wgt, 0))


def ucs(cells, start, goal, free_only=False):
    """Plain uniform-cost search tracking the exact (straight, diagonal) cost pair."""
    frontier = [(0.0, (0, 0), start)]
    done = set()
    while frontier:
        _, pair, node = heapq.heappop(frontier)
        if node in done:
            continue
        if node == goal:
            return pair
        done.add(node)
        for nxt, (a, b) in moves(cells, *node, free_only=free_only):
            if nxt not in done:
                new = (pair[0] + a, pair[1] + b)
                heapq.heappush(frontier, (new[0] + SQRT2 * new[1], new, nxt))
    return None


def random_cells(rng, h, w):
    draw = rng.random((h, w))
    p_occ, p_unk = rng.uniform(0.05, 0.35), rng.uniform(0.0, 0.4)
    return np.where(draw < p_occ, OCCUPIED, np.where(draw < p_occ + p_unk, UNKNOWN, FREE)).astype(np.int8)


def test_start_equals_goal():
    belief = BeliefGrid(np.zeros((5, 5), dtype=np.int8))
    path = plan(belief, (0.25, 0, 0.25), (0.25, 0, 0.25))
    assert path.total_length == 0.0 and path.cost == 0.0
    assert len(path) == 1


def test_straight_corridor():
    cells = np.full((3, 10), OCCUPIED, dtype=np.int8)
    cells[1, :] = FREE
    path = plan(BeliefGrid(cells), (0.05, 0, 0.15), (0.95, 0, 0.15))
    assert path.total_length == pytest.approx(0.9, abs=1e-12)
    assert len(path) == 10


def test_wall_disconnects_known_map():
    cells = np.zeros((6, 6), dtype=np.int8)
    cells[:, 3] = OCCUPIED
    assert plan(BeliefGrid(cells), (0.05, 0, 0.05), (0.55, 0, 0.05)) is None


def test_unknown_costs_three_times():
    cells = np.full((1, 4), UNKNOWN, dtype=np.int8)
    cells[0, 0] = FREE
    path = plan_cells(cells, (0, 0), (0, 3))
    assert path.cost == pytest.approx(0.9)
    assert path.total_length == pytest.approx(0.3)


def test_occupied_start_raises():
    cells = np.zeros((3, 3), dtype=np.int8)
    cells[1, 1] = OCCUPIED
    with pytest.raises(InvalidInputError):
        plan_cells(cells, (1, 1), (0, 0))


def test_no_corner_cutting():
    cells = np.array([[FREE, OCCUPIED], [FREE, FREE]], dtype=np.int8)
    path = plan_cells(cells, (0, 0), (1, 1))
    assert len(path) == 3


@pytest.mark.parametrize("seed", range(60))
def test_matches_uniform_cost_search(seed):
    rng = np.random.default_rng(seed)
    h, w = rng.integers(4, 18, size=2)
    cells = random_cells(rng, h, w)
    open_cells = list(zip(*np.nonzero(cells != OCCUPIED)))
    if len(open_cells) < 2:
        return
    i, j = rng.choice(len(open_cells), 2, replace=False)
    start, goal = open_cells[i], open_cells[j]
    path = plan_cells(cells, start, goal)
    pair = ucs(cells, start, goal)
    if pair is None:
        assert path is None
        return
    assert path.cost == pair_cost(pair, 0.1)
    visited = [(int(math.floor(z / 0.1)), int(math.floor(x / 0.1))) for x, _, z in path.waypoints]
    assert all(cells[c] != OCCUPIED for c in visited)
    for a, b in zip(visited, visited[1:]):
        assert max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1
    seg = sum(math.dist(p, q) for p, q in zip(path.waypoints, path.waypoints[1:]))
    assert path.total_length == pytest.approx(seg, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_geodesic_matches_float_dijkstra(seed):
    rng = np.random.default_rng(500 + seed)
    grid = np.where(rng.random((14, 14)) < 0.25, OCCUPIED, FREE).astype(np.int8)
    h, w = grid.shape
    graph = lil_matrix((h * w, h * w))
    for r in range(h):
        for c in range(w):
            if grid[r, c] != FREE:
                continue
            for (nr, nc), (a, b) in moves(grid, r, c, free_only=True):
                graph[r * w + c, nr * w + nc] = 0.1 * (a + SQRT2 * b)
    free = list(zip(*np.nonzero(grid == FREE)))
    src = free[0]
    dist = dijkstra(graph.tocsr(), indices=src[0] * w + src[1])
    field_ = geodesic_field(grid, [src])
    for cell in free:
        ref = dist[cell[0] * w + cell[1]]
        if math.isinf(ref):
            assert math.isinf(field_[cell])
        else:
            assert field_[cell] == pytest.approx(ref, abs=1e-9)


def test_geodesic_examples():
    grid = np.zeros((4, 8), dtype=np.int8)
    assert geodesic_distance(grid, (0.05, 0, 0.05), (0.15, 0, 0.05)) == pytest.approx(0.1)
    grid[:, 4] = OCCUPIED
    assert math.isinf(geodesic_distance(grid, (0.05, 0, 0.05), (0.75, 0, 0.05)))


def test_geodesic_symmetric_and_matches_ucs():
    rng = np.random.default_rng(9)
    grid = generate_world(2).grid
    free = list(zip(*np.nonzero(grid == FREE)))
    for _ in range(8):
        i, j = rng.choice(len(free), 2, replace=False)
        a, b = free[i], free[j]
        pa = ((a[1] + 0.5) * 0.1, 0, (a[0] + 0.5) * 0.1)
        pb = ((b[1] + 0.5) * 0.1, 0, (b[0] + 0.5) * 0.1)
        d = geodesic_distance(grid, pa, pb)
        assert d == geodesic_distance(grid, pb, pa)
        assert d == pair_cost(ucs(grid, a, b, free_only=True), 0.1)


def _line_path(x0, z0, x1, z1, n=5):
    return Path(tuple((x0 + (x1 - x0) * k / n, 0.0, z0 + (z1 - z0) * k / n) for k in range(1, n + 1)), 1.0)


def test_next_action_basic():
    pose = Pose.planar(1.0, 1.0, 0.0)
    act, _ = next_action(pose, _line_path(1.0, 1.0, 1.0, 2.0), math.radians(30), 0.25)
    assert act is Action.MOVE_FORWARD
    act, _ = next_action(pose, _line_path(1.0, 1.0, 2.0, 1.0), math.radians(30), 0.25)
    assert act is Action.TURN_LEFT
    act, _ = next_action(pose, _line_path(1.0, 1.0, 0.0, 1.0), math.radians(30), 0.25)
    assert act is Action.TURN_RIGHT
    with pytest.raises(InvalidInputError):
        next_action(pose, Path((), 0.0), math.radians(30), 0.25)


def test_next_action_pops_reached_waypoints():
    pose = Pose.planar(1.0, 1.0, 0.0)
    path = Path(((1.0, 0.0, 1.05), (1.0, 0.0, 1.5)), 0.5)
    act, rest = next_action(pose, path, math.radians(30), 0.25)
    assert rest.waypoints == ((1.0, 0.0, 1.5),)
    act, rest = next_action(pose, Path(((1.0, 0.0, 1.05),), 0.05), math.radians(30), 0.25)
    assert act is None and rest.waypoints == ()


def _turning(pose, path):
    pts = [pose.xz] + [(w[0], w[2]) for w in path.waypoints]
    heading = pose.heading
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        if math.dist(a, b) < 1e-12:
            continue
        h = math.atan2(b[0] - a[0], b[1] - a[1])
        total += abs((h - heading + math.pi) % (2 * math.pi) - math.pi)
        heading = h
    return total


@pytest.mark.parametrize("seed", range(40))
def test_following_a_plan_reaches_its_end(seed):
    world = generate_world(seed)
    # a step of step_size at up to turn_angle/2 heading error drifts 0.065 m sideways,
    # more than one cell of inflation leaves, so valid here means two cells of clearance
    grid = inflate_obstacles(inflate_obstacles(world.grid))
    rng = np.random.default_rng(seed)
    free = list(zip(*np.nonzero(grid == FREE)))
    i, j = rng.choice(len(free), 2, replace=False)
    start, goal = free[i], free[j]
    path = plan_cells(grid, start, goal, world.resolution)
    turn, size = math.radians(30), 0.25
    pose = Pose.planar((start[1] + 0.5) * 0.1, (start[0] + 0.5) * 0.1, float(rng.uniform(-3, 3)))
    bound = 4 * (path.total_length / size) + 12 * (_turning(pose, path) / turn) + 12
    state, remaining, n = AgentState(pose), path, 0
    while remaining.waypoints and n <= bound:
        act, remaining = next_action(state.pose, remaining, turn, size)
        if act is None:
            break
        state = step(world, state, act)
        n += 1
    end = path.waypoints[-1]
    assert math.hypot(state.pose.xz[0] - end[0], state.pose.xz[1] - end[2]) < size
    assert n <= bound


def test_replanning_in_free_space_never_raises_cost():
    world = room_world(30, 30)
    belief = BeliefGrid(world.grid.copy())
    goal = (2.45, 0.0, 2.45)
    state = AgentState(Pose.planar(0.35, 0.35, 0.0))
    last = math.inf
    for _ in range(40):
        path = plan(belief, state.pose.position, goal)
        assert path.cost <= last + 1e-9
        last = path.cost
        act, _ = next_action(state.pose, path, math.radians(30), 0.25)
        if act is None:
            break
        state = step(world, state, act)
