"""Grid path planning, waypoint following and geodesic distances.

Move costs are kept as an exact pair ``(straight, diagonal)`` of summed cell
weights, and a path's cost is ``resolution * (straight + sqrt(2) * diagonal)``.
Two searches that find optimal paths agree on the pair, so their reported
costs agree bit for bit.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import Pose, wrap_angle
from .gridworld import FREE, OCCUPIED, UNKNOWN, Action, cell_center, world_to_cell

SQRT2 = math.sqrt(2.0)
UNKNOWN_COST = 3
_STRAIGHT = ((-1, 0), (1, 0), (0, -1), (0, 1))
_DIAGONAL = ((-1, -1), (-1, 1), (1, -1), (1, 1))


def pair_cost(pair, resolution: float) -> float:
    return resolution * (pair[0] + SQRT2 * pair[1])


@dataclass(frozen=True)
class Path:
    waypoints: tuple  # world points (x, y, z), one per cell centre
    total_length: float
    cost: float = 0.0
    computed_on_step: int = 0

    def __len__(self):
        return len(self.waypoints)


def _cell_weight(value: int, unknown_cost: int):
    if value == FREE:
        return 1
    if value == UNKNOWN:
        return unknown_cost
    return None


def _neighbors(cells: np.ndarray, r: int, c: int, unknown_cost: int, penalty=None):
    """Yield ``(nr, nc, straight_add, diag_add)``; diagonals may not cut an OCCUPIED corner."""
    h, w = cells.shape
    for dr, dc in _STRAIGHT:
        nr, nc = r + dr, c + dc
        if 0 <= nr < h and 0 <= nc < w:
            wgt = _cell_weight(cells[nr, nc], unknown_cost)
            if wgt is not None:
                if penalty is not None:
                    wgt += int(penalty[nr, nc])
                yield nr, nc, wgt, 0
    for dr, dc in _DIAGONAL:
        nr, nc = r + dr, c + dc
        if 0 <= nr < h and 0 <= nc < w:
            if cells[r, nc] == OCCUPIED or cells[nr, c] == OCCUPIED:
                continue
            wgt = _cell_weight(cells[nr, nc], unknown_cost)
            if wgt is not None:
                if penalty is not None:
                    wgt += int(penalty[nr, nc])
                yield nr, nc, 0, wgt


def _octile(a, b) -> float:
    dr, dc = abs(a[0] - b[0]), abs(a[1] - b[1])
    return (SQRT2 - 1.0) * min(dr, dc) + max(dr, dc)


def _build_path(parents, goal, resolution, pair, step) -> Path:
    cells = [goal]
    while parents[cells[-1]] is not None:
        cells.append(parents[cells[-1]])
    cells.reverse()
    waypoints = tuple((x, 0.0, z) for x, z in (cell_center(cell, resolution) for cell in cells))
    length = 0.0
    for a, b in zip(cells, cells[1:]):
        length += resolution * (SQRT2 if a[0] != b[0] and a[1] != b[1] else 1.0)
    return Path(waypoints, length, pair_cost(pair, resolution), step)


def plan_cells(
    cells: np.ndarray,
    start,
    goal,
    resolution: float = 0.1,
    unknown_cost: int = UNKNOWN_COST,
    step: int = 0,
    penalty: np.ndarray | None = None,
):
    """A* between two cells of a belief-valued array; ``None`` when disconnected.

    ``penalty`` optionally adds a non-negative integer to the weight of every
    entered cell (a clearance cost map); the heuristic stays admissible.
    """
    h, w = cells.shape
    start, goal = tuple(start), tuple(goal)
    for cell in (start, goal):
        if not (0 <= cell[0] < h and 0 <= cell[1] < w):
            raise InvalidInputError(f"cell {cell} outside the grid")
    if cells[start] == OCCUPIED:
        raise InvalidInputError(f"start cell {start} is OCCUPIED")
    if cells[goal] == OCCUPIED:
        return None
    best = {start: (0, 0)}
    parents = {start: None}
    closed = set()
    counter = 0
    heap = [(_octile(start, goal), 0.0, counter, start)]
    while heap:
        _, g, _, node = heapq.heappop(heap)
        if node in closed:
            continue
        if node == goal:
            return _build_path(parents, goal, resolution, best[goal], step)
        closed.add(node)
        a, b = best[node]
        for nr, nc, da, db in _neighbors(cells, node[0], node[1], unknown_cost, penalty):
            nxt = (nr, nc)
            if nxt in closed:
                continue
            pair = (a + da, b + db)
            cost = pair[0] + SQRT2 * pair[1]
            old = best.get(nxt)
            if old is None or cost < old[0] + SQRT2 * old[1]:
                best[nxt] = pair
                parents[nxt] = node
                counter += 1
                heapq.heappush(heap, (cost + _octile(nxt, goal), cost, counter, nxt))
    return None


def plan(belief, start, goal, unknown_cost: int = UNKNOWN_COST, step: int = 0):
    """Cheapest 8-connected path between two world points on a belief grid.

    FREE cells weigh 1, UNKNOWN cells ``unknown_cost``, OCCUPIED cells are
    impassable, and diagonal moves weigh sqrt(2) times the entered cell.
    """
    res = belief.resolution
    s = world_to_cell(start[0], start[-1], res)
    g = world_to_cell(goal[0], goal[-1], res)
    return plan_cells(belief.cells, s, g, res, unknown_cost, step)


def _grow(occ: np.ndarray) -> np.ndarray:
    grown = occ.copy()
    grown[1:, :] |= occ[:-1, :]
    grown[:-1, :] |= occ[1:, :]
    grown[:, 1:] |= occ[:, :-1]
    grown[:, :-1] |= occ[:, 1:]
    grown[1:, 1:] |= occ[:-1, :-1]
    grown[1:, :-1] |= occ[:-1, 1:]
    grown[:-1, 1:] |= occ[1:, :-1]
    grown[:-1, :-1] |= occ[1:, 1:]
    return grown


def inflate_obstacles(cells: np.ndarray) -> np.ndarray:
    """Mark every cell 8-adjacent to an OCCUPIED cell as OCCUPIED.

    With an agent disc one cell in radius this leaves exactly the cell centres
    where the agent fits.
    """
    out = cells.copy()
    out[_grow(cells == OCCUPIED)] = OCCUPIED
    return out


def clearance_penalty(cells: np.ndarray, cost: int = 6) -> np.ndarray:
    """Integer cost map charging ``cost`` on cells two steps (Chebyshev) from an obstacle."""
    occ = cells == OCCUPIED
    ring = _grow(_grow(occ)) & ~_grow(occ)
    return np.where(ring, cost, 0).astype(np.int64)


def nearest_open_cell(cells: np.ndarray, target):
    """The non-OCCUPIED cell closest (Euclidean, then raster order) to ``target``."""
    rows, cols = np.nonzero(cells != OCCUPIED)
    if rows.size == 0:
        return None
    d2 = (rows - target[0]) ** 2 + (cols - target[1]) ** 2
    k = int(np.argmin(d2))
    return (int(rows[k]), int(cols[k]))


def next_action(pose: Pose, path: Path, turn_angle: float, step_size: float):
    """Action toward the next waypoint, and the path with reached waypoints removed.

    A waypoint is dropped once within ``step_size / 2`` or once the one after it
    is no farther away. Returns ``(None, empty path)`` when the end is reached.
    """
    if not path.waypoints:
        raise InvalidInputError("cannot follow an empty path")
    x, _, z = pose.position
    wps = list(path.waypoints)

    def dist(wp):
        return math.hypot(wp[0] - x, wp[2] - z)

    while len(wps) > 1 and (dist(wps[0]) < step_size / 2 or dist(wps[1]) <= dist(wps[0])):
        wps.pop(0)
    if len(wps) == 1 and dist(wps[0]) < step_size / 2:
        return None, Path((), 0.0, 0.0, path.computed_on_step)
    remaining = Path(tuple(wps), path.total_length, path.cost, path.computed_on_step)
    tx, _, tz = wps[0]
    err = wrap_angle(math.atan2(tx - x, tz - z) - pose.heading)
    if abs(err) > turn_angle / 2:
        return (Action.TURN_LEFT if err > 0 else Action.TURN_RIGHT), remaining
    return Action.MOVE_FORWARD, remaining


def geodesic_field(grid: np.ndarray, sources, resolution: float = 0.1) -> np.ndarray:
    """Shortest FREE-only path length from the nearest source cell to every cell.

    Unreachable and non-FREE cells hold ``inf``. Sources need not be FREE
    (object cells can seed the search); they contribute distance 0.
    """
    h, w = grid.shape
    best: dict = {}
    heap = []
    for cell in sorted(set(map(tuple, sources))):
        best[cell] = (0, 0)
        heap.append((0.0, cell))
    heapq.heapify(heap)
    done = set()
    while heap:
        cost, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        a, b = best[node]
        r, c = node
        for nr, nc, da, db in _free_neighbors(grid, r, c):
            nxt = (nr, nc)
            if nxt in done:
                continue
            pair = (a + da, b + db)
            ncost = pair[0] + SQRT2 * pair[1]
            old = best.get(nxt)
            if old is None or ncost < old[0] + SQRT2 * old[1]:
                best[nxt] = pair
                heapq.heappush(heap, (ncost, nxt))
    out = np.full((h, w), math.inf)
    for cell, pair in best.items():
        if grid[cell] == FREE or pair == (0, 0):
            out[cell] = pair_cost(pair, resolution)
    return out


def _free_neighbors(grid, r, c):
    h, w = grid.shape
    for dr, dc in _STRAIGHT:
        nr, nc = r + dr, c + dc
        if 0 <= nr < h and 0 <= nc < w and grid[nr, nc] == FREE:
            yield nr, nc, 1, 0
    for dr, dc in _DIAGONAL:
        nr, nc = r + dr, c + dc
        if 0 <= nr < h and 0 <= nc < w and grid[nr, nc] == FREE:
            if grid[r, nc] == OCCUPIED or grid[nr, c] == OCCUPIED:
                continue
            yield nr, nc, 0, 1


def geodesic_distance(grid: np.ndarray, a, b, resolution: float = 0.1) -> float:
    """FREE-only shortest path length between two world points; ``inf`` if disconnected."""
    ca = world_to_cell(a[0], a[-1], resolution)
    cb = world_to_cell(b[0], b[-1], resolution)
    h, w = grid.shape
    for cell in (ca, cb):
        if not (0 <= cell[0] < h and 0 <= cell[1] < w) or grid[cell] != FREE:
            return math.inf
    if ca == cb:
        return 0.0
    # searching from the lower cell keeps the result symmetric in (a, b)
    src, dst = min(ca, cb), max(ca, cb)
    return float(geodesic_field(grid, [src], resolution)[dst])
