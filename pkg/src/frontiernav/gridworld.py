"""Deterministic 2D occupancy-grid worlds, a discrete-action agent and ray-cast sensing.

Cells are addressed ``(row, col)``. Column maps to world x and row to world z;
the centre of cell ``(r, c)`` sits at ``((c + 0.5) * res, (r + 0.5) * res)``.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import ndimage

from .config import NavConfig
from .errors import ConfigurationError, EpisodeTerminatedError, GenerationError, InvalidInputError, InvalidPoseError
from .geometry import CameraModel, Pose

UNKNOWN, FREE, OCCUPIED = -1, 0, 1
NO_INSTANCE = -1

DEFAULT_LABELS = ("bed", "chair", "sofa", "toilet", "tv_monitor", "plant")

# ray-march sample spacing, as a fraction of the cell size
_MARCH_FRACTION = 0.25
_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = ndimage.generate_binary_structure(2, 2)


class Action(str, enum.Enum):
    MOVE_FORWARD = "move_forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    STOP = "stop"


def head_noun(text: str) -> str:
    words = text.strip().lower().replace("_", " ").split()
    return words[-1] if words else ""


def label_matches(label: str, goal: str) -> bool:
    return head_noun(label) == head_noun(goal) != ""


def cell_center(cell, resolution: float) -> tuple[float, float]:
    r, c = cell
    return ((c + 0.5) * resolution, (r + 0.5) * resolution)


def world_to_cell(x: float, z: float, resolution: float) -> tuple[int, int]:
    return (int(math.floor(z / resolution)), int(math.floor(x / resolution)))


@dataclass(frozen=True)
class WorldObject:
    instance_id: int
    label: str
    cells: frozenset

    def __post_init__(self):
        if not self.cells:
            raise InvalidInputError(f"object {self.instance_id} has no cells")
        if not self.label or any(ch.isspace() for ch in self.label):
            raise InvalidInputError(f"object label {self.label!r} must be a non-empty token")

    def centroid(self, resolution: float) -> tuple[float, float, float]:
        cells = np.array(sorted(self.cells), dtype=float)
        z = float(np.mean(cells[:, 0] + 0.5) * resolution)
        x = float(np.mean(cells[:, 1] + 0.5) * resolution)
        return (x, 0.0, z)


@dataclass(frozen=True, eq=False)
class WorldSpec:
    grid: np.ndarray
    resolution: float = 0.1
    objects: tuple = ()
    spawn_region: frozenset = frozenset()
    seed: int = 0

    def __post_init__(self):
        grid = np.array(self.grid, dtype=np.int8)
        if grid.ndim != 2 or not np.isin(grid, (FREE, OCCUPIED)).all():
            raise InvalidInputError("world grid must be a 2D array of FREE/OCCUPIED")
        grid.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "objects", tuple(sorted(self.objects, key=lambda o: o.instance_id)))
        object.__setattr__(self, "spawn_region", frozenset(self.spawn_region))
        h, w = grid.shape
        for obj in self.objects:
            for r, c in obj.cells:
                if not (0 <= r < h and 0 <= c < w):
                    raise InvalidInputError(f"object {obj.instance_id} cell {(r, c)} outside the grid")

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    @property
    def extent(self) -> tuple[float, float]:
        """World size ``(x_extent, z_extent)`` in meters."""
        h, w = self.grid.shape
        return (w * self.resolution, h * self.resolution)

    @property
    def diagonal(self) -> float:
        return math.hypot(*self.extent)

    @cached_property
    def instance_map(self) -> np.ndarray:
        imap = np.full(self.grid.shape, NO_INSTANCE, dtype=np.int32)
        for obj in self.objects:
            for r, c in obj.cells:
                imap[r, c] = obj.instance_id
        imap.flags.writeable = False
        return imap

    def object(self, instance_id: int) -> WorldObject:
        for obj in self.objects:
            if obj.instance_id == instance_id:
                return obj
        raise KeyError(instance_id)

    def matching_objects(self, goal: str) -> list[WorldObject]:
        return [o for o in self.objects if label_matches(o.label, goal)]

    def labels(self) -> list[str]:
        return sorted({o.label for o in self.objects})

    def in_bounds(self, cell) -> bool:
        h, w = self.grid.shape
        return 0 <= cell[0] < h and 0 <= cell[1] < w

    def is_free_position(self, x: float, z: float) -> bool:
        cell = world_to_cell(x, z, self.resolution)
        return self.in_bounds(cell) and self.grid[cell] == FREE

    def __eq__(self, other):
        if not isinstance(other, WorldSpec):
            return NotImplemented
        return (
            self.resolution == other.resolution
            and self.seed == other.seed
            and self.grid.shape == other.grid.shape
            and bool(np.array_equal(self.grid, other.grid))
            and self.objects == other.objects
            and self.spawn_region == other.spawn_region
        )

    __hash__ = None


# -- generation -------------------------------------------------------------


@dataclass
class _Room:
    r0: int
    c0: int
    r1: int  # exclusive
    c1: int

    @property
    def center(self) -> tuple[int, int]:
        return ((self.r0 + self.r1) // 2, (self.c0 + self.c1) // 2)

    def overlaps(self, other: "_Room", margin: int) -> bool:
        return not (
            self.r1 + margin <= other.r0
            or other.r1 + margin <= self.r0
            or self.c1 + margin <= other.c0
            or other.c1 + margin <= self.c0
        )


def traversable_mask(free: np.ndarray) -> np.ndarray:
    """Cells whose full 3x3 neighbourhood is free: where the agent disc fits."""
    return ndimage.binary_erosion(free, structure=_EIGHT, border_value=0)


def _is_connected(mask: np.ndarray) -> bool:
    _, n = ndimage.label(mask, structure=_FOUR)
    return n <= 1


def _carve_corridor(grid, a, b, half_width, rng):
    (ra, ca), (rb, cb) = a, b
    h, w = grid.shape
    if rng.random() < 0.5:
        bends = [(ra, ca, ra, cb), (ra, cb, rb, cb)]
    else:
        bends = [(ra, ca, rb, ca), (rb, ca, rb, cb)]
    for r0, c0, r1, c1 in bends:
        rlo, rhi = sorted((r0, r1))
        clo, chi = sorted((c0, c1))
        rlo, rhi = max(1, rlo - half_width), min(h - 2, rhi + half_width)
        clo, chi = max(1, clo - half_width), min(w - 2, chi + half_width)
        grid[rlo : rhi + 1, clo : chi + 1] = FREE


def _object_candidates(room: _Room, size):
    """Rectangles of ``size`` lying inside ``room`` flush against one of its walls."""
    oh, ow = size
    out = []
    for c in range(room.c0, room.c1 - ow + 1):
        out.append((room.r0, c, "north"))
        out.append((room.r1 - oh, c, "south"))
    for r in range(room.r0, room.r1 - oh + 1):
        out.append((r, room.c0, "west"))
        out.append((r, room.c1 - ow, "east"))
    return out


def _backed_by_wall(grid, r, c, size, side) -> bool:
    oh, ow = size
    h, w = grid.shape
    if side == "north":
        cells = [(r - 1, cc) for cc in range(c, c + ow)]
    elif side == "south":
        cells = [(r + oh, cc) for cc in range(c, c + ow)]
    elif side == "west":
        cells = [(rr, c - 1) for rr in range(r, r + oh)]
    else:
        cells = [(rr, c + ow) for rr in range(r, r + oh)]
    return all(0 <= rr < h and 0 <= cc < w and grid[rr, cc] == OCCUPIED for rr, cc in cells)


def generate_world(
    seed: int,
    width: int = 64,
    height: int = 64,
    n_rooms: int = 3,
    n_objects: int = 4,
    label_vocabulary=DEFAULT_LABELS,
    resolution: float = 0.1,
    corridor_width: int = 5,
    max_attempts: int = 400,
) -> WorldSpec:
    """Procedural rooms joined by corridors, with objects against the walls.

    Deterministic in ``seed``. FREE space is 4-connected and the agent's
    traversable space (see :func:`traversable_mask`) stays connected after
    object placement.
    """
    if width < 32 or height < 32:
        raise InvalidInputError("worlds must be at least 32x32 cells")
    if n_rooms < 1:
        raise InvalidInputError("n_rooms must be >= 1")
    if n_objects < 0:
        raise InvalidInputError("n_objects must be >= 0")
    if n_objects and not label_vocabulary:
        raise InvalidInputError("label_vocabulary must be non-empty when placing objects")
    rng = np.random.default_rng(seed)
    grid = np.full((height, width), OCCUPIED, dtype=np.int8)

    lo = 10
    hi = max(lo + 2, min(width, height) - 4) if n_rooms == 1 else max(lo + 2, min(width, height) // 2 - 2)
    rooms: list[_Room] = []
    attempts = 0
    while len(rooms) < n_rooms:
        attempts += 1
        if attempts > max_attempts:
            raise GenerationError(f"could not place {n_rooms} rooms in a {width}x{height} grid")
        rh, rw = int(rng.integers(lo, hi + 1)), int(rng.integers(lo, hi + 1))
        if rh > height - 2 or rw > width - 2:
            continue
        r0 = int(rng.integers(1, height - 1 - rh + 1))
        c0 = int(rng.integers(1, width - 1 - rw + 1))
        room = _Room(r0, c0, r0 + rh, c0 + rw)
        if any(room.overlaps(o, margin=2) for o in rooms):
            continue
        rooms.append(room)
    for room in rooms:
        grid[room.r0 : room.r1, room.c0 : room.c1] = FREE

    # Prim's tree over room centres, Manhattan metric
    connected = [0]
    remaining = list(range(1, len(rooms)))
    half = corridor_width // 2
    while remaining:
        best = None
        for i in connected:
            for j in remaining:
                (ri, ci), (rj, cj) = rooms[i].center, rooms[j].center
                d = abs(ri - rj) + abs(ci - cj)
                if best is None or d < best[0]:
                    best = (d, i, j)
        _, i, j = best
        _carve_corridor(grid, rooms[i].center, rooms[j].center, half, rng)
        connected.append(j)
        remaining.remove(j)

    objects = []
    for instance_id in range(n_objects):
        placed = False
        for _ in range(max_attempts):
            room = rooms[int(rng.integers(len(rooms)))]
            size = (int(rng.integers(2, 4)), int(rng.integers(2, 5)))
            if rng.random() < 0.5:
                size = size[::-1]
            cands = _object_candidates(room, size)
            if not cands:
                continue
            r, c, side = cands[int(rng.integers(len(cands)))]
            oh, ow = size
            block = grid[r : r + oh, c : c + ow]
            if block.shape != size or (block != FREE).any():
                continue
            if not _backed_by_wall(grid, r, c, size, side):
                continue
            # keep a one-cell gap to every other object
            taken = set().union(*(o.cells for o in objects)) if objects else set()
            halo = {(rr, cc) for rr in range(r - 1, r + oh + 1) for cc in range(c - 1, c + ow + 1)}
            if halo & taken:
                continue
            trial = grid.copy()
            trial[r : r + oh, c : c + ow] = OCCUPIED
            free = trial == FREE
            if not _is_connected(free) or not _is_connected(traversable_mask(free)):
                continue
            grid = trial
            label = str(label_vocabulary[int(rng.integers(len(label_vocabulary)))])
            cells = frozenset((rr, cc) for rr in range(r, r + oh) for cc in range(c, c + ow))
            objects.append(WorldObject(instance_id, label, cells))
            placed = True
            break
        if not placed:
            raise GenerationError(f"could not place object {instance_id}; too many objects for the free area")

    spawn = traversable_mask(grid == FREE)
    spawn_cells = frozenset(zip(*(idx.tolist() for idx in np.nonzero(spawn))))
    return WorldSpec(grid=grid, resolution=resolution, objects=tuple(objects), spawn_region=spawn_cells, seed=seed)


def sample_start_pose(world: WorldSpec, rng: np.random.Generator, turn_angle: float = math.radians(30.0)) -> Pose:
    cells = sorted(world.spawn_region)
    if not cells:
        raise GenerationError("world has an empty spawn region")
    cell = cells[int(rng.integers(len(cells)))]
    x, z = cell_center(cell, world.resolution)
    n_headings = int(round(2 * math.pi / turn_angle))
    heading = int(rng.integers(n_headings)) * turn_angle
    return Pose.planar(x, z, heading)


# -- serialization ----------------------------------------------------------


def _fmt_cells(cells) -> str:
    return " ".join(f"{r},{c}" for r, c in sorted(cells))


def _parse_cells(tokens) -> frozenset:
    out = set()
    for tok in tokens:
        r, c = tok.split(",")
        out.add((int(r), int(c)))
    return frozenset(out)


def world_to_text(world: WorldSpec) -> str:
    h, w = world.grid.shape
    lines = [f"gridworld v1 {w} {h} {world.resolution!r}"]
    chars = np.where(world.grid == OCCUPIED, "#", ".")
    lines.extend("".join(row) for row in chars)
    lines.append(f"seed {world.seed}")
    lines.append(("spawn " + _fmt_cells(world.spawn_region)).rstrip())
    for obj in world.objects:
        lines.append(f"obj {obj.instance_id} {obj.label} {_fmt_cells(obj.cells)}")
    return "\n".join(lines) + "\n"


def world_from_text(text: str) -> WorldSpec:
    lines = text.splitlines()
    if not lines:
        raise InvalidInputError("empty world file")
    header = lines[0].split()
    if len(header) != 5 or header[:2] != ["gridworld", "v1"]:
        raise InvalidInputError(f"bad world header: {lines[0]!r}")
    w, h, res = int(header[2]), int(header[3]), float(header[4])
    rows = lines[1 : 1 + h]
    if len(rows) != h or any(len(row) != w for row in rows):
        raise InvalidInputError("grid rows do not match the header dimensions")
    if any(ch not in ".#" for row in rows for ch in row):
        raise InvalidInputError("grid cells must be '.' or '#'")
    grid = np.array([[OCCUPIED if ch == "#" else FREE for ch in row] for row in rows], dtype=np.int8)
    seed, spawn, objects = 0, frozenset(), []
    for line in lines[1 + h :]:
        if not line.strip():
            continue
        parts = line.split()
        if parts[0] == "seed":
            seed = int(parts[1])
        elif parts[0] == "spawn":
            spawn = _parse_cells(parts[1:])
        elif parts[0] == "obj":
            objects.append(WorldObject(int(parts[1]), parts[2], _parse_cells(parts[3:])))
        else:
            raise InvalidInputError(f"unknown world record: {parts[0]!r}")
    return WorldSpec(grid=grid, resolution=res, objects=tuple(objects), spawn_region=spawn, seed=seed)


def save_world(world: WorldSpec, path) -> None:
    Path(path).write_text(world_to_text(world))


def load_world(path) -> WorldSpec:
    return world_from_text(Path(path).read_text())


def world_digest(world: WorldSpec) -> str:
    return hashlib.sha256(world_to_text(world).encode()).hexdigest()


# -- agent ------------------------------------------------------------------


@dataclass(frozen=True)
class AgentState:
    pose: Pose
    step_count: int = 0
    path_length_so_far: float = 0.0
    collided_last_step: bool = False
    stopped: bool = False


def disc_collides(world: WorldSpec, x: float, z: float, radius: float) -> bool:
    """Whether a disc at ``(x, z)`` overlaps an OCCUPIED or out-of-grid cell."""
    res = world.resolution
    h, w = world.grid.shape
    for r in range(int(math.floor((z - radius) / res)), int(math.floor((z + radius) / res)) + 1):
        for c in range(int(math.floor((x - radius) / res)), int(math.floor((x + radius) / res)) + 1):
            dx = max(c * res - x, 0.0, x - (c + 1) * res)
            dz = max(r * res - z, 0.0, z - (r + 1) * res)
            if dx * dx + dz * dz >= radius * radius:
                continue
            if not (0 <= r < h and 0 <= c < w) or world.grid[r, c] == OCCUPIED:
                return True
    return False


def swept_collides(world: WorldSpec, start, end, radius: float) -> bool:
    (x0, z0), (x1, z1) = start, end
    n = max(1, int(math.ceil(math.hypot(x1 - x0, z1 - z0) / (world.resolution * _MARCH_FRACTION))))
    return any(disc_collides(world, x0 + (x1 - x0) * k / n, z0 + (z1 - z0) * k / n, radius) for k in range(n + 1))


def step(world: WorldSpec, state: AgentState, action: Action, config: NavConfig = NavConfig()) -> AgentState:
    """Apply one discrete action. Every action, STOP included, consumes a step."""
    if state.stopped:
        raise EpisodeTerminatedError("episode already stopped")
    if state.step_count >= config.max_steps:
        raise EpisodeTerminatedError("step budget exhausted")
    action = Action(action)
    pose = state.pose
    collided = False
    moved = 0.0
    if action is Action.TURN_LEFT:
        pose = pose.with_heading(pose.heading + config.turn_angle)
    elif action is Action.TURN_RIGHT:
        pose = pose.with_heading(pose.heading - config.turn_angle)
    elif action is Action.MOVE_FORWARD:
        x0, z0 = pose.xz
        x1 = x0 + config.step_size * math.sin(pose.heading)
        z1 = z0 + config.step_size * math.cos(pose.heading)
        if swept_collides(world, (x0, z0), (x1, z1), radius=world.resolution):
            collided = True
        else:
            new_pose = Pose((x1, pose.position[1], z1), pose.heading)
            moved = math.dist(pose.position, new_pose.position)
            pose = new_pose
    return AgentState(
        pose=pose,
        step_count=state.step_count + 1,
        path_length_so_far=state.path_length_so_far + moved,
        collided_last_step=collided,
        stopped=action is Action.STOP,
    )


# -- sensing ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Observation:
    depths: np.ndarray
    instance_ids: np.ndarray  # NO_INSTANCE where the ray hit no object
    camera_pose: Pose
    camera: CameraModel
    step_index: int = 0

    def visible_instances(self) -> set[int]:
        return {int(i) for i in self.instance_ids if i != NO_INSTANCE}


def _march(camera: CameraModel, pose: Pose, resolution: float, shape):
    """Shared ray samples for rendering and belief integration.

    Returns the per-sample depth parameter ``s`` (camera z), the row/col of the
    sample cell, an in-grid mask and a mask of samples within range.
    """
    dirs = camera.column_directions() @ pose.rotation().T
    dx, dz = dirs[:, 0], dirs[:, 2]
    ds = (resolution * _MARCH_FRACTION) / np.hypot(dx, dz)
    k = np.arange(int(math.ceil(camera.max_depth / ds.min())) + 1)
    s = k[None, :] * ds[:, None]
    in_range = s <= camera.max_depth
    x0, _, z0 = pose.position
    xs = x0 + s * dx[:, None]
    zs = z0 + s * dz[:, None]
    rows = np.floor(zs / resolution).astype(np.int64)
    cols = np.floor(xs / resolution).astype(np.int64)
    h, w = shape
    inside = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
    return s, rows, cols, inside, in_range


def render_observation(world: WorldSpec, pose: Pose, camera: CameraModel, step_index: int = 0) -> Observation:
    """One horizontal ray per image column, marched to the first OCCUPIED cell."""
    x, _, z = pose.position
    if not world.is_free_position(x, z):
        raise InvalidPoseError(f"pose {pose.xz} is not on a FREE cell")
    s, rows, cols, inside, in_range = _march(camera, pose, world.resolution, world.grid.shape)
    rr, cc = np.clip(rows, 0, world.grid.shape[0] - 1), np.clip(cols, 0, world.grid.shape[1] - 1)
    blocked = (~inside | (world.grid[rr, cc] == OCCUPIED)) & in_range
    has_hit = blocked.any(axis=1)
    k_hit = np.argmax(blocked, axis=1)
    idx = np.arange(camera.width)
    depths = np.where(has_hit, s[idx, k_hit], camera.max_depth)
    hit_inside = has_hit & inside[idx, k_hit]
    ids = np.where(hit_inside, world.instance_map[rr[idx, k_hit], cc[idx, k_hit]], NO_INSTANCE).astype(np.int32)
    depths.flags.writeable = False
    ids.flags.writeable = False
    return Observation(depths=depths, instance_ids=ids, camera_pose=pose, camera=camera, step_index=step_index)


@dataclass(frozen=True, eq=False)
class BeliefGrid:
    cells: np.ndarray
    resolution: float = 0.1

    @classmethod
    def unknown(cls, shape, resolution: float = 0.1) -> "BeliefGrid":
        return cls(np.full(shape, UNKNOWN, dtype=np.int8), resolution)

    @classmethod
    def for_world(cls, world: WorldSpec) -> "BeliefGrid":
        return cls.unknown(world.grid.shape, world.resolution)

    @property
    def shape(self):
        return self.cells.shape

    def count(self, value: int) -> int:
        return int(np.count_nonzero(self.cells == value))

    def __eq__(self, other):
        if not isinstance(other, BeliefGrid):
            return NotImplemented
        return self.resolution == other.resolution and np.array_equal(self.cells, other.cells)

    __hash__ = None


def ray_cells(obs: Observation, shape, resolution: float):
    """Per-ray traversed (free) and hit (occupied) cells implied by ``obs``."""
    s, rows, cols, inside, in_range = _march(obs.camera, obs.camera_pose, resolution, shape)
    depth = np.asarray(obs.depths)[:, None]
    free = (s < depth) & inside & in_range
    at_hit = (s >= depth) & in_range
    k_hit = np.argmax(at_hit, axis=1)
    idx = np.arange(s.shape[0])
    hit = (np.asarray(obs.depths) < obs.camera.max_depth) & at_hit.any(axis=1) & inside[idx, k_hit]
    return (rows[free], cols[free]), (rows[idx, k_hit][hit], cols[idx, k_hit][hit])


def integrate_observation(belief: BeliefGrid, obs: Observation) -> BeliefGrid:
    """Mark cells before each ray's hit FREE and the hit cell OCCUPIED.

    Cells already known keep their value; a consistent sensor never flips them.
    """
    (fr, fc), (hr, hc) = ray_cells(obs, belief.shape, belief.resolution)
    cells = belief.cells.copy()
    unknown_free = cells[fr, fc] == UNKNOWN
    cells[fr[unknown_free], fc[unknown_free]] = FREE
    unknown_hit = cells[hr, hc] == UNKNOWN
    cells[hr[unknown_hit], hc[unknown_hit]] = OCCUPIED
    return BeliefGrid(cells, belief.resolution)


# -- success oracle ---------------------------------------------------------

SUCCESS_DISTANCE = 1.0


def line_of_sight(world: WorldSpec, origin, cell) -> bool:
    """Whether the segment from ``origin`` (x, z) to the centre of ``cell`` only
    crosses FREE cells before entering ``cell``."""
    res = world.resolution
    tx, tz = cell_center(cell, res)
    x0, z0 = origin
    n = max(1, int(math.ceil(math.hypot(tx - x0, tz - z0) / (res * _MARCH_FRACTION))))
    t = np.arange(n + 1) / n
    rows = np.floor((z0 + t * (tz - z0)) / res).astype(int)
    cols = np.floor((x0 + t * (tx - x0)) / res).astype(int)
    enter = np.argmax((rows == cell[0]) & (cols == cell[1]))
    rows, cols = rows[:enter], cols[:enter]
    if not all(world.in_bounds((r, c)) for r, c in zip(rows, cols)):
        return False
    return bool((world.grid[rows, cols] == FREE).all())


def _box_distance(x: float, z: float, cell, res: float) -> float:
    r, c = cell
    dx = max(c * res - x, 0.0, x - (c + 1) * res)
    dz = max(r * res - z, 0.0, z - (r + 1) * res)
    return math.hypot(dx, dz)


def _sees_object(world: WorldSpec, x: float, z: float, obj: WorldObject, radius: float) -> bool:
    near = sorted((_box_distance(x, z, cell, world.resolution), cell) for cell in obj.cells)
    return any(d < radius and line_of_sight(world, (x, z), cell) for d, cell in near if d < radius)


@dataclass(frozen=True)
class SuccessResult:
    success: bool
    matched_instance: int | None = None


def success_check(world: WorldSpec, pose: Pose, goal_label: str, radius: float = SUCCESS_DISTANCE) -> SuccessResult:
    """A stop succeeds when a matching object's cell lies within ``radius`` of the
    agent with an unoccluded line of sight to it."""
    matches = world.matching_objects(goal_label)
    if not matches:
        raise ConfigurationError(f"goal {goal_label!r} matches no object in the world")
    x, z = pose.xz
    for obj in matches:
        if _sees_object(world, x, z, obj, radius):
            return SuccessResult(True, obj.instance_id)
    return SuccessResult(False, None)


def success_region(world: WorldSpec, goal_label: str, radius: float = SUCCESS_DISTANCE) -> np.ndarray:
    """FREE cells whose centre would pass :func:`success_check`."""
    matches = world.matching_objects(goal_label)
    if not matches:
        raise ConfigurationError(f"goal {goal_label!r} matches no object in the world")
    res = world.resolution
    region = np.zeros(world.grid.shape, dtype=bool)
    reach = int(math.ceil(radius / res)) + 1
    h, w = world.grid.shape
    for obj in matches:
        rows = [r for r, _ in obj.cells]
        cols = [c for _, c in obj.cells]
        for r in range(max(0, min(rows) - reach), min(h, max(rows) + reach + 1)):
            for c in range(max(0, min(cols) - reach), min(w, max(cols) + reach + 1)):
                if region[r, c] or world.grid[r, c] != FREE:
                    continue
                x, z = cell_center((r, c), res)
                if _sees_object(world, x, z, obj, radius):
                    region[r, c] = True
    return region


def reachable_free_mask(world: WorldSpec, start_cell) -> np.ndarray:
    labels, _ = ndimage.label(world.grid == FREE, structure=_FOUR)
    lab = labels[start_cell]
    if lab == 0:
        return np.zeros(world.grid.shape, dtype=bool)
    return labels == lab
