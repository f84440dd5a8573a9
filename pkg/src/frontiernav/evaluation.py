"""Episode runner, SR/SPL metrics, failure taxonomy and suite I/O."""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path as FsPath

import numpy as np

from .config import NavConfig
from .errors import AggregationError, ConfigurationError, InvalidInputError
from .frontiers import GridFrontierDetector
from .geometry import CameraModel, Pose, wrap_angle
from .gridworld import (
    FREE,
    OCCUPIED,
    Action,
    AgentState,
    BeliefGrid,
    WorldSpec,
    generate_world,
    integrate_observation,
    load_world,
    reachable_free_mask,
    render_observation,
    sample_start_pose,
    step,
    success_check,
    success_region,
    world_digest,
    world_to_cell,
)
from .grounding import GroundTruthSegmenter
from .manager import DecisionKind, FrontierManager, TickInputs
from .planner import Path, clearance_penalty, geodesic_field, inflate_obstacles, nearest_open_cell, next_action, plan_cells
from .scoring import ConstantScorer, OracleScorer

FAILURE_MODES = ("none", "false_positive", "reach_max_steps", "stuck_cannot_reach", "no_frontiers")
SPL_SHORTEST_FLOOR = 1e-3
REPLAN_INTERVAL = 6
REVISIT_LIMIT = 8
BUMP_MEMORY = 50


def default_camera() -> CameraModel:
    return CameraModel.from_fov(width=160, height=120, hfov_deg=79.0, max_depth=3.5)


@dataclass(frozen=True)
class Episode:
    """One navigation task. The world is given inline, by file, or by generator seed."""

    start_pose: Pose | None
    goal: str
    scorer: str = "oracle"
    max_steps: int = 500
    world: WorldSpec | None = field(default=None, compare=False, repr=False)
    world_seed: int | None = None
    world_file: str | None = None
    world_params: dict = field(default_factory=dict)
    episode_id: str = ""

    def resolve_world(self) -> WorldSpec:
        if self.world is not None:
            return self.world
        if self.world_file is not None:
            return load_world(self.world_file)
        if self.world_seed is not None:
            return generate_world(self.world_seed, **self.world_params)
        raise ConfigurationError("episode has no world, world file or world seed")

    def resolve_start(self, world: WorldSpec, config: NavConfig) -> Pose:
        if self.start_pose is not None:
            return self.start_pose
        seed = self.world_seed if self.world_seed is not None else world.seed
        return sample_start_pose(world, np.random.default_rng([seed, 1]), config.turn_angle)

    def to_dict(self) -> dict:
        row = {"episode_id": self.episode_id, "goal": self.goal, "scorer": self.scorer, "max_steps": self.max_steps}
        if self.world_file is not None:
            row["world_file"] = self.world_file
        if self.world_seed is not None:
            row["world_seed"] = self.world_seed
        if self.world_params:
            row["world_params"] = self.world_params
        if self.start_pose is not None:
            x, z = self.start_pose.xz
            row["start"] = [x, z, self.start_pose.heading]
        return row

    @classmethod
    def from_dict(cls, row: dict, base_dir=None) -> "Episode":
        known = {"episode_id", "goal", "scorer", "max_steps", "world_file", "world_seed", "world_params", "start"}
        unknown = set(row) - known
        if unknown:
            raise ConfigurationError(f"unknown manifest keys {sorted(unknown)}")
        if "goal" not in row:
            raise ConfigurationError("manifest row has no goal")
        world_file = row.get("world_file")
        if world_file is not None and base_dir is not None and not os.path.isabs(world_file):
            world_file = str(FsPath(base_dir) / world_file)
        if world_file is None and row.get("world_seed") is None:
            raise ConfigurationError("manifest row needs world_file or world_seed")
        start = row.get("start")
        pose = Pose.planar(float(start[0]), float(start[1]), float(start[2]) if len(start) > 2 else 0.0) if start else None
        return cls(
            start_pose=pose,
            goal=str(row["goal"]),
            scorer=str(row.get("scorer", "oracle")),
            max_steps=int(row.get("max_steps", 500)),
            world_seed=row.get("world_seed"),
            world_file=world_file,
            world_params=dict(row.get("world_params", {})),
            episode_id=str(row.get("episode_id", "")),
        )


@dataclass
class EpisodeResult:
    episode_id: str
    goal: str
    scorer: str
    success: bool
    steps: int
    agent_path_length: float
    shortest_path_length: float
    spl: float
    failure_mode: str
    trajectory: list = field(default_factory=list)
    event_log: str | None = None
    excluded: bool = False
    exclusion_reason: str | None = None
    stopped: bool = False
    has_target_ever: bool = False
    coverage: float = 0.0
    log_digest: str | None = None
    events: list | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("events")
        if not math.isfinite(out["shortest_path_length"]):
            out["shortest_path_length"] = None
        return out

    @classmethod
    def from_dict(cls, row: dict) -> "EpisodeResult":
        row = dict(row)
        if row.get("shortest_path_length") is None:
            row["shortest_path_length"] = math.inf
        return cls(**row)


def compute_spl(success: bool, shortest: float, actual: float) -> float:
    if not shortest > 0 or not math.isfinite(shortest):
        raise InvalidInputError(f"shortest path length must be finite and positive, got {shortest}")
    if actual < 0:
        raise InvalidInputError(f"path length must be non-negative, got {actual}")
    if not success:
        return 0.0
    return shortest / max(shortest, actual)


def classify_failure(stopped: bool, success: bool, has_target_ever: bool, steps: int = 0, no_frontiers: bool = False) -> str:
    if success:
        return "none"
    if no_frontiers:
        return "no_frontiers"
    if stopped:
        return "false_positive"
    return "stuck_cannot_reach" if has_target_ever else "reach_max_steps"


def aggregate(results) -> dict:
    feasible = [r for r in results if not r.excluded]
    if not feasible:
        raise AggregationError("no feasible episodes to aggregate")
    counts = {mode: 0 for mode in FAILURE_MODES}
    for r in feasible:
        counts[r.failure_mode] += 1
    n = len(feasible)
    return {
        "episodes": n,
        "excluded": len(results) - n,
        "SR": 100.0 * sum(r.success for r in feasible) / n,
        "SPL": 100.0 * sum(r.spl for r in feasible) / n,
        "failure_modes": counts,
    }


def goal_distance_field(world: WorldSpec, goal: str):
    """Geodesic distance from every cell to the success region, and the region mask."""
    region = success_region(world, goal)
    cells = list(zip(*np.nonzero(region)))
    if not cells:
        return np.full(world.grid.shape, math.inf), region
    return geodesic_field(world.grid, cells, world.resolution), region


def shortest_path_to_goal(world: WorldSpec, start: Pose, goal: str):
    """Geodesic length from the start to the success region, and the region mask."""
    field_, region = goal_distance_field(world, goal)
    return float(field_[world_to_cell(*start.xz, world.resolution)]), region


def make_scorer(name: str, world: WorldSpec, options: dict | None = None):
    if name == "oracle":
        return OracleScorer(world)
    if name == "constant":
        return ConstantScorer(world)
    if name == "vlm":
        from .scoring import VLMClient, VLMScorer

        opts = dict(options or {})
        return VLMScorer(VLMClient(opts.pop("endpoint", None), opts.pop("model", ""), **opts))
    raise ConfigurationError(f"unknown scorer {name!r}")


class _Navigator:
    """Turns manager decisions into actions with a replanning grid planner.

    A collision marks the cell the agent failed to enter as blocked for
    ``BUMP_MEMORY`` steps, so the next plan routes around obstacles the camera
    has not seen (the agent's footprint reaches cells beside its view cone).
    """

    def __init__(self, config: NavConfig):
        self.config = config
        self.path: Path | None = None
        self.key = None
        self.age = 0
        self.bumps: dict = {}

    def note_collision(self, pose: Pose, step_index: int, resolution: float) -> None:
        x, z = pose.xz
        d = self.config.step_size
        cell = world_to_cell(x + d * math.sin(pose.heading), z + d * math.cos(pose.heading), resolution)
        if cell != world_to_cell(x, z, resolution):
            self.bumps[cell] = step_index + BUMP_MEMORY

    def _grid(self, belief: BeliefGrid, step_index: int) -> np.ndarray:
        cells = belief.cells.copy()
        h, w = cells.shape
        for cell, until in list(self.bumps.items()):
            if until <= step_index:
                del self.bumps[cell]
            elif 0 <= cell[0] < h and 0 <= cell[1] < w:
                cells[cell] = OCCUPIED
        return cells

    def _plan(self, cells: np.ndarray, pose: Pose, target, step_index: int, res: float):
        start = world_to_cell(*pose.xz, res)
        goal = world_to_cell(target[0], target[2], res)
        h, w = cells.shape
        goal = (min(max(goal[0], 0), h - 1), min(max(goal[1], 0), w - 1))
        inflated = inflate_obstacles(cells)
        for grid, penalty in ((inflated, clearance_penalty(cells)), (cells.copy(), None)):
            if grid[start] == OCCUPIED:
                grid[start] = FREE
            snapped = nearest_open_cell(grid, goal)
            path = plan_cells(grid, start, snapped, res, step=step_index, penalty=penalty)
            if path is not None:
                return path
        return None

    def _approach(self, pose: Pose, target, cells: np.ndarray, res: float):
        """Single-step move straight at a target less than one step away, or None."""
        cfg = self.config
        x, z = pose.xz
        dist = math.hypot(target[0] - x, target[2] - z)
        if dist > cfg.step_size * 1.5 or dist < 1e-9:
            return None
        err = wrap_angle(math.atan2(target[0] - x, target[2] - z) - pose.heading)
        if abs(err) > cfg.turn_angle / 2:
            return Action.TURN_LEFT if err > 0 else Action.TURN_RIGHT
        nx = x + cfg.step_size * math.sin(pose.heading)
        nz = z + cfg.step_size * math.cos(pose.heading)
        if math.hypot(target[0] - nx, target[2] - nz) >= dist:
            return None
        cell = world_to_cell(nx, nz, res)
        h, w = cells.shape
        if not (0 <= cell[0] < h and 0 <= cell[1] < w) or cells[cell] == OCCUPIED:
            return None
        return Action.MOVE_FORWARD

    def action(self, decision, belief: BeliefGrid, state: AgentState, step_index: int) -> Action:
        cfg = self.config
        res = belief.resolution
        if state.collided_last_step:
            self.note_collision(state.pose, step_index, res)
        cells = self._grid(belief, step_index)
        direct = self._approach(state.pose, decision.target, cells, res)
        if direct is not None:
            self.path = None
            return direct
        key = (decision.kind, decision.frontier_id, tuple(decision.target))
        if self.path is None or key != self.key or self.age >= REPLAN_INTERVAL or state.collided_last_step:
            self.path = self._plan(cells, state.pose, decision.target, step_index, res)
            self.key = key
            self.age = 0
        self.age += 1
        if self.path is None or not self.path.waypoints:
            return Action.TURN_LEFT
        act, self.path = next_action(state.pose, self.path, cfg.turn_angle, cfg.step_size)
        if act is None:
            # at the snapped goal but the target itself is out of reach; face it
            self.path = None
            x, z = state.pose.xz
            err = wrap_angle(math.atan2(decision.target[0] - x, decision.target[2] - z) - state.pose.heading)
            return Action.TURN_RIGHT if err < 0 else Action.TURN_LEFT
        return act


def _digest_lines(lines) -> str:
    h = hashlib.sha256()
    for line in lines:
        h.update(line.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def run_episode(
    episode: Episode,
    config: NavConfig | None = None,
    camera: CameraModel | None = None,
    scorer=None,
    log_path=None,
    keep_events: bool = False,
    scorer_options: dict | None = None,
) -> EpisodeResult:
    """Drive one episode to STOP, no_frontiers or the step budget.

    Episodes whose success region is unreachable from the start are excluded
    and not run. A goal absent from the world makes the episode a negative
    control: it runs under the constant scorer and is excluded from SR/SPL.
    """
    config = config or NavConfig()
    camera = camera or default_camera()
    world = episode.resolve_world()
    start = episode.resolve_start(world, config)
    if not world.is_free_position(*start.xz):
        raise InvalidInputError(f"start {start.xz} is not on a FREE cell")
    negative = not world.matching_objects(episode.goal)
    base = dict(episode_id=episode.episode_id, goal=episode.goal, scorer=episode.scorer)
    if negative:
        shortest = math.inf
    else:
        shortest, _ = shortest_path_to_goal(world, start, episode.goal)
        if not math.isfinite(shortest):
            return EpisodeResult(
                **base, success=False, steps=0, agent_path_length=0.0, shortest_path_length=math.inf,
                spl=0.0, failure_mode="none", excluded=True, exclusion_reason="infeasible",
            )
    if scorer is None:
        scorer = ConstantScorer(world) if negative else make_scorer(episode.scorer, world, scorer_options)

    manager = FrontierManager(config, episode.goal, scorer, GroundTruthSegmenter(world), camera)
    detector = GridFrontierDetector(config.min_cluster_cells, config.r_gain)
    navigator = _Navigator(config)
    max_steps = min(episode.max_steps, config.max_steps)
    run_config = config.updated(max_steps=max_steps)

    state = AgentState(start)
    obs = render_observation(world, start, camera, 0)
    belief = integrate_observation(BeliefGrid.for_world(world), obs)
    header = {
        "type": "header",
        "episode_id": episode.episode_id,
        "world_digest": world_digest(world),
        "goal": episode.goal,
        "scorer": episode.scorer,
        "start": [start.xz[0], start.xz[1], start.heading],
        "max_steps": max_steps,
        "config": config.to_dict(),
    }
    lines = [json.dumps(header, sort_keys=True)]
    events = [header] if keep_events else None
    trajectory = [[start.xz[0], start.xz[1], start.heading]]
    visits: dict = {}
    stuck_targets: set = set()
    no_frontiers = False

    while state.step_count < max_steps:
        t = state.step_count
        detect = t % config.prediction_interval == 0 or manager.wants_detection()
        proposals = detector.detect(belief, obs) if detect else None
        target_key = manager.state.target_id
        cell = world_to_cell(*state.pose.xz, world.resolution)
        count = visits.get((target_key, cell), 0) + 1
        visits[(target_key, cell)] = count
        if count > REVISIT_LIMIT and target_key is not None:
            stuck_targets.add(target_key)
        stuck = target_key in stuck_targets
        decision = manager.tick(
            TickInputs(state.pose.position, state.pose.heading, t, obs, belief, proposals, no_progress=stuck)
        )
        rec = manager.record
        rec["type"] = "tick"
        if decision.kind is DecisionKind.STOP_FAILURE:
            no_frontiers = decision.reason == "no_frontiers"
            rec["action"] = None
            lines.append(json.dumps(rec, sort_keys=True))
            if events is not None:
                events.append(rec)
            break
        if decision.kind is DecisionKind.STOP_SUCCESS:
            action = Action.STOP
        elif decision.kind is DecisionKind.ROTATE_IN_PLACE:
            action = Action.TURN_LEFT if decision.direction >= 0 else Action.TURN_RIGHT
        else:
            action = navigator.action(decision, belief, state, t)
        rec["action"] = action.value
        state = step(world, state, action, run_config)
        rec["collided"] = state.collided_last_step
        lines.append(json.dumps(rec, sort_keys=True))
        if events is not None:
            events.append(rec)
        trajectory.append([state.pose.xz[0], state.pose.xz[1], state.pose.heading])
        if state.stopped:
            break
        obs = render_observation(world, state.pose, camera, state.step_count)
        belief = integrate_observation(belief, obs)

    success = False
    if state.stopped and not negative:
        success = success_check(world, state.pose, episode.goal).success
    failure = classify_failure(state.stopped, success, manager.state.has_target_ever, state.step_count, no_frontiers)
    if negative:
        spl = 0.0
    else:
        spl = compute_spl(success, max(shortest, SPL_SHORTEST_FLOOR), state.path_length_so_far)
    reachable = reachable_free_mask(world, world_to_cell(*start.xz, world.resolution))
    seen = (belief.cells == FREE) & reachable
    coverage = float(seen.sum() / max(int(reachable.sum()), 1))
    end = {
        "type": "end",
        "success": success,
        "steps": state.step_count,
        "failure_mode": failure,
        "stopped": state.stopped,
        "coverage": coverage,
    }
    lines.append(json.dumps(end, sort_keys=True))
    if events is not None:
        events.append(end)
    if log_path is not None:
        FsPath(log_path).parent.mkdir(parents=True, exist_ok=True)
        FsPath(log_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EpisodeResult(
        **base,
        success=success,
        steps=state.step_count,
        agent_path_length=state.path_length_so_far,
        shortest_path_length=shortest,
        spl=spl,
        failure_mode=failure,
        trajectory=trajectory,
        event_log=str(log_path) if log_path is not None else None,
        excluded=negative,
        exclusion_reason="negative_control" if negative else None,
        stopped=state.stopped,
        has_target_ever=manager.state.has_target_ever,
        coverage=coverage,
        log_digest=_digest_lines(lines),
        events=events,
    )


# -- suites --------------------------------------------------------------------


START_ATTEMPTS = 200


def make_suite(
    seeds,
    scorer: str = "oracle",
    world_params: dict | None = None,
    max_steps: int = 500,
    prefix: str = "ep",
    min_start_distance: float = 0.0,
):
    """One episode per seed: the world from the seed, a goal drawn from its objects.

    With ``min_start_distance`` > 0 start poses are redrawn until the geodesic
    distance to the success region is at least that long; seeds that never
    give such a start are skipped.
    """
    episodes = []
    config = NavConfig()
    for seed in seeds:
        world = generate_world(seed, **(world_params or {}))
        rng = np.random.default_rng([seed, 2])
        labels = world.labels()
        goal = labels[int(rng.integers(len(labels)))] if labels else "bed"
        start = None
        if min_start_distance > 0 and world.matching_objects(goal):
            start_rng = np.random.default_rng([seed, 1])
            field_, _ = goal_distance_field(world, goal)
            for _ in range(START_ATTEMPTS):
                pose = sample_start_pose(world, start_rng, config.turn_angle)
                d = float(field_[world_to_cell(*pose.xz, world.resolution)])
                if math.isfinite(d) and d >= min_start_distance:
                    start = pose
                    break
            else:
                continue
        episodes.append(
            Episode(
                start_pose=start, goal=goal, scorer=scorer, max_steps=max_steps, world=world,
                world_seed=seed, world_params=dict(world_params or {}), episode_id=f"{prefix}{seed:04d}",
            )
        )
    return episodes


def is_feasible(episode: Episode, config: NavConfig | None = None) -> bool:
    config = config or NavConfig()
    world = episode.resolve_world()
    if not world.matching_objects(episode.goal):
        return False
    shortest, _ = shortest_path_to_goal(world, episode.resolve_start(world, config), episode.goal)
    return math.isfinite(shortest)


def load_manifest(path) -> list[Episode]:
    path = FsPath(path)
    episodes = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}:{lineno}: {exc}") from None
        episodes.append(Episode.from_dict(row, base_dir=path.parent))
    return episodes


def save_manifest(episodes, path) -> None:
    FsPath(path).write_text("".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in episodes), encoding="utf-8")


def write_results(results, path) -> None:
    FsPath(path).write_text("".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in results), encoding="utf-8")


def read_results(path) -> list[EpisodeResult]:
    return [EpisodeResult.from_dict(json.loads(line)) for line in FsPath(path).read_text(encoding="utf-8").splitlines() if line.strip()]


def _run_one(args):
    episode, config, log_dir, scorer_options = args
    log_path = None
    if log_dir is not None:
        log_path = FsPath(log_dir) / f"{episode.episode_id or 'episode'}.jsonl"
    return run_episode(episode, config, log_path=log_path, scorer_options=scorer_options)


def run_suite(episodes, config: NavConfig | None = None, workers: int = 1, log_dir=None, scorer_options=None):
    """Run episodes, in worker processes when ``workers > 1``; order is preserved
    and results do not depend on the worker count."""
    config = config or NavConfig()
    jobs = [(e, config, log_dir, scorer_options) for e in episodes]
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))
