"""Frontier scorers and presence verifiers."""

from __future__ import annotations

import math
from typing import Protocol

import numpy as np

from ..errors import ConfigurationError, ResponseParseError
from ..gridworld import NO_INSTANCE, Observation, WorldSpec, label_matches, world_to_cell
from ..planner import geodesic_field
from .marks import assign_labels, render_raster
from .prompts import (
    UNSEEN_PROBABILITY,
    build_frontier_prompt,
    build_presence_prompt,
    parse_frontier_response,
    parse_presence_response,
)

P_FLOOR = 0.05
P_CEIL = 0.95
PRESENCE_RANGE = 5.0


class SemanticScorer(Protocol):
    def score_frontiers(self, obs: Observation | None, frontiers, goal: str) -> dict: ...

    def verify_presence(self, obs: Observation | None, goal: str) -> float: ...


def ground_truth_presence(world: WorldSpec, obs: Observation | None, goal: str, max_range: float = PRESENCE_RANGE) -> float:
    """0.95 when a column of ``obs`` hits a goal instance within range, else 0.05."""
    if obs is None:
        return P_FLOOR
    labels = {o.instance_id: o.label for o in world.objects}
    for inst, depth in zip(obs.instance_ids, obs.depths):
        inst = int(inst)
        if inst != NO_INSTANCE and depth <= max_range and label_matches(labels.get(inst, ""), goal):
            return P_CEIL
    return P_FLOOR


class ConstantScorer:
    """Every frontier gets 0.5, leaving selection to gain over distance."""

    name = "constant"

    def __init__(self, world: WorldSpec | None = None, value: float = UNSEEN_PROBABILITY):
        self.world = world
        self.value = value

    def score_frontiers(self, obs, frontiers, goal):
        return {f.id: self.value for f in frontiers}

    def verify_presence(self, obs, goal):
        if self.world is None:
            return P_FLOOR
        return ground_truth_presence(self.world, obs, goal)


def constant_score(*_args, **_kwargs) -> float:
    return UNSEEN_PROBABILITY


class OracleScorer:
    """Probability falling linearly with full-map geodesic distance to the
    nearest goal instance, clamped to [0.05, 0.95]."""

    name = "oracle"

    def __init__(self, world: WorldSpec):
        self.world = world
        self._fields: dict[str, np.ndarray] = {}

    def distance_field(self, goal: str) -> np.ndarray:
        if goal not in self._fields:
            objs = self.world.matching_objects(goal)
            if not objs:
                raise ConfigurationError(f"no instance of {goal!r} in the world")
            sources = sorted(c for o in objs for c in o.cells)
            self._fields[goal] = geodesic_field(self.world.grid, sources, self.world.resolution)
        return self._fields[goal]

    def geodesic_to_goal(self, frontier, goal: str) -> float:
        field = self.distance_field(goal)
        h, w = field.shape
        x, _, z = getattr(frontier, "centroid_world", None) or frontier.position
        cell = world_to_cell(x, z, self.world.resolution)
        if 0 <= cell[0] < h and 0 <= cell[1] < w and math.isfinite(field[cell]):
            return float(field[cell])
        members = [field[c] for c in getattr(frontier, "member_cells", ()) if 0 <= c[0] < h and 0 <= c[1] < w]
        return float(min(members)) if members else math.inf

    def score(self, frontier, goal: str) -> float:
        d = self.geodesic_to_goal(frontier, goal)
        if not math.isfinite(d):
            return P_FLOOR
        return min(P_CEIL, max(P_FLOOR, 1.0 - d / self.world.diagonal))

    def score_frontiers(self, obs, frontiers, goal):
        return {f.id: self.score(f, goal) for f in frontiers}

    def verify_presence(self, obs, goal):
        return ground_truth_presence(self.world, obs, goal)


def oracle_score(world: WorldSpec, frontier, goal: str) -> float:
    return OracleScorer(world).score(frontier, goal)


class VLMScorer:
    """Set-of-marks queries to a remote model through a :class:`VLMClient`."""

    name = "vlm"

    def __init__(self, client, radius: int | None = None):
        self.client = client
        self.radius = radius
        self.last_prompt = None
        self.last_reply = None

    def score_frontiers(self, obs, frontiers, goal):
        if obs is None:
            return {}
        visible = [f for f in frontiers if f.pixel_centroid is not None]
        if not visible:
            return {}
        marks = assign_labels(visible)
        kwargs = {} if self.radius is None else {"radius": self.radius}
        image = render_raster(obs, marks, **kwargs)
        self.last_prompt = build_frontier_prompt(marks.labels, goal)
        self.last_reply = self.client.complete(self.last_prompt, image)
        try:
            parsed = parse_frontier_response(self.last_reply, marks.labels)
        except ResponseParseError:
            parsed = {label: (UNSEEN_PROBABILITY, "default") for label in marks.labels}
        return {m.frontier_id: parsed[m.label][0] for m in marks}

    def verify_presence(self, obs, goal):
        if obs is None:
            return 0.0
        image = render_raster(obs)
        self.last_prompt = build_presence_prompt(goal)
        self.last_reply = self.client.complete(self.last_prompt, image)
        return parse_presence_response(self.last_reply)
