"""Goal-object hypotheses from segmentation masks, and viewpoint frontiers facing them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError
from .frontiers import Frontier, FrontierKind
from .geometry import UP, CameraModel, Pose, back_project
from .gridworld import NO_INSTANCE, Observation, WorldSpec, label_matches


@dataclass(frozen=True)
class Mask:
    """Image columns belonging to one segment, with the depth seen in each."""

    columns: tuple[int, ...]
    depths: tuple[float, ...]
    label: str = ""


class Segmenter(Protocol):
    def segment(self, obs: Observation, goal: str) -> list[Mask]: ...


class GroundTruthSegmenter:
    """Masks taken from the simulator's per-column instance ids."""

    def __init__(self, world: WorldSpec):
        self.world = world
        self._labels = {o.instance_id: o.label for o in world.objects}

    def segment(self, obs: Observation, goal: str) -> list[Mask]:
        groups: dict[int, list[int]] = {}
        for col, inst in enumerate(obs.instance_ids):
            inst = int(inst)
            if inst != NO_INSTANCE and label_matches(self._labels.get(inst, ""), goal):
                groups.setdefault(inst, []).append(col)
        return [
            Mask(tuple(cols), tuple(float(obs.depths[c]) for c in cols), self._labels[inst])
            for inst, cols in sorted(groups.items())
        ]


@dataclass(frozen=True)
class ObjectHypothesis:
    id: int
    centroid: tuple[float, float, float]
    support: int = 1
    label: str = ""


def dbscan(points, eps: float, min_pts: int = 1) -> list[int]:
    """Cluster labels for ``points`` (``-1`` marks noise); clusters numbered in
    order of their first core point."""
    n = len(points)
    if n == 0:
        return []
    pts = np.asarray(points, dtype=float).reshape(n, -1)
    labels = [None] * n
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
    neighbors = [np.nonzero(d2[i] <= eps * eps)[0].tolist() for i in range(n)]
    cluster = -1
    for i in range(n):
        if labels[i] is not None:
            continue
        if len(neighbors[i]) < min_pts:
            labels[i] = -1
            continue
        cluster += 1
        labels[i] = cluster
        queue = list(neighbors[i])
        while queue:
            j = queue.pop(0)
            if labels[j] == -1:
                labels[j] = cluster
            if labels[j] is not None:
                continue
            labels[j] = cluster
            if len(neighbors[j]) >= min_pts:
                queue.extend(neighbors[j])
    return labels


@dataclass
class Blocklist:
    """Centroids of discarded hypotheses, each suppressing re-detection until a step."""

    entries: list = field(default_factory=list)

    def add(self, centroid, until_step: int) -> None:
        self.entries.append((tuple(centroid), until_step))

    def blocks(self, centroid, step: int, eps: float) -> bool:
        return any(step < until and math.dist(c, centroid) <= eps for c, until in self.entries)


def mask_points(mask: Mask, obs: Observation, camera: CameraModel) -> np.ndarray:
    v = camera.cy
    return np.array([back_project((u, v), d, camera, obs.camera_pose) for u, d in zip(mask.columns, mask.depths)])


def detect_and_ground(
    obs: Observation,
    goal: str,
    segmenter: Segmenter,
    camera: CameraModel,
    hypotheses: list[ObjectHypothesis],
    blocklist: Blocklist | None = None,
    step: int = 0,
    eps: float = 1.0,
    min_pts: int = 1,
    agent_height: float | None = None,
    next_id: int | None = None,
) -> list[ObjectHypothesis]:
    """Add one centroid per mask, then re-cluster every hypothesis centroid.

    A merged hypothesis keeps the smallest member id; its centroid is the
    support-weighted mean of its members, i.e. the mean of every raw detection
    folded into it.
    """
    masks = [m for m in segmenter.segment(obs, goal) if m.columns]
    if not masks:
        return list(hypotheses)
    height = obs.camera_pose.position[1] if agent_height is None else agent_height
    members = list(hypotheses)
    if next_id is None:
        next_id = max((h.id for h in hypotheses), default=-1) + 1
    for mask in masks:
        pts = mask_points(mask, obs, camera)
        c = pts.mean(axis=0)
        centroid = (float(c[0]), float(height), float(c[2]))
        if blocklist is not None and blocklist.blocks(centroid, step, eps):
            continue
        members.append(ObjectHypothesis(next_id, centroid, 1, mask.label or goal))
        next_id += 1
    if len(members) == len(hypotheses):
        return list(hypotheses)
    labels = dbscan([m.centroid for m in members], eps, min_pts)
    clusters: dict[int, list[ObjectHypothesis]] = {}
    out = []
    for lab, m in zip(labels, members):
        if lab == -1:
            out.append(m)
        else:
            clusters.setdefault(lab, []).append(m)
    for group in clusters.values():
        support = sum(m.support for m in group)
        mean = np.sum([np.asarray(m.centroid) * m.support for m in group], axis=0) / support
        first = min(group, key=lambda m: m.id)
        out.append(ObjectHypothesis(first.id, tuple(float(v) for v in mean), support, first.label))
    return sorted(out, key=lambda h: h.id)


@dataclass(frozen=True)
class ViewpointPose:
    frame: np.ndarray  # columns f_x, f_y, f_z
    position: tuple[float, float, float]
    linked_object: int | None = None

    @property
    def heading(self) -> float:
        fz = self.frame[:, 2]
        return math.atan2(fz[0], fz[2])

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous transform ``[f_x f_y f_z p_f; 0 0 0 1]``."""
        out = np.eye(4)
        out[:3, :3] = self.frame
        out[:3, 3] = self.position
        return out


def make_viewpoint_frontier(x_i, p_r, r_sep: float, linked_object: int | None = None) -> ViewpointPose:
    """Pose ``r_sep`` in front of ``x_i`` on the line from the robot, facing it."""
    x_i = np.asarray(x_i, dtype=float)
    p_r = np.asarray(p_r, dtype=float)
    offset = x_i - p_r
    dist = float(np.linalg.norm(offset))
    if dist <= 1e-6:
        raise InvalidInputError("object and robot positions coincide")
    f_z = offset / dist
    cross = np.cross(UP, f_z)
    norm = float(np.linalg.norm(cross))
    if norm < 1e-9:
        raise DegenerateGeometryError("viewing direction is parallel to world-up")
    f_x = cross / norm
    fy = np.cross(f_z, f_x)
    f_y = fy / np.linalg.norm(fy)
    p_f = x_i - r_sep * f_z
    return ViewpointPose(np.column_stack([f_x, f_y, f_z]), tuple(float(v) for v in p_f), linked_object)


def promote_to_frontier(hypothesis: ObjectHypothesis, p_r, r_sep: float, frontier_id: int, step: int = 0) -> Frontier:
    """Priority frontier at the viewpoint facing ``hypothesis``."""
    centroid = (hypothesis.centroid[0], p_r[1], hypothesis.centroid[2])
    vp = make_viewpoint_frontier(centroid, p_r, r_sep, hypothesis.id)
    return Frontier(
        id=frontier_id,
        kind=FrontierKind.VIEWPOINT,
        pose=Pose(vp.position, vp.heading),
        gain_raw=1.0,
        semantic_prob=1.0,
        linked_object=hypothesis.id,
        created_step=step,
        last_updated=step,
        priority=True,
        frame=tuple(map(tuple, vp.frame)),
    )


class HypothesisTracker:
    """Owns the hypothesis list and the discard blocklist for one episode."""

    def __init__(self, eps: float = 1.0, cooldown: int = 100, min_pts: int = 1):
        self.eps = eps
        self.cooldown = cooldown
        self.min_pts = min_pts
        self.hypotheses: list[ObjectHypothesis] = []
        self.blocklist = Blocklist()
        self._next_id = 0

    def update(self, obs: Observation, goal: str, segmenter: Segmenter, camera: CameraModel, step: int):
        before = {h.id for h in self.hypotheses}
        self.hypotheses = detect_and_ground(
            obs, goal, segmenter, camera, self.hypotheses, self.blocklist, step, self.eps, self.min_pts,
            next_id=self._next_id,
        )
        self._next_id = max([self._next_id] + [h.id + 1 for h in self.hypotheses])
        return [h for h in self.hypotheses if h.id not in before]

    def get(self, hyp_id: int) -> ObjectHypothesis | None:
        for h in self.hypotheses:
            if h.id == hyp_id:
                return h
        return None

    def discard(self, hyp_id: int, step: int) -> None:
        hyp = self.get(hyp_id)
        if hyp is None:
            return
        self.blocklist.add(hyp.centroid, step + self.cooldown)
        self.hypotheses = [h for h in self.hypotheses if h.id != hyp_id]
