"""Frontier extraction and information-gain estimation on a belief grid.

This is the classical grid detector; anything with a ``detect(belief, obs)``
method returning :class:`FrontierProposal` objects can replace it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy import ndimage

from .geometry import CameraModel, Pose
from .gridworld import FREE, UNKNOWN, BeliefGrid, Observation

_EIGHT = ndimage.generate_binary_structure(2, 2)


@dataclass(frozen=True)
class FrontierProposal:
    centroid_world: tuple[float, float, float]
    member_cells: frozenset
    gain_raw: float
    pixel_centroid: tuple[float, float] | None = None
    observed_at_step: int = 0


class FrontierKind(str, enum.Enum):
    EXPLORATION = "exploration"
    VIEWPOINT = "viewpoint"
    ROTATION = "rotation"


@dataclass(frozen=True)
class Frontier:
    """A managed navigation subgoal.

    ``gain`` is derived, never stored: the semantic probability times the raw
    gain, except for rotation frontiers which always carry gain 1.
    """

    id: int
    kind: FrontierKind
    pose: Pose
    gain_raw: float
    semantic_prob: float = 0.5
    linked_object: int | None = None
    pixel_centroid: tuple[float, float] | None = None
    created_step: int = 0
    last_updated: int = 0
    priority: bool = False
    member_cells: frozenset = frozenset()
    frame: tuple | None = field(default=None, compare=False)

    @property
    def gain(self) -> float:
        if self.kind is FrontierKind.ROTATION:
            return 1.0
        return self.semantic_prob * self.gain_raw

    @property
    def position(self) -> tuple[float, float, float]:
        return self.pose.position


class FrontierDetector(Protocol):
    def detect(self, belief: BeliefGrid, obs: Observation) -> list[FrontierProposal]: ...


def frontier_mask(belief: BeliefGrid) -> np.ndarray:
    """FREE cells with at least one UNKNOWN 4-neighbour inside the grid."""
    unknown = belief.cells == UNKNOWN
    near = np.zeros_like(unknown)
    near[1:, :] |= unknown[:-1, :]
    near[:-1, :] |= unknown[1:, :]
    near[:, 1:] |= unknown[:, :-1]
    near[:, :-1] |= unknown[:, 1:]
    return (belief.cells == FREE) & near


def _centroid(cells, resolution: float, height: float = 0.0) -> tuple[float, float, float]:
    arr = np.array(sorted(cells), dtype=float)
    x = float(np.mean(arr[:, 1] + 0.5) * resolution)
    z = float(np.mean(arr[:, 0] + 0.5) * resolution)
    return (x, height, z)


def gain_at(belief: BeliefGrid, x: float, z: float, r_gain: float) -> float:
    """Fraction of in-grid cells with centres within ``r_gain`` of ``(x, z)`` that are UNKNOWN."""
    res = belief.resolution
    h, w = belief.shape
    r0 = max(0, int(math.floor((z - r_gain) / res)))
    r1 = min(h, int(math.floor((z + r_gain) / res)) + 1)
    c0 = max(0, int(math.floor((x - r_gain) / res)))
    c1 = min(w, int(math.floor((x + r_gain) / res)) + 1)
    if r0 >= r1 or c0 >= c1:
        return 0.0
    zs = (np.arange(r0, r1) + 0.5) * res - z
    xs = (np.arange(c0, c1) + 0.5) * res - x
    disc = zs[:, None] ** 2 + xs[None, :] ** 2 <= r_gain * r_gain
    total = int(disc.sum())
    if total == 0:
        return 0.0
    unknown = int((disc & (belief.cells[r0:r1, c0:c1] == UNKNOWN)).sum())
    return unknown / total


def estimate_info_gain(cluster: FrontierProposal, belief: BeliefGrid, r_gain: float = 2.0) -> float:
    x, _, z = cluster.centroid_world
    return gain_at(belief, x, z, r_gain)


def extract_frontiers(
    belief: BeliefGrid, min_cluster_cells: int = 3, r_gain: float = 2.0, step: int = 0
) -> list[FrontierProposal]:
    """8-connected clusters of frontier cells, in raster order of their first cell."""
    mask = frontier_mask(belief)
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return []
    proposals = []
    rows, cols = np.nonzero(labels)
    order = np.argsort(labels[rows, cols], kind="stable")
    rows, cols = rows[order], cols[order]
    bounds = np.searchsorted(labels[rows, cols], np.arange(1, n + 2))
    for k in range(n):
        lo, hi = bounds[k], bounds[k + 1]
        if hi - lo < min_cluster_cells:
            continue
        cells = frozenset(zip(rows[lo:hi].tolist(), cols[lo:hi].tolist()))
        centroid = _centroid(cells, belief.resolution)
        gain = gain_at(belief, centroid[0], centroid[2], r_gain)
        proposals.append(FrontierProposal(centroid, cells, gain, None, step))
    proposals.sort(key=lambda p: min(p.member_cells))
    return proposals


def project_to_observation(
    proposal: FrontierProposal, obs: Observation, camera: CameraModel | None = None, resolution: float = 0.1
):
    """Image position ``(u, v)`` of the frontier centroid, or ``None`` when it is
    behind the camera, outside the field of view, beyond range or occluded."""
    camera = camera or obs.camera
    pose = obs.camera_pose
    x, _, z = proposal.centroid_world
    point = np.array([x, pose.position[1], z]) - np.asarray(pose.position)
    cam = pose.rotation().T @ point
    if cam[2] <= 1e-9 or cam[2] > camera.max_depth:
        return None
    u = camera.fx * cam[0] / cam[2] + camera.cx
    if not 0.0 <= u < camera.width:
        return None
    col = min(int(round(u)), camera.width - 1)
    if obs.depths[col] + resolution < cam[2]:
        return None
    return (float(u), float(camera.cy))


class GridFrontierDetector:
    """Frontier proposals from the belief grid, annotated with image positions."""

    def __init__(self, min_cluster_cells: int = 3, r_gain: float = 2.0):
        self.min_cluster_cells = min_cluster_cells
        self.r_gain = r_gain

    def detect(self, belief: BeliefGrid, obs: Observation) -> list[FrontierProposal]:
        out = []
        for prop in extract_frontiers(belief, self.min_cluster_cells, self.r_gain, obs.step_index):
            pix = project_to_observation(prop, obs, obs.camera, belief.resolution)
            out.append(FrontierProposal(prop.centroid_world, prop.member_cells, prop.gain_raw, pix, obs.step_index))
        return out


__all__ = [
    "Frontier",
    "FrontierKind",
    "FrontierProposal",
    "FrontierDetector",
    "GridFrontierDetector",
    "frontier_mask",
    "extract_frontiers",
    "estimate_info_gain",
    "gain_at",
    "project_to_observation",
]
