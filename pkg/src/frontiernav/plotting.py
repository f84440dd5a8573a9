"""Top-down SVG figures of an episode, rebuilt from its event log."""

from __future__ import annotations

import json
from pathlib import Path as FsPath

import numpy as np

from .errors import PlotInputError
from .gridworld import OCCUPIED, WorldSpec, success_region, world_digest

CELL_PX = 4
_LOW = (49, 54, 149)  # g = 0
_HIGH = (215, 48, 39)  # g = 1
_KIND_SHAPE = {"e": "circle", "v": "diamond", "r": "square"}


def read_event_log(path) -> list[dict]:
    lines = FsPath(path).read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]


def utility_color(g: float) -> str:
    t = min(max(float(g), 0.0), 1.0)
    r, gr, b = (round(lo + (hi - lo) * t) for lo, hi in zip(_LOW, _HIGH))
    return f"#{r:02x}{gr:02x}{b:02x}"


def _runs(mask: np.ndarray):
    """Horizontal runs ``(row, col_start, length)`` of True cells."""
    for r in range(mask.shape[0]):
        row = mask[r]
        c = 0
        w = row.shape[0]
        while c < w:
            if row[c]:
                start = c
                while c < w and row[c]:
                    c += 1
                yield r, start, c - start
            else:
                c += 1


def _num(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def episode_layers(events: list[dict]) -> dict:
    """Pull the plotted quantities out of a log.

    Frontiers keep the state of their last appearance in an ``active`` list.
    """
    header = next((e for e in events if e.get("type") == "header"), None)
    ticks = [e for e in events if e.get("type") == "tick"]
    trajectory = [tuple(e["p_r"]) for e in ticks if "p_r" in e]
    frontiers: dict = {}
    cleared = []
    for e in ticks:
        for fid, kind, x, z, g in e.get("active", []):
            frontiers[fid] = (kind, x, z, g)
        for point in e.get("cleared_added", []):
            cleared.append((point[0], point[2]))
    return {
        "header": header,
        "trajectory": trajectory,
        "frontiers": dict(sorted(frontiers.items())),
        "cleared": cleared,
    }


def trajectory_svg(world: WorldSpec, events: list[dict] = (), cell_px: int = CELL_PX) -> str:
    """Occupancy, success region, trajectory, start, frontiers coloured by
    utility and cleared points as one SVG document.

    Raises :class:`PlotInputError` when the log belongs to another world.
    """
    layers = episode_layers(list(events))
    header = layers["header"]
    if header is not None and header.get("world_digest") not in (None, world_digest(world)):
        raise PlotInputError("event log was recorded in a different world")
    res = world.resolution
    h, w = world.grid.shape
    scale = cell_px / res

    def px(x, z):
        return _num(x * scale), _num(z * scale)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * cell_px}" height="{h * cell_px}" '
        f'viewBox="0 0 {w * cell_px} {h * cell_px}">',
        f'<rect x="0" y="0" width="{w * cell_px}" height="{h * cell_px}" fill="#ffffff"/>',
        '<g id="occupancy" fill="#404040">',
    ]
    for r, c, n in _runs(world.grid == OCCUPIED):
        out.append(f'<rect x="{c * cell_px}" y="{r * cell_px}" width="{n * cell_px}" height="{cell_px}"/>')
    out.append("</g>")

    goal = header.get("goal") if header else None
    if goal and world.matching_objects(goal):
        out.append('<g id="success-region" fill="#4daf4a" fill-opacity="0.35">')
        for r, c, n in _runs(success_region(world, goal)):
            out.append(f'<rect x="{c * cell_px}" y="{r * cell_px}" width="{n * cell_px}" height="{cell_px}"/>')
        out.append("</g>")

    traj = layers["trajectory"]
    for x, z in ((p[0], p[-1]) for p in traj):
        if not (0 <= x <= w * res and 0 <= z <= h * res):
            raise PlotInputError(f"trajectory point ({x}, {z}) lies outside the world")
    if len(traj) > 1:
        pts = " ".join(",".join(px(p[0], p[-1])) for p in traj)
        out.append(f'<polyline id="trajectory" points="{pts}" fill="none" stroke="#1f78b4" stroke-width="1.5"/>')

    start = header.get("start") if header else (traj[0] if traj else None)
    if start is not None:
        sx, sz = px(start[0], start[1] if header else start[-1])
        out.append(f'<circle id="start" cx="{sx}" cy="{sz}" r="{cell_px * 1.5:g}" fill="#000000"/>')

    out.append('<g id="cleared" stroke="#777777" stroke-width="1">')
    a = cell_px
    for x, z in layers["cleared"]:
        cx, cz = (float(v) for v in px(x, z))
        out.append(
            f'<path d="M{_num(cx - a)},{_num(cz - a)}L{_num(cx + a)},{_num(cz + a)}'
            f'M{_num(cx - a)},{_num(cz + a)}L{_num(cx + a)},{_num(cz - a)}"/>'
        )
    out.append("</g>")

    out.append('<g id="frontiers" stroke="#000000" stroke-width="0.5">')
    for fid, (kind, x, z, g) in layers["frontiers"].items():
        cx, cz = px(x, z)
        color = utility_color(g)
        shape = _KIND_SHAPE.get(kind, "circle")
        if shape == "circle":
            out.append(f'<circle data-id="{fid}" cx="{cx}" cy="{cz}" r="{a}" fill="{color}"/>')
        elif shape == "square":
            out.append(
                f'<rect data-id="{fid}" x="{_num(float(cx) - a)}" y="{_num(float(cz) - a)}" '
                f'width="{2 * a}" height="{2 * a}" fill="{color}"/>'
            )
        else:
            fx, fz = float(cx), float(cz)
            pts = f"{_num(fx)},{_num(fz - a * 1.5)} {_num(fx + a * 1.5)},{_num(fz)} {_num(fx)},{_num(fz + a * 1.5)} {_num(fx - a * 1.5)},{_num(fz)}"
            out.append(f'<polygon data-id="{fid}" points="{pts}" fill="{color}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(world: WorldSpec, events, path, cell_px: int = CELL_PX) -> None:
    FsPath(path).write_text(trajectory_svg(world, events, cell_px), encoding="utf-8")
