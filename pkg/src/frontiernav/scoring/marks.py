"""Set-of-marks labelling and the synthetic camera raster the marks are drawn on."""

from __future__ import annotations

import string
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..gridworld import NO_INSTANCE, Observation

MAX_MARKS = 26
MARK_RADIUS = 6
WALL_HEIGHT = 1.0  # meters above and below the optical axis drawn as wall

SKY = (180, 200, 220)
FLOOR = (120, 110, 100)
WALL = (200, 200, 190)
MARK_FILL = (255, 215, 0)
MARK_INK = (0, 0, 0)
_PALETTE = (
    (220, 60, 60), (60, 160, 70), (70, 90, 220), (230, 140, 30),
    (160, 70, 200), (40, 170, 180), (200, 80, 150), (130, 130, 40),
)

# 5x7 capitals, one string of five bits per row
_GLYPHS = {
    "A": ("01110", "10001", "10001", "11111", "10001", "10001", "10001"),
    "B": ("11110", "10001", "10001", "11110", "10001", "10001", "11110"),
    "C": ("01110", "10001", "10000", "10000", "10000", "10001", "01110"),
    "D": ("11110", "10001", "10001", "10001", "10001", "10001", "11110"),
    "E": ("11111", "10000", "10000", "11110", "10000", "10000", "11111"),
    "F": ("11111", "10000", "10000", "11110", "10000", "10000", "10000"),
    "G": ("01110", "10001", "10000", "10111", "10001", "10001", "01111"),
    "H": ("10001", "10001", "10001", "11111", "10001", "10001", "10001"),
    "I": ("01110", "00100", "00100", "00100", "00100", "00100", "01110"),
    "J": ("00111", "00010", "00010", "00010", "00010", "10010", "01100"),
    "K": ("10001", "10010", "10100", "11000", "10100", "10010", "10001"),
    "L": ("10000", "10000", "10000", "10000", "10000", "10000", "11111"),
    "M": ("10001", "11011", "10101", "10101", "10001", "10001", "10001"),
    "N": ("10001", "10001", "11001", "10101", "10011", "10001", "10001"),
    "O": ("01110", "10001", "10001", "10001", "10001", "10001", "01110"),
    "P": ("11110", "10001", "10001", "11110", "10000", "10000", "10000"),
    "Q": ("01110", "10001", "10001", "10001", "10101", "10010", "01101"),
    "R": ("11110", "10001", "10001", "11110", "10100", "10010", "10001"),
    "S": ("01111", "10000", "10000", "01110", "00001", "00001", "11110"),
    "T": ("11111", "00100", "00100", "00100", "00100", "00100", "00100"),
    "U": ("10001", "10001", "10001", "10001", "10001", "10001", "01110"),
    "V": ("10001", "10001", "10001", "10001", "10001", "01010", "00100"),
    "W": ("10001", "10001", "10001", "10101", "10101", "10101", "01010"),
    "X": ("10001", "10001", "01010", "00100", "01010", "10001", "10001"),
    "Y": ("10001", "10001", "01010", "00100", "00100", "00100", "00100"),
    "Z": ("11111", "00001", "00010", "00100", "01000", "10000", "11111"),
}


@dataclass(frozen=True)
class Mark:
    label: str
    frontier_id: int
    pixel_centroid: tuple[float, float]


@dataclass(frozen=True)
class MarkedFrontierSet:
    marks: tuple[Mark, ...] = ()

    def __len__(self):
        return len(self.marks)

    def __iter__(self):
        return iter(self.marks)

    @property
    def labels(self) -> list[str]:
        return [m.label for m in self.marks]

    def frontier_for(self, label: str) -> int:
        for m in self.marks:
            if m.label == label:
                return m.frontier_id
        raise KeyError(label)


def assign_labels(visible, ids=None) -> MarkedFrontierSet:
    """Letter the frontiers left to right by pixel column.

    ``visible`` holds items with ``pixel_centroid`` and ``gain_raw``; ids come
    from ``ids``, an ``id`` attribute, or the position in the list. Past 26
    items the ones with the lowest raw gain are left out.
    """
    items = []
    for k, f in enumerate(visible):
        fid = ids[k] if ids is not None else getattr(f, "id", k)
        items.append((k, fid, f))
    if len(items) > MAX_MARKS:
        items.sort(key=lambda t: (-t[2].gain_raw, t[2].pixel_centroid[0], t[0]))
        items = items[:MAX_MARKS]
    items.sort(key=lambda t: (t[2].pixel_centroid[0], t[0]))
    letters = string.ascii_uppercase
    return MarkedFrontierSet(
        tuple(Mark(letters[i], fid, tuple(f.pixel_centroid)) for i, (_, fid, f) in enumerate(items))
    )


def _shade(color, depth: float, max_depth: float):
    k = 1.0 - 0.6 * min(depth, max_depth) / max_depth
    return tuple(int(round(c * k)) for c in color)


def render_base(obs: Observation) -> np.ndarray:
    """Height x width x 3 image from the column scan: sky, depth-shaded wall
    band, floor; columns that hit an object take its palette colour."""
    cam = obs.camera
    img = np.empty((cam.height, cam.width, 3), dtype=np.uint8)
    img[: cam.height // 2] = SKY
    img[cam.height // 2 :] = FLOOR
    for u in range(cam.width):
        d = float(obs.depths[u])
        half = min(cam.height / 2.0, cam.fy * WALL_HEIGHT / max(d, 1e-6) / 2.0)
        top = int(round(cam.cy - half))
        bottom = int(round(cam.cy + half))
        inst = int(obs.instance_ids[u])
        base = WALL if inst == NO_INSTANCE else _PALETTE[inst % len(_PALETTE)]
        if d >= cam.max_depth and inst == NO_INSTANCE:
            continue
        img[max(top, 0) : min(bottom, cam.height), u] = _shade(base, d, cam.max_depth)
    return img


def _draw_letter(img: np.ndarray, letter: str, cx: int, cy: int) -> None:
    glyph = _GLYPHS[letter]
    h, w = img.shape[:2]
    for dy, row in enumerate(glyph):
        for dx, bit in enumerate(row):
            if bit == "1":
                y, x = cy - 3 + dy, cx - 2 + dx
                if 0 <= y < h and 0 <= x < w:
                    img[y, x] = MARK_INK


def render_raster(obs: Observation, marks: MarkedFrontierSet = MarkedFrontierSet(), radius: int = MARK_RADIUS) -> np.ndarray:
    """Base raster with each mark drawn as a filled disc carrying its letter."""
    img = render_base(obs)
    h, w = img.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w]
    for mark in marks:
        cx = int(round(mark.pixel_centroid[0]))
        cy = int(round(mark.pixel_centroid[1]))
        img[(xx - cx) ** 2 + (yy - cy) ** 2 <= radius * radius] = MARK_FILL
        _draw_letter(img, mark.label, cx, cy)
    return img


def encode_ppm(img: np.ndarray) -> bytes:
    """Binary PPM (P6), 8 bits per channel."""
    h, w = img.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def decode_ppm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6" or parts[2] != b"255":
        raise ValueError("not an 8-bit binary PPM")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3).copy()


def write_ppm(img: np.ndarray, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_ppm(img))


def encode_png(img: np.ndarray) -> bytes:
    """Minimal truecolour PNG, for providers that do not accept PPM."""
    h, w = img.shape[:2]
    raw = b"".join(b"\x00" + np.ascontiguousarray(img[r], dtype=np.uint8).tobytes() for r in range(h))

    def chunk(tag: bytes, payload: bytes) -> bytes:
        return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)

    header = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    return b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", header) + chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b"")
