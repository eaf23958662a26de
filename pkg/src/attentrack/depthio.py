"""Depth-frame container plus file I/O.

Frames are stored on disk as binary 16-bit PGM (P5, maxval 65535,
big-endian), one millimeter per gray level, 0 marking an invalid pixel.
A sequence is described by a manifest: one `filename<TAB>timestamp_s`
line per frame, in playback order.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionMismatchError


@dataclass
class DepthFrame:
    depth_mm: np.ndarray  # (height, width) uint16, millimeters
    frame_index: int
    timestamp_s: float

    @property
    def width(self):
        return self.depth_mm.shape[1]

    @property
    def height(self):
        return self.depth_mm.shape[0]


@dataclass
class BackgroundModel:
    depth_mm: np.ndarray  # (height, width), empty-scene depths

    def check_shape(self, frame):
        if self.depth_mm.shape != frame.depth_mm.shape:
            raise DimensionMismatchError(
                f"background {self.depth_mm.shape} vs frame "
                f"{frame.depth_mm.shape}")


def write_pgm16(path, depth_mm):
    """Write a depth image as binary 16-bit PGM."""
    arr = np.asarray(depth_mm)
    if arr.ndim != 2:
        raise DataError("depth image must be 2-D")
    arr = np.clip(np.rint(arr), 0, 65535).astype(">u2")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        f.write(arr.tobytes())


def read_pgm16(path):
    """Read a binary 16-bit PGM depth image (big-endian sample order)."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise DataError(f"cannot read depth frame {path}: {exc}")
    try:
        if not data.startswith(b"P5"):
            raise DataError(f"{path}: not a binary PGM (P5) file")
        # Header: magic, width, height, maxval; '#' comments allowed.
        tokens = []
        pos = 2
        while len(tokens) < 3:
            while pos < len(data) and data[pos:pos + 1].isspace():
                pos += 1
            if data[pos:pos + 1] == b"#":
                while pos < len(data) and data[pos] != 0x0A:
                    pos += 1
                continue
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace():
                pos += 1
            tokens.append(int(data[start:pos]))
        pos += 1  # single whitespace after maxval
        w, h, maxval = tokens
        if maxval != 65535:
            raise DataError(f"{path}: expected 16-bit PGM (maxval 65535), "
                            f"got {maxval}")
        raw = data[pos:pos + 2 * w * h]
        if len(raw) != 2 * w * h:
            raise DataError(f"{path}: truncated pixel data")
        return np.frombuffer(raw, dtype=">u2").reshape(h, w).astype(np.uint16)
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: corrupt PGM header: {exc}")


MANIFEST_NAME = "manifest.txt"


def write_manifest(path, entries):
    """Write `(filename, timestamp_s)` pairs, one per line, tab separated."""
    with open(path, "w", encoding="utf-8") as f:
        for name, ts in entries:
            f.write(f"{name}\t{ts:.6f}\n")


def read_manifest(path):
    """Read a frame manifest; returns [(filename, timestamp_s)]."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [ln.strip() for ln in f if ln.strip()]
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}")
    entries = []
    last_ts = None
    for ln in lines:
        parts = ln.split("\t")
        if len(parts) != 2:
            raise DataError(f"{path}: malformed manifest line {ln!r}")
        try:
            ts = float(parts[1])
        except ValueError:
            raise DataError(f"{path}: bad timestamp in line {ln!r}")
        if last_ts is not None and ts <= last_ts:
            raise DataError(f"{path}: timestamps must be strictly increasing")
        last_ts = ts
        entries.append((parts[0], ts))
    return entries


def load_sequence(frames_dir):
    """Yield DepthFrame objects for a manifest-described directory."""
    manifest = os.path.join(frames_dir, MANIFEST_NAME)
    entries = read_manifest(manifest)
    for idx, (name, ts) in enumerate(entries):
        depth = read_pgm16(os.path.join(frames_dir, name))
        yield DepthFrame(depth_mm=depth, frame_index=idx, timestamp_s=ts)
