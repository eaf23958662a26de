"""Room geometry, camera model, sign layout and pipeline parameters.

Room coordinates: the floor rectangle [0, width_m] x [0, depth_m] in meters.
Walls are named S (y = 0), N (y = depth_m), W (x = 0), E (x = width_m);
offsets along a wall are measured from its lower-coordinate end (x for S/N,
y for W/E).  The camera is ceiling mounted, nadir pointing and axis aligned
with the room; depth values are vertical distances from the camera plane.
"""

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

WALLS = ("S", "E", "N", "W")

# Tallest person the camera must clear (meters).
MAX_PERSON_HEIGHT_M = 2.0


@dataclass(frozen=True)
class RoomModel:
    width_m: float
    depth_m: float
    camera_position: tuple  # (x, y) on the floor plane, meters
    camera_height_m: float
    focal_px: float
    principal_point: tuple  # (u0, v0) pixels
    image_size: tuple  # (width, height) pixels
    camera_yaw: float = 0.0  # camera aligned with the room

    def __post_init__(self):
        if self.width_m <= 0:
            raise ConfigError("width_m must be positive", field="width_m")
        if self.depth_m <= 0:
            raise ConfigError("depth_m must be positive", field="depth_m")
        cx, cy = self.camera_position
        if not (0 < cx < self.width_m and 0 < cy < self.depth_m):
            raise ConfigError("camera_position must lie inside the room",
                              field="camera_position")
        if self.camera_height_m <= MAX_PERSON_HEIGHT_M:
            raise ConfigError(
                "camera_height_m must exceed the maximum person height "
                f"({MAX_PERSON_HEIGHT_M} m)", field="camera_height_m")
        if self.focal_px <= 0:
            raise ConfigError("focal_px must be positive", field="focal_px")

    def wall_length(self, wall):
        if wall in ("S", "N"):
            return self.width_m
        if wall in ("W", "E"):
            return self.depth_m
        raise ConfigError(f"unknown wall {wall!r}", field="wall")

    def wall_point(self, wall, offset_m):
        """Room coordinates of a point at `offset_m` along a wall."""
        if wall == "S":
            return (offset_m, 0.0)
        if wall == "N":
            return (offset_m, self.depth_m)
        if wall == "W":
            return (0.0, offset_m)
        if wall == "E":
            return (self.width_m, offset_m)
        raise ConfigError(f"unknown wall {wall!r}", field="wall")


@dataclass(frozen=True)
class SignSpec:
    id: str
    wall: str  # one of N, S, E, W
    center_offset_m: float
    width_m: float
    mount: str = ""  # informational only

    def interval(self):
        half = 0.5 * self.width_m
        return (self.center_offset_m - half, self.center_offset_m + half)

    def center_room(self, room):
        return room.wall_point(self.wall, self.center_offset_m)


@dataclass(frozen=True)
class PipelineConfig:
    bg_delta_mm: float = 300.0
    min_blob_px: int = 0  # 0 = derive from camera geometry at load time
    hist_bins: int = 36
    hist_range_mm: tuple = (800.0, 2600.0)
    corr_threshold: float = 0.2
    gate_radius_m: float = 0.5
    cone_half_angle_rad: float = math.radians(30.0)
    c2_per_rad: float = 0.5
    kappa_mps: float = 0.1
    wall_step_m: float = 0.05
    fps: float = 4.0
    max_turn_rate_rad: float = math.radians(45.0)
    smooth_trajectory: bool = False

    def __post_init__(self):
        positives = ["bg_delta_mm", "hist_bins", "gate_radius_m",
                     "cone_half_angle_rad", "kappa_mps",
                     "wall_step_m", "fps", "max_turn_rate_rad"]
        for name in positives:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive", field=name)
        if not -1.0 < self.corr_threshold < 1.0:
            raise ConfigError("corr_threshold must lie in (-1, 1)",
                              field="corr_threshold")
        if self.cone_half_angle_rad > math.pi / 2:
            raise ConfigError("cone_half_angle_rad must be at most pi/2",
                              field="cone_half_angle_rad")
        if self.min_blob_px < 0:
            raise ConfigError("min_blob_px must be non-negative",
                              field="min_blob_px")
        if self.hist_range_mm[0] >= self.hist_range_mm[1]:
            raise ConfigError("hist_range_mm must be increasing",
                              field="hist_range_mm")


@dataclass(frozen=True)
class WallSample:
    wall: str
    offset_m: float
    point: tuple  # (x, y) room meters
    sign_id: str = ""  # empty when the sample is not covered by a sign


def default_min_blob_px(room):
    """Approximate head-and-shoulder footprint in pixels (0.25 m square)."""
    side = 0.25 * room.focal_px / room.camera_height_m
    return max(1, int(round(side * side)))


def pixel_to_room(u, v, depth_mm, room):
    """Back-project a pixel at a measured depth onto the floor plane.

    Pinhole model with the camera looking straight down: the lateral offset
    from the camera axis is (u - u0) * z / f, z in meters.
    """
    if depth_mm <= 0:
        raise ConfigError("depth_mm must be positive (0 marks invalid pixels)",
                          field="depth_mm")
    if depth_mm > room.camera_height_m * 1000.0:
        raise ConfigError("depth_mm exceeds the camera height",
                          field="depth_mm")
    z = depth_mm / 1000.0
    u0, v0 = room.principal_point
    cx, cy = room.camera_position
    x = cx + (u - u0) * z / room.focal_px
    y = cy + (v - v0) * z / room.focal_px
    return (x, y)


def room_to_pixel(x, y, depth_mm, room):
    """Inverse of :func:`pixel_to_room` at a fixed depth."""
    if depth_mm <= 0:
        raise ConfigError("depth_mm must be positive", field="depth_mm")
    z = depth_mm / 1000.0
    u0, v0 = room.principal_point
    cx, cy = room.camera_position
    u = u0 + (x - cx) * room.focal_px / z
    v = v0 + (y - cy) * room.focal_px / z
    return (u, v)


def wall_samples(room, step, signs=()):
    """Sample the room perimeter at spacing <= step.

    Samples are placed at segment midpoints per wall (no duplicated corners),
    ordered S, E, N, W with increasing offset.  Each sample is tagged with
    the sign covering it, if any.
    """
    if step <= 0:
        raise ConfigError("wall sampling step must be positive", field="step")
    by_wall = {w: [s for s in signs if s.wall == w] for w in WALLS}
    samples = []
    for wall in WALLS:
        length = room.wall_length(wall)
        n = max(1, math.ceil(length / step))
        pitch = length / n
        for i in range(n):
            off = (i + 0.5) * pitch
            sign_id = ""
            for s in by_wall[wall]:
                lo, hi = s.interval()
                if lo <= off <= hi:
                    sign_id = s.id
                    break
            samples.append(WallSample(wall=wall, offset_m=off,
                                      point=room.wall_point(wall, off),
                                      sign_id=sign_id))
    return samples


def _get(section, key, cast, default=None, *, name=None):
    name = name or key
    if key not in section:
        if default is None:
            raise ConfigError(f"missing required key {name!r}", field=name)
        return default
    try:
        if cast is bool:
            return section.getboolean(key)
        return cast(section[key])
    except (ValueError, AttributeError) as exc:
        raise ConfigError(f"cannot parse {name!r}: {exc}", field=name)


def load_config(path):
    """Load room, signs and pipeline parameters from an INI-style file.

    Lengths are meters, depths millimeters, angles degrees in the file
    (converted to radians here).  Returns (RoomModel, [SignSpec],
    PipelineConfig) with all invariants checked.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}", field="path")

    for required in ("room", "camera"):
        if required not in parser:
            raise ConfigError(f"missing [{required}] section", field=required)
    rsec, csec = parser["room"], parser["camera"]
    room = RoomModel(
        width_m=_get(rsec, "width_m", float),
        depth_m=_get(rsec, "depth_m", float),
        camera_position=(_get(csec, "position_x_m", float),
                         _get(csec, "position_y_m", float)),
        camera_height_m=_get(csec, "height_m", float),
        focal_px=_get(csec, "focal_px", float),
        principal_point=(_get(csec, "principal_u", float),
                         _get(csec, "principal_v", float)),
        image_size=(_get(csec, "image_width", int),
                    _get(csec, "image_height", int)),
    )

    signs = []
    for name in parser.sections():
        if not name.startswith("sign:"):
            continue
        sec = parser[name]
        sign_id = name.split(":", 1)[1]
        wall = _get(sec, "wall", str)
        if wall not in WALLS:
            raise ConfigError(f"sign {sign_id!r}: wall must be one of "
                              f"{WALLS}", field="wall")
        sign = SignSpec(
            id=sign_id,
            wall=wall,
            center_offset_m=_get(sec, "center_offset_m", float),
            width_m=_get(sec, "width_m", float),
            mount=_get(sec, "mount", str, default=""),
        )
        lo, hi = sign.interval()
        if lo < 0 or hi > room.wall_length(wall):
            raise ConfigError(f"sign {sign_id!r} extends outside its wall",
                              field="center_offset_m")
        signs.append(sign)
    ids = [s.id for s in signs]
    if len(set(ids)) != len(ids):
        raise ConfigError("sign ids must be unique", field="id")

    psec = parser["pipeline"] if "pipeline" in parser else {}
    defaults = PipelineConfig()
    cfg = PipelineConfig(
        bg_delta_mm=_get(psec, "bg_delta_mm", float, defaults.bg_delta_mm),
        min_blob_px=_get(psec, "min_blob_px", int, 0),
        hist_bins=_get(psec, "hist_bins", int, defaults.hist_bins),
        hist_range_mm=(
            _get(psec, "hist_lo_mm", float, defaults.hist_range_mm[0]),
            _get(psec, "hist_hi_mm", float, defaults.hist_range_mm[1]),
        ),
        corr_threshold=_get(psec, "corr_threshold", float,
                            defaults.corr_threshold),
        gate_radius_m=_get(psec, "gate_radius_m", float,
                           defaults.gate_radius_m),
        cone_half_angle_rad=math.radians(
            _get(psec, "cone_half_angle_deg", float,
                 math.degrees(defaults.cone_half_angle_rad))),
        c2_per_rad=_get(psec, "c2_per_rad", float, defaults.c2_per_rad),
        kappa_mps=_get(psec, "kappa_mps", float, defaults.kappa_mps),
        wall_step_m=_get(psec, "wall_step_m", float, defaults.wall_step_m),
        fps=_get(psec, "fps", float, defaults.fps),
        max_turn_rate_rad=math.radians(
            _get(psec, "max_turn_rate_deg", float,
                 math.degrees(defaults.max_turn_rate_rad))),
        smooth_trajectory=_get(psec, "smooth_trajectory", bool,
                               defaults.smooth_trajectory),
    )
    if cfg.min_blob_px == 0:
        cfg = PipelineConfig(**{**cfg.__dict__,
                                "min_blob_px": default_min_blob_px(room)})
    return room, signs, cfg
