"""Synthetic depth-scene renderer and ground-truth oracle.

Persons are modelled as a head ellipsoid (elongated along the facing
direction, which is what makes the fitted ellipse orientation meaningful)
above a flat shoulder slab.  Frames are rendered through the same pinhole
model the detector inverts, with a z-buffer and optional Gaussian depth
noise, so synthetic sequences are interchangeable with recorded ones.
"""

import configparser
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .angles import circ_diff, wrap_2pi
from .attention import (AttentionParams, accumulate_trajectory, aggregate,
                        sign_report)
from .depthio import DepthFrame, BackgroundModel
from .errors import ConfigError, DataError
from .room import wall_samples
from .trajectory import OrientedState, OrientedTrajectory, STANDSTILL_M

# Vertical semi-axis of the head ellipsoid (meters).
HEAD_VERT_SEMI_M = 0.12
# Front-to-back semi-extent of the shoulder cap (meters).
SHOULDER_DEPTH_SEMI_M = 0.16
# Vertical rounding of the shoulders; spreads the shoulder depth peak over a
# few histogram bins like real sloping shoulders do.
SHOULDER_VERT_SEMI_M = 0.08


@dataclass(frozen=True)
class PersonGeometry:
    height_m: float
    head_radius_major_m: float  # along the facing direction
    head_radius_minor_m: float
    shoulder_width_m: float
    shoulder_depth_drop_m: float  # shoulders below the head top

    def __post_init__(self):
        for name in ("height_m", "head_radius_major_m", "head_radius_minor_m",
                     "shoulder_width_m", "shoulder_depth_drop_m"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive", field=name)
        if self.head_radius_major_m < self.head_radius_minor_m:
            raise ConfigError("head major radius must be >= minor radius",
                              field="head_radius_major_m")


# Canonical geometries used to generate the five reference head histograms.
# Heights are spread evenly so that any plausible person is within half a
# histogram bin pair of some reference.
REFERENCE_GEOMETRIES = {
    "short": PersonGeometry(1.50, 0.105, 0.082, 0.42, 0.23),
    "narrow": PersonGeometry(1.60, 0.100, 0.078, 0.38, 0.22),
    "average": PersonGeometry(1.70, 0.110, 0.085, 0.46, 0.25),
    "broad": PersonGeometry(1.80, 0.120, 0.095, 0.55, 0.28),
    "tall": PersonGeometry(1.90, 0.115, 0.090, 0.50, 0.27),
}


@dataclass
class BoxProp:
    id: str
    center: tuple  # (x, y) meters
    size: tuple  # (sx, sy) meters
    height_m: float


@dataclass
class ScriptedPerson:
    id: str
    geometry: PersonGeometry
    waypoints: list  # [(frame, x, y)], frames increasing
    angles: list  # [(frame, phi_rad)], frames increasing

    def position_at(self, k):
        return _interp_linear(self.waypoints, k)

    def phi_at(self, k):
        return _interp_circular(self.angles, k)


@dataclass
class ScenarioScript:
    name: str
    duration_frames: int
    persons: list = field(default_factory=list)
    props: list = field(default_factory=list)
    noise_sigma_mm: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.duration_frames <= 0:
            raise ConfigError("duration_frames must be positive",
                              field="duration_frames")
        for p in self.persons:
            if not p.waypoints or not p.angles:
                raise ConfigError(f"person {p.id!r} needs waypoints and "
                                  "angles", field="waypoints")


def _interp_linear(keyframes, k):
    """Piecewise-linear schedule lookup; clamps outside the keyframe range."""
    if k <= keyframes[0][0]:
        return tuple(keyframes[0][1:])
    if k >= keyframes[-1][0]:
        return tuple(keyframes[-1][1:])
    for (f0, *a), (f1, *b) in zip(keyframes, keyframes[1:]):
        if f0 <= k <= f1:
            t = (k - f0) / (f1 - f0)
            return tuple(x + t * (y - x) for x, y in zip(a, b))
    raise DataError("keyframes must be sorted by frame")


def _interp_circular(keyframes, k):
    """Angle schedule lookup, interpolating along the shortest arc."""
    if k <= keyframes[0][0]:
        return float(wrap_2pi(keyframes[0][1]))
    if k >= keyframes[-1][0]:
        return float(wrap_2pi(keyframes[-1][1]))
    for (f0, a0), (f1, a1) in zip(keyframes, keyframes[1:]):
        if f0 <= k <= f1:
            t = (k - f0) / (f1 - f0)
            return float(wrap_2pi(a0 + t * circ_diff(a1, a0)))
    raise DataError("keyframes must be sorted by frame")


def render_background(script, room):
    """Empty-scene depth image: the floor at the camera height."""
    w, h = room.image_size
    depth = np.full((h, w), round(room.camera_height_m * 1000.0),
                    dtype=np.uint16)
    return BackgroundModel(depth_mm=depth)


def _pixel_grid(room, z_m, x_lo, x_hi, y_lo, y_hi):
    """Image-space bounding box of a room-space rectangle at depth z."""
    u0, v0 = room.principal_point
    cx, cy = room.camera_position
    f = room.focal_px
    w, h = room.image_size
    ulo = int(math.floor(u0 + (x_lo - cx) * f / z_m))
    uhi = int(math.ceil(u0 + (x_hi - cx) * f / z_m))
    vlo = int(math.floor(v0 + (y_lo - cy) * f / z_m))
    vhi = int(math.ceil(v0 + (y_hi - cy) * f / z_m))
    ulo, uhi = max(0, ulo), min(w - 1, uhi)
    vlo, vhi = max(0, vlo), min(h - 1, vhi)
    if ulo > uhi or vlo > vhi:
        return None
    return ulo, uhi, vlo, vhi


def _room_coords(room, z_m, ulo, uhi, vlo, vhi):
    u0, v0 = room.principal_point
    cx, cy = room.camera_position
    f = room.focal_px
    us = np.arange(ulo, uhi + 1, dtype=np.float64)
    vs = np.arange(vlo, vhi + 1, dtype=np.float64)
    x = cx + (us[None, :] - u0) * z_m / f
    y = cy + (vs[:, None] - v0) * z_m / f
    return np.broadcast_to(x, (len(vs), len(us))), \
        np.broadcast_to(y, (len(vs), len(us)))


def _blend(zbuf, region, depth_mm):
    """Write a surface patch into the z-buffer (nearest surface wins)."""
    ulo, uhi, vlo, vhi = region
    patch = zbuf[vlo:vhi + 1, ulo:uhi + 1]
    np.minimum(patch, depth_mm, out=patch)


def _render_flat_top(zbuf, room, inside_fn, top_height_m, x_lo, x_hi,
                     y_lo, y_hi):
    z = room.camera_height_m - top_height_m
    region = _pixel_grid(room, z, x_lo, x_hi, y_lo, y_hi)
    if region is None:
        return
    xs, ys = _room_coords(room, z, *region)
    depth = np.where(inside_fn(xs, ys), z * 1000.0, np.inf)
    _blend(zbuf, region, depth)


def _render_dome(zbuf, room, pos, phi, a, b, c, top_height_m):
    """Render the upper half of an ellipsoid: horizontal semi-axes a (along
    phi) and b, vertical semi-axis c, apex at top_height_m.

    Nadir orthographic approximation: pixels are mapped to the floor at the
    dome-center depth plane and the surface height is evaluated there, so the
    rendered silhouette is an exact rotated ellipse (no oblique-view skew).
    """
    center_h = top_height_m - c
    px, py = pos
    rmax = max(a, b) + 0.02
    z_ref = room.camera_height_m - center_h
    region = _pixel_grid(room, z_ref, px - rmax, px + rmax,
                         py - rmax, py + rmax)
    if region is None:
        return
    u0, v0 = room.principal_point
    cx, cy = room.camera_position
    f = room.focal_px
    ulo, uhi, vlo, vhi = region
    us = np.arange(ulo, uhi + 1, dtype=np.float64)[None, :]
    vs = np.arange(vlo, vhi + 1, dtype=np.float64)[:, None]
    cos_p, sin_p = math.cos(phi), math.sin(phi)
    x = cx + (us - u0) * z_ref / f
    y = cy + (vs - v0) * z_ref / f
    dx, dy = x - px, y - py
    lon = dx * cos_p + dy * sin_p
    lat = -dx * sin_p + dy * cos_p
    q = (lon / a) ** 2 + (lat / b) ** 2
    inside = q <= 1.0
    height = center_h + c * np.sqrt(np.clip(1.0 - q, 0.0, None))
    depth = np.where(inside, (room.camera_height_m - height) * 1000.0, np.inf)
    _blend(zbuf, region, depth)


def _render_head(zbuf, room, pos, phi, geom):
    _render_dome(zbuf, room, pos, phi, geom.head_radius_major_m,
                 geom.head_radius_minor_m, HEAD_VERT_SEMI_M, geom.height_m)


def _render_shoulders(zbuf, room, pos, phi, geom):
    # Facing direction is the narrow axis; the wide axis spans the shoulders.
    _render_dome(zbuf, room, pos, phi + math.pi / 2.0,
                 geom.shoulder_width_m / 2.0, SHOULDER_DEPTH_SEMI_M,
                 SHOULDER_VERT_SEMI_M,
                 geom.height_m - geom.shoulder_depth_drop_m)


def render_frame(script, k, room, timestamp_s=None):
    """Z-buffer render of frame k of a scenario."""
    if k >= script.duration_frames:
        raise DataError(f"frame {k} beyond script duration")
    zbuf = render_background(script, room).depth_mm.astype(np.float64)
    for prop in script.props:
        bx, by = prop.center
        hx, hy = prop.size[0] / 2.0, prop.size[1] / 2.0

        def inside(xs, ys, bx=bx, by=by, hx=hx, hy=hy):
            return (np.abs(xs - bx) <= hx) & (np.abs(ys - by) <= hy)

        _render_flat_top(zbuf, room, inside, prop.height_m,
                         bx - hx, bx + hx, by - hy, by + hy)
    for person in script.persons:
        pos = person.position_at(k)
        phi = person.phi_at(k)
        _render_shoulders(zbuf, room, pos, phi, person.geometry)
        _render_head(zbuf, room, pos, phi, person.geometry)
    if script.noise_sigma_mm > 0:
        rng = np.random.default_rng([script.seed, k])
        zbuf = zbuf + rng.normal(0.0, script.noise_sigma_mm, zbuf.shape)
    depth = np.clip(np.rint(zbuf), 1, 65535).astype(np.uint16)
    ts = k / 4.0 if timestamp_s is None else timestamp_s
    return DepthFrame(depth_mm=depth, frame_index=k, timestamp_s=ts)


def head_fully_visible(person, k, room):
    """True when the whole head+shoulder footprint projects inside the image."""
    x, y = person.position_at(k)
    geom = person.geometry
    r = max(geom.head_radius_major_m, geom.shoulder_width_m / 2.0,
            SHOULDER_DEPTH_SEMI_M)
    z = room.camera_height_m - geom.height_m
    u0, v0 = room.principal_point
    cx, cy = room.camera_position
    f = room.focal_px
    w, h = room.image_size
    u_lo = u0 + (x - r - cx) * f / z
    u_hi = u0 + (x + r - cx) * f / z
    v_lo = v0 + (y - r - cy) * f / z
    v_hi = v0 + (y + r - cy) * f / z
    return u_lo >= 1 and v_lo >= 1 and u_hi <= w - 2 and v_hi <= h - 2


def ground_truth_trajectories(script, cfg):
    """Oracle oriented trajectories computed directly from the schedules,
    using the same speed/psi differencing rules as the vision pipeline."""
    trajectories = []
    for pid, person in enumerate(script.persons, start=1):
        states = []
        prev = None
        psi = None
        for k in range(script.duration_frames):
            pos = person.position_at(k)
            phi = person.phi_at(k)
            if prev is None:
                v = 0.0
            else:
                dx, dy = pos[0] - prev[0], pos[1] - prev[1]
                dist = math.hypot(dx, dy)
                v = dist * cfg.fps
                if dist >= STANDSTILL_M:
                    psi = float(wrap_2pi(math.atan2(dy, dx)))
            states.append(OrientedState(frame_index=k, p_prime=pos, v=v,
                                        psi=psi, phi=phi))
            prev = pos
        if len(states) >= 2:
            states[0].v = states[1].v
        first_psi = next((s.psi for s in states if s.psi is not None), 0.0)
        for s in states:
            s.psi = first_psi if s.psi is None else s.psi
            first_psi = s.psi
        trajectories.append(OrientedTrajectory(person_id=pid, states=states))
    return trajectories


def ground_truth(script, room, signs, cfg):
    """Exact trajectories, attention map and sign report for a script.

    The attention map and report go through the same accumulation code as
    the vision pipeline, isolating vision error from model error.
    """
    trajectories = ground_truth_trajectories(script, cfg)
    params = AttentionParams.from_config(cfg)
    samples = wall_samples(room, cfg.wall_step_m, signs)
    maps = [accumulate_trajectory(t, samples, params) for t in trajectories]
    amap = aggregate(maps)
    report = sign_report(amap, signs, trajectories, params, room) \
        if amap.normalized and signs else None
    return trajectories, amap, report


# ---------------------------------------------------------------------------
# Script file I/O (same INI-style format as the pipeline config).

def _fmt_keyframes(frames, per_frame_values):
    return "; ".join(" ".join(str(round(v, 6)) for v in (f, *vals))
                     for f, vals in zip(frames, per_frame_values))


def write_script(path, script):
    parser = configparser.ConfigParser()
    parser["scene"] = {
        "name": script.name,
        "duration_frames": str(script.duration_frames),
        "noise_sigma_mm": str(script.noise_sigma_mm),
        "seed": str(script.seed),
    }
    for prop in script.props:
        parser[f"prop:{prop.id}"] = {
            "center_x_m": str(prop.center[0]),
            "center_y_m": str(prop.center[1]),
            "size_x_m": str(prop.size[0]),
            "size_y_m": str(prop.size[1]),
            "height_m": str(prop.height_m),
        }
    for person in script.persons:
        g = person.geometry
        parser[f"person:{person.id}"] = {
            "height_m": str(g.height_m),
            "head_major_m": str(g.head_radius_major_m),
            "head_minor_m": str(g.head_radius_minor_m),
            "shoulder_width_m": str(g.shoulder_width_m),
            "shoulder_drop_m": str(g.shoulder_depth_drop_m),
            "waypoints": "; ".join(
                f"{f} {x:.4f} {y:.4f}" for f, x, y in person.waypoints),
            "angles": "; ".join(
                f"{f} {math.degrees(a):.2f}" for f, a in person.angles),
        }
    with open(path, "w", encoding="utf-8") as f:
        parser.write(f)


def _parse_keyframes(text, n_values, what):
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split()
        if len(parts) != n_values + 1:
            raise ConfigError(f"malformed {what} keyframe {chunk!r}",
                              field=what)
        out.append((int(parts[0]), *(float(p) for p in parts[1:])))
    if not out or any(a[0] >= b[0] for a, b in zip(out, out[1:])):
        raise ConfigError(f"{what} keyframes must be sorted by frame",
                          field=what)
    return out


def read_script(path):
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise DataError(f"cannot read script file {path}")
    if "scene" not in parser:
        raise ConfigError("missing [scene] section", field="scene")
    scene = parser["scene"]
    persons = []
    props = []
    for name in parser.sections():
        sec = parser[name]
        if name.startswith("person:"):
            geometry = PersonGeometry(
                height_m=float(sec["height_m"]),
                head_radius_major_m=float(sec["head_major_m"]),
                head_radius_minor_m=float(sec["head_minor_m"]),
                shoulder_width_m=float(sec["shoulder_width_m"]),
                shoulder_depth_drop_m=float(sec["shoulder_drop_m"]),
            )
            angles = [(f, math.radians(a)) for f, a in
                      _parse_keyframes(sec["angles"], 1, "angles")]
            persons.append(ScriptedPerson(
                id=name.split(":", 1)[1],
                geometry=geometry,
                waypoints=_parse_keyframes(sec["waypoints"], 2, "waypoints"),
                angles=angles,
            ))
        elif name.startswith("prop:"):
            props.append(BoxProp(
                id=name.split(":", 1)[1],
                center=(float(sec["center_x_m"]), float(sec["center_y_m"])),
                size=(float(sec["size_x_m"]), float(sec["size_y_m"])),
                height_m=float(sec["height_m"]),
            ))
    return ScenarioScript(
        name=scene.get("name", "scenario"),
        duration_frames=int(scene["duration_frames"]),
        persons=persons,
        props=props,
        noise_sigma_mm=float(scene.get("noise_sigma_mm", "10")),
        seed=int(scene.get("seed", "0")),
    )


# ---------------------------------------------------------------------------
# Ground-truth CSV

GT_FIELDS = ["frame", "person_id", "x", "y", "phi_deg", "v", "psi_deg",
             "fully_visible"]


def write_ground_truth_csv(path, script, room, cfg):
    trajectories = ground_truth_trajectories(script, cfg)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(GT_FIELDS)
        for person, traj in zip(script.persons, trajectories):
            for s in traj.states:
                writer.writerow([
                    s.frame_index, traj.person_id,
                    f"{s.p_prime[0]:.4f}", f"{s.p_prime[1]:.4f}",
                    f"{math.degrees(s.phi):.4f}", f"{s.v:.4f}",
                    f"{math.degrees(s.psi):.4f}",
                    int(head_fully_visible(person, s.frame_index, room)),
                ])


def read_ground_truth_csv(path):
    """Returns {(frame, person_id): row dict} plus the row list."""
    rows = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for row in csv.DictReader(f):
                rows.append({
                    "frame": int(row["frame"]),
                    "person_id": int(row["person_id"]),
                    "x": float(row["x"]),
                    "y": float(row["y"]),
                    "phi_rad": math.radians(float(row["phi_deg"])),
                    "v": float(row["v"]),
                    "psi_rad": math.radians(float(row["psi_deg"])),
                    "fully_visible": bool(int(row["fully_visible"])),
                })
    except OSError as exc:
        raise DataError(f"cannot read ground truth {path}: {exc}")
    return rows
