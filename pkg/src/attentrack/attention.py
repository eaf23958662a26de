"""Focus-of-attention density over the room walls.

Instantaneous attention at a wall point is a product of three factors:
inverse distance, inverse (regularized) speed, and a linear gain in the
head-vs-trajectory angle difference, gated by the attention cone around
the head direction.  Per-trajectory maps are normalized to unit mass, so
the proportionality constant of the distance factor never appears
explicitly.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .angles import circ_dist
from .errors import DataError, DimensionMismatchError
from .trajectory import sign_angles

# Lower bound on the viewer-to-wall distance; bounds the 1/r singularity
# when a person stands against a wall.
DIST_CLAMP_M = 0.3


@dataclass
class AttentionParams:
    kappa_mps: float
    c2_per_rad: float
    cone_half_angle_rad: float
    fps: float

    @classmethod
    def from_config(cls, cfg):
        return cls(kappa_mps=cfg.kappa_mps, c2_per_rad=cfg.c2_per_rad,
                   cone_half_angle_rad=cfg.cone_half_angle_rad, fps=cfg.fps)


@dataclass
class AttentionMap:
    samples: list  # WallSample list, shared across maps
    values: np.ndarray
    normalized: bool = False


@dataclass
class SignReport:
    rows: list  # dicts: sign_id, attention, relative_pct, at_seconds

    def ranking(self):
        return [r["sign_id"] for r in
                sorted(self.rows, key=lambda r: -r["attention"])]


def attention_distance(r):
    """Inverse-distance factor (the global constant is absorbed by the final
    normalization)."""
    if r <= 0:
        raise DataError("attention distance requires r > 0")
    return 1.0 / r


def attention_speed(v, kappa):
    """Inverse regularized-speed factor."""
    if v < 0 or kappa <= 0:
        raise DataError("attention_speed requires v >= 0 and kappa > 0")
    return 1.0 / (kappa + v)


def attention_angle(psi, phi, c2):
    """Linear gain in the circular distance between head and motion
    directions."""
    return 1.0 + c2 * float(circ_dist(psi, phi))


def instantaneous_attention(state, point, params):
    """Attention paid by one state to one wall point; 0 outside the cone."""
    dx = point[0] - state.p_prime[0]
    dy = point[1] - state.p_prime[1]
    r = math.hypot(dx, dy)
    if r == 0:
        raise DataError("wall point coincides with the head position")
    direction = math.atan2(dy, dx)
    if circ_dist(direction, state.phi) > params.cone_half_angle_rad:
        return 0.0
    r = max(r, DIST_CLAMP_M)
    return (attention_distance(r)
            * attention_angle(state.psi, state.phi, params.c2_per_rad)
            * attention_speed(state.v, params.kappa_mps))


def _state_attention_vector(state, xs, ys, params):
    """Vectorized instantaneous attention over all wall samples."""
    dx = xs - state.p_prime[0]
    dy = ys - state.p_prime[1]
    r = np.hypot(dx, dy)
    direction = np.arctan2(dy, dx)
    in_cone = circ_dist(direction, state.phi) <= params.cone_half_angle_rad
    r = np.maximum(r, DIST_CLAMP_M)
    gain = (attention_angle(state.psi, state.phi, params.c2_per_rad)
            * attention_speed(state.v, params.kappa_mps))
    return np.where(in_cone, gain / r, 0.0)


def accumulate_trajectory(traj, samples, params):
    """Accumulate one trajectory's attention over the wall samples and
    normalize to unit mass.

    A trajectory that never puts any sample inside its cone yields an
    all-zero map flagged unnormalizable (normalized=False).
    """
    if not traj.states:
        raise DataError("cannot accumulate an empty trajectory")
    xs = np.array([s.point[0] for s in samples])
    ys = np.array([s.point[1] for s in samples])
    raw = np.zeros(len(samples))
    for state in traj.states:
        raw += _state_attention_vector(state, xs, ys, params)
    total = raw.sum()
    if total <= 0:
        return AttentionMap(samples=samples, values=raw, normalized=False)
    return AttentionMap(samples=samples, values=raw / total, normalized=True)


def aggregate(maps):
    """Combine per-person maps into one unit-mass map; all-zero
    (unnormalizable) inputs are skipped."""
    usable = [m for m in maps if m.normalized]
    if not usable:
        if not maps:
            raise DataError("no attention maps to aggregate")
        return AttentionMap(samples=maps[0].samples,
                            values=np.zeros(len(maps[0].samples)),
                            normalized=False)
    samples = usable[0].samples
    n = len(samples)
    acc = np.zeros(n)
    for m in usable:
        if len(m.values) != n:
            raise DimensionMismatchError("attention maps use different grids")
        acc += m.values
    return AttentionMap(samples=samples, values=acc / acc.sum(),
                        normalized=True)


def attention_time(trajectories, sign, params, room):
    """Total seconds the sign center lies inside any state's attention cone."""
    frames = 0
    for traj in trajectories:
        for state in traj.states:
            obs = sign_angles(state, [sign], room,
                              params.cone_half_angle_rad)[0]
            if obs.in_cone:
                frames += 1
    return frames / params.fps


def sign_report(amap, signs, trajectories, params, room):
    """Per-sign accumulated attention, percentage relative to the best sign,
    and attention time."""
    if not amap.normalized:
        raise DataError("sign_report requires a normalized attention map")
    masses = {s.id: 0.0 for s in signs}
    for sample, value in zip(amap.samples, amap.values):
        if sample.sign_id in masses:
            masses[sample.sign_id] += float(value)
    max_mass = max(masses.values()) if masses else 0.0
    rows = []
    for sign in signs:
        mass = masses[sign.id]
        rel = 100.0 * mass / max_mass if max_mass > 0 else 0.0
        rows.append({
            "sign_id": sign.id,
            "attention": mass,
            "relative_pct": rel,
            "at_seconds": attention_time(trajectories, sign, params, room),
        })
    return SignReport(rows=rows)


def write_sign_report(path, report):
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"signs": report.rows}, f, indent=2)
        f.write("\n")


def write_heatmap(path, amap, px_per_sample=1, rows=20):
    """8-bit grayscale image of the unrolled wall perimeter, brightest where
    attention peaks."""
    values = np.asarray(amap.values, dtype=np.float64)
    peak = values.max()
    line = np.zeros(len(values), dtype=np.uint8) if peak <= 0 else \
        np.rint(255.0 * values / peak).astype(np.uint8)
    img = np.repeat(np.repeat(line[None, :], rows, axis=0),
                    px_per_sample, axis=1)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.tobytes())
