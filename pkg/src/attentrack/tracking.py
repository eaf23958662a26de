"""Frame-to-frame association of head detections into identity-stable tracks.

Constant-acceleration prediction from the last three observed positions,
circular gating, nearest-neighbor association with Hungarian disambiguation
when gates overlap, and resolution of the ellipse's 180-degree direction
ambiguity with a per-frame turn-rate limit (no frame-to-frame flips).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .angles import circ_diff, circ_dist, wrap_2pi

TENTATIVE = "tentative"
CONFIRMED = "confirmed"
EXITED = "exited"

# Matches needed to confirm / misses tolerated before a track exits.
CONFIRM_HITS = 3
MAX_MISSES = 3

# Displacement thresholds (meters): below STANDSTILL the motion direction is
# noise; INIT_DISP is the travel needed before the entry direction is trusted.
STANDSTILL_M = 0.01
INIT_DISP_M = 0.05


@dataclass
class Track:
    id: int
    history: list = field(default_factory=list)  # (frame, (x, y), axis_angle)
    phi_history: list = field(default_factory=list)  # (frame, phi_rad)
    phi_rad: float = None  # resolved head direction, set once confirmed
    status: str = TENTATIVE
    misses: int = 0
    hits: int = 0  # consecutive matched frames
    first_partial: bool = False
    last_partial: bool = False
    confirmed_ever: bool = False
    trajectory_dir: float = None  # last reliable motion direction

    @property
    def positions(self):
        return [p for _, p, _ in self.history]

    @property
    def last_position(self):
        return self.history[-1][1]


def predict_position(track):
    """Constant-acceleration extrapolation from the last three positions.

    With fewer than three entries falls back to linear extrapolation or the
    last position.
    """
    pts = track.positions
    if len(pts) >= 3:
        p1, p2, p3 = (np.asarray(p, dtype=float) for p in pts[-3:])
        pred = 3.0 * p3 - 3.0 * p2 + p1
    elif len(pts) == 2:
        p1, p2 = (np.asarray(p, dtype=float) for p in pts[-2:])
        pred = 2.0 * p2 - p1
    else:
        pred = np.asarray(pts[-1], dtype=float)
    return (float(pred[0]), float(pred[1]))


def gate(prediction, detections, radius):
    """Detections within `radius` of the prediction, nearest first.

    Returns (detection, distance) pairs; ties keep input order.
    """
    if radius <= 0:
        raise ValueError("gate radius must be positive")
    px, py = prediction
    inside = []
    for i, det in enumerate(detections):
        dx = det.center_room[0] - px
        dy = det.center_room[1] - py
        d = math.hypot(dx, dy)
        if d <= radius:
            inside.append((d, i, det))
    inside.sort(key=lambda t: (t[0], t[1]))
    return [(det, d) for d, _, det in inside]


@dataclass
class Association:
    matches: dict  # track id -> detection index
    unmatched_tracks: list  # track ids
    unmatched_detections: list  # detection indices


def associate(tracks, detections, cfg):
    """Assign gated detections to tracks.

    When no two tracks share a candidate, each track takes its nearest
    neighbor; overlapping candidate sets are disambiguated with the Hungarian
    algorithm over the gated cost matrix.  Distance ties break toward the
    lower detection index.
    """
    radius = cfg.gate_radius_m
    candidates = {}
    for track in tracks:
        pred = predict_position(track)
        cand = {}
        px, py = pred
        for j, det in enumerate(detections):
            d = math.hypot(det.center_room[0] - px, det.center_room[1] - py)
            if d <= radius:
                cand[j] = d
        candidates[track.id] = cand

    seen = set()
    overlap = False
    for cand in candidates.values():
        if seen & cand.keys():
            overlap = True
            break
        seen |= cand.keys()

    matches = {}
    if not overlap:
        for track in tracks:
            cand = candidates[track.id]
            if cand:
                j = min(cand, key=lambda j: (cand[j], j))
                matches[track.id] = j
    elif tracks and detections:
        big = 1e9
        cost = np.full((len(tracks), len(detections)), big)
        for i, track in enumerate(tracks):
            for j, d in candidates[track.id].items():
                cost[i, j] = d
        rows, cols = linear_sum_assignment(cost)
        for i, j in zip(rows, cols):
            if cost[i, j] < big:
                matches[tracks[i].id] = int(j)

    matched_dets = set(matches.values())
    return Association(
        matches=matches,
        unmatched_tracks=[t.id for t in tracks if t.id not in matches],
        unmatched_detections=[j for j in range(len(detections))
                              if j not in matched_dets],
    )


def resolve_direction(prev_phi, axis_angle_rad, trajectory_dir,
                      max_turn_rate_rad):
    """Pick the head direction among {axis, axis + pi}.

    At initialization (prev_phi is None) the candidate within pi/2 of the
    motion/entry direction wins.  Afterwards the candidate closest to the
    previous phi wins (ties toward the trajectory direction) and the change
    is clamped to the per-frame turn-rate limit, so a track can never flip
    by 180 degrees between frames.
    """
    c1 = wrap_2pi(axis_angle_rad)
    c2 = wrap_2pi(axis_angle_rad + math.pi)
    if prev_phi is None:
        d1 = circ_dist(c1, trajectory_dir)
        d2 = circ_dist(c2, trajectory_dir)
        return c1 if d1 <= d2 else c2
    d1 = circ_dist(c1, prev_phi)
    d2 = circ_dist(c2, prev_phi)
    if math.isclose(d1, d2):
        if trajectory_dir is not None:
            chosen = c1 if circ_dist(c1, trajectory_dir) <= \
                circ_dist(c2, trajectory_dir) else c2
        else:
            chosen = c1
    else:
        chosen = c1 if d1 < d2 else c2
    delta = circ_diff(chosen, prev_phi)
    delta = max(-max_turn_rate_rad, min(max_turn_rate_rad, float(delta)))
    return float(wrap_2pi(prev_phi + delta))


def _entry_direction(track):
    """Direction of net travel from the first observation, if any."""
    first = np.asarray(track.positions[0], dtype=float)
    last = np.asarray(track.positions[-1], dtype=float)
    disp = last - first
    if np.hypot(*disp) >= INIT_DISP_M:
        return float(math.atan2(disp[1], disp[0]))
    return None


def _initialize_phi(track, cfg):
    """Resolve phi over the whole stored history once the entry direction is
    known (or a fallback has to be used for a track that never moves)."""
    entry_dir = _entry_direction(track)
    if entry_dir is None:
        if len(track.history) < 5:
            return  # wait for more motion
        entry_dir = 0.0  # never moved: arbitrary but deterministic
    track.phi_history = []
    phi = None
    prev_pos = None
    direction = entry_dir
    for frame, pos, axis in track.history:
        if prev_pos is not None:
            dx = pos[0] - prev_pos[0]
            dy = pos[1] - prev_pos[1]
            if math.hypot(dx, dy) >= STANDSTILL_M:
                direction = math.atan2(dy, dx)
        phi = resolve_direction(phi, axis, direction, cfg.max_turn_rate_rad)
        track.phi_history.append((frame, phi))
        prev_pos = pos
    track.phi_rad = phi
    track.trajectory_dir = direction


def _apply_match(track, det, frame_index, cfg):
    if track.history:
        prev = track.last_position
        dx = det.center_room[0] - prev[0]
        dy = det.center_room[1] - prev[1]
        if math.hypot(dx, dy) >= STANDSTILL_M:
            track.trajectory_dir = math.atan2(dy, dx)
    track.history.append((frame_index, det.center_room, det.axis_angle_rad))
    track.last_partial = det.partial
    track.misses = 0
    track.hits += 1

    if track.phi_rad is None:
        _initialize_phi(track, cfg)
    else:
        phi = resolve_direction(track.phi_rad, det.axis_angle_rad,
                                track.trajectory_dir, cfg.max_turn_rate_rad)
        track.phi_rad = phi
        track.phi_history.append((frame_index, phi))

    if track.status == TENTATIVE and track.hits >= CONFIRM_HITS:
        if not track.first_partial:
            track.status = CONFIRMED
            track.confirmed_ever = True
        else:
            # Entered at the border: require net travel into the scene and a
            # fully visible blob before confirming (kills entry flicker).
            first = track.positions[0]
            disp = math.hypot(track.last_position[0] - first[0],
                              track.last_position[1] - first[1])
            if disp >= INIT_DISP_M and not det.partial:
                track.status = CONFIRMED
                track.confirmed_ever = True


def update_tracks(tracks, detections, frame_index, cfg):
    """Advance the tracker by one frame; returns the updated track list.

    Matched tracks extend their history and head direction; unmatched tracks
    accumulate misses and exit after MAX_MISSES; unmatched detections spawn
    tentative tracks.
    """
    for t in tracks:
        if t.history and frame_index <= t.history[-1][0]:
            raise ValueError("frame_index must increase monotonically")

    active = [t for t in tracks if t.status != EXITED]
    assoc = associate(active, detections, cfg)
    by_id = {t.id: t for t in active}

    for tid, j in assoc.matches.items():
        _apply_match(by_id[tid], detections[j], frame_index, cfg)

    for tid in assoc.unmatched_tracks:
        track = by_id[tid]
        track.misses += 1
        track.hits = 0
        if track.misses > MAX_MISSES:
            track.status = EXITED

    next_id = max((t.id for t in tracks), default=0) + 1
    for j in assoc.unmatched_detections:
        det = detections[j]
        track = Track(id=next_id, first_partial=det.partial,
                      last_partial=det.partial, hits=1)
        track.history.append((frame_index, det.center_room,
                              det.axis_angle_rad))
        tracks.append(track)
        next_id += 1
    return tracks


class HeadTracker:
    """Stateful per-sequence tracker; feed frames strictly in order."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.tracks = []

    def step(self, detections, frame_index):
        update_tracks(self.tracks, detections, frame_index, self.cfg)
        return self.tracks

    def confirmed(self):
        """Tracks that reached the confirmed state at any point."""
        return [t for t in self.tracks if t.confirmed_ever]
