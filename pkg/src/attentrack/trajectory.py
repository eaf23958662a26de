"""Oriented trajectories: per-frame state vectors in room coordinates.

Each state carries the floor-plane position, instantaneous speed, motion
direction psi, planar head angle phi and an (unused) pitch slot.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .angles import circ_dist, wrap_2pi
from .errors import DataError

# Below this per-frame displacement psi is held at its previous value.
STANDSTILL_M = 0.01


@dataclass
class OrientedState:
    frame_index: int
    p_prime: tuple  # (x, y) meters
    v: float  # m/s
    psi: float  # motion direction, [0, 2*pi)
    phi: float  # planar head angle, [0, 2*pi)
    theta: float = None  # pitch; carried but never populated


@dataclass
class OrientedTrajectory:
    person_id: int
    states: list = field(default_factory=list)


@dataclass
class SignObservation:
    frame_index: int
    sign_id: str
    rho: float  # head-to-sign-center angle, [0, 2*pi)
    in_cone: bool


def _smooth_positions(entries):
    """Optional 3-frame moving average of positions (endpoints kept)."""
    if len(entries) < 3:
        return entries
    out = [entries[0]]
    for i in range(1, len(entries) - 1):
        frame, _, axis = entries[i]
        xs = [entries[j][1][0] for j in (i - 1, i, i + 1)]
        ys = [entries[j][1][1] for j in (i - 1, i, i + 1)]
        out.append((frame, (sum(xs) / 3.0, sum(ys) / 3.0), axis))
    out.append(entries[-1])
    return out


def build_trajectory(track, room, cfg):
    """Convert a confirmed track into an oriented trajectory.

    Speed is the backward position difference over the actual inter-frame
    interval (frame gaps from missed detections are respected); psi is the
    displacement direction, held at its previous value when standing still;
    phi comes from the track's resolved head direction.
    """
    if len(track.history) < 2:
        raise DataError(f"track {track.id} too short for a trajectory")
    entries = _smooth_positions(track.history) if cfg.smooth_trajectory \
        else track.history
    phi_by_frame = dict(track.phi_history)

    states = []
    prev_pos = None
    prev_frame = None
    psi = None
    for frame, pos, axis in entries:
        if prev_pos is None:
            v = 0.0  # provisional; overwritten with v_1 below
        else:
            dt = (frame - prev_frame) / cfg.fps
            dx = pos[0] - prev_pos[0]
            dy = pos[1] - prev_pos[1]
            dist = math.hypot(dx, dy)
            v = dist / dt
            if dist >= STANDSTILL_M:
                psi = float(wrap_2pi(math.atan2(dy, dx)))
        phi = phi_by_frame.get(frame)
        states.append(OrientedState(frame_index=frame, p_prime=pos, v=v,
                                    psi=psi, phi=phi))
        prev_pos, prev_frame = pos, frame

    # v_0 := v_1 and backfill psi/phi for leading frames without estimates.
    if len(states) >= 2:
        states[0].v = states[1].v
    first_psi = next((s.psi for s in states if s.psi is not None), 0.0)
    first_phi = next((s.phi for s in states if s.phi is not None), first_psi)
    for s in states:
        s.psi = first_psi if s.psi is None else s.psi
        s.phi = first_phi if s.phi is None else s.phi
        first_psi, first_phi = s.psi, s.phi
    return OrientedTrajectory(person_id=track.id, states=states)


def sign_angles(state, signs, room, cone_half_angle):
    """Per-sign viewing angle rho and cone membership for one state."""
    out = []
    x, y = state.p_prime
    for sign in signs:
        sx, sy = sign.center_room(room)
        rho = float(wrap_2pi(math.atan2(sy - y, sx - x)))
        in_cone = bool(circ_dist(rho, state.phi) <= cone_half_angle)
        out.append(SignObservation(frame_index=state.frame_index,
                                   sign_id=sign.id, rho=rho, in_cone=in_cone))
    return out


def write_trajectories_csv(path, trajectories):
    """CSV export: frame, person_id, x, y, v, psi_deg, phi_deg (4 decimals)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["frame", "person_id", "x", "y", "v",
                         "psi_deg", "phi_deg"])
        for traj in trajectories:
            for s in traj.states:
                writer.writerow([
                    s.frame_index, traj.person_id,
                    f"{s.p_prime[0]:.4f}", f"{s.p_prime[1]:.4f}",
                    f"{s.v:.4f}",
                    f"{math.degrees(s.psi):.4f}",
                    f"{math.degrees(s.phi):.4f}",
                ])
