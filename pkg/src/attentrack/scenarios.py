"""Builtin scenario scripts and the default room configuration.

The nine walking scripts mirror the validation protocol: nine persons of
varied build, each recorded alone, walking and turning the head inside the
camera's field of view.  The dwell script stages a four-sign scenario with
gaze dwell proportions 50/30/15/5 for rank-order validation.
"""

import math

from .detection import blob_histogram, extract_blobs, subtract_background
from .room import RoomModel, load_config
from .synthetic import (PersonGeometry, ScenarioScript, ScriptedPerson,
                        REFERENCE_GEOMETRIES, render_background, render_frame)

DEFAULT_CONFIG = """\
[room]
width_m = 5.0
depth_m = 5.0

[camera]
position_x_m = 2.5
position_y_m = 2.5
height_m = 2.8
focal_px = 160.0
principal_u = 160.0
principal_v = 120.0
image_width = 320
image_height = 240

[pipeline]
bg_delta_mm = 300
hist_bins = 36
hist_lo_mm = 800
hist_hi_mm = 2600
corr_threshold = 0.2
gate_radius_m = 0.5
cone_half_angle_deg = 30
c2_per_rad = 0.5
kappa_mps = 0.1
wall_step_m = 0.05
fps = 4
max_turn_rate_deg = 45

[sign:north]
wall = N
center_offset_m = 2.5
width_m = 0.21

[sign:east]
wall = E
center_offset_m = 2.5
width_m = 0.21

[sign:south]
wall = S
center_offset_m = 2.5
width_m = 0.21

[sign:west]
wall = W
center_offset_m = 2.5
width_m = 0.21
"""


def write_default_config(path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(DEFAULT_CONFIG)


def default_setup():
    """(RoomModel, [SignSpec], PipelineConfig) for the default configuration."""
    import os
    import tempfile
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "config.ini")
        write_default_config(path)
        return load_config(path)


def _deg(*pairs):
    return [(f, math.radians(a)) for f, a in pairs]


# Heights / builds for the nine walkers.
_WALKER_GEOMETRIES = [
    PersonGeometry(1.70, 0.110, 0.085, 0.46, 0.25),
    PersonGeometry(1.90, 0.115, 0.090, 0.50, 0.27),
    PersonGeometry(1.50, 0.105, 0.082, 0.42, 0.23),
    PersonGeometry(1.72, 0.120, 0.095, 0.55, 0.28),
    PersonGeometry(1.68, 0.100, 0.078, 0.38, 0.22),
    PersonGeometry(1.80, 0.112, 0.088, 0.48, 0.26),
    PersonGeometry(1.62, 0.108, 0.084, 0.44, 0.24),
    PersonGeometry(1.76, 0.114, 0.090, 0.47, 0.25),
    PersonGeometry(1.55, 0.104, 0.080, 0.40, 0.23),
]


def _walker_script(index, geometry, waypoints, angles, duration,
                   noise_sigma_mm=10.0):
    person = ScriptedPerson(id=f"walker{index}", geometry=geometry,
                            waypoints=waypoints, angles=angles)
    return ScenarioScript(name=f"walk{index:02d}", duration_frames=duration,
                          persons=[person], noise_sigma_mm=noise_sigma_mm,
                          seed=100 + index)


def nine_walker_scripts(noise_sigma_mm=10.0):
    """The nine default single-person validation scripts."""
    g = _WALKER_GEOMETRIES
    scripts = [
        # 1: straight walk +x, head scanning left/right of the motion.
        _walker_script(1, g[0],
                       [(0, 1.7, 2.5), (51, 3.3, 2.5)],
                       _deg((0, 0), (12, 40), (26, -40), (40, 30), (51, 0)),
                       52),
        # 2: out-and-back along x, head following the motion.
        _walker_script(2, g[1],
                       [(0, 1.7, 2.3), (22, 3.3, 2.3), (28, 3.3, 2.7),
                        (50, 1.7, 2.7)],
                       _deg((0, 0), (22, 0), (24, 45), (26, 90), (28, 135),
                            (30, 180), (50, 180)),
                       51),
        # 3: L-shaped path, head fixed straight ahead.
        _walker_script(3, g[2],
                       [(0, 1.8, 2.0), (24, 3.2, 2.0), (28, 3.2, 2.1),
                        (50, 3.2, 3.0)],
                       _deg((0, 0), (24, 0), (26, 30), (30, 75), (32, 90),
                            (50, 90)),
                       51),
        # 4: walk to the center, stop and sweep the head.
        _walker_script(4, g[3],
                       [(0, 1.7, 2.5), (16, 2.5, 2.5), (51, 2.5, 2.5)],
                       _deg((0, 0), (16, 0), (24, 60), (34, 60), (44, -20),
                            (51, -20)),
                       52),
        # 5: diagonal walk with the head held 30 degrees off the motion.
        _walker_script(5, g[4],
                       [(0, 1.8, 2.1), (50, 3.2, 2.9)],
                       _deg((0, 30), (10, 60), (30, 60), (44, 20), (50, 20)),
                       51),
        # 6: slow stroll with a long smooth sweep.
        _walker_script(6, g[5],
                       [(0, 1.8, 2.6), (51, 3.0, 2.4)],
                       _deg((0, -10), (14, 35), (30, -45), (46, 25),
                            (51, 0)),
                       52),
        # 7: walk +y, pause, turn around slowly.
        _walker_script(7, g[6],
                       [(0, 2.4, 2.0), (18, 2.4, 3.0), (34, 2.4, 3.0),
                        (50, 2.6, 2.1)],
                       _deg((0, 90), (18, 90), (26, 180), (34, 270),
                            (50, 270)),
                       51),
        # 8: rectangular loop, head tangent to the path.
        _walker_script(8, g[7],
                       [(0, 1.9, 2.2), (14, 3.1, 2.2), (18, 3.1, 2.4),
                        (26, 3.1, 2.8), (30, 2.9, 2.8), (44, 1.9, 2.8),
                        (50, 1.9, 2.4)],
                       _deg((0, 0), (14, 0), (18, 45), (24, 90), (28, 135),
                            (32, 180), (44, 180), (48, 225), (50, 260)),
                       51),
        # 9: walk in and stand facing a corner.
        _walker_script(9, g[8],
                       [(0, 1.8, 2.8), (20, 2.8, 2.2), (51, 2.8, 2.2)],
                       _deg((0, -30), (20, -30), (28, -60), (40, -45),
                            (51, -45)),
                       52),
    ]
    if noise_sigma_mm != 10.0:
        for s in scripts:
            s.noise_sigma_mm = noise_sigma_mm
    return scripts


def dwell_script(noise_sigma_mm=10.0):
    """Four-sign dwell scenario: gaze dwell 50/30/15/5 percent on the
    north/east/south/west signs respectively (after an 8-frame walk-in)."""
    person = ScriptedPerson(
        id="viewer",
        geometry=_WALKER_GEOMETRIES[0],
        waypoints=[(0, 1.7, 2.5), (8, 2.5, 2.5), (186, 2.5, 2.5)],
        angles=_deg(
            (0, 0),            # walk in facing east
            (56, 0),           # east dwell (48 frames)
            (62, 90),          # turn east -> north
            (142, 90),         # north dwell (80 frames)
            (148, 180),        # turn north -> west
            (156, 180),        # west dwell (8 frames)
            (162, 270),        # turn west -> south
            (186, 270),        # south dwell (24 frames)
        ),
    )
    return ScenarioScript(name="dwell_four_signs", duration_frames=187,
                          persons=[person], noise_sigma_mm=noise_sigma_mm,
                          seed=42)


def builtin_scripts(noise_sigma_mm=10.0):
    scripts = {s.name: s for s in nine_walker_scripts(noise_sigma_mm)}
    scripts["dwell_four_signs"] = dwell_script(noise_sigma_mm)
    return scripts


def generate_reference_histograms(room, cfg):
    """Render the five canonical person geometries standing under the camera
    and compute their blob depth histograms."""
    refs = []
    bg = render_background(None, room)
    cx, cy = room.camera_position
    for name, geometry in REFERENCE_GEOMETRIES.items():
        person = ScriptedPerson(id=name, geometry=geometry,
                                waypoints=[(0, cx, cy)],
                                angles=[(0, 0.0)])
        script = ScenarioScript(name=f"ref_{name}", duration_frames=1,
                                persons=[person], noise_sigma_mm=0.0)
        frame = render_frame(script, 0, room)
        mask = subtract_background(frame, bg, cfg.bg_delta_mm)
        blobs = extract_blobs(mask, cfg.min_blob_px)
        if not blobs:
            raise RuntimeError(f"reference geometry {name!r} rendered no blob")
        refs.append(blob_histogram(frame, blobs[0], cfg.hist_bins,
                                   cfg.hist_range_mm))
    return refs
