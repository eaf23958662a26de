"""End-to-end orchestration: synthetic sequence generation, the
detect/track/attend run over a frame directory, and oracle comparison."""

import json
import math
import os
import time
from dataclasses import dataclass, asdict, field

import numpy as np

from . import depthio
from .angles import circ_dist
from .attention import (AttentionParams, accumulate_trajectory, aggregate,
                        sign_report, write_heatmap, write_sign_report)
from .detection import detect_heads, read_reference_histograms, \
    write_reference_histograms
from .depthio import BackgroundModel, load_sequence, write_manifest, \
    write_pgm16
from .errors import DataError
from .room import load_config, wall_samples
from .scenarios import (builtin_scripts, default_setup,
                        generate_reference_histograms, write_default_config)
from .synthetic import (ground_truth, read_ground_truth_csv, read_script,
                        render_background, render_frame, write_ground_truth_csv,
                        write_script)
from .tracking import HeadTracker
from .trajectory import build_trajectory, write_trajectories_csv

GT_CSV_NAME = "ground_truth.csv"
BACKGROUND_NAME = "background.pgm"

# Room-plane distance under which a pipeline state and a ground-truth state
# are considered the same person.
MATCH_RADIUS_M = 0.5


@dataclass
class RunSummary:
    frames_processed: int = 0
    detections: int = 0
    confirmed_tracks: int = 0
    wall_clock_s: float = 0.0
    effective_fps: float = 0.0
    false_negatives: int = None
    false_positives: int = None
    fn_rate_pct: float = None
    id_switches: int = None
    angle_mae_deg: float = None
    sign_ranking: list = None
    oracle_sign_ranking: list = None
    ranking_matches_oracle: bool = None


def load_setup(config_path=None):
    """Load a config file, or fall back to the builtin default setup."""
    if config_path is None:
        return default_setup()
    return load_config(config_path)


def synthesize_sequence(script, room, cfg, out_dir):
    """Render a script into a frame directory: PGM frames, manifest,
    background model, ground-truth CSV and a copy of the script."""
    os.makedirs(out_dir, exist_ok=True)
    bg = render_background(script, room)
    write_pgm16(os.path.join(out_dir, BACKGROUND_NAME), bg.depth_mm)
    entries = []
    for k in range(script.duration_frames):
        frame = render_frame(script, k, room, timestamp_s=k / cfg.fps)
        name = f"frame_{k:05d}.pgm"
        write_pgm16(os.path.join(out_dir, name), frame.depth_mm)
        entries.append((name, frame.timestamp_s))
    write_manifest(os.path.join(out_dir, depthio.MANIFEST_NAME), entries)
    write_ground_truth_csv(os.path.join(out_dir, GT_CSV_NAME), script, room,
                           cfg)
    write_script(os.path.join(out_dir, "script.ini"), script)
    return script.duration_frames


def synthesize(script_path, out_dir, config_path=None, use_default_set=False,
               seed=None):
    """CLI/service entry for scene generation; returns per-sequence info."""
    room, signs, cfg = load_setup(config_path)
    if use_default_set:
        scripts = list(builtin_scripts().values())
    else:
        if script_path is None:
            raise DataError("either a script path or the default set is "
                            "required")
        scripts = [read_script(script_path)]
    if seed is not None:
        for s in scripts:
            s.seed = seed
    os.makedirs(out_dir, exist_ok=True)
    if config_path is None:
        write_default_config(os.path.join(out_dir, "config.ini"))
    results = []
    for script in scripts:
        seq_dir = os.path.join(out_dir, script.name)
        frames = synthesize_sequence(script, room, cfg, seq_dir)
        results.append({"name": script.name, "dir": seq_dir,
                        "frames": frames})
    return results


def make_reference_histograms(out_path, config_path=None):
    room, _, cfg = load_setup(config_path)
    refs = generate_reference_histograms(room, cfg)
    write_reference_histograms(out_path, refs)
    return refs


def _load_background(frames_dir, room):
    path = os.path.join(frames_dir, BACKGROUND_NAME)
    if os.path.exists(path):
        return BackgroundModel(depth_mm=depthio.read_pgm16(path))
    # No recorded empty scene: assume a bare floor at the camera height.
    return render_background(None, room)


def _load_refs(frames_dir, room, cfg, refs_path=None):
    if refs_path is None:
        candidate = os.path.join(frames_dir, "reference_histograms.txt")
        refs_path = candidate if os.path.exists(candidate) else None
    if refs_path is not None:
        return read_reference_histograms(refs_path)
    return generate_reference_histograms(room, cfg)


def _match_states(traj_states, gt_rows):
    """Pair pipeline states with ground-truth rows frame by frame.

    Returns (matches, false_negatives, false_positives, id_switches) where
    matches is a list of (state, gt_row) pairs.
    """
    by_frame = {}
    for track_id, state in traj_states:
        by_frame.setdefault(state.frame_index, []).append((track_id, state))

    matches = []
    fn = 0
    matched_state_ids = set()
    last_track_for_person = {}
    id_switches = 0
    for row in gt_rows:
        frame = row["frame"]
        candidates = by_frame.get(frame, [])
        best = None
        best_d = MATCH_RADIUS_M
        for track_id, state in candidates:
            d = math.hypot(state.p_prime[0] - row["x"],
                           state.p_prime[1] - row["y"])
            if d <= best_d and id(state) not in matched_state_ids:
                best, best_d = (track_id, state), d
        if best is None:
            if row["fully_visible"]:
                fn += 1
            continue
        track_id, state = best
        matched_state_ids.add(id(state))
        matches.append((state, row))
        prev = last_track_for_person.get(row["person_id"])
        if prev is not None and prev != track_id:
            id_switches += 1
        last_track_for_person[row["person_id"]] = track_id

    total_states = sum(len(v) for v in by_frame.values())
    fp = total_states - len(matches)
    return matches, fn, fp, id_switches


def run_pipeline(frames_dir, out_dir, config_path=None, no_track=False,
                 heatmap_px_per_sample=1, refs_path=None):
    """Process a recorded or synthetic frame directory end to end.

    Writes trajectories.csv, heatmap.pgm, sign_report.json and
    run_summary.json under out_dir; when the directory carries oracle ground
    truth, the summary also reports MAE / FN / FP / ranking agreement.
    """
    room, signs, cfg = load_setup(config_path)
    os.makedirs(out_dir, exist_ok=True)
    bg = _load_background(frames_dir, room)
    refs = _load_refs(frames_dir, room, cfg, refs_path)

    t0 = time.perf_counter()
    tracker = HeadTracker(cfg)
    n_frames = 0
    n_detections = 0
    all_detections = []
    for frame in load_sequence(frames_dir):
        detections = detect_heads(frame, bg, cfg, refs, room)
        n_detections += len(detections)
        all_detections.append((frame.frame_index, detections))
        if not no_track:
            tracker.step(detections, frame.frame_index)
        n_frames += 1
    wall_clock = time.perf_counter() - t0

    summary = RunSummary(
        frames_processed=n_frames,
        detections=n_detections,
        wall_clock_s=wall_clock,
        effective_fps=n_frames / wall_clock if wall_clock > 0 else 0.0,
    )

    if no_track:
        _write_detections_csv(os.path.join(out_dir, "detections.csv"),
                              all_detections)
        _write_summary(out_dir, summary)
        return summary

    confirmed = [t for t in tracker.confirmed() if len(t.history) >= 2]
    summary.confirmed_tracks = len(confirmed)
    trajectories = [build_trajectory(t, room, cfg) for t in confirmed]
    write_trajectories_csv(os.path.join(out_dir, "trajectories.csv"),
                           trajectories)

    params = AttentionParams.from_config(cfg)
    samples = wall_samples(room, cfg.wall_step_m, signs)
    maps = [accumulate_trajectory(t, samples, params) for t in trajectories]
    report = None
    if maps:
        amap = aggregate(maps)
        write_heatmap(os.path.join(out_dir, "heatmap.pgm"), amap,
                      px_per_sample=heatmap_px_per_sample)
        if amap.normalized and signs:
            report = sign_report(amap, signs, trajectories, params, room)
            write_sign_report(os.path.join(out_dir, "sign_report.json"),
                              report)
            summary.sign_ranking = report.ranking()

    gt_path = os.path.join(frames_dir, GT_CSV_NAME)
    if os.path.exists(gt_path):
        _compare_with_oracle(summary, gt_path, trajectories, frames_dir,
                             room, signs, cfg, report)

    _write_summary(out_dir, summary)
    return summary


def _compare_with_oracle(summary, gt_path, trajectories, frames_dir, room,
                         signs, cfg, report):
    gt_rows = read_ground_truth_csv(gt_path)
    traj_states = [(t.person_id, s) for t in trajectories for s in t.states]
    matches, fn, fp, switches = _match_states(traj_states, gt_rows)
    visible = sum(1 for r in gt_rows if r["fully_visible"])
    summary.false_negatives = fn
    summary.false_positives = fp
    summary.fn_rate_pct = 100.0 * fn / visible if visible else 0.0
    summary.id_switches = switches
    if matches:
        errors = [float(circ_dist(s.phi, r["phi_rad"])) for s, r in matches]
        summary.angle_mae_deg = math.degrees(sum(errors) / len(errors))
    script_path = os.path.join(frames_dir, "script.ini")
    if signs and os.path.exists(script_path):
        script = read_script(script_path)
        _, _, gt_report = ground_truth(script, room, signs, cfg)
        if gt_report is not None:
            ranking = sorted(gt_report.rows, key=lambda r: -r["at_seconds"])
            summary.oracle_sign_ranking = [r["sign_id"] for r in ranking]
            if report is not None:
                summary.ranking_matches_oracle = (
                    summary.sign_ranking == summary.oracle_sign_ranking)


def _write_detections_csv(path, all_detections):
    import csv
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["frame", "u", "v", "x", "y", "axis_angle_deg",
                         "depth_mm", "partial"])
        for frame_index, detections in all_detections:
            for d in detections:
                writer.writerow([
                    frame_index, f"{d.center_px[0]:.2f}",
                    f"{d.center_px[1]:.2f}",
                    f"{d.center_room[0]:.4f}", f"{d.center_room[1]:.4f}",
                    f"{math.degrees(d.axis_angle_rad):.2f}",
                    f"{d.head_top_depth_mm:.1f}", int(d.partial),
                ])


def _write_summary(out_dir, summary):
    with open(os.path.join(out_dir, "run_summary.json"), "w",
              encoding="utf-8") as f:
        json.dump(asdict(summary), f, indent=2)
        f.write("\n")
