"""Per-frame head detection from a top-view depth image.

Stages: background subtraction, connected-component blob extraction,
person filtering by depth-histogram correlation against stored reference
histograms, bimodal head/shoulder split at the histogram valley, and
oriented-ellipse fit on the head mask.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import (ConfigError, DegenerateFitError, DimensionMismatchError,
                     NoHeadSplitError, UndefinedCorrelationError)
from .room import pixel_to_room

# 4-connectivity structuring element for blob labelling.
_CONN4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass
class BodyBlob:
    pixels: np.ndarray  # (N, 2) array of (row, col) coordinates
    area_px: int
    bbox: tuple  # (min_row, min_col, max_row, max_col), inclusive
    touches_border: bool = False


@dataclass
class DepthHistogram:
    bin_edges: np.ndarray  # (bins + 1,) millimeters, uniform
    counts: np.ndarray  # (bins,) non-negative ints


@dataclass
class HeadDetection:
    center_px: tuple  # (u, v)
    center_room: tuple  # (x, y) meters
    ellipse_major_px: float
    ellipse_minor_px: float
    axis_angle_rad: float  # [0, pi), direction-ambiguous
    head_top_depth_mm: float
    partial: bool = False  # blob touches the image border


def subtract_background(frame, bg, delta):
    """Binary mask of pixels closer to the camera than background by > delta.

    Pixels with an invalid depth (0) in either image are excluded.
    """
    if delta <= 0:
        raise ConfigError("bg_delta_mm must be positive", field="bg_delta_mm")
    bg.check_shape(frame)
    f = frame.depth_mm.astype(np.int32)
    b = bg.depth_mm.astype(np.int32)
    return (b - f > delta) & (f > 0) & (b > 0)


def extract_blobs(mask, min_area):
    """4-connected components of `mask` with area >= min_area, largest first."""
    labels, n = ndimage.label(mask, structure=_CONN4)
    blobs = []
    h, w = mask.shape
    for idx in range(1, n + 1):
        pixels = np.argwhere(labels == idx)
        if len(pixels) < min_area:
            continue
        rmin, cmin = pixels.min(axis=0)
        rmax, cmax = pixels.max(axis=0)
        blobs.append(BodyBlob(
            pixels=pixels,
            area_px=len(pixels),
            bbox=(int(rmin), int(cmin), int(rmax), int(cmax)),
            touches_border=(rmin == 0 or cmin == 0
                            or rmax == h - 1 or cmax == w - 1),
        ))
    blobs.sort(key=lambda b: -b.area_px)
    return blobs


def blob_histogram(frame, blob, bins, range_mm):
    """Depth histogram over a blob's pixels; out-of-range depths clamp to the
    edge bins so that the counts always sum to the blob area."""
    if bins < 2:
        raise ConfigError("hist_bins must be at least 2", field="hist_bins")
    lo, hi = range_mm
    edges = np.linspace(lo, hi, bins + 1)
    depths = frame.depth_mm[blob.pixels[:, 0], blob.pixels[:, 1]]
    clamped = np.clip(depths.astype(np.float64), lo, np.nextafter(hi, lo))
    counts, _ = np.histogram(clamped, bins=edges)
    return DepthHistogram(bin_edges=edges, counts=counts)


def histogram_correlation(h1, h2):
    """Pearson correlation between two histograms' count vectors."""
    a = np.asarray(h1.counts, dtype=np.float64)
    b = np.asarray(h2.counts, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"histograms have {a.shape} vs {b.shape} bins")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt((da * da).sum() * (db * db).sum())
    if denom == 0:
        raise UndefinedCorrelationError(
            "constant histogram: correlation undefined")
    return float(np.clip((da * db).sum() / denom, -1.0, 1.0))


def filter_person_blobs(blobs, histograms, refs, threshold):
    """Keep blobs whose best correlation against the references clears the
    threshold.  Undefined correlations count as non-matches."""
    if not refs:
        raise ConfigError("at least one reference histogram is required",
                          field="refs")
    kept = []
    for blob, hist in zip(blobs, histograms):
        best = -np.inf
        for ref in refs:
            try:
                best = max(best, histogram_correlation(hist, ref))
            except UndefinedCorrelationError:
                continue
        if best >= threshold:
            kept.append(blob)
    return kept


def _local_maxima(counts):
    idx = []
    n = len(counts)
    for i in range(n):
        if counts[i] == 0:
            continue
        left_ok = i == 0 or counts[i] > counts[i - 1]
        right_ok = i == n - 1 or counts[i] >= counts[i + 1]
        if left_ok and right_ok:
            idx.append(i)
    return idx


def split_head_mask(frame, blob, hist):
    """Separate head pixels from shoulder pixels.

    Takes the two highest local maxima of the blob's depth histogram (head is
    the shallower peak, shoulders the deeper one), locates the minimum-count
    bin strictly between them, and keeps blob pixels closer to the camera
    than that bin's lower edge.  Returns a boolean image mask.
    """
    counts = np.asarray(hist.counts)
    maxima = _local_maxima(counts)
    maxima.sort(key=lambda i: (-counts[i], i))
    if len(maxima) < 2 or abs(maxima[0] - maxima[1]) < 2:
        raise NoHeadSplitError("blob depth histogram is not bimodal")
    lo_i, hi_i = sorted(maxima[:2])
    between = np.arange(lo_i + 1, hi_i)
    min_bin = between[np.argmin(counts[between])]
    threshold_mm = hist.bin_edges[min_bin]

    mask = np.zeros(frame.depth_mm.shape, dtype=bool)
    depths = frame.depth_mm[blob.pixels[:, 0], blob.pixels[:, 1]]
    head = blob.pixels[(depths > 0) & (depths < threshold_mm)]
    mask[head[:, 0], head[:, 1]] = True
    return mask


def fit_ellipse(mask):
    """Moment-based oriented-ellipse fit of a boolean pixel mask.

    Returns (center_px, major_px, minor_px, axis_angle_rad) with the angle in
    [0, pi) measured from the +u axis.  Axis lengths are the full extent of
    the equivalent solid ellipse (4 * sqrt(eigenvalue)).
    """
    pts = np.argwhere(mask)
    if len(pts) < 5:
        raise DegenerateFitError("need at least 5 pixels to fit an ellipse")
    v = pts[:, 0].astype(np.float64)
    u = pts[:, 1].astype(np.float64)
    uc, vc = u.mean(), v.mean()
    du, dv = u - uc, v - vc
    mu20 = (du * du).mean()
    mu02 = (dv * dv).mean()
    mu11 = (du * dv).mean()
    common = np.sqrt((mu20 - mu02) ** 2 + 4.0 * mu11 ** 2)
    lam1 = 0.5 * (mu20 + mu02 + common)
    lam2 = 0.5 * (mu20 + mu02 - common)
    if lam2 <= 1e-9:
        raise DegenerateFitError("collinear pixel mask: degenerate ellipse")
    angle = 0.5 * np.arctan2(2.0 * mu11, mu20 - mu02)
    angle = float(np.mod(angle, np.pi))
    return ((float(uc), float(vc)),
            4.0 * float(np.sqrt(lam1)), 4.0 * float(np.sqrt(lam2)), angle)


def detect_heads(frame, bg, cfg, refs, room):
    """Full single-frame detection: background subtraction, blob filtering,
    head split, ellipse fit and back-projection to room coordinates.

    Blobs failing any stage are dropped silently; only structural errors
    (shape mismatches, bad parameters) propagate.
    """
    mask = subtract_background(frame, bg, cfg.bg_delta_mm)
    blobs = extract_blobs(mask, cfg.min_blob_px)
    if not blobs:
        return []
    hists = [blob_histogram(frame, b, cfg.hist_bins, cfg.hist_range_mm)
             for b in blobs]
    kept = filter_person_blobs(blobs, hists, refs, cfg.corr_threshold)
    hist_by_id = {id(b): h for b, h in zip(blobs, hists)}

    detections = []
    for blob in kept:
        try:
            head_mask = split_head_mask(frame, blob, hist_by_id[id(blob)])
            center, major, minor, angle = fit_ellipse(head_mask)
        except (NoHeadSplitError, DegenerateFitError):
            continue
        depths = frame.depth_mm[head_mask]
        depth = float(np.median(depths))
        try:
            center_room = pixel_to_room(center[0], center[1], depth, room)
        except ConfigError:
            continue
        detections.append(HeadDetection(
            center_px=center,
            center_room=center_room,
            ellipse_major_px=major,
            ellipse_minor_px=minor,
            axis_angle_rad=angle,
            head_top_depth_mm=depth,
            partial=blob.touches_border,
        ))
    return detections


def write_reference_histograms(path, refs):
    """Persist reference histograms as a plain-text table: one line of bin
    edges followed by one count row per histogram."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(" ".join(f"{e:.1f}" for e in refs[0].bin_edges) + "\n")
        for ref in refs:
            f.write(" ".join(str(int(c)) for c in ref.counts) + "\n")


def read_reference_histograms(path):
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    edges = np.array([float(t) for t in lines[0].split()])
    refs = []
    for ln in lines[1:]:
        counts = np.array([int(t) for t in ln.split()])
        if len(counts) != len(edges) - 1:
            raise ConfigError("reference histogram row length mismatch",
                              field="refs")
        refs.append(DepthHistogram(bin_edges=edges, counts=counts))
    return refs
