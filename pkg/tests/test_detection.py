import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from attentrack.depthio import BackgroundModel, DepthFrame
from attentrack.detection import (BodyBlob, DepthHistogram, blob_histogram,
                                  detect_heads, extract_blobs, fit_ellipse,
                                  filter_person_blobs, histogram_correlation,
                                  read_reference_histograms,
                                  split_head_mask, subtract_background,
                                  write_reference_histograms)
from attentrack.errors import (ConfigError, DegenerateFitError,
                               DimensionMismatchError, NoHeadSplitError,
                               UndefinedCorrelationError)
from attentrack.scenarios import REFERENCE_GEOMETRIES
from attentrack.synthetic import (BoxProp, ScenarioScript, ScriptedPerson,
                                  render_background, render_frame)


def _frame(depth, index=0, ts=0.0):
    return DepthFrame(depth_mm=np.asarray(depth, dtype=np.uint16),
                      frame_index=index, timestamp_s=ts)


def _bg(depth):
    return BackgroundModel(depth_mm=np.asarray(depth, dtype=np.uint16))


def _blob_from_mask(mask):
    pixels = np.argwhere(mask)
    rmin, cmin = pixels.min(axis=0)
    rmax, cmax = pixels.max(axis=0)
    return BodyBlob(pixels=pixels, area_px=len(pixels),
                    bbox=(rmin, cmin, rmax, cmax))


class TestSubtractBackground:
    def test_identical_frame_gives_empty_mask(self):
        depth = np.full((10, 10), 2800)
        mask = subtract_background(_frame(depth), _bg(depth), 300)
        assert not mask.any()

    def test_single_close_pixel(self):
        bg = np.full((5, 5), 2800)
        frame = bg.copy()
        frame[2, 3] = 1200
        mask = subtract_background(_frame(frame), _bg(bg), 300)
        assert mask.sum() == 1 and mask[2, 3]

    def test_invalid_depth_excluded(self):
        bg = np.full((5, 5), 2800)
        frame = bg.copy()
        frame[1, 1] = 0  # invalid measurement, not an object
        mask = subtract_background(_frame(frame), _bg(bg), 300)
        assert not mask.any()

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            subtract_background(_frame(np.zeros((4, 4))),
                                _bg(np.zeros((5, 5))), 300)

    @given(delta1=st.integers(50, 500), extra=st.integers(1, 500),
           seed=st.integers(0, 1000))
    @settings(max_examples=30, deadline=None)
    def test_monotone_in_delta(self, delta1, extra, seed):
        rng = np.random.default_rng(seed)
        bg = rng.integers(1000, 3000, size=(12, 12))
        frame = rng.integers(500, 3000, size=(12, 12))
        m1 = subtract_background(_frame(frame), _bg(bg), delta1)
        m2 = subtract_background(_frame(frame), _bg(bg), delta1 + extra)
        assert (m2 <= m1).all()


def _flood_fill_components(mask):
    """Independent 4-connectivity oracle (BFS)."""
    mask = np.asarray(mask, dtype=bool)
    seen = np.zeros_like(mask)
    comps = []
    for r, c in np.argwhere(mask):
        if seen[r, c]:
            continue
        stack, comp = [(r, c)], []
        seen[r, c] = True
        while stack:
            y, x = stack.pop()
            comp.append((y, x))
            for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ny, nx = y + dy, x + dx
                if 0 <= ny < mask.shape[0] and 0 <= nx < mask.shape[1] \
                        and mask[ny, nx] and not seen[ny, nx]:
                    seen[ny, nx] = True
                    stack.append((ny, nx))
        comps.append(frozenset(comp))
    return set(comps)


class TestExtractBlobs:
    def test_two_squares(self):
        mask = np.zeros((40, 40), dtype=bool)
        mask[2:12, 2:12] = True
        mask[20:30, 20:30] = True
        blobs = extract_blobs(mask, 50)
        assert len(blobs) == 2
        assert blobs[0].area_px == blobs[1].area_px == 100

    def test_small_speck_removed(self):
        mask = np.zeros((20, 20), dtype=bool)
        mask[3:5, 3:8] = True  # 10 px
        assert extract_blobs(mask, 50) == []

    def test_diagonal_pixels_are_separate(self):
        mask = np.zeros((10, 10), dtype=bool)
        mask[2, 2] = mask[3, 3] = True
        blobs = extract_blobs(mask, 1)
        assert len(blobs) == 2

    @given(seed=st.integers(0, 500))
    @settings(max_examples=25, deadline=None)
    def test_matches_flood_fill_oracle(self, seed):
        rng = np.random.default_rng(seed)
        mask = rng.random((16, 16)) < 0.4
        blobs = extract_blobs(mask, 1)
        got = {frozenset(map(tuple, b.pixels)) for b in blobs}
        assert got == _flood_fill_components(mask)

    def test_sorted_by_decreasing_area(self):
        mask = np.zeros((30, 60), dtype=bool)
        mask[1:4, 1:4] = True      # 9 px
        mask[10:20, 10:25] = True  # 150 px
        blobs = extract_blobs(mask, 1)
        assert [b.area_px for b in blobs] == [150, 9]

    def test_border_flag(self):
        mask = np.zeros((10, 10), dtype=bool)
        mask[0:3, 4:7] = True
        mask[5:8, 4:7] = True
        blobs = sorted(extract_blobs(mask, 1), key=lambda b: b.bbox[0])
        assert blobs[0].touches_border and not blobs[1].touches_border


class TestBlobHistogram:
    def test_uniform_depth_single_bin(self):
        depth = np.full((10, 10), 1200)
        blob = _blob_from_mask(np.ones((10, 10), dtype=bool))
        h = blob_histogram(_frame(depth), blob, 36, (800, 2600))
        assert h.counts.sum() == 100
        assert (h.counts > 0).sum() == 1

    def test_two_equal_peaks(self):
        depth = np.full((10, 10), 1200)
        depth[5:, :] = 1600
        blob = _blob_from_mask(np.ones((10, 10), dtype=bool))
        h = blob_histogram(_frame(depth), blob, 36, (800, 2600))
        peaks = h.counts[h.counts > 0]
        assert list(peaks) == [50, 50]

    def test_out_of_range_clamped_to_edge_bins(self):
        depth = np.array([[100, 5000, 1200, 1200]])
        blob = _blob_from_mask(np.ones((1, 4), dtype=bool))
        h = blob_histogram(_frame(depth), blob, 10, (800, 2600))
        assert h.counts.sum() == 4
        assert h.counts[0] == 1 and h.counts[-1] == 1

    @given(seed=st.integers(0, 500))
    @settings(max_examples=25, deadline=None)
    def test_counts_sum_to_area(self, seed):
        rng = np.random.default_rng(seed)
        depth = rng.integers(100, 4000, size=(12, 12))
        mask = rng.random((12, 12)) < 0.5
        if not mask.any():
            mask[0, 0] = True
        blob = _blob_from_mask(mask)
        h = blob_histogram(_frame(depth), blob, 36, (800, 2600))
        assert h.counts.sum() == blob.area_px


def _hist(counts):
    counts = np.asarray(counts)
    edges = np.linspace(0, len(counts), len(counts) + 1)
    return DepthHistogram(bin_edges=edges, counts=counts)


class TestHistogramCorrelation:
    def test_self_correlation_is_one(self):
        h = _hist([1, 5, 2, 9])
        assert histogram_correlation(h, h) == pytest.approx(1.0)

    def test_perfect_anticorrelation(self):
        assert histogram_correlation(_hist([1, 2, 3]), _hist([3, 2, 1])) == \
            pytest.approx(-1.0)

    def test_constant_histogram_undefined(self):
        with pytest.raises(UndefinedCorrelationError):
            histogram_correlation(_hist([4, 4, 4]), _hist([1, 2, 3]))

    def test_bin_count_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            histogram_correlation(_hist([1, 2]), _hist([1, 2, 3]))

    @given(st.lists(st.integers(0, 50), min_size=4, max_size=12),
           st.integers(2, 9))
    @settings(max_examples=50, deadline=None)
    def test_symmetric_bounded_scale_invariant(self, counts, scale):
        rng = np.random.default_rng(sum(counts) + scale)
        other = rng.integers(0, 50, size=len(counts))
        h1, h2 = _hist(counts), _hist(other)
        try:
            c12 = histogram_correlation(h1, h2)
        except UndefinedCorrelationError:
            return
        assert -1.0 <= c12 <= 1.0
        assert c12 == pytest.approx(histogram_correlation(h2, h1))
        scaled = _hist([scale * c for c in counts])
        assert histogram_correlation(scaled, h2) == pytest.approx(c12)


class TestFilterPersonBlobs:
    def test_exact_match_kept(self):
        blob = _blob_from_mask(np.ones((3, 3), dtype=bool))
        h = _hist([0, 5, 1, 7])
        assert filter_person_blobs([blob], [h], [h], 0.2) == [blob]

    def test_below_threshold_discarded(self):
        blob = _blob_from_mask(np.ones((3, 3), dtype=bool))
        h = _hist([10, 0, 0, 10, 0])
        refs = [_hist([0, 9, 1, 0, 9])] * 5
        corr = histogram_correlation(h, refs[0])
        assert corr < 0.2
        assert filter_person_blobs([blob], [h], refs, 0.2) == []

    def test_empty_refs_rejected(self):
        blob = _blob_from_mask(np.ones((3, 3), dtype=bool))
        with pytest.raises(ConfigError):
            filter_person_blobs([blob], [_hist([1, 2])], [], 0.2)

    def test_undefined_correlation_is_non_match(self):
        blob = _blob_from_mask(np.ones((3, 3), dtype=bool))
        constant = _hist([3, 3, 3])
        assert filter_person_blobs([blob], [constant], [_hist([1, 2, 9])],
                                   0.2) == []


def _split_oracle(counts):
    """Exhaustive oracle: index of the min-count bin strictly between the two
    highest local maxima."""
    maxima = []
    for i, c in enumerate(counts):
        if c == 0:
            continue
        left = i == 0 or c > counts[i - 1]
        right = i == len(counts) - 1 or c >= counts[i + 1]
        if left and right:
            maxima.append(i)
    maxima.sort(key=lambda i: (-counts[i], i))
    if len(maxima) < 2 or abs(maxima[0] - maxima[1]) < 2:
        return None
    lo, hi = sorted(maxima[:2])
    return min(range(lo + 1, hi), key=lambda i: counts[i])


class TestSplitHeadMask:
    COUNTS = [0, 5, 20, 5, 1, 8, 15, 3]

    def _setup(self, counts, bin_mm=50, lo=1000):
        # One pixel row per bin occurrence, depth at the bin center.
        depths = []
        for i, c in enumerate(counts):
            depths += [lo + i * bin_mm + bin_mm // 2] * c
        depth = np.array([depths])
        blob = _blob_from_mask(np.ones_like(depth, dtype=bool))
        edges = np.linspace(lo, lo + bin_mm * len(counts), len(counts) + 1)
        hist = DepthHistogram(bin_edges=edges,
                              counts=np.asarray(counts))
        return _frame(depth), blob, hist, edges

    def test_valley_threshold(self):
        frame, blob, hist, edges = self._setup(self.COUNTS)
        mask = split_head_mask(frame, blob, hist)
        kept = frame.depth_mm[mask]
        assert _split_oracle(self.COUNTS) == 4
        assert kept.max() < edges[4]
        # everything closer than the valley is kept: bins 0..3
        assert mask.sum() == sum(self.COUNTS[:4])

    def test_unimodal_rejected(self):
        frame, blob, hist, _ = self._setup([1, 5, 9, 5, 1])
        with pytest.raises(NoHeadSplitError):
            split_head_mask(frame, blob, hist)

    @given(seed=st.integers(0, 500))
    @settings(max_examples=40, deadline=None)
    def test_matches_scan_oracle(self, seed):
        rng = np.random.default_rng(seed)
        counts = rng.integers(0, 30, size=12).tolist()
        oracle = _split_oracle(counts)
        frame, blob, hist, edges = self._setup(counts)
        if oracle is None:
            with pytest.raises(NoHeadSplitError):
                split_head_mask(frame, blob, hist)
        else:
            mask = split_head_mask(frame, blob, hist)
            expected = sum(counts[:oracle])
            assert mask.sum() == expected

    def test_synthetic_head_shoulder_split(self):
        # Head plateau at 1200 mm, shoulders at 1450 mm.
        depth = np.full((20, 20), 2800)
        depth[5:15, 5:15] = 1450
        depth[8:12, 8:12] = 1200
        blob = _blob_from_mask(depth < 2000)
        frame = _frame(depth)
        hist = blob_histogram(frame, blob, 36, (800, 2600))
        mask = split_head_mask(frame, blob, hist)
        assert np.array_equal(mask, depth == 1200)


class TestFitEllipse:
    def _rect_mask(self, w, h, size=64):
        mask = np.zeros((size, size), dtype=bool)
        r0, c0 = (size - h) // 2, (size - w) // 2
        mask[r0:r0 + h, c0:c0 + w] = True
        return mask

    def test_axis_aligned_rectangle(self):
        center, major, minor, angle = fit_ellipse(self._rect_mask(20, 10))
        assert min(angle, math.pi - angle) < 0.02
        assert major / minor == pytest.approx(2.0, rel=0.05)

    def test_rotated_rectangle(self):
        size = 64
        yy, xx = np.mgrid[0:size, 0:size]
        cx = cy = size / 2
        # 20x10 rectangle rotated by 45 degrees
        a = math.pi / 4
        lon = (xx - cx) * math.cos(a) + (yy - cy) * math.sin(a)
        lat = -(xx - cx) * math.sin(a) + (yy - cy) * math.cos(a)
        mask = (np.abs(lon) <= 10) & (np.abs(lat) <= 5)
        _, _, _, angle = fit_ellipse(mask)
        assert abs(angle - math.pi / 4) < 0.02

    def test_disk_does_not_error(self):
        yy, xx = np.mgrid[0:40, 0:40]
        mask = (xx - 20) ** 2 + (yy - 20) ** 2 <= 15 ** 2
        _, major, minor, _ = fit_ellipse(mask)
        assert major / minor == pytest.approx(1.0, rel=0.05)

    def test_too_few_pixels(self):
        mask = np.zeros((10, 10), dtype=bool)
        mask[1, 1] = mask[2, 2] = mask[3, 3] = True
        with pytest.raises(DegenerateFitError):
            fit_ellipse(mask)

    def test_collinear_degenerate(self):
        mask = np.zeros((10, 10), dtype=bool)
        mask[4, 1:9] = True
        with pytest.raises(DegenerateFitError):
            fit_ellipse(mask)

    @given(angle_deg=st.integers(0, 175))
    @settings(max_examples=30, deadline=None)
    def test_rotation_equivariance(self, angle_deg):
        size = 96
        yy, xx = np.mgrid[0:size, 0:size]
        c = size / 2
        a = math.radians(angle_deg)
        lon = (xx - c) * math.cos(a) + (yy - c) * math.sin(a)
        lat = -(xx - c) * math.sin(a) + (yy - c) * math.cos(a)
        mask = (lon / 20) ** 2 + (lat / 10) ** 2 <= 1
        _, _, _, got = fit_ellipse(mask)
        err = abs(got - a) % math.pi
        assert min(err, math.pi - err) < 0.02

    def test_translation_moves_center_exactly(self):
        m1 = self._rect_mask(12, 8, size=64)
        m2 = np.roll(np.roll(m1, 5, axis=0), -7, axis=1)
        c1 = fit_ellipse(m1)[0]
        c2 = fit_ellipse(m2)[0]
        assert c2[0] - c1[0] == pytest.approx(-7)
        assert c2[1] - c1[1] == pytest.approx(5)


class TestDetectHeads:
    def test_empty_scene(self, room, cfg, refs):
        script = ScenarioScript(name="empty", duration_frames=1,
                                noise_sigma_mm=0.0)
        bg = render_background(script, room)
        frame = render_frame(script, 0, room)
        assert detect_heads(frame, bg, cfg, refs, room) == []

    def test_single_person_position(self, room, cfg, refs):
        geometry = REFERENCE_GEOMETRIES["average"]
        person = ScriptedPerson(id="p", geometry=geometry,
                                waypoints=[(0, 2.1, 2.7)],
                                angles=[(0, math.radians(40))])
        script = ScenarioScript(name="one", duration_frames=1,
                                persons=[person], noise_sigma_mm=0.0)
        bg = render_background(script, room)
        frame = render_frame(script, 0, room)
        dets = detect_heads(frame, bg, cfg, refs, room)
        assert len(dets) == 1
        d = dets[0]
        assert math.hypot(d.center_room[0] - 2.1, d.center_room[1] - 2.7) \
            <= 0.1
        axis_err = abs(math.degrees(d.axis_angle_rad) - 40) % 180
        assert min(axis_err, 180 - axis_err) < 2.0

    def test_box_prop_rejected(self, room, cfg, refs):
        box = BoxProp(id="crate", center=(2.9, 2.3), size=(0.5, 0.4),
                      height_m=0.5)
        script = ScenarioScript(name="box", duration_frames=1, props=[box],
                                noise_sigma_mm=0.0)
        bg = render_background(script, room)
        frame = render_frame(script, 0, room)
        assert detect_heads(frame, bg, cfg, refs, room) == []


def test_reference_histogram_round_trip(tmp_path, refs):
    path = tmp_path / "refs.txt"
    write_reference_histograms(path, refs)
    loaded = read_reference_histograms(path)
    assert len(loaded) == len(refs) == 5
    for a, b in zip(refs, loaded):
        assert np.array_equal(a.counts, b.counts)
        assert np.allclose(a.bin_edges, b.bin_edges)
