"""End-to-end detection pipeline with per-stage timing and funnel counters.

Stage order: adaptive thresholding, topological filtering (labeling plus
candidate selection and centroid extraction), key point identification
(anchor ordering and bottom corners), geometric filtering (same-side and
collinearity), initial pose estimation (16 hypotheses), decoding, and final
pose refinement.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import decoder as _decoder
from . import keypoints as _keypoints
from .config import DetectorConfig
from .imgproc import adaptive_threshold
from .marker import TagFamily
from .pose import CameraIntrinsics
from .topology import connected_components_hierarchy, find_candidates

STAGES = (
    "threshold",
    "topology",
    "keypoints",
    "geometry",
    "initial_pose",
    "decode",
    "final_pose",
)


@dataclass
class DetectionStats:
    """Funnel counters (candidates surviving each filter) and stage times."""

    candidates_topological: int = 0
    candidates_area: int = 0
    candidates_angle: int = 0
    candidates_geometry: int = 0
    candidates_collinearity: int = 0
    detections: int = 0
    timing_us: dict[str, float] = field(default_factory=dict)


class _StageClock:
    def __init__(self) -> None:
        self.times = {name: 0.0 for name in STAGES}
        self._t0 = 0.0
        self._stage: str | None = None

    def start(self, stage: str) -> None:
        self._stage = stage
        self._t0 = time.perf_counter()

    def stop(self) -> None:
        if self._stage is not None:
            self.times[self._stage] += (time.perf_counter() - self._t0) * 1e6
            self._stage = None


class Detector:
    """Immutable detector; safe to reuse across images and threads."""

    def __init__(self, config: DetectorConfig | None = None):
        self.config = config or DetectorConfig()
        self.family = TagFamily.of(self.config.grid_size)

    def _intrinsics_for(self, img: np.ndarray) -> CameraIntrinsics:
        if self.config.intrinsics is not None:
            return self.config.intrinsics
        return CameraIntrinsics.default_for_image(img.shape[1], img.shape[0])

    def detect(
        self, img: np.ndarray
    ) -> tuple[list[_decoder.Detection], DetectionStats]:
        """Run the full pipeline on a grayscale uint8 image."""
        if img.ndim != 2 or img.size == 0:
            raise ValueError("expected a non-empty 2D grayscale image")
        cfg = self.config
        family = self.family
        n = family.grid_size
        intrinsics = self._intrinsics_for(img)
        stats = DetectionStats()
        clock = _StageClock()

        clock.start("threshold")
        binary = adaptive_threshold(img, cfg.mean_window_px, cfg.threshold_offset)
        clock.stop()

        clock.start("topology")
        tree = connected_components_hierarchy(binary)
        n2 = n * n
        is_black = tree.color == 1
        has_parent = tree.parent >= 0
        child_counts = np.bincount(
            tree.parent[is_black & has_parent].astype(np.int64),
            minlength=tree.n_regions,
        )
        stats.candidates_topological = int(
            ((child_counts >= n2) & (tree.color == 0)).sum()
        )
        candidates = find_candidates(
            tree, img, n, cfg.max_area_ratio, cfg.centroid_dilation_px
        )
        stats.candidates_area = len(candidates)
        clock.stop()

        detections = []
        for candidate in candidates:
            clock.start("keypoints")
            try:
                kps = _keypoints.identify_keypoints(candidate, n)
            except _keypoints.CandidateRejected:
                clock.stop()
                continue
            clock.stop()
            stats.candidates_angle += 1

            clock.start("geometry")
            try:
                _keypoints.geometry_constraint(
                    list(kps.data), kps.top_left, kps.top_right, n, cfg.line_band_px
                )
            except _keypoints.CandidateRejected:
                clock.stop()
                continue
            stats.candidates_geometry += 1
            all_centroids = [ch.centroid for ch in candidate.children]
            try:
                _keypoints.collinearity_constraint(all_centroids, cfg.min_line_residual)
            except _keypoints.CandidateRejected:
                clock.stop()
                continue
            clock.stop()
            stats.candidates_collinearity += 1

            clock.start("initial_pose")
            hypotheses = _decoder.enumerate_hypotheses(kps, family, intrinsics, img)
            clock.stop()
            if not hypotheses:
                continue

            clock.start("decode")
            result = _decoder.decode_candidate(
                hypotheses, list(kps.data), family, intrinsics
            )
            if result is None:
                clock.stop()
                continue
            metric = _decoder.decoding_error_metric(
                result.residual, candidate.white_area, result.hypothesis.quality
            )
            if metric > cfg.effective_error_metric_max:
                clock.stop()
                continue
            clock.stop()

            clock.start("final_pose")
            pose, refined = _decoder.final_pose(result, kps, family, intrinsics)
            clock.stop()

            detections.append(
                _decoder.Detection(
                    family=family,
                    tag_id=result.tag_id,
                    pose=pose,
                    error_metric=float(metric),
                    white_area=candidate.white_area,
                    quality=result.hypothesis.quality,
                    centroids=_decoder.detection_centroids_row_major(
                        result, kps, family
                    ),
                    final_pose_refined=refined,
                    white_bbox=(
                        int(tree.min_row[candidate.white_region]),
                        int(tree.min_col[candidate.white_region]),
                        int(tree.max_row[candidate.white_region]),
                        int(tree.max_col[candidate.white_region]),
                    ),
                )
            )

        detections = _drop_overlapping(detections)
        stats.detections = len(detections)
        stats.timing_us = {k: round(v, 1) for k, v in clock.times.items()}
        return detections, stats


def _bbox_overlaps(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> bool:
    return not (a[2] < b[0] or b[2] < a[0] or a[3] < b[1] or b[3] < a[1])


def _drop_overlapping(detections: list[_decoder.Detection]) -> list[_decoder.Detection]:
    """Keep the lower error metric among detections on overlapping whites."""
    kept: list[_decoder.Detection] = []
    for det in sorted(detections, key=lambda d: d.error_metric):
        if all(not _bbox_overlaps(det.white_bbox, k.white_bbox) for k in kept):
            kept.append(det)
    kept.sort(key=lambda d: (d.white_bbox, d.tag_id))
    return kept
