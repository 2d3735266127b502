"""Hypothesis enumeration, data decoding, and final pose refinement.

Only the two anchor regions have fixed marker coordinates, so 4-point PnP
needs an assumption about which of their 4 legal positions the two bottom
corner data regions occupy: 16 combinations, each yielding a pose scored by
the border-gradient quality metric. Every hypothesis then attempts a decode
by matching projected legal positions against the observed centroids; the
lowest normalized residual wins and must clear the acceptance bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .keypoints import KeyPointSet
from .marker import TagFamily
from .pose import (
    CameraIntrinsics,
    Pose,
    PoseEstimationError,
    pose_quality,
    project,
    solve_planar_pnp,
)

# Both IPPE solutions of a hypothesis are decoded when their reprojection
# errors are within this relative margin (near-frontal ambiguity).
AMBIGUITY_MARGIN = 0.25


@dataclass(frozen=True)
class PoseHypothesis:
    """One assumed placement of the bottom corner data regions."""

    bl_position: int  # position index of the bottom-left corner cell
    br_position: int
    pose: Pose
    quality: float
    reprojection_rms: float
    alternate: Pose | None = None  # near-ambiguous second IPPE solution


@dataclass(frozen=True)
class DecodeResult:
    tag_id: int
    residual: float  # sum of squared pixel distances over the data cells
    pose: Pose
    hypothesis: PoseHypothesis
    cell_centroids: dict[tuple[int, int], tuple[float, float]]
    cell_positions: dict[tuple[int, int], int]


@dataclass(frozen=True)
class Detection:
    """A decoded marker: id, pose, quality numbers, and per-region points."""

    family: TagFamily
    tag_id: int
    pose: Pose
    error_metric: float
    white_area: float
    quality: float
    centroids: tuple[tuple[float, float], ...]  # row-major by grid cell
    final_pose_refined: bool
    white_bbox: tuple[int, int, int, int]


def enumerate_hypotheses(
    keypoints: KeyPointSet, family: TagFamily, intrinsics: CameraIntrinsics, img: np.ndarray
) -> list[PoseHypothesis]:
    """Solve 4-point PnP for all 16 corner-position combinations.

    Combinations whose PnP degenerates or whose projected perimeter
    collapses are dropped; the remaining hypotheses carry the border
    quality metric of their best pose.
    """
    assert keypoints.bottom_left != keypoints.bottom_right
    n = family.grid_size
    anchor_tl = family.cell_center(0, 0)
    anchor_tr = family.cell_center(0, n - 1)
    bl_positions = family.data_positions(n - 1, 0)
    br_positions = family.data_positions(n - 1, n - 1)
    image_pts = np.array(
        [
            keypoints.top_left,
            keypoints.top_right,
            keypoints.bottom_left,
            keypoints.bottom_right,
        ]
    )

    hypotheses = []
    for bl_idx in range(4):
        for br_idx in range(4):
            model_pts = np.array(
                [anchor_tl, anchor_tr, bl_positions[bl_idx], br_positions[br_idx]]
            )
            try:
                solutions = solve_planar_pnp(model_pts, image_pts, intrinsics)
                best_pose, best_rms = solutions[0]
                quality = pose_quality(img, best_pose, intrinsics, family)
            except PoseEstimationError:
                continue
            alternate = None
            if len(solutions) > 1:
                alt_pose, alt_rms = solutions[1]
                if alt_rms <= (1.0 + AMBIGUITY_MARGIN) * best_rms or alt_rms < 1e-9:
                    alternate = alt_pose
            hypotheses.append(
                PoseHypothesis(
                    bl_position=bl_idx,
                    br_position=br_idx,
                    pose=best_pose,
                    quality=quality,
                    reprojection_rms=best_rms,
                    alternate=alternate,
                )
            )
    return hypotheses


def decode_with_pose(
    pose: Pose,
    hypothesis: PoseHypothesis,
    observed: list[tuple[float, float]],
    family: TagFamily,
    intrinsics: CameraIntrinsics,
) -> tuple[int, float, dict, dict] | None:
    """Match observed data centroids against projected legal positions.

    Projects the 4 legal positions of every data cell and assigns observed
    centroids greedily by ascending distance, each cell and each centroid
    used once. Returns None when a cell goes unmatched, when the corner
    cells decode inconsistently with the hypothesis, or when the marker
    projects behind the camera.
    """
    n = family.grid_size
    cells = family.data_cells()
    model = np.array(
        [pos for cell in cells for pos in family.data_positions(*cell)]
    )
    try:
        predicted = project(pose, intrinsics, model).reshape(len(cells), 4, 2)
    except PoseEstimationError:
        return None

    obs = np.asarray(observed, dtype=np.float64)
    # distances: cells x positions x observations
    d2 = ((predicted[:, :, None, :] - obs[None, None, :, :]) ** 2).sum(axis=3)

    flat = [
        (d2[ci, pi, oi], ci, pi, oi)
        for ci in range(len(cells))
        for pi in range(4)
        for oi in range(len(observed))
    ]
    flat.sort(key=lambda t: t[0])

    cell_match: dict[int, tuple[int, int, float]] = {}
    used_obs = set()
    for dist, ci, pi, oi in flat:
        if ci in cell_match or oi in used_obs:
            continue
        cell_match[ci] = (pi, oi, dist)
        used_obs.add(oi)
        if len(cell_match) == len(cells):
            break
    if len(cell_match) != len(cells):
        return None

    tag_id = 0
    residual = 0.0
    cell_centroids = {}
    cell_positions = {}
    for ci, cell in enumerate(cells):
        pi, oi, dist = cell_match[ci]
        tag_id |= pi << (2 * ci)
        residual += dist
        cell_centroids[cell] = tuple(obs[oi])
        cell_positions[cell] = pi

    if cell_positions[(n - 1, 0)] != hypothesis.bl_position:
        return None
    if cell_positions[(n - 1, n - 1)] != hypothesis.br_position:
        return None
    return tag_id, residual, cell_centroids, cell_positions


def decoding_error_metric(residual: float, white_area: float, quality: float) -> float:
    """Normalized decode error: residual / sqrt(white area) / pose quality."""
    if white_area <= 0.0:
        raise ValueError("white_area must be positive")
    if quality <= 0.0:
        raise ValueError("quality must be positive")
    return residual / np.sqrt(white_area) / quality


def decode_candidate(
    hypotheses: list[PoseHypothesis],
    observed: list[tuple[float, float]],
    family: TagFamily,
    intrinsics: CameraIntrinsics,
) -> DecodeResult | None:
    """Decode against every hypothesis and keep the lowest-residual result."""
    best: DecodeResult | None = None
    for hyp in hypotheses:
        poses = [hyp.pose] if hyp.alternate is None else [hyp.pose, hyp.alternate]
        for pose in poses:
            decoded = decode_with_pose(pose, hyp, observed, family, intrinsics)
            if decoded is None:
                continue
            tag_id, residual, cell_centroids, cell_positions = decoded
            if best is None or residual < best.residual:
                best = DecodeResult(
                    tag_id=tag_id,
                    residual=residual,
                    pose=pose,
                    hypothesis=hyp,
                    cell_centroids=cell_centroids,
                    cell_positions=cell_positions,
                )
    return best


def final_pose(
    result: DecodeResult,
    keypoints: KeyPointSet,
    family: TagFamily,
    intrinsics: CameraIntrinsics,
) -> tuple[Pose, bool]:
    """Refine the pose from all grid regions once the decode fixed their
    marker coordinates. Falls back to the winning 4-point pose when the
    full solve degenerates; the flag reports whether refinement happened."""
    n = family.grid_size
    model = [family.cell_center(0, 0), family.cell_center(0, n - 1)]
    image = [keypoints.top_left, keypoints.top_right]
    for cell, centroid in result.cell_centroids.items():
        model.append(family.data_positions(*cell)[result.cell_positions[cell]])
        image.append(centroid)
    try:
        solutions = solve_planar_pnp(np.array(model), np.array(image), intrinsics)
    except PoseEstimationError:
        return result.pose, False
    return solutions[0][0], True


def detection_centroids_row_major(
    result: DecodeResult, keypoints: KeyPointSet, family: TagFamily
) -> tuple[tuple[float, float], ...]:
    """Observed centroids ordered row-major by grid cell."""
    n = family.grid_size
    lookup = dict(result.cell_centroids)
    lookup[(0, 0)] = keypoints.top_left
    lookup[(0, n - 1)] = keypoints.top_right
    return tuple(lookup[(r, c)] for r in range(n) for c in range(n))
