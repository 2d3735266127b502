"""Key point identification and geometric filtering of a candidate.

Works purely on sub-pixel centroids in image coordinates (x right, y down).
The two largest regions by dilated inverted zeroth moment are the anchor
regions; signed-angle voting orders them into the top-left/top-right pair,
and the bottom corner regions are found by the truncated angle ranking.
Candidates then pass a same-side test against the anchor line and a
total-least-squares collinearity test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topology import CandidateMarker, ChildRegion


class CandidateRejected(Exception):
    """A candidate failed one of the structural constraints."""

    def __init__(self, stage: str, reason: str):
        super().__init__(f"{stage}: {reason}")
        self.stage = stage


@dataclass(frozen=True)
class KeyPointSet:
    """Oriented key points of a candidate, image coordinates.

    ``top_left``/``top_right`` are the anchor centroids; ``bottom_left``/
    ``bottom_right`` are the data regions at the bottom corners. ``data``
    holds all non-anchor centroids (bottom corners included) and
    ``remaining`` the non-corner data centroids.
    """

    top_left: tuple[float, float]
    top_right: tuple[float, float]
    bottom_left: tuple[float, float]
    bottom_right: tuple[float, float]
    data: tuple[tuple[float, float], ...]
    remaining: tuple[tuple[float, float], ...]


def _signed_angle(v: tuple[float, float], u: tuple[float, float]) -> float:
    return math.atan2(v[0] * u[1] - v[1] * u[0], v[0] * u[0] + v[1] * u[1])


def orient_anchors(
    anchor_a: tuple[float, float],
    anchor_b: tuple[float, float],
    centroids: list[tuple[float, float]],
    tol: float = 1e-9,
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Order the two anchors into (top-left, top-right).

    Sums the signed angle from the anchor-to-anchor vector to every region;
    a positive sum (y-down image coordinates) puts the data bulk on the
    positive side, which identifies the first anchor as top-left. The vote
    is repeated with the anchors swapped and must invert, otherwise the
    candidate has correct topology but wrong structure and is rejected.
    """

    def vote(a: tuple[float, float], b: tuple[float, float]) -> float:
        v = (b[0] - a[0], b[1] - a[1])
        total = 0.0
        for p in centroids:
            u = (p[0] - a[0], p[1] - a[1])
            if u[0] == 0.0 and u[1] == 0.0:
                continue
            total += _signed_angle(v, u)
        return total

    sum_ab = vote(anchor_a, anchor_b)
    sum_ba = vote(anchor_b, anchor_a)
    if abs(sum_ab) <= tol or abs(sum_ba) <= tol:
        raise CandidateRejected("angle", "degenerate angle sum")
    if (sum_ab > 0.0) == (sum_ba > 0.0):
        raise CandidateRejected("angle", "anchor orientation votes disagree")
    if sum_ab > 0.0:
        return anchor_a, anchor_b
    return anchor_b, anchor_a


def locate_bottom_corners(
    top_left: tuple[float, float],
    top_right: tuple[float, float],
    remaining: list[tuple[float, float]],
    grid_size: int,
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Pick the bottom-left and bottom-right data regions.

    For the bottom-left: rank the remaining regions by unsigned angle from
    the top edge vector at the top-left anchor, keep the ``grid_size - 1``
    widest, and take the farthest of those. Bottom-right mirrors the
    procedure from the other anchor.
    """

    def corner(a: tuple[float, float], b: tuple[float, float]) -> tuple[float, float]:
        v = (b[0] - a[0], b[1] - a[1])
        ranked = sorted(
            remaining,
            key=lambda p: abs(_signed_angle(v, (p[0] - a[0], p[1] - a[1]))),
            reverse=True,
        )[: grid_size - 1]
        return max(ranked, key=lambda p: math.hypot(p[0] - a[0], p[1] - a[1]))

    bottom_left = corner(top_left, top_right)
    bottom_right = corner(top_right, top_left)
    if bottom_left == bottom_right:
        raise CandidateRejected("keypoints", "bottom corners collapse to one region")
    return bottom_left, bottom_right


def geometry_constraint(
    data_centroids: list[tuple[float, float]],
    top_left: tuple[float, float],
    top_right: tuple[float, float],
    grid_size: int,
    line_band_px: float = 1.5,
) -> None:
    """Same-side test against the anchor baseline.

    With the anchors oriented, all data centroids must sit on the positive
    (data) side of the baseline except for the top-row allowance of
    ``grid_size - 2`` regions, which may fall on the line (within the
    tolerance band) or beyond it.
    """
    vx = top_right[0] - top_left[0]
    vy = top_right[1] - top_left[1]
    norm = math.hypot(vx, vy)
    if norm == 0.0:
        raise CandidateRejected("geometry", "anchors coincide")
    exceptions = 0
    for p in data_centroids:
        d = (vx * (p[1] - top_left[1]) - vy * (p[0] - top_left[0])) / norm
        if d <= line_band_px:
            exceptions += 1
    if exceptions > grid_size - 2:
        raise CandidateRejected(
            "geometry", f"{exceptions} regions off the data side (allowed {grid_size - 2})"
        )


def collinearity_residual(centroids: list[tuple[float, float]]) -> float:
    """Total-least-squares line fit residual (px^2).

    The sum of squared perpendicular distances to the best-fit line equals
    the smallest eigenvalue of the 2x2 scatter matrix of the points.
    """
    pts = np.asarray(centroids, dtype=np.float64)
    centered = pts - pts.mean(axis=0)
    scatter = centered.T @ centered
    eigvals = np.linalg.eigvalsh(scatter)
    return float(eigvals[0])


def collinearity_constraint(
    centroids: list[tuple[float, float]], min_residual: float
) -> None:
    """Reject near-collinear candidates.

    A genuine marker's regions spread in two dimensions, so the TLS residual
    is large; candidates flatter than ``min_residual`` are rejected.
    """
    if collinearity_residual(centroids) < min_residual:
        raise CandidateRejected("collinearity", "regions are nearly collinear")


def identify_keypoints(candidate: CandidateMarker, grid_size: int) -> KeyPointSet:
    """Full key point stage: anchors, orientation, and bottom corners."""
    ranked = sorted(
        candidate.children,
        key=lambda ch: (-ch.weight, -ch.area, ch.bbox[0], ch.bbox[1]),
    )
    anchor_a, anchor_b = ranked[0], ranked[1]
    rest = ranked[2:]

    centroids = [ch.centroid for ch in candidate.children]
    top_left, top_right = orient_anchors(anchor_a.centroid, anchor_b.centroid, centroids)

    data = [ch.centroid for ch in rest]
    bottom_left, bottom_right = locate_bottom_corners(top_left, top_right, data, grid_size)
    corners = {bottom_left, bottom_right}
    return KeyPointSet(
        top_left=top_left,
        top_right=top_right,
        bottom_left=bottom_left,
        bottom_right=bottom_right,
        data=tuple(data),
        remaining=tuple(p for p in data if p not in corners),
    )
