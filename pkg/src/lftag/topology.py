"""Hierarchical connected components and topological candidate filtering.

A single scan labels every black and white region of the binarized image
(black 8-connected, white 4-connected) while streaming per-region pixel
counts, first moments, and bounding boxes. The hierarchy follows enclosure:
a region's parent is the region owning the pixel directly above its
raster-first pixel (regions starting at row 0 are roots). Colors alternate
along any root-to-leaf path.

Candidate markers are white regions with at least ``n*n`` black children;
the ``n*n`` largest children by area are kept and the candidate is dropped
when their max/min area ratio exceeds the configured bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .imgproc import dilate, weighted_centroid

BLACK = 1
WHITE = 0


class RegionTree:
    """Region forest with streamed statistics, backed by flat arrays.

    Node attributes are exposed as parallel arrays indexed by region id
    (ids are assigned in raster order of first appearance):

    * ``color``: 1 black, 0 white
    * ``area``: pixel count
    * ``sum_x``, ``sum_y``: first moments of the binary mask
    * ``bbox``: (min_row, min_col, max_row, max_col), inclusive
    * ``parent``: region id, or -1 for roots
    """

    def __init__(self, shape: tuple[int, int], runs, labels: np.ndarray, n_regions: int):
        self.shape = shape
        rows, c0, c1, colors = runs
        self._run_rows = rows
        self._run_c0 = c0
        self._run_c1 = c1
        self._run_labels = labels
        self.n_regions = n_regions

        lengths = (c1 - c0).astype(np.float64)
        self.area = np.bincount(labels, weights=lengths, minlength=n_regions)
        self.sum_x = np.bincount(
            labels, weights=lengths * (c0 + c1 - 1) * 0.5, minlength=n_regions
        )
        self.sum_y = np.bincount(labels, weights=lengths * rows, minlength=n_regions)

        self.min_row = np.full(n_regions, shape[0], dtype=np.int32)
        self.max_row = np.full(n_regions, -1, dtype=np.int32)
        self.min_col = np.full(n_regions, shape[1], dtype=np.int32)
        self.max_col = np.full(n_regions, -1, dtype=np.int32)
        np.minimum.at(self.min_row, labels, rows)
        np.maximum.at(self.max_row, labels, rows)
        np.minimum.at(self.min_col, labels, c0)
        np.maximum.at(self.max_col, labels, c1 - 1)

        first_run = np.full(n_regions, rows.shape[0], dtype=np.int64)
        np.minimum.at(first_run, labels, np.arange(rows.shape[0], dtype=np.int64))
        self.color = colors[first_run].astype(np.uint8)
        self._first_run = first_run

        # Parent = owner of the pixel above the raster-first pixel. Runs tile
        # each row completely, so a composite (row, col) key lookup always
        # lands on the covering run.
        w1 = shape[1] + 1
        keys = rows.astype(np.int64) * w1 + c0
        parent = np.full(n_regions, -1, dtype=np.int64)
        top_rows = rows[first_run]
        inner = top_rows > 0
        if inner.any():
            search = (top_rows[inner].astype(np.int64) - 1) * w1 + c0[first_run[inner]]
            idx = np.searchsorted(keys, search, side="right") - 1
            parent[inner] = labels[idx]
        self.parent = parent

        order = np.argsort(labels, kind="stable")
        bounds = np.searchsorted(labels[order], np.arange(n_regions + 1))
        self._runs_by_region = (order, bounds)

    def children(self, region: int) -> np.ndarray:
        return np.flatnonzero(self.parent == region)

    def region_runs(self, region: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, c0, c1) of the runs making up one region."""
        order, bounds = self._runs_by_region
        idx = order[bounds[region] : bounds[region + 1]]
        return self._run_rows[idx], self._run_c0[idx], self._run_c1[idx]

    def region_mask(self, region: int) -> tuple[np.ndarray, tuple[int, int]]:
        """Dense bounding-box mask of one region plus its (row, col) origin."""
        r0 = int(self.min_row[region])
        c0 = int(self.min_col[region])
        mask = np.zeros(
            (self.max_row[region] - r0 + 1, self.max_col[region] - c0 + 1), dtype=bool
        )
        rr, cc0, cc1 = self.region_runs(region)
        for r, a, b in zip(rr - r0, cc0 - c0, cc1 - c0):
            mask[r, a:b] = True
        return mask, (r0, c0)

    def label_image(self) -> np.ndarray:
        """Paint region ids back to pixels (test/diagnostic helper)."""
        out = np.empty(self.shape, dtype=np.int32)
        for r, a, b, l in zip(self._run_rows, self._run_c0, self._run_c1, self._run_labels):
            out[r, a:b] = l
        return out


def connected_components_hierarchy(black: np.ndarray) -> RegionTree:
    """Label a binary image (True = black) into a region hierarchy."""
    rows, c0, c1, colors, labels, n_regions = _kernels.label_runs(
        np.ascontiguousarray(black, dtype=np.uint8)
    )
    return RegionTree(black.shape, (rows, c0, c1, colors), labels, n_regions)


@dataclass(frozen=True)
class ChildRegion:
    """One interior black region of a candidate."""

    region: int
    centroid: tuple[float, float]
    weight: float  # inverted zeroth moment over the dilated mask
    area: float  # binary pixel count
    bbox: tuple[int, int, int, int]


@dataclass(frozen=True)
class CandidateMarker:
    """A white region whose children pass the topology and area filters."""

    white_region: int
    white_area: float
    children: tuple[ChildRegion, ...]


def _dilated_centroid(
    tree: RegionTree, gray: np.ndarray, region: int, dilation_px: int
) -> tuple[float, float, float]:
    """Inverted-intensity centroid of a region after L-inf dilation.

    The dilation runs on the region's own mask (padded bounding box), never
    on the global image, so nearby regions cannot bleed together.
    """
    h, w = gray.shape
    d = dilation_px
    r0 = max(0, int(tree.min_row[region]) - d)
    c0 = max(0, int(tree.min_col[region]) - d)
    r1 = min(h, int(tree.max_row[region]) + 1 + d)
    c1 = min(w, int(tree.max_col[region]) + 1 + d)

    mask = np.zeros((r1 - r0, c1 - c0), dtype=bool)
    rr, cc0, cc1 = tree.region_runs(region)
    for r, a, b in zip(rr - r0, cc0 - c0, cc1 - c0):
        mask[r, a:b] = True
    if d > 0:
        mask = dilate(mask, d)
    return weighted_centroid(gray[r0:r1, c0:c1], mask, origin=(r0, c0))


def find_candidates(
    tree: RegionTree,
    gray: np.ndarray,
    grid_size: int,
    max_area_ratio: float,
    dilation_px: int = 1,
) -> list[CandidateMarker]:
    """Topological + area filtering of the region tree.

    White regions with >= grid_size**2 black children are candidates; the
    largest grid_size**2 children by pixel area are retained (extra children
    are treated as noise). Candidates whose retained children have a
    max/min area ratio above ``max_area_ratio`` are rejected. Child
    centroids and inverted zeroth moments are computed on the surviving
    candidates only.
    """
    n2 = grid_size * grid_size
    is_black = tree.color == BLACK
    has_parent = tree.parent >= 0
    child_of = tree.parent[is_black & has_parent].astype(np.int64)
    if child_of.size == 0:
        return []
    counts = np.bincount(child_of, minlength=tree.n_regions)
    hosts = np.flatnonzero((counts >= n2) & (tree.color == WHITE))

    by_parent = np.flatnonzero(is_black & has_parent)
    order = np.argsort(tree.parent[by_parent], kind="stable")
    by_parent = by_parent[order]
    bounds = np.searchsorted(tree.parent[by_parent], hosts)

    candidates = []
    for host, start in zip(hosts, bounds):
        kids = by_parent[start : start + counts[host]]
        # Deterministic largest-n2 selection: area desc, then region id.
        sel = sorted(kids, key=lambda k: (-tree.area[k], k))[:n2]
        areas = tree.area[sel]
        if areas.max() > max_area_ratio * areas.min():
            continue
        children = []
        for k in sel:
            try:
                cx, cy, weight = _dilated_centroid(tree, gray, int(k), dilation_px)
            except ValueError:
                break
            children.append(
                ChildRegion(
                    region=int(k),
                    centroid=(cx, cy),
                    weight=weight,
                    area=float(tree.area[k]),
                    bbox=(
                        int(tree.min_row[k]),
                        int(tree.min_col[k]),
                        int(tree.max_row[k]),
                        int(tree.max_col[k]),
                    ),
                )
            )
        if len(children) != n2:
            continue
        candidates.append(
            CandidateMarker(
                white_region=int(host),
                white_area=float(tree.area[host]),
                children=tuple(children),
            )
        )
    return candidates
