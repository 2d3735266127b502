"""Synthetic pinhole camera: marker rendering, motion blur, and the range,
blur, and grazing-angle detection sweeps.

The camera looks down +z; the marker is centered on the optical axis at the
requested distance, optionally rotated in plane and tilted about the
horizontal axis through its center. Rendering samples the continuous marker
definition through the projective map with 4x4 supersampling per pixel
(never from a pre-rasterized image, which would alias twice).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .config import DetectorConfig
from .detector import Detector
from .marker import MarkerLayout, TagFamily, black_mask, dictionary_size, encode
from .pose import CameraIntrinsics

BACKGROUND_GRAY = 128


@dataclass(frozen=True)
class RenderSpec:
    layout: MarkerLayout
    distance_m: float
    tag_side_m: float = 1.0
    tilt_deg: float = 0.0
    roll_deg: float = 0.0
    offset_px: tuple[float, float] = (0.0, 0.0)
    width: int = 640
    height: int = 480
    intrinsics: CameraIntrinsics | None = None
    supersample: int = 4

    def __post_init__(self) -> None:
        if self.distance_m <= 0:
            raise ValueError("distance_m must be positive")

    def camera(self) -> CameraIntrinsics:
        if self.intrinsics is not None:
            return self.intrinsics
        return CameraIntrinsics(
            fx=320.0, fy=320.0, cx=(self.width - 1) / 2.0, cy=(self.height - 1) / 2.0
        )


def _rot_x(deg: float) -> np.ndarray:
    t = math.radians(deg)
    c, s = math.cos(t), math.sin(t)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_z(deg: float) -> np.ndarray:
    t = math.radians(deg)
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def render(spec: RenderSpec) -> np.ndarray:
    """Render the marker over a mid-gray background.

    Raises ValueError when the marker is behind the camera or entirely
    outside the frame.
    """
    intr = spec.camera()
    rotation = _rot_x(spec.tilt_deg) @ _rot_z(spec.roll_deg)
    side = spec.tag_side_m
    center = np.array(
        [
            spec.offset_px[0] * spec.distance_m / intr.fx,
            spec.offset_px[1] * spec.distance_m / intr.fy,
            spec.distance_m,
        ]
    )
    # Homography columns: marker (u,v,1) -> camera ray, marker centered.
    r1 = rotation[:, 0] * side
    r2 = rotation[:, 1] * side
    t = center - rotation @ np.array([0.5 * side, 0.5 * side, 0.0])
    plane = np.column_stack([r1, r2, t])

    corners_uv = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    corners_cam = corners_uv @ plane[:, :2].T + plane[:, 2]
    if (corners_cam[:, 2] <= 0).any():
        raise ValueError("marker behind the camera")

    h_px = intr.matrix() @ plane
    corners_px = (corners_uv @ h_px[:, :2].T + h_px[:, 2])
    corners_px = corners_px[:, :2] / corners_px[:, 2:3]

    x0 = int(np.floor(corners_px[:, 0].min())) - 1
    x1 = int(np.ceil(corners_px[:, 0].max())) + 2
    y0 = int(np.floor(corners_px[:, 1].min())) - 1
    y1 = int(np.ceil(corners_px[:, 1].max())) + 2
    x0, x1 = max(0, x0), min(spec.width, x1)
    y0, y1 = max(0, y0), min(spec.height, y1)
    if x0 >= x1 or y0 >= y1:
        raise ValueError("marker projects outside the frame")

    img = np.full((spec.height, spec.width), BACKGROUND_GRAY, dtype=np.uint8)
    ss = spec.supersample
    h_inv = np.linalg.inv(h_px)

    xs = x0 - 0.5 + (np.arange((x1 - x0) * ss) + 0.5) / ss
    ys = y0 - 0.5 + (np.arange((y1 - y0) * ss) + 0.5) / ss
    gx, gy = np.meshgrid(xs, ys)
    denom = h_inv[2, 0] * gx + h_inv[2, 1] * gy + h_inv[2, 2]
    u = (h_inv[0, 0] * gx + h_inv[0, 1] * gy + h_inv[0, 2]) / denom
    v = (h_inv[1, 0] * gx + h_inv[1, 1] * gy + h_inv[1, 2]) / denom

    inside = (u >= 0.0) & (u <= 1.0) & (v >= 0.0) & (v <= 1.0)
    values = np.full(u.shape, float(BACKGROUND_GRAY))
    if inside.any():
        black = black_mask(spec.layout, u[inside], v[inside])
        values[inside] = np.where(black, 0.0, 255.0)

    block = values.reshape(y1 - y0, ss, x1 - x0, ss).mean(axis=(1, 3))
    img[y0:y1, x0:x1] = np.rint(block).astype(np.uint8)
    return img


def motion_blur_kernel(length_px: float, angle_deg: float) -> np.ndarray:
    """Unit-mass line-segment point spread function.

    Angle 0 is vertical motion, 90 horizontal; the segment is centered, so
    the kernel preserves region centroids. Rasterized by bilinear splatting
    of dense samples along the segment.
    """
    if length_px < 0:
        raise ValueError("length_px must be >= 0")
    if length_px < 1e-9:
        return np.ones((1, 1))
    t = math.radians(angle_deg)
    dx, dy = math.sin(t), math.cos(t)
    half = length_px / 2.0
    radius = int(math.ceil(half)) + 1
    size = 2 * radius + 1
    kernel = np.zeros((size, size))
    samples = max(2, int(math.ceil(length_px * 8)))
    for i in range(samples):
        a = (i + 0.5) / samples * length_px - half
        x = radius + a * dx
        y = radius + a * dy
        ix, iy = int(math.floor(x)), int(math.floor(y))
        fx, fy = x - ix, y - iy
        kernel[iy, ix] += (1 - fx) * (1 - fy)
        kernel[iy, ix + 1] += fx * (1 - fy)
        kernel[iy + 1, ix] += (1 - fx) * fy
        kernel[iy + 1, ix + 1] += fx * fy
    return kernel / kernel.sum()


def apply_motion_blur(img: np.ndarray, length_px: float, angle_deg: float) -> np.ndarray:
    """Convolve with the linear motion PSF; length 0 returns a copy."""
    kernel = motion_blur_kernel(length_px, angle_deg)
    if kernel.size == 1:
        return img.copy()
    blurred = ndimage.convolve(img.astype(np.float64), kernel, mode="nearest")
    return np.clip(np.rint(blurred), 0, 255).astype(np.uint8)


@dataclass
class SweepResult:
    """One sweep's per-sample table and its derived summary."""

    kind: str
    columns: tuple[str, ...]
    rows: list[tuple]
    summary: dict

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            writer.writerows(self.rows)


def _pick_ids(family: TagFamily, count: int, rng: np.random.Generator) -> list[int]:
    size = dictionary_size(family)
    if count >= size:
        return list(range(size))
    return sorted(int(v) for v in rng.choice(size, size=count, replace=False))


def _detects_id(detector: Detector, img: np.ndarray, tag_id: int) -> tuple[bool, bool]:
    detections, _ = detector.detect(img)
    return bool(detections), any(d.tag_id == tag_id for d in detections)


def _first_miss(grid: list[float], misses: dict[float, int], total: int) -> float | None:
    for value in grid:
        if misses[value] > 0:
            return value
    return None


def _miss_rate_point(
    grid: list[float], misses: dict[float, int], total: int, rate: float
) -> float | None:
    for value in grid:
        if misses[value] / total >= rate:
            return value
    return None


def sweep_range(
    families: list[TagFamily],
    ids_per_family: int,
    distances: list[float],
    config: DetectorConfig | None = None,
    seed: int = 0,
) -> SweepResult:
    """Detection probability vs distance; frontal markers, 1 m side.

    Markers get a random sub-pixel image offset per id so the sweep is not
    aligned to the pixel grid. Reports the first distance with any miss and
    the first with a miss rate of at least 20%, per family.
    """
    rng = np.random.default_rng(seed)
    rows = []
    summary: dict[str, dict] = {}
    grid = sorted(distances)
    for family in families:
        detector = _sweep_detector(family, config)
        ids = _pick_ids(family, ids_per_family, rng)
        offsets = {tag_id: tuple(rng.uniform(-0.5, 0.5, size=2)) for tag_id in ids}
        misses = {d: 0 for d in grid}
        for distance in grid:
            for tag_id in ids:
                spec = RenderSpec(
                    layout=encode(family, tag_id),
                    distance_m=distance,
                    offset_px=offsets[tag_id],
                )
                detected, decoded = _detects_id(detector, render(spec), tag_id)
                rows.append((distance, family.name, tag_id, int(detected), int(decoded)))
                if not decoded:
                    misses[distance] += 1
        summary[family.name] = {
            "first_miss_m": _first_miss(grid, misses, len(ids)),
            "miss20_m": _miss_rate_point(grid, misses, len(ids), 0.2),
        }
    return SweepResult(
        kind="range",
        columns=("distance", "family", "id", "detected", "decoded_ok"),
        rows=rows,
        summary={"range": summary},
    )


def sweep_blur(
    families: list[TagFamily],
    ids_per_family: int,
    angles_deg: list[float],
    magnitudes_pct: list[float],
    distance_m: float = 5.0,
    config: DetectorConfig | None = None,
    seed: int = 0,
) -> SweepResult:
    """First-miss blur magnitude (as % of projected edge length) per angle."""
    rng = np.random.default_rng(seed)
    rows = []
    summary: dict[str, dict] = {}
    magnitudes = sorted(magnitudes_pct)
    for family in families:
        detector = _sweep_detector(family, config)
        ids = _pick_ids(family, ids_per_family, rng)
        offsets = {tag_id: tuple(rng.uniform(-0.5, 0.5, size=2)) for tag_id in ids}
        renders = {}
        for tag_id in ids:
            spec = RenderSpec(
                layout=encode(family, tag_id),
                distance_m=distance_m,
                offset_px=offsets[tag_id],
            )
            renders[tag_id] = (render(spec), spec.camera().fx / distance_m)
        per_angle: dict[float, float | None] = {}
        for angle in angles_deg:
            misses = {m: 0 for m in magnitudes}
            for magnitude in magnitudes:
                for tag_id in ids:
                    base, edge_px = renders[tag_id]
                    blurred = apply_motion_blur(base, magnitude / 100.0 * edge_px, angle)
                    detected, decoded = _detects_id(detector, blurred, tag_id)
                    rows.append(
                        (angle, magnitude, family.name, tag_id, int(detected), int(decoded))
                    )
                    if not decoded:
                        misses[magnitude] += 1
            per_angle[angle] = _first_miss(magnitudes, misses, len(ids))
        summary[family.name] = {
            "first_miss_pct_by_angle": {str(a): per_angle[a] for a in angles_deg}
        }
    return SweepResult(
        kind="blur",
        columns=("angle_deg", "magnitude_pct", "family", "id", "detected", "decoded_ok"),
        rows=rows,
        summary={"blur": summary, "distance_m": distance_m},
    )


def sweep_angle(
    families: list[TagFamily],
    ids_per_family: int,
    tilts_deg: list[float],
    distance_m: float = 2.5,
    config: DetectorConfig | None = None,
    seed: int = 0,
) -> SweepResult:
    """First-miss grazing tilt per family at a fixed distance."""
    rng = np.random.default_rng(seed)
    rows = []
    summary: dict[str, dict] = {}
    grid = sorted(tilts_deg)
    for family in families:
        detector = _sweep_detector(family, config)
        ids = _pick_ids(family, ids_per_family, rng)
        offsets = {tag_id: tuple(rng.uniform(-0.5, 0.5, size=2)) for tag_id in ids}
        misses = {t: 0 for t in grid}
        for tilt in grid:
            for tag_id in ids:
                spec = RenderSpec(
                    layout=encode(family, tag_id),
                    distance_m=distance_m,
                    tilt_deg=tilt,
                    offset_px=offsets[tag_id],
                )
                detected, decoded = _detects_id(detector, render(spec), tag_id)
                rows.append((tilt, family.name, tag_id, int(detected), int(decoded)))
                if not decoded:
                    misses[tilt] += 1
        summary[family.name] = {"first_miss_deg": _first_miss(grid, misses, len(ids))}
    return SweepResult(
        kind="angle",
        columns=("tilt_deg", "family", "id", "detected", "decoded_ok"),
        rows=rows,
        summary={"angle": summary, "distance_m": distance_m},
    )


def _sweep_detector(family: TagFamily, config: DetectorConfig | None) -> Detector:
    base = config or DetectorConfig()
    if base.grid_size != family.grid_size:
        base = DetectorConfig(
            grid_size=family.grid_size,
            mean_window_px=base.mean_window_px,
            threshold_offset=base.threshold_offset,
            centroid_dilation_px=base.centroid_dilation_px,
            max_area_ratio=base.max_area_ratio,
            min_line_residual=base.min_line_residual,
            intrinsics=base.intrinsics,
            tag_side_m=base.tag_side_m,
            line_band_px=base.line_band_px,
        )
    return Detector(base)
