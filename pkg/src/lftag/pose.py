"""Planar pose estimation: homography DLT, IPPE decomposition, projection,
and the gradient-based pose quality metric.

Camera model is an ideal pinhole: a camera-frame point (X, Y, Z), Z > 0,
projects to pixel (fx*X/Z + cx, fy*Y/Z + cy). Marker-plane model points are
2D marker coordinates (the plane Z=0 of the marker frame), so a pose maps
(x, y, 0) into the camera frame. Translations are in marker side lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imgproc import sobel_gradient
from .marker import TagFamily


class PoseEstimationError(Exception):
    """Degenerate geometry: no pose can be recovered."""


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    @classmethod
    def default_for_image(cls, width: int, height: int) -> "CameraIntrinsics":
        """Nominal intrinsics when no calibration is supplied: the synthetic
        camera's 320 px focal length scaled to the image width."""
        f = 320.0 * width / 640.0
        return cls(fx=f, fy=f, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0)


@dataclass(frozen=True)
class Pose:
    """Rigid marker-to-camera transform; rotation 3x3, translation 3-vector."""

    rotation: np.ndarray
    translation: np.ndarray

    def transform(self, model_pts: np.ndarray) -> np.ndarray:
        """Map Nx2 marker-plane points into camera coordinates (Nx3)."""
        pts = np.asarray(model_pts, dtype=np.float64).reshape(-1, 2)
        return pts @ self.rotation[:, :2].T + self.translation

    def orthonormality_error(self) -> float:
        return float(np.abs(self.rotation.T @ self.rotation - np.eye(3)).max())


def _normalization(pts: np.ndarray) -> np.ndarray:
    """Hartley similarity: centroid to origin, RMS distance sqrt(2)."""
    centroid = pts.mean(axis=0)
    rms = np.sqrt(((pts - centroid) ** 2).sum(axis=1).mean())
    if rms <= 0.0:
        raise PoseEstimationError("all points coincide")
    s = math.sqrt(2.0) / rms
    return np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )


def estimate_homography(model_pts: np.ndarray, image_pts: np.ndarray) -> np.ndarray:
    """Normalized DLT homography mapping model points to image points.

    Returns H with H[2,2] = 1. Raises PoseEstimationError on degenerate
    configurations (fewer than 4 points, collinear points, or a homography
    that cannot be scale-normalized).
    """
    model = np.asarray(model_pts, dtype=np.float64).reshape(-1, 2)
    image = np.asarray(image_pts, dtype=np.float64).reshape(-1, 2)
    if model.shape[0] < 4 or model.shape[0] != image.shape[0]:
        raise PoseEstimationError("need >= 4 matching points")

    t_model = _normalization(model)
    t_image = _normalization(image)
    mh = np.column_stack([model, np.ones(model.shape[0])]) @ t_model.T
    ih = np.column_stack([image, np.ones(image.shape[0])]) @ t_image.T

    n = model.shape[0]
    a = np.zeros((2 * n, 9))
    a[0::2, 0:3] = -mh
    a[0::2, 6:9] = ih[:, 0:1] * mh
    a[1::2, 3:6] = -mh
    a[1::2, 6:9] = ih[:, 1:2] * mh

    _, s, vt = np.linalg.svd(a)
    if s[7] <= 1e-10 * s[0]:
        raise PoseEstimationError("degenerate point configuration")
    h = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_image) @ h @ t_model
    if abs(h[2, 2]) < 1e-12 * np.abs(h).max():
        raise PoseEstimationError("homography cannot be normalized")
    return h / h[2, 2]


def _rotation_to_ray(p: float, q: float) -> np.ndarray:
    """Rotation taking the optical axis (0,0,1) onto the unit ray of (p,q,1)."""
    sp = math.hypot(p, q)
    if sp < 1e-12:
        return np.eye(3)
    s = math.sqrt(p * p + q * q + 1.0)
    kx, ky = -q / sp, p / sp
    cos_t = 1.0 / s
    sin_t = sp / s
    k = np.array([[0.0, 0.0, ky], [0.0, 0.0, -kx], [-ky, kx, 0.0]])
    return np.eye(3) + sin_t * k + (1.0 - cos_t) * (k @ k)


def _translation_for_rotation(
    rotation: np.ndarray, model: np.ndarray, normalized: np.ndarray
) -> np.ndarray:
    """Least-squares translation from the projection equations, given R."""
    n = model.shape[0]
    cam = np.column_stack([model, np.zeros(n)]) @ rotation.T
    a = np.zeros((2 * n, 3))
    a[0::2, 0] = 1.0
    a[0::2, 2] = -normalized[:, 0]
    a[1::2, 1] = 1.0
    a[1::2, 2] = -normalized[:, 1]
    b = np.empty(2 * n)
    b[0::2] = normalized[:, 0] * cam[:, 2] - cam[:, 0]
    b[1::2] = normalized[:, 1] * cam[:, 2] - cam[:, 1]
    t, *_ = np.linalg.lstsq(a, b, rcond=None)
    return t


def ippe_decompose(
    homography: np.ndarray,
    intrinsics: CameraIntrinsics,
    model_origin: tuple[float, float],
    model_pts: np.ndarray,
    image_pts: np.ndarray,
) -> list[tuple[Pose, float]]:
    """Split a model-to-pixel homography into its two planar pose solutions.

    Linearizes the normalized-coordinate homography at ``model_origin``,
    recovers the two rotations compatible with the local Jacobian, and
    solves each translation by least squares over the correspondences.
    Returns [(pose, reprojection_rms_px), ...] sorted by ascending error.
    """
    model = np.asarray(model_pts, dtype=np.float64).reshape(-1, 2)
    image = np.asarray(image_pts, dtype=np.float64).reshape(-1, 2)

    hn = np.linalg.inv(intrinsics.matrix()) @ homography
    scale = np.abs(hn).max()
    if scale == 0.0 or abs(np.linalg.det(hn)) < 1e-12 * scale**3:
        raise PoseEstimationError("marker plane passes through the camera center")

    ox, oy = model_origin
    shift = np.array([[1.0, 0.0, ox], [0.0, 1.0, oy], [0.0, 0.0, 1.0]])
    ho = hn @ shift
    if ho[2, 2] == 0.0:
        raise PoseEstimationError("linearization point maps to infinity")
    if ho[2, 2] < 0.0:
        ho = -ho  # keep the marker in front of the camera
    ho = ho / ho[2, 2]

    p, q = ho[0, 2], ho[1, 2]
    jac = np.array(
        [
            [ho[0, 0] - ho[2, 0] * p, ho[0, 1] - ho[2, 1] * p],
            [ho[1, 0] - ho[2, 0] * q, ho[1, 1] - ho[2, 1] * q],
        ]
    )

    rv = _rotation_to_ray(p, q)
    b = np.array(
        [
            [rv[0, 0] - p * rv[2, 0], rv[0, 1] - p * rv[2, 1]],
            [rv[1, 0] - q * rv[2, 0], rv[1, 1] - q * rv[2, 1]],
        ]
    )
    det_b = b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]
    if abs(det_b) < 1e-15:
        raise PoseEstimationError("singular linearization")
    a = np.linalg.inv(b) @ jac

    ata = a.T @ a
    trace = ata[0, 0] + ata[1, 1]
    disc = math.sqrt(max(0.0, (ata[0, 0] - ata[1, 1]) ** 2 + 4.0 * ata[0, 1] ** 2))
    gamma = math.sqrt(max(1e-300, 0.5 * (trace + disc)))
    r2x2 = a / gamma

    b0 = math.sqrt(max(0.0, 1.0 - r2x2[0, 0] ** 2 - r2x2[1, 0] ** 2))
    b1 = math.sqrt(max(0.0, 1.0 - r2x2[0, 1] ** 2 - r2x2[1, 1] ** 2))
    if -(r2x2[0, 0] * r2x2[0, 1] + r2x2[1, 0] * r2x2[1, 1]) < 0.0:
        b1 = -b1

    # Normalized image coordinates of the observations, for translation.
    normalized = np.column_stack(
        [
            (image[:, 0] - intrinsics.cx) / intrinsics.fx,
            (image[:, 1] - intrinsics.cy) / intrinsics.fy,
        ]
    )

    solutions = []
    for sign in (1.0, -1.0):
        cols = np.array(
            [
                [r2x2[0, 0], r2x2[0, 1]],
                [r2x2[1, 0], r2x2[1, 1]],
                [sign * b0, sign * b1],
            ]
        )
        third = np.cross(cols[:, 0], cols[:, 1])
        rotation = rv @ np.column_stack([cols, third])
        translation = _translation_for_rotation(rotation, model, normalized)
        if translation[2] <= 0.0:
            continue
        pose = Pose(rotation=rotation, translation=translation)
        try:
            projected = project(pose, intrinsics, model)
        except PoseEstimationError:
            continue
        rms = float(np.sqrt(((projected - image) ** 2).sum(axis=1).mean()))
        solutions.append((pose, rms))

    if not solutions:
        raise PoseEstimationError("no pose solution keeps the marker in front")
    solutions.sort(key=lambda item: item[1])
    return solutions


def project(
    pose: Pose, intrinsics: CameraIntrinsics, model_pts: np.ndarray
) -> np.ndarray:
    """Pinhole projection of marker-plane points; Nx2 pixels.

    Raises PoseEstimationError if any point lands at or behind the camera.
    """
    single = np.ndim(model_pts) == 1
    cam = pose.transform(model_pts)
    if (cam[:, 2] <= 0.0).any():
        raise PoseEstimationError("point behind the camera")
    px = np.column_stack(
        [
            intrinsics.fx * cam[:, 0] / cam[:, 2] + intrinsics.cx,
            intrinsics.fy * cam[:, 1] / cam[:, 2] + intrinsics.cy,
        ]
    )
    return px[0] if single else px


def solve_planar_pnp(
    model_pts: np.ndarray,
    image_pts: np.ndarray,
    intrinsics: CameraIntrinsics,
) -> list[tuple[Pose, float]]:
    """Homography + IPPE: the full 4+ point planar PnP used by the decoder."""
    model = np.asarray(model_pts, dtype=np.float64).reshape(-1, 2)
    h = estimate_homography(model, image_pts)
    origin = tuple(model.mean(axis=0))
    return ippe_decompose(h, intrinsics, origin, model, image_pts)


def pose_quality(
    img: np.ndarray,
    pose: Pose,
    intrinsics: CameraIntrinsics,
    family: TagFamily,
    min_perimeter_px: float = 8.0,
) -> float:
    """Mean Sobel gradient magnitude along the projected border transition.

    The border-to-interior transition square (inset ``border_width`` in
    marker coordinates) is projected and sampled at about 1 px arc-length
    spacing; out-of-image samples contribute 0. Raises PoseEstimationError
    when the projected perimeter collapses below ``min_perimeter_px``.
    """
    bw = family.border_width
    corners = np.array(
        [[bw, bw], [1.0 - bw, bw], [1.0 - bw, 1.0 - bw], [bw, 1.0 - bw]]
    )
    projected = project(pose, intrinsics, corners)

    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    perimeter = 0.0
    for i in range(4):
        p0 = projected[i]
        p1 = projected[(i + 1) % 4]
        length = float(np.hypot(*(p1 - p0)))
        perimeter += length
        k = max(1, round(length))
        ts = (np.arange(k) + 0.5) / k
        xs.append(p0[0] + ts * (p1[0] - p0[0]))
        ys.append(p0[1] + ts * (p1[1] - p0[1]))

    if perimeter < min_perimeter_px:
        raise PoseEstimationError("projected perimeter too small")
    mags = sobel_gradient(img, np.concatenate(xs), np.concatenate(ys))
    return float(mags.sum() / perimeter)
