"""Low-level grayscale kernels: thresholding, dilation, moments, gradients.

Image conventions used throughout the package:

* grayscale images are ``uint8`` arrays of shape (height, width);
* binary images are ``bool`` arrays of the same shape, True = black;
* sub-pixel coordinates are (x, y) with x = column, y = row, and pixel
  centers at integer coordinates.
"""

from __future__ import annotations

import numpy as np

GrayImage = np.ndarray
BinaryImage = np.ndarray

_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)


def local_mean(img: GrayImage, window_px: int) -> np.ndarray:
    """Mean over a window_px x window_px window centered on each pixel.

    Computed with a summed-area table, so the cost is O(width*height)
    independent of the window size; windows are clamped at the image edges
    (the mean then runs over the clipped window). An even window cannot be
    centered on an integer grid, so it is realized as the average of its
    two half-pixel phases per axis; an integer-aligned even window is
    asymmetric by half a pixel, which skews thresholded region boundaries
    and biases downstream sub-pixel centroids.
    """
    if window_px < 2:
        raise ValueError("window_px must be >= 2")
    h, w = img.shape
    sat = np.zeros((h + 1, w + 1), dtype=np.float64)
    sat[1:, 1:] = img.cumsum(axis=0, dtype=np.float64).cumsum(axis=1)

    if window_px % 2:
        half = (window_px - 1) // 2
        phases = [(half, half)]
    else:
        phases = [(window_px // 2, window_px // 2 - 1), (window_px // 2 - 1, window_px // 2)]

    mean = np.zeros((h, w), dtype=np.float64)
    for lo_r, hi_r in phases:
        r0 = np.clip(np.arange(h) - lo_r, 0, h)
        r1 = np.clip(np.arange(h) + hi_r + 1, 0, h)
        for lo_c, hi_c in phases:
            c0 = np.clip(np.arange(w) - lo_c, 0, w)
            c1 = np.clip(np.arange(w) + hi_c + 1, 0, w)
            sums = (
                sat[np.ix_(r1, c1)]
                - sat[np.ix_(r0, c1)]
                - sat[np.ix_(r1, c0)]
                + sat[np.ix_(r0, c0)]
            )
            counts = (r1 - r0)[:, None] * (c1 - c0)[None, :]
            mean += sums / counts
    return mean / (len(phases) ** 2)


def adaptive_threshold(img: GrayImage, window_px: int = 16, offset: float = 5.0) -> BinaryImage:
    """Classify each pixel black iff it is darker than its local mean - offset."""
    return img < local_mean(img, window_px) - offset


def dilate(mask: BinaryImage, radius_px: int) -> BinaryImage:
    """Chebyshev (L-infinity) dilation: set every pixel within ``radius_px``.

    radius_px = 1 is the 3x3 square structuring element; 0 is the identity.
    """
    if radius_px < 0:
        raise ValueError("radius_px must be >= 0")
    if radius_px == 0:
        return mask.copy()
    h, w = mask.shape
    out = np.zeros_like(mask)
    for dy in range(-radius_px, radius_px + 1):
        ys = slice(max(0, dy), min(h, h + dy))
        yd = slice(max(0, -dy), min(h, h - dy))
        row_or = mask[ys]
        for dx in range(-radius_px, radius_px + 1):
            xs = slice(max(0, dx), min(w, w + dx))
            xd = slice(max(0, -dx), min(w, w - dx))
            out[yd, xd] |= row_or[:, xs]
    return out


def weighted_centroid(
    img: GrayImage, mask: BinaryImage, origin: tuple[int, int] = (0, 0)
) -> tuple[float, float, float]:
    """Centroid of a region weighted by inverted intensity (255 - value).

    ``mask`` selects the region pixels inside ``img`` (or inside the window
    of ``img`` whose top-left pixel is ``origin`` = (row, col), when the
    mask is a bounding-box crop). Returns (x, y, total_weight) with x, y in
    full-image pixel coordinates. Raises ValueError when the region has no
    weight, since its centroid is undefined.
    """
    weights = (255.0 - img[mask]).astype(np.float64)
    total = weights.sum()
    if total <= 0.0:
        raise ValueError("region has zero inverted-intensity weight")
    rows, cols = np.nonzero(mask)
    x = (weights * cols).sum() / total + origin[1]
    y = (weights * rows).sum() / total + origin[0]
    return x, y, total


def sobel_gradient(img: GrayImage, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """3x3 Sobel gradient magnitude at sub-pixel points.

    The gradient (gx, gy) is evaluated at the four integer pixels around
    each (x, y) and bilinearly interpolated; samples whose Sobel stencil
    would leave the image contribute 0 (no evidence).
    """
    scalar = np.isscalar(x) and np.isscalar(y)
    x_arr, y_arr = np.broadcast_arrays(
        np.atleast_1d(np.asarray(x, dtype=np.float64)),
        np.atleast_1d(np.asarray(y, dtype=np.float64)),
    )
    h, w = img.shape

    x0 = np.floor(x_arr).astype(np.int64)
    y0 = np.floor(y_arr).astype(np.int64)
    fx = x_arr - x0
    fy = y_arr - y0

    gx_acc = np.zeros(x_arr.shape, dtype=np.float64)
    gy_acc = np.zeros(x_arr.shape, dtype=np.float64)
    img_f = img.astype(np.float64)

    for dy in (0, 1):
        for dx in (0, 1):
            px = x0 + dx
            py = y0 + dy
            weight = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            valid = (px >= 1) & (px <= w - 2) & (py >= 1) & (py <= h - 2)
            if not valid.any():
                continue
            pxv = px[valid]
            pyv = py[valid]
            gx = np.zeros(pxv.shape, dtype=np.float64)
            gy = np.zeros(pxv.shape, dtype=np.float64)
            for ky in (-1, 0, 1):
                for kx in (-1, 0, 1):
                    sx = _SOBEL_X[ky + 1, kx + 1]
                    sy = _SOBEL_Y[ky + 1, kx + 1]
                    if sx == 0.0 and sy == 0.0:
                        continue
                    vals = img_f[pyv + ky, pxv + kx]
                    if sx != 0.0:
                        gx += sx * vals
                    if sy != 0.0:
                        gy += sy * vals
            gx_acc[valid] += weight[valid] * gx
            gy_acc[valid] += weight[valid] * gy

    mags = np.hypot(gx_acc, gy_acc)
    return float(mags[0]) if scalar else mags


def to_grayscale(arr: np.ndarray) -> GrayImage:
    """Convert an RGB(A) uint8 array to rec.601 luma; pass grayscale through."""
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] in (3, 4):
        rgb = arr[:, :, :3].astype(np.float64)
        luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
        return np.rint(luma).astype(np.uint8)
    raise ValueError(f"unsupported image shape {arr.shape}")
