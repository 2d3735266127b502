"""Image file I/O (PNG and binary PGM) and detection JSON serialization."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .decoder import Detection
from .imgproc import to_grayscale


def load_gray(path: str | Path) -> np.ndarray:
    """Read an image file as 8-bit grayscale (RGB converted by rec.601 luma)."""
    with Image.open(path) as im:
        if im.mode in ("L", "P", "RGB", "RGBA"):
            arr = np.asarray(im.convert("RGB") if im.mode == "P" else im)
        elif im.mode in ("I", "I;16", "F"):
            arr = np.asarray(im.convert("L"))
        else:
            arr = np.asarray(im.convert("RGB"))
    return to_grayscale(arr)


def save_gray(img: np.ndarray, path: str | Path) -> None:
    """Write a uint8 grayscale image; format follows the extension
    (.png or .pgm, the latter as binary P5)."""
    path = Path(path)
    pil = Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L")
    if path.suffix.lower() == ".pgm":
        pil.save(path, format="PPM")
    else:
        pil.save(path)


def detection_to_dict(
    det: Detection, tag_side_m: float, timing_us: dict[str, float] | None = None
) -> dict:
    """Wire format of one detection (the documented JSON schema)."""
    out = {
        "family": det.family.name,
        "id": det.tag_id,
        "error_metric": float(det.error_metric),
        "pose": {
            "rotation": [[float(v) for v in row] for row in det.pose.rotation],
            "translation_m": [float(v) * tag_side_m for v in det.pose.translation],
        },
        "white_area_px": float(det.white_area),
        "centroids_px": [[float(x), float(y)] for x, y in det.centroids],
    }
    if timing_us is not None:
        out["timing_us"] = dict(timing_us)
    return out


def detections_to_json(
    detections: list[Detection],
    tag_side_m: float,
    timing_us: dict[str, float] | None = None,
) -> str:
    return json.dumps(
        [detection_to_dict(d, tag_side_m, timing_us) for d in detections], indent=2
    )
