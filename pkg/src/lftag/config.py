"""Detector configuration with the stock defaults.

Defaults: 16 px threshold window with offset 5, dilation 1 px, child area
ratio bound 5.0, collinearity floor 20.0 px^2, and a decode error bound
keyed to the family (0.0005 for 3x3 and smaller, 0.001 for 4x4 and larger).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .pose import CameraIntrinsics


def default_error_metric_max(grid_size: int) -> float:
    return 0.0005 if grid_size <= 3 else 0.001


@dataclass(frozen=True)
class DetectorConfig:
    grid_size: int = 3
    mean_window_px: int = 16
    threshold_offset: float = 5.0
    centroid_dilation_px: int = 1
    max_area_ratio: float = 5.0
    min_line_residual: float = 20.0
    error_metric_max: float | None = None
    intrinsics: CameraIntrinsics | None = None
    tag_side_m: float = 1.0
    line_band_px: float = 1.5

    def __post_init__(self) -> None:
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        for name in (
            "mean_window_px",
            "threshold_offset",
            "centroid_dilation_px",
            "max_area_ratio",
            "min_line_residual",
            "tag_side_m",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.error_metric_max is not None and self.error_metric_max <= 0:
            raise ValueError("error_metric_max must be positive")

    @property
    def effective_error_metric_max(self) -> float:
        if self.error_metric_max is not None:
            return self.error_metric_max
        return default_error_metric_max(self.grid_size)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["intrinsics"] = None if self.intrinsics is None else asdict(self.intrinsics)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "DetectorConfig":
        data = dict(data)
        intr = data.get("intrinsics")
        if intr is not None:
            data["intrinsics"] = CameraIntrinsics(**intr)
        return cls(**data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DetectorConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
