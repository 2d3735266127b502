"""Marker family geometry, ID encoding, and canonical rasterization.

Marker coordinate frame: origin at the top-left outer corner of the marker,
x to the right, y down, side length 1.0. A marker is a black border, a white
interior, and a grid of black circular regions. The two enlarged "anchor"
regions sit in the top-row corner cells and fix the orientation; every other
cell holds a "data" region whose centroid is displaced diagonally from the
cell center by (+/-shift, +/-shift), encoding two bits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

# Ratio of anchor-region area to data-region area.
ANCHOR_AREA_RATIO = 1.77

_DEFAULT_BORDER_WIDTH = 0.1


def _parse_grid_size(name: str | int) -> int:
    if isinstance(name, int):
        return name
    text = name.strip().lower()
    parts = text.split("x")
    if len(parts) == 2 and parts[0] == parts[1] and parts[0].isdigit():
        return int(parts[0])
    if text.isdigit():
        return int(text)
    raise ValueError(f"malformed family name {name!r}, expected like '3x3'")


@dataclass(frozen=True)
class TagFamily:
    """Parametric geometry of an n-by-n marker family.

    All lengths are fractions of the marker side. ``cell_pitch`` is derived:
    the white interior (side ``1 - 2*border_width``) splits into an n-by-n
    cell grid.
    """

    grid_size: int
    border_width: float = _DEFAULT_BORDER_WIDTH
    shift: float = field(init=False)
    data_radius: float = field(init=False)
    anchor_radius: float = field(init=False)

    def __post_init__(self) -> None:
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if not 0.0 < self.border_width < 0.5:
            raise ValueError("border_width must be in (0, 0.5)")
        pitch = self.cell_pitch
        object.__setattr__(self, "shift", pitch / 8.0)
        object.__setattr__(self, "data_radius", 0.3 * pitch)
        object.__setattr__(
            self, "anchor_radius", 0.3 * pitch * math.sqrt(ANCHOR_AREA_RATIO)
        )

    @property
    def cell_pitch(self) -> float:
        return (1.0 - 2.0 * self.border_width) / self.grid_size

    @property
    def name(self) -> str:
        return f"{self.grid_size}x{self.grid_size}"

    @classmethod
    def of(cls, name: str | int) -> "TagFamily":
        """Build a family from a name like ``"3x3"`` or a bare grid size."""
        return cls(_parse_grid_size(name))

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        """Center of grid cell (row, col) in marker coordinates."""
        pitch = self.cell_pitch
        return (
            self.border_width + (col + 0.5) * pitch,
            self.border_width + (row + 0.5) * pitch,
        )

    def anchor_cells(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """The two anchor cells: opposite corners of the top row."""
        return (0, 0), (0, self.grid_size - 1)

    def data_cells(self) -> list[tuple[int, int]]:
        """Data cells in row-major order, skipping the two anchor cells."""
        anchors = set(self.anchor_cells())
        return [
            (r, c)
            for r in range(self.grid_size)
            for c in range(self.grid_size)
            if (r, c) not in anchors
        ]

    def data_positions(self, row: int, col: int) -> list[tuple[float, float]]:
        """The 4 legal centroid positions of a data cell.

        Indexed so that bit 0 selects horizontal (0 = left, 1 = right) and
        bit 1 selects vertical (0 = up, 1 = down).
        """
        cx, cy = self.cell_center(row, col)
        s = self.shift
        return [
            (cx - s, cy - s),
            (cx + s, cy - s),
            (cx - s, cy + s),
            (cx + s, cy + s),
        ]


def dictionary_size(family: TagFamily) -> int:
    """Number of distinct ids: 4 positions per data region."""
    return 4 ** (family.grid_size**2 - 2)


@dataclass(frozen=True)
class Region:
    """One marker region: grid cell, role, centroid, and radius."""

    cell_row: int
    cell_col: int
    role: str  # "anchor" | "data"
    centroid: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class MarkerLayout:
    """Region placement for one concrete marker id."""

    family: TagFamily
    tag_id: int
    regions: tuple[Region, ...]

    def data_regions(self) -> list[Region]:
        return [r for r in self.regions if r.role == "data"]

    def anchor_regions(self) -> list[Region]:
        return [r for r in self.regions if r.role == "anchor"]


def encode(family: TagFamily, tag_id: int) -> MarkerLayout:
    """Lay out the regions encoding ``tag_id``.

    Data cells are enumerated row-major; data cell k consumes bits
    (2k, 2k+1) of the id, little-endian, via the position indexing of
    :meth:`TagFamily.data_positions`.
    """
    size = dictionary_size(family)
    if not 0 <= tag_id < size:
        raise ValueError(f"id {tag_id} out of range for {family.name} (< {size})")

    data_cells = {cell: k for k, cell in enumerate(family.data_cells())}
    anchors = set(family.anchor_cells())
    regions = []
    for r in range(family.grid_size):
        for c in range(family.grid_size):
            if (r, c) in anchors:
                regions.append(
                    Region(r, c, "anchor", family.cell_center(r, c), family.anchor_radius)
                )
            else:
                k = data_cells[(r, c)]
                pos_index = (tag_id >> (2 * k)) & 0b11
                centroid = family.data_positions(r, c)[pos_index]
                regions.append(Region(r, c, "data", centroid, family.data_radius))
    return MarkerLayout(family=family, tag_id=tag_id, regions=tuple(regions))


def decode_layout(
    family: TagFamily, centroids: dict[tuple[int, int], tuple[float, float]]
) -> int:
    """Recover the id from one centroid per data cell (marker coordinates).

    Each centroid is snapped to the nearest of its cell's 4 legal positions.
    Raises ValueError for a centroid that is ambiguous (equidistant between
    positions) or farther than cell_pitch/2 from every legal position.
    """
    data_cells = family.data_cells()
    if set(centroids) != set(data_cells):
        raise ValueError("need exactly one centroid per data cell")

    snap_limit = family.cell_pitch / 2.0
    tag_id = 0
    for k, cell in enumerate(data_cells):
        x, y = centroids[cell]
        cx, cy = family.cell_center(*cell)
        dx, dy = x - cx, y - cy
        if dx == 0.0 or dy == 0.0:
            raise ValueError(f"ambiguous centroid in cell {cell}: tie between positions")
        s = family.shift
        err = math.hypot(abs(dx) - s, abs(dy) - s)
        if err > snap_limit:
            raise ValueError(f"centroid in cell {cell} is {err:.4f} from nearest position")
        pos_index = (1 if dx > 0 else 0) | ((1 if dy > 0 else 0) << 1)
        tag_id |= pos_index << (2 * k)
    return tag_id


def black_mask(layout: MarkerLayout, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate the continuous marker: True where ink is black.

    ``x`` and ``y`` are broadcastable arrays of marker coordinates; points
    outside [0, 1]^2 are treated as border (black) only if inside the marker
    square, callers clip as needed.
    """
    bw = layout.family.border_width
    out = (x < bw) | (x > 1.0 - bw) | (y < bw) | (y > 1.0 - bw)
    for region in layout.regions:
        rx, ry = region.centroid
        out |= (x - rx) ** 2 + (y - ry) ** 2 <= region.radius**2
    return out


def rasterize(layout: MarkerLayout, side_px: int) -> np.ndarray:
    """Render the marker to an 8-bit grayscale image, side ``side_px``.

    Anti-aliased by 4x4 supersampling of the continuous marker definition.
    Pixel centers sit at integer coordinates; pixel (i, j) covers the marker
    square patch [j/side, (j+1)/side) x [i/side, (i+1)/side) shifted so the
    marker exactly fills the image.
    """
    n = layout.family.grid_size
    if side_px < 8 * n:
        raise ValueError(f"side_px must be >= {8 * n} for a {layout.family.name} marker")

    ss = 4
    m = side_px * ss
    coords = (np.arange(m, dtype=np.float64) + 0.5) / m
    black = np.zeros((m, m), dtype=bool)

    # Border bands.
    bw = layout.family.border_width
    edge = coords < bw
    redge = coords > 1.0 - bw
    black[edge | redge, :] = True
    black[:, edge | redge] = True

    # Region disks, rasterized only inside their bounding boxes.
    for region in layout.regions:
        rx, ry = region.centroid
        rad = region.radius
        j0 = max(0, int((rx - rad) * m) - 1)
        j1 = min(m, int((rx + rad) * m) + 2)
        i0 = max(0, int((ry - rad) * m) - 1)
        i1 = min(m, int((ry + rad) * m) + 2)
        xs = coords[j0:j1][None, :]
        ys = coords[i0:i1][:, None]
        black[i0:i1, j0:j1] |= (xs - rx) ** 2 + (ys - ry) ** 2 <= rad**2

    frac = black.reshape(side_px, ss, side_px, ss).mean(axis=(1, 3))
    return np.rint(255.0 * (1.0 - frac)).astype(np.uint8)


def min_clearance(family: TagFamily) -> float:
    """Worst-case gap between any two regions or a region and the border.

    Exhaustive over every cell pair and every combination of data shifts,
    so it certifies the family geometry for all ids at once.
    """
    n = family.grid_size
    anchors = set(family.anchor_cells())
    s = family.shift

    def placements(cell: tuple[int, int]) -> list[tuple[float, float, float]]:
        cx, cy = family.cell_center(*cell)
        if cell in anchors:
            return [(cx, cy, family.anchor_radius)]
        return [(cx + ex * s, cy + ey * s, family.data_radius)
                for ex, ey in itertools.product((-1.0, 1.0), repeat=2)]

    cells = [(r, c) for r in range(n) for c in range(n)]
    worst = math.inf
    interior_lo = family.border_width
    interior_hi = 1.0 - family.border_width
    for i, cell_a in enumerate(cells):
        for ax, ay, ar in placements(cell_a):
            worst = min(
                worst,
                ax - ar - interior_lo,
                interior_hi - (ax + ar),
                ay - ar - interior_lo,
                interior_hi - (ay + ar),
            )
            for cell_b in cells[i + 1:]:
                for bx, by, br in placements(cell_b):
                    gap = math.hypot(ax - bx, ay - by) - ar - br
                    worst = min(worst, gap)
    return worst
