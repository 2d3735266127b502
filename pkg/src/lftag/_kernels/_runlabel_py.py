"""Pure NumPy/Python run labeling: the fallback for the compiled kernel.

Both backends implement ``label_runs`` with the same contract, so the rest
of the package never needs to know which one is active. Labels are compacted
in raster-first order, which makes the two backends bit-identical.
"""

from __future__ import annotations

import numpy as np


def _extract_runs(black: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Split every row into maximal same-color runs (vectorized)."""
    h, w = black.shape
    # A sentinel column forces a run break at every row boundary.
    flat = np.empty((h, w + 1), dtype=np.int8)
    flat[:, :w] = black
    flat[:, w] = 2
    flat = flat.ravel()

    starts = np.flatnonzero(np.diff(flat) != 0) + 1
    starts = np.concatenate(([0], starts))
    ends = np.concatenate((starts[1:], [flat.size]))
    colors = flat[starts]

    keep = colors != 2
    lengths = (ends - starts)[keep]
    starts = starts[keep]
    rows = (starts // (w + 1)).astype(np.int32)
    c0 = (starts % (w + 1)).astype(np.int32)
    return rows, c0, (c0 + lengths).astype(np.int32), colors[keep].astype(np.uint8)


def label_runs(
    black: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]:
    """Label both colors of a binary image into connected regions.

    Black runs use 8-connectivity, white runs 4-connectivity. Returns
    ``(rows, c0, c1, colors, labels, n_regions)`` over the maximal
    per-row runs in raster order; ``labels`` are region ids compacted in
    order of first (raster) appearance.
    """
    if black.ndim != 2 or black.size == 0:
        raise ValueError("expected a non-empty 2D binary image")
    rows, c0, c1, colors = _extract_runs(black.astype(bool))
    n = rows.shape[0]

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    rows_l = rows.tolist()
    c0_l = c0.tolist()
    c1_l = c1.tolist()
    colors_l = colors.tolist()

    prev_lo = prev_hi = 0
    row_begin = 0
    cur_row = 0
    p = 0
    for i in range(n):
        r = rows_l[i]
        if r != cur_row:
            prev_lo, prev_hi = row_begin, i
            row_begin = i
            cur_row = r
            p = prev_lo
        if r == 0:
            continue
        lo = c0_l[i]
        hi = c1_l[i]
        color = colors_l[i]
        while p < prev_hi and c1_l[p] < lo:
            p += 1
        j = p
        while j < prev_hi and c0_l[j] <= hi:
            if colors_l[j] == color:
                # 8-connect black; 4-connect white needs strict overlap.
                if color or (c0_l[j] < hi and c1_l[j] > lo):
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        if ri < rj:
                            parent[rj] = ri
                        else:
                            parent[ri] = rj
            j += 1

    labels = np.empty(n, dtype=np.int32)
    compact: dict[int, int] = {}
    for i in range(n):
        root = find(i)
        label = compact.get(root)
        if label is None:
            label = len(compact)
            compact[root] = label
        labels[i] = label

    return rows, c0, c1, colors, labels, len(compact)
