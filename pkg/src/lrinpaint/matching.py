"""Region-wise patch matching.

A target patch's neighborhood is split into subregions (fan-shaped
sectors or grid cells); the single most similar patch is taken from each
subregion.  Compared with one exhaustive window, the matches are spread
over many directions, so patches damaged by a missing image column still
get grouped with patches that observe those pixels.

Positions are (row, col) top-left corners.  Displacements are stored as
(dy, dx) integer pairs where dy moves rows and dx moves columns; the
sector angle is atan2(dy, dx) mapped to [0, 2*pi).
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass(frozen=True)
class PartitionSpec:
    """Precomputed neighborhood partition.

    offsets holds one (k_i, 2) int array of (dy, dx) displacements per
    subregion, each in row-major (dy, dx) enumeration order; that order
    is the tie-break order during matching.
    """

    strategy: str
    regions: int
    radius: int
    offsets: tuple


@dataclass(frozen=True)
class PatchGroup:
    """Vectorized target patch plus its matches, column per patch.

    values holds current image estimates, indicator the original
    observation mask; the target is always column 0.
    """

    values: np.ndarray
    indicator: np.ndarray
    positions: tuple
    patch_side: int


def _sector_offsets(regions, radius):
    step = 2.0 * math.pi / regions
    sets = [[] for _ in range(regions)]
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            rr = dy * dy + dx * dx
            if rr == 0 or rr > radius * radius:
                continue
            theta = math.atan2(dy, dx)
            if theta < 0:
                theta += 2.0 * math.pi
            sets[min(int(theta / step), regions - 1)].append((dy, dx))
    return sets


def _grid_offsets(regions, radius):
    a = 1
    for d in range(int(math.isqrt(regions)), 1, -1):
        if regions % d == 0:
            a = d
            break
    if a == 1 and regions > 3:
        raise ValueError(
            f"{regions} subregions admit no near-square grid factorization"
        )
    b = regions // a
    sets = [[] for _ in range(regions)]
    span = 2 * radius
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dy == 0 and dx == 0:
                continue
            row_band = min((dy + radius) * a // span, a - 1)
            col_band = min((dx + radius) * b // span, b - 1)
            sets[row_band * b + col_band].append((dy, dx))
    return sets


def _window_offsets(radius):
    return [
        [
            (dy, dx)
            for dy in range(-radius, radius + 1)
            for dx in range(-radius, radius + 1)
            if (dy, dx) != (0, 0)
        ]
    ]


def build_partition(strategy, regions=60, radius=90):
    """Precompute per-subregion displacement sets.

    sectors: disjoint fan-shaped sectors of the Euclidean disk of the
    given radius.  grids: equal-area axis-aligned cells tiling the square
    [-radius, radius]^2 (regions must factor into a near-square a x b
    grid).  none: a single exhaustive square window.
    """
    if regions < 1:
        raise ValueError(f"need at least one subregion, got {regions}")
    if radius < 1:
        raise ValueError(f"radius must be at least 1, got {radius}")
    if strategy == "sectors":
        sets = _sector_offsets(regions, radius)
    elif strategy == "grids":
        sets = _grid_offsets(regions, radius)
    elif strategy == "none":
        sets = _window_offsets(radius)
    else:
        raise ValueError(f"unknown partition strategy {strategy!r}")
    offsets = tuple(
        np.asarray(s, dtype=np.int64).reshape(len(s), 2) for s in sets
    )
    return PartitionSpec(
        strategy=strategy, regions=len(offsets), radius=radius, offsets=offsets
    )


def _check_position(shape, pos, side):
    r, c = pos
    if not (0 <= r <= shape[0] - side and 0 <= c <= shape[1] - side):
        raise ValueError(
            f"patch position {pos} with side {side} exceeds image shape {shape}"
        )


def extract_patch(img, pos, side):
    """Column-major vectorization of the side x side block at pos."""
    img = np.asarray(img)
    _check_position(img.shape, pos, side)
    r, c = pos
    return img[r : r + side, c : c + side].ravel(order="F").astype(np.float64)


def embed_accumulate(canvas_sum, canvas_weight, pos, patch):
    """Add a vectorized patch into the sum canvas and bump the weight
    canvas over the same footprint (in place)."""
    patch = np.asarray(patch, dtype=np.float64)
    side = math.isqrt(patch.size)
    if side * side != patch.size:
        raise ValueError(f"patch length {patch.size} is not a perfect square")
    _check_position(canvas_sum.shape, pos, side)
    r, c = pos
    canvas_sum[r : r + side, c : c + side] += patch.reshape(side, side, order="F")
    canvas_weight[r : r + side, c : c + side] += 1.0


def match_regions(img, pos, spec, side):
    """Best match per subregion around pos, by squared Frobenius patch
    distance on the current estimate.

    Out-of-bounds candidates are discarded; subregions left with no
    candidate are skipped.  Ties go to the earliest offset in the
    precomputed order, so results are deterministic.
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    _check_position(img.shape, pos, side)
    max_r = img.shape[0] - side
    max_c = img.shape[1] - side
    view = sliding_window_view(img, (side, side))
    pr, pc = pos
    target = view[pr, pc]

    matches = []
    for off in spec.offsets:
        if off.shape[0] == 0:
            continue
        qr = pr + off[:, 0]
        qc = pc + off[:, 1]
        ok = (qr >= 0) & (qr <= max_r) & (qc >= 0) & (qc <= max_c)
        if not ok.any():
            continue
        qr = qr[ok]
        qc = qc[ok]
        diff = view[qr, qc] - target
        dist = np.einsum("kij,kij->k", diff, diff)
        j = int(np.argmin(dist))
        matches.append((int(qr[j]), int(qc[j])))
    return matches


def build_group(img, mask, pos, matches, side):
    """Stack the target patch and its matches as columns.

    Pixel values come from the current estimate ``img``; the indicator
    columns always come from the original observation mask."""
    positions = [tuple(pos)] + [tuple(q) for q in matches]
    values = np.column_stack([extract_patch(img, p, side) for p in positions])
    indicator = np.column_stack([extract_patch(mask, p, side) for p in positions])
    return PatchGroup(
        values=values,
        indicator=indicator,
        positions=tuple(positions),
        patch_side=side,
    )
