"""Iterative patch-based inpainting, blind impulse removal, destriping.

One outer pass: slide a window over the current estimate, group every
target patch with its per-subregion matches, run the low-rank/sparse
solver on each group (indicator always taken from the original mask),
and write the low-rank estimates back by per-pixel averaging.  The pass
repeats until the image stops changing (or, when a reference image is
supplied, until consecutive PSNR values differ by less than 1%).

Group solves inside a pass are independent; with threads > 1 they run on
a thread pool.  Results are aggregated in fixed group order afterwards,
so the output is bit-identical for any worker count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .image_io import psnr
from .linalg import fro_norm
from .matching import PartitionSpec, build_group, build_partition, embed_accumulate, match_regions
from .solver import SolverConfig, decompose

PSNR_STOP_FRACTION = 0.01  # reference mode: stop below 1% consecutive-PSNR change


def default_partition():
    return build_partition("sectors", regions=60, radius=90)


@dataclass
class PipelineConfig:
    """Settings for the outer loop.

    lam = None picks the sparsity weight by mode: 1 for inpainting,
    1/sqrt(max(H, W)) for blind restoration, 0.1/sqrt(max(H, W)) for
    destriping.
    """

    patch_side: int = 8
    stride: int = 4
    partition: PartitionSpec = field(default_factory=default_partition)
    solver: SolverConfig = field(default_factory=SolverConfig)
    lam: float | None = None
    outer_tol: float = 1e-3
    max_outer: int = 10
    mode: str = "inpaint"
    threads: int = 1

    def validate(self):
        if self.patch_side < 2:
            raise ValueError(f"patch_side must be at least 2, got {self.patch_side}")
        if self.stride < 1:
            raise ValueError(f"stride must be at least 1, got {self.stride}")
        if self.stride > self.patch_side:
            raise ValueError(
                f"stride {self.stride} exceeds patch_side {self.patch_side}; "
                "windows would leave pixels uncovered"
            )
        if self.max_outer < 1:
            raise ValueError(f"max_outer must be at least 1, got {self.max_outer}")
        if self.outer_tol <= 0:
            raise ValueError(f"outer_tol must be positive, got {self.outer_tol}")
        if self.threads < 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")
        if self.mode not in ("inpaint", "blind", "destripe"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class InpaintResult:
    image: np.ndarray
    outer_iterations: int
    per_iteration_change: list
    per_iteration_psnr: list | None
    nonconverged_groups: int


@dataclass
class DestripeResult:
    clean: np.ndarray    # sparse component B: the destriped image
    stripes: np.ndarray  # low-rank component X: the stripe field
    decomposition: object


def effective_lam(cfg, shape):
    if cfg.lam is not None:
        return cfg.lam
    if cfg.mode == "inpaint":
        return 1.0
    scale = 1.0 / math.sqrt(max(shape))
    return scale if cfg.mode == "blind" else 0.1 * scale


def target_positions(height, width, side, stride):
    """Sliding-window top-left corners; the last row/column window is
    clamped to the edge so every pixel is covered."""
    if side > height or side > width:
        raise ValueError(f"patch side {side} exceeds image {height}x{width}")
    rows = list(range(0, height - side + 1, stride))
    if rows[-1] != height - side:
        rows.append(height - side)
    cols = list(range(0, width - side + 1, stride))
    if cols[-1] != width - side:
        cols.append(width - side)
    return [(r, c) for r in rows for c in cols]


def aggregate(groups, shape):
    """Per-pixel average of all patch estimates (estimate sums divided by
    coverage counts).  Every pixel must be covered at least once."""
    canvas = np.zeros(shape)
    weight = np.zeros(shape)
    for estimates, positions in groups:
        for j, pos in enumerate(positions):
            embed_accumulate(canvas, weight, pos, estimates[:, j])
    if (weight == 0.0).any():
        raise ValueError("aggregation left uncovered pixels; window must tile the image")
    return canvas / weight


def _check_image_mask(image, mask):
    image = np.asarray(image, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {image.shape}")
    if mask.shape != image.shape:
        raise ValueError(f"mask shape {mask.shape} does not match image {image.shape}")
    if not np.all((mask == 0.0) | (mask == 1.0)):
        raise ValueError("mask must be binary (1 = observed)")
    return image, mask


def _solve_group(estimate, mask, pos, cfg, solver_cfg, side):
    matches = match_regions(estimate, pos, cfg.partition, side)
    group = build_group(estimate, mask, pos, matches, side)
    dec = decompose(group.values, group.indicator, solver_cfg)
    return dec.low_rank, group.positions, dec.converged


def _one_pass(estimate, mask, positions, cfg, solver_cfg):
    side = cfg.patch_side
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            solved = list(
                pool.map(
                    lambda pos: _solve_group(estimate, mask, pos, cfg, solver_cfg, side),
                    positions,
                )
            )
    else:
        solved = [_solve_group(estimate, mask, pos, cfg, solver_cfg, side) for pos in positions]
    stalled = sum(1 for _, _, converged in solved if not converged)
    new_estimate = aggregate([(est, pos) for est, pos, _ in solved], estimate.shape)
    return new_estimate, stalled


def inpaint(image, mask, cfg=None, reference=None):
    """Fill the masked pixels of ``image`` (mask 1 = observed).

    Missing pixels start at the mean of the observed ones; each outer
    pass re-matches patches on the current estimate while the solver
    indicator always comes from the original mask."""
    cfg = cfg or PipelineConfig()
    cfg.validate()
    image, mask = _check_image_mask(image, mask)
    if reference is not None:
        reference = np.asarray(reference, dtype=np.float64)
        if reference.shape != image.shape:
            raise ValueError(f"reference shape {reference.shape} does not match image")
    if not mask.any():
        raise ValueError("mask hides every pixel; nothing observed to propagate")

    lam = effective_lam(cfg, image.shape)
    solver_cfg = replace(cfg.solver, lam=lam)
    positions = target_positions(*image.shape, cfg.patch_side, cfg.stride)

    estimate = np.where(mask == 1.0, image, image[mask == 1.0].mean())
    changes = []
    psnrs = [] if reference is not None else None
    stalled_total = 0
    outer = 0

    for _ in range(cfg.max_outer):
        new_estimate, stalled = _one_pass(estimate, mask, positions, cfg, solver_cfg)
        stalled_total += stalled
        change = fro_norm(new_estimate - estimate) / (fro_norm(estimate) or 1.0)
        changes.append(change)
        estimate = new_estimate
        outer += 1
        if reference is not None:
            psnrs.append(psnr(estimate, reference))
            if math.isinf(psnrs[-1]):
                break
            if (
                len(psnrs) >= 2
                and abs(psnrs[-1] - psnrs[-2]) < PSNR_STOP_FRACTION * abs(psnrs[-2])
            ):
                break
        if change < cfg.outer_tol:
            break

    return InpaintResult(
        image=estimate,
        outer_iterations=outer,
        per_iteration_change=changes,
        per_iteration_psnr=psnrs,
        nonconverged_groups=stalled_total,
    )


def blind_inpaint(image, mask=None, cfg=None, reference=None):
    """Restore an image whose damaged pixel locations are unknown.

    Runs the same pipeline with the mode-selected small sparsity weight,
    so impulse-corrupted pixels migrate into the sparse component of each
    group and get replaced by the low-rank estimate.  A mask for any
    known-missing pixels (e.g. dead lines) may still be supplied."""
    cfg = cfg or PipelineConfig(mode="blind")
    if cfg.mode != "blind":
        raise ValueError(f"blind_inpaint needs mode='blind', got {cfg.mode!r}")
    image = np.asarray(image, dtype=np.float64)
    if mask is None:
        mask = np.ones_like(image)
    return inpaint(image, mask, cfg, reference=reference)


def destripe(image, cfg=None):
    """Split stripe noise from image content in one whole-image solve.

    A stripe field is constant along one axis, hence (nearly) rank one,
    so it lands in the low-rank component; the destriped image is the
    sparse component.  No patch grouping is involved."""
    cfg = cfg or PipelineConfig(mode="destripe")
    if cfg.mode != "destripe":
        raise ValueError(f"destripe needs mode='destripe', got {cfg.mode!r}")
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {image.shape}")
    lam = effective_lam(cfg, image.shape)
    dec = decompose(image, np.ones_like(image), replace(cfg.solver, lam=lam))
    return DestripeResult(clean=dec.sparse, stripes=dec.low_rank, decomposition=dec)
