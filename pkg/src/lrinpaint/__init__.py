"""Low-rank/sparse image restoration with region-wise patch matching."""

from .image_io import MaskRecipe, gen_mask, load_mask, psnr, read_image, ssim, write_image, write_mask
from .linalg import SvdResult, soft_shrink, spectral_norm, svd
from .matching import (
    PartitionSpec,
    PatchGroup,
    build_group,
    build_partition,
    embed_accumulate,
    extract_patch,
    match_regions,
)
from .pipeline import (
    DestripeResult,
    InpaintResult,
    PipelineConfig,
    aggregate,
    blind_inpaint,
    destripe,
    inpaint,
    target_positions,
)
from .solver import (
    Decomposition,
    GammaValue,
    SolverConfig,
    decompose,
    gamma_from,
    nuclear_decompose,
    phi,
    shrink_singular_values,
)

__all__ = [
    "Decomposition",
    "DestripeResult",
    "GammaValue",
    "InpaintResult",
    "MaskRecipe",
    "PartitionSpec",
    "PatchGroup",
    "PipelineConfig",
    "SolverConfig",
    "SvdResult",
    "aggregate",
    "blind_inpaint",
    "build_group",
    "build_partition",
    "decompose",
    "destripe",
    "embed_accumulate",
    "extract_patch",
    "gamma_from",
    "gen_mask",
    "inpaint",
    "load_mask",
    "match_regions",
    "nuclear_decompose",
    "phi",
    "psnr",
    "read_image",
    "shrink_singular_values",
    "soft_shrink",
    "spectral_norm",
    "ssim",
    "svd",
    "target_positions",
    "write_image",
    "write_mask",
]

__version__ = "0.1.0"
