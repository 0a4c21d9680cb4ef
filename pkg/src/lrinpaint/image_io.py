"""Grayscale image/mask I/O, mask synthesis, and quality metrics.

Images are 2-D float64 arrays of intensities on the 8-bit [0, 255]
scale.  Masks are 2-D arrays of {0, 1} with 1 = observed; on disk a mask
is a PGM/PNG with 0 = missing and 255 = observed.
"""

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy.signal import convolve2d

PEAK = 255.0
BLOCK_SIDES = (10, 20)  # random_blocks side lengths are drawn from this range


class ImageFormatError(ValueError):
    """Unsupported or malformed image file."""


def _pgm_tokens(data):
    """Yield whitespace-separated header tokens, skipping # comments."""
    i = 0
    while True:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise ImageFormatError("truncated PGM header")
        yield data[start:i], i


def _read_pgm(data):
    tokens = _pgm_tokens(data)
    magic, _ = next(tokens)
    if magic != b"P5":
        raise ImageFormatError(f"unsupported PGM magic {magic!r}, only binary P5 is read")
    try:
        width, _ = next(tokens)
        height, _ = next(tokens)
        maxval, end = next(tokens)
        width, height, maxval = int(width), int(height), int(maxval)
    except ValueError as exc:
        raise ImageFormatError(f"malformed PGM header: {exc}") from exc
    if width < 1 or height < 1:
        raise ImageFormatError(f"bad PGM dimensions {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(
            f"unsupported PGM maxval {maxval}; only 8-bit (maxval 255) images are read"
        )
    raster = data[end + 1 : end + 1 + width * height]
    if len(raster) != width * height:
        raise ImageFormatError("PGM raster is shorter than header promises")
    return (
        np.frombuffer(raster, dtype=np.uint8)
        .reshape(height, width)
        .astype(np.float64)
    )


def _read_png(path):
    with Image.open(path) as im:
        if im.format != "PNG":
            raise ImageFormatError(f"unsupported image format {im.format}")
        if im.mode == "I;16":
            raise ImageFormatError("16-bit PNG is not supported, use 8-bit grayscale")
        if im.mode != "L":
            raise ImageFormatError(
                f"PNG mode {im.mode!r} is not supported, use 8-bit grayscale (mode L)"
            )
        return np.asarray(im, dtype=np.float64)


def read_image(path):
    """Read an 8-bit grayscale PGM (binary P5) or PNG into a float array."""
    path = str(path)
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"P5":
        with open(path, "rb") as fh:
            return _read_pgm(fh.read())
    if head == b"\x89P":
        return _read_png(path)
    raise ImageFormatError(f"{path}: neither a binary PGM nor a PNG file")


def _to_uint8(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def write_image(path, img):
    """Write as PGM (P5) or, for .png paths, as 8-bit grayscale PNG.

    Values are rounded half-to-even and clamped to [0, 255]."""
    path = str(path)
    raster = _to_uint8(img)
    if path.lower().endswith(".png"):
        Image.fromarray(raster, mode="L").save(path, format="PNG")
        return
    height, width = raster.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(raster.tobytes())


def load_mask(path):
    """Read a mask image; pixels >= 128 count as observed."""
    return (read_image(path) >= 128.0).astype(np.float64)


def write_mask(path, mask):
    write_image(path, np.asarray(mask, dtype=np.float64) * 255.0)


@dataclass(frozen=True)
class MaskRecipe:
    """Deterministic mask description.

    kind         random_pixels | random_blocks | lines
    rate         fraction of pixels to hide (random_pixels)
    count        number of blocks or lines
    orientation  horizontal | vertical (lines only)
    seed         RNG seed; same recipe + seed -> identical mask
    """

    kind: str
    rate: float | None = None
    count: int | None = None
    orientation: str | None = None
    seed: int = 0


def gen_mask(recipe, height, width):
    """Generate a {0,1} mask (1 = observed) from a recipe."""
    if height < 1 or width < 1:
        raise ValueError(f"bad mask shape {height}x{width}")
    rng = np.random.default_rng(recipe.seed)
    mask = np.ones((height, width))

    if recipe.kind == "random_pixels":
        if recipe.rate is None or not 0.0 < recipe.rate < 1.0:
            raise ValueError(f"random_pixels needs a rate in (0, 1), got {recipe.rate}")
        hidden = int(recipe.rate * height * width)
        idx = rng.choice(height * width, size=hidden, replace=False)
        mask.flat[idx] = 0.0
    elif recipe.kind == "random_blocks":
        if recipe.count is None or recipe.count < 1:
            raise ValueError(f"random_blocks needs a positive count, got {recipe.count}")
        lo, hi = BLOCK_SIDES
        if min(height, width) < hi:
            raise ValueError(f"image {height}x{width} too small for {lo}--{hi} blocks")
        for _ in range(recipe.count):
            bh = int(rng.integers(lo, hi + 1))
            bw = int(rng.integers(lo, hi + 1))
            top = int(rng.integers(0, height - bh + 1))
            left = int(rng.integers(0, width - bw + 1))
            mask[top : top + bh, left : left + bw] = 0.0
    elif recipe.kind == "lines":
        if recipe.orientation not in ("horizontal", "vertical"):
            raise ValueError(f"lines needs orientation horizontal|vertical, got {recipe.orientation}")
        if recipe.count is None or not 1 <= recipe.count < min(height, width):
            raise ValueError(f"lines count must be in [1, min(H, W)), got {recipe.count}")
        if recipe.orientation == "vertical":
            mask[:, rng.choice(width, size=recipe.count, replace=False)] = 0.0
        else:
            mask[rng.choice(height, size=recipe.count, replace=False), :] = 0.0
    else:
        raise ValueError(f"unknown mask kind {recipe.kind!r}")
    return mask


def psnr(a, b):
    """Peak signal-to-noise ratio in dB against the 8-bit peak 255.

    Identical inputs give math.inf."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def _gaussian_window(size=11, sigma=1.5):
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2.0 * sigma**2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(a, b):
    """Mean local structural similarity, 11x11 Gaussian window (sigma 1.5),
    K1 = 0.01, K2 = 0.03, dynamic range 255."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if min(a.shape) < 11:
        raise ValueError(f"image {a.shape} smaller than the 11x11 SSIM window")
    win = _gaussian_window()
    c1 = (0.01 * PEAK) ** 2
    c2 = (0.03 * PEAK) ** 2
    mu_a = convolve2d(a, win, mode="valid")
    mu_b = convolve2d(b, win, mode="valid")
    var_a = convolve2d(a * a, win, mode="valid") - mu_a**2
    var_b = convolve2d(b * b, win, mode="valid") - mu_b**2
    cov = convolve2d(a * b, win, mode="valid") - mu_a * mu_b
    score = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    )
    return float(score.mean())
