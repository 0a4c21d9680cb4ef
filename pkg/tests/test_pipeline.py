import numpy as np
import pytest

from lrinpaint.image_io import psnr
from lrinpaint.matching import build_partition, extract_patch
from lrinpaint.pipeline import (
    PipelineConfig,
    aggregate,
    blind_inpaint,
    destripe,
    effective_lam,
    inpaint,
    target_positions,
)
from lrinpaint.solver import SolverConfig


def quick_config(**overrides):
    """Small search geometry so unit tests stay fast."""
    defaults = dict(
        partition=build_partition("sectors", 16, 12),
        max_outer=2,
    )
    defaults.update(overrides)
    return PipelineConfig(**defaults)


def texture(height, width, period=8.0, amplitude=60.0):
    r = np.arange(height)[:, None]
    c = np.arange(width)[None, :]
    return 127.5 + amplitude * np.sin(2 * np.pi * r / period) * np.cos(2 * np.pi * c / period)


class TestTargetPositions:
    def test_exact_tiling(self):
        positions = target_positions(64, 64, 8, 4)
        rows = sorted({p[0] for p in positions})
        assert rows == list(range(0, 57, 4))

    def test_clamped_last_window(self):
        positions = target_positions(65, 70, 8, 4)
        rows = sorted({p[0] for p in positions})
        cols = sorted({p[1] for p in positions})
        assert rows[-1] == 57 and rows[-2] == 56
        assert cols[-1] == 62 and cols[-2] == 60

    def test_full_coverage(self):
        covered = np.zeros((37, 29), dtype=bool)
        for r, c in target_positions(37, 29, 8, 4):
            covered[r : r + 8, c : c + 8] = True
        assert covered.all()

    def test_patch_larger_than_image(self):
        with pytest.raises(ValueError):
            target_positions(6, 64, 8, 4)


class TestAggregate:
    def test_identity_for_single_cover(self):
        rng = np.random.default_rng(0)
        truth = rng.uniform(0, 255, size=(8, 8))
        est = extract_patch(truth, (0, 0), 8)[:, None]
        out = aggregate([(est, [(0, 0)])], (8, 8))
        assert np.allclose(out, truth)

    def test_two_estimates_average(self):
        a = np.full((4, 1), 10.0)
        b = np.full((4, 1), 20.0)
        out = aggregate([(a, [(0, 0)]), (b, [(0, 0)])], (2, 2))
        assert np.array_equal(out, np.full((2, 2), 15.0))

    def test_consistency_with_true_patches(self):
        rng = np.random.default_rng(1)
        truth = rng.uniform(0, 255, size=(24, 21))
        groups = []
        for pos in target_positions(24, 21, 6, 3):
            est = extract_patch(truth, pos, 6)[:, None]
            groups.append((est, [pos]))
        assert np.allclose(aggregate(groups, (24, 21)), truth)

    def test_conservation(self):
        # weight-scaled output sums back to the sum of patch estimates
        rng = np.random.default_rng(2)
        groups = []
        total = 0.0
        for pos in target_positions(20, 20, 5, 2):
            est = rng.uniform(0, 255, size=(25, 1))
            total += est.sum()
            groups.append((est, [pos]))
        canvas = np.zeros((20, 20))
        weight = np.zeros((20, 20))
        from lrinpaint.matching import embed_accumulate

        for est, positions in groups:
            embed_accumulate(canvas, weight, positions[0], est[:, 0])
        out = aggregate(groups, (20, 20))
        assert np.abs((out * weight).sum() - total) <= 1e-8 * abs(total)

    def test_uncovered_pixel_rejected(self):
        est = np.zeros((4, 1))
        with pytest.raises(ValueError):
            aggregate([(est, [(0, 0)])], (4, 4))


class TestEffectiveLam:
    def test_mode_defaults(self):
        shape = (64, 32)
        assert effective_lam(PipelineConfig(mode="inpaint"), shape) == 1.0
        assert effective_lam(PipelineConfig(mode="blind"), shape) == pytest.approx(1 / 8)
        assert effective_lam(PipelineConfig(mode="destripe"), shape) == pytest.approx(0.0125)

    def test_override_wins(self):
        cfg = PipelineConfig(mode="blind", lam=0.7)
        assert effective_lam(cfg, (64, 64)) == 0.7


class TestInpaint:
    def test_all_observed_preserves_input(self):
        truth = texture(32, 32)
        cfg = quick_config(solver=SolverConfig(tol=1e-9), max_outer=1)
        result = inpaint(truth, np.ones_like(truth), cfg)
        assert np.abs(result.image - truth).max() <= 1e-6

    def test_observed_pixels_survive_partial_mask(self):
        truth = texture(32, 32)
        mask = np.ones_like(truth)
        mask[:, [9, 20]] = 0.0
        cfg = quick_config(solver=SolverConfig(tol=1e-8))
        result = inpaint(truth * mask, mask, cfg)
        observed = mask == 1.0
        assert np.abs(result.image - truth)[observed].max() <= 1e-6

    def test_missing_columns_recovered(self):
        truth = texture(32, 32)
        mask = np.ones_like(truth)
        mask[:, [9, 20]] = 0.0
        result = inpaint(truth * mask, mask, quick_config())
        assert psnr(result.image, truth) >= 30.0
        assert result.outer_iterations <= 2
        assert result.nonconverged_groups == 0

    def test_reference_psnr_tracking_and_stop(self):
        truth = texture(32, 32)
        mask = np.ones_like(truth)
        mask[:, 11] = 0.0
        result = inpaint(truth * mask, mask, quick_config(max_outer=6), reference=truth)
        assert result.per_iteration_psnr is not None
        assert len(result.per_iteration_psnr) == result.outer_iterations
        assert result.outer_iterations <= 6

    def test_deterministic_across_thread_counts(self):
        truth = texture(32, 32)
        mask = np.ones_like(truth)
        mask[:, [5, 17]] = 0.0
        damaged = truth * mask
        images = []
        for threads in (1, 2):
            result = inpaint(damaged, mask, quick_config(threads=threads))
            images.append(result.image)
        assert np.array_equal(images[0], images[1])

    def test_all_black_image_terminates_immediately(self):
        image = np.zeros((24, 24))
        mask = np.ones((24, 24))
        mask[:, 5] = 0.0
        result = inpaint(image, mask, quick_config())
        assert result.outer_iterations == 1
        assert result.per_iteration_change == [0.0]
        assert np.array_equal(result.image, image)

    def test_rejects_bad_inputs(self):
        truth = texture(16, 16)
        with pytest.raises(ValueError):
            inpaint(truth, np.ones((8, 8)), quick_config())
        with pytest.raises(ValueError):
            inpaint(truth, np.zeros_like(truth), quick_config())
        with pytest.raises(ValueError):
            inpaint(truth, np.ones_like(truth), quick_config(stride=0))
        with pytest.raises(ValueError):
            # stride beyond the patch side would leave uncovered pixels
            inpaint(truth, np.ones_like(truth), quick_config(stride=9))
        with pytest.raises(ValueError):
            inpaint(truth, np.ones_like(truth), quick_config(), reference=np.ones((2, 2)))


class TestBlind:
    def test_lam_is_forced_by_mode(self):
        cfg = quick_config(mode="blind")
        assert effective_lam(cfg, (32, 32)) == pytest.approx(1 / np.sqrt(32))

    def test_mode_mismatch_rejected(self):
        with pytest.raises(ValueError):
            blind_inpaint(texture(16, 16), None, quick_config(mode="inpaint"))

    def test_impulses_cleaned_on_small_case(self):
        rng = np.random.default_rng(9)
        truth = texture(32, 32, amplitude=45.0)
        noisy = truth.copy()
        bad = rng.choice(truth.size, size=int(0.15 * truth.size), replace=False)
        noisy.flat[bad] = rng.choice([0.0, 255.0], size=bad.size)
        result = blind_inpaint(noisy, None, quick_config(mode="blind", max_outer=2))
        restored = np.abs(result.image.flat[bad] - truth.flat[bad])
        assert np.mean(restored <= 25.0) >= 0.9

    def test_clean_image_passes_nearly_untouched(self):
        # the small sparsity weight shrinks little genuine content
        r = np.arange(48)[:, None]
        c = np.arange(48)[None, :]
        truth = (
            127.5
            + 45.0 * np.sin(2 * np.pi * r / 8) * np.cos(2 * np.pi * c / 8)
            + 20.0 * np.cos(2 * np.pi * r / 16) * np.sin(2 * np.pi * c / 16)
        )
        cfg = PipelineConfig(
            mode="blind", partition=build_partition("sectors", 24, 20), max_outer=2
        )
        result = blind_inpaint(truth, None, cfg)
        assert psnr(result.image, truth) >= 40.0

    def test_impulses_and_missing_columns_together(self):
        # unknown random-valued impulses plus a known dead-line mask
        r = np.arange(48)[:, None]
        c = np.arange(48)[None, :]
        truth = (
            127.5
            + 45.0 * np.sin(2 * np.pi * r / 8) * np.cos(2 * np.pi * c / 8)
            + 20.0 * np.cos(2 * np.pi * r / 16) * np.sin(2 * np.pi * c / 16)
        )
        rng = np.random.default_rng(31)
        noisy = truth.copy()
        bad = rng.choice(truth.size, size=int(0.2 * truth.size), replace=False)
        noisy.flat[bad] = rng.uniform(0.0, 255.0, size=bad.size)
        mask = np.ones_like(truth)
        mask[:, rng.choice(48, size=4, replace=False)] = 0.0
        cfg = PipelineConfig(
            mode="blind", partition=build_partition("sectors", 24, 20), max_outer=3
        )
        result = blind_inpaint(noisy * mask, mask, cfg)
        assert psnr(result.image, truth) >= 30.0


class TestDestripe:
    def test_zero_image(self):
        result = destripe(np.zeros((16, 16)), quick_config(mode="destripe"))
        assert np.array_equal(result.clean, np.zeros((16, 16)))
        assert np.array_equal(result.stripes, np.zeros((16, 16)))

    def test_components_sum_back_to_input(self):
        rng = np.random.default_rng(11)
        img = rng.uniform(0, 255, size=(48, 48))
        result = destripe(img, quick_config(mode="destripe"))
        gap = np.linalg.norm(img - result.clean - result.stripes)
        assert gap <= 1e-6 * np.linalg.norm(img)

    def test_mode_mismatch_rejected(self):
        with pytest.raises(ValueError):
            destripe(np.zeros((8, 8)), quick_config(mode="inpaint"))
