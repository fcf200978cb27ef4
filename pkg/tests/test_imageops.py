import math

import numpy as np
import pytest

from patchzoom.imageops import (
    bicubic_stretch,
    bicubic_upsample,
    box_mean,
    box_mean_image,
    downsample,
    extract_patches,
    feature_dim,
    gaussian_blur,
    gaussian_kernel,
    gradient_features,
    integral_image,
    load_image,
    load_rgb,
    mse,
    psnr,
    rgb_to_ycbcr,
    save_image,
    save_rgb,
    ycbcr_to_rgb,
)


def brute_box_mean(img, cy, cx, radius):
    """Independent double-loop window mean used as the integral-image oracle."""
    h, w = img.shape
    total, count = 0.0, 0
    for y in range(max(0, cy - radius), min(h - 1, cy + radius) + 1):
        for x in range(max(0, cx - radius), min(w - 1, cx + radius) + 1):
            total += img[y, x]
            count += 1
    return total / count


class TestGaussianBlur:
    def test_constant_preserved(self):
        img = np.full((16, 16), 0.5)
        for sigma in (0.3, 1.0, 2.5):
            np.testing.assert_allclose(gaussian_blur(img, sigma), img, atol=1e-12)

    def test_impulse_matches_sampled_gaussian(self):
        # oracle: normalized separable taps evaluated directly
        sigma = 1.0
        radius = math.ceil(3 * sigma)
        x = np.arange(-radius, radius + 1)
        taps = np.exp(-(x**2) / (2 * sigma**2))
        taps /= taps.sum()
        img = np.zeros((15, 15))
        img[7, 7] = 1.0
        out = gaussian_blur(img, sigma)
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                assert out[7 + dy, 7 + dx] == pytest.approx(taps[radius + dy] * taps[radius + dx])

    def test_small_sigma_near_identity(self, random_image):
        out = gaussian_blur(random_image, 0.25)
        # center tap of the radius-1 truncated kernel keeps deviations tiny
        assert np.max(np.abs(out - random_image)) < 0.05

    def test_kernel_normalized_and_symmetric(self):
        taps = gaussian_kernel(1.7)
        assert taps.sum() == pytest.approx(1.0, abs=1e-6)
        np.testing.assert_allclose(taps, taps[::-1])

    def test_rejects_bad_sigma(self, random_image):
        with pytest.raises(ValueError):
            gaussian_blur(random_image, 0.0)
        with pytest.raises(ValueError):
            gaussian_blur(random_image, -1.0)


class TestDownsample:
    def test_factor_two_decimation(self):
        img = np.arange(16, dtype=float).reshape(4, 4)
        out = downsample(img, 2)
        np.testing.assert_array_equal(out, [[img[0, 0], img[0, 2]], [img[2, 0], img[2, 2]]])

    def test_factor_one_identity(self, random_image):
        np.testing.assert_array_equal(downsample(random_image, 1), random_image)

    def test_floor_semantics(self):
        assert downsample(np.zeros((5, 5)), 2).shape == (2, 2)

    def test_rejects_bad_factor(self, random_image):
        with pytest.raises(ValueError):
            downsample(random_image, 0)


class TestBicubicUpsample:
    def test_constant_preserved(self):
        img = np.full((8, 8), 0.37)
        np.testing.assert_allclose(bicubic_upsample(img, 3), 0.37, atol=1e-12)

    def test_factor_one_identity(self, random_image):
        np.testing.assert_allclose(bicubic_upsample(random_image, 1), random_image, atol=1e-12)

    def test_linear_ramp_preserved_in_interior(self):
        # bicubic reproduces linear functions exactly away from clamped borders
        h = w = 16
        ramp = (np.arange(w, dtype=float)[None, :] + 2.0 * np.arange(h, dtype=float)[:, None]) / 64.0
        up = bicubic_upsample(ramp, 2, clamp=False)
        expected = (
            (np.arange(2 * w) + 0.5) / 2.0 - 0.5 + 2.0 * ((np.arange(2 * h) + 0.5) / 2.0 - 0.5)[:, None]
        ) / 64.0
        np.testing.assert_allclose(up[4:-4, 4:-4], expected[4:-4, 4:-4], atol=1e-3)

    def test_clamped_to_unit_range(self, rng):
        img = rng.random((10, 10))
        out = bicubic_upsample(img, 2)
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_anisotropic_dims(self, random_image):
        out = bicubic_stretch(random_image, 1, 2)
        assert out.shape == (random_image.shape[0], random_image.shape[1] * 2)

    def test_rejects_bad_factor(self, random_image):
        with pytest.raises(ValueError):
            bicubic_upsample(random_image, 0)

    def test_blur_down_up_roundtrip_constant(self):
        img = np.full((20, 20), 0.61)
        out = bicubic_upsample(downsample(gaussian_blur(img, 1.0), 2), 2)
        np.testing.assert_allclose(out, 0.61, atol=1e-6)


class TestExtractPatches:
    def test_exact_grid(self):
        grid = extract_patches(np.zeros((13, 13)), 5, 1)
        assert (grid.rows, grid.cols) == (3, 3)
        assert grid.patches.shape == (9, 5, 5)
        np.testing.assert_array_equal(grid.anchors_y, [0, 4, 8])

    def test_single_patch(self):
        for overlap in (0, 2, 4):
            grid = extract_patches(np.zeros((5, 5)), 5, overlap)
            assert grid.patches.shape == (1, 5, 5)

    def test_flush_final_anchor(self):
        grid = extract_patches(np.zeros((12, 12)), 5, 1)
        np.testing.assert_array_equal(grid.anchors_y, [0, 4, 7])
        np.testing.assert_array_equal(grid.anchors_x, [0, 4, 7])

    def test_row_principle_order_and_content(self):
        img = np.arange(13 * 13, dtype=float).reshape(13, 13)
        grid = extract_patches(img, 5, 1)
        k = 0
        for y in grid.anchors_y:
            for x in grid.anchors_x:
                np.testing.assert_array_equal(grid.patches[k], img[y : y + 5, x : x + 5])
                k += 1

    def test_full_coverage_random_geometries(self, rng):
        for _ in range(50):
            p = int(rng.integers(2, 9))
            overlap = int(rng.integers(0, p))
            h = int(rng.integers(p, 40))
            w = int(rng.integers(p, 40))
            grid = extract_patches(np.zeros((h, w)), p, overlap)
            covered = np.zeros((h, w), dtype=bool)
            for y in grid.anchors_y:
                for x in grid.anchors_x:
                    covered[y : y + p, x : x + p] = True
            assert covered.all()

    def test_rejects_small_image(self):
        with pytest.raises(ValueError):
            extract_patches(np.zeros((4, 9)), 5, 1)
        with pytest.raises(ValueError):
            extract_patches(np.zeros((9, 9)), 5, 5)


class TestGradientFeatures:
    def test_constant_patch_zero(self):
        feats = gradient_features(np.full((5, 5), 0.8), "both")
        np.testing.assert_allclose(feats, 0.0, atol=1e-12)
        assert feats.shape == (100,)

    def test_ramp_first_order(self):
        # oracle: apply the [-1, 0, 1] stencil with edge replication by hand
        step = 0.1
        patch = step * np.tile(np.arange(5.0), (5, 1))
        feats = gradient_features(patch, "first").reshape(2, 5, 5)
        gx, gy = feats[0], feats[1]
        expected_row = step * np.array([1.0, 2.0, 2.0, 2.0, 1.0])  # borders replicate
        np.testing.assert_allclose(gx, np.tile(expected_row, (5, 1)), atol=1e-12)
        np.testing.assert_allclose(gy, 0.0, atol=1e-12)

    def test_dimension(self):
        assert feature_dim(5, "both") == 100
        assert gradient_features(np.zeros((5, 5)), "both").shape == (100,)
        assert gradient_features(np.zeros((5, 5)), "first").shape == (50,)
        assert gradient_features(np.zeros((7, 7)), "second").shape == (98,)

    def test_linearity(self, rng):
        a = rng.random((5, 5))
        b = rng.random((5, 5))
        for alpha, beta in [(2.0, -1.5), (0.3, 0.7)]:
            lhs = gradient_features(alpha * a + beta * b, "both")
            rhs = alpha * gradient_features(a, "both") + beta * gradient_features(b, "both")
            np.testing.assert_allclose(lhs, rhs, atol=1e-6)

    def test_batch_matches_single(self, rng):
        stack = rng.random((7, 5, 5))
        batch = gradient_features(stack, "both")
        for i in range(7):
            np.testing.assert_array_equal(batch[i], gradient_features(stack[i], "both"))

    def test_second_order_needs_5x5(self):
        with pytest.raises(ValueError):
            gradient_features(np.zeros((4, 4)), "both")
        gradient_features(np.zeros((4, 4)), "first")  # fine


class TestIntegralImage:
    def test_constant_window(self):
        ii = integral_image(np.full((9, 9), 0.3))
        assert box_mean(ii, 4, 4, 2) == pytest.approx(0.3)
        assert box_mean(ii, 0, 0, 3) == pytest.approx(0.3)

    def test_matches_brute_force_oracle(self, rng):
        img = rng.random((23, 31))
        ii = integral_image(img)
        for _ in range(1000):
            cy = int(rng.integers(0, 23))
            cx = int(rng.integers(0, 31))
            radius = int(rng.integers(1, 8))
            expected = brute_box_mean(img, cy, cx, radius)
            assert box_mean(ii, cy, cx, radius) == pytest.approx(expected, rel=1e-4)

    def test_corner_clipping(self, rng):
        img = rng.random((12, 12))
        ii = integral_image(img)
        assert box_mean(ii, 0, 0, 2) == pytest.approx(img[:3, :3].mean())

    def test_full_image_means(self, rng):
        img = rng.random((17, 13))
        ii = integral_image(img)
        means = box_mean_image(ii, 3)
        for cy in range(17):
            for cx in range(13):
                assert means[cy, cx] == pytest.approx(box_mean(ii, cy, cx, 3))


class TestMetrics:
    def test_identical_images(self, random_image):
        assert mse(random_image, random_image) == 0.0
        assert psnr(random_image, random_image) == float("inf")

    def test_constant_offset(self):
        a = np.full((10, 10), 0.5)
        assert mse(a, a + 0.1) == pytest.approx(0.01)
        assert psnr(a, a + 0.1) == pytest.approx(20.0)

    def test_matches_brute_force(self, rng):
        a, b = rng.random((9, 14)), rng.random((9, 14))
        total = 0.0
        for y in range(9):
            for x in range(14):
                total += (a[y, x] - b[y, x]) ** 2
        assert mse(a, b) == pytest.approx(total / (9 * 14))

    def test_rejects_mismatched_dims(self):
        with pytest.raises(ValueError):
            mse(np.zeros((3, 3)), np.zeros((3, 4)))


class TestPngIo:
    def test_gray_roundtrip(self, tmp_path, rng):
        img = np.round(rng.random((14, 19)) * 255) / 255
        path = tmp_path / "gray.png"
        save_image(path, img)
        np.testing.assert_allclose(load_image(path), img, atol=1e-9)

    def test_rgb_roundtrip_and_luma(self, tmp_path, rng):
        rgb = np.round(rng.random((8, 8, 3)) * 255) / 255
        path = tmp_path / "color.png"
        save_rgb(path, rgb)
        np.testing.assert_allclose(load_rgb(path), rgb, atol=1e-9)
        luma = load_image(path)
        np.testing.assert_allclose(luma, rgb @ np.array([0.299, 0.587, 0.114]), atol=1e-9)

    def test_save_clamps(self, tmp_path):
        path = tmp_path / "clamp.png"
        save_image(path, np.array([[-0.5, 1.5]]))
        np.testing.assert_array_equal(load_image(path), [[0.0, 1.0]])

    def test_ycbcr_roundtrip(self, rng):
        rgb = rng.random((6, 6, 3))
        back = ycbcr_to_rgb(*rgb_to_ycbcr(rgb))
        np.testing.assert_allclose(back, rgb, atol=1e-10)
