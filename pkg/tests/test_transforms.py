import math

import numpy as np
import pytest

from semcert.tensor import ImageTensor, l2_distance
from semcert.transforms import (additive_pixel_transform, apply_transform, blur_many,
                                brightness_contrast, center_coords, gaussian_blur,
                                rotate, rotate_many, scale, scale_many, transform_spec,
                                translate)


class TestTransformSpecs:
    def test_param_dims(self):
        assert transform_spec("brightness_contrast").param_dim == 2
        assert transform_spec("translation_reflect").param_dim == 2
        assert transform_spec("translation_black").param_dim == 2
        for kind in ("gaussian_blur", "rotation", "scaling"):
            assert transform_spec(kind).param_dim == 1

    def test_reversibility_flags(self):
        for kind in ("brightness_contrast", "translation_reflect", "translation_black"):
            assert transform_spec(kind).reversible
        for kind in ("gaussian_blur", "rotation", "scaling"):
            assert not transform_spec(kind).reversible

    def test_additive_pixel(self, image_9x9):
        t = additive_pixel_transform(image_9x9.shape)
        assert t.param_dim == 81 and t.reversible
        delta = np.full(81, 0.01)
        out = t.apply(image_9x9, delta)
        np.testing.assert_allclose(out.data, image_9x9.data + 0.01)

    def test_unknown_kind(self, image_9x9):
        with pytest.raises(ValueError):
            transform_spec("shear")
        with pytest.raises(ValueError):
            apply_transform("shear", image_9x9, [0.1])


class TestGaussianBlur:
    def test_zero_is_identity(self, image_9x9):
        assert gaussian_blur(image_9x9, 0.0) is image_9x9

    def test_constant_preserved(self):
        c = ImageTensor(np.full((1, 8, 8), 0.37))
        out = gaussian_blur(c, 6.5)
        np.testing.assert_allclose(out.data, 0.37, atol=1e-12)

    def test_additivity(self):
        # sequential blurs match the combined blur up to kernel truncation
        gen = np.random.default_rng(99)
        for trial in range(50):
            x = ImageTensor(gen.random((1, 16, 16)))
            for a, b in ((1, 1), (2, 3), (4, 4)):
                lhs = gaussian_blur(gaussian_blur(x, a), b)
                rhs = gaussian_blur(x, a + b)
                assert np.max(np.abs(lhs.data - rhs.data)) <= 1e-3

    def test_negative_alpha_rejected(self, image_9x9):
        with pytest.raises(ValueError):
            gaussian_blur(image_9x9, -0.1)

    def test_mean_preserved(self, image_9x9):
        # unit-sum kernel on the periodic canvas keeps the mean exactly
        out = gaussian_blur(image_9x9, 7.3)
        assert np.mean(out.data) == pytest.approx(np.mean(image_9x9.data), abs=1e-12)

    def test_batch_matches_single(self, image_9x9, rng):
        alphas = rng.exponential(5.0, 20)
        batch = blur_many(image_9x9, alphas)
        for idx, a in enumerate(alphas):
            np.testing.assert_allclose(batch[idx], gaussian_blur(image_9x9, a).data,
                                       atol=1e-12)


class TestBrightnessContrast:
    def test_identity(self, image_9x9):
        assert brightness_contrast(image_9x9, 0.0, 0.0) is image_9x9

    def test_single_pixel(self):
        x = ImageTensor(np.full((1, 1, 1), 0.5))
        out = brightness_contrast(x, math.log(2.0), 0.1)
        assert out.data[0, 0, 0] == pytest.approx(1.2, abs=1e-15)
        assert not out.normalized

    def test_brightness_alone_additive(self, image_9x9):
        lhs = brightness_contrast(brightness_contrast(image_9x9, 0.0, 0.07), 0.0, 0.21)
        rhs = brightness_contrast(image_9x9, 0.0, 0.28)
        np.testing.assert_allclose(lhs.data, rhs.data, atol=1e-15)

    def test_resolving_identity(self, rng):
        # composing (k1,b1) then (k2,b2) equals (k1+k2, b1 + e^{-k1} b2)
        x = ImageTensor(rng.random((1, 6, 6)))
        k1, b1, k2, b2 = 0.3, 0.12, -0.45, -0.05
        lhs = brightness_contrast(brightness_contrast(x, k1, b1), k2, b2)
        rhs = brightness_contrast(x, k1 + k2, b1 + math.exp(-k1) * b2)
        np.testing.assert_allclose(lhs.data, rhs.data, atol=1e-15)


class TestTranslate:
    def test_subhalf_rounds_to_identity(self, image_9x9):
        assert translate(image_9x9, 0.4, -0.4) is image_9x9

    def test_black_full_displacement(self, rng):
        x = ImageTensor(rng.random((1, 6, 6)))
        out = translate(x, 6, 0, "black")
        assert np.all(out.data == 0.0)

    def test_black_partial_shift(self, rng):
        x = ImageTensor(rng.random((1, 5, 5)))
        out = translate(x, 2, -1, "black")
        np.testing.assert_array_equal(out.data[:, 2:, :4], x.data[:, :3, 1:])
        assert np.all(out.data[:, :2, :] == 0.0)
        assert np.all(out.data[:, :, 4:] == 0.0)

    def test_reflect_integer_shifts_additive(self, rng):
        x = ImageTensor(rng.random((1, 7, 7)))
        for a1, a2, b1, b2 in [(3, -2, -5, 4), (1, 1, 1, 1), (6, 0, 3, -2)]:
            lhs = translate(translate(x, a1, b1, "reflect"), a2, b2, "reflect")
            rhs = translate(x, a1 + a2, b1 + b2, "reflect")
            np.testing.assert_array_equal(lhs.data, rhs.data)

    def test_reflect_preserves_value_multiset(self, rng):
        x = ImageTensor(rng.random((1, 8, 8)))
        out = translate(x, 3, 5, "reflect")
        np.testing.assert_array_equal(np.sort(out.data.ravel()),
                                      np.sort(x.data.ravel()))

    def test_unknown_padding(self, image_9x9):
        with pytest.raises(ValueError):
            translate(image_9x9, 1, 0, "wrap-around")


def _disk_mask(width, height):
    c_w, c_h = center_coords(width, height)
    ii, jj = np.meshgrid(np.arange(width), np.arange(height), indexing="ij")
    return np.sqrt((ii - c_w) ** 2 + (jj - c_h) ** 2) < min(c_w, c_h)


class TestRotate:
    def test_zero_angle(self, image_9x9):
        out = rotate(image_9x9, 0.0)
        mask = _disk_mask(9, 9)
        np.testing.assert_allclose(out.data[0][mask], image_9x9.data[0][mask],
                                   atol=1e-12)
        assert np.all(out.data[0][~mask] == 0.0)

    def test_rotationally_symmetric_image_unchanged(self):
        # a constant image is the rotation-invariant case that survives
        # bilinear resampling exactly: every angle yields the same output
        x = ImageTensor(np.full((1, 9, 9), 0.61))
        base = rotate(x, 0.0)
        for angle in (0.3, -1.2, 2.9):
            np.testing.assert_allclose(rotate(x, angle).data, base.data, atol=1e-9)

    def test_disk_padding_always_zero(self, image_9x9, rng):
        mask = _disk_mask(9, 9)
        for angle in rng.uniform(-math.pi, math.pi, 10):
            out = rotate(image_9x9, angle)
            assert np.all(out.data[0][~mask] == 0.0)

    def test_back_rotation_deviation_reported(self, image_9x9):
        # interpolation aliasing: returning is only approximate; the
        # deviation is recorded, not asserted against a tolerance
        back = rotate(rotate(image_9x9, 0.4), -0.4)
        dev = l2_distance(back, rotate(image_9x9, 0.0))
        assert math.isfinite(dev) and dev >= 0.0

    def test_batch_matches_single(self, image_9x9, rng):
        angles = rng.uniform(-1, 1, 8)
        batch = rotate_many(image_9x9, angles)
        for idx, a in enumerate(angles):
            np.testing.assert_array_equal(batch[idx], rotate(image_9x9, a).data)


class TestScale:
    def test_identity(self, image_9x9):
        np.testing.assert_allclose(scale(image_9x9, 1.0).data, image_9x9.data,
                                   atol=1e-12)

    def test_constant_upscale(self):
        c = ImageTensor(np.full((1, 5, 5), 0.6))
        np.testing.assert_allclose(scale(c, 1.7).data, 0.6, atol=1e-15)

    def test_downscale_black_pads_corners(self, rng):
        x = ImageTensor(rng.random((1, 4, 4)))
        out = scale(x, 0.5)
        for i, j in [(0, 0), (0, 3), (3, 0), (3, 3)]:
            assert out.data[0, i, j] == 0.0

    def test_nonpositive_factor_rejected(self, image_9x9):
        with pytest.raises(ValueError):
            scale(image_9x9, 0.0)
        with pytest.raises(ValueError):
            scale(image_9x9, -1.0)

    def test_batch_matches_single(self, image_9x9, rng):
        factors = rng.uniform(0.6, 1.6, 8)
        batch = scale_many(image_9x9, factors)
        for idx, s in enumerate(factors):
            np.testing.assert_array_equal(batch[idx], scale(image_9x9, s).data)
