"""Denoiser mocks: identity, constant, analytic target, and scheduler."""

import numpy as np
import pytest

from panosphere.denoise import (
    AnalyticDenoiser,
    ConstantDenoiser,
    DenoiseRequest,
    IdentityDenoiser,
    SchedulerDenoiser,
    default_target,
    denoise,
)


def make_request(h=3, w=3, c=4, t=5, total=10, seed=0, prompt="p"):
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((h, w, 3))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    return DenoiseRequest(
        features=rng.standard_normal((h, w, c)),
        coords=rng.uniform(-1, 1, size=(h, w, 2)),
        directions=dirs,
        t=t,
        total=total,
        prompt=prompt,
    )


class TestRequestValidation:
    def test_timestep_bounds(self):
        make_request(t=1, total=1)
        make_request(t=10, total=10)
        for t, total in [(0, 10), (11, 10), (-1, 5)]:
            with pytest.raises(ValueError):
                make_request(t=t, total=total)

    def test_shape_mismatches(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            DenoiseRequest(
                features=rng.standard_normal((3, 3, 2)),
                coords=np.zeros((3, 2, 2)),
                directions=np.zeros((3, 3, 3)),
                t=1,
                total=1,
            )
        with pytest.raises(ValueError):
            DenoiseRequest(
                features=rng.standard_normal((3, 3, 2)),
                coords=np.zeros((3, 3, 2)),
                directions=np.zeros((3, 3, 2)),
                t=1,
                total=1,
            )

    def test_shape_property(self):
        assert make_request(h=2, w=5, c=3).shape == (2, 5, 3)


class TestDefaultTarget:
    def test_three_channels_is_direction(self):
        req = make_request(c=3)
        assert np.array_equal(default_target(req.directions, "", 3), req.directions)

    def test_extra_channels_zero_padded(self):
        req = make_request(c=5)
        g = default_target(req.directions, "", 5)
        assert np.array_equal(g[..., :3], req.directions)
        assert np.all(g[..., 3:] == 0.0)

    def test_fewer_channels_truncate(self):
        req = make_request(c=2)
        g = default_target(req.directions, "", 2)
        assert np.array_equal(g, req.directions[..., :2])


class TestMocks:
    def test_identity_returns_input_exactly(self):
        req = make_request()
        out = denoise(IdentityDenoiser(), req)
        assert np.array_equal(out, req.features)
        assert out is not req.features  # a copy, not the same buffer

    def test_constant_scalar(self):
        out = denoise(ConstantDenoiser(0.25), make_request(c=4))
        assert out.shape == (3, 3, 4) and np.all(out == 0.25)

    def test_constant_per_channel(self):
        out = denoise(ConstantDenoiser([1.0, 2.0, 3.0, 4.0]), make_request(c=4))
        assert np.array_equal(out[1, 2], [1.0, 2.0, 3.0, 4.0])

    def test_constant_channel_mismatch(self):
        with pytest.raises(ValueError):
            denoise(ConstantDenoiser([1.0, 2.0]), make_request(c=4))

    def test_analytic_hits_target_any_timestep(self):
        for t in (1, 5, 10):
            req = make_request(t=t)
            want = default_target(req.directions, req.prompt, 4)
            assert np.array_equal(denoise(AnalyticDenoiser(), req), want)

    def test_analytic_custom_target_sees_prompt(self):
        seen = []

        def g(directions, prompt):
            seen.append(prompt)
            return np.full(directions.shape[:-1] + (4,), 2.0)

        out = denoise(AnalyticDenoiser(g), make_request(prompt="marker"))
        assert np.all(out == 2.0) and seen == ["marker"]

    def test_noise_magnitude_is_linear(self):
        for handle in (IdentityDenoiser(), ConstantDenoiser(0.0),
                       AnalyticDenoiser(), SchedulerDenoiser()):
            assert handle.noise_magnitude(10, 10) == 1.0
            assert handle.noise_magnitude(5, 10) == 0.5
            assert handle.noise_magnitude(1, 10) == 0.1


class TestScheduler:
    def test_single_step_formula(self):
        req = make_request(t=4)
        g = default_target(req.directions, req.prompt, 4)
        want = req.features + (g - req.features) / 4.0
        assert np.array_equal(denoise(SchedulerDenoiser(), req), want)

    def test_final_step_returns_target_bit_exact(self):
        req = make_request(t=1, total=10)
        g = default_target(req.directions, req.prompt, 4)
        out = denoise(SchedulerDenoiser(), req)
        assert np.array_equal(out, g)

    def test_full_run_matches_closed_form(self):
        # after steps t = T..k the residual scales by prod(1 - 1/j, j=k..T)
        req = make_request(t=10, total=10)
        g = default_target(req.directions, req.prompt, 4)
        handle = SchedulerDenoiser()
        f = req.features.copy()
        factor = 1.0
        for t in range(10, 0, -1):
            step = DenoiseRequest(
                features=f, coords=req.coords, directions=req.directions,
                t=t, total=10, prompt=req.prompt,
            )
            f = denoise(handle, step)
            factor *= 1.0 - 1.0 / t
            want = g + (req.features - g) * factor
            assert np.max(np.abs(f - want)) < 1e-12
        assert np.array_equal(f, g)  # the t=1 shortcut makes this exact


class TestWrapperValidation:
    def test_rejects_wrong_output_shape(self):
        class Bad:
            kind = "bad"

            def denoise(self, req):
                return np.zeros((1, 1, 1))

            def noise_magnitude(self, t, total):
                return t / total

        with pytest.raises(ValueError):
            denoise(Bad(), make_request())
