import numpy as np
import pytest
from scipy.special import i0

from bmstream import (
    AggregationBuffers,
    Bm3dParams,
    ImagePlane,
    MatchParams,
    MatchTable,
    PatchStack,
    collaborative_hard,
    collaborative_wiener,
    find_matches_block,
    find_matches_stream,
    overlap_region,
    transform_3d_forward,
    transform_3d_inverse,
)
from bmstream.bm3d import (
    aggregate,
    denoise,
    finalize,
    hard_step,
    kaiser_window,
    run_pipeline,
    wiener_gains,
    wiener_step,
)
from bmstream.geometry import snapped_grid
from bmstream.match_oracle import MatchEntry

from conftest import random_plane


def random_stack(rng, depth, k):
    return PatchStack(
        rng.uniform(0, 255, size=(depth, k, k)),
        [(int(i), 0) for i in range(depth)],
    )


def self_only_table(height, width, k, stride):
    params = MatchParams(block_size=k, window_size=2 * k, max_matches=1, stride=stride)
    table = MatchTable(width=width, height=height, params=params)
    for r in snapped_grid(0, height - k, stride):
        for c in snapped_grid(0, width - k, stride):
            table.entries[(r, c)] = [MatchEntry(0, 0, 0.0)]
    return table


class TestTransforms:
    def test_constant_patch_dc_only(self):
        v, k = 13.0, 8
        stack = PatchStack(np.full((1, k, k), v), [(0, 0)])
        coeffs = transform_3d_forward(stack)
        assert coeffs[0, 0, 0] == pytest.approx(k * v, rel=1e-12)
        rest = coeffs.copy()
        rest[0, 0, 0] = 0.0
        assert np.abs(rest).max() < 1e-9

    @pytest.mark.parametrize("depth", [1, 2, 4, 8])
    def test_round_trip(self, rng, depth):
        stack = random_stack(rng, depth, 8)
        back = transform_3d_inverse(transform_3d_forward(stack))
        assert np.abs(back - stack.patches).max() < 1e-9

    @pytest.mark.parametrize("depth", [1, 2, 4, 8])
    def test_isometry(self, rng, depth):
        stack = random_stack(rng, depth, 6)
        energy_in = float(np.sum(stack.patches**2))
        energy_out = float(np.sum(transform_3d_forward(stack) ** 2))
        assert abs(energy_out - energy_in) < 1e-9 * energy_in

    def test_constant_stack_energy_in_layer_zero_exactly(self, rng):
        patch = rng.uniform(0, 255, size=(4, 4))
        for depth in (2, 4, 8):
            stack = PatchStack(np.repeat(patch[None], depth, axis=0), [(i, 0) for i in range(depth)])
            coeffs = transform_3d_forward(stack)
            assert np.all(coeffs[1:] == 0.0)  # butterfly cancellation is exact


class TestCollaborativeHard:
    def test_lambda_zero_is_identity(self, rng):
        stack = random_stack(rng, 4, 6)
        filtered, w = collaborative_hard(stack, 0.0, 20.0)
        assert np.abs(filtered.patches - stack.patches).max() < 1e-9
        coeffs = transform_3d_forward(stack)
        assert w == pytest.approx(1.0 / np.count_nonzero(coeffs))

    def test_everything_shrunk(self, rng):
        stack = random_stack(rng, 2, 4)
        max_coef = np.abs(transform_3d_forward(stack)).max()
        filtered, w = collaborative_hard(stack, 2.0, max_coef)
        assert np.all(filtered.patches == 0.0)
        assert w == 1.0

    def test_identical_patches_concentrate_in_layer_zero(self, rng):
        patch = rng.uniform(50, 200, size=(4, 4))
        stack = PatchStack(np.repeat(patch[None], 4, axis=0), [(i, 0) for i in range(4)])
        coeffs = transform_3d_forward(stack)
        assert np.all(coeffs[1:] == 0.0)
        # those exact zeros pass thresholding as zeros; the content survives
        filtered, _ = collaborative_hard(stack, 2.7, 1e-6)
        assert np.abs(transform_3d_forward(filtered)[1:]).max() < 1e-9
        assert np.abs(filtered.patches - stack.patches).max() < 1e-4

    def test_shrinkage_monotone_in_lambda(self, rng):
        stack = random_stack(rng, 4, 5)
        counts = []
        for lam in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0):
            coeffs = transform_3d_forward(stack)
            thr = lam * 30.0
            counts.append(int(np.count_nonzero(np.abs(coeffs) > thr)))
        assert counts == sorted(counts, reverse=True)


class TestCollaborativeWiener:
    def test_sigma_zero_identity(self, rng):
        noisy = random_stack(rng, 4, 5)
        basic = random_stack(rng, 4, 5)
        filtered, w = collaborative_wiener(noisy, basic, 0.0)
        assert np.abs(filtered.patches - noisy.patches).max() < 1e-9
        assert w == pytest.approx(1.0 / noisy.patches.size)

    def test_zero_basic_stack(self, rng):
        noisy = random_stack(rng, 2, 4)
        basic = PatchStack(np.zeros((2, 4, 4)), noisy.positions)
        filtered, w = collaborative_wiener(noisy, basic, 20.0)
        assert np.abs(filtered.patches).max() < 1e-12
        assert w == 1.0

    def test_gain_bounds(self, rng):
        coeffs = rng.normal(0, 50, size=(4, 6, 6))
        g = wiener_gains(coeffs, 20.0)
        assert np.all(g >= 0.0) and np.all(g < 1.0)
        # gains approach one as sigma vanishes
        g_small = wiener_gains(coeffs, 1e-9)
        assert np.all(g_small > 0.999)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError, match="mismatch"):
            collaborative_wiener(random_stack(rng, 2, 4), random_stack(rng, 4, 4), 1.0)


class TestAggregate:
    def test_single_layer_footprint(self):
        buf = AggregationBuffers.zeros(10, 10)
        stack = PatchStack(np.full((1, 3, 3), 5.0), [(2, 4)])
        aggregate(buf, stack, 1.0, np.ones((3, 3)))
        assert np.all(buf.nu[2:5, 4:7] == 5.0)
        assert np.all(buf.delta[2:5, 4:7] == 1.0)
        assert buf.delta.sum() == 9.0

    def test_overlap_adds(self):
        buf = AggregationBuffers.zeros(8, 8)
        stack = PatchStack(np.ones((2, 3, 3)), [(0, 0), (1, 1)])
        aggregate(buf, stack, 2.0, np.ones((3, 3)))
        assert buf.delta[1, 1] == 4.0  # both layers cover (1, 1)
        assert buf.delta[0, 0] == 2.0

    def test_commutes(self, rng):
        a = PatchStack(rng.uniform(0, 9, size=(1, 3, 3)), [(0, 0)])
        b = PatchStack(rng.uniform(0, 9, size=(1, 3, 3)), [(1, 2)])
        kai = kaiser_window(3, 2.0)
        buf1 = AggregationBuffers.zeros(6, 6)
        aggregate(buf1, a, 0.7, kai)
        aggregate(buf1, b, 1.3, kai)
        buf2 = AggregationBuffers.zeros(6, 6)
        aggregate(buf2, b, 1.3, kai)
        aggregate(buf2, a, 0.7, kai)
        assert np.array_equal(buf1.nu, buf2.nu)
        assert np.array_equal(buf1.delta, buf2.delta)

    def test_position_out_of_frame(self):
        buf = AggregationBuffers.zeros(4, 4)
        stack = PatchStack(np.ones((1, 3, 3)), [(2, 2)])
        with pytest.raises(ValueError, match="out of frame"):
            aggregate(buf, stack, 1.0, np.ones((3, 3)))

    def test_kaiser_shape(self):
        k, beta = 8, 2.0
        win = kaiser_window(k, beta)
        assert np.allclose(win, win.T)
        assert np.allclose(win, win[::-1, ::-1])
        assert win.max() == win[3, 3] or win.max() == win[4, 4]
        # closed form of the one-dimensional window at the corner sample
        half = (k - 1) / 2.0
        edge = i0(beta * np.sqrt(1 - ((0 - half) / half) ** 2)) / i0(beta)
        assert win[0, 0] == pytest.approx(edge * edge, rel=1e-12)


class TestFinalize:
    def test_ratio(self):
        buf = AggregationBuffers.zeros(4, 4)
        buf.delta += 3.0
        buf.nu += 6.0
        out = finalize(buf)
        assert np.all(out.pixels == 2.0)

    def test_uncovered_pixel_raises(self):
        buf = AggregationBuffers.zeros(4, 4)
        buf.delta[1:, 1:] = 1.0
        buf.nu[1:, 1:] = 5.0
        with pytest.raises(ValueError, match="uncovered"):
            finalize(buf)

    def test_fallback_fills_uncovered(self):
        buf = AggregationBuffers.zeros(2, 2)
        buf.delta[0, 0] = 2.0
        buf.nu[0, 0] = 8.0
        fb = ImagePlane(np.full((2, 2), 7.0))
        out = finalize(buf, fallback=fb)
        assert out.pixels[0, 0] == 4.0
        assert out.pixels[1, 1] == 7.0


class TestSteps:
    def test_hard_step_identity(self, rng):
        img = ImagePlane(rng.uniform(0, 255, size=(24, 24)))
        table = self_only_table(24, 24, 4, 3)
        params = Bm3dParams(hard=table.params, wien=table.params, sigma=0.0, lambda3d=0.0)
        out = hard_step(img, table, params)
        assert np.abs(out.pixels - img.pixels).max() < 1e-6

    def test_hard_step_constant_image(self):
        img = ImagePlane(np.full((20, 20), 77.0))
        p = MatchParams(block_size=4, window_size=8, max_matches=8, stride=3)
        table = find_matches_block(img, p)
        params = Bm3dParams(hard=p, wien=p, sigma=10.0)
        out = hard_step(img, table, params)
        assert np.abs(out.pixels - 77.0).max() < 1e-6

    def test_wiener_step_sigma_zero_identity(self, rng):
        noisy = ImagePlane(rng.uniform(0, 255, size=(24, 24)))
        basic = ImagePlane(rng.uniform(0, 255, size=(24, 24)))
        p = MatchParams(block_size=4, window_size=8, max_matches=4, stride=3)
        table = find_matches_block(basic, p)
        params = Bm3dParams(hard=p, wien=p, sigma=0.0)
        out = wiener_step(noisy, basic, table, params)
        assert np.abs(out.pixels - noisy.pixels).max() < 1e-6

    def test_table_dimension_check(self, rng):
        img = ImagePlane(rng.uniform(0, 255, size=(24, 24)))
        table = self_only_table(20, 20, 4, 3)
        params = Bm3dParams(hard=table.params, wien=table.params, sigma=0.0)
        with pytest.raises(ValueError, match="table built for"):
            hard_step(img, table, params)


class TestPipeline:
    def test_sigma_zero_near_identity(self, rng):
        img = ImagePlane(rng.uniform(0, 255, size=(40, 40)))
        p = MatchParams(block_size=4, window_size=8, max_matches=8, stride=3)
        params = Bm3dParams(hard=p, wien=p, sigma=0.0)
        out = denoise(img, params, matcher="oracle")
        assert np.abs(out.pixels - img.pixels).mean() < 1e-3

    def test_smoke_end_to_end(self, rng, astronaut_crop_256):
        from bmstream import add_wagn
        from bmstream.imaging import quantize_to_u8

        crop = ImagePlane(astronaut_crop_256.pixels[:64, :64])
        noisy = add_wagn(crop, 20.0, seed=2)
        p = MatchParams(block_size=8, window_size=16, max_matches=8, stride=4)
        params = Bm3dParams(hard=p, wien=p, sigma=20.0)
        basic, final = run_pipeline(noisy, params, matcher="oracle")
        assert np.isfinite(final.pixels).all()
        q = quantize_to_u8(final)
        assert q.min() >= 0 and q.max() <= 255

    def test_backend_tables_give_identical_outputs(self, rng):
        img = random_plane(rng, 36, 36)
        p = MatchParams(block_size=4, window_size=8, max_matches=8, stride=1)
        region = overlap_region(36, 36, 4, 4)
        t_oracle = find_matches_block(img, p, region=region)
        t_stream = find_matches_stream(img, p)
        assert t_oracle == t_stream
        params = Bm3dParams(hard=p, wien=p, sigma=15.0)
        out_o = hard_step(img, t_oracle, params, uncovered="copy_input")
        out_s = hard_step(img, t_stream, params, uncovered="copy_input")
        assert np.array_equal(out_o.pixels, out_s.pixels)

    def test_stream_matcher_full_pipeline(self, rng):
        img = ImagePlane(rng.uniform(0, 255, size=(40, 40)))
        noisy = ImagePlane(img.pixels + rng.normal(0, 10, size=(40, 40)))
        p = MatchParams(block_size=4, window_size=8, max_matches=8, stride=3)
        params = Bm3dParams(hard=p, wien=p, sigma=10.0)
        basic, final = run_pipeline(noisy, params, matcher="stream")
        assert final.pixels.shape == (40, 40)
        assert np.isfinite(final.pixels).all()

    def test_incompatible_table_rejected(self, rng):
        img = ImagePlane(rng.uniform(0, 255, size=(24, 24)))
        table = self_only_table(24, 24, 4, 3)
        p8 = MatchParams(block_size=8, window_size=16, max_matches=4, stride=3)
        params = Bm3dParams(hard=p8, wien=p8, sigma=5.0)
        with pytest.raises(ValueError, match="table incompatible"):
            run_pipeline(img, params, table1=table)

    def test_params_validation(self):
        p = MatchParams()
        with pytest.raises(ValueError):
            Bm3dParams(hard=p, wien=p, sigma=-1.0)
        with pytest.raises(ValueError):
            Bm3dParams(hard=p, wien=p, sigma=1.0, lambda3d=-0.1)
