import numpy as np
import pytest

from mcfse.baselines import NoReferenceError, dmve_conceal, ebma_conceal, tr_conceal
from mcfse.error_model import LossBlock
from mcfse.motion import EmptyAreaError, decision_area, estimate_motion, upsample_plane
from mcfse.sequence_io import VideoSequence


def frames_with_hole(frames, block):
    valid = np.ones(frames.shape, bool)
    valid[block.frame, block.y0 : block.y0 + block.Ly, block.x0 : block.x0 + block.Lx] = False
    return valid


def test_tr_copies_previous_frame():
    luma = np.stack([np.full((48, 48), 10), np.full((48, 48), 200)]).astype(np.uint8)
    out = tr_conceal(VideoSequence(luma), LossBlock(16, 16, 16, 16, 1))
    assert (out.samples == 10).all()
    assert out.samples.shape == (16, 16)


def test_tr_clipped_block():
    rng = np.random.default_rng(0)
    luma = rng.integers(0, 256, (2, 56, 72), dtype=np.uint8)
    out = tr_conceal(VideoSequence(luma), LossBlock(64, 48, 8, 8, 1))
    np.testing.assert_array_equal(out.samples, luma[0, 48:56, 64:72])


def test_tr_needs_previous_frame():
    with pytest.raises(NoReferenceError):
        tr_conceal(np.zeros((1, 48, 48)), LossBlock(0, 0, 16, 16, 0))


@pytest.mark.parametrize("D", [1, 2, 4])
def test_static_content_all_baselines_exact(D):
    rng = np.random.default_rng(1)
    still = rng.integers(0, 256, (64, 64)).astype(float)
    frames = np.stack([still, still])
    block = LossBlock(24, 24, 16, 16, 1)
    valid = frames_with_hole(frames, block)
    damaged = frames.copy()
    damaged[1][~valid[1]] = 128
    refs = {-1: upsample_plane(still, D)}
    truth = still[24:40, 24:40]
    tr = tr_conceal(damaged, block).samples
    dmve = dmve_conceal(damaged, refs, block, d_max=4, valid=valid)
    ebma = ebma_conceal(damaged, refs, block, d_max=4, valid=valid)
    for s in (tr, dmve.samples, ebma.samples):
        np.testing.assert_array_equal(s, truth)
    assert (dmve.dx, dmve.dy, dmve.error) == (0, 0, 0.0)


def test_integer_shift_copy_is_exact():
    rng = np.random.default_rng(2)
    cur = rng.integers(0, 256, (96, 96)).astype(float)
    ref = np.roll(cur, (1, -2), axis=(0, 1))
    block = LossBlock(40, 40, 16, 16, 1)
    frames = np.stack([ref, cur])
    valid = frames_with_hole(frames, block)
    out = dmve_conceal(frames, {-1: upsample_plane(ref, 4)}, block, d_max=4, valid=valid)
    assert (out.dx, out.dy) == (-8, 4)
    np.testing.assert_array_equal(out.samples, cur[40:56, 40:56])


def test_dmve_vector_matches_estimate():
    rng = np.random.default_rng(3)
    frames = rng.integers(0, 256, (2, 64, 64)).astype(float)
    block = LossBlock(16, 32, 16, 16, 1)
    valid = frames_with_hole(frames, block)
    up = upsample_plane(frames[0], 2)
    out = dmve_conceal(frames, {-1: up}, block, d_max=3, valid=valid, border=4)
    est = estimate_motion(frames[1], up, decision_area(valid[1], block, 4), 3)
    assert (out.dx, out.dy, out.error) == (est.dx, est.dy, est.error)
    # copied block sits at the displaced position on the upsampled grid
    expected = up.sample_grid(2 * 32 + est.dy, 2 * 16 + est.dx, 16, 16)
    np.testing.assert_array_equal(out.samples, np.clip(np.round(expected), 0, 255))


def test_bidirectional_picks_lower_error():
    rng = np.random.default_rng(4)
    cur = rng.integers(0, 256, (64, 64)).astype(float)
    frames = np.stack([rng.integers(0, 256, (64, 64)).astype(float), cur, cur])
    block = LossBlock(24, 24, 16, 16, 1)
    valid = frames_with_hole(frames, block)
    refs = {-1: upsample_plane(frames[0], 1), 1: upsample_plane(frames[2], 1)}
    out = dmve_conceal(frames, refs, block, d_max=2, valid=valid, bidirectional=True)
    assert out.kappa == 1 and out.error == 0.0
    uni = dmve_conceal(frames, refs, block, d_max=2, valid=valid)
    assert uni.kappa == -1


def test_ebma_without_boundary_raises():
    frames = np.zeros((2, 48, 48))
    valid = np.ones(frames.shape, bool)
    valid[1] = False
    with pytest.raises(EmptyAreaError):
        ebma_conceal(frames, {-1: upsample_plane(frames[0], 1)}, LossBlock(16, 16, 16, 16, 1), valid=valid)


def test_missing_reference_raises():
    frames = np.zeros((2, 48, 48))
    with pytest.raises(NoReferenceError):
        dmve_conceal(frames, {1: upsample_plane(frames[0], 1)}, LossBlock(16, 16, 16, 16, 1))
