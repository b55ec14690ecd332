import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcfse.error_model import (
    LossMask,
    apply_loss,
    chroma_mask,
    enumerate_blocks,
    generate_pattern,
    read_mask,
    write_mask,
)
from mcfse.sequence_io import SequenceError, VideoSequence


def lost_cells(valid_plane):
    """Macroblock cells containing at least one lost sample, by direct enumeration."""
    h, w = valid_plane.shape
    cells = set()
    for y in range(0, h, 16):
        for x in range(0, w, 16):
            if not valid_plane[y : y + 16, x : x + 16].all():
                cells.add((x // 16, y // 16))
    return cells


def test_dispersed_cif_block_count():
    mask = generate_pattern("DISPERSED", (352, 288), [0], toggle=[False])
    cells = lost_cells(mask.valid[0])
    assert len(cells) == 198
    # whole cells are lost
    assert (~mask.valid[0]).sum() == 198 * 256
    # alternate blocks: no two lost cells share an edge
    for cx, cy in cells:
        assert (cx + 1, cy) not in cells and (cx, cy + 1) not in cells


def test_dispersed_toggle_complements():
    on = generate_pattern("DISPERSED", (352, 288), [0], toggle=[True]).valid[0]
    off = generate_pattern("DISPERSED", (352, 288), [0], toggle=[False]).valid[0]
    assert not np.any(~on & ~off)
    assert np.all(~on | ~off)


def test_interleaved_cif_rows():
    mask = generate_pattern("INTERLEAVED", (352, 288), [0], toggle=[False])
    cells = lost_cells(mask.valid[0])
    assert sorted({cy for _, cy in cells}) == [0, 4, 8, 12, 16]
    seg = 22 // 2
    assert (~mask.valid[0]).sum() == 5 * 16 * (seg * 16)
    # anchors alternate between the left and right edge
    for j, row in enumerate([0, 4, 8, 12, 16]):
        xs = sorted(cx for cx, cy in cells if cy == row)
        assert xs == (list(range(seg)) if j % 2 == 0 else list(range(22 - seg, 22)))


def test_mixed_alternates_patterns():
    mask = generate_pattern("MIXED", (96, 96), [1, 2, 3], frame_count=4)
    assert mask.valid[0].all()
    dispersed = generate_pattern("DISPERSED", (96, 96), [1], toggle=[False], frame_count=4)
    interleaved = generate_pattern("INTERLEAVED", (96, 96), [2], toggle=[False], frame_count=4)
    np.testing.assert_array_equal(mask.valid[1], dispersed.valid[1])
    np.testing.assert_array_equal(mask.valid[2], interleaved.valid[2])


def test_frames_without_errors_are_all_received():
    mask = generate_pattern("DISPERSED", (64, 64), [2, 4], frame_count=6)
    for t in (0, 1, 3, 5):
        assert mask.valid[t].all()
    assert not mask.valid[2].all() and not mask.valid[4].all()


def test_small_frames_rejected():
    with pytest.raises(SequenceError):
        generate_pattern("DISPERSED", (31, 64), [0])


def test_unknown_pattern():
    with pytest.raises(ValueError):
        generate_pattern("RANDOM", (64, 64), [0])


def test_non_multiple_dims_are_cropped():
    mask = generate_pattern("DISPERSED", (72, 56), [0], toggle=[False])
    assert mask.shape == (1, 56, 72)
    assert not mask.valid[0, 0, 0]
    assert not mask.valid[0, 32, 64]  # clipped cell (4, 2) is lost
    assert mask.valid[0, 48, 64]  # clipped corner cell (4, 3) is received


@settings(max_examples=30, deadline=None)
@given(kind=st.sampled_from(["DISPERSED", "INTERLEAVED", "MIXED"]), w=st.integers(2, 8), h=st.integers(2, 8),
       toggles=st.lists(st.booleans(), min_size=1, max_size=4))
def test_pattern_properties(kind, w, h, toggles):
    dims = (16 * w, 16 * h)
    frames = list(range(len(toggles)))
    a = generate_pattern(kind, dims, frames, toggle=toggles)
    b = generate_pattern(kind, dims, frames, toggle=toggles)
    np.testing.assert_array_equal(a.valid, b.valid)
    # lost samples are a union of whole macroblocks
    for t in frames:
        cells = a.valid[t].reshape(h, 16, w, 16)
        per_cell = cells.all(axis=(1, 3))
        none_lost = cells.any(axis=(1, 3))
        assert np.all(per_cell == none_lost)


def test_apply_loss_examples():
    rng = np.random.default_rng(0)
    seq = VideoSequence(rng.integers(0, 256, (2, 48, 48), dtype=np.uint8))
    same = apply_loss(seq, LossMask.all_received(2, 48, 48))
    np.testing.assert_array_equal(same.luma, seq.luma)
    zero = apply_loss(seq, LossMask(np.zeros((2, 48, 48), bool)), fill=0)
    assert not zero.luma.any()


def test_apply_loss_changes_only_lost_samples():
    rng = np.random.default_rng(1)
    seq = VideoSequence(rng.integers(0, 256, (1, 288, 352), dtype=np.uint8))
    mask = generate_pattern("DISPERSED", (352, 288), [0], toggle=[False])
    out = apply_loss(seq, mask)
    changed = out.luma != seq.luma
    assert not changed[mask.valid].any()
    expected = int(((seq.luma != 128) & ~mask.valid).sum())
    assert changed.sum() == expected
    twice = apply_loss(out, mask)
    np.testing.assert_array_equal(twice.luma, out.luma)


def test_apply_loss_blanks_chroma():
    luma = np.full((1, 48, 48), 10, np.uint8)
    chroma = (np.full((1, 24, 24), 20, np.uint8), np.full((1, 24, 24), 30, np.uint8))
    valid = np.ones((1, 48, 48), bool)
    valid[0, 16:32, 16:32] = False
    out = apply_loss(VideoSequence(luma, chroma), LossMask(valid))
    assert (out.chroma[0][0, 8:16, 8:16] == 128).all()
    assert (out.chroma[1][0, :8] == 30).all()


def test_apply_loss_dimension_mismatch():
    seq = VideoSequence(np.zeros((1, 48, 48), np.uint8))
    with pytest.raises(SequenceError):
        apply_loss(seq, LossMask(np.ones((1, 48, 64), bool)))


def test_chroma_mask_any_lost():
    valid = np.ones((1, 4, 4), bool)
    valid[0, 1, 2] = False
    expected = np.ones((1, 2, 2), bool)
    expected[0, 0, 1] = False
    np.testing.assert_array_equal(chroma_mask(valid), expected)


def test_enumerate_examples():
    assert enumerate_blocks(LossMask.all_received(1, 64, 64), 0) == []
    valid = np.ones((1, 96, 96), bool)
    valid[0, 48:64, 32:48] = False
    (block,) = enumerate_blocks(LossMask(valid), 0)
    assert (block.x0, block.y0, block.Lx, block.Ly, block.frame) == (32, 48, 16, 16, 0)


def test_enumerate_dispersed_raster_order():
    mask = generate_pattern("DISPERSED", (352, 288), [0], toggle=[False])
    blocks = enumerate_blocks(mask, 0)
    assert len(blocks) == 198
    keys = [(b.y0, b.x0) for b in blocks]
    assert keys == sorted(keys)
    assert {(b.x0 // 16, b.y0 // 16) for b in blocks} == lost_cells(mask.valid[0])


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_enumerate_covers_arbitrary_losses(data):
    h, w = 64, 80
    valid = np.ones((1, h, w), bool)
    for _ in range(data.draw(st.integers(0, 5))):
        x = data.draw(st.integers(0, w - 1))
        y = data.draw(st.integers(0, h - 1))
        valid[0, y : y + data.draw(st.integers(1, 20)), x : x + data.draw(st.integers(1, 20))] = False
    blocks = enumerate_blocks(LossMask(valid), 0)
    covered = np.zeros((h, w), bool)
    for b in blocks:
        tile = valid[0, b.y0 : b.y0 + b.Ly, b.x0 : b.x0 + b.Lx]
        assert not tile.all()
        assert b.x0 + b.Lx <= w and b.y0 + b.Ly <= h
        covered[b.y0 : b.y0 + b.Ly, b.x0 : b.x0 + b.Lx] = True
    assert covered[~valid[0]].all()


def test_mask_file_round_trip(tmp_path):
    mask = generate_pattern("MIXED", (64, 48), [0, 1, 2])
    path = tmp_path / "m.bin"
    write_mask(mask, path)
    raw = np.fromfile(path, np.uint8)
    assert raw.size == 3 * 64 * 48
    assert set(np.unique(raw)) <= {0x00, 0xFF}
    assert (raw == 0).sum() == (~mask.valid).sum()
    np.testing.assert_array_equal(read_mask(path, 64, 48).valid, mask.valid)


def test_mask_file_rejects_other_bytes(tmp_path):
    path = tmp_path / "bad.bin"
    np.full(48 * 48, 7, np.uint8).tofile(path)
    with pytest.raises(SequenceError):
        read_mask(path, 48, 48)
