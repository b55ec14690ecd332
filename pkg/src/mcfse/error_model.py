"""Macroblock loss patterns and their application to sequences.

Masks are boolean arrays of shape ``(T, Y, X)`` where ``True`` marks a
received sample and ``False`` a lost one.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sequence_io import SequenceError, VideoSequence

MB = 16
PATTERNS = ("DISPERSED", "INTERLEAVED", "MIXED")
INTERLEAVE_PERIOD = 4
DEFAULT_FILL = 128


@dataclass(frozen=True)
class LossBlock:
    x0: int
    y0: int
    Lx: int
    Ly: int
    frame: int


@dataclass
class LossMask:
    valid: np.ndarray

    def __post_init__(self):
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.valid.ndim != 3:
            raise ValueError("mask must have shape (T, Y, X)")

    @property
    def shape(self):
        return self.valid.shape

    def lost(self, t=None):
        return ~self.valid if t is None else ~self.valid[t]

    @classmethod
    def all_received(cls, frames, height, width):
        return cls(np.ones((frames, height, width), dtype=bool))


def _mb_grid(width, height):
    return -(-width // MB), -(-height // MB)


def _dispersed_cells(cols, rows):
    bx, by = np.meshgrid(np.arange(cols), np.arange(rows))
    return (bx + by) % 2 == 0


def _interleaved_cells(cols, rows, period=INTERLEAVE_PERIOD):
    cells = np.zeros((rows, cols), dtype=bool)
    seg = max(cols // 2, 1)
    for j, r in enumerate(range(0, rows, period)):
        if j % 2 == 0:
            cells[r, :seg] = True
        else:
            cells[r, cols - seg :] = True
    return cells


# Toggle offsets in macroblocks (dx, dy). A diagonal shift leaves a
# checkerboard unchanged, so DISPERSED shifts horizontally only.
_TOGGLE_SHIFT = {"DISPERSED": (1, 0), "INTERLEAVED": (1, 1)}


def _frame_cells(kind, cols, rows, toggle):
    cells = _dispersed_cells(cols, rows) if kind == "DISPERSED" else _interleaved_cells(cols, rows)
    if toggle:
        dx, dy = _TOGGLE_SHIFT[kind]
        cells = np.roll(cells, (dy, dx), axis=(0, 1))
    return cells


def default_toggles(kind, count):
    """Every other error frame is shifted; MIXED alternates per pattern."""
    kind = kind.upper()
    if kind == "MIXED":
        return [bool((i // 2) % 2) for i in range(count)]
    return [bool(i % 2) for i in range(count)]


def generate_pattern(kind, dims, frame_indices, toggle=None, frame_count=None):
    """Build a :class:`LossMask` for the given error frames.

    Parameters
    ----------
    kind : {"DISPERSED", "INTERLEAVED", "MIXED"}
    dims : (X, Y) frame width and height in samples.
    frame_indices : frames that receive the pattern, in order.
    toggle : per error frame, whether the pattern is shifted by one macroblock.
        Defaults to :func:`default_toggles`.
    frame_count : total frames of the mask; defaults to ``max(frame_indices) + 1``.

    MIXED applies DISPERSED to even-numbered error frames (position in
    ``frame_indices``) and INTERLEAVED to odd-numbered ones. Frame sizes that
    are not macroblock multiples are handled on the padded macroblock grid
    and cropped.
    """
    kind = kind.upper()
    if kind not in PATTERNS:
        raise ValueError(f"unknown pattern {kind!r}; expected one of {PATTERNS}")
    width, height = dims
    if width < 2 * MB or height < 2 * MB:
        raise SequenceError(f"pattern needs at least {2 * MB}x{2 * MB} samples, got {width}x{height}")
    frame_indices = list(frame_indices)
    if toggle is None:
        toggle = default_toggles(kind, len(frame_indices))
    if len(toggle) != len(frame_indices):
        raise ValueError("toggle must have one entry per error frame")
    if frame_count is None:
        frame_count = max(frame_indices) + 1 if frame_indices else 0
    cols, rows = _mb_grid(width, height)
    valid = np.ones((frame_count, height, width), dtype=bool)
    for i, (t, tog) in enumerate(zip(frame_indices, toggle)):
        frame_kind = kind if kind != "MIXED" else ("DISPERSED" if i % 2 == 0 else "INTERLEAVED")
        cells = _frame_cells(frame_kind, cols, rows, tog)
        lost = np.kron(cells, np.ones((MB, MB), dtype=bool))[:height, :width]
        valid[t] &= ~lost
    return LossMask(valid)


def chroma_mask(valid):
    """4:2:0 chroma validity: a chroma sample is lost if any co-sited luma sample is."""
    t, h, w = valid.shape
    ph, pw = h + (h % 2), w + (w % 2)
    padded = np.ones((t, ph, pw), dtype=bool)
    padded[:, :h, :w] = valid
    blocks = padded.reshape(t, ph // 2, 2, pw // 2, 2)
    return blocks.all(axis=(2, 4))


def apply_loss(seq, mask, fill=DEFAULT_FILL):
    """Replace lost samples with ``fill``; chroma is blanked alongside luma."""
    valid = mask.valid if isinstance(mask, LossMask) else np.asarray(mask, dtype=bool)
    if valid.shape != seq.luma.shape:
        raise SequenceError(f"mask shape {valid.shape} does not match sequence {seq.luma.shape}")
    if not 0 <= fill <= 255:
        raise ValueError("fill must be an 8-bit sample value")
    luma = np.where(valid, seq.luma, np.uint8(fill))
    chroma = None
    if seq.chroma is not None:
        cvalid = chroma_mask(valid)
        chroma = tuple(np.where(cvalid, c, np.uint8(fill)) for c in seq.chroma)
    return VideoSequence(luma, chroma)


def enumerate_blocks(mask, frame, block_size=MB):
    """Lost macroblocks of ``frame`` in raster order.

    A macroblock is listed iff any of its samples is lost. Blocks on the right
    and bottom edge are clipped to the frame.
    """
    valid = mask.valid if isinstance(mask, LossMask) else np.asarray(mask, dtype=bool)
    plane = valid[frame]
    h, w = plane.shape
    blocks = []
    for y0 in range(0, h, block_size):
        for x0 in range(0, w, block_size):
            tile = plane[y0 : y0 + block_size, x0 : x0 + block_size]
            if not tile.all():
                blocks.append(LossBlock(x0, y0, tile.shape[1], tile.shape[0], frame))
    return blocks


def write_mask(mask, path):
    """Raw mask file: one byte per luma sample, 0x00 lost, 0xFF received."""
    valid = mask.valid if isinstance(mask, LossMask) else np.asarray(mask, dtype=bool)
    np.where(valid, np.uint8(0xFF), np.uint8(0x00)).tofile(Path(path))


def read_mask(path, width, height):
    data = np.fromfile(Path(path), dtype=np.uint8)
    if data.size % (width * height):
        raise SequenceError(f"{path}: mask size {data.size} is not a multiple of {width}x{height}")
    bad = (data != 0) & (data != 0xFF)
    if bad.any():
        raise SequenceError(f"{path}: mask bytes must be 0x00 or 0xFF")
    return LossMask(data.reshape(-1, height, width) == 0xFF)
