"""Header-less raw planar video I/O (gray8 and yuv420p)."""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

MIN_DIM = 48
PIXEL_FORMATS = ("gray8", "yuv420p")


class SequenceError(ValueError):
    """Raised for malformed raw files or invalid sequence geometry."""


def chroma_dims(width, height):
    return (width + 1) // 2, (height + 1) // 2


def frame_bytes(width, height, pixel_format="gray8"):
    if pixel_format == "gray8":
        return width * height
    if pixel_format == "yuv420p":
        cw, ch = chroma_dims(width, height)
        return width * height + 2 * cw * ch
    raise SequenceError(f"unsupported pixel format {pixel_format!r}")


@dataclass(frozen=True)
class VideoSequence:
    """Stack of 8-bit luma planes, shape ``(T, Y, X)``, plus optional 4:2:0 chroma.

    ``chroma`` holds ``(U, V)`` arrays of shape ``(T, ceil(Y/2), ceil(X/2))``.
    Arrays are made read-only on construction; algorithms work on float copies.
    """

    luma: np.ndarray
    chroma: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        luma = np.asarray(self.luma)
        if luma.ndim != 3:
            raise SequenceError("luma must have shape (T, Y, X)")
        if luma.dtype != np.uint8:
            if luma.size and (luma.min() < 0 or luma.max() > 255):
                raise SequenceError("samples must lie in [0, 255]")
            luma = luma.astype(np.uint8)
        t, y, x = luma.shape
        if x < MIN_DIM or y < MIN_DIM:
            raise SequenceError(f"frame dimensions {x}x{y} below minimum {MIN_DIM}x{MIN_DIM}")
        luma = np.ascontiguousarray(luma)
        luma.setflags(write=False)
        object.__setattr__(self, "luma", luma)
        if self.chroma is not None:
            cw, ch = chroma_dims(x, y)
            planes = []
            for plane in self.chroma:
                plane = np.ascontiguousarray(np.asarray(plane, dtype=np.uint8))
                if plane.shape != (t, ch, cw):
                    raise SequenceError(f"chroma plane shape {plane.shape} != {(t, ch, cw)}")
                plane.setflags(write=False)
                planes.append(plane)
            object.__setattr__(self, "chroma", tuple(planes))

    @property
    def width(self):
        return self.luma.shape[2]

    @property
    def height(self):
        return self.luma.shape[1]

    @property
    def frame_count(self):
        return self.luma.shape[0]

    @property
    def pixel_format(self):
        return "gray8" if self.chroma is None else "yuv420p"

    def with_luma(self, luma):
        return VideoSequence(luma, self.chroma)

    @classmethod
    def empty(cls, width, height, pixel_format="gray8"):
        luma = np.zeros((0, height, width), np.uint8)
        if pixel_format == "yuv420p":
            cw, ch = chroma_dims(width, height)
            z = np.zeros((0, ch, cw), np.uint8)
            return cls(luma, (z, z.copy()))
        return cls(luma)


def read_raw_video(path, width, height, pixel_format="gray8"):
    """Read a raw planar file into a :class:`VideoSequence`.

    Raises :class:`SequenceError` if the file is not a whole number of frames
    or the dimensions are below 48x48.
    """
    if width < MIN_DIM or height < MIN_DIM:
        raise SequenceError(f"frame dimensions {width}x{height} below minimum {MIN_DIM}x{MIN_DIM}")
    fb = frame_bytes(width, height, pixel_format)
    data = np.fromfile(Path(path), dtype=np.uint8)
    if data.size % fb:
        raise SequenceError(
            f"{path}: {data.size} bytes is not a multiple of the {fb}-byte frame size "
            f"for {width}x{height} {pixel_format}"
        )
    t = data.size // fb
    frames = data.reshape(t, fb)
    luma = frames[:, : width * height].reshape(t, height, width)
    if pixel_format == "gray8":
        return VideoSequence(luma)
    cw, ch = chroma_dims(width, height)
    off = width * height
    u = frames[:, off : off + cw * ch].reshape(t, ch, cw)
    v = frames[:, off + cw * ch :].reshape(t, ch, cw)
    return VideoSequence(luma, (u, v))


def write_raw_video(seq, path):
    """Write frames in temporal order: luma, then U and V when present."""
    t = seq.frame_count
    parts = [seq.luma.reshape(t, seq.width * seq.height)]
    if seq.chroma is not None:
        parts.extend(c.reshape(t, c.shape[1] * c.shape[2]) for c in seq.chroma)
    np.concatenate(parts, axis=1).tofile(Path(path))


def sample_clamped(seq, x, y, t):
    """Luma sample at ``(x, y, t)`` with margin replication outside the frame."""
    plane = seq.luma[t] if isinstance(seq, VideoSequence) else seq[t]
    h, w = plane.shape
    return plane[min(max(y, 0), h - 1), min(max(x, 0), w - 1)]


def crop_clamped(plane, x0, y0, width, height):
    """Crop ``plane[y0:y0+height, x0:x0+width]`` replicating margins where it overhangs."""
    h, w = plane.shape
    ys = np.clip(np.arange(y0, y0 + height), 0, h - 1)
    xs = np.clip(np.arange(x0, x0 + width), 0, w - 1)
    return plane[np.ix_(ys, xs)]
