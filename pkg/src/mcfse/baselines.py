"""Reference concealment: temporal replacement, EBMA and DMVE."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fse_core import _frames, round_samples
from .motion import DEFAULT_D_MAX, decision_area, search


class NoReferenceError(ValueError):
    """No earlier frame exists to copy from."""


@dataclass
class ConcealedBlock:
    samples: np.ndarray
    algorithm: str
    kappa: Optional[int] = None
    dx: int = 0
    dy: int = 0
    error: Optional[float] = None


def tr_conceal(seq, block):
    """Copy the co-located block from frame ``tau - 1``."""
    frames = _frames(seq)
    if block.frame < 1:
        raise NoReferenceError("temporal replacement needs a previous frame")
    prev = frames[block.frame - 1]
    samples = prev[block.y0 : block.y0 + block.Ly, block.x0 : block.x0 + block.Lx].astype(np.float64)
    return ConcealedBlock(samples, "tr", kappa=-1)


def _match_and_copy(frames, refs, block, area, d_max, tag):
    current = frames[block.frame]
    best = None
    for kappa in sorted(refs):  # previous frame first; it wins ties
        ref = refs[kappa]
        dx, dy, err, _ = search(current, ref, area, d_max)
        if best is None or err < best[3]:
            best = (kappa, dx, dy, err)
    kappa, dx, dy, err = best
    ref = refs[kappa]
    D = ref.D
    samples = ref.sample_grid(D * block.y0 + dy, D * block.x0 + dx, block.Ly, block.Lx)
    return ConcealedBlock(round_samples(samples), tag, kappa, dx, dy, err)


def _select_refs(refs, bidirectional):
    if not isinstance(refs, dict):
        refs = {-1: refs}
    keep = {k: v for k, v in refs.items() if k == -1 or (bidirectional and k == 1)}
    if not keep:
        raise NoReferenceError("no reference frame available")
    return keep


def dmve_conceal(seq, upsampled_refs, block, area=None, d_max=DEFAULT_D_MAX, valid=None,
                 border=4, bidirectional=False):
    """Decoder motion vector estimation.

    Matches the received ring around the loss against the upsampled
    reference(s) and copies the displaced block on the 1/D-pel grid.
    ``upsampled_refs`` maps frame offset to plane; ``-1`` is required unless
    only a future frame is available in bidirectional mode.
    """
    frames = _frames(seq)
    if area is None:
        valid_plane = np.ones(frames.shape[1:], bool) if valid is None else np.asarray(valid, bool)[block.frame]
        area = decision_area(valid_plane, block, border)
    refs = _select_refs(upsampled_refs, bidirectional)
    return _match_and_copy(frames, refs, block, area, d_max, "dmve")


def ebma_conceal(seq, upsampled_refs, block, d_max=DEFAULT_D_MAX, valid=None, ring=1,
                 bidirectional=False):
    """Extended boundary matching with a ``ring``-pel boundary.

    Raises :class:`mcfse.motion.EmptyAreaError` when no boundary sample was received.
    """
    frames = _frames(seq)
    valid_plane = np.ones(frames.shape[1:], bool) if valid is None else np.asarray(valid, bool)[block.frame]
    area = decision_area(valid_plane, block, ring)
    refs = _select_refs(upsampled_refs, bidirectional)
    return _match_and_copy(frames, refs, block, area, d_max, "ebma")
