"""Fractional-pel motion estimation, reliability gating and volume alignment."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .fse_core import ExtrapolationVolume, build_fixed_volume, _frames, _valid

SIX_TAP = np.array([1.0, -5.0, 20.0, 20.0, -5.0, 1.0]) / 32.0
ACCURACY = {"full": 1, "half": 2, "quarter": 4}
DEFAULT_T_ABS = 10.0
DEFAULT_T_REL = 3.0
DEFAULT_D_MAX = 16
DEFAULT_DECISION_BORDER = 4


class EmptyAreaError(ValueError):
    """No received samples are available to match against."""


@dataclass
class UpsampledPlane:
    samples: np.ndarray
    D: int
    frame: Optional[int] = None
    _padded: dict = field(default_factory=dict, repr=False)

    def padded(self, radius):
        out = self._padded.get(radius)
        if out is None:
            out = np.pad(self.samples, radius, mode="edge")
            self._padded[radius] = out
        return out

    def sample_grid(self, oy, ox, height, width):
        """Samples on the D-strided grid anchored at ``(ox, oy)``, margins replicated."""
        h, w = self.samples.shape
        ys = np.clip(oy + self.D * np.arange(height), 0, h - 1)
        xs = np.clip(ox + self.D * np.arange(width), 0, w - 1)
        return self.samples[np.ix_(ys, xs)]


@dataclass
class DecisionArea:
    ys: np.ndarray
    xs: np.ndarray

    @property
    def size(self):
        return int(self.ys.size)


@dataclass
class MotionEstimate:
    kappa: int
    dx: int
    dy: int
    error: float


@dataclass
class ReliabilityConfig:
    T_abs: float = DEFAULT_T_ABS
    T_rel: float = DEFAULT_T_REL

    def __post_init__(self):
        if self.T_abs <= 0 or self.T_rel <= 0:
            raise ValueError("reliability thresholds must be positive")


def _six_tap(a, axis):
    """Half-sample values between ``i`` and ``i+1`` along ``axis`` (length n-1)."""
    n = a.shape[axis]
    out = 0.0
    for k, c in enumerate(SIX_TAP):
        idx = np.clip(np.arange(n - 1) + k - 2, 0, n - 1)
        out = out + c * np.take(a, idx, axis=axis)
    return out


def _half_pel(plane):
    h, w = plane.shape
    horiz = _six_tap(plane, axis=1)  # (h, w-1), kept at full precision
    out = np.empty((2 * h - 1, 2 * w - 1))
    out[0::2, 0::2] = plane
    out[0::2, 1::2] = horiz
    out[1::2, 0::2] = _six_tap(plane, axis=0)
    out[1::2, 1::2] = _six_tap(horiz, axis=0)
    return out


def _quarter_pel(half):
    h2, w2 = half.shape
    out = np.empty((2 * h2 - 1, 2 * w2 - 1))
    out[0::2, 0::2] = half
    out[0::2, 1::2] = 0.5 * (half[:, :-1] + half[:, 1:])
    out[1::2, 0::2] = 0.5 * (half[:-1, :] + half[1:, :])
    # Diagonal positions average the two half-pel neighbours on the diagonal
    # that avoids both the full-pel sample and the centre half-pel sample.
    a, b = np.meshgrid(np.arange(h2 - 1), np.arange(w2 - 1), indexing="ij")
    main = (a + b) % 2 == 1
    diag_main = 0.5 * (half[:-1, :-1] + half[1:, 1:])
    diag_anti = 0.5 * (half[:-1, 1:] + half[1:, :-1])
    out[1::2, 1::2] = np.where(main, diag_main, diag_anti)
    return out


def upsample_plane(frame, D, frame_index=None):
    """Upsample a plane by D in {1, 2, 4}: 6-tap half-pel, bilinear quarter-pel.

    Full-pel samples land on ``(D*y, D*x)`` unchanged; nothing is rounded.
    """
    plane = np.asarray(frame, dtype=np.float64)
    if D == 1:
        samples = plane.copy()
    elif D == 2:
        samples = _half_pel(plane)
    elif D == 4:
        samples = _quarter_pel(_half_pel(plane))
    else:
        raise ValueError(f"unsupported upsampling factor {D}; expected 1, 2 or 4")
    return UpsampledPlane(samples, D, frame_index)


def decision_area(valid_plane, block, width=DEFAULT_DECISION_BORDER):
    """Ring of ``width`` samples around the block, restricted to received in-frame samples."""
    valid_plane = np.asarray(valid_plane, bool)
    h, w = valid_plane.shape
    y_lo, y_hi = max(block.y0 - width, 0), min(block.y0 + block.Ly + width, h)
    x_lo, x_hi = max(block.x0 - width, 0), min(block.x0 + block.Lx + width, w)
    yy, xx = np.mgrid[y_lo:y_hi, x_lo:x_hi]
    inside = (yy >= block.y0) & (yy < block.y0 + block.Ly) & (xx >= block.x0) & (xx < block.x0 + block.Lx)
    keep = ~inside & valid_plane[yy, xx]
    return DecisionArea(yy[keep], xx[keep])


def _pick(E, radius):
    best = E.min()
    cand = np.argwhere(E == best)
    dys = cand[:, 0] - radius
    dxs = cand[:, 1] - radius
    order = np.lexsort((dys, dxs, np.abs(dxs) + np.abs(dys)))
    i = order[0]
    return int(dxs[i]), int(dys[i]), float(best)


def search(current, ref, area, d_max=DEFAULT_D_MAX, use_numba=None):
    """Full search; returns ``(dx, dy, error, sse_map)`` in 1/D-pel units."""
    if area.size == 0:
        raise EmptyAreaError("decision area contains no received samples")
    radius = ref.D * d_max
    vals = np.asarray(current, dtype=np.float64)[area.ys, area.xs]
    E = kernels.sse_map(ref.padded(radius), ref.D * area.ys, ref.D * area.xs, vals, radius, use_numba)
    dx, dy, err = _pick(E, radius)
    return dx, dy, err, E


def estimate_motion(current, reference, area, d_max=DEFAULT_D_MAX, kappa=-1):
    """Displacement minimising the SSE between the decision area in ``current``
    and its displaced copy in the upsampled ``reference``.

    Candidates cover +-d_max full pels at 1/D-pel steps. Ties prefer the
    smaller ``|dx| + |dy|``, then the lexicographically smaller ``(dx, dy)``.
    """
    dx, dy, err, _ = search(current, reference, area, d_max)
    return MotionEstimate(kappa, dx, dy, err)


def reliability_stats(estimates, area_size):
    """``(max mean error per pixel, max-min spread of root errors over their mean)``.

    The mean divides by the number of estimates actually available, which is
    ``N_p + N_f`` away from the sequence ends. An all-zero error set has
    spread 0.
    """
    errors = np.array([e.error for e in estimates], dtype=np.float64)
    roots = np.sqrt(errors)
    absolute = float(np.sqrt(errors / area_size).max())
    mean = roots.sum() / len(estimates)
    relative = 0.0 if mean == 0 else float((roots.max() - roots.min()) / mean)
    return absolute, relative


def check_reliability(estimates, area_size, cfg=None):
    """True when both the absolute and the homogeneity test pass."""
    if not estimates:
        raise ValueError("need at least one motion estimate")
    cfg = cfg or ReliabilityConfig()
    absolute, relative = reliability_stats(estimates, area_size)
    return absolute <= cfg.T_abs and relative <= cfg.T_rel


def _status_grid(flags, oy, ox, D, height, width):
    """Loss/concealment flags for sub-pel samples, taken from the bracketing full-pel samples."""
    h, w = flags.shape
    pos_y = oy + D * np.arange(height)
    pos_x = ox + D * np.arange(width)
    y_lo = np.clip(np.floor_divide(pos_y, D), 0, h - 1)
    y_hi = np.clip(-np.floor_divide(-pos_y, D), 0, h - 1)
    x_lo = np.clip(np.floor_divide(pos_x, D), 0, w - 1)
    x_hi = np.clip(-np.floor_divide(-pos_x, D), 0, w - 1)
    return [flags[np.ix_(ys, xs)] for ys in (y_lo, y_hi) for xs in (x_lo, x_hi)]


def build_aligned_volume(seq, upsampled_refs, block, vectors, border=16, n_p=2, n_f=0,
                         mask=None, concealed=None):
    """Fixed volume whose reference layers are re-sampled along the motion vectors.

    ``upsampled_refs`` and ``vectors`` map ``kappa`` (relative frame offset)
    to the reference plane and its :class:`MotionEstimate`; lists ordered by
    layer are accepted too.
    """
    vol = build_fixed_volume(seq, block, border, n_p, n_f, mask, concealed)
    kappas = [p - vol.n_p for p in range(vol.shape[0]) if p != vol.n_p]
    if not isinstance(upsampled_refs, dict):
        upsampled_refs = dict(zip(kappas, upsampled_refs))
    if not isinstance(vectors, dict):
        vectors = {v.kappa: v for v in vectors}
    if set(upsampled_refs) != set(kappas) or set(vectors) != set(kappas):
        raise ValueError(f"need one reference plane and one vector per offset {kappas}")
    frames = _frames(seq)
    t_count, height, width = frames.shape
    valid = np.ones(frames.shape, bool) if mask is None else _valid(mask)
    done = np.zeros(frames.shape, bool) if concealed is None else np.asarray(concealed, bool)
    P, N, M = vol.shape
    f = vol.f.copy()
    support = vol.support.copy()
    conc = vol.concealed.copy()
    for kappa in kappas:
        ref = upsampled_refs[kappa]
        vec = vectors[kappa]
        D = ref.D
        oy = D * (block.y0 - border) + vec.dy
        ox = D * (block.x0 - border) + vec.dx
        p = kappa + vol.n_p
        t = block.frame + kappa
        f[p] = ref.sample_grid(oy, ox, N, M)
        sup_parts = _status_grid(valid[t] | done[t], oy, ox, D, N, M)
        con_parts = _status_grid(done[t] & ~valid[t], oy, ox, D, N, M)
        support[p] = np.logical_and.reduce(sup_parts)
        conc[p] = np.logical_or.reduce(con_parts) & support[p]
    return ExtrapolationVolume(
        f=f, support=support, concealed=conc, x0=vol.x0, y0=vol.y0, tau=vol.tau, border=border,
        n_p=vol.n_p, n_f=vol.n_f, Lx=vol.Lx, Ly=vol.Ly, aligned=True,
    )
