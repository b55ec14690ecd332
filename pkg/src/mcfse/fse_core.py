"""Extrapolation volumes, weighting, and sparse 3D Fourier model generation.

Volumes are stored as ``(P, N, M)`` arrays, i.e. ``(t, y, x)``, so the C-order
flat index of ``[p, n, m]`` is ``m + M*n + M*N*p``. Frequencies live on a
working grid at least as large as the volume (64x64x16 by default); the
volume sits at the grid origin and the padding carries zero weight.

Two routes compute every quantity:

* ``method="fft"`` -- transforms via ``numpy.fft`` and, in the iteration loop,
  residual updates applied directly in the frequency domain.
* ``method="direct"`` -- explicit DFT sums (separable matrix products) and a
  spatial-domain residual. Slow, used as the reference.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .error_model import LossBlock
from .sequence_io import VideoSequence

DEFAULT_FFT_SIZE = (64, 64, 16)  # M x N x P, i.e. x, y, t
DEFAULT_BORDER = 16
DEFAULT_RHO = 0.8
DEFAULT_DELTA = 0.2
DEFAULT_GAMMA = 0.7
DEFAULT_ITERATIONS = 800


class DegenerateWeightsError(ValueError):
    """The weighting volume has no positive mass, so no projection exists."""


@dataclass
class ExtrapolationVolume:
    f: np.ndarray
    support: np.ndarray
    concealed: np.ndarray
    x0: int
    y0: int
    tau: int
    border: int
    n_p: int
    n_f: int
    Lx: int
    Ly: int
    aligned: bool = False

    @property
    def shape(self):
        return self.f.shape

    @property
    def loss(self):
        return ~self.support

    def block_region(self):
        """Lost samples of the current frame inside the block footprint."""
        region = np.zeros(self.f.shape, dtype=bool)
        b = self.border
        region[self.n_p, b : b + self.Ly, b : b + self.Lx] = True
        return region & ~self.support


@dataclass
class WeightVolume:
    w: np.ndarray
    rho_hat: float
    delta: float

    @property
    def total(self):
        return float(self.w.sum())


@dataclass
class SparseModel:
    """Coefficients on the working grid plus the volume they describe.

    ``selections`` lists the flat frequency index chosen in each iteration
    (the lower-index member of each conjugate pair) and ``energy`` the
    weighted residual energy per iteration when it was tracked.
    """

    coefficients: np.ndarray
    shape: tuple
    selections: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    energy: Optional[np.ndarray] = None

    @property
    def grid(self):
        return self.coefficients.shape

    @property
    def selected(self):
        return np.flatnonzero(self.coefficients.ravel())

    def evaluate(self, region=None, method="fft"):
        return evaluate_model(self, region, method)


def working_grid(shape, fft_size=DEFAULT_FFT_SIZE):
    """Grid ``(Gp, Gn, Gm)`` covering a ``(P, N, M)`` volume; ``fft_size`` is given as M x N x P."""
    target = (fft_size[2], fft_size[1], fft_size[0])
    return tuple(max(int(s), int(g)) for s, g in zip(shape, target))


def _as_array(obj, attr):
    return np.asarray(getattr(obj, attr, obj), dtype=np.float64)


def _frames(seq):
    return seq.luma if isinstance(seq, VideoSequence) else np.asarray(seq)


def _valid(mask):
    return np.asarray(getattr(mask, "valid", mask), dtype=bool)


def clip_references(tau, frame_count, n_p, n_f):
    return min(n_p, tau), min(n_f, frame_count - 1 - tau)


def build_fixed_volume(seq, block: LossBlock, border=DEFAULT_BORDER, n_p=2, n_f=0, mask=None, concealed=None):
    """Cut the volume centred on ``block`` from frames ``tau-n_p .. tau+n_f``.

    Reference counts are clipped at sequence ends. Samples outside the frame
    replicate the margin, including their loss/concealment status. A sample
    belongs to the support unless ``mask`` marks it lost and ``concealed``
    does not mark it as already concealed.
    """
    frames = _frames(seq)
    t_count, height, width = frames.shape
    tau = block.frame
    n_p, n_f = clip_references(tau, t_count, n_p, n_f)
    ts = np.arange(tau - n_p, tau + n_f + 1)
    ys = np.clip(np.arange(block.y0 - border, block.y0 + block.Ly + border), 0, height - 1)
    xs = np.clip(np.arange(block.x0 - border, block.x0 + block.Lx + border), 0, width - 1)
    idx = np.ix_(ts, ys, xs)
    f = frames[idx].astype(np.float64)
    valid = np.ones(f.shape, bool) if mask is None else _valid(mask)[idx]
    done = np.zeros(f.shape, bool) if concealed is None else np.asarray(concealed, bool)[idx]
    support = valid | done
    return ExtrapolationVolume(
        f=f, support=support, concealed=done & ~valid, x0=block.x0, y0=block.y0, tau=tau,
        border=border, n_p=n_p, n_f=n_f, Lx=block.Lx, Ly=block.Ly,
    )


def build_weight_volume(vol, rho_hat=DEFAULT_RHO, delta=DEFAULT_DELTA):
    """Isotropic decay ``rho_hat ** dist`` from the volume centre, zero on the loss.

    Previously concealed samples are further scaled by ``delta``.
    """
    if not 0.0 < rho_hat <= 1.0:
        raise ValueError(f"rho_hat must lie in (0, 1], got {rho_hat}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    P, N, M = vol.shape
    p, n, m = np.meshgrid(np.arange(P), np.arange(N), np.arange(M), indexing="ij")
    dist = np.sqrt((m - (M - 1) / 2) ** 2 + (n - (N - 1) / 2) ** 2 + (p - (P - 1) / 2) ** 2)
    w = rho_hat ** dist
    w = np.where(vol.concealed, w * delta, w)
    w = np.where(vol.support, w, 0.0)
    return WeightVolume(w, rho_hat, delta)


def _dft_matrices(shape, grid, sign):
    return [np.exp(sign * 2j * np.pi * np.outer(np.arange(g), np.arange(s)) / g) for s, g in zip(shape, grid)]


def direct_dft(a, grid):
    """``A[k] = sum_x a[x] exp(-2 pi i k.x / grid)`` by explicit per-axis sums."""
    Fp, Fn, Fm = _dft_matrices(a.shape, grid, -1)
    out = np.tensordot(a.astype(np.complex128), Fm, axes=([2], [1]))  # p, n, km
    out = np.tensordot(out, Fn, axes=([1], [1]))  # p, km, kn
    out = np.tensordot(out, Fp, axes=([0], [1]))  # km, kn, kp
    return out.transpose(2, 1, 0)


def weighted_projection(residual, weights, grid=None, method="fft"):
    """Weighted projection of ``residual`` onto every Fourier basis function.

    ``p[k] = <w r, phi_k> / <w, |phi_k|^2>``; the denominator is ``sum(w)`` for
    every ``k`` because ``|phi_k| == 1``.
    """
    r = _as_array(residual, "f")
    w = _as_array(weights, "w")
    if grid is None:
        grid = working_grid(r.shape)
    total = w.sum()
    if not total > 0:
        raise DegenerateWeightsError("sum of weights is zero: no support samples")
    if method == "fft":
        num = np.fft.fftn(w * r, s=grid, axes=(0, 1, 2))
    elif method == "direct":
        num = direct_dft(w * r, grid)
    else:
        raise ValueError(f"unknown method {method!r}")
    return num / total


def select_basis(projection, weights=None):
    """Index of the conjugate pair with the largest weighted-distance reduction.

    Each bin scores ``|p_k|^2 * sum(w)``; a pair scores the sum of its two
    members (self-mirrored bins count once). Returns ``(u, mirror)`` as flat
    indices with ``u`` the smaller one; ties go to the smallest index.
    """
    p = np.asarray(projection)
    total = 1.0 if weights is None else float(_as_array(weights, "w").sum())
    flat = p.ravel()
    a2 = (flat.real * flat.real + flat.imag * flat.imag) * total
    mirror = kernels.mirror_index(p.shape)
    score = a2 + np.where(mirror == np.arange(flat.size), 0.0, a2[mirror])
    u = int(np.argmax(score))
    return u, int(mirror[u])


def _phase_volume(u, grid, shape):
    ep, en, em = kernels._axis_phases(np.unravel_index(u, grid), grid, shape)
    return ep[:, None, None] * en[None, :, None] * em[None, None, :]


def generate_model(vol, weights, iterations=DEFAULT_ITERATIONS, gamma=DEFAULT_GAMMA,
                   fft_size=DEFAULT_FFT_SIZE, method="fft", track_energy=False, use_numba=None):
    """Greedy sparse Fourier model of the volume with orthogonality deficiency compensation.

    Each iteration projects the residual, selects the best conjugate pair,
    adds ``gamma`` times its projection to the coefficients and removes the
    same amount from the residual. ``gamma=1`` gives the uncompensated model.

    ``method="fft"`` runs the spectral loop from :mod:`mcfse.kernels`;
    ``method="direct"`` recomputes the projection by explicit DFT sums from a
    spatial residual every iteration.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    f = _as_array(vol, "f")
    w = _as_array(weights, "w")
    if f.shape != w.shape:
        raise ValueError(f"signal shape {f.shape} != weight shape {w.shape}")
    grid = working_grid(f.shape, fft_size)
    total = w.sum()
    if not total > 0:
        raise DegenerateWeightsError("sum of weights is zero: no support samples")

    if method == "fft":
        R = np.fft.fftn(w * f, s=grid, axes=(0, 1, 2))
        Wf = np.fft.fftn(w, s=grid, axes=(0, 1, 2))
        resid = f.copy() if track_energy else None
        coeffs, selected, energy = kernels.fse_iterate(
            R, Wf, total, iterations, gamma, resid=resid, w=w if track_energy else None, use_numba=use_numba
        )
        return SparseModel(coeffs, f.shape, selected, energy if track_energy else None)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")

    coeffs = np.zeros(grid, np.complex128)
    cf = coeffs.reshape(-1)
    resid = f.copy()
    selected = np.zeros(iterations, np.int64)
    energy = np.empty(iterations + 1)
    energy[0] = np.sum(w * resid * resid)
    for it in range(iterations):
        proj = weighted_projection(resid, w, grid, method="direct").ravel()
        u, v = select_basis(proj.reshape(grid))
        gp = gamma * (complex(proj[u].real, 0.0) if u == v else proj[u])
        selected[it] = u
        cf[u] += gp
        if u != v:
            cf[v] += np.conj(gp)
        z = gp * _phase_volume(u, grid, f.shape)
        resid -= z.real if u == v else 2.0 * z.real
        energy[it + 1] = np.sum(w * resid * resid)
    return SparseModel(coeffs, f.shape, selected, energy if track_energy else None)


def evaluate_model(model, region=None, method="fft"):
    """Model values ``g = sum_k c_k phi_k`` over the volume.

    With ``region`` (boolean volume mask) only those samples are returned, in
    C order. The imaginary part cancels across conjugate pairs and is dropped.
    """
    grid = model.grid
    shape = model.shape
    if method == "fft":
        full = np.fft.ifftn(model.coefficients) * np.prod(grid)
        g = full[: shape[0], : shape[1], : shape[2]]
    elif method == "direct":
        g = np.zeros(shape, np.complex128)
        flat = model.coefficients.ravel()
        for k in np.flatnonzero(flat):
            g += flat[k] * _phase_volume(int(k), grid, shape)
    else:
        raise ValueError(f"unknown method {method!r}")
    g = g.real
    if region is None:
        return g
    return g[np.asarray(region, bool)]


def round_samples(values):
    """Round half away from zero, then clamp to the 8-bit range."""
    v = np.asarray(values, dtype=np.float64)
    return np.clip(np.sign(v) * np.floor(np.abs(v) + 0.5), 0, 255)


def extrapolate(vol, rho_hat=DEFAULT_RHO, delta=DEFAULT_DELTA, iterations=DEFAULT_ITERATIONS,
                gamma=DEFAULT_GAMMA, fft_size=DEFAULT_FFT_SIZE):
    """Weights, model, and rounded values for the volume's block region."""
    weights = build_weight_volume(vol, rho_hat, delta)
    model = generate_model(vol, weights, iterations, gamma, fft_size)
    region = vol.block_region()
    return region, round_samples(evaluate_model(model, region))
