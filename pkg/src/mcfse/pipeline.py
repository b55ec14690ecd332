"""Per-block concealment and whole-sequence runs."""

import logging
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from . import fse_core
from .baselines import ConcealedBlock, NoReferenceError, dmve_conceal, ebma_conceal, tr_conceal
from .error_model import LossMask, chroma_mask, enumerate_blocks
from .motion import (
    ReliabilityConfig,
    EmptyAreaError,
    build_aligned_volume,
    check_reliability,
    decision_area,
    estimate_motion,
    upsample_plane,
)
from .sequence_io import SequenceError, VideoSequence

log = logging.getLogger(__name__)

ALGORITHMS = ("TR", "EBMA", "DMVE", "FSE3D", "FSE3D_OD", "MCFSE")
FSE_ALGORITHMS = ("FSE3D", "FSE3D_OD", "MCFSE")


@dataclass(frozen=True)
class ConcealConfig:
    """Concealment parameters. ``iterations``/``gamma`` left as ``None``
    resolve per algorithm: 200 and 1.0 for FSE3D, 800 and 0.7 otherwise."""

    algorithm: str = "MCFSE"
    accuracy: int = 4
    border: int = 16
    n_p: int = 2
    n_f: int = 0
    rho_hat: float = 0.8
    delta: float = 0.2
    gamma: Optional[float] = None
    iterations: Optional[int] = None
    d_max: int = 16
    decision_border: int = 4
    T_abs: float = 10.0
    T_rel: float = 3.0
    fft_size: tuple = (64, 64, 16)
    block_size: int = 16
    ebma_ring: int = 1
    chroma: bool = False

    def __post_init__(self):
        algo = self.algorithm.upper()
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        object.__setattr__(self, "algorithm", algo)
        if self.accuracy not in (1, 2, 4):
            raise ValueError("accuracy must be 1, 2 or 4")
        object.__setattr__(self, "fft_size", tuple(int(v) for v in self.fft_size))

    @property
    def resolved_iterations(self):
        if self.iterations is not None:
            return self.iterations
        return 200 if self.algorithm == "FSE3D" else 800

    @property
    def resolved_gamma(self):
        if self.gamma is not None:
            return self.gamma
        return 1.0 if self.algorithm == "FSE3D" else 0.7

    @property
    def reliability(self):
        return ReliabilityConfig(self.T_abs, self.T_rel)

    def halved(self):
        """Length parameters for 4:2:0 chroma planes (halved, rounded up)."""
        half = lambda v: -(-v // 2)  # noqa: E731
        fx, fy, fp = self.fft_size
        return replace(
            self, border=half(self.border), d_max=half(self.d_max), decision_border=half(self.decision_border),
            block_size=half(self.block_size), fft_size=(half(fx), half(fy), fp),
        )


@dataclass
class BlockRecord:
    frame: int
    x0: int
    y0: int
    Lx: int
    Ly: int
    path: str
    reliable: Optional[bool] = None
    vectors: list = field(default_factory=list)  # (kappa, dx, dy, error)
    fallbacks: list = field(default_factory=list)
    seconds: float = 0.0


@dataclass
class RunReport:
    config: ConcealConfig
    frame_count: int
    records: List[BlockRecord] = field(default_factory=list)
    chroma_records: List[BlockRecord] = field(default_factory=list)

    def frame_stats(self):
        """Per frame with losses: block count, gated estimates and discarded percentage."""
        stats = {}
        for r in self.records:
            s = stats.setdefault(r.frame, {"blocks": 0, "estimated": 0, "discarded": 0})
            s["blocks"] += 1
            if r.reliable is not None:
                s["estimated"] += 1
                s["discarded"] += int(not r.reliable)
        for s in stats.values():
            s["discarded_pct"] = 100.0 * s["discarded"] / s["estimated"] if s["estimated"] else 0.0
        return dict(sorted(stats.items()))

    def path_counts(self):
        counts = {}
        for r in self.records:
            counts[r.path] = counts.get(r.path, 0) + 1
        return counts


class _PlaneConcealer:
    """Mutable working state for one plane stack of a run."""

    def __init__(self, planes, valid, cfg):
        self.frames = np.array(planes, dtype=np.float64)
        self.valid = np.asarray(valid, bool)
        self.concealed = np.zeros(self.valid.shape, bool)
        self.cfg = cfg
        self._cache = {}

    def upsampled(self, t, D):
        key = (t, D)
        plane = self._cache.get(key)
        if plane is None:
            plane = upsample_plane(self.frames[t], D, t)
            self._cache[key] = plane
        return plane

    def invalidate(self, t):
        for key in [k for k in self._cache if k[0] == t]:
            del self._cache[key]

    def references(self, tau, D, kappas):
        return {k: self.upsampled(tau + k, D) for k in kappas}

    def _kappas(self, tau):
        n_p, n_f = fse_core.clip_references(tau, self.frames.shape[0], self.cfg.n_p, self.cfg.n_f)
        return [k for k in range(-n_p, n_f + 1) if k != 0]

    def _fse(self, vol, iterations, gamma):
        cfg = self.cfg
        weights = fse_core.build_weight_volume(vol, cfg.rho_hat, cfg.delta)
        model = fse_core.generate_model(vol, weights, iterations, gamma, cfg.fft_size)
        region = np.zeros(vol.shape, bool)
        b = vol.border
        region[vol.n_p, b : b + vol.Ly, b : b + vol.Lx] = True
        values = fse_core.evaluate_model(model, region).reshape(vol.Ly, vol.Lx)
        return fse_core.round_samples(values)

    def _fixed_volume(self, block):
        cfg = self.cfg
        return fse_core.build_fixed_volume(self.frames, block, cfg.border, cfg.n_p, cfg.n_f,
                                           self.valid, self.concealed)

    def _mcfse(self, block, record):
        cfg = self.cfg
        kappas = self._kappas(block.frame)
        vol = None
        if kappas:
            area = decision_area(self.valid[block.frame], block, cfg.decision_border)
            if area.size:
                refs = self.references(block.frame, cfg.accuracy, kappas)
                estimates = [
                    estimate_motion(self.frames[block.frame], refs[k], area, cfg.d_max, kappa=k) for k in kappas
                ]
                record.vectors = [(e.kappa, e.dx, e.dy, e.error) for e in estimates]
                record.reliable = check_reliability(estimates, area.size, cfg.reliability)
                if record.reliable:
                    vol = build_aligned_volume(self.frames, refs, block, estimates, cfg.border, cfg.n_p,
                                               cfg.n_f, self.valid, self.concealed)
            else:
                record.fallbacks.append("empty-decision-area")
        else:
            record.fallbacks.append("no-reference")
        record.path = "mcfse-aligned" if vol is not None else "mcfse-fixed"
        if vol is None:
            vol = self._fixed_volume(block)
        return self._fse(vol, cfg.resolved_iterations, cfg.resolved_gamma)

    def _dispatch(self, block, record):
        cfg = self.cfg
        algo = cfg.algorithm
        if algo == "TR":
            record.path = "tr"
            return tr_conceal(self.frames, block).samples
        if algo in ("DMVE", "EBMA"):
            kappas = [k for k in self._kappas(block.frame) if k in (-1, 1)]
            if not kappas:
                raise NoReferenceError("no adjacent reference frame")
            refs = self.references(block.frame, cfg.accuracy, kappas)
            bi = 1 in kappas
            if algo == "DMVE":
                out = dmve_conceal(self.frames, refs, block, d_max=cfg.d_max, valid=self.valid,
                                   border=cfg.decision_border, bidirectional=bi)
            else:
                out = ebma_conceal(self.frames, refs, block, d_max=cfg.d_max, valid=self.valid,
                                   ring=cfg.ebma_ring, bidirectional=bi)
            record.path = algo.lower()
            record.vectors = [(out.kappa, out.dx, out.dy, out.error)]
            return out.samples
        if algo == "MCFSE":
            return self._mcfse(block, record)
        record.path = "fse-fixed"
        return self._fse(self._fixed_volume(block), cfg.resolved_iterations, cfg.resolved_gamma)

    def conceal(self, block):
        """Conceal one block in place; returns ``(ConcealedBlock, BlockRecord)``."""
        record = BlockRecord(block.frame, block.x0, block.y0, block.Lx, block.Ly, path="")
        start = time.perf_counter()
        try:
            samples = self._dispatch(block, record)
        except (EmptyAreaError, NoReferenceError, fse_core.DegenerateWeightsError) as exc:
            record.fallbacks.append(f"{record.path or self.cfg.algorithm.lower()}:{type(exc).__name__}")
            try:
                samples = tr_conceal(self.frames, block).samples
                record.path = "tr-fallback"
            except NoReferenceError:
                ys = slice(block.y0, block.y0 + block.Ly)
                xs = slice(block.x0, block.x0 + block.Lx)
                samples = self.frames[block.frame, ys, xs].copy()
                record.path = "fill"
                log.warning("block %s left at fill value: no concealment possible", block)
        ys = slice(block.y0, block.y0 + block.Ly)
        xs = slice(block.x0, block.x0 + block.Lx)
        lost = ~self.valid[block.frame, ys, xs] & ~self.concealed[block.frame, ys, xs]
        self.frames[block.frame, ys, xs][lost] = samples[lost]
        self.concealed[block.frame, ys, xs] |= lost
        record.seconds = time.perf_counter() - start
        return ConcealedBlock(samples, record.path), record

    def run(self):
        records = []
        for t in range(self.frames.shape[0]):
            for block in enumerate_blocks(self.valid, t, self.cfg.block_size):
                records.append(self.conceal(block)[1])
            self.invalidate(t)
        return records


def _check(seq, mask):
    valid = mask.valid if isinstance(mask, LossMask) else np.asarray(mask, bool)
    if valid.shape != seq.luma.shape:
        raise SequenceError(f"mask shape {valid.shape} does not match sequence {seq.luma.shape}")
    return valid


def conceal_block(seq, mask, block, cfg=None, concealed=None):
    """Conceal a single block of ``seq``; other lost samples stay untouched.

    ``concealed`` optionally marks lost samples that already hold concealed
    values (weighted by ``delta`` and usable as support).
    """
    cfg = cfg or ConcealConfig()
    valid = _check(seq, mask)
    worker = _PlaneConcealer(seq.luma, valid, cfg)
    if concealed is not None:
        worker.concealed = np.asarray(concealed, bool) & ~valid
    return worker.conceal(block)


def conceal_sequence(seq, mask, cfg=None):
    """Conceal every lost block, frame by frame in temporal order.

    Blocks within a frame go in raster order and each concealed block
    immediately supports the following ones, in this and later frames.
    Returns ``(VideoSequence, RunReport)``.
    """
    cfg = cfg or ConcealConfig()
    valid = _check(seq, mask)
    worker = _PlaneConcealer(seq.luma, valid, cfg)
    report = RunReport(cfg, seq.frame_count, worker.run())
    luma = worker.frames.astype(np.uint8)
    chroma = seq.chroma
    if chroma is not None and cfg.chroma:
        cvalid = chroma_mask(valid)
        ccfg = cfg.halved()
        planes = []
        for plane in chroma:
            cw = _PlaneConcealer(plane, cvalid, ccfg)
            report.chroma_records.extend(cw.run())
            planes.append(cw.frames.astype(np.uint8))
        chroma = tuple(planes)
    return VideoSequence(luma, chroma), report
