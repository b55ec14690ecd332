"""Region-restricted PSNR and the text report format.

Report layout (UTF-8, one item per line)::

    fse-report v1
    [run]            key=value: configuration and counts
    [blocks]         CSV: one row per concealed block
    [frames]         CSV: per-frame block counts and discarded-vector percentage
    [psnr]           key=value: pooled PSNR and evaluated sample count
    [psnr_frames]    CSV: per-frame PSNR
    [comparison]     CSV: one row per algorithm (pipeline runs only)

Key-value sections are ``[run]`` and ``[psnr]``; all others are CSV with a
header row. Absent sections are omitted. Floats are written with ``repr`` so
that parsing them back gives the same value.
"""

import csv
import io
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .error_model import LossMask

PSNR_CAP = 99.0
HEADER = "fse-report v1"
KV_SECTIONS = ("run", "psnr")
SECTION_ORDER = ("run", "blocks", "frames", "psnr", "psnr_frames", "comparison")
BLOCK_FIELDS = ["frame", "x0", "y0", "lx", "ly", "path", "reliable", "vectors", "fallbacks"]


class ReportError(ValueError):
    pass


@dataclass
class RegionPSNR:
    aggregate: float
    samples: int
    frames: list = field(default_factory=list)  # frame indices with a non-empty region
    per_frame: list = field(default_factory=list)  # dB, aligned with frames
    counts: list = field(default_factory=list)  # evaluated samples, aligned with frames
    mse: float = 0.0


def _luma(seq):
    return np.asarray(getattr(seq, "luma", seq), dtype=np.float64)


def _db(mse):
    if mse == 0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10.0 * np.log10(255.0**2 / mse)))


def psnr_region(reference, test, eval_mask=None):
    """Luma PSNR pooled over a region of samples.

    ``eval_mask`` is either a :class:`LossMask`, whose lost samples form the
    region, or a boolean ``(T, Y, X)`` array that is True where samples are
    evaluated. ``None`` evaluates every sample.
    """
    ref = _luma(reference)
    out = _luma(test)
    if ref.shape != out.shape:
        raise ValueError(f"dimension mismatch: {ref.shape} vs {out.shape}")
    if eval_mask is None:
        region = np.ones(ref.shape, bool)
    elif isinstance(eval_mask, LossMask):
        region = ~eval_mask.valid
    else:
        region = np.asarray(eval_mask, bool)
    if region.shape != ref.shape:
        raise ValueError(f"region shape {region.shape} does not match video {ref.shape}")
    total = int(region.sum())
    if total == 0:
        raise ValueError("evaluation region is empty")
    sq = (ref - out) ** 2
    result = RegionPSNR(aggregate=0.0, samples=total)
    sse = 0.0
    for t in range(ref.shape[0]):
        n = int(region[t].sum())
        if n == 0:
            continue
        e = float(sq[t][region[t]].sum())
        sse += e
        result.frames.append(t)
        result.per_frame.append(_db(e / n))
        result.counts.append(n)
    result.mse = sse / total
    result.aggregate = _db(result.mse)
    return result


def full_frame_psnr(reference, test):
    """Per-frame luma PSNR over whole frames."""
    return psnr_region(reference, test, None).per_frame


def _fmt(v):
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    if isinstance(v, tuple):
        return "x".join(str(x) for x in v)
    return str(v)


def _vectors(vectors):
    return ";".join(f"{k}:{dx}:{dy}:{float(err)!r}" for k, dx, dy, err in vectors)


def run_sections(run, include_timing=False):
    """Report sections describing a concealment run."""
    sections = {}
    meta = {k: _fmt(v) for k, v in asdict(run.config).items()}
    meta["resolved_iterations"] = _fmt(run.config.resolved_iterations)
    meta["resolved_gamma"] = _fmt(float(run.config.resolved_gamma))
    meta["frames"] = _fmt(run.frame_count)
    meta["blocks"] = _fmt(len(run.records))
    for path, count in sorted(run.path_counts().items()):
        meta[f"path.{path}"] = _fmt(count)
    sections["run"] = meta
    rows = []
    for r in run.records:
        row = {
            "frame": _fmt(r.frame), "x0": _fmt(r.x0), "y0": _fmt(r.y0), "lx": _fmt(r.Lx), "ly": _fmt(r.Ly),
            "path": r.path, "reliable": _fmt(r.reliable), "vectors": _vectors(r.vectors),
            "fallbacks": ";".join(r.fallbacks),
        }
        if include_timing:
            row["seconds"] = _fmt(float(r.seconds))
        rows.append(row)
    sections["blocks"] = rows
    sections["frames"] = [
        {"frame": _fmt(t), "blocks": _fmt(s["blocks"]), "estimated": _fmt(s["estimated"]),
         "discarded": _fmt(s["discarded"]), "discarded_pct": _fmt(float(s["discarded_pct"]))}
        for t, s in run.frame_stats().items()
    ]
    return sections


def psnr_sections(psnr):
    return {
        "psnr": {"aggregate": _fmt(float(psnr.aggregate)), "samples": _fmt(psnr.samples),
                 "mse": _fmt(float(psnr.mse))},
        "psnr_frames": [
            {"frame": _fmt(t), "psnr": _fmt(float(db)), "samples": _fmt(n)}
            for t, db, n in zip(psnr.frames, psnr.per_frame, psnr.counts)
        ],
    }


def comparison_section(entries):
    """``entries``: iterable of ``(label, RegionPSNR or None)``."""
    rows = []
    for label, psnr in entries:
        rows.append({
            "algorithm": label,
            "psnr": "" if psnr is None else _fmt(float(psnr.aggregate)),
            "samples": "0" if psnr is None else _fmt(psnr.samples),
        })
    return {"comparison": rows}


def format_report(sections):
    """Serialize a ``{section: dict | list[dict]}`` mapping."""
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    names = [s for s in SECTION_ORDER if s in sections] + [s for s in sections if s not in SECTION_ORDER]
    for name in names:
        body = sections[name]
        buf.write(f"[{name}]\n")
        if name in KV_SECTIONS:
            for k, v in body.items():
                buf.write(f"{k}={v}\n")
            continue
        if not body:
            buf.write("\n")
            continue
        writer = csv.DictWriter(buf, fieldnames=list(body[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(body)
    return buf.getvalue()


def emit_report(run, psnr, path, include_timing=False, comparison=None):
    """Write a report for ``run`` (may be None) and ``psnr`` (None omits the PSNR sections)."""
    sections = {}
    if run is not None:
        sections.update(run_sections(run, include_timing))
    if psnr is not None:
        sections.update(psnr_sections(psnr))
    if comparison is not None:
        sections.update(comparison_section(comparison))
    Path(path).write_text(format_report(sections), encoding="utf-8")
    return sections


def parse_report(source):
    """Parse report text (or a path to it) back into its section mapping."""
    text = source if isinstance(source, str) and "\n" in source else Path(source).read_text(encoding="utf-8")
    lines = text.split("\n")
    if not lines or lines[0] != HEADER:
        raise ReportError(f"missing '{HEADER}' header")
    chunks = {}
    name = None
    for line in lines[1:]:
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1]
            chunks[name] = []
        elif name is None:
            if line:
                raise ReportError(f"content outside a section: {line!r}")
        else:
            chunks[name].append(line)
    sections = {}
    for name, body in chunks.items():
        body = [b for b in body if b]
        if name in KV_SECTIONS:
            kv = {}
            for line in body:
                key, sep, value = line.partition("=")
                if not sep:
                    raise ReportError(f"[{name}]: expected key=value, got {line!r}")
                kv[key] = value
            sections[name] = kv
        else:
            sections[name] = list(csv.DictReader(body)) if body else []
    return sections
