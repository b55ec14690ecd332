"""Textured test clips under a known global translation."""

import numpy as np

from .sequence_io import VideoSequence


def texture(xs, ys, seed=0, components=24, max_freq=0.12, amplitude=100.0):
    """Sum of random 2D cosines sampled at arbitrary (possibly fractional) positions.

    Amplitudes fall off with frequency and sum to ``amplitude``, so values
    stay within ``128 +- amplitude``.
    """
    rng = np.random.default_rng(seed)
    freq = rng.uniform(0.01, max_freq, size=components)
    angle = rng.uniform(0.0, 2 * np.pi, size=components)
    phase = rng.uniform(0.0, 2 * np.pi, size=components)
    amp = 1.0 / (1.0 + 10.0 * freq)
    amp *= amplitude / amp.sum()
    fx = freq * np.cos(angle)
    fy = freq * np.sin(angle)
    out = np.full(np.broadcast(xs, ys).shape, 128.0)
    for a, u, v, ph in zip(amp, fx, fy, phase):
        out += a * np.cos(2 * np.pi * (u * xs + v * ys) + ph)
    return out


def translating_sequence(width, height, frames, motion=(0.0, 0.0), seed=0, noise=0.0, components=24,
                         max_freq=0.12, chroma=False):
    """Clip where frame ``t`` shows the texture shifted by ``t * motion`` (x, y) pels.

    Content moves by exactly ``motion`` per frame, at sub-pel precision when
    fractional. ``noise`` adds seeded Gaussian noise of that standard
    deviation before rounding to 8 bits.
    """
    vx, vy = motion
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    rng = np.random.default_rng(seed + 1)
    luma = np.empty((frames, height, width), np.uint8)
    for t in range(frames):
        plane = texture(xs - vx * t, ys - vy * t, seed, components, max_freq)
        if noise > 0:
            plane = plane + rng.normal(0.0, noise, plane.shape)
        luma[t] = np.clip(np.rint(plane), 0, 255)
    planes = None
    if chroma:
        cy, cx = (height + 1) // 2, (width + 1) // 2
        planes = (np.full((frames, cy, cx), 128, np.uint8), np.full((frames, cy, cx), 128, np.uint8))
    return VideoSequence(luma, planes)
