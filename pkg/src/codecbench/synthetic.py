"""Deterministic synthetic test content.

Three content kinds loosely mirror the categories a codec test set tries to
cover: local motion on a static background, dynamic texture, and global
camera pan. All output is a pure function of (kind, geometry, seed).
"""

from __future__ import annotations

import numpy as np

from .media import VideoFrame, VideoSequence

KINDS = ("local_motion", "dynamic_texture", "camera_pan")


def _texture(rng, h, w, scale):
    # smooth random field: sum of a few random sinusoids
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    out = np.zeros((h, w))
    for _ in range(6):
        fx, fy = rng.uniform(0.5, 4.0, size=2) * 2 * np.pi / scale
        ph = rng.uniform(0, 2 * np.pi)
        out += rng.uniform(0.3, 1.0) * np.sin(fx * xx + fy * yy + ph)
    return out / 6


def make_synthetic_sequence(width=320, height=180, frames=60, kind="local_motion", seed=0,
                            bit_depth=8, fps=60, name=None) -> VideoSequence:
    if kind not in KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; choose from {KINDS}")
    rng = np.random.default_rng([seed, KINDS.index(kind)])
    maxval = (1 << bit_depth) - 1
    scale = maxval / 255.0
    pad = 64
    H, W = height + 2 * pad, width + 2 * pad
    yy, xx = np.mgrid[0:H, 0:W].astype(np.float64)
    base = 90 + 60 * (xx / W) + 30 * (yy / H)
    base += 40 * _texture(rng, H, W, scale=min(width, height) / 3)
    fine = rng.normal(0, 4, size=(H, W))
    cu = 128 + 20 * _texture(rng, H // 2, W // 2, scale=min(width, height) / 4)
    cv = 128 - 20 * _texture(rng, H // 2, W // 2, scale=min(width, height) / 5)
    out = []
    for t in range(frames):
        if kind == "camera_pan":
            dx, dy = int(round(1.5 * t)) % pad, int(round(0.5 * t)) % pad
        else:
            dx = dy = pad // 2
        y = base[dy:dy + height, dx:dx + width] + fine[dy:dy + height, dx:dx + width]
        u = cu[dy // 2:dy // 2 + height // 2, dx // 2:dx // 2 + width // 2].copy()
        v = cv[dy // 2:dy // 2 + height // 2, dx // 2:dx // 2 + width // 2].copy()
        y = y.copy()
        if kind == "local_motion":
            # a bright textured square walking across the frame
            s = max(8, min(width, height) // 4)
            x0 = int((t * 3) % max(1, width - s))
            y0 = int(height / 2 - s / 2 + (height / 4) * np.sin(t / 9))
            patch = 200 + 30 * np.sin(np.arange(s)[None, :] / 2.0 + t / 4) * np.cos(np.arange(s)[:, None] / 3.0)
            y[y0:y0 + s, x0:x0 + s] = patch
        elif kind == "dynamic_texture":
            ripple = 25 * np.sin(xx[:height, :width] / 5.0 + t / 3.0) * np.cos(yy[:height, :width] / 7.0 - t / 5.0)
            y += ripple + rng.normal(0, 2, size=(height, width))
        # temporal sensor noise on every kind
        y += rng.normal(0, 2, size=(height, width))
        y = np.clip(np.round(y * scale), 0, maxval)
        u = np.clip(np.round(u * scale), 0, maxval)
        v = np.clip(np.round(v * scale), 0, maxval)
        out.append(VideoFrame(width, height, bit_depth, y, u, v))
    return VideoSequence(tuple(out), fps, name or f"synth_{kind}_{seed}")


def synthetic_corpus(width=320, height=180, frames=60, seed=0, bit_depth=8, fps=60):
    """One sequence per content kind."""
    return [make_synthetic_sequence(width, height, frames, kind, seed, bit_depth, fps)
            for kind in KINDS]


def synthetic_panel(points, metric="psnr", n_subjects=20, seed=0, bias_sd=6.0, noise_sd=3.0,
                    session="S1"):
    """DSCQS trials for rate points, with DMOS a falling logistic of ``metric``.

    Each subject carries a constant bias N(0, bias_sd) on top of per-trial
    noise N(0, noise_sd); reference scores sit near 90. Returns ``TrialScore``
    objects in (subject, point) order.
    """
    from .subjective import TrialScore

    pts = [p for p in points if metric in p.scores]
    if not pts:
        raise ValueError(f"no points carry {metric!r}")
    rng = np.random.default_rng(seed)
    q = np.array([p.quality(metric) for p in pts])
    mid = float(np.median(q))
    spread = float(np.std(q)) or 1.0
    true = 70.0 / (1.0 + np.exp((q - mid) / (0.5 * spread)))
    bias = rng.normal(0.0, bias_sd, n_subjects)
    out = []
    for s in range(n_subjects):
        ref = np.clip(90.0 + rng.normal(0.0, 2.0, len(pts)), 0, 100)
        dist = np.clip(ref - true - bias[s] + rng.normal(0.0, noise_sd, len(pts)), 0, 100)
        for p, r, d in zip(pts, ref, dist):
            out.append(TrialScore(f"subj{s + 1:02d}", p.sequence, p.codec, p.rate_index or "", float(r),
                                  float(d), session))
    return out
