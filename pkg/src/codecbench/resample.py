"""Separable Lanczos-3 resizing of 4:2:0 frames.

Output pixel ``i`` samples the source at ``(i + 0.5) * src/dst - 0.5``
(pixel-centre alignment). Taps reach 3 source pixels either side, source
indices are clamped at the borders and each output's weights are
renormalised to sum to one. Passes run horizontally then vertically in
float64; the result is rounded half away from zero and clamped.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._core import get_backend
from .media import VideoFrame, VideoSequence

LANCZOS_A = 3


def lanczos3_kernel(x):
    """sinc(x) * sinc(x/3) on |x| < 3, zero outside; exact zeros at integers."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("kernel argument must be finite")
    if x == 0.0:
        return 1.0
    ax = abs(x)
    if ax >= LANCZOS_A or ax == int(ax):
        return 0.0
    px = math.pi * x
    return LANCZOS_A * math.sin(px) * math.sin(px / LANCZOS_A) / (px * px)


def _kernel_vec(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    inside = np.abs(x) < LANCZOS_A
    nonint = inside & (x != np.round(x))
    px = np.pi * x[nonint]
    out[nonint] = LANCZOS_A * np.sin(px) * np.sin(px / LANCZOS_A) / (px * px)
    out[x == 0] = 1.0
    return out


@dataclass(frozen=True)
class AxisTaps:
    """Weight/offset table for one axis: ``idx`` and ``weights`` are (n_out, taps)."""

    n_src: int
    n_dst: int
    idx: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=64)
def axis_taps(n_src, n_dst) -> AxisTaps:
    scale = n_src / n_dst
    centres = (np.arange(n_dst) + 0.5) * scale - 0.5
    first = np.floor(centres).astype(np.int64) - (LANCZOS_A - 1)
    offsets = np.arange(2 * LANCZOS_A)
    pos = first[:, None] + offsets[None, :]
    w = _kernel_vec(centres[:, None] - pos)
    w = w / w.sum(axis=1, keepdims=True)
    idx = np.clip(pos, 0, n_src - 1)
    idx.setflags(write=False)
    w.setflags(write=False)
    return AxisTaps(n_src, n_dst, idx, w)


@dataclass(frozen=True)
class ResamplePlan:
    source_dims: tuple
    target_dims: tuple
    horizontal: AxisTaps
    vertical: AxisTaps

    @classmethod
    def build(cls, source_dims, target_dims):
        (sw, sh), (tw, th) = source_dims, target_dims
        return cls(tuple(source_dims), tuple(target_dims), axis_taps(sw, tw), axis_taps(sh, th))

    @property
    def kernel_taps(self):
        return (self.horizontal, self.vertical)


def resample_plane_float(plane, target_dims, backend=None):
    """Unrounded separable resample of a 2-D array to (W, H)."""
    k = get_backend(backend)
    src = np.asarray(plane, dtype=np.float64)
    tw, th = target_dims
    h = axis_taps(src.shape[1], tw)
    v = axis_taps(src.shape[0], th)
    tmp = k.resample_rows(src, h.idx, h.weights)
    out = k.resample_rows(np.ascontiguousarray(tmp.T), v.idx, v.weights)
    return out.T


def round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def resample_plane(plane, target_dims, max_value, backend=None):
    plane = np.asarray(plane)
    if (plane.shape[1], plane.shape[0]) == tuple(target_dims):
        return plane.copy()
    out = round_half_away(resample_plane_float(plane, target_dims, backend))
    return np.clip(out, 0, max_value)


def resize_frame(frame: VideoFrame, target, backend=None) -> VideoFrame:
    tw, th = target
    if tw <= 0 or th <= 0 or tw % 2 or th % 2:
        raise ValueError(f"target dims must be even and positive, got {tw}x{th}")
    if (frame.width, frame.height) == (tw, th):
        return frame
    m = frame.max_value
    y = resample_plane(frame.plane_y, (tw, th), m, backend)
    u = resample_plane(frame.plane_u, (tw // 2, th // 2), m, backend)
    v = resample_plane(frame.plane_v, (tw // 2, th // 2), m, backend)
    return VideoFrame(tw, th, frame.bit_depth, y, u, v)


def _strip_dims(name):
    return re.sub(r"_\d+x\d+$", "", name)


def resize_sequence(seq: VideoSequence, target, backend=None) -> VideoSequence:
    target = tuple(target)
    if seq.dims == target:
        return seq
    frames = tuple(resize_frame(f, target, backend) for f in seq.frames)
    return VideoSequence(frames, seq.fps, f"{_strip_dims(seq.name)}_{target[0]}x{target[1]}")
