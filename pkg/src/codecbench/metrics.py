"""Full-reference quality metrics and SI/TI content descriptors.

Conventions fixed for the whole harness:

* PSNR is computed per frame and the dB values are averaged; zero-MSE frames
  score 100 dB.
* SSIM uses 8x8 windows at stride 4 with uniform weights and population
  (1/N) moments, luma only. MS-SSIM reuses those windows at every scale,
  downsamples with a 2x2 box average, and clamps negative contrast-structure
  terms to zero before exponentiation.
"""

from __future__ import annotations

import re
import shlex
import subprocess
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, MetricParseError, MetricToolError
from .media import VideoSequence

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 8
SSIM_STRIDE = 4
MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


@dataclass
class MetricScore:
    metric_id: str
    value: float
    per_frame: list | None = None
    tool_version: str | None = None
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SITI:
    si: float
    ti: float


def _check_pair(ref: VideoSequence, dist: VideoSequence):
    if (ref.width, ref.height, ref.bit_depth, ref.frame_count) != \
            (dist.width, dist.height, dist.bit_depth, dist.frame_count):
        raise DataError(
            f"geometry mismatch: {ref.width}x{ref.height} {ref.bit_depth}-bit x{ref.frame_count} vs "
            f"{dist.width}x{dist.height} {dist.bit_depth}-bit x{dist.frame_count}")


def _mse(a, b):
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(d * d))


def _psnr_from_mse(mse, max_value):
    if mse == 0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(max_value ** 2 / mse))


def psnr(ref: VideoSequence, dist: VideoSequence, mode="luma") -> MetricScore:
    """Mean of per-frame PSNR. ``mode="yuv611"`` weights plane MSEs 6:1:1."""
    _check_pair(ref, dist)
    if mode not in ("luma", "yuv611"):
        raise ValueError(f"unknown PSNR mode {mode!r}")
    peak = (1 << ref.bit_depth) - 1
    per_frame = []
    for fr, fd in zip(ref.frames, dist.frames):
        if mode == "luma":
            mse = _mse(fr.plane_y, fd.plane_y)
        else:
            mse = (6 * _mse(fr.plane_y, fd.plane_y) + _mse(fr.plane_u, fd.plane_u)
                   + _mse(fr.plane_v, fd.plane_v)) / 8.0
        per_frame.append(_psnr_from_mse(mse, peak))
    metric_id = "psnr" if mode == "luma" else "psnr_yuv611"
    return MetricScore(metric_id, float(np.mean(per_frame)), per_frame)


def _window_sums(a, win=SSIM_WINDOW, stride=SSIM_STRIDE):
    """Sums over every win x win window at the given stride (win = 2*stride)."""
    h, w = a.shape
    ny = (h - win) // stride + 1
    nx = (w - win) // stride + 1
    hh, ww = (ny + 1) * stride, (nx + 1) * stride
    blk = a[:hh, :ww].reshape(ny + 1, stride, nx + 1, stride).sum(axis=(1, 3))
    return blk[:-1, :-1] + blk[1:, :-1] + blk[:-1, 1:] + blk[1:, 1:]


def ssim_terms(x, y, max_value):
    """Per-window luminance and contrast-structure maps for two planes."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] < SSIM_WINDOW or x.shape[1] < SSIM_WINDOW:
        raise DataError(f"plane {x.shape[1]}x{x.shape[0]} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    n = float(SSIM_WINDOW * SSIM_WINDOW)
    c1 = (0.01 * max_value) ** 2
    c2 = (0.03 * max_value) ** 2
    mx = _window_sums(x) / n
    my = _window_sums(y) / n
    vx = _window_sums(x * x) / n - mx * mx
    vy = _window_sums(y * y) / n - my * my
    cov = _window_sums(x * y) / n - mx * my
    lum = (2 * mx * my + c1) / (mx * mx + my * my + c1)
    cs = (2 * cov + c2) / (vx + vy + c2)
    return lum, cs


def _ssim_plane(x, y, max_value):
    if np.array_equal(x, y):
        return 1.0
    lum, cs = ssim_terms(x, y, max_value)
    return float(np.mean(lum * cs))


def ssim(ref: VideoSequence, dist: VideoSequence) -> MetricScore:
    _check_pair(ref, dist)
    peak = (1 << ref.bit_depth) - 1
    per_frame = [_ssim_plane(fr.plane_y, fd.plane_y, peak) for fr, fd in zip(ref.frames, dist.frames)]
    return MetricScore("ssim", float(np.mean(per_frame)), per_frame)


def _downsample2(a):
    h, w = a.shape
    a = a[:h - h % 2, :w - w % 2]
    return 0.25 * (a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2])


def ms_ssim_plane(x, y, max_value, weights=MS_SSIM_WEIGHTS, luminance_weight=None):
    """MS-SSIM of two planes.

    The result is ``l_M ** lw * prod_j cs_j ** w_j`` with pooled (window-mean)
    terms; ``lw`` defaults to the coarsest-scale weight.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    scales = len(weights)
    min_side = SSIM_WINDOW * 2 ** (scales - 1)
    if min(x.shape) < min_side:
        raise DataError(f"{scales}-scale MS-SSIM needs planes of at least {min_side} pixels per side, "
                        f"got {x.shape[1]}x{x.shape[0]}")
    lw = weights[-1] if luminance_weight is None else luminance_weight
    if np.array_equal(x, y):
        return 1.0
    value = 1.0
    for j, w in enumerate(weights):
        lum, cs = ssim_terms(x, y, max_value)
        value *= max(float(np.mean(cs)), 0.0) ** w
        if j == scales - 1:
            value *= max(float(np.mean(lum)), 0.0) ** lw
        else:
            x, y = _downsample2(x), _downsample2(y)
    return value


def ms_ssim(ref: VideoSequence, dist: VideoSequence, weights=MS_SSIM_WEIGHTS) -> MetricScore:
    _check_pair(ref, dist)
    peak = (1 << ref.bit_depth) - 1
    per_frame = [ms_ssim_plane(fr.plane_y, fd.plane_y, peak, weights)
                 for fr, fd in zip(ref.frames, dist.frames)]
    return MetricScore("msssim", float(np.mean(per_frame)), per_frame)


def sobel_magnitude(plane):
    """Sobel gradient magnitude on interior pixels (one-pixel border dropped)."""
    p = np.asarray(plane, dtype=np.float64)
    gx = (p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:]) - (p[:-2, :-2] + 2 * p[1:-1, :-2] + p[2:, :-2])
    gy = (p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:]) - (p[:-2, :-2] + 2 * p[:-2, 1:-1] + p[:-2, 2:])
    return np.hypot(gx, gy)


def si_ti(seq: VideoSequence) -> SITI:
    """Spatial / temporal information, max-pooled over time (population stdev)."""
    luma = seq.luma_stack()
    si = max(float(np.std(sobel_magnitude(f))) for f in luma)
    ti = 0.0
    if len(luma) > 1:
        ti = max(float(np.std(b - a)) for a, b in zip(luma[:-1], luma[1:]))
    return SITI(si, ti)


DEFAULT_SCORE_PATTERN = r"score\s*[:=]\s*([-+]?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)"
DEFAULT_VERSION_PATTERN = r"version\s*[:=]?\s*v?([\w.\-]+)"


def external_metric(tool, ref_path, dist_path, geometry, metric_id="vmaf",
                    pattern=DEFAULT_SCORE_PATTERN, version_pattern=DEFAULT_VERSION_PATTERN,
                    timeout=None) -> MetricScore:
    """Run an external scorer and parse its pooled score from stdout/stderr.

    ``tool`` is a command template; ``{ref}``, ``{dist}``, ``{width}``,
    ``{height}``, ``{bitdepth}``, ``{fps}`` and ``{frames}`` are filled from
    the arguments. ``geometry`` is a mapping with those keys (minus the paths).
    """
    fields = dict(geometry)
    fields.update(ref=str(ref_path), dist=str(dist_path))
    try:
        argv = [tok.format(**fields) for tok in shlex.split(tool)]
    except KeyError as exc:
        raise MetricToolError(f"metric template uses unknown placeholder {exc}") from None
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise MetricToolError(f"{metric_id} tool failed to run: {exc}") from None
    output = (proc.stdout or "") + (proc.stderr or "")
    if proc.returncode != 0:
        raise MetricToolError(f"{metric_id} tool exited with status {proc.returncode}", output)
    m = re.search(pattern, output, flags=re.IGNORECASE)
    if not m:
        raise MetricParseError(f"no {metric_id} score matching {pattern!r} in tool output")
    try:
        value = float(m.group(1))
    except (ValueError, IndexError):
        raise MetricParseError(f"unparseable {metric_id} score {m.group(0)!r}") from None
    version = None
    if version_pattern:
        vm = re.search(version_pattern, output, flags=re.IGNORECASE)
        version = vm.group(1) if vm else None
    return MetricScore(metric_id, value, None, version)


NATIVE_METRICS = {
    "psnr": psnr,
    "ssim": ssim,
    "msssim": ms_ssim,
}


def score_native(metric_id, ref, dist):
    try:
        fn = NATIVE_METRICS[metric_id]
    except KeyError:
        raise DataError(f"no native implementation of metric {metric_id!r}") from None
    return fn(ref, dist)
