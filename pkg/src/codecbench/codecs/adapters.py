"""Encoder adapters, fixed-QP encodes, target-bitrate QP search and timing ratios."""

from __future__ import annotations

import logging
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import (EncoderProcessError, ManifestError, ReconstructionMismatchError,
                      TargetUnreachableError, VideoFormatError)
from ..media import VideoFrame, VideoSequence, read_raw_video, write_raw_video
from . import toy

log = logging.getLogger(__name__)

TOY_QP_RANGE = (0, 50)
PLACEHOLDERS = ("input", "recon", "bitstream", "qp", "width", "height", "fps", "bitdepth",
                "frames", "extra", "fixed")


@dataclass(frozen=True)
class EncoderAdapter:
    """How to drive one codec.

    ``kind="toy"`` runs the built-in codec in-process; ``kind="external"``
    formats ``encode_template`` and runs it as a child process. A
    ``fractional_template`` such as ``"--QPIncrementFrame={frame}"`` lets the
    rate search land between two integer QPs; it is substituted for
    ``{extra}``. ``decode_template`` is for encoders that do not write a
    reconstruction themselves.
    """

    codec_id: str
    encode_template: str | None = None
    qp_range: tuple = (0, 51)
    fixed_args: str = ""
    kind: str = "external"
    decode_template: str | None = None
    fractional_template: str | None = None
    recon_bit_depth: int | None = None
    timeout: float | None = None

    def __post_init__(self):
        qmin, qmax = self.qp_range
        if int(qmin) != qmin or int(qmax) != qmax or qmin > qmax:
            raise ManifestError(f"codecs.{self.codec_id}.qp_range", f"need integers qp_min <= qp_max, got {self.qp_range}")
        object.__setattr__(self, "qp_range", (int(qmin), int(qmax)))
        if self.kind not in ("external", "toy"):
            raise ManifestError(f"codecs.{self.codec_id}.kind", f"unknown adapter kind {self.kind!r}")
        if self.kind == "external":
            tmpl = self.encode_template or ""
            if "{input}" not in tmpl or "{qp}" not in tmpl:
                raise ManifestError(f"codecs.{self.codec_id}.encode_template",
                                    "must contain at least {input} and {qp}")
        else:
            lo, hi = self.qp_range
            if lo < toy.QP_MIN or hi > toy.QP_MAX:
                raise ManifestError(f"codecs.{self.codec_id}.qp_range", "toy codec QPs lie in [0, 63]")

    @classmethod
    def toy(cls, codec_id="toy", qp_range=TOY_QP_RANGE):
        return cls(codec_id, None, tuple(qp_range), kind="toy")

    @property
    def supports_fractional(self):
        return self.kind == "toy" or bool(self.fractional_template)


@dataclass
class EncodeResult:
    qp: int
    bitstream_bytes: int
    bitrate_kbps: float
    recon: VideoSequence
    wall_seconds: float
    increment_frame: int | None = None
    command: list = field(default_factory=list)

    @property
    def effective_qp(self):
        """QP with the fractional increment folded in, for reporting."""
        if self.increment_frame is None:
            return float(self.qp)
        n = self.recon.frame_count
        return self.qp + (n - self.increment_frame) / n


@dataclass
class RateTargetOutcome:
    target_kbps: float
    achieved: EncodeResult
    relative_error: float
    iterations: int
    status: str = "success"
    bracket: tuple | None = None

    @property
    def ok(self):
        return self.status == "success"


def bitrate_kbps(nbytes, seq: VideoSequence):
    return 8.0 * nbytes / seq.duration_seconds / 1000.0


def _fps_text(seq):
    f = seq.fps
    return str(f.numerator) if f.denominator == 1 else f"{float(f):.6g}"


def format_command(template, fields, extra="", fixed=""):
    """Split a template with shlex and fill placeholders token by token.

    A token that is exactly ``{extra}`` or ``{fixed}`` expands to zero or
    more argv entries.
    """
    argv = []
    for tok in shlex.split(template):
        if tok == "{extra}":
            argv.extend(shlex.split(extra))
        elif tok == "{fixed}":
            argv.extend(shlex.split(fixed))
        else:
            try:
                argv.append(tok.format(extra=extra, fixed=fixed, **fields))
            except (KeyError, IndexError) as exc:
                raise ManifestError("encode_template", f"unknown placeholder {exc}") from None
    return argv


def _run(argv, timeout, what):
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise EncoderProcessError(f"{what} could not run: {exc}") from None
    output = (proc.stdout or "") + (proc.stderr or "")
    if proc.returncode != 0:
        raise EncoderProcessError(f"{what} exited with status {proc.returncode}: {shlex.join(argv)}", output)
    return output


def _convert_depth(recon: VideoSequence, depth):
    if recon.bit_depth == depth:
        return recon
    shift = recon.bit_depth - depth
    frames = []
    for f in recon.frames:
        if shift > 0:
            planes = [(p.astype(np.int64) + (1 << (shift - 1))) >> shift for p in f.planes]
        else:
            planes = [p.astype(np.int64) << (-shift) for p in f.planes]
        maxval = (1 << depth) - 1
        frames.append(VideoFrame(f.width, f.height, depth, *[np.clip(p, 0, maxval) for p in planes]))
    return VideoSequence(tuple(frames), recon.fps, recon.name)


def _encode_external(adapter, seq, qp, increment_frame, workdir):
    work = Path(workdir)
    if seq.path and Path(seq.path).exists():
        src = Path(seq.path)
    else:
        src = write_raw_video(seq, work / f"{seq.name}_input.yuv")
    tag = f"{adapter.codec_id}_{seq.name}_qp{qp}" + (f"_inc{increment_frame}" if increment_frame is not None else "")
    bitstream = work / f"{tag}.bin"
    recon_path = work / f"{tag}_recon.yuv"
    extra = ""
    if increment_frame is not None:
        if not adapter.fractional_template:
            raise ValueError(f"adapter {adapter.codec_id} has no fractional QP mechanism")
        extra = adapter.fractional_template.format(frame=increment_frame)
    fields = dict(input=str(src), recon=str(recon_path), bitstream=str(bitstream), qp=qp,
                  width=seq.width, height=seq.height, fps=_fps_text(seq), bitdepth=seq.bit_depth,
                  frames=seq.frame_count)
    argv = format_command(adapter.encode_template, fields, extra, adapter.fixed_args)
    if adapter.fixed_args and "{fixed}" not in adapter.encode_template:
        argv.extend(shlex.split(adapter.fixed_args))
    t0 = time.perf_counter()
    _run(argv, adapter.timeout, f"{adapter.codec_id} encoder")
    wall = time.perf_counter() - t0
    if not bitstream.exists():
        raise EncoderProcessError(f"{adapter.codec_id} encoder wrote no bitstream at {bitstream}")
    if adapter.decode_template:
        _run(format_command(adapter.decode_template, fields), adapter.timeout, f"{adapter.codec_id} decoder")
    if not recon_path.exists():
        raise EncoderProcessError(f"{adapter.codec_id} produced no reconstruction at {recon_path}")
    depth = adapter.recon_bit_depth or seq.bit_depth
    try:
        recon = read_raw_video(recon_path, seq.width, seq.height, depth, seq.fps, name=tag)
    except VideoFormatError as exc:
        raise ReconstructionMismatchError(f"{adapter.codec_id} reconstruction: {exc}") from None
    recon = VideoSequence(recon.frames, recon.fps, tag)
    recon = _convert_depth(recon, seq.bit_depth)
    return bitstream.stat().st_size, recon, wall, argv


def encode_with_qp(adapter: EncoderAdapter, seq: VideoSequence, qp, increment_frame=None,
                   workdir=None) -> EncodeResult:
    """Encode at a fixed QP and load the reconstruction.

    The wall clock covers the encoder invocation only; writing the input,
    decoding and reading the reconstruction are excluded.
    """
    qmin, qmax = adapter.qp_range
    if int(qp) != qp or not qmin <= qp <= qmax:
        raise ValueError(f"qp {qp} outside {adapter.codec_id} range [{qmin}, {qmax}]")
    qp = int(qp)
    if adapter.kind == "toy":
        t0 = time.perf_counter()
        bs, recon = toy.toy_encode(seq, qp, increment_frame=increment_frame)
        wall = time.perf_counter() - t0
        nbytes, argv = len(bs), ["<toy>", f"qp={qp}"]
    elif workdir is None:
        with tempfile.TemporaryDirectory(prefix="codecbench_") as tmp:
            nbytes, recon, wall, argv = _encode_external(adapter, seq, qp, increment_frame, tmp)
    else:
        nbytes, recon, wall, argv = _encode_external(adapter, seq, qp, increment_frame, workdir)
    if (recon.frame_count, recon.width, recon.height, recon.bit_depth) != \
            (seq.frame_count, seq.width, seq.height, seq.bit_depth):
        raise ReconstructionMismatchError(
            f"{adapter.codec_id} reconstruction has {recon.frame_count} frames of {recon.width}x{recon.height}, "
            f"input has {seq.frame_count} of {seq.width}x{seq.height}")
    if nbytes <= 0:
        raise EncoderProcessError(f"{adapter.codec_id} produced an empty bitstream")
    return EncodeResult(qp, nbytes, bitrate_kbps(nbytes, seq), recon, wall, increment_frame, argv)


def target_bitrate_search(adapter: EncoderAdapter, seq: VideoSequence, target_kbps, tolerance=0.03,
                          workdir=None, strict=True, encode=None) -> RateTargetOutcome:
    """Find the lowest QP whose bitrate lies within ``target * (1 +- tolerance)``.

    Bisection over integer QPs assumes bitrate falls as QP rises. If the two
    QPs around the target both miss the band and the adapter has a
    fractional mechanism, the QP increment frame is bisected between them.
    On failure a ``TargetUnreachableError`` is raised (``strict=True``) or an
    outcome with ``status="unreachable"`` holding the closest encode is
    returned.
    """
    if target_kbps <= 0:
        raise ValueError("target bitrate must be positive")
    encode = encode or (lambda qp, inc=None: encode_with_qp(adapter, seq, qp, inc, workdir))
    cache = {}

    def rate(qp, inc=None):
        key = (qp, inc)
        if key not in cache:
            cache[key] = encode(qp, inc)
        return cache[key].bitrate_kbps

    upper = target_kbps * (1 + tolerance)
    lower = target_kbps * (1 - tolerance)
    qmin, qmax = adapter.qp_range

    def done(res, status="success", bracket=None):
        outcome = RateTargetOutcome(target_kbps, res, (res.bitrate_kbps - target_kbps) / target_kbps,
                                    len(cache), status, bracket)
        if status != "success":
            msg = (f"{adapter.codec_id}: {target_kbps:g} kbps not reachable within +-{tolerance:.0%}; "
                   f"bracketing QPs {bracket}")
            if strict:
                raise TargetUnreachableError(msg, target_kbps, bracket, outcome)
            log.warning(msg)
        return outcome

    if rate(qmax) > upper:
        return done(cache[(qmax, None)], "unreachable", (qmax, None))
    if rate(qmin) < lower:
        return done(cache[(qmin, None)], "unreachable", (None, qmin))
    if rate(qmin) <= upper:
        best = qmin
    else:
        lo, hi = qmin, qmax  # rate(lo) > upper >= rate(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if rate(mid) <= upper:
                hi = mid
            else:
                lo = mid
        best = hi
    if rate(best) >= lower:
        return done(cache[(best, None)])

    base = best - 1
    bracket = (base, best)
    closest = min((cache[(base, None)], cache[(best, None)]), key=lambda r: abs(r.bitrate_kbps - target_kbps))
    if adapter.supports_fractional:
        # frames before ``f`` at ``base``, the rest at ``best``: f=0 is all-best, f=N all-base
        lo, hi = 0, seq.frame_count
        while hi - lo > 1:
            mid = (lo + hi) // 2
            r = rate(base, mid)
            res = cache[(base, mid)]
            if abs(r - target_kbps) < abs(closest.bitrate_kbps - target_kbps):
                closest = res
            if lower <= r <= upper:
                return done(res)
            if r < lower:
                lo = mid
            else:
                hi = mid
    return done(closest, "unreachable", bracket)


def qp_sweep(adapter, seq, qps=None, workdir=None):
    """Encode at every QP in ``qps`` (default: the adapter's whole range)."""
    qmin, qmax = adapter.qp_range
    qps = range(qmin, qmax + 1) if qps is None else qps
    return {qp: encode_with_qp(adapter, seq, qp, workdir=workdir) for qp in qps}


def complexity_ratio(times_codec, times_benchmark):
    """Mean over rate points of codec time / benchmark time."""
    a = list(times_codec)
    b = list(times_benchmark)
    if not a or len(a) != len(b):
        raise ValueError(f"need equal non-empty timing lists, got {len(a)} and {len(b)}")
    if any(t <= 0 for t in b):
        raise ValueError("benchmark times must be positive")
    return float(np.mean([x / y for x, y in zip(a, b)]))


def format_ratio(ratio):
    return f"{ratio:.2f}×"
