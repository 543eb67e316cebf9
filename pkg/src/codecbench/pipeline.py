"""Encode/score/select chains shared by the CLI commands and the acceptance tests."""

from __future__ import annotations

import logging
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .codecs.adapters import EncoderAdapter, encode_with_qp, target_bitrate_search
from .errors import CurveError
from .media import read_raw_video, write_raw_video
from .metrics import external_metric, score_native
from .ratequality import RatePoint, select_per_target, upper_convex_hull
from .resample import resize_sequence
from .synthetic import make_synthetic_sequence

log = logging.getLogger(__name__)


def load_sequence(spec, frames=None):
    """Materialise a manifest sequence entry, optionally truncated to ``frames``."""
    if spec.synthetic:
        seq = make_synthetic_sequence(spec.width, spec.height, spec.frames or 60, spec.synthetic, spec.seed,
                                      spec.bit_depth, spec.fps, name=spec.name)
    else:
        seq = read_raw_video(spec.path, spec.width, spec.height, spec.bit_depth, spec.fps, name=spec.name)
    limit = frames or spec.frames
    if limit and limit < seq.frame_count:
        seq = seq.with_frames(seq.frames[:limit])
    return seq


def score(ref, dist, metrics, external=None, workdir=None):
    """All requested metric values for one distorted sequence."""
    out = {}
    external = external or {}
    for m in metrics:
        if m in external:
            spec = external[m]
            with tempfile.TemporaryDirectory(prefix="codecbench_metric_", dir=workdir) as tmp:
                rp = write_raw_video(ref, Path(tmp) / "ref.yuv")
                dp = write_raw_video(dist, Path(tmp) / "dist.yuv")
                geo = dict(width=ref.width, height=ref.height, bitdepth=ref.bit_depth,
                           fps=float(ref.fps), frames=ref.frame_count)
                out[m] = external_metric(spec.tool, rp, dp, geo, m, spec.pattern, spec.version_pattern).value
        else:
            out[m] = score_native(m, ref, dist).value
    return out


def _run(tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: t(), tasks))


class LadderContext:
    """A source, its reference-resolution version and its downscaled rungs."""

    def __init__(self, seq, reference, rungs):
        self.seq = seq
        self.reference_dims = tuple(reference)
        self.reference = resize_sequence(seq, self.reference_dims)
        self.rungs = {tuple(r): resize_sequence(self.reference, tuple(r)) for r in rungs}


def _scored_point(ctx, adapter, res, result, metrics, rate_index, group, timing, external, target=None):
    recon = result.recon
    up = resize_sequence(recon, ctx.reference_dims)
    scores = score(ctx.reference, up, metrics, external)
    return RatePoint(ctx.seq.name, adapter.codec_id, res, ctx.reference_dims, result.effective_qp,
                     result.bitrate_kbps, scores, rate_index, result.wall_seconds if timing else None,
                     group, target)


def fixed_qp_points(adapter: EncoderAdapter, ctx: LadderContext, qps, metrics, group=None, jobs=1,
                    timing=False, external=None, workdir=None):
    """Encode every rung at every QP; score the upsampled reconstructions."""
    tasks = []
    for res, src in ctx.rungs.items():
        for qp in qps:
            def task(res=res, src=src, qp=qp):
                r = encode_with_qp(adapter, src, qp, workdir=workdir)
                return _scored_point(ctx, adapter, res, r, metrics, f"QP{qp}", group, timing, external)
            tasks.append(task)
    return _run(tasks, 1 if timing else jobs)


def targeted_points(adapter: EncoderAdapter, ctx: LadderContext, targets, metrics, selection_metric,
                    tolerance=0.03, group=None, jobs=1, timing=False, external=None, workdir=None):
    """Rate-targeted encodes on every rung, then per-target DO selection.

    Returns ``(selected, candidates, misses)``; ``misses`` lists
    ``(rung, rate_index, outcome)`` for targets a rung could not reach.
    """
    tasks = []
    keys = []
    for res, src in ctx.rungs.items():
        for i, t in enumerate(targets):
            def task(src=src, t=t):
                return target_bitrate_search(adapter, src, t, tolerance, workdir=workdir, strict=False)
            tasks.append(task)
            keys.append((res, f"R{i + 1}", t))
    outcomes = _run(tasks, 1 if timing else jobs)
    candidates, misses = [], []
    for (res, ri, t), o in zip(keys, outcomes):
        if not o.ok:
            misses.append((res, ri, o))
            log.warning("%s %s %s at %dx%d: %.1f kbps missed by %+.1f%%", ctx.seq.name, adapter.codec_id, ri,
                        res[0], res[1], t, 100 * o.relative_error)
            continue
        candidates.append(_scored_point(ctx, adapter, res, o.achieved, metrics, ri, group, timing, external, t))
    selected = []
    for i, _ in enumerate(targets):
        ri = f"R{i + 1}"
        cands = [p for p in candidates if p.rate_index == ri]
        if not cands:
            log.warning("%s %s %s: no rung reached the target", ctx.seq.name, adapter.codec_id, ri)
            continue
        selected.append(select_per_target(cands, selection_metric))
    return selected, candidates, misses


def hull_of(points, metric):
    pts = [p for p in points if metric in p.scores]
    if not pts:
        raise CurveError(f"no points carry {metric!r}")
    return upper_convex_hull(pts, metric)
