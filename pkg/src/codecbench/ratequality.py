"""Rate-quality curves, the cross-resolution convex hull, and Bjontegaard deltas."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CurveError, OverlapError

# quality may dip by this much along a curve before BD refuses to invert it
BD_WOBBLE_TOLERANCE = 0.5


class NonMonotoneCurveWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RatePoint:
    sequence: str
    codec: str
    encode_resolution: tuple
    evaluation_resolution: tuple
    qp: float
    bitrate_kbps: float
    scores: dict = field(default_factory=dict, hash=False, compare=True)
    rate_index: str | None = None
    wall_seconds: float | None = None
    group: str | None = None
    target_kbps: float | None = None

    def __post_init__(self):
        if not self.bitrate_kbps > 0:
            raise CurveError(f"bitrate must be positive, got {self.bitrate_kbps}")
        object.__setattr__(self, "encode_resolution", tuple(int(v) for v in self.encode_resolution))
        object.__setattr__(self, "evaluation_resolution", tuple(int(v) for v in self.evaluation_resolution))

    @property
    def pixels(self):
        return self.encode_resolution[0] * self.encode_resolution[1]

    def quality(self, metric_id):
        try:
            return float(self.scores[metric_id])
        except KeyError:
            raise CurveError(f"point {self.sequence}/{self.codec} @ {self.bitrate_kbps:g} kbps "
                             f"has no {metric_id!r} score") from None

    def with_score(self, metric_id, value):
        scores = dict(self.scores)
        scores[metric_id] = value
        return replace(self, scores=scores)


@dataclass(frozen=True)
class RQCurve:
    points: tuple
    metric_id: str

    @property
    def rates(self):
        return np.array([p.bitrate_kbps for p in self.points], dtype=np.float64)

    @property
    def qualities(self):
        return np.array([p.quality(self.metric_id) for p in self.points], dtype=np.float64)

    @property
    def sequence(self):
        return self.points[0].sequence

    @property
    def codec(self):
        return self.points[0].codec

    def __len__(self):
        return len(self.points)


def build_rq_curve(points, metric_id, check_identity=True) -> RQCurve:
    """Sort points by bitrate into a curve; warn if quality does not rise."""
    pts = list(points)
    if len(pts) < 2:
        raise CurveError(f"a curve needs at least 2 points, got {len(pts)}")
    if check_identity:
        keys = {(p.sequence, p.codec) for p in pts}
        if len(keys) > 1:
            raise CurveError(f"points mix sequences/codecs: {sorted(keys)}")
    for p in pts:
        p.quality(metric_id)
    pts.sort(key=lambda p: p.bitrate_kbps)
    rates = [p.bitrate_kbps for p in pts]
    dups = sorted({a for a, b in zip(rates, rates[1:]) if a == b})
    if dups:
        raise CurveError(f"duplicate bitrate(s) {dups} in curve {pts[0].sequence}/{pts[0].codec}")
    q = [p.quality(metric_id) for p in pts]
    if any(b < a for a, b in zip(q, q[1:])):
        warnings.warn(f"{metric_id} is not monotone in bitrate for {pts[0].sequence}/{pts[0].codec}",
                      NonMonotoneCurveWarning, stacklevel=2)
    return RQCurve(tuple(pts), metric_id)


# --------------------------------------------------------------------------- hull

@dataclass(frozen=True)
class ConvexHull:
    vertices: tuple
    metric_id: str

    @property
    def source_resolutions(self):
        return frozenset(p.encode_resolution for p in self.vertices)

    @property
    def rates(self):
        return np.array([p.bitrate_kbps for p in self.vertices])

    @property
    def qualities(self):
        return np.array([p.quality(self.metric_id) for p in self.vertices])

    def envelope(self, rate):
        """Piecewise-linear hull quality at ``rate``.

        Flat beyond the last vertex (more rate never hurts); NaN below the
        first vertex, where no encode exists.
        """
        r = np.asarray(rate, dtype=np.float64)
        x, y = self.rates, self.qualities
        out = np.interp(r, x, y, right=y[-1])
        out = np.where(r < x[0], np.nan, out)
        return out if out.ndim else float(out)

    def as_curve(self) -> RQCurve:
        return RQCurve(tuple(self.vertices), self.metric_id)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def undominated(points, metric_id):
    """Drop points beaten by another with no more rate and no less quality.

    Exact duplicates in (rate, quality) keep the one with fewer encoded pixels.
    """
    order = sorted(points, key=lambda p: (p.bitrate_kbps, -p.quality(metric_id), p.pixels))
    keep = []
    best = -np.inf
    for p in order:
        q = p.quality(metric_id)
        if q > best:
            keep.append(p)
            best = q
    return keep


def upper_convex_hull(points, metric_id) -> ConvexHull:
    """Upper-left convex envelope in the linear (bitrate, quality) plane."""
    pts = list(points)
    if not pts:
        raise CurveError("hull of an empty point set")
    evals = {p.evaluation_resolution for p in pts}
    if len(evals) > 1:
        raise CurveError(f"hull points evaluated at different resolutions: {sorted(evals)}")
    cand = undominated(pts, metric_id)
    hull = []
    for p in cand:
        xy = (p.bitrate_kbps, p.quality(metric_id))
        while len(hull) >= 2:
            a = (hull[-2].bitrate_kbps, hull[-2].quality(metric_id))
            b = (hull[-1].bitrate_kbps, hull[-1].quality(metric_id))
            if _cross(a, b, xy) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return ConvexHull(tuple(hull), metric_id)


def hull_curve_at(hull: ConvexHull, rates, template: RQCurve | None = None, codec=None) -> RQCurve:
    """Sample the hull envelope at the given rates as a curve (for BD against a fixed ladder rung)."""
    rates = np.asarray(sorted(rates), dtype=np.float64)
    q = hull.envelope(rates)
    if np.any(np.isnan(q)):
        raise CurveError("requested rates below the lowest hull vertex")
    v0 = hull.vertices[0]
    pts = []
    for i, (r, qq) in enumerate(zip(rates, q)):
        idx = template.points[i].rate_index if template is not None and len(template) == len(rates) else None
        pts.append(RatePoint(v0.sequence, codec or f"{v0.codec}-hull", v0.evaluation_resolution,
                             v0.evaluation_resolution, float("nan"), float(r), {hull.metric_id: float(qq)},
                             rate_index=idx))
    return RQCurve(tuple(pts), hull.metric_id)


def envelope_gaps(hull: ConvexHull, curve: RQCurve):
    """Hull quality minus curve quality at each of the curve's rate points."""
    return hull.envelope(curve.rates) - curve.qualities


def select_per_target(candidates, metric_id) -> RatePoint:
    """Best-scoring candidate among resolutions for one target bitrate.

    ``candidates`` maps resolution to a ``RatePoint`` (or is an iterable of
    them). Ties go to the fewest encoded pixels.
    """
    pts = list(candidates.values()) if isinstance(candidates, dict) else list(candidates)
    if not pts:
        raise CurveError("no candidates to select from")
    evals = {p.evaluation_resolution for p in pts}
    if len(evals) > 1:
        raise CurveError(f"candidates scored at different resolutions: {sorted(evals)}")
    return min(pts, key=lambda p: (-p.quality(metric_id), p.pixels))


# ---------------------------------------------------------------------------- BD

@dataclass(frozen=True)
class BDResult:
    bd_rate_percent: float | None
    bd_quality: float | None
    overlap_interval: tuple
    metric_id: str = ""


def _bd_arrays(curve: RQCurve):
    if len(curve) < 4:
        raise CurveError(f"BD needs at least 4 points per curve, {curve.sequence}/{curve.codec} has {len(curve)}")
    order = np.argsort(curve.rates, kind="stable")
    r = curve.rates[order]
    q = curve.qualities[order]
    if not (np.all(np.isfinite(q)) and np.all(r > 0)):
        raise CurveError("non-finite quality or non-positive rate in BD input")
    return np.log10(r), q


def _poly_fit(x, y):
    """Cubic least-squares fit with the axis mapped onto [-1, 1] for conditioning."""
    c = 0.5 * (x.min() + x.max())
    s = 0.5 * (x.max() - x.min())
    if s == 0:
        raise CurveError("curve spans a single value on the fit axis")
    return np.polynomial.Polynomial.fit(x, y, 3, domain=[c - s, c + s])


def _integral(poly, lo, hi):
    # integ() folds the domain->window scaling in
    anti = poly.integ()
    return anti(hi) - anti(lo)


def _invertible_quality(logr, q, label):
    drops = q[:-1] - q[1:]
    if np.any(drops > BD_WOBBLE_TOLERANCE):
        raise CurveError(f"{label}: quality falls by {drops.max():.3g} with rising rate; "
                         "cannot use it as the BD rate axis")
    if np.any(drops > 0):
        order = np.argsort(q, kind="stable")
        logr, q = logr[order], q[order]
    return logr, q


def bd_rate(anchor: RQCurve, test: RQCurve) -> BDResult:
    """Average rate difference at equal quality, as a percentage of the anchor's rate."""
    if anchor.metric_id != test.metric_id:
        raise CurveError(f"metric mismatch: {anchor.metric_id} vs {test.metric_id}")
    la, qa = _invertible_quality(*_bd_arrays(anchor), "anchor")
    lt, qt = _invertible_quality(*_bd_arrays(test), "test")
    lo, hi = max(qa.min(), qt.min()), min(qa.max(), qt.max())
    if not hi > lo:
        raise OverlapError(f"quality ranges [{qa.min():.4g}, {qa.max():.4g}] and "
                           f"[{qt.min():.4g}, {qt.max():.4g}] do not overlap")
    pa = _poly_fit(qa, la)
    pt = _poly_fit(qt, lt)
    avg = (_integral(pt, lo, hi) - _integral(pa, lo, hi)) / (hi - lo)
    return BDResult(float((10.0 ** avg - 1.0) * 100.0), None, (float(lo), float(hi)), anchor.metric_id)


def bd_quality(anchor: RQCurve, test: RQCurve) -> BDResult:
    """Average quality difference over the shared log-rate interval."""
    if anchor.metric_id != test.metric_id:
        raise CurveError(f"metric mismatch: {anchor.metric_id} vs {test.metric_id}")
    la, qa = _bd_arrays(anchor)
    lt, qt = _bd_arrays(test)
    lo, hi = max(la.min(), lt.min()), min(la.max(), lt.max())
    if not hi > lo:
        raise OverlapError(f"rate ranges [{10 ** la.min():.4g}, {10 ** la.max():.4g}] and "
                           f"[{10 ** lt.min():.4g}, {10 ** lt.max():.4g}] kbps do not overlap")
    pa = _poly_fit(la, qa)
    pt = _poly_fit(lt, qt)
    avg = (_integral(pt, lo, hi) - _integral(pa, lo, hi)) / (hi - lo)
    return BDResult(None, float(avg), (float(10 ** lo), float(10 ** hi)), anchor.metric_id)


def bd_both(anchor: RQCurve, test: RQCurve) -> BDResult:
    r = bd_rate(anchor, test)
    q = bd_quality(anchor, test)
    return BDResult(r.bd_rate_percent, q.bd_quality, r.overlap_interval, anchor.metric_id)


def average_curves(curves, sequence="average") -> RQCurve:
    """Per rate index, the mean bitrate and mean quality over all curves."""
    curves = list(curves)
    if not curves:
        raise CurveError("nothing to average")
    metric = curves[0].metric_id
    labels = [p.rate_index for p in curves[0].points]
    if None in labels or len(set(labels)) != len(labels):
        raise CurveError("averaging needs unique rate_index labels on every point")
    for c in curves[1:]:
        if c.metric_id != metric:
            raise CurveError("cannot average curves of different metrics")
        other = [p.rate_index for p in c.points]
        if sorted(other) != sorted(labels):
            raise CurveError(f"rate indices {other} of {c.sequence}/{c.codec} do not match {labels}")
    codecs = {c.codec for c in curves}
    codec = codecs.pop() if len(codecs) == 1 else "mixed"
    ref = curves[0].points[0]
    pts = []
    for lab in labels:
        members = [next(p for p in c.points if p.rate_index == lab) for c in curves]
        rate = float(np.mean([p.bitrate_kbps for p in members]))
        qual = float(np.mean([p.quality(metric) for p in members]))
        pts.append(RatePoint(sequence, codec, ref.encode_resolution, ref.evaluation_resolution,
                             float(np.mean([p.qp for p in members])), rate, {metric: qual}, rate_index=lab))
    pts.sort(key=lambda p: p.bitrate_kbps)
    return RQCurve(tuple(pts), metric)
