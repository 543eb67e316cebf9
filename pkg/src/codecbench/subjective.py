"""DSCQS difference scores, DMOS, observer screening and ANOVA significance counts."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .errors import DataError

ALPHA = 0.05


@dataclass(frozen=True)
class TrialScore:
    subject_id: str
    sequence: str
    codec: str
    rate_index: str
    score_reference: float
    score_distorted: float
    session: str = ""

    def __post_init__(self):
        for name in ("score_reference", "score_distorted"):
            v = getattr(self, name)
            if v is None or not (0.0 <= float(v) <= 100.0):
                raise DataError(f"{name}={v!r} for subject {self.subject_id} at "
                                f"{self.sequence}/{self.codec}/{self.rate_index} is outside [0, 100]")

    @property
    def point(self):
        return (self.sequence, self.codec, self.rate_index)


@dataclass(frozen=True)
class DMOSRecord:
    sequence: str
    codec: str
    rate_index: str
    dmos: float
    stdev: float
    n_subjects: int
    diff_scores: tuple = field(default=(), repr=False)

    @property
    def point(self):
        return (self.sequence, self.codec, self.rate_index)

    @property
    def negative(self):
        """Distorted clip rated above its reference on average."""
        return self.dmos < 0


def difference_scores(trials):
    """Map each (sequence, codec, rate_index) to ``{subject: reference - distorted}``."""
    out = {}
    for t in trials:
        if not t.subject_id or not t.sequence or not t.codec or not t.rate_index:
            raise DataError(f"trial with a missing field: {t}")
        per = out.setdefault(t.point, {})
        if t.subject_id in per:
            raise DataError(f"subject {t.subject_id} scored {'/'.join(t.point)} more than once")
        per[t.subject_id] = float(t.score_reference) - float(t.score_distorted)
    return out


def compute_dmos(diffs) -> list:
    """Mean and sample stdev (n - 1) of the difference scores at each point."""
    records = []
    for (seq, codec, ri), per in diffs.items():
        vals = np.array(list(per.values()) if isinstance(per, dict) else list(per), dtype=np.float64)
        if len(vals) < 2:
            raise DataError(f"{seq}/{codec}/{ri} has {len(vals)} subject(s); need at least 2")
        records.append(DMOSRecord(seq, codec, ri, float(np.mean(vals)), float(np.std(vals, ddof=1)),
                                  len(vals), tuple(float(v) for v in vals)))
    return records


def quality_from_dmos(rec: DMOSRecord) -> float:
    """100 - DMOS, unclamped; values above 100 mark negative-DMOS points."""
    return 100.0 - rec.dmos


# ------------------------------------------------------------------- screening

@dataclass
class ScreeningResult:
    retained: list
    rejected: list
    diagnostics: dict


def screen_subjects(trials_or_diffs, method="bt500"):
    """Observer screening on difference scores.

    Per presentation: mean, sample stdev S and kurtosis b2 = m4 / m2**2
    (central moments). The deviation bound is 2 S when 2 <= b2 <= 4, else
    sqrt(20) S. A subject scoring strictly above the bound adds to P, strictly
    below to Q; the subject is rejected when (P + Q) / N > 0.05 and
    |P - Q| / (P + Q) < 0.3, N being the number of presentations scored.
    """
    if method != "bt500":
        raise ValueError(f"unknown screening method {method!r}")
    diffs = trials_or_diffs
    if not isinstance(diffs, dict):
        diffs = difference_scores(trials_or_diffs)
    subjects = sorted({s for per in diffs.values() for s in per})
    if len(subjects) < 3:
        raise DataError(f"screening needs at least 3 subjects, got {len(subjects)}")
    P = dict.fromkeys(subjects, 0)
    Q = dict.fromkeys(subjects, 0)
    N = dict.fromkeys(subjects, 0)
    for per in diffs.values():
        ids = list(per)
        x = np.array([per[s] for s in ids], dtype=np.float64)
        for s in ids:
            N[s] += 1
        if len(x) < 2:
            continue
        mean = x.mean()
        S = x.std(ddof=1)
        m2 = np.mean((x - mean) ** 2)
        b2 = np.mean((x - mean) ** 4) / m2 ** 2 if m2 > 0 else 3.0
        k = 2.0 if 2.0 <= b2 <= 4.0 else math.sqrt(20.0)
        for s, v in zip(ids, x):
            if v > mean + k * S:
                P[s] += 1
            elif v < mean - k * S:
                Q[s] += 1
    retained, rejected, diag = [], [], {}
    for s in subjects:
        p, q, n = P[s], Q[s], N[s]
        reject = n > 0 and (p + q) / n > 0.05 and abs(p - q) / (p + q) < 0.3
        diag[s] = {"P": p, "Q": q, "N": n, "rejected": reject}
        (rejected if reject else retained).append(s)
    return ScreeningResult(retained, rejected, diag)


def drop_subjects(diffs, subjects):
    gone = set(subjects)
    return {k: {s: v for s, v in per.items() if s not in gone} for k, per in diffs.items()}


# ------------------------------------------------------------------ F statistic

def _betacf(a, b, x, eps=1e-16, max_iter=10000):
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a, b, x):
    """Regularised incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc needs a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    lbt = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(lbt) * _betacf(a, b, x) / a
    return 1.0 - math.exp(lbt) * _betacf(b, a, 1.0 - x) / b


def f_sf(F, d1, d2):
    """P(X > F) for X ~ F(d1, d2)."""
    if F <= 0:
        return 1.0
    if math.isinf(F):
        return 0.0
    return betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * F))


def f_cdf(F, d1, d2):
    return 1.0 - f_sf(F, d1, d2)


@dataclass(frozen=True)
class AnovaResult:
    F: float
    p: float
    df_between: int
    df_within: int
    degenerate: bool = False

    def __iter__(self):
        return iter((self.F, self.p))


def anova_one_way(group_a, group_b, *more) -> AnovaResult:
    """One-way ANOVA across two or more groups.

    With zero within-group variance, equal means give F = 0, p = 1 and
    different means give F = inf, p = 0; both are marked ``degenerate``.
    """
    groups = [np.asarray(g, dtype=np.float64) for g in (group_a, group_b) + more]
    for i, g in enumerate(groups):
        if g.ndim != 1 or len(g) < 2:
            raise DataError(f"ANOVA group {i} needs at least 2 values")
        if not np.all(np.isfinite(g)):
            raise DataError(f"ANOVA group {i} has non-finite values")
    k = len(groups)
    n = np.array([len(g) for g in groups], dtype=np.float64)
    means = np.array([g.mean() for g in groups])
    total = n.sum()
    # pairwise form is exactly zero when the group means coincide
    ss_between = sum(n[i] * n[j] * (means[i] - means[j]) ** 2
                     for i in range(k) for j in range(i + 1, k)) / total
    ss_within = float(sum(((g - m) ** 2).sum() for g, m in zip(groups, means)))
    df1, df2 = k - 1, int(total) - k
    if ss_within == 0.0:
        if ss_between == 0.0:
            return AnovaResult(0.0, 1.0, df1, df2, True)
        return AnovaResult(math.inf, 0.0, df1, df2, True)
    F = (ss_between / df1) / (ss_within / df2)
    return AnovaResult(float(F), f_sf(F, df1, df2), df1, df2)


# ------------------------------------------------------------- significance

@dataclass(frozen=True)
class SignificanceCell:
    codec_a: str
    codec_b: str
    n_significant: int
    n_total: int
    wins: int
    losses: int
    points: tuple = field(default=(), repr=False)

    @property
    def codec_pair(self):
        return (self.codec_a, self.codec_b)

    def text(self):
        return format_cell(self.n_significant, self.n_total, self.wins, self.losses)


def format_cell(k, n, wins, losses):
    """``k/N, (w/-l)`` with zero counts written without a sign, e.g. ``5/36, (5/0)``."""
    lose = f"-{losses}" if losses else "0"
    return f"{k}/{n}, ({wins}/{lose})"


def diffs_by_codec(diffs):
    """Regroup ``{(seq, codec, ri): {subject: d}}`` as ``{codec: {(seq, ri): [d...]}}``."""
    out = defaultdict(dict)
    for (seq, codec, ri), per in diffs.items():
        vals = list(per.values()) if isinstance(per, dict) else list(per)
        out[codec][(seq, ri)] = vals
    return dict(out)


def significance_matrix(dmos_per_codec, alpha=ALPHA, codecs=None) -> list:
    """Pairwise per-point ANOVA counts for every ordered codec pair.

    A significant point is a win for the first codec when its mean
    difference score (DMOS) is lower.
    """
    codecs = list(codecs or sorted(dmos_per_codec))
    coverage = {c: set(dmos_per_codec[c]) for c in codecs}
    ref = coverage[codecs[0]]
    for c in codecs[1:]:
        if coverage[c] != ref:
            missing = sorted(ref ^ coverage[c])
            raise DataError(f"codec {c} does not cover the same points as {codecs[0]}: {missing[:5]}")
    points = sorted(ref)
    tests = {}
    for i, a in enumerate(codecs):
        for b in codecs[i + 1:]:
            for pt in points:
                tests[(a, b, pt)] = anova_one_way(dmos_per_codec[a][pt], dmos_per_codec[b][pt])
    cells = []
    for a, b in permutations(codecs, 2):
        wins = losses = 0
        sig = []
        for pt in points:
            res = tests.get((a, b, pt)) or tests[(b, a, pt)]
            if res.p < alpha:
                ma = float(np.mean(dmos_per_codec[a][pt]))
                mb = float(np.mean(dmos_per_codec[b][pt]))
                if ma < mb:
                    wins += 1
                elif ma > mb:
                    losses += 1
                sig.append((pt, res.F, res.p))
        cells.append(SignificanceCell(a, b, wins + losses, len(points), wins, losses, tuple(sig)))
    return cells


def significance_table(cells, codecs=None):
    """Square text matrix (list of rows, header first) of cell strings."""
    codecs = list(codecs or sorted({c.codec_a for c in cells}))
    lookup = {(c.codec_a, c.codec_b): c.text() for c in cells}
    rows = [[""] + codecs]
    for a in codecs:
        rows.append([a] + ["-" if a == b else lookup.get((a, b), "") for b in codecs])
    return rows
