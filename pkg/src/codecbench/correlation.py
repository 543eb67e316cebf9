"""Logistic mapping of objective scores to DMOS and the SROCC/LCC/OR/RMSE statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

STDEV_FLOOR = 0.5
STEP_TOL = 1e-10
MAX_ITER = 10000
METRIC_COLUMNS = ("psnr", "ssim", "msssim", "vif", "vsnr", "vmaf")


@dataclass(frozen=True)
class FittedModel:
    beta: tuple
    residual_sse: float
    converged: bool
    iterations: int
    gradient_norm: float = 0.0

    def predict(self, x):
        return logistic(np.asarray(x, dtype=np.float64), self.beta)


@dataclass(frozen=True)
class CorrelationStats:
    srocc: float
    lcc: float
    outlier_ratio: float
    rmse: float
    n_points: int

    def row(self):
        return format_stats_row(self)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic(x, beta):
    b1, b2, b3, b4 = beta
    return b2 + (b1 - b2) * _sigmoid((x - b3) / abs(b4))


def _jacobian(x, beta):
    b1, b2, b3, b4 = beta
    s = abs(b4)
    g = _sigmoid((x - b3) / s)
    dg = g * (1.0 - g)
    amp = b1 - b2
    return np.column_stack([
        g,
        1.0 - g,
        -amp * dg / s,
        -amp * dg * (x - b3) / (s * s) * np.sign(b4),
    ])


def fit_weights(stdevs, floor=STDEV_FLOOR):
    s = np.maximum(np.asarray(stdevs, dtype=np.float64), floor)
    return 1.0 / (s * s)


def logistic_fit(metric_values, dmos, weights=None, stdevs=None, max_iter=MAX_ITER, tol=STEP_TOL) -> FittedModel:
    """Weighted least-squares fit of the 4-parameter logistic by Levenberg-Marquardt.

    Weights default to ``1 / max(stdev, 0.5)**2`` when ``stdevs`` is given,
    otherwise uniform. Start: b1 = max(dmos), b2 = min(dmos), b3 =
    median(x), b4 = stdev(x); b1 and b2 swap when DMOS falls as the metric
    rises, so the start already has the right direction.
    """
    x = np.asarray(metric_values, dtype=np.float64)
    y = np.asarray(dmos, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"metric and DMOS lengths differ: {x.shape} vs {y.shape}")
    if len(x) < 5:
        raise DataError(f"logistic fit needs at least 5 points, got {len(x)}")
    if np.ptp(x) == 0:
        raise DataError("metric column is constant; cannot fit a logistic")
    if weights is None:
        w = fit_weights(stdevs) if stdevs is not None else np.ones_like(x)
    else:
        w = np.asarray(weights, dtype=np.float64)
    if w.shape != x.shape or np.any(w <= 0):
        raise DataError("weights must be positive and match the data length")
    if np.ptp(y) == 0:
        v = float(y[0])
        return FittedModel((v, v, float(np.median(x)), float(np.std(x, ddof=1))), 0.0, True, 0, 0.0)

    beta = np.array([y.max(), y.min(), np.median(x), np.std(x, ddof=1)])
    if np.corrcoef(x, y)[0, 1] < 0:
        beta[0], beta[1] = beta[1], beta[0]

    def sse(b):
        r = y - logistic(x, b)
        return float(np.sum(w * r * r))

    cur = sse(beta)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = _jacobian(x, beta)
        r = y - logistic(x, beta)
        A = J.T @ (w[:, None] * J)
        g = J.T @ (w * r)
        D = np.diag(np.maximum(np.diag(A), 1e-300))
        try:
            step = np.linalg.solve(A + lam * D, g)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        trial = beta + step
        if trial[3] == 0:
            lam *= 10.0
            continue
        new = sse(trial)
        small = np.linalg.norm(step) < tol * (1.0 + np.linalg.norm(beta))
        if new <= cur:
            beta, cur = trial, new
            lam = max(lam / 10.0, 1e-12)
        else:
            lam = min(lam * 10.0, 1e16)
        if small:
            converged = True
            break
    J = _jacobian(x, beta)
    grad = float(np.linalg.norm(J.T @ (w * (y - logistic(x, beta)))))
    beta[3] = abs(beta[3])
    return FittedModel(tuple(float(b) for b in beta), cur, converged, it, grad)


def rankdata(a):
    """Ranks starting at 1, ties given their average rank."""
    a = np.asarray(a, dtype=np.float64)
    order = np.argsort(a, kind="mergesort")
    s = a[order]
    ranks = np.empty(len(a))
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and s[j + 1] == s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def pearson(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm = x - x.mean()
    ym = y - y.mean()
    den = np.sqrt(np.sum(xm * xm) * np.sum(ym * ym))
    if den == 0:
        return float("nan")
    return float(np.clip(np.sum(xm * ym) / den, -1.0, 1.0))


def spearman(x, y):
    return pearson(rankdata(x), rankdata(y))


def correlation_stats(metric_values, dmos, stdevs, model: FittedModel) -> CorrelationStats:
    """SROCC on raw values; LCC, RMSE and outlier ratio on the fitted predictions."""
    x = np.asarray(metric_values, dtype=np.float64)
    y = np.asarray(dmos, dtype=np.float64)
    s = np.asarray(stdevs, dtype=np.float64)
    if not (x.shape == y.shape == s.shape):
        raise DataError(f"length mismatch: {len(x)} metric, {len(y)} DMOS, {len(s)} stdev values")
    if len(x) < 3:
        raise DataError("correlation statistics need at least 3 points")
    pred = model.predict(x)
    err = pred - y
    return CorrelationStats(
        srocc=spearman(x, y),
        lcc=pearson(pred, y),
        outlier_ratio=float(np.mean(np.abs(err) > 2.0 * s)),
        rmse=float(np.sqrt(np.mean(err * err))),
        n_points=len(x),
    )


def srocc_null_floor(n, seed=0, trials=2000, quantile=0.95):
    """|SROCC| that a random ordering of n points exceeds with probability 1 - quantile."""
    rng = np.random.default_rng(seed)
    base = np.arange(n, dtype=np.float64)
    vals = [abs(spearman(base, rng.permutation(base))) for _ in range(trials)]
    return float(np.quantile(vals, quantile))


def format_stats_row(st: CorrelationStats):
    return f"{abs(st.srocc):.4f} / {abs(st.lcc):.4f} / {st.outlier_ratio:.4f} / {st.rmse:.4f}"


@dataclass(frozen=True)
class SuiteEntry:
    group: str
    metric: str
    stats: CorrelationStats
    model: FittedModel
    below_floor: bool


def evaluate_metric_suite(rows, dmos_records, metrics=METRIC_COLUMNS, group_key="group",
                          floor=None, seed=0) -> list:
    """Fit and score every metric column against DMOS, per resolution group.

    ``rows`` are mappings carrying ``sequence``, ``codec``, ``rate_index``,
    the group column and metric columns (empty or missing values skip that
    metric). SROCC and LCC are reported as magnitudes since quality metrics
    and DMOS run in opposite directions. ``floor`` is the |SROCC| below which
    a metric is flagged; by default it comes from a permutation null.
    """
    dmos = {r.point: r for r in dmos_records}
    groups = {}
    missing = []
    for row in rows:
        key = (row["sequence"], row["codec"], str(row["rate_index"]))
        if key not in dmos:
            missing.append(key)
            continue
        groups.setdefault(str(row.get(group_key) or ""), []).append((row, dmos[key]))
    if missing:
        shown = ", ".join("/".join(k) for k in missing[:8])
        raise DataError(f"{len(missing)} rate point(s) have no DMOS record: {shown}")
    out = []
    for group in sorted(groups):
        pairs = groups[group]
        for metric in metrics:
            have = [(float(r[metric]), d) for r, d in pairs if r.get(metric) not in (None, "")]
            if len(have) < 5:
                continue
            x = np.array([h[0] for h in have])
            y = np.array([h[1].dmos for h in have])
            s = np.array([h[1].stdev for h in have])
            model = logistic_fit(x, y, stdevs=s)
            st = correlation_stats(x, y, s, model)
            st = CorrelationStats(abs(st.srocc), abs(st.lcc), st.outlier_ratio, st.rmse, st.n_points)
            lim = srocc_null_floor(len(x), seed) if floor is None else floor
            out.append(SuiteEntry(group, metric, st, model, st.srocc < lim))
    return out


def best_per_column(entries):
    """For each group, the metric holding the best value of each statistic."""
    best = {}
    for group in sorted({e.group for e in entries}):
        es = [e for e in entries if e.group == group]
        best[group] = {
            "srocc": max(es, key=lambda e: e.stats.srocc).metric,
            "lcc": max(es, key=lambda e: e.stats.lcc).metric,
            "or": min(es, key=lambda e: e.stats.outlier_ratio).metric,
            "rmse": min(es, key=lambda e: e.stats.rmse).metric,
        }
    return best


def correlation_table(entries):
    """Text table: one row per metric, one column per group, best SROCC marked with '*'."""
    groups = sorted({e.group for e in entries})
    metrics = list(dict.fromkeys(e.metric for e in entries))
    best = best_per_column(entries)
    lookup = {(e.group, e.metric): e for e in entries}
    lines = ["metric | " + " | ".join(f"{g} ({lookup_n(entries, g)}) SROCC / LCC / OR / RMSE" for g in groups)]
    for m in metrics:
        cells = []
        for g in groups:
            e = lookup.get((g, m))
            if e is None:
                cells.append("-")
                continue
            mark = "*" if best[g]["srocc"] == m else ""
            flag = " (below null floor)" if e.below_floor else ""
            cells.append(format_stats_row(e.stats) + mark + flag)
        lines.append(f"{m} | " + " | ".join(cells))
    return "\n".join(lines)


def lookup_n(entries, group):
    return max(e.stats.n_points for e in entries if e.group == group)
