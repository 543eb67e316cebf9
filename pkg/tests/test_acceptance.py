"""Acceptance criteria 1-12, each at its stated tolerance and runtime budget.

Every test records a pass/fail line that the conftest prints in a summary
section at the end of the run.
"""

import math
import re
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from codecbench import cli
from codecbench.codecs import EncoderAdapter, qp_sweep, target_bitrate_search
from codecbench.correlation import logistic, logistic_fit, pearson, spearman
from codecbench.errors import TargetUnreachableError
from codecbench.manifest import load_manifest
from codecbench.metrics import ms_ssim, psnr, ssim
from codecbench.media import sequence_from_arrays
from codecbench.pipeline import LadderContext, fixed_qp_points, hull_of
from codecbench.ratequality import (RatePoint, bd_rate, build_rq_curve, envelope_gaps, hull_curve_at,
                                    upper_convex_hull)
from codecbench.resample import lanczos3_kernel, resample_plane, resample_plane_float
from codecbench.subjective import anova_one_way, f_sf, screen_subjects
from codecbench.synthetic import synthetic_corpus
from codecbench.tables import read_targets_table

from conftest import ACCEPTANCE, curve_from, gaussian_panel, plant_outlier, realistic_rq

DATA = Path(cli.__file__).parent / "data"
PAPER = Path(__file__).resolve().parents[1] / "paper.md"


def record(cid, ok, detail=""):
    ACCEPTANCE[cid] = (bool(ok), detail)
    print(f"criterion {cid}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {cid}: {detail}"


# ---------------------------------------------------------------- 1-3: BD

def test_c01_bd_self_and_antisymmetry():
    rng = np.random.default_rng(1)
    pairs = [(curve_from(*realistic_rq(rng), codec="a"), curve_from(*realistic_rq(rng), codec="b"))
             for _ in range(100)]
    t0 = time.perf_counter()
    self_err = max(abs(bd_rate(a, a).bd_rate_percent) for a, _ in pairs)
    anti_err = 0.0
    for a, b in pairs:
        ab = bd_rate(a, b).bd_rate_percent
        ba = bd_rate(b, a).bd_rate_percent
        anti_err = max(anti_err, abs((1 + ab / 100) * (1 + ba / 100) - 1))
    dt = time.perf_counter() - t0
    record(1, self_err <= 1e-12 and anti_err <= 1e-9 and dt < 1.0,
           f"max |bd(c,c)| = {self_err:.1e}, max antisymmetry error = {anti_err:.1e}, {dt:.2f} s")


def test_c02_bd_rate_doubled_and_halved():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(20):
        r, q = realistic_rq(rng)
        a = curve_from(r, q)
        worst = max(worst, abs(bd_rate(a, curve_from(2 * r, q, codec="d")).bd_rate_percent - 100.0),
                    abs(bd_rate(a, curve_from(0.5 * r, q, codec="h")).bd_rate_percent + 50.0))
    record(2, worst <= 1e-9, f"max deviation from +100% / -50% = {worst:.1e}")


def _trapezoid_bd(anchor, test, samples=1_000_000):
    """Independent route: raw-power polyfit of log-rate on quality, dense trapezoid rule."""
    la, qa = np.log10(anchor.rates), anchor.qualities
    lt, qt = np.log10(test.rates), test.qualities
    lo, hi = max(qa.min(), qt.min()), min(qa.max(), qt.max())
    ca = np.polyfit(qa, la, 3)
    ct = np.polyfit(qt, lt, 3)
    x = np.linspace(lo, hi, samples)
    diff = np.polyval(ct, x) - np.polyval(ca, x)
    area = np.sum((diff[1:] + diff[:-1]) * 0.5 * np.diff(x))
    return (10 ** (area / (hi - lo)) - 1) * 100


def test_c03_bd_matches_trapezoid_oracle():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        a = curve_from(*realistic_rq(rng), codec="a")
        b = curve_from(*realistic_rq(rng), codec="b")
        worst = max(worst, abs(bd_rate(a, b).bd_rate_percent - _trapezoid_bd(a, b)))
    dt = time.perf_counter() - t0
    record(3, worst <= 1e-9 and dt < 10.0, f"max |closed form - trapezoid| = {worst:.1e} %, {dt:.2f} s")


# ------------------------------------------------------------------ 4: hull

def _brute_hull(coords):
    """Vertices of the nondecreasing concave majorant, by exhaustive checks in exact arithmetic."""
    pts = sorted(set((Fraction(r), Fraction(q)) for r, q in coords))
    und = [p for p in pts if not any(o != p and o[0] <= p[0] and o[1] >= p[1] for o in pts)]
    verts = []
    for p in und:
        covered = False
        for a in und:
            for b in und:
                if a[0] < p[0] < b[0]:
                    # p on or under segment ab
                    if (b[0] - a[0]) * (p[1] - a[1]) <= (b[1] - a[1]) * (p[0] - a[0]):
                        covered = True
                        break
            if covered:
                break
        if not covered:
            verts.append(p)
    return [(float(r), float(q)) for r, q in verts]


def test_c04_hull_matches_brute_force():
    rng = np.random.default_rng(4)
    rungs = [(320, 180), (240, 136), (160, 90)]
    t0 = time.perf_counter()
    mismatches = violations = 0
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        pts = []
        for i in range(n):
            res = rungs[int(rng.integers(0, 3))]
            pts.append(RatePoint("s", "c", res, (320, 180), float(i), float(rng.integers(1, 60)),
                                 {"psnr": float(rng.integers(0, 40))}))
        hull = upper_convex_hull(pts, "psnr")
        got = [(p.bitrate_kbps, p.quality("psnr")) for p in hull.vertices]
        if got != _brute_hull([(p.bitrate_kbps, p.quality("psnr")) for p in pts]):
            mismatches += 1
        env = hull.envelope(np.array([p.bitrate_kbps for p in pts]))
        q = np.array([p.quality("psnr") for p in pts])
        violations += int(np.sum(env < q - 1e-12))
    dt = time.perf_counter() - t0
    record(4, mismatches == 0 and violations == 0 and dt < 5.0,
           f"{mismatches} vertex mismatches, {violations} dominance violations over 1000 sets, {dt:.2f} s")


# ------------------------------------------------------------ 5: DO pipeline

@pytest.mark.slow
def test_c05_do_hull_dominates_fixed_rungs():
    t0 = time.perf_counter()
    toy = EncoderAdapter.toy()
    min_gap = math.inf
    bds = []
    for seq in synthetic_corpus(320, 180, 60, seed=0):
        ctx = LadderContext(seq, (320, 180), [(320, 180), (160, 90)])
        pts = fixed_qp_points(toy, ctx, [20, 26, 32, 38, 44], ["psnr"])
        hull = hull_of(pts, "psnr")
        for res in ctx.rungs:
            curve = build_rq_curve([p for p in pts if p.encode_resolution == res], "psnr")
            min_gap = min(min_gap, float(np.min(envelope_gaps(hull, curve))))
            bds.append(bd_rate(curve, hull_curve_at(hull, curve.rates)).bd_rate_percent)
    dt = time.perf_counter() - t0
    record(5, min_gap >= 0 and max(bds) <= 0 and dt < 300,
           f"min hull-minus-curve quality {min_gap:.4f} dB, hull BD-rate vs rungs "
           f"{', '.join(f'{b:+.1f}%' for b in bds)}, {dt:.1f} s")


# ------------------------------------------------------------ 6: targeting

@pytest.mark.slow
def test_c06_target_search_matches_sweep():
    from codecbench.synthetic import make_synthetic_sequence

    t0 = time.perf_counter()
    seq = make_synthetic_sequence(160, 90, 10, "dynamic_texture", seed=6)
    toy = EncoderAdapter.toy()
    sweep = {qp: r.bitrate_kbps for qp, r in qp_sweep(toy, seq).items()}
    rng = np.random.default_rng(6)
    bad = []
    for _ in range(20):
        anchor_qp = int(rng.integers(0, 51))
        target = sweep[anchor_qp] * rng.uniform(0.985, 1.015)
        oracle = min(q for q, r in sweep.items() if abs(r - target) <= 0.03 * target)
        out = target_bitrate_search(toy, seq, target, 0.03)
        if not (abs(out.relative_error) <= 0.03 and out.achieved.qp == oracle
                and out.achieved.increment_frame is None):
            bad.append((target, oracle, out.achieved.qp, out.relative_error))
    errors = 0
    for target in (sweep[0] * 3, sweep[50] / 3):
        try:
            target_bitrate_search(toy, seq, target, 0.03)
        except TargetUnreachableError as exc:
            errors += exc.bracket is not None
    dt = time.perf_counter() - t0
    record(6, not bad and errors == 2 and dt < 120,
           f"{20 - len(bad)}/20 targets matched the sweep oracle, {errors}/2 unreachable targets raised, {dt:.1f} s")


# --------------------------------------------------------------- 7: metrics

def _brute_ssim(x, y, peak, win=8, stride=4):
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    vals = []
    for i in range(0, x.shape[0] - win + 1, stride):
        for j in range(0, x.shape[1] - win + 1, stride):
            a = x[i:i + win, j:j + win].astype(float).ravel()
            b = y[i:i + win, j:j + win].astype(float).ravel()
            ma, mb = a.mean(), b.mean()
            va, vb = a.var(), b.var()
            cov = ((a - ma) * (b - mb)).mean()
            vals.append((2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def test_c07_metric_sanity():
    rng = np.random.default_rng(7)
    a = rng.integers(0, 255, (64, 64))
    ref = sequence_from_arrays([a])
    shifted = sequence_from_arrays([a + 1])
    p = psnr(ref, shifted).value
    p_ok = abs(p - 48.1308) <= 1e-4 and abs(p - 20 * math.log10(255)) < 1e-12
    big = sequence_from_arrays([rng.integers(0, 256, (128, 128))])
    ident_ok = ssim(ref, ref).value == 1.0 and ms_ssim(big, big).value == 1.0
    worst = 0.0
    for _ in range(20):
        x = rng.integers(0, 256, (64, 64))
        y = np.clip(x + rng.normal(0, rng.uniform(1, 40), x.shape), 0, 255).round()
        got = ssim(sequence_from_arrays([x]), sequence_from_arrays([y])).value
        worst = max(worst, abs(got - _brute_ssim(x, y, 255)))
    record(7, p_ok and ident_ok and worst <= 1e-9,
           f"PSNR = {p:.4f} dB, identical SSIM/MS-SSIM exactly 1: {ident_ok}, max |SSIM - oracle| = {worst:.1e}")


# ------------------------------------------------------------- 8: resampler

def _direct_2d(src, tw, th):
    """Full 2-D Lanczos-3 sum with independently built, renormalised weights."""
    sh, sw = src.shape

    def weights(n_src, n_dst, i):
        c = (i + 0.5) * n_src / n_dst - 0.5
        base = math.floor(c) - 2
        taps = [(min(max(base + k, 0), n_src - 1), lanczos3_kernel(c - (base + k))) for k in range(6)]
        s = sum(w for _, w in taps)
        return [(j, w / s) for j, w in taps]

    out = np.zeros((th, tw))
    for i in range(th):
        wy = weights(sh, th, i)
        for j in range(tw):
            wx = weights(sw, tw, j)
            out[i, j] = sum(vy * vx * src[y, x] for y, vy in wy for x, vx in wx)
    return out


def test_c08_resampler():
    dc_ok = True
    cases = [((64, 64), (32, 32)), ((96, 96), (64, 64)), ((16, 1080), (8, 544)),
             ((32, 32), (64, 64)), ((64, 48), (96, 72)), ((8, 544), (16, 1080))]
    for (sw, sh), (tw, th) in cases:
        for v in (0, 1, 117, 255, 1023):
            out = resample_plane(np.full((sh, sw), v), (tw, th), 1023)
            dc_ok &= out.shape == (th, tw) and bool(np.all(out == v))
    rng = np.random.default_rng(8)
    worst = 0.0
    for tw, th in ((20, 24), (48, 40), (16, 16), (32, 18)):
        src = rng.uniform(0, 255, (32, 32))
        worst = max(worst, float(np.max(np.abs(resample_plane_float(src, (tw, th)) - _direct_2d(src, tw, th)))))
    record(8, dc_ok and worst <= 1e-6, f"DC invariance exact: {dc_ok}, separable vs direct 2-D max error {worst:.1e}")


# ---------------------------------------------------------------- 9: stats

def _brute_rank(x):
    return [1 + sum(1 for b in x if b < a) + 0.5 * (sum(1 for b in x if b == a) - 1) for a in x]


def _brute_pearson(x, y):
    n = len(x)
    mx, my = math.fsum(x) / n, math.fsum(y) / n
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = math.fsum((a - mx) ** 2 for a in x)
    syy = math.fsum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def _f_pdf(x, d1, d2):
    lg = math.lgamma((d1 + d2) / 2) - math.lgamma(d1 / 2) - math.lgamma(d2 / 2)
    return math.exp(lg + (d1 / 2) * math.log(d1 / d2) + (d1 / 2 - 1) * math.log(x)
                    - ((d1 + d2) / 2) * math.log1p(d1 * x / d2))


def test_c09_statistics():
    rng = np.random.default_rng(9)
    corr_err = 0.0
    for _ in range(1000):
        n = int(rng.integers(5, 40))
        x = rng.integers(0, 8, n).astype(float).tolist()
        y = (rng.integers(0, 8, n) + rng.normal(0, 1, n).round(1)).tolist()
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        corr_err = max(corr_err, abs(spearman(x, y) - _brute_pearson(_brute_rank(x), _brute_rank(y))),
                       abs(pearson(x, y) - _brute_pearson(x, y)))
    t_err = 0.0
    for _ in range(100):
        a = rng.normal(0, 1, int(rng.integers(3, 30)))
        b = rng.normal(rng.uniform(-1, 1), 1, int(rng.integers(3, 30)))
        na, nb = len(a), len(b)
        sp2 = ((na - 1) * a.var(ddof=1) + (nb - 1) * b.var(ddof=1)) / (na + nb - 2)
        t = (a.mean() - b.mean()) / math.sqrt(sp2 * (1 / na + 1 / nb))
        t_err = max(t_err, abs(anova_one_way(a, b).F - t * t) / max(1.0, t * t))
    p_err = 0.0
    for _ in range(50):
        F = float(rng.uniform(0.01, 12))
        d2 = int(rng.integers(2, 120))
        oracle, _ = integrate.quad(_f_pdf, F, np.inf, args=(1, d2), epsabs=1e-13, epsrel=1e-12, limit=200)
        p_err = max(p_err, abs(f_sf(F, 1, d2) - oracle))
    record(9, corr_err <= 1e-12 and t_err <= 1e-9 and p_err <= 1e-6,
           f"SROCC/LCC vs brute force {corr_err:.1e}, |F - t^2| {t_err:.1e}, p vs quadrature {p_err:.1e}")


# -------------------------------------------------------------- 10: logistic

def test_c10_logistic_recovery():
    beta = (90.0, 10.0, 50.0, 8.0)
    x = np.linspace(10, 90, 40)
    y = logistic(x, beta)
    m1 = logistic_fit(x, y)
    m2 = logistic_fit(x, y)
    rmse = float(np.sqrt(np.mean((m1.predict(x) - y) ** 2)))
    record(10, rmse < 1e-6 and m1.beta == m2.beta,
           f"prediction RMSE {rmse:.1e}, beta = ({', '.join(f'{b:.6f}' for b in m1.beta)}), "
           f"repeat fit identical: {m1.beta == m2.beta}")


# ------------------------------------------------------------- 11: screening

def test_c11_screening():
    clean = [len(screen_subjects(gaussian_panel(s)).rejected) for s in range(20)]
    planted = screen_subjects(plant_outlier(gaussian_panel(100)))
    record(11, sum(clean) == 0 and planted.rejected == ["subj00"],
           f"rejections on 20 well-behaved panels: {sum(clean)}; planted panel rejects {planted.rejected}")


# ---------------------------------------------------------- 12: target table report

def _published_targets():
    rows = {}
    for line in PAPER.read_text(encoding="utf-8").splitlines():
        m = re.match(r"\s*V\d: (\w+)\s*&(.*)\\\\", line)
        if m:
            vals = [v.strip() for v in m.group(2).split("&")]
            rows[m.group(1)] = {"A": vals[0:4], "B": vals[4:8], "C": vals[8:13]}
    return rows


def test_c12_report_emits_byte_matching_targets(tmp_path):
    csv_path = DATA / "targets_by_group.csv"
    rc = cli.main(["report", "--targets-csv", str(csv_path), "--out", str(tmp_path)])
    text = (tmp_path / "targets_manifest.toml").read_text(encoding="utf-8")
    rows = read_targets_table(csv_path)
    emitted = {}
    seq = None
    for line in text.splitlines():
        if line.startswith("[targets."):
            seq = line[len("[targets."):-1].strip('"')
        elif seq and (m := re.fullmatch(r"([ABC]) = \[(.*)\]", line)):
            emitted[(seq, m.group(1))] = m.group(2)
    mismatched = [(s, g) for s, g, toks in rows if emitted.get((s, g)) != ", ".join(toks)]
    parsed = load_manifest(tmp_path / "targets_manifest.toml").targets
    value_ok = all(parsed[(s, g)] == tuple(int(t) for t in toks) for s, g, toks in rows)
    v1 = "/".join(next(toks for s, g, toks in rows if (s, g) == ("AirAcrobatic", "A")))
    published_ok = True
    if PAPER.exists():
        published = _published_targets()
        published_ok = len(published) == 9 and all(published[s][g] == toks for s, g, toks in rows) and len(rows) == 27
    record(12, rc == 0 and not mismatched and value_ok and v1 == "1300/2250/4700/9270" and published_ok,
           f"{len(rows) - len(mismatched)}/{len(rows)} target lists byte-match, V1 group A = {v1} kbps, "
           f"CSV agrees with the published table: {published_ok}")
