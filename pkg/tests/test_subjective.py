import re
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from codecbench.errors import DataError
from codecbench.subjective import (TrialScore, anova_one_way, betainc, compute_dmos, difference_scores,
                                   diffs_by_codec, drop_subjects, f_cdf, f_sf, format_cell, quality_from_dmos,
                                   screen_subjects, significance_matrix, significance_table)

from conftest import gaussian_panel, plant_outlier

PAPER = Path(__file__).resolve().parents[1] / "paper.md"


def trial(subj, ref, dist, seq="s", codec="c", ri="R1"):
    return TrialScore(subj, seq, codec, ri, ref, dist)


def test_trial_validation():
    with pytest.raises(DataError):
        trial("a", 101, 50)
    with pytest.raises(DataError):
        trial("a", 50, -1)
    with pytest.raises(DataError, match="more than once"):
        difference_scores([trial("a", 80, 60), trial("a", 80, 50)])
    with pytest.raises(DataError, match="missing"):
        difference_scores([trial("", 80, 60)])


def test_dmos_values():
    trials = [trial("a", 80, 60), trial("b", 90, 60), trial("c", 70, 60)]
    (rec,) = compute_dmos(difference_scores(trials))
    assert rec.dmos == pytest.approx(20.0)
    assert rec.stdev == pytest.approx(10.0)
    assert rec.n_subjects == 3 and not rec.negative
    neg = compute_dmos(difference_scores([trial("a", 50, 60), trial("b", 50, 58)]))[0]
    assert neg.negative and quality_from_dmos(neg) == pytest.approx(109.0)
    with pytest.raises(DataError):
        compute_dmos(difference_scores([trial("a", 50, 60)]))


def test_screening_boundaries():
    # identical scores: S = 0 and strict comparisons flag nobody
    diffs = {("s", "c", f"R{i}"): {"a": 0.0, "b": 0.0, "c": 0.0, "d": 0.0} for i in range(10)}
    res = screen_subjects(diffs)
    assert res.rejected == [] and res.diagnostics["a"]["N"] == 10
    with pytest.raises(DataError):
        screen_subjects({("s", "c", "R1"): {"a": 1.0, "b": 2.0}})
    with pytest.raises(ValueError):
        screen_subjects(diffs, method="other")


def test_screening_panels():
    assert all(not screen_subjects(gaussian_panel(s)).rejected for s in range(10))
    detected = sum("subj00" in screen_subjects(plant_outlier(gaussian_panel(s))).rejected for s in range(30))
    assert detected >= 27
    # one-sided bias is not a rejection reason under the P/Q balance rule
    d = gaussian_panel(3)
    for per in d.values():
        per["subj05"] += 40.0
    assert "subj05" not in screen_subjects(d).rejected


def test_screening_accepts_trials_and_drop():
    trials = [trial(f"s{k}", 90, 90 - 20 - k, ri=f"R{i}") for k in range(4) for i in range(3)]
    res = screen_subjects(trials)
    assert sorted(res.retained) == ["s0", "s1", "s2", "s3"]
    kept = drop_subjects(difference_scores(trials), ["s0"])
    assert all("s0" not in per for per in kept.values())


@settings(max_examples=200, deadline=None)
@given(a=st.floats(0.1, 200), b=st.floats(0.1, 200), x=st.floats(0, 1))
def test_betainc_matches_reference(a, b, x):
    assert betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(F=st.floats(0, 200), d1=st.integers(1, 10), d2=st.integers(1, 400))
def test_f_distribution(F, d1, d2):
    assert f_sf(F, d1, d2) == pytest.approx(stats.f.sf(F, d1, d2), abs=1e-10)
    assert f_cdf(F, d1, d2) + f_sf(F, d1, d2) == pytest.approx(1.0)


def test_anova_cases():
    res = anova_one_way([1, 2, 3], [1, 2, 3])
    assert res.F == 0.0 and res.p == 1.0 and not res.degenerate
    same = anova_one_way([2, 2], [2, 2])
    assert same.degenerate and (same.F, same.p) == (0.0, 1.0)
    apart = anova_one_way([2, 2], [3, 3])
    assert apart.degenerate and apart.F == float("inf") and apart.p == 0.0
    F, p = anova_one_way([1.0, 2.0, 3.5], [2.0, 4.0, 4.5, 5.0], [0.5, 1.0])
    ref = stats.f_oneway([1.0, 2.0, 3.5], [2.0, 4.0, 4.5, 5.0], [0.5, 1.0])
    assert F == pytest.approx(ref.statistic, rel=1e-12) and p == pytest.approx(ref.pvalue, abs=1e-12)
    with pytest.raises(DataError):
        anova_one_way([1.0], [2.0, 3.0])
    with pytest.raises(DataError):
        anova_one_way([1.0, float("nan")], [2.0, 3.0])


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), k=st.integers(2, 4))
def test_anova_against_scipy(seed, k):
    rng = np.random.default_rng(seed)
    groups = [rng.normal(rng.uniform(0, 2), 1, int(rng.integers(2, 25))) for _ in range(k)]
    res = anova_one_way(*groups)
    ref = stats.f_oneway(*groups)
    assert res.F == pytest.approx(ref.statistic, rel=1e-9)
    assert res.p == pytest.approx(ref.pvalue, abs=1e-9)


def test_format_cell():
    assert format_cell(5, 36, 5, 0) == "5/36, (5/0)"
    assert format_cell(5, 36, 0, 5) == "5/36, (0/-5)"
    assert format_cell(2, 36, 1, 1) == "2/36, (1/-1)"


@pytest.mark.skipif(not PAPER.exists(), reason="published text not available")
def test_format_cell_reproduces_published_cells():
    cells = re.findall(r"(\d+)/(\d+), \((\d+)/(-?\d+)\)", PAPER.read_text(encoding="utf-8"))
    assert len(cells) >= 12
    for k, n, w, l in cells:
        text = f"{k}/{n}, ({w}/{l})"
        assert format_cell(int(k), int(n), int(w), abs(int(l))) == text
        assert int(k) == int(w) + abs(int(l))


def _panel_for(codecs, points, shift, seed):
    rng = np.random.default_rng(seed)
    trials = []
    for c in codecs:
        for p in points:
            for s in range(15):
                d = float(np.clip(40 + shift.get((c, p), 0) + rng.normal(0, 4), 0, 100))
                trials.append(trial(f"subj{s}", 95, 95 - d, seq=p[0], codec=c, ri=p[1]))
    return trials


def test_significance_matrix_structure():
    points = [(f"seq{i}", f"R{j}") for i in range(3) for j in range(1, 5)]
    shift = {("vtm", p): -25 for p in points[:5]}
    trials = _panel_for(["hm", "av1", "vtm"], points, shift, seed=1)
    per = diffs_by_codec(difference_scores(trials))
    cells = significance_matrix(per)
    look = {c.codec_pair: c for c in cells}
    assert len(cells) == 6
    for (a, b), c in look.items():
        mirror = look[(b, a)]
        assert c.n_significant == mirror.n_significant and c.wins == mirror.losses and c.n_total == 12
    assert look[("vtm", "hm")].wins >= 5
    table = significance_table(cells, ["av1", "hm", "vtm"])
    assert table[0] == ["", "av1", "hm", "vtm"] and table[1][1] == "-"
    missing = dict(per)
    missing["av1"] = {k: v for k, v in per["av1"].items() if k != points[0]}
    with pytest.raises(DataError):
        significance_matrix(missing)
