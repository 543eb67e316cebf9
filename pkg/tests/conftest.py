import numpy as np
import pytest

from codecbench.ratequality import RatePoint, RQCurve
from codecbench.synthetic import make_synthetic_sequence

# criterion id -> (passed, detail); filled by test_acceptance, printed at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"criterion {cid:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def curve_from(rates, qualities, codec="c", sequence="s", metric="psnr", res=(320, 180)):
    pts = [RatePoint(sequence, codec, res, res, float(i), float(r), {metric: float(q)}, rate_index=f"R{i + 1}")
           for i, (r, q) in enumerate(zip(rates, qualities))]
    pts.sort(key=lambda p: p.bitrate_kbps)
    return RQCurve(tuple(pts), metric)


def realistic_rq(rng, n=4, base=500.0):
    """Rates roughly doubling per point and a concave, rising quality in log-rate."""
    x = np.arange(n) + rng.uniform(-0.3, 0.3, n)
    rates = base * 2.0 ** x
    a = rng.uniform(2.5, 4.0)
    b = rng.uniform(0.0, 0.15)
    q = 30.0 + a * x - b * x * x + rng.uniform(-1, 1)
    return rates, q


def gaussian_panel(seed, n_subjects=20, n_points=36, bias_sd=6.0, noise_sd=3.0):
    """Difference scores: true DMOS + per-subject bias + per-trial noise."""
    rng = np.random.default_rng(seed)
    true = rng.uniform(10, 60, n_points)
    bias = rng.normal(0, bias_sd, n_subjects)
    diffs = {}
    for j in range(n_points):
        diffs[(f"seq{j // 4}", "codec", f"R{j % 4 + 1}")] = {
            f"subj{s:02d}": float(true[j] + bias[s] + rng.normal(0, noise_sd)) for s in range(n_subjects)}
    return diffs


def plant_outlier(diffs, who="subj00", k=2.5):
    """Every other point, push ``who`` k sample-sd away from the others, alternating side."""
    for j, key in enumerate(sorted(diffs)):
        if j % 2:
            continue
        per = diffs[key]
        others = np.array([v for s, v in per.items() if s != who])
        sign = 1 if (j // 2) % 2 == 0 else -1
        per[who] = float(others.mean() + sign * k * others.std(ddof=1))
    return diffs


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def small_seq():
    return make_synthetic_sequence(64, 48, 4, "local_motion", seed=3)


@pytest.fixture(scope="session")
def toy_seq():
    return make_synthetic_sequence(160, 90, 8, "camera_pan", seed=5)
