import math
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codecbench.errors import DataError, MetricParseError, MetricToolError
from codecbench.media import sequence_from_arrays
from codecbench.metrics import (MS_SSIM_WEIGHTS, PSNR_CAP_DB, external_metric, ms_ssim, ms_ssim_plane, psnr,
                                score_native, si_ti, sobel_magnitude, ssim)


def seq(*planes, depth=8):
    return sequence_from_arrays([np.asarray(p) for p in planes], bit_depth=depth)


def test_psnr_cases():
    a = np.full((16, 16), 100)
    assert psnr(seq(a), seq(a)).value == PSNR_CAP_DB
    assert psnr(seq(a, depth=10), seq(a + 1, depth=10)).value == pytest.approx(20 * math.log10(1023), abs=1e-12)
    two = psnr(seq(a, a), seq(a + 1, a + 2))
    assert two.per_frame == pytest.approx([20 * math.log10(255), 10 * math.log10(255 ** 2 / 4)])
    assert two.value == pytest.approx(np.mean(two.per_frame))
    with pytest.raises(DataError):
        psnr(seq(a), seq(np.full((16, 8), 1)))
    with pytest.raises(ValueError):
        psnr(seq(a), seq(a), mode="rgb")


def test_psnr_yuv611_weights_planes():
    from codecbench.media import VideoFrame, VideoSequence
    y = np.full((8, 8), 50)
    c = np.full((4, 4), 50)
    ref = VideoSequence((VideoFrame(8, 8, 8, y, c, c),), 30)
    dist = VideoSequence((VideoFrame(8, 8, 8, y, c + 4, c),), 30)
    expected = 10 * math.log10(255 ** 2 / (16 / 8))
    assert psnr(ref, dist, "yuv611").value == pytest.approx(expected)
    assert psnr(ref, dist).value == PSNR_CAP_DB


def test_ssim_properties():
    rng = np.random.default_rng(1)
    x = rng.integers(0, 256, (32, 32))
    y = np.clip(x + rng.normal(0, 20, x.shape), 0, 255).round()
    s_xy = ssim(seq(x), seq(y)).value
    assert s_xy == pytest.approx(ssim(seq(y), seq(x)).value, abs=1e-15)
    assert 0 < s_xy < 1
    worse = np.clip(x + rng.normal(0, 60, x.shape), 0, 255).round()
    assert ssim(seq(x), seq(worse)).value < s_xy
    with pytest.raises(DataError):
        ssim(seq(np.zeros((6, 6))), seq(np.zeros((6, 6)) + 1))


def _brute_terms(x, y, peak, win=8, stride=4):
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    ls, cs = [], []
    for i in range(0, x.shape[0] - win + 1, stride):
        for j in range(0, x.shape[1] - win + 1, stride):
            a = x[i:i + win, j:j + win].ravel()
            b = y[i:i + win, j:j + win].ravel()
            ma, mb = a.mean(), b.mean()
            cov = ((a - ma) * (b - mb)).mean()
            ls.append((2 * ma * mb + c1) / (ma * ma + mb * mb + c1))
            cs.append((2 * cov + c2) / (a.var() + b.var() + c2))
    return float(np.mean(ls)), float(np.mean(cs))


def test_ms_ssim_matches_scale_by_scale_oracle():
    rng = np.random.default_rng(2)
    x = rng.integers(0, 256, (128, 160)).astype(float)
    y = np.clip(x + rng.normal(0, 15, x.shape), 0, 255).round()
    value = 1.0
    a, b = x, y
    for j, w in enumerate(MS_SSIM_WEIGHTS):
        lum, cs = _brute_terms(a, b, 255)
        value *= cs ** w
        if j == len(MS_SSIM_WEIGHTS) - 1:
            value *= lum ** w
        else:
            a = 0.25 * (a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2])
            b = 0.25 * (b[0::2, 0::2] + b[1::2, 0::2] + b[0::2, 1::2] + b[1::2, 1::2])
    assert ms_ssim_plane(x, y, 255) == pytest.approx(value, abs=1e-12)
    assert ms_ssim(seq(x), seq(y)).value == pytest.approx(value, abs=1e-12)
    with pytest.raises(DataError):
        ms_ssim_plane(x[:64], y[:64], 255)


def test_score_native_dispatch():
    a = np.full((16, 16), 9)
    assert score_native("psnr", seq(a), seq(a)).value == PSNR_CAP_DB
    with pytest.raises(DataError):
        score_native("vmaf", seq(a), seq(a))


def test_si_ti():
    flat = seq(np.full((16, 16), 40), np.full((16, 16), 40))
    assert si_ti(flat).si == 0 and si_ti(flat).ti == 0
    ramp = np.tile(np.arange(16) * 4, (16, 1))
    assert np.allclose(sobel_magnitude(ramp), 32.0)
    moving = seq(np.full((16, 16), 40), np.pad(np.full((8, 16), 80), ((0, 8), (0, 0)), constant_values=40))
    assert si_ti(moving).ti == pytest.approx(20.0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), sigma=st.floats(0.5, 50))
def test_psnr_monotone_in_noise(seed, sigma):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 256, (16, 16))
    n = rng.normal(0, 1, x.shape)
    y1 = np.clip(x + np.round(sigma * n), 0, 255)
    y2 = np.clip(x + np.round(2 * sigma * n), 0, 255)
    assert psnr(seq(x), seq(y2)).value <= psnr(seq(x), seq(y1)).value + 1e-12


def _tool(body):
    return f'{sys.executable} -c "{body}" {{ref}} {{dist}} {{width}}'


def test_external_metric_parsing(tmp_path):
    geo = {"width": 16, "height": 8, "bitdepth": 8, "fps": 30.0, "frames": 1}
    out = external_metric(_tool("print('libvmaf version 2.3.1'); print('VMAF score: 87.25')"), "r", "d", geo)
    assert out.value == 87.25 and out.tool_version == "2.3.1"
    with pytest.raises(MetricToolError):
        external_metric(_tool("import sys; sys.exit(2)"), "r", "d", geo)
    with pytest.raises(MetricParseError):
        external_metric(_tool("print('nothing here')"), "r", "d", geo)
    with pytest.raises(MetricToolError):
        external_metric("tool {ref} {nope}", "r", "d", geo)
