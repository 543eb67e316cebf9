import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codecbench.media import VideoFrame
from codecbench.resample import (axis_taps, lanczos3_kernel, resample_plane, resample_plane_float,
                                 resize_frame, resize_sequence)
from codecbench.synthetic import make_synthetic_sequence


def test_kernel_values():
    assert lanczos3_kernel(0) == 1.0
    for k in (1, 2, -1, -2, 3, -3, 3.5, 10):
        assert lanczos3_kernel(k) == 0.0
    assert lanczos3_kernel(0.5) == pytest.approx(3 * np.sin(np.pi / 2) * np.sin(np.pi / 6) / (np.pi / 2) ** 2)
    assert lanczos3_kernel(0.7) == lanczos3_kernel(-0.7)
    with pytest.raises(ValueError):
        lanczos3_kernel(float("nan"))


def test_taps_sum_to_one_and_stay_in_range():
    for n_src, n_dst in ((1080, 544), (544, 1080), (33, 7), (7, 33)):
        t = axis_taps(n_src, n_dst)
        assert np.allclose(t.weights.sum(axis=1), 1.0, atol=1e-14)
        assert t.idx.min() >= 0 and t.idx.max() < n_src


def test_identity_and_validation():
    f = VideoFrame.constant(16, 8, 8, 77)
    assert resize_frame(f, (16, 8)) is f
    with pytest.raises(ValueError):
        resize_frame(f, (15, 8))
    seq = make_synthetic_sequence(32, 16, 2, "camera_pan", seed=1)
    assert resize_sequence(seq, (32, 16)) is seq


def test_resize_sequence_geometry():
    seq = make_synthetic_sequence(64, 36, 2, "local_motion", seed=1, bit_depth=10)
    out = resize_sequence(seq, (32, 18))
    assert out.dims == (32, 18) and out.bit_depth == 10 and out.frame_count == 2
    assert out.frames[0].plane_u.shape == (9, 16)
    assert out.name.endswith("_32x18")


def test_integer_factor_down_then_up_preserves_smooth_content():
    yy, xx = np.mgrid[0:64, 0:64]
    plane = 128 + 40 * np.sin(xx / 9.0) * np.cos(yy / 11.0)
    small = resample_plane_float(plane, (32, 32))
    back = resample_plane_float(small, (64, 64))
    assert np.abs(back - plane)[8:-8, 8:-8].max() < 1.5


def test_clamping_and_rounding():
    plane = np.zeros((16, 16))
    plane[:, 8:] = 255
    out = resample_plane(plane, (24, 24), 255)
    assert out.min() >= 0 and out.max() <= 255
    assert np.all(out == np.round(out))


@settings(max_examples=40, deadline=None)
@given(sw=st.integers(4, 40), sh=st.integers(4, 40), tw=st.integers(1, 40), th=st.integers(1, 40),
       v=st.integers(0, 1023))
def test_dc_invariance_property(sw, sh, tw, th, v):
    out = resample_plane(np.full((sh, sw), v), (tw, th), 1023)
    assert np.all(out == v)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), tw=st.integers(2, 30), th=st.integers(2, 30))
def test_backends_agree(seed, tw, th):
    src = np.random.default_rng(seed).uniform(0, 1023, (20, 24))
    a = resample_plane_float(src, (tw, th), backend="python")
    b = resample_plane_float(src, (tw, th), backend="compiled")
    assert np.max(np.abs(a - b)) <= 1e-9
