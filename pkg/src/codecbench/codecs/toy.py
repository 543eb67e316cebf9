"""A small deterministic block codec so the pipeline runs without HM/AV1/VTM.

Each plane is edge-padded to a multiple of 8, split into 8x8 blocks and coded
as an orthonormal DCT of the residual against a prediction: mid-grey for
intra frames, the previous reconstruction for inter frames. Levels use a
uniform quantiser with step ``2 ** ((qp - 4) / 6)`` and are entropy coded as
zig-zag run/level pairs in order-0 exp-Golomb codes. Each frame picks
whichever mode codes smaller.

Bitstream layout (little-endian)::

    header  16 bytes  "TYC1", u16 width, u16 height, u8 bit_depth, u8 0,
                      u16 fps_num, u16 fps_den, u16 frame_count
    frame   u8 mode (0 intra, 1 inter), u8 qp, u32 payload_bytes, payload

The payload holds the Y, U and V planes back to back, padded to a byte.
"""

from __future__ import annotations

import struct
from fractions import Fraction

import numpy as np

from .._core import get_backend
from ..errors import DataError, MalformedBitstreamError
from ..media import VideoFrame, VideoSequence

MAGIC = b"TYC1"
HEADER = struct.Struct("<4sHHBBHHH")
FRAME_HEADER = struct.Struct("<BBI")
MODE_INTRA, MODE_INTER = 0, 1
QP_MIN, QP_MAX = 0, 63


def _dct_matrix(n=8):
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    m[0] /= np.sqrt(2.0)
    return m


DCT = _dct_matrix()


def _zigzag(n=8):
    order = sorted(((i, j) for i in range(n) for j in range(n)),
                   key=lambda p: (p[0] + p[1], p[1] if (p[0] + p[1]) % 2 == 0 else p[0]))
    return np.array([i * n + j for i, j in order])


ZIGZAG = _zigzag()
UNZIGZAG = np.argsort(ZIGZAG)


def qp_step(qp):
    return 2.0 ** ((qp - 4) / 6.0)


def _round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _pad(plane):
    h, w = plane.shape
    return np.pad(plane, ((0, (-h) % 8), (0, (-w) % 8)), mode="edge")


def _to_blocks(p):
    h, w = p.shape
    return p.reshape(h // 8, 8, w // 8, 8).swapaxes(1, 2).reshape(-1, 8, 8)


def _from_blocks(b, h, w):
    return b.reshape(h // 8, w // 8, 8, 8).swapaxes(1, 2).reshape(h, w)


def _code_plane(src, pred, step):
    """Quantised zig-zag levels of ``src - pred`` (both already padded)."""
    coef = DCT @ _to_blocks(src - pred) @ DCT.T
    q = _round_half_away(coef / step).reshape(-1, 64)
    return q[:, ZIGZAG].astype(np.int32)


def _reconstruct_plane(levels, pred, step, max_value, out_shape):
    hp, wp = pred.shape
    coef = levels[:, UNZIGZAG].astype(np.float64).reshape(-1, 8, 8) * step
    resid = _from_blocks(DCT.T @ coef @ DCT, hp, wp)
    rec = np.clip(_round_half_away(pred + resid), 0, max_value)
    h, w = out_shape
    return rec[:h, :w]


def _predictions(prev, mode, shapes, bit_depth):
    if mode == MODE_INTRA:
        mid = float(1 << (bit_depth - 1))
        return [np.full((h + (-h) % 8, w + (-w) % 8), mid) for h, w in shapes]
    return [_pad(p.astype(np.float64)) for p in prev.planes]


def _frame_qp(qp, index, increment_frame):
    if increment_frame is not None and index >= increment_frame:
        return min(qp + 1, QP_MAX)
    return qp


def toy_encode(seq: VideoSequence, qp: int, increment_frame=None, backend=None):
    """Encode ``seq`` at ``qp``; returns ``(bitstream, recon)``.

    ``increment_frame`` raises the QP by one from that frame index onward,
    giving rates between two integer QPs.
    """
    if not (QP_MIN <= qp <= QP_MAX) or int(qp) != qp:
        raise ValueError(f"toy codec qp must be an integer in [{QP_MIN}, {QP_MAX}], got {qp}")
    if seq.width % 2 or seq.height % 2 or seq.width > 0xFFFF or seq.height > 0xFFFF:
        raise DataError(f"toy codec cannot code {seq.width}x{seq.height}")
    if seq.fps.numerator > 0xFFFF or seq.fps.denominator > 0xFFFF or seq.frame_count > 0xFFFF:
        raise DataError("frame rate or frame count does not fit the toy header")
    k = get_backend(backend)
    depth = seq.bit_depth
    maxval = (1 << depth) - 1
    shapes = [p.shape for p in seq.frames[0].planes]
    padded_shapes = [(h + (-h) % 8, w + (-w) % 8) for h, w in shapes]
    plane_blocks = [h * w // 64 for h, w in padded_shapes]

    out = bytearray(HEADER.pack(MAGIC, seq.width, seq.height, depth, 0,
                                seq.fps.numerator, seq.fps.denominator, seq.frame_count))
    recon = []
    prev = None
    for idx, frame in enumerate(seq.frames):
        fqp = _frame_qp(int(qp), idx, increment_frame)
        step = qp_step(fqp)
        srcs = [_pad(p.astype(np.float64)) for p in frame.planes]
        modes = [MODE_INTRA] if prev is None else [MODE_INTRA, MODE_INTER]
        best = None
        for mode in modes:
            preds = _predictions(prev, mode, shapes, depth)
            levels = np.concatenate([_code_plane(s, p, step) for s, p in zip(srcs, preds)])
            bits = k.coded_bits(levels, plane_blocks)
            if best is None or bits < best[0]:
                best = (bits, mode, levels, preds)
        _, mode, levels, preds = best
        payload = k.encode_levels(levels, plane_blocks)
        out += FRAME_HEADER.pack(mode, fqp, len(payload))
        out += payload
        prev = _rebuild(levels, preds, plane_blocks, step, maxval, shapes, depth)
        recon.append(prev)
    return bytes(out), VideoSequence(tuple(recon), seq.fps, f"{seq.name}_toy_qp{qp}")


def _rebuild(levels, preds, plane_blocks, step, maxval, shapes, depth):
    planes = []
    start = 0
    for n, pred, shape in zip(plane_blocks, preds, shapes):
        planes.append(_reconstruct_plane(levels[start:start + n], pred, step, maxval, shape))
        start += n
    return VideoFrame(shapes[0][1], shapes[0][0], depth, *planes)


def toy_decode(bitstream: bytes, backend=None) -> VideoSequence:
    k = get_backend(backend)
    data = bytes(bitstream)
    if len(data) < HEADER.size:
        raise MalformedBitstreamError("bitstream shorter than the 16-byte header")
    magic, w, h, depth, _, fnum, fden, count = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise MalformedBitstreamError(f"bad magic {magic!r}")
    if depth not in (8, 10) or w == 0 or h == 0 or w % 2 or h % 2 or fnum == 0 or fden == 0 or count == 0:
        raise MalformedBitstreamError("header fields out of range")
    maxval = (1 << depth) - 1
    shapes = [(h, w), (h // 2, w // 2), (h // 2, w // 2)]
    padded = [(a + (-a) % 8, b + (-b) % 8) for a, b in shapes]
    plane_blocks = [a * b // 64 for a, b in padded]
    pos = HEADER.size
    prev = None
    frames = []
    for idx in range(count):
        if pos + FRAME_HEADER.size > len(data):
            raise MalformedBitstreamError(f"truncated at frame {idx} header")
        mode, fqp, nbytes = FRAME_HEADER.unpack_from(data, pos)
        pos += FRAME_HEADER.size
        if mode not in (MODE_INTRA, MODE_INTER) or (mode == MODE_INTER and prev is None) or fqp > QP_MAX:
            raise MalformedBitstreamError(f"frame {idx}: bad mode {mode} or qp {fqp}")
        if pos + nbytes > len(data):
            raise MalformedBitstreamError(f"truncated inside frame {idx} payload")
        try:
            levels, used = k.decode_levels(data[pos:pos + nbytes], plane_blocks)
        except ValueError as exc:
            raise MalformedBitstreamError(f"frame {idx}: {exc}") from None
        if (used + 7) // 8 != nbytes:
            raise MalformedBitstreamError(f"frame {idx}: payload length mismatch")
        pos += nbytes
        preds = _predictions(prev, mode, shapes, depth)
        prev = _rebuild(levels, preds, plane_blocks, qp_step(fqp), maxval, shapes, depth)
        frames.append(prev)
    if pos != len(data):
        raise MalformedBitstreamError(f"{len(data) - pos} trailing bytes after last frame")
    return VideoSequence(tuple(frames), Fraction(fnum, fden), "toy_decoded")


def payload_sizes(bitstream: bytes):
    """(mode, qp, payload_bytes) for each frame, without decoding."""
    data = bytes(bitstream)
    _, _, _, _, _, _, _, count = HEADER.unpack_from(data, 0)
    pos = HEADER.size
    out = []
    for _ in range(count):
        mode, fqp, n = FRAME_HEADER.unpack_from(data, pos)
        out.append((mode, fqp, n))
        pos += FRAME_HEADER.size + n
    return out
