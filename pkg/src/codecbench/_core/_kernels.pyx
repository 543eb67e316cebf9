# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: exp-Golomb block coding and 1-D resampling passes.

Must stay bit-identical with ``fallback.py``; the test suite checks both.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t

cnp.import_array()


cdef inline int _bitlen(uint64_t v) noexcept nogil:
    cdef int n = 0
    while v:
        v >>= 1
        n += 1
    return n


cdef inline int64_t _ue_len(uint64_t v) noexcept nogil:
    return 2 * _bitlen(v + 1) - 1


cdef inline uint64_t _se_map(int32_t c) noexcept nogil:
    # nonzero levels only: +1 -> 0, -1 -> 1, +2 -> 2, ...
    if c > 0:
        return <uint64_t>(2 * <int64_t>c - 2)
    return <uint64_t>(-2 * <int64_t>c - 1)


cdef int64_t _plane_bits(const int32_t[:, ::1] lv, int64_t start, int64_t stop) noexcept nogil:
    cdef int64_t b, skip = 0, bits = 0
    cdef int k, run, nz
    for b in range(start, stop):
        nz = 0
        for k in range(64):
            if lv[b, k] != 0:
                nz += 1
        if nz == 0:
            skip += 1
            continue
        bits += _ue_len(skip) + _ue_len(nz - 1)
        skip = 0
        run = 0
        for k in range(64):
            if lv[b, k] == 0:
                run += 1
            else:
                bits += _ue_len(run) + _ue_len(_se_map(lv[b, k]))
                run = 0
    if skip:
        bits += _ue_len(skip)
    return bits


def coded_bits(levels, plane_sizes):
    """Exact payload size in bits for ``encode_levels`` (before byte padding)."""
    cdef const int32_t[:, ::1] lv = np.ascontiguousarray(levels, dtype=np.int32)
    cdef int64_t total = 0, start = 0
    for n in plane_sizes:
        total += _plane_bits(lv, start, start + n)
        start += n
    return int(total)


cdef struct BitWriter:
    uint8_t* buf
    int64_t pos


cdef inline void _put(BitWriter* w, uint64_t code, int nbits) noexcept nogil:
    cdef int i
    cdef int64_t p
    for i in range(nbits - 1, -1, -1):
        if (code >> i) & 1:
            p = w.pos
            w.buf[p >> 3] |= <uint8_t>(0x80 >> (p & 7))
        w.pos += 1


cdef inline void _put_ue(BitWriter* w, uint64_t v) noexcept nogil:
    _put(w, v + 1, <int>_ue_len(v))


def encode_levels(levels, plane_sizes):
    """Pack zig-zag ordered (blocks, 64) levels into a byte-aligned payload."""
    cdef const int32_t[:, ::1] lv = np.ascontiguousarray(levels, dtype=np.int32)
    cdef int64_t nbits = coded_bits(lv, plane_sizes)
    out = bytearray((nbits + 7) // 8)
    cdef uint8_t[::1] view
    cdef BitWriter w
    if len(out) == 0:
        return bytes(out)
    view = out
    w.buf = &view[0]
    w.pos = 0
    cdef int64_t start = 0, stop, b, skip
    cdef int k, run, nz
    for n in plane_sizes:
        stop = start + n
        skip = 0
        with nogil:
            for b in range(start, stop):
                nz = 0
                for k in range(64):
                    if lv[b, k] != 0:
                        nz += 1
                if nz == 0:
                    skip += 1
                    continue
                _put_ue(&w, skip)
                _put_ue(&w, nz - 1)
                skip = 0
                run = 0
                for k in range(64):
                    if lv[b, k] == 0:
                        run += 1
                    else:
                        _put_ue(&w, run)
                        _put_ue(&w, _se_map(lv[b, k]))
                        run = 0
            if skip:
                _put_ue(&w, skip)
        start = stop
    return bytes(out)


cdef inline int _get_ue(const uint8_t* buf, int64_t nbits, int64_t* pos, uint64_t* out) noexcept nogil:
    # returns 0 on success, -1 when the stream runs out or the code is absurd
    cdef int zeros = 0
    cdef int64_t p = pos[0]
    cdef uint64_t v = 1
    cdef int i
    while True:
        if p >= nbits:
            return -1
        if (buf[p >> 3] >> (7 - (p & 7))) & 1:
            break
        zeros += 1
        p += 1
        if zeros > 62:
            return -1
    p += 1
    if p + zeros > nbits:
        return -1
    for i in range(zeros):
        v = (v << 1) | ((buf[p >> 3] >> (7 - (p & 7))) & 1)
        p += 1
    pos[0] = p
    out[0] = v - 1
    return 0


def decode_levels(payload, plane_sizes):
    """Inverse of ``encode_levels``.

    Returns ``(levels, bits_consumed)`` or raises ``ValueError`` describing
    where the payload stopped making sense.
    """
    cdef const uint8_t[::1] data = memoryview(bytes(payload)).cast("B") if len(payload) else None
    cdef int64_t total = 0
    for n in plane_sizes:
        total += n
    levels = np.zeros((total, 64), dtype=np.int32)
    cdef int32_t[:, ::1] lv = levels
    cdef int64_t nbits = len(payload) * 8
    cdef int64_t pos = 0, start = 0, stop, b
    cdef uint64_t v
    cdef int nz, i, k
    cdef const uint8_t* buf = NULL
    if len(payload):
        buf = &data[0]
    for n in plane_sizes:
        stop = start + n
        b = start
        while b < stop:
            if _get_ue(buf, nbits, &pos, &v) < 0:
                raise ValueError(f"payload exhausted reading skip run at bit {pos}")
            if <int64_t>v > stop - b:
                raise ValueError(f"skip run {v} overruns plane at bit {pos}")
            b += <int64_t>v
            if b == stop:
                break
            if _get_ue(buf, nbits, &pos, &v) < 0 or v > 63:
                raise ValueError(f"bad coefficient count at bit {pos}")
            nz = <int>v + 1
            k = -1
            for i in range(nz):
                if _get_ue(buf, nbits, &pos, &v) < 0:
                    raise ValueError(f"payload exhausted reading run at bit {pos}")
                k += <int>v + 1
                if k > 63:
                    raise ValueError(f"run overruns block at bit {pos}")
                if _get_ue(buf, nbits, &pos, &v) < 0 or v > 0x7FFFFFFE:
                    raise ValueError(f"payload exhausted reading level at bit {pos}")
                if v & 1:
                    lv[b, k] = -<int32_t>((v + 1) >> 1)
                else:
                    lv[b, k] = <int32_t>((v >> 1) + 1)
            b += 1
        start = stop
    return levels, int(pos)


def resample_rows(src, idx, weights):
    """out[r, j] = sum_t weights[j, t] * src[r, idx[j, t]], taps summed in order."""
    cdef const double[:, ::1] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef const int64_t[:, ::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef const double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t rows = s.shape[0], nout = ix.shape[0], taps = ix.shape[1]
    out = np.empty((rows, nout), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t r, j, t
    cdef double acc
    with nogil:
        for r in range(rows):
            for j in range(nout):
                acc = 0.0
                for t in range(taps):
                    acc = acc + w[j, t] * s[r, ix[j, t]]
                o[r, j] = acc
    return out
