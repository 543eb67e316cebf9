"""Pure-Python (numpy) versions of the compiled kernels.

Encoding is vectorised; decoding walks the bitstream one code at a time and
is correspondingly slow. Output must match ``_kernels.pyx`` bit for bit.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 1 << 18


def _bitlen(v):
    """Bit length of each element of a non-negative int64 array."""
    v = np.asarray(v, dtype=np.int64)
    n = np.zeros(v.shape, dtype=np.int64)
    nz = v > 0
    if nz.any():
        n[nz] = np.floor(np.log2(v[nz].astype(np.float64))).astype(np.int64) + 1
        # float log2 can be off by one near powers of two
        too_big = nz & ((np.int64(1) << np.maximum(n - 1, 0)) > v)
        n[too_big] -= 1
        too_small = nz & ((np.int64(1) << np.minimum(n, 62)) <= v)
        n[too_small] += 1
    return n


def _se_map(c):
    c = c.astype(np.int64)
    return np.where(c > 0, 2 * c - 2, -2 * c - 1)


def _plane_symbols(lv):
    """ue-coded symbol values for one plane, in bitstream order."""
    nzmask = lv != 0
    counts = nzmask.sum(axis=1)
    coded = np.flatnonzero(counts)
    n = lv.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if coded.size == 0:
        return np.array([n], dtype=np.int64)
    skips = np.diff(np.concatenate(([-1], coded))) - 1
    trailing = n - 1 - coded[-1]
    per_block = 2 + 2 * counts[coded]
    starts = np.concatenate(([0], np.cumsum(per_block)[:-1]))
    total = int(per_block.sum()) + (1 if trailing else 0)
    sym = np.empty(total, dtype=np.int64)
    sym[starts] = skips
    sym[starts + 1] = counts[coded] - 1

    b_idx, k_idx = np.nonzero(nzmask)  # row-major: blocks ascending, positions ascending
    first = np.ones(b_idx.size, dtype=bool)
    first[1:] = b_idx[1:] != b_idx[:-1]
    prev_k = np.empty_like(k_idx)
    prev_k[0] = -1
    prev_k[1:] = k_idx[:-1]
    prev_k[first] = -1
    runs = k_idx - prev_k - 1
    # ordinal of each nonzero within its block
    block_start = np.flatnonzero(first)
    ordinal = np.arange(b_idx.size) - np.repeat(block_start, np.diff(np.append(block_start, b_idx.size)))
    # starts is indexed by coded-block ordinal; map block id -> ordinal
    coded_ord = np.empty(n, dtype=np.int64)
    coded_ord[coded] = np.arange(coded.size)
    base = starts[coded_ord[b_idx]] + 2 + 2 * ordinal
    sym[base] = runs
    sym[base + 1] = _se_map(lv[b_idx, k_idx])
    if trailing:
        sym[-1] = trailing
    return sym


def _symbols(levels, plane_sizes):
    lv = np.ascontiguousarray(levels, dtype=np.int32)
    parts = []
    start = 0
    for n in plane_sizes:
        parts.append(_plane_symbols(lv[start:start + n]))
        start += n
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def coded_bits(levels, plane_sizes):
    sym = _symbols(levels, plane_sizes)
    return int((2 * _bitlen(sym + 1) - 1).sum())


def encode_levels(levels, plane_sizes):
    sym = _symbols(levels, plane_sizes)
    codes = sym + 1
    lens = 2 * _bitlen(codes) - 1
    bit_chunks = []
    for s in range(0, codes.size, _CHUNK):
        c = codes[s:s + _CHUNK]
        L = lens[s:s + _CHUNK]
        owner = np.repeat(np.arange(c.size), L)
        offs = np.arange(owner.size) - np.repeat(np.cumsum(L) - L, L)
        shift = L[owner] - 1 - offs
        bit_chunks.append(((c[owner] >> shift) & 1).astype(np.uint8))
    if not bit_chunks:
        return b""
    return np.packbits(np.concatenate(bit_chunks)).tobytes()


def decode_levels(payload, plane_sizes):
    bits = "".join(f"{b:08b}" for b in bytes(payload))
    nbits = len(bits)
    pos = 0

    def ue(what):
        nonlocal pos
        one = bits.find("1", pos)
        if one < 0:
            raise ValueError(f"payload exhausted reading {what} at bit {pos}")
        zeros = one - pos
        if zeros > 62 or one + zeros + 1 > nbits:
            raise ValueError(f"payload exhausted reading {what} at bit {pos}")
        v = int(bits[one:one + zeros + 1], 2) - 1
        pos = one + zeros + 1
        return v

    total = int(sum(plane_sizes))
    levels = np.zeros((total, 64), dtype=np.int32)
    start = 0
    for n in plane_sizes:
        stop = start + n
        b = start
        while b < stop:
            v = ue("skip run")
            if v > stop - b:
                raise ValueError(f"skip run {v} overruns plane at bit {pos}")
            b += v
            if b == stop:
                break
            nz = ue("coefficient count") + 1
            if nz > 64:
                raise ValueError(f"bad coefficient count at bit {pos}")
            k = -1
            for _ in range(nz):
                k += ue("run") + 1
                if k > 63:
                    raise ValueError(f"run overruns block at bit {pos}")
                v = ue("level")
                if v > 0x7FFFFFFE:
                    raise ValueError(f"payload exhausted reading level at bit {pos}")
                levels[b, k] = -((v + 1) >> 1) if v & 1 else (v >> 1) + 1
            b += 1
        start = stop
    return levels, pos


def resample_rows(src, idx, weights):
    src = np.ascontiguousarray(src, dtype=np.float64)
    idx = np.asarray(idx, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    out = np.zeros((src.shape[0], idx.shape[0]), dtype=np.float64)
    # same tap order as the compiled loop so rounding matches exactly
    for t in range(idx.shape[1]):
        out = out + weights[:, t] * src[:, idx[:, t]]
    return out
