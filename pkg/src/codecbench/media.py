"""Planar 4:2:0 raw video: frames, sequences and headerless ``.yuv`` I/O.

8-bit samples are stored one byte each. 10-bit samples live in the low bits
of little-endian 16-bit words and the high six bits must be zero.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FilenameParseError, SampleRangeError, SizeMismatchError, VideoFormatError

SUPPORTED_DEPTHS = (8, 10)


def _dtype_for(bit_depth):
    return np.uint8 if bit_depth == 8 else np.uint16


def frame_bytes(width, height, bit_depth):
    """Byte size of one 4:2:0 frame: 1.5*W*H samples, 1 or 2 bytes each."""
    bps = 1 if bit_depth == 8 else 2
    return (width * height + 2 * (width // 2) * (height // 2)) * bps


def as_fraction(fps):
    if isinstance(fps, Fraction):
        out = fps
    elif isinstance(fps, float):
        out = Fraction(fps).limit_denominator(1001)
    else:
        out = Fraction(fps)
    if out <= 0:
        raise VideoFormatError(f"fps must be positive, got {fps}")
    return out


@dataclass(frozen=True, eq=False)
class VideoFrame:
    """One 4:2:0 picture. Planes are read-only numpy arrays."""

    width: int
    height: int
    bit_depth: int
    plane_y: np.ndarray
    plane_u: np.ndarray
    plane_v: np.ndarray

    def __post_init__(self):
        if self.bit_depth not in SUPPORTED_DEPTHS:
            raise VideoFormatError(f"unsupported bit depth {self.bit_depth}")
        if self.width <= 0 or self.height <= 0 or self.width % 2 or self.height % 2:
            raise VideoFormatError(f"frame dims must be even and positive, got {self.width}x{self.height}")
        cw, ch = self.width // 2, self.height // 2
        dtype = _dtype_for(self.bit_depth)
        maxval = (1 << self.bit_depth) - 1
        for name, shape in (("plane_y", (self.height, self.width)),
                            ("plane_u", (ch, cw)), ("plane_v", (ch, cw))):
            plane = np.asarray(getattr(self, name))
            if plane.shape != shape:
                raise VideoFormatError(f"{name} has shape {plane.shape}, expected {shape}")
            if plane.size and (plane.min() < 0 or plane.max() > maxval):
                raise SampleRangeError(
                    f"{name} has samples outside [0, {maxval}] for {self.bit_depth}-bit content")
            plane = np.array(plane, dtype=dtype, copy=True)
            plane.setflags(write=False)
            object.__setattr__(self, name, plane)

    @property
    def planes(self):
        return (self.plane_y, self.plane_u, self.plane_v)

    @property
    def max_value(self):
        return (1 << self.bit_depth) - 1

    @classmethod
    def from_planes(cls, y, u, v, bit_depth):
        y = np.asarray(y)
        return cls(y.shape[1], y.shape[0], bit_depth, y, u, v)

    @classmethod
    def constant(cls, width, height, bit_depth, value, chroma=None):
        chroma = value if chroma is None else chroma
        y = np.full((height, width), value)
        c = np.full((height // 2, width // 2), chroma)
        return cls(width, height, bit_depth, y, c, c)

    def __eq__(self, other):
        if not isinstance(other, VideoFrame):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and self.bit_depth == other.bit_depth
                and all(np.array_equal(a, b) for a, b in zip(self.planes, other.planes)))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class VideoSequence:
    frames: tuple
    fps: Fraction
    name: str = "sequence"
    path: str | None = field(default=None, compare=False)

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise VideoFormatError("a sequence needs at least one frame")
        first = frames[0]
        for i, f in enumerate(frames):
            if (f.width, f.height, f.bit_depth) != (first.width, first.height, first.bit_depth):
                raise VideoFormatError(f"frame {i} geometry differs from frame 0")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "fps", as_fraction(self.fps))

    @property
    def width(self):
        return self.frames[0].width

    @property
    def height(self):
        return self.frames[0].height

    @property
    def bit_depth(self):
        return self.frames[0].bit_depth

    @property
    def dims(self):
        return (self.width, self.height)

    @property
    def frame_count(self):
        return len(self.frames)

    @property
    def duration_seconds(self):
        return float(self.frame_count / self.fps)

    def luma_stack(self, dtype=np.float64):
        """All luma planes as one (frames, H, W) array."""
        return np.stack([f.plane_y for f in self.frames]).astype(dtype)

    def with_frames(self, frames, name=None):
        return VideoSequence(tuple(frames), self.fps, self.name if name is None else name)

    def __len__(self):
        return len(self.frames)

    def __eq__(self, other):
        if not isinstance(other, VideoSequence):
            return NotImplemented
        return (self.fps == other.fps and len(self.frames) == len(other.frames)
                and all(a == b for a, b in zip(self.frames, other.frames)))

    __hash__ = None


def read_raw_video(path, width, height, bit_depth, fps, name=None) -> VideoSequence:
    """Read a headerless planar 4:2:0 file.

    Raises:
        SizeMismatchError: the file is not a whole number of frames.
        SampleRangeError: a 10-bit sample exceeds 1023.
    """
    path = Path(path)
    if bit_depth not in SUPPORTED_DEPTHS:
        raise VideoFormatError(f"unsupported bit depth {bit_depth}")
    if width % 2 or height % 2:
        raise VideoFormatError(f"4:2:0 needs even dims, got {width}x{height}")
    fsize = frame_bytes(width, height, bit_depth)
    total = os.path.getsize(path)
    if total == 0 or total % fsize:
        raise SizeMismatchError(
            f"{path}: {total} bytes is not a multiple of the {fsize}-byte frame size "
            f"for {width}x{height} {bit_depth}-bit 4:2:0")
    dtype = np.dtype("u1") if bit_depth == 8 else np.dtype("<u2")
    raw = np.fromfile(path, dtype=dtype)
    n_y = width * height
    n_c = (width // 2) * (height // 2)
    per_frame = n_y + 2 * n_c
    raw = raw.reshape(-1, per_frame)
    if bit_depth == 10 and raw.size and raw.max() > 1023:
        bad = int(np.argmax(raw.max(axis=1) > 1023))
        raise SampleRangeError(f"{path}: frame {bad} has samples above 1023 in 10-bit content")
    frames = []
    for row in raw:
        y = row[:n_y].reshape(height, width)
        u = row[n_y:n_y + n_c].reshape(height // 2, width // 2)
        v = row[n_y + n_c:].reshape(height // 2, width // 2)
        frames.append(VideoFrame(width, height, bit_depth, y, u, v))
    return VideoSequence(tuple(frames), fps, name or path.stem, path=str(path))


def write_raw_video(seq: VideoSequence, path) -> Path:
    path = Path(path)
    dtype = np.dtype("u1") if seq.bit_depth == 8 else np.dtype("<u2")
    with open(path, "wb") as fh:
        for f in seq.frames:
            for plane in f.planes:
                fh.write(np.ascontiguousarray(plane, dtype=dtype).tobytes())
    return path


_NAME_RE = re.compile(r"^(?P<base>.+)_(?P<dims>[^_]+)_(?P<fps>[^_]+)_(?P<depth>[^_]+)\.yuv$")


def parse_sequence_filename(name):
    """Split ``<base>_<W>x<H>_<fps>fps_<depth>bit.yuv`` into its fields.

    >>> parse_sequence_filename("CatRobot_3840x2160_60fps_10bit.yuv")
    ('CatRobot', 3840, 2160, 60, 10)
    """
    fname = Path(name).name
    m = _NAME_RE.match(fname)
    if not m:
        token = fname if not fname.endswith(".yuv") else fname[:-4]
        raise FilenameParseError(fname, token)
    dims = re.fullmatch(r"(\d+)x(\d+)", m["dims"])
    if not dims:
        raise FilenameParseError(fname, m["dims"])
    fps_m = re.fullmatch(r"(\d+(?:\.\d+)?)fps", m["fps"])
    if not fps_m:
        raise FilenameParseError(fname, m["fps"])
    depth_m = re.fullmatch(r"(\d+)bit", m["depth"])
    if not depth_m or int(depth_m[1]) not in SUPPORTED_DEPTHS:
        raise FilenameParseError(fname, m["depth"])
    fps_text = fps_m[1]
    fps = int(fps_text) if "." not in fps_text else float(fps_text)
    return m["base"], int(dims[1]), int(dims[2]), fps, int(depth_m[1])


def sequence_filename(base, width, height, fps, bit_depth):
    fps = as_fraction(fps)
    fps_text = str(fps.numerator) if fps.denominator == 1 else f"{float(fps):.3f}".rstrip("0")
    return f"{base}_{width}x{height}_{fps_text}fps_{bit_depth}bit.yuv"


def read_named_video(path, fps=None):
    """Read a file whose geometry is encoded in its name."""
    base, w, h, name_fps, depth = parse_sequence_filename(path)
    return read_raw_video(path, w, h, depth, fps or name_fps, name=base)


def sequence_from_arrays(luma: Sequence[np.ndarray], fps=30, bit_depth=8, name="sequence",
                         chroma_value=None):
    """Build a sequence from luma planes with flat mid-grey chroma."""
    frames = []
    mid = (1 << (bit_depth - 1)) if chroma_value is None else chroma_value
    for y in luma:
        y = np.asarray(y)
        h, w = y.shape
        c = np.full((h // 2, w // 2), mid)
        frames.append(VideoFrame(w, h, bit_depth, y, c, c))
    return VideoSequence(tuple(frames), fps, name)
