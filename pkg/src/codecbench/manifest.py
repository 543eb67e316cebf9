"""Run manifests: a TOML file describing sequences, codecs, ladders and targets.

Key set::

    [run]            output_dir, metrics, selection_metric, tolerance, qps, jobs,
                     seed, timing, frames, anchor
    [groups.<G>]     reference = [W, H], ladder = [[W, H], ...]
    [[sequences]]    name, and either path (geometry from the file name or
                     width/height/fps/bit_depth keys) or synthetic = "<kind>"
                     with width/height/frames/seed
    [codecs.<id>]    kind = "toy" | "external", encode_template, decode_template,
                     qp_range = [lo, hi], fixed_args, fractional_template,
                     recon_bit_depth, timeout
    [metrics.<id>]   tool, pattern, version_pattern (external scorers, e.g. vmaf)
    [targets.<seq>]  <G> = [kbps, ...]
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .codecs.adapters import EncoderAdapter
from .errors import FilenameParseError, ManifestError, VideoFormatError
from .media import as_fraction, parse_sequence_filename
from .metrics import DEFAULT_SCORE_PATTERN, DEFAULT_VERSION_PATTERN, NATIVE_METRICS
from .synthetic import KINDS

GROUP_NAMES = ("A", "B", "C")
KNOWN_METRICS = tuple(NATIVE_METRICS) + ("vmaf", "vif", "vsnr", "subj")


@dataclass(frozen=True)
class ResolutionGroup:
    name: str
    reference: tuple
    ladder: tuple


@dataclass(frozen=True)
class SequenceSpec:
    name: str
    path: str | None = None
    width: int | None = None
    height: int | None = None
    fps: object = 60
    bit_depth: int = 8
    synthetic: str | None = None
    frames: int | None = None
    seed: int = 0


@dataclass(frozen=True)
class ExternalMetric:
    metric_id: str
    tool: str
    pattern: str = DEFAULT_SCORE_PATTERN
    version_pattern: str = DEFAULT_VERSION_PATTERN


@dataclass
class RunManifest:
    sequences: list
    codecs: dict
    resolution_groups: dict
    targets: dict = field(default_factory=dict)
    selection_metric: str = "psnr"
    metrics: tuple = ("psnr", "ssim", "msssim")
    tolerance: float = 0.03
    output_dir: Path = Path("out")
    qps: tuple = (22, 27, 32, 37)
    jobs: int = 1
    seed: int = 0
    timing: bool = False
    frames: int | None = None
    anchor: str | None = None
    external_metrics: dict = field(default_factory=dict)
    source: Path | None = None

    def group(self, name):
        try:
            return self.resolution_groups[name]
        except KeyError:
            raise ManifestError(f"groups.{name}", "group not defined in manifest") from None

    def sequence(self, name):
        for s in self.sequences:
            if s.name == name:
                return s
        raise ManifestError("sequences", f"no sequence named {name!r}")


def _dims(value, where):
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, int) and v > 0 for v in value)):
        raise ManifestError(where, f"expected [width, height] of positive integers, got {value!r}")
    if value[0] % 2 or value[1] % 2:
        raise ManifestError(where, f"dimensions must be even, got {value[0]}x{value[1]}")
    return (int(value[0]), int(value[1]))


def _parse_groups(raw):
    groups = {}
    for name, g in raw.items():
        where = f"groups.{name}"
        if not isinstance(g, dict) or "reference" not in g:
            raise ManifestError(where, "needs a reference = [W, H]")
        ref = _dims(g["reference"], where + ".reference")
        ladder = tuple(_dims(d, f"{where}.ladder[{i}]") for i, d in enumerate(g.get("ladder", [list(ref)])))
        if not ladder:
            raise ManifestError(where + ".ladder", "ladder is empty")
        for w, h in ladder:
            if w > ref[0] or h > ref[1]:
                raise ManifestError(where + ".ladder", f"rung {w}x{h} exceeds reference {ref[0]}x{ref[1]}")
        groups[name] = ResolutionGroup(name, ref, ladder)
    return groups


def _parse_sequence(i, s, base_dir):
    where = f"sequences[{i}]"
    if not isinstance(s, dict):
        raise ManifestError(where, "expected a table")
    if "synthetic" in s:
        kind = s["synthetic"]
        if kind not in KINDS:
            raise ManifestError(where + ".synthetic", f"unknown kind {kind!r}; choose from {', '.join(KINDS)}")
        return SequenceSpec(name=s.get("name", f"synth_{kind}_{s.get('seed', 0)}"), synthetic=kind,
                            width=int(s.get("width", 320)), height=int(s.get("height", 180)),
                            fps=s.get("fps", 60), bit_depth=int(s.get("bit_depth", 8)),
                            frames=int(s.get("frames", 60)), seed=int(s.get("seed", 0)))
    if "path" not in s:
        raise ManifestError(where, "needs either path or synthetic")
    path = Path(s["path"])
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    geo = {}
    try:
        base, w, h, fps, depth = parse_sequence_filename(path.name)
        geo = dict(width=w, height=h, fps=fps, bit_depth=depth, name=base)
    except FilenameParseError:
        if not all(k in s for k in ("width", "height")):
            raise ManifestError(where, f"{path.name} does not follow <base>_<W>x<H>_<fps>fps_<depth>bit.yuv; "
                                "give width and height explicitly") from None
    for k in ("width", "height", "fps", "bit_depth", "name"):
        if k in s:
            geo[k] = s[k]
    try:
        as_fraction(geo.get("fps", 60))
    except (ValueError, ZeroDivisionError, VideoFormatError):
        raise ManifestError(where + ".fps", f"bad frame rate {geo.get('fps')!r}") from None
    if geo.get("bit_depth", 8) not in (8, 10):
        raise ManifestError(where + ".bit_depth", "must be 8 or 10")
    return SequenceSpec(name=str(geo.get("name", path.stem)), path=str(path), width=int(geo["width"]),
                        height=int(geo["height"]), fps=geo.get("fps", 60), bit_depth=int(geo.get("bit_depth", 8)),
                        frames=s.get("frames"))


def _parse_codec(cid, c):
    where = f"codecs.{cid}"
    if not isinstance(c, dict):
        raise ManifestError(where, "expected a table")
    kind = c.get("kind", "external")
    qr = c.get("qp_range", [0, 50] if kind == "toy" else [0, 51])
    if not isinstance(qr, list) or len(qr) != 2 or not all(isinstance(v, int) for v in qr):
        raise ManifestError(where + ".qp_range", f"expected [qp_min, qp_max], got {qr!r}")
    known = {"kind", "encode_template", "decode_template", "qp_range", "fixed_args",
             "fractional_template", "recon_bit_depth", "timeout"}
    extra = set(c) - known
    if extra:
        raise ManifestError(where, f"unknown key(s) {', '.join(sorted(extra))}")
    return EncoderAdapter(codec_id=cid, encode_template=c.get("encode_template"), qp_range=tuple(qr),
                          fixed_args=c.get("fixed_args", ""), kind=kind,
                          decode_template=c.get("decode_template"),
                          fractional_template=c.get("fractional_template"),
                          recon_bit_depth=c.get("recon_bit_depth"), timeout=c.get("timeout"))


def parse_manifest(data: dict, base_dir=None) -> RunManifest:
    run = data.get("run", {})
    groups = _parse_groups(data.get("groups", {}))
    if not groups:
        raise ManifestError("groups", "at least one resolution group is required")
    for g in groups:
        if g not in GROUP_NAMES:
            raise ManifestError(f"groups.{g}", f"group names are {', '.join(GROUP_NAMES)}")
    seqs = [_parse_sequence(i, s, base_dir) for i, s in enumerate(data.get("sequences", []))]
    if not seqs:
        raise ManifestError("sequences", "at least one sequence is required")
    names = [s.name for s in seqs]
    if len(set(names)) != len(names):
        raise ManifestError("sequences", "sequence names must be unique")
    codecs = {cid: _parse_codec(cid, c) for cid, c in data.get("codecs", {}).items()}
    if not codecs:
        raise ManifestError("codecs", "at least one codec is required")

    targets = {}
    for seq, per in data.get("targets", {}).items():
        if seq not in names:
            raise ManifestError(f"targets.{seq}", "no such sequence")
        for g, vals in per.items():
            if g not in groups:
                raise ManifestError(f"targets.{seq}.{g}", "no such group")
            if not isinstance(vals, list) or not vals or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in vals):
                raise ManifestError(f"targets.{seq}.{g}", f"targets must be positive numbers, got {vals!r}")
            targets[(seq, g)] = tuple(vals)

    metrics = tuple(run.get("metrics", ["psnr", "ssim", "msssim"]))
    ext = {}
    for mid, m in data.get("metrics", {}).items():
        if "tool" not in m:
            raise ManifestError(f"metrics.{mid}.tool", "external metric needs a tool template")
        ext[mid] = ExternalMetric(mid, m["tool"], m.get("pattern", DEFAULT_SCORE_PATTERN),
                                  m.get("version_pattern", DEFAULT_VERSION_PATTERN))
    for m in metrics:
        if m not in NATIVE_METRICS and m not in ext:
            raise ManifestError("run.metrics", f"metric {m!r} is neither native nor configured under [metrics]")
    sel = run.get("selection_metric", metrics[0] if metrics else "psnr")
    if sel not in metrics:
        raise ManifestError("run.selection_metric", f"{sel!r} is not among run.metrics {list(metrics)}")
    tol = run.get("tolerance", 0.03)
    if not isinstance(tol, (int, float)) or not 0 < tol < 1:
        raise ManifestError("run.tolerance", f"expected a fraction in (0, 1), got {tol!r}")
    qps = run.get("qps", [22, 27, 32, 37])
    if not isinstance(qps, list) or not all(isinstance(q, int) for q in qps):
        raise ManifestError("run.qps", f"expected a list of integers, got {qps!r}")
    anchor = run.get("anchor")
    if anchor is not None and anchor not in codecs:
        raise ManifestError("run.anchor", f"anchor codec {anchor!r} is not defined")
    out = Path(run.get("output_dir", "out"))
    if not out.is_absolute() and base_dir is not None:
        out = base_dir / out
    jobs = run.get("jobs", 1)
    if not isinstance(jobs, int) or jobs < 1:
        raise ManifestError("run.jobs", "must be a positive integer")
    return RunManifest(seqs, codecs, groups, targets, sel, metrics, float(tol), out, tuple(qps), jobs,
                       int(run.get("seed", 0)), bool(run.get("timing", False)), run.get("frames"),
                       anchor, ext)


def load_manifest(path) -> RunManifest:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ManifestError("--manifest", f"{path} does not exist") from None
    except tomllib.TOMLDecodeError as exc:
        raise ManifestError("--manifest", f"{path}: {exc}") from None
    m = parse_manifest(data, base_dir=path.parent)
    m.source = path
    return m


# ------------------------------------------------------------------- writing

def _toml_str(s):
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return _toml_str(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return str(v)


def targets_manifest_text(rows, codecs=None, reference=None, output_dir="out"):
    """Manifest text from target-table rows ``(sequence, group, [target tokens])``.

    Target tokens are written verbatim so the emitted lists match the source
    transcription byte for byte.
    """
    reference = reference or {"A": (3840, 2160), "B": (1920, 1080), "C": (1920, 1080)}
    ladders = {"A": [(3840, 2160)], "B": [(1920, 1080)], "C": [(1920, 1080), (1280, 720), (960, 544)]}
    groups = sorted({g for _, g, _ in rows})
    lines = ["[run]", f"output_dir = {_toml_str(output_dir)}", 'metrics = ["psnr", "ssim", "msssim"]',
             'selection_metric = "psnr"', "tolerance = 0.03", ""]
    for g in groups:
        ref = reference.get(g, (1920, 1080))
        lad = ladders.get(g, [ref])
        lines += [f"[groups.{g}]", f"reference = [{ref[0]}, {ref[1]}]",
                  "ladder = [" + ", ".join(f"[{w}, {h}]" for w, h in lad) + "]", ""]
    seqs = list(dict.fromkeys(s for s, _, _ in rows))
    for s in seqs:
        lines += ["[[sequences]]", f"name = {_toml_str(s)}",
                  f"path = {_toml_str(f'{s}_3840x2160_60fps_10bit.yuv')}", ""]
    codecs = codecs or {"toy": {"kind": "toy", "qp_range": [0, 50]}}
    for cid, c in codecs.items():
        lines.append(f"[codecs.{cid}]")
        lines += [f"{k} = {_toml_value(v)}" for k, v in c.items()]
        lines.append("")
    for s in seqs:
        lines.append(f"[targets.{s}]")
        for seq, g, toks in rows:
            if seq == s:
                lines.append(f"{g} = [" + ", ".join(toks) + "]")
        lines.append("")
    return "\n".join(lines)
