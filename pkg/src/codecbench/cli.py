"""codecbench command line.

Subcommands: encode, target, ladder, hull, bd, dmos, anova, correlate, siti, report.
Exit status: 0 ok, 2 manifest error, 3 process/tool error, 4 data/validation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from collections import defaultdict
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, tables
from .codecs.adapters import complexity_ratio, format_ratio
from .correlation import METRIC_COLUMNS, evaluate_metric_suite, correlation_table
from .errors import CurveError, DataError, HarnessError, ManifestError, ToolError
from .manifest import load_manifest, targets_manifest_text
from .media import sequence_filename, write_raw_video
from .metrics import si_ti
from .pipeline import LadderContext, fixed_qp_points, hull_of, load_sequence, targeted_points
from .plots import line_plot
from .ratequality import (NonMonotoneCurveWarning, average_curves, bd_quality, bd_rate, build_rq_curve,
                          envelope_gaps, hull_curve_at)
from .subjective import (compute_dmos, difference_scores, diffs_by_codec, drop_subjects, quality_from_dmos,
                         screen_subjects, significance_matrix, significance_table)

log = logging.getLogger("codecbench")


# ------------------------------------------------------------------ helpers

def _manifest(args, required=True):
    if not args.manifest:
        if required:
            raise ManifestError("--manifest", "this command needs a run manifest")
        return None
    if args.manifest == "demo":
        ref = resources.files("codecbench") / "data" / "demo_manifest.toml"
        with resources.as_file(ref) as p:
            m = load_manifest(p)
        m.output_dir = Path.cwd() / "codecbench_demo_out"
    else:
        m = load_manifest(args.manifest)
    if args.jobs is not None:
        m.jobs = args.jobs
    if args.tolerance is not None:
        if not 0 < args.tolerance < 1:
            raise ManifestError("--tolerance", "expected a fraction in (0, 1)")
        m.tolerance = args.tolerance
    if args.seed is not None:
        m.seed = args.seed
    if args.metric is not None and args.cmd in ("encode", "target", "hull"):
        if args.metric not in m.metrics:
            raise ManifestError("--metric", f"{args.metric!r} is not among run.metrics {list(m.metrics)}")
        m.selection_metric = args.metric
    if m.timing and m.jobs != 1:
        log.info("timing enabled: forcing --jobs 1")
        m.jobs = 1
    return m


def _out_dir(args, manifest):
    if args.out:
        d = Path(args.out)
    elif manifest is not None:
        d = manifest.output_dir
    else:
        d = Path(".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _groups(args, manifest):
    if args.group:
        return [manifest.group(args.group)]
    return [manifest.resolution_groups[g] for g in sorted(manifest.resolution_groups)]


def _label(codec, res, group):
    """Curve label: the codec id at the reference rung, ``codec@WxH`` elsewhere."""
    if tuple(res) == tuple(group.reference):
        return codec
    return f"{codec}@{res[0]}x{res[1]}"


def _relabel(points, group):
    return [replace(p, codec=_label(p.codec, p.encode_resolution, group)) for p in points]


def _merge_rqpoints(path, new_points):
    """Replace rows sharing (group, sequence, codec, enc dims, rate_index); keep the rest."""
    key = lambda p: (p.group or "", p.sequence, p.codec, p.encode_resolution, p.rate_index or "")
    old = tables.read_rqpoints(path) if Path(path).exists() else []
    fresh = {key(p) for p in new_points}
    merged = [p for p in old if key(p) not in fresh] + list(new_points)
    tables.write_rqpoints(path, merged)
    return merged


def _family(rate_index):
    """Fixed-QP rows ("QP27") and rate-targeted rows ("R3") never share a curve."""
    return "QP" if (rate_index or "").startswith("QP") else "R"


def _curves(points, metric):
    """Group points into curves keyed by (group, sequence, codec, rate-index family)."""
    by = defaultdict(list)
    for p in points:
        if metric in p.scores:
            by[(p.group or "", p.sequence, p.codec, _family(p.rate_index))].append(p)
    out = {}
    for k, pts in sorted(by.items()):
        if len(pts) < 2:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonMonotoneCurveWarning)
            out[k] = build_rq_curve(pts, metric)
    return out


def _rq_plots(points, metric, out, timestamp):
    curves = _curves(points, metric)
    by_seq = defaultdict(list)
    for (g, s, c, fam), curve in curves.items():
        by_seq[(g, s, c.split("@")[0].removesuffix("-DO"), fam)].append((c, curve))
    written = []
    for (g, s, base, fam), items in sorted(by_seq.items()):
        series = [{"label": c, "x": list(curve.rates), "y": list(curve.qualities), "dash": "@" in c}
                  for c, curve in sorted(items)]
        name = f"rq_{g or 'all'}_{s}_{base}_{fam.lower()}.svg"
        written.append(line_plot(series, out / "plots" / name, f"{s} ({base}, group {g})", "bitrate (kbps)",
                                 metric, timestamp=timestamp, logx=True))
    return written


def _print_table(rows):
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip())


# ----------------------------------------------------------------- commands

def cmd_encode(args):
    m = _manifest(args)
    out = _out_dir(args, m)
    points = []
    for g in _groups(args, m):
        for spec in m.sequences:
            ctx = LadderContext(load_sequence(spec, m.frames), g.reference, g.ladder)
            for cid, adapter in m.codecs.items():
                pts = fixed_qp_points(adapter, ctx, m.qps, m.metrics, g.name, m.jobs, m.timing,
                                      m.external_metrics)
                points += _relabel(pts, g)
                log.info("encoded %s with %s in group %s: %d points", spec.name, cid, g.name, len(pts))
    all_pts = _merge_rqpoints(out / "rqpoints.csv", points)
    _rq_plots(all_pts, m.selection_metric, out, not args.no_timestamp)
    print(f"wrote {len(points)} rate points to {out / 'rqpoints.csv'}")
    return 0


def _targeted(m, args):
    points, misses = [], []
    for g in _groups(args, m):
        for spec in m.sequences:
            targets = m.targets.get((spec.name, g.name))
            if not targets:
                continue
            ctx = LadderContext(load_sequence(spec, m.frames), g.reference, g.ladder)
            for cid, adapter in m.codecs.items():
                sel, cands, miss = targeted_points(adapter, ctx, targets, m.metrics, m.selection_metric,
                                                   m.tolerance, g.name, m.jobs, m.timing, m.external_metrics)
                points += _relabel(cands, g)
                if len(g.ladder) > 1:
                    points += [replace(p, codec=f"{cid}-DO") for p in sel]
                misses += [(spec.name, cid, g.name, res, ri, o) for res, ri, o in miss]
    return points, misses


def cmd_target(args):
    m = _manifest(args)
    out = _out_dir(args, m)
    if not m.targets:
        raise ManifestError("targets", "no [targets] tables in the manifest")
    points, misses = _targeted(m, args)
    all_pts = _merge_rqpoints(out / "rqpoints.csv", points)
    _rq_plots(all_pts, m.selection_metric, out, not args.no_timestamp)
    for seq, cid, g, res, ri, o in misses:
        lo, hi = o.bracket
        print(f"unreachable: {seq} {cid} group {g} {res[0]}x{res[1]} {ri} target {o.target_kbps:g} kbps, "
              f"closest {o.achieved.bitrate_kbps:.1f} kbps, bracketing QPs {lo} / {hi}")
    print(f"wrote {len(points)} rate points to {out / 'rqpoints.csv'} ({len(misses)} unreachable)")
    return 0


def cmd_ladder(args):
    m = _manifest(args)
    out = _out_dir(args, m) / "ladder"
    out.mkdir(parents=True, exist_ok=True)
    rows = [("sequence", "group", "rung", "file")]
    for g in _groups(args, m):
        for spec in m.sequences:
            ctx = LadderContext(load_sequence(spec, m.frames), g.reference, g.ladder)
            for (w, h), seq in ctx.rungs.items():
                p = write_raw_video(seq, out / sequence_filename(spec.name, w, h, seq.fps, seq.bit_depth))
                rows.append((spec.name, g.name, f"{w}x{h}", p.name))
    _print_table(rows)
    return 0


def cmd_hull(args):
    m = _manifest(args)
    out = _out_dir(args, m)
    groups = [m.group(args.group)] if args.group else [
        m.resolution_groups.get("C") or max(m.resolution_groups.values(), key=lambda g: len(g.ladder))]
    metric = m.selection_metric
    hull_rows, points = [], []
    status = 0
    overlay = defaultdict(lambda: {"do": [], "fixed": []})
    for g in groups:
        for spec in m.sequences:
            ctx = LadderContext(load_sequence(spec, m.frames), g.reference, g.ladder)
            for cid, adapter in m.codecs.items():
                pts = fixed_qp_points(adapter, ctx, m.qps, m.metrics, g.name, m.jobs, m.timing,
                                      m.external_metrics)
                hull = hull_of(pts, metric)
                for i, v in enumerate(hull.vertices):
                    hull_rows.append({"sequence": spec.name, "codec": cid, "group": g.name, "metric": metric,
                                      "vertex": i, "enc_w": v.encode_resolution[0], "enc_h": v.encode_resolution[1],
                                      "actual_kbps": v.bitrate_kbps, "qp": tables.fmt_qp(v.qp),
                                      "quality": v.quality(metric)})
                for res in g.ladder:
                    rung = [p for p in pts if p.encode_resolution == tuple(res)]
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", NonMonotoneCurveWarning)
                        curve = build_rq_curve(rung, metric)
                    gap = float(np.min(envelope_gaps(hull, curve)))
                    if gap < -1e-9:
                        print(f"dominance violated: {spec.name} {cid} {res[0]}x{res[1]} gap {gap:.6f}")
                        status = 4
                    if tuple(res) == tuple(g.reference):
                        overlay[(g.name, cid)]["fixed"].append(curve)
                        overlay[(g.name, cid)]["do"].append(hull_curve_at(hull, curve.rates, curve, f"{cid}-DO"))
                points += _relabel(pts, g)
                series = []
                for res in g.ladder:
                    rung = sorted((p for p in pts if p.encode_resolution == tuple(res)), key=lambda p: p.bitrate_kbps)
                    series.append({"label": f"{res[0]}x{res[1]}", "x": [p.bitrate_kbps for p in rung],
                                   "y": [p.quality(metric) for p in rung], "dash": True})
                series.append({"label": "convex hull", "x": list(hull.rates), "y": list(hull.qualities)})
                line_plot(series, out / "plots" / f"hull_{g.name}_{spec.name}_{cid}.svg",
                          f"{spec.name} {cid}: ladder and hull", "bitrate (kbps)", metric,
                          timestamp=not args.no_timestamp, logx=True)
    tables.write_csv(out / "hull.csv", tables.HULL_COLUMNS, hull_rows)
    _merge_rqpoints(out / "rqpoints.csv", points)
    for (gname, cid), d in sorted(overlay.items()):
        fixed = average_curves(d["fixed"])
        do = average_curves(d["do"])
        bd = bd_rate(fixed, do).bd_rate_percent if len(fixed) >= 4 else float("nan")
        line_plot([{"label": f"{cid} (fixed {'x'.join(map(str, m.group(gname).reference))})",
                    "x": list(fixed.rates), "y": list(fixed.qualities)},
                   {"label": f"{cid} (DO)", "x": list(do.rates), "y": list(do.qualities), "dash": True}],
                  out / "plots" / f"average_do_vs_fixed_{gname}_{cid}.svg",
                  f"average rate-{metric} curves, BD-rate {bd:+.1f}%", "bitrate (kbps)", metric,
                  timestamp=not args.no_timestamp, logx=True)
        print(f"group {gname} {cid}: DO vs fixed average BD-rate {bd:+.2f}%")
    print(f"wrote {len(hull_rows)} hull vertices to {out / 'hull.csv'}")
    return status


def _rq_input(args, manifest):
    if args.input:
        return Path(args.input)
    if args.demo:
        return None
    return _out_dir(args, manifest) / "rqpoints.csv"


def cmd_bd(args):
    m = _manifest(args, required=False)
    if args.demo:
        with resources.as_file(resources.files("codecbench") / "data" / "demo_curves.csv") as p:
            pts = tables.read_rqpoints(p)
    else:
        pts = tables.read_rqpoints(_rq_input(args, m))
    out = _out_dir(args, m)
    metric = args.metric or (m.selection_metric if m else "psnr")
    if args.group:
        pts = [p for p in pts if (p.group or "") == args.group]
    curves = _curves(pts, metric)
    if not curves:
        raise DataError(f"no curves with {metric!r} scores")
    codecs = sorted({k[2] for k in curves})
    anchor = args.anchor or (m.anchor if m else None) or codecs[0]
    if anchor not in codecs:
        raise DataError(f"anchor codec {anchor!r} not in the data ({', '.join(codecs)})")
    rows = []
    summary = defaultdict(list)
    for (g, s, c, fam), curve in curves.items():
        if c == anchor and not args.include_anchor:
            continue
        a = curves.get((g, s, anchor, fam))
        if a is None:
            continue
        try:
            r = bd_rate(a, curve)
            q = bd_quality(a, curve)
        except CurveError as exc:
            log.warning("BD %s/%s %s vs %s skipped: %s", g, s, c, anchor, exc)
            continue
        rows.append({"sequence": s, "group": g, "metric": metric, "anchor": anchor, "test": _test_label(c, fam),
                     "bd_rate": r.bd_rate_percent, "bd_quality": q.bd_quality,
                     "overlap_lo": r.overlap_interval[0], "overlap_hi": r.overlap_interval[1]})
        summary[(g, _test_label(c, fam))].append((r.bd_rate_percent, q.bd_quality))
    if not rows:
        raise DataError(f"no curve pairs against anchor {anchor!r} could be compared")
    for (g, c), vals in sorted(summary.items()):
        rows.append({"sequence": "Average", "group": g, "metric": metric, "anchor": anchor, "test": c,
                     "bd_rate": float(np.mean([v[0] for v in vals])),
                     "bd_quality": float(np.mean([v[1] for v in vals]))})
    tables.write_csv(out / "bdreport.csv", tables.BD_COLUMNS, rows)
    table = [("group", "sequence", "test", f"BD-rate ({metric})", "BD-quality")]
    table += [(r["group"], r["sequence"], r["test"], f"{r['bd_rate']:+.2f}%", f"{r['bd_quality']:+.4f}")
              for r in rows]
    _print_table(table)
    return 0


def _test_label(codec, fam):
    return codec if fam == "R" else f"{codec} (fixed QP)"


def _scores_path(args, m):
    if args.scores:
        return Path(args.scores)
    return _out_dir(args, m) / "scores.csv"


def _screened_diffs(trials, screen=True):
    diffs = difference_scores(trials)
    if not screen:
        return diffs, None
    res = screen_subjects(diffs)
    return drop_subjects(diffs, res.rejected), res


def cmd_dmos(args):
    m = _manifest(args, required=False)
    out = _out_dir(args, m)
    trials = tables.read_scores(_scores_path(args, m))
    diffs, res = _screened_diffs(trials, not args.no_screen)
    if res is not None:
        tables.write_csv(out / "screening.csv", ("subject_id", "P", "Q", "N", "rejected"),
                         [{"subject_id": s, **{k: d[k] for k in ("P", "Q", "N")}, "rejected": d["rejected"]}
                          for s, d in sorted(res.diagnostics.items())])
        print(f"screening: {len(res.retained)} retained, {len(res.rejected)} rejected"
              + (f" ({', '.join(res.rejected)})" if res.rejected else ""))
    recs = compute_dmos(diffs)
    tables.write_dmos(out / "dmos.csv", recs)
    for r in recs:
        if r.negative:
            print(f"flag: negative DMOS {r.dmos:.3f} at {r.sequence}/{r.codec}/{r.rate_index} "
                  f"(subjective quality {quality_from_dmos(r):.3f} > 100)")
    rq = Path(args.input) if args.input else out / "rqpoints.csv"
    if rq.exists():
        by_point = {r.point: quality_from_dmos(r) for r in recs}
        upd, hits = [], 0
        for p in tables.read_rqpoints(rq):
            q = by_point.get((p.sequence, p.codec, p.rate_index or ""))
            hits += q is not None
            upd.append(p.with_score("subj", q) if q is not None else p)
        tables.write_rqpoints(rq, upd)
        print(f"attached subj = 100 - DMOS to {hits} rows of {rq}")
    print(f"wrote {len(recs)} DMOS records to {out / 'dmos.csv'}")
    return 0


def cmd_anova(args):
    m = _manifest(args, required=False)
    out = _out_dir(args, m)
    trials = tables.read_scores(_scores_path(args, m))
    diffs, _ = _screened_diffs(trials, not args.no_screen)
    per_codec = diffs_by_codec(diffs)
    if len(per_codec) < 2:
        raise DataError("significance testing needs at least two codecs")
    cells = significance_matrix(per_codec, alpha=args.alpha)
    group = args.group or ""
    tables.write_csv(out / "significance.csv", tables.SIGNIFICANCE_COLUMNS,
                     [{"group": group, "codec_a": c.codec_a, "codec_b": c.codec_b,
                       "n_significant": c.n_significant, "n_total": c.n_total, "wins": c.wins,
                       "losses": c.losses, "cell": c.text()} for c in cells])
    _print_table(significance_table(cells))
    return 0


def cmd_correlate(args):
    m = _manifest(args, required=False)
    out = _out_dir(args, m)
    rq = Path(args.input) if args.input else out / "rqpoints.csv"
    rows = tables.read_csv(rq, required=("sequence", "codec", "rate_index"))
    dm = tables.read_dmos(Path(args.dmos) if args.dmos else out / "dmos.csv")
    if args.group:
        rows = [r for r in rows if r.get("group") == args.group]
    # only the cells that went through the subjective test take part in the join
    scored = {(d.sequence, d.codec, _family(d.rate_index)) for d in dm}
    rows = [r for r in rows if (r["sequence"], r["codec"], _family(r["rate_index"])) in scored]
    metrics = [args.metric] if args.metric else [c for c in METRIC_COLUMNS if rows and c in rows[0]]
    seed = args.seed if args.seed is not None else (m.seed if m else 0)
    entries = evaluate_metric_suite(rows, dm, metrics, seed=seed, floor=args.floor)
    if not entries:
        raise DataError("no metric column had at least 5 scored points")
    tables.write_csv(out / "correlation.csv", tables.CORRELATION_COLUMNS,
                     [{"group": e.group, "metric": e.metric, "srocc": e.stats.srocc, "lcc": e.stats.lcc,
                       "or": e.stats.outlier_ratio, "rmse": e.stats.rmse, "n": e.stats.n_points}
                      for e in entries])
    print(correlation_table(entries))
    return 0


def cmd_siti(args):
    m = _manifest(args, required=False)
    out = _out_dir(args, m)
    seqs = []
    if args.input:
        from .media import read_named_video
        seqs = [read_named_video(p) for p in args.input.split(",")]
    elif m is not None:
        seqs = [load_sequence(s, m.frames) for s in m.sequences]
    else:
        raise ManifestError("--manifest", "siti needs a manifest or --input files")
    rows = []
    for s in seqs:
        v = si_ti(s)
        rows.append({"sequence": s.name, "si": v.si, "ti": v.ti})
    tables.write_csv(out / "siti.csv", tables.SITI_COLUMNS, rows)
    line_plot([{"label": r["sequence"], "x": [r["si"]], "y": [r["ti"]]} for r in rows],
              out / "plots" / "siti.svg", "spatial and temporal information", "SI", "TI",
              timestamp=not args.no_timestamp)
    _print_table([("sequence", "SI", "TI")] + [(r["sequence"], f"{r['si']:.2f}", f"{r['ti']:.2f}") for r in rows])
    return 0


def _bd_matrix(rows):
    """BD-rate matrix: rows are sequences plus Average, columns are test/metric."""
    cols = sorted({(r["group"], r["test"], r["metric"]) for r in rows})
    seqs = list(dict.fromkeys(r["sequence"] for r in rows if r["sequence"] != "Average"))
    val = {(r["group"], r["test"], r["metric"], r["sequence"]): r["bd_rate"] for r in rows}
    out = [["sequence"] + [f"{t} {mt} ({g})" if g else f"{t} {mt}" for g, t, mt in cols]]
    for s in seqs:
        out.append([s] + [val.get((g, t, mt, s), "") for g, t, mt in cols])
    avg = ["Average"]
    for g, t, mt in cols:
        v = val.get((g, t, mt, "Average"))
        if v in (None, ""):
            nums = [float(val[(g, t, mt, s)]) for s in seqs if val.get((g, t, mt, s)) not in (None, "")]
            v = f"{np.mean(nums):.6f}" if nums else ""
        avg.append(v)
    out.append(avg)
    return [[c if i == 0 or j == 0 or c == "" else f"{float(c):+.1f}%" for j, c in enumerate(r)]
            for i, r in enumerate(out)]


def _complexity(points, anchor):
    by = defaultdict(dict)
    for p in points:
        if p.wall_seconds:
            by[p.codec][(p.group, p.sequence, p.rate_index, p.encode_resolution)] = p.wall_seconds
    rows = []
    for codec in sorted(by):
        if codec == anchor or anchor not in by:
            continue
        keys = sorted(set(by[codec]) & set(by[anchor]))
        if keys:
            r = complexity_ratio([by[codec][k] for k in keys], [by[anchor][k] for k in keys])
            rows.append((codec, anchor, len(keys), format_ratio(r)))
    return rows


def cmd_report(args):
    m = _manifest(args, required=False)
    out = _out_dir(args, m)
    lines = ["# codecbench report", ""]
    emitted = None
    if args.targets_csv:
        trows = tables.read_targets_table(args.targets_csv)
        emitted = out / "targets_manifest.toml"
        emitted.write_text(targets_manifest_text(trows), encoding="utf-8")
        print(f"wrote manifest with {len(trows)} target lists to {emitted}")
        lines += ["## Target bitrates (kbps)", ""]
        lines += ["| sequence | group | targets |", "|---|---|---|"]
        lines += [f"| {s} | {g} | {' / '.join(t)} |" for s, g, t in trows]
        lines.append("")
    bd_path = Path(args.input) if args.input else out / "bdreport.csv"
    if bd_path.exists():
        rows = tables.read_csv(bd_path, required=("sequence", "test", "metric", "bd_rate"))
        for r in rows:
            r.setdefault("group", "")
        mat = _bd_matrix(rows)
        lines += ["## BD-rate against the anchor", ""]
        lines.append("| " + " | ".join(mat[0]) + " |")
        lines.append("|" + "---|" * len(mat[0]))
        lines += ["| " + " | ".join(r) + " |" for r in mat[1:]]
        lines.append("")
        _print_table(mat)
    sig = out / "significance.csv"
    if sig.exists():
        srows = tables.read_csv(sig, required=tables.SIGNIFICANCE_COLUMNS)
        codecs = sorted({r["codec_a"] for r in srows})
        look = {(r["codec_a"], r["codec_b"]): r["cell"] for r in srows}
        lines += ["## Significant differences (p < .05)", "", "| | " + " | ".join(codecs) + " |",
                  "|" + "---|" * (len(codecs) + 1)]
        lines += ["| " + a + " | " + " | ".join("-" if a == b else look.get((a, b), "") for b in codecs) + " |"
                  for a in codecs]
        lines.append("")
    corr = out / "correlation.csv"
    if corr.exists():
        crows = tables.read_csv(corr, required=tables.CORRELATION_COLUMNS)
        lines += ["## Metric correlation (SROCC / LCC / OR / RMSE)", "", "| group | metric | stats | n |",
                  "|---|---|---|---|"]
        lines += [f"| {r['group']} | {r['metric']} | {float(r['srocc']):.4f} / {float(r['lcc']):.4f} / "
                  f"{float(r['or']):.4f} / {float(r['rmse']):.4f} | {r['n']} |" for r in crows]
        lines.append("")
    rq = out / "rqpoints.csv"
    if rq.exists():
        pts = tables.read_rqpoints(rq)
        anchor = args.anchor or (m.anchor if m else None)
        crow = _complexity(pts, anchor) if anchor else []
        if crow:
            lines += ["## Encoding complexity", "", "| codec | benchmark | points | average ratio |",
                      "|---|---|---|---|"]
            lines += [f"| {c} | {a} | {n} | {r} |" for c, a, n, r in crow]
            lines.append("")
    (out / "report.md").write_text("\n".join(lines), encoding="utf-8")
    print(f"wrote {out / 'report.md'}")
    return 0


COMMANDS = {
    "encode": (cmd_encode, "fixed-QP encodes of every sequence/codec/ladder rung"),
    "target": (cmd_target, "rate-targeted encodes (+-tolerance) with DO selection on multi-rung ladders"),
    "ladder": (cmd_ladder, "write the Lanczos-3 resampled ladder sources"),
    "hull": (cmd_hull, "ladder sweep, convex hull and DO-vs-fixed comparison"),
    "bd": (cmd_bd, "BD-rate / BD-quality against an anchor codec"),
    "dmos": (cmd_dmos, "screen subjects and compute DMOS from scores.csv"),
    "anova": (cmd_anova, "pairwise ANOVA significance matrix from scores.csv"),
    "correlate": (cmd_correlate, "logistic fit and SROCC/LCC/OR/RMSE per metric"),
    "siti": (cmd_siti, "spatial/temporal information of the sequences"),
    "report": (cmd_report, "tables (BD matrix, significance, correlation, complexity); manifest from targets CSV"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", help="run manifest (TOML); 'demo' for the bundled one")
    common.add_argument("--jobs", type=int, default=None, help="worker threads for encodes")
    common.add_argument("--seed", type=int, default=None, help="seed for randomised steps (default 0)")
    common.add_argument("--group", choices=("A", "B", "C"), help="restrict to one resolution group")
    common.add_argument("--metric", help="quality metric id (selection / BD / correlation)")
    common.add_argument("--tolerance", type=float, default=None, help="rate tolerance as a fraction")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp comment in SVGs")
    common.add_argument("--out", help="output directory (overrides run.output_dir)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="codecbench", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"codecbench {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)
    for name, (_, helptext) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=helptext)
        if name in ("bd", "dmos", "correlate", "report", "siti"):
            sp.add_argument("--input", help="input table (rqpoints.csv, bdreport.csv or .yuv list)")
        if name == "bd":
            sp.add_argument("--anchor", help="anchor codec label")
            sp.add_argument("--demo", action="store_true", help="use the bundled demo curves")
            sp.add_argument("--include-anchor", action="store_true", help="also compare the anchor with itself")
        if name in ("dmos", "anova"):
            sp.add_argument("--scores", help="scores.csv with DSCQS trials")
            sp.add_argument("--no-screen", action="store_true", help="skip observer screening")
        if name == "anova":
            sp.add_argument("--alpha", type=float, default=0.05)
        if name == "correlate":
            sp.add_argument("--dmos", help="dmos.csv")
            sp.add_argument("--floor", type=float, default=None, help="|SROCC| flag floor (default: permutation null)")
        if name == "report":
            sp.add_argument("--targets-csv", help="CSV of target bitrates (sequence,group,R1..Rn)")
            sp.add_argument("--anchor", help="benchmark codec for complexity ratios")
    return p


def _error_line(exc, code):
    info = {"error": type(exc).__name__, "exit": code, "message": str(exc)}
    if isinstance(exc, ManifestError):
        info["field"] = exc.field
    return json.dumps(info)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    fn = COMMANDS[args.cmd][0]
    try:
        return fn(args)
    except ManifestError as exc:
        print(_error_line(exc, 2), file=sys.stderr)
        return 2
    except ToolError as exc:
        print(_error_line(exc, 3), file=sys.stderr)
        if exc.output:
            print(exc.output[-2000:], file=sys.stderr)
        return 3
    except HarnessError as exc:
        print(_error_line(exc, 4), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
