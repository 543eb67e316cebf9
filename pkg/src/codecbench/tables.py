"""CSV schemas and deterministic reading/writing of the harness tables."""

from __future__ import annotations

import csv
import math
from pathlib import Path

from .errors import DataError
from .ratequality import RatePoint
from .subjective import TrialScore

RQ_COLUMNS = ("sequence", "codec", "group", "enc_w", "enc_h", "eval_w", "eval_h", "rate_index", "target_kbps",
              "actual_kbps", "qp", "psnr", "ssim", "msssim", "vmaf", "subj", "enc_seconds")
RQ_METRICS = ("psnr", "ssim", "msssim", "vmaf", "subj")
SCORES_COLUMNS = ("session", "subject_id", "sequence", "codec", "rate_index", "score_reference",
                  "score_distorted")
DMOS_COLUMNS = ("sequence", "codec", "rate_index", "dmos", "stdev", "n")
CORRELATION_COLUMNS = ("group", "metric", "srocc", "lcc", "or", "rmse", "n")
SIGNIFICANCE_COLUMNS = ("group", "codec_a", "codec_b", "n_significant", "n_total", "wins", "losses", "cell")
HULL_COLUMNS = ("sequence", "codec", "group", "metric", "vertex", "enc_w", "enc_h", "actual_kbps", "qp", "quality")
BD_COLUMNS = ("sequence", "group", "metric", "anchor", "test", "bd_rate", "bd_quality", "overlap_lo", "overlap_hi")
SITI_COLUMNS = ("sequence", "si", "ti")


def fmt(v, digits=6):
    """Fixed-precision text for floats, empty for missing values."""
    if v is None or v == "":
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.{digits}f}"
    return str(v)


def fmt_qp(q):
    if q is None or (isinstance(q, float) and math.isnan(q)):
        return ""
    if float(q).is_integer():
        return str(int(q))
    return f"{q:.4f}".rstrip("0").rstrip(".")


def write_csv(path, columns, rows):
    """Write dict rows with a fixed header; keys outside ``columns`` are an error."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            extra = set(r) - set(columns)
            if extra:
                raise ValueError(f"unexpected column(s) {sorted(extra)} for {path.name}")
            w.writerow([r.get(c, "") if isinstance(r.get(c, ""), str) else fmt(r.get(c)) for c in columns])
    return path


def read_csv(path, required=()):
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in required if c not in header]
            if missing:
                raise DataError(f"{path.name}: missing column(s) {', '.join(missing)}")
            return [dict(r) for r in reader]
    except FileNotFoundError:
        raise DataError(f"{path} does not exist") from None


def _float(v, what):
    if v in (None, ""):
        return None
    try:
        return float(v)
    except ValueError:
        raise DataError(f"{what}: {v!r} is not a number") from None


def point_to_row(p: RatePoint):
    row = {
        "sequence": p.sequence, "codec": p.codec, "group": p.group or "",
        "enc_w": p.encode_resolution[0], "enc_h": p.encode_resolution[1],
        "eval_w": p.evaluation_resolution[0], "eval_h": p.evaluation_resolution[1],
        "rate_index": p.rate_index or "", "target_kbps": p.target_kbps,
        "actual_kbps": float(p.bitrate_kbps), "qp": fmt_qp(p.qp), "enc_seconds": p.wall_seconds,
    }
    for m in RQ_METRICS:
        v = p.scores.get(m)
        row[m] = None if v is None else float(v)
    return row


def row_to_point(r) -> RatePoint:
    where = f"{r.get('sequence')}/{r.get('codec')}/{r.get('rate_index')}"
    scores = {}
    for m in RQ_METRICS + ("vif", "vsnr"):
        v = _float(r.get(m), f"{where} {m}")
        if v is not None:
            scores[m] = v
    rate = _float(r.get("actual_kbps"), f"{where} actual_kbps")
    if rate is None:
        raise DataError(f"{where}: actual_kbps is empty")
    qp = _float(r.get("qp"), f"{where} qp")
    ew, eh = r.get("enc_w") or 0, r.get("enc_h") or 0
    vw, vh = r.get("eval_w") or ew, r.get("eval_h") or eh
    return RatePoint(r["sequence"], r["codec"], (int(ew), int(eh)), (int(vw), int(vh)),
                     float("nan") if qp is None else qp, rate, scores, r.get("rate_index") or None,
                     _float(r.get("enc_seconds"), f"{where} enc_seconds"), r.get("group") or None,
                     _float(r.get("target_kbps"), f"{where} target_kbps"))


def write_rqpoints(path, points):
    rows = sorted((point_to_row(p) for p in points),
                  key=lambda r: (r["group"], r["sequence"], r["codec"], r["enc_w"] * r["enc_h"], r["actual_kbps"]))
    return write_csv(path, RQ_COLUMNS, rows)


def read_rqpoints(path):
    rows = read_csv(path, required=("sequence", "codec", "actual_kbps"))
    return [row_to_point(r) for r in rows]


def read_scores(path):
    rows = read_csv(path, required=SCORES_COLUMNS)
    out = []
    for i, r in enumerate(rows, start=2):
        try:
            out.append(TrialScore(r["subject_id"], r["sequence"], r["codec"], r["rate_index"],
                                  float(r["score_reference"]), float(r["score_distorted"]), r["session"]))
        except ValueError:
            raise DataError(f"{Path(path).name} line {i}: scores must be decimal numbers") from None
    return out


def write_scores(path, trials):
    rows = [{"session": t.session, "subject_id": t.subject_id, "sequence": t.sequence, "codec": t.codec,
             "rate_index": t.rate_index, "score_reference": float(t.score_reference),
             "score_distorted": float(t.score_distorted)} for t in trials]
    return write_csv(path, SCORES_COLUMNS, rows)


def write_dmos(path, records):
    rows = [{"sequence": r.sequence, "codec": r.codec, "rate_index": r.rate_index, "dmos": r.dmos,
             "stdev": r.stdev, "n": r.n_subjects} for r in sorted(records, key=lambda r: r.point)]
    return write_csv(path, DMOS_COLUMNS, rows)


def read_dmos(path):
    from .subjective import DMOSRecord
    rows = read_csv(path, required=DMOS_COLUMNS)
    return [DMOSRecord(r["sequence"], r["codec"], r["rate_index"], float(r["dmos"]), float(r["stdev"]),
                       int(r["n"])) for r in rows]


def read_targets_table(path):
    """Target-bitrate CSV (``sequence,group,R1..Rn``) as ``(sequence, group, [tokens])``.

    Tokens are kept as written; blank trailing cells are dropped.
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["sequence", "group"]:
            raise DataError(f"{Path(path).name}: header must start with sequence,group")
        out = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            toks = [t.strip() for t in row[2:] if t.strip()]
            for t in toks:
                try:
                    if float(t) <= 0:
                        raise ValueError
                except ValueError:
                    raise DataError(f"{Path(path).name} line {i}: bad target {t!r}") from None
            out.append((row[0].strip(), row[1].strip(), toks))
    return out
