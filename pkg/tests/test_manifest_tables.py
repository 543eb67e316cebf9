import copy
from importlib import resources

import pytest

from codecbench.errors import DataError, ManifestError
from codecbench.manifest import load_manifest, parse_manifest, targets_manifest_text
from codecbench.ratequality import RatePoint
from codecbench.subjective import DMOSRecord, TrialScore
from codecbench.tables import (read_dmos, read_rqpoints, read_scores, read_targets_table, write_dmos,
                               write_rqpoints, write_scores)

BASE = {
    "run": {"metrics": ["psnr", "ssim"], "qps": [22, 32]},
    "groups": {"A": {"reference": [320, 180]},
               "C": {"reference": [320, 180], "ladder": [[320, 180], [160, 90]]}},
    "sequences": [{"name": "s1", "synthetic": "local_motion", "frames": 4},
                  {"path": "Foo_640x360_60fps_10bit.yuv"}],
    "codecs": {"toy": {"kind": "toy"}},
    "targets": {"s1": {"A": [500, 1000]}},
}


def variant(path, value):
    data = copy.deepcopy(BASE)
    node = data
    for k in path[:-1]:
        node = node[k]
    if value is None:
        del node[path[-1]]
    else:
        node[path[-1]] = value
    return data


def test_parse_valid_manifest(tmp_path):
    m = parse_manifest(BASE, base_dir=tmp_path)
    assert m.group("C").ladder == ((320, 180), (160, 90))
    assert m.group("A").ladder == ((320, 180),)
    foo = m.sequence("Foo")
    assert (foo.width, foo.height, foo.bit_depth) == (640, 360, 10)
    assert foo.path == str(tmp_path / "Foo_640x360_60fps_10bit.yuv")
    assert m.targets[("s1", "A")] == (500, 1000)
    assert m.selection_metric == "psnr" and m.qps == (22, 32) and m.tolerance == 0.03
    assert m.output_dir == tmp_path / "out"


@pytest.mark.parametrize("path,value,field", [
    (("groups", "C", "ladder"), [[640, 360]], "groups.C.ladder"),
    (("groups", "A", "reference"), [321, 180], "groups.A.reference"),
    (("groups", "B"), {"ladder": [[8, 8]]}, "groups.B"),
    (("run", "tolerance"), 1.5, "run.tolerance"),
    (("run", "selection_metric"), "vmaf", "run.selection_metric"),
    (("run", "metrics"), ["psnr", "vmaf"], "run.metrics"),
    (("run", "anchor"), "hm", "run.anchor"),
    (("run", "jobs"), 0, "run.jobs"),
    (("targets", "s1", "A"), [500, -1], "targets.s1.A"),
    (("targets", "nope"), {"A": [1]}, "targets.nope"),
    (("codecs", "toy", "bogus"), 1, "codecs.toy"),
    (("codecs",), None, "codecs"),
    (("sequences",), [{"path": "clip.yuv"}], "sequences[0]"),
    (("sequences",), [{"synthetic": "nope"}], "sequences[0].synthetic"),
])
def test_manifest_errors_name_the_field(path, value, field):
    with pytest.raises(ManifestError) as exc:
        parse_manifest(variant(path, value))
    assert exc.value.field == field
    assert exc.value.exit_code == 2


def test_load_manifest_errors(tmp_path):
    with pytest.raises(ManifestError, match="does not exist"):
        load_manifest(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[run\n")
    with pytest.raises(ManifestError):
        load_manifest(bad)


def test_demo_manifest_loads():
    with resources.as_file(resources.files("codecbench") / "data" / "demo_manifest.toml") as p:
        m = load_manifest(p)
    assert [s.name for s in m.sequences] == ["Motion", "Texture", "Pan"]
    assert m.anchor == "toy" and set(m.resolution_groups) == {"A", "C"}


def _header(path):
    return path.read_text().splitlines()[0]


def test_exact_csv_headers(tmp_path):
    p = RatePoint("s", "toy", (320, 180), (320, 180), 30.5, 812.25, {"psnr": 35.0, "ssim": 0.9},
                  "R1", 0.5, "A", 800.0)
    write_rqpoints(tmp_path / "rq.csv", [p])
    assert _header(tmp_path / "rq.csv") == ("sequence,codec,group,enc_w,enc_h,eval_w,eval_h,rate_index,target_kbps,"
                                           "actual_kbps,qp,psnr,ssim,msssim,vmaf,subj,enc_seconds")
    write_dmos(tmp_path / "dmos.csv", [DMOSRecord("s", "toy", "R1", 20.0, 5.0, 15)])
    assert _header(tmp_path / "dmos.csv") == "sequence,codec,rate_index,dmos,stdev,n"
    write_scores(tmp_path / "scores.csv", [TrialScore("a", "s", "toy", "R1", 90, 70, "S1")])
    assert _header(tmp_path / "scores.csv") == ("session,subject_id,sequence,codec,rate_index,score_reference,"
                                               "score_distorted")


def test_round_trips(tmp_path):
    pts = [RatePoint("s", "toy", (160, 90), (320, 180), 30.5, 812.25, {"psnr": 35.0, "ssim": 0.9}, "R1", 0.5,
                     "C", 800.0),
           RatePoint("s", "toy", (320, 180), (320, 180), 22, 1500.0, {"psnr": 38.0}, "QP22", None, "C")]
    write_rqpoints(tmp_path / "rq.csv", pts)
    back = read_rqpoints(tmp_path / "rq.csv")
    assert sorted(back, key=lambda p: p.bitrate_kbps) == pts
    recs = [DMOSRecord("s", "toy", "R1", 20.5, 5.25, 15)]
    write_dmos(tmp_path / "d.csv", recs)
    assert read_dmos(tmp_path / "d.csv") == recs
    trials = [TrialScore("a", "s", "toy", "R1", 90, 70.5, "S1")]
    write_scores(tmp_path / "t.csv", trials)
    assert read_scores(tmp_path / "t.csv") == trials


def test_table_read_errors(tmp_path):
    with pytest.raises(DataError):
        read_rqpoints(tmp_path / "none.csv")
    (tmp_path / "x.csv").write_text("sequence,codec\ns,c\n")
    with pytest.raises(DataError, match="actual_kbps"):
        read_rqpoints(tmp_path / "x.csv")
    (tmp_path / "s.csv").write_text("session,subject_id,sequence,codec,rate_index,score_reference,score_distorted\n"
                                    "S1,a,s,c,R1,ninety,70\n")
    with pytest.raises(DataError, match="line 2"):
        read_scores(tmp_path / "s.csv")


def test_targets_table_and_emitted_manifest(tmp_path):
    src = tmp_path / "t.csv"
    src.write_text("sequence,group,R1,R2,R3\nClip,A,1300,2250,4700\nClip,C,305,575,\n")
    rows = read_targets_table(src)
    assert rows == [("Clip", "A", ["1300", "2250", "4700"]), ("Clip", "C", ["305", "575"])]
    text = targets_manifest_text(rows)
    assert "A = [1300, 2250, 4700]" in text and "C = [305, 575]" in text
    out = tmp_path / "m.toml"
    out.write_text(text)
    m = load_manifest(out)
    assert m.targets[("Clip", "C")] == (305, 575)
    src.write_text("seq,grp\n")
    with pytest.raises(DataError):
        read_targets_table(src)
    src.write_text("sequence,group,R1\nClip,A,abc\n")
    with pytest.raises(DataError, match="bad target"):
        read_targets_table(src)
