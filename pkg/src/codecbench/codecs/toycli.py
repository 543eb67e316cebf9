"""Command-line wrapper around the toy codec, shaped like a reference encoder.

    python -m codecbench.codecs.toycli -i in.yuv -wdt 320 -hgt 180 --fps 60 \
        --bitdepth 8 -q 30 -b out.bin -o recon.yuv [--qp-increment-frame N]

Lets the external-adapter path be exercised end to end without HM/AV1/VTM.
"""

import argparse
import sys
from pathlib import Path

from ..errors import HarnessError
from ..media import read_raw_video, write_raw_video
from .toy import toy_decode, toy_encode


def main(argv=None):
    p = argparse.ArgumentParser(prog="toycli")
    sub = p.add_subparsers(dest="cmd")
    p.add_argument("-i", "--input")
    p.add_argument("-wdt", "--width", type=int)
    p.add_argument("-hgt", "--height", type=int)
    p.add_argument("--fps", default="60")
    p.add_argument("--bitdepth", type=int, default=8)
    p.add_argument("-q", "--qp", type=int)
    p.add_argument("-b", "--bitstream")
    p.add_argument("-o", "--recon")
    p.add_argument("--qp-increment-frame", type=int, default=None)
    d = sub.add_parser("decode")
    d.add_argument("-b", "--bitstream", dest="dec_bitstream", required=True)
    d.add_argument("-o", "--recon", dest="dec_recon", required=True)
    args = p.parse_args(argv)
    try:
        if args.cmd == "decode":
            seq = toy_decode(Path(args.dec_bitstream).read_bytes())
            write_raw_video(seq, args.dec_recon)
            return 0
        if None in (args.input, args.width, args.height, args.qp, args.bitstream):
            p.error("encode needs -i, -wdt, -hgt, -q and -b")
        seq = read_raw_video(args.input, args.width, args.height, args.bitdepth, args.fps)
        bs, recon = toy_encode(seq, args.qp, increment_frame=args.qp_increment_frame)
        Path(args.bitstream).write_bytes(bs)
        if args.recon:
            write_raw_video(recon, args.recon)
        print(f"toycli: qp {args.qp} bytes {len(bs)}")
    except (HarnessError, ValueError, OSError) as exc:
        print(f"toycli: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
