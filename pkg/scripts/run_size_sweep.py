#!/usr/bin/env python3
"""Processing-time sweep over image sizes at fixed band count (N=31).

Emits one CSV row per (size, method) with median-of-5 stage timings, the
data behind the "spectral stage cost vs image size" comparison.  The image
column encodes the pixel grid (WxH); multiply pixels by 31 bands for the
total-sample interpretation of size.

Usage: python3 scripts/run_size_sweep.py [output.csv] [--sizes 32,64,128,256]
"""

import argparse
import sys

from cubecodec.bench import BenchConfig, emit_csv, emit_table, run_benchmark


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", nargs="?", default=None)
    parser.add_argument("--sizes", default="32,64,128,256",
                        help="comma-separated square edge lengths")
    parser.add_argument("--p", type=int, default=20)
    args = parser.parse_args()
    sizes = [(int(s), int(s)) for s in args.sizes.split(",")]
    config = BenchConfig(corpus=[], methods=["pca", "csi"], p_values=[args.p],
                         target_cr=8.0, repetitions=5, size_sweep=sizes)
    reports = run_benchmark(config)
    csv = emit_csv(reports)
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(csv)
        print(f"wrote {args.output}", file=sys.stderr)
    else:
        sys.stdout.buffer.write(csv)
    print(emit_table(reports), file=sys.stderr)


if __name__ == "__main__":
    main()
