"""Command-line entry: render a figure from swarmsafe experiment outputs."""

import argparse
import sys

from .figures import plot_scatter, plot_timeseries
from .io import FormatError


def build_parser():
    parser = argparse.ArgumentParser(
        prog="swarmplots",
        description="Render figures from swarmsafe CSV/JSON outputs",
    )
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="run or ensemble output directory")
    parser.add_argument("--kind", choices=("timeseries", "scatter"),
                        required=True)
    parser.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "timeseries":
            plot_timeseries(args.in_dir, args.out)
        else:
            plot_scatter(args.in_dir, args.out)
    except (FormatError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
