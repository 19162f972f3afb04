"""Command-line front end: ``plot <run-dir> --kind <kind> --out <path>``.

Exit status 0 on success (the written path is printed to stdout), 2 for
anything wrong with the arguments or the run directory; error text goes
to stderr prefixed with ``plot error:``.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .figures import FIGURE_KINDS, render_trajectory, render_variance
from .runs import RunDataError


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a figure from a simulation run directory "
                    "(the output of `ringtraffic run`).")
    parser.add_argument("run_dir",
                        help="directory holding config.resolved and the "
                             "run's CSV files")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS,
                        help="which figure to draw")
    parser.add_argument("--out", required=True,
                        help="output image; the suffix picks the format, "
                             "no suffix means .svg")
    parser.add_argument("--dpi", type=int, default=150,
                        help="resolution for raster formats (default 150)")
    args = parser.parse_args(argv)
    try:
        if args.kind == "variance-growth":
            written = render_variance(args.run_dir, args.out,
                                      dpi=args.dpi).path
        else:
            written = render_trajectory(args.run_dir, args.kind, args.out,
                                        dpi=args.dpi)
    except RunDataError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 2
    print(written)
    return 0


if __name__ == "__main__":
    sys.exit(main())
