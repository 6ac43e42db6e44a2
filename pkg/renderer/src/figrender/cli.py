"""render-fig: draw figure 2, 3 or 4 from a directory of experiment CSVs.

Exit codes: 0 success, 1 usage error, 2 schema/data error.
"""

import argparse
import sys

from .render import render_figure
from .schemas import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="render-fig")
    parser.add_argument("figure", type=int, choices=(2, 3, 4),
                        help="which figure to render")
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding the experiment CSVs")
    parser.add_argument("--out", required=True, help="output image path")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        report = render_figure(args.figure, args.in_dir, args.out)
    except SchemaError as exc:
        print(f"error_code=schema: {exc}", file=sys.stderr)
        return 2
    if report.plotted_checksum != report.source_checksum:
        print("error_code=checksum: plotted data differ from CSV data",
              file=sys.stderr)
        return 2
    print(f"wrote {report.out_path} (data checksum {report.source_checksum[:12]})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
