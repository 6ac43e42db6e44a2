"""CSV schemas of the simulator's experiment outputs, and a strict reader.

The files carry '#'-prefixed metadata lines before a mandatory header row;
the renderer validates the header column-for-column and parses everything
else as floats.
"""

import csv

FIG2_MAIN = "fig2_rates.csv"
FIG2_INSET = "fig2_inset.csv"
FIG3_MAIN = "fig3_transfer.csv"
FIG3_INSET = "fig3_inset.csv"
FIG4_MAIN = "fig4_power.csv"

SCHEMAS = {
    FIG2_MAIN: ("k_over_omega2", "N_C", "gamma_up", "gamma_down"),
    FIG2_INSET: ("E_over_omega", "gamma_up", "gamma_down"),
    FIG3_MAIN: ("k_over_omega2", "mean_dE_over_omega", "stderr"),
    FIG3_INSET: ("E_i_over_omega", "mean_dE_over_omega", "stderr"),
    FIG4_MAIN: ("k_over_omega2", "E_s_over_omega", "P_s_corrected",
                "P_s_naive", "stderr"),
}


class SchemaError(Exception):
    """CSV does not match the documented schema."""


def read_table(path, expected_columns) -> dict:
    """Parse a metadata-headed CSV into {column: list[float]}."""
    try:
        with open(path, newline="") as f:
            rows = [r for r in csv.reader(line for line in f
                                          if not line.startswith("#")) if r]
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{path}: no header row")
    header = tuple(rows[0])
    expected = tuple(expected_columns)
    if header != expected:
        for got, want in zip(header, expected):
            if got != want:
                raise SchemaError(
                    f"{path}: expected column {want!r}, found {got!r}")
        missing = expected[len(header):]
        extra = header[len(expected):]
        which = missing[0] if missing else extra[0]
        raise SchemaError(f"{path}: column mismatch at {which!r}")
    table = {name: [] for name in expected}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(expected):
            raise SchemaError(f"{path}: row {lineno} has {len(row)} cells, "
                              f"expected {len(expected)}")
        for name, cell in zip(expected, row):
            try:
                table[name].append(float(cell))
            except ValueError as exc:
                raise SchemaError(
                    f"{path}: column {name!r} row {lineno}: not a number "
                    f"({cell!r})") from exc
    if not table[expected[0]]:
        raise SchemaError(f"{path}: no data rows")
    return table
