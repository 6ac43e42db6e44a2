"""Render the three experiment figures from their CSV datasets.

Each figure is main panel + inset. The renderer plots the CSV columns
as-is (no numerical transformation beyond axis scaling); it reports a
checksum of the plotted line data next to a checksum computed directly
from the parsed CSV so consumers can verify the two match.
"""

import hashlib
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import schemas  # noqa: E402
from .schemas import SCHEMAS, SchemaError, read_table  # noqa: E402

# noise-cutoff series styling for the rates figure: N_C ascending
_FIG2_STYLES = ("-", "--", ":")

_SYMLOG_KW = dict(linestyle="-", marker="o", markersize=3)


@dataclass(frozen=True)
class FigureSpec:
    number: int
    main_csv: str
    inset_csv: str | None
    title: str


FIGURES = {
    2: FigureSpec(2, schemas.FIG2_MAIN, schemas.FIG2_INSET,
                  "jump rates vs measurement noise"),
    3: FigureSpec(3, schemas.FIG3_MAIN, schemas.FIG3_INSET,
                  "driven energy transfer"),
    4: FigureSpec(4, schemas.FIG4_MAIN, None, "steady-state power"),
}


@dataclass(frozen=True)
class RenderReport:
    out_path: str
    plotted_checksum: str
    source_checksum: str


def _checksum(series) -> str:
    h = hashlib.sha256()
    for xs, ys in series:
        for v in xs:
            h.update(f"{float(v):.17g};".encode())
        h.update(b"|")
        for v in ys:
            h.update(f"{float(v):.17g};".encode())
        h.update(b"#")
    return h.hexdigest()


def _symlog(ax, values):
    positive = [v for v in values if v > 0]
    if positive:
        ax.set_xscale("symlog", linthresh=min(positive) / 10.0)


def _build_fig2(in_dir):
    main = read_table(os.path.join(in_dir, schemas.FIG2_MAIN),
                      SCHEMAS[schemas.FIG2_MAIN])
    inset = read_table(os.path.join(in_dir, schemas.FIG2_INSET),
                       SCHEMAS[schemas.FIG2_INSET])
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    artists, source = [], []
    cutoffs = sorted(set(main["N_C"]))
    for i, nc in enumerate(cutoffs):
        style = _FIG2_STYLES[i % len(_FIG2_STYLES)]
        sel = [j for j, v in enumerate(main["N_C"]) if v == nc]
        ks = [main["k_over_omega2"][j] for j in sel]
        for col, color in (("gamma_down", "C0"), ("gamma_up", "C1")):
            ys = [main[col][j] for j in sel]
            (line,) = ax.plot(ks, ys, linestyle=style, color=color,
                              label=f"{col}, N_C={int(nc)}")
            artists.append(line)
            source.append((ks, ys))
    ax.set_xscale("log")
    ax.set_xlabel(r"$k\ /\ \omega^2$")
    ax.set_ylabel(r"rate $/\ \omega$")
    ax.legend(fontsize=6, loc="upper left")

    axi = fig.add_axes((0.62, 0.25, 0.25, 0.28))
    for col in ("gamma_down", "gamma_up"):
        (line,) = axi.plot(inset["E_over_omega"], inset[col], linestyle="-")
        artists.append(line)
        source.append((inset["E_over_omega"], inset[col]))
    axi.set_xlabel(r"$E\ /\ \omega$", fontsize=7)
    axi.set_ylabel(r"rate $/\ \omega$ (k=0)", fontsize=7)
    axi.tick_params(labelsize=6)
    return fig, artists, source


def _build_fig3(in_dir):
    main = read_table(os.path.join(in_dir, schemas.FIG3_MAIN),
                      SCHEMAS[schemas.FIG3_MAIN])
    inset = read_table(os.path.join(in_dir, schemas.FIG3_INSET),
                       SCHEMAS[schemas.FIG3_INSET])
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    artists, source = [], []
    cont = ax.errorbar(main["k_over_omega2"], main["mean_dE_over_omega"],
                       yerr=main["stderr"], color="k", capsize=2, **_SYMLOG_KW)
    artists.append(cont[0])
    source.append((main["k_over_omega2"], main["mean_dE_over_omega"]))
    _symlog(ax, main["k_over_omega2"])
    ax.set_xlabel(r"$k\ /\ \omega^2$")
    ax.set_ylabel(r"$\langle\Delta E\rangle\ /\ \omega$")

    axi = fig.add_axes((0.58, 0.58, 0.28, 0.26))
    cont = axi.errorbar(inset["E_i_over_omega"], inset["mean_dE_over_omega"],
                        yerr=inset["stderr"], color="k", capsize=2, **_SYMLOG_KW)
    artists.append(cont[0])
    source.append((inset["E_i_over_omega"], inset["mean_dE_over_omega"]))
    axi.set_xlabel(r"$E_i\ /\ \omega$ (k=0)", fontsize=7)
    axi.set_ylabel(r"$\langle\Delta E\rangle\ /\ \omega$", fontsize=7)
    axi.tick_params(labelsize=6)
    return fig, artists, source


def _build_fig4(in_dir):
    main = read_table(os.path.join(in_dir, schemas.FIG4_MAIN),
                      SCHEMAS[schemas.FIG4_MAIN])
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    artists, source = [], []
    cont = ax.errorbar(main["E_s_over_omega"], main["P_s_corrected"],
                       xerr=main["stderr"], linestyle="none", marker="o",
                       color="k", capsize=2, label="corrected for noise")
    artists.append(cont[0])
    source.append((main["E_s_over_omega"], main["P_s_corrected"]))
    cont = ax.errorbar(main["E_s_over_omega"], main["P_s_naive"],
                       xerr=main["stderr"], linestyle="none", marker="x",
                       color="b", capsize=2, label="naive")
    artists.append(cont[0])
    source.append((main["E_s_over_omega"], main["P_s_naive"]))
    ax.set_xlabel(r"$E_s\ /\ \omega$")
    ax.set_ylabel(r"$P_s\ /\ \omega^2$")
    ax.legend(fontsize=8, loc="lower right")

    axi = fig.add_axes((0.25, 0.6, 0.28, 0.26))
    (line,) = axi.plot(main["k_over_omega2"], main["E_s_over_omega"],
                       color="k", **_SYMLOG_KW)
    artists.append(line)
    source.append((main["k_over_omega2"], main["E_s_over_omega"]))
    _symlog(axi, main["k_over_omega2"])
    axi.set_xlabel(r"$k\ /\ \omega^2$", fontsize=7)
    axi.set_ylabel(r"$E_s\ /\ \omega$", fontsize=7)
    axi.tick_params(labelsize=6)
    return fig, artists, source


_BUILDERS = {2: _build_fig2, 3: _build_fig3, 4: _build_fig4}


def render_figure(number: int, in_dir, out_path) -> RenderReport:
    """Render figure `number` from the CSVs in in_dir to out_path.

    Returns checksums of the line data actually placed on the axes and of
    the same series read straight from the CSVs; they must agree.
    """
    if number not in _BUILDERS:
        raise SchemaError(f"unknown figure number {number}")
    fig, artists, source = _BUILDERS[number](in_dir)
    try:
        # read the data back off the placed artists, not the parsed CSV
        plotted = [(list(a.get_xdata()), list(a.get_ydata())) for a in artists]
        fig.savefig(out_path, dpi=150, metadata={"Software": "figrender"})
    finally:
        plt.close(fig)
    return RenderReport(out_path=str(out_path),
                        plotted_checksum=_checksum(plotted),
                        source_checksum=_checksum(source))
