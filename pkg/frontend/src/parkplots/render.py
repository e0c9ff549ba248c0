"""Turn a series table into a PNG plus a sidecar CSV."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .figures import FIGURES, build_series


def render(figure_id: str, results_dir, out_path=None) -> tuple[Path, Path]:
    """Render one catalog figure; returns (image path, sidecar path).

    The sidecar holds exactly the plotted series values, so tests and
    downstream tooling can check a figure without decoding the image.
    Input CSVs are only ever read.
    """
    series = build_series(results_dir, figure_id)
    spec = FIGURES[figure_id]

    out_png = Path(out_path) if out_path else Path(results_dir) / f"{figure_id}.png"
    out_png.parent.mkdir(parents=True, exist_ok=True)
    sidecar = out_png.with_name(out_png.stem + ".series.csv")

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name, group in series.groupby("series", sort=True):
        xerr = group["xerr"] if "xerr" in group.columns else None
        fmt = "o" if spec.kind == "scatter" else "o-"
        ax.errorbar(group["x"], group["y"], yerr=group["yerr"], xerr=xerr,
                    fmt=fmt, capsize=3, label=str(name))
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    ax.set_title(spec.description)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)

    series.to_csv(sidecar, index=False)
    return out_png, sidecar
