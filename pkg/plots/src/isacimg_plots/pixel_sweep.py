"""MD/FA versus pixel size, one curve per propagation model."""

import sys

import matplotlib.pyplot as plt

from .common import build_parser, load_csv, save_figure

COLUMNS = ["size", "model", "md", "fa"]
_STYLE = {"conventional": "o--", "integral": "s-"}


def plot_pixel_sweep(csv_path: str, out_path: str, title: str | None = None) -> None:
    frame = load_csv(csv_path, COLUMNS)
    fig, (ax_md, ax_fa) = plt.subplots(1, 2, figsize=(9.0, 3.8), constrained_layout=True)

    for model, group in frame.groupby("model"):
        group = group.sort_values("size")
        style = _STYLE.get(str(model), "x-")
        ax_md.plot(group["size"], group["md"], style, label=str(model))
        ax_fa.plot(group["size"], group["fa"], style, label=str(model))

    for ax, label in ((ax_md, "missed detection rate"), (ax_fa, "false alarm rate")):
        ax.set_xscale("log")
        ax.set_xlabel("pixel size (m)")
        ax.set_ylabel(label)
        ax.set_ylim(-0.05, 1.05)
        ax.grid(True, which="both", alpha=0.3)
        if len(frame):
            ax.legend()
    if title:
        fig.suptitle(title)
    save_figure(fig, out_path)
    plt.close(fig)


def main(argv=None) -> int:
    args = build_parser("Render MD/FA curves from pixel_sweep.csv").parse_args(argv)
    plot_pixel_sweep(args.infile, args.outfile, args.title)
    return 0


if __name__ == "__main__":
    sys.exit(main())
