"""Planar phase error versus scatterer proportion, both models."""

import sys

import matplotlib.pyplot as plt

from .common import build_parser, load_csv, save_figure

COLUMNS = ["proportion", "e2_conventional", "e2_proposed", "lambda", "d0", "dp"]


def plot_error_sweep(csv_path: str, out_path: str, title: str | None = None) -> None:
    frame = load_csv(csv_path, COLUMNS)
    fig, ax = plt.subplots(figsize=(5.6, 4.0), constrained_layout=True)

    if len(frame):
        frame = frame.sort_values("proportion")
        ax.plot(frame["proportion"], frame["e2_conventional"], "o--", label="centre distance")
        ax.plot(frame["proportion"], frame["e2_proposed"], "s-", label="averaged distance")
        ax.legend()
    ax.set_xlabel("scatterer proportion within pixel")
    ax.set_ylabel("mean phase error (rad)")
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    save_figure(fig, out_path)
    plt.close(fig)


def main(argv=None) -> int:
    args = build_parser("Render phase-error curves from error_sweep.csv").parse_args(argv)
    plot_error_sweep(args.infile, args.outfile, args.title)
    return 0


if __name__ == "__main__":
    sys.exit(main())
