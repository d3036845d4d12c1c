"""Truth-vs-estimate heatmap pair from reconstruction.csv."""

import sys

import matplotlib.pyplot as plt
import numpy as np

from .common import build_parser, load_csv, save_figure

COLUMNS = ["row", "col", "x_true", "x_hat", "detected"]


def plot_reconstruction(csv_path: str, out_path: str, title: str | None = None) -> None:
    frame = load_csv(csv_path, COLUMNS)
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.2), constrained_layout=True)

    if len(frame):
        n_rows = int(frame["row"].max()) + 1
        n_cols = int(frame["col"].max()) + 1
        truth = np.zeros((n_rows, n_cols))
        estimate = np.zeros((n_rows, n_cols))
        rows = frame["row"].to_numpy(dtype=int)
        cols = frame["col"].to_numpy(dtype=int)
        truth[rows, cols] = frame["x_true"].to_numpy()
        estimate[rows, cols] = frame["x_hat"].to_numpy()
        images = (truth, estimate)
    else:
        images = (np.zeros((1, 1)), np.zeros((1, 1)))

    # scattering coefficients live in [0, 1]; pin the scale accordingly
    for ax, image, label in zip(axes, images, ("ground truth", "estimate")):
        im = ax.imshow(image, origin="lower", vmin=0.0, vmax=1.0, cmap="viridis")
        ax.set_xlabel("pixel column")
        ax.set_ylabel("pixel row")
        ax.set_title(label)
    fig.colorbar(im, ax=axes, shrink=0.85, label="scattering coefficient")
    if title:
        fig.suptitle(title)
    save_figure(fig, out_path)
    plt.close(fig)


def main(argv=None) -> int:
    args = build_parser("Render truth/estimate heatmaps from reconstruction.csv").parse_args(argv)
    plot_reconstruction(args.infile, args.outfile, args.title)
    return 0


if __name__ == "__main__":
    sys.exit(main())
