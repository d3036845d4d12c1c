"""Shared CSV loading and CLI plumbing for the plot scripts."""

import argparse
import os

import matplotlib

matplotlib.use("Agg")

import pandas as pd  # noqa: E402


class CsvFormatError(ValueError):
    """Input file does not match the documented column schema."""


def load_csv(path: str, expected_columns: list) -> pd.DataFrame:
    """Read an isacimg CSV (leading '#' metadata lines allowed).

    Raises CsvFormatError when the header differs from the documented
    schema; an empty-but-valid file yields an empty frame.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        frame = pd.read_csv(path, comment="#")
    except pd.errors.EmptyDataError as exc:
        raise CsvFormatError(f"{path}: no header row found") from exc
    except pd.errors.ParserError as exc:
        raise CsvFormatError(f"{path}: {exc}") from exc
    if list(frame.columns) != expected_columns:
        raise CsvFormatError(
            f"{path}: expected columns {expected_columns}, found {list(frame.columns)}"
        )
    return frame


def build_parser(description: str) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--in", dest="infile", required=True, help="input CSV path")
    parser.add_argument("--out", dest="outfile", required=True, help="output image (png/svg)")
    parser.add_argument("--title", default=None, help="optional figure title")
    return parser


def save_figure(fig, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
