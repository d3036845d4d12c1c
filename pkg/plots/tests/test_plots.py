import os

import pytest

from isacimg_plots.common import CsvFormatError
from isacimg_plots.error_sweep import main as error_main
from isacimg_plots.error_sweep import plot_error_sweep
from isacimg_plots.pixel_sweep import main as sweep_main
from isacimg_plots.pixel_sweep import plot_pixel_sweep
from isacimg_plots.reconstruction import main as recon_main
from isacimg_plots.reconstruction import plot_reconstruction

GOLDEN = os.path.join(os.path.dirname(__file__), "..", "golden")

CASES = [
    ("reconstruction.csv", plot_reconstruction, recon_main, "row,col,x_true,x_hat,detected"),
    ("pixel_sweep.csv", plot_pixel_sweep, sweep_main, "size,model,md,fa"),
    ("error_sweep.csv", plot_error_sweep, error_main, "proportion,e2_conventional,e2_proposed,lambda,d0,dp"),
]


@pytest.mark.parametrize("name,plot,cli,header", CASES, ids=[c[0] for c in CASES])
class TestEachFigure:
    def test_golden_renders(self, tmp_path, name, plot, cli, header):
        out = tmp_path / name.replace(".csv", ".png")
        plot(os.path.join(GOLDEN, name), str(out))
        assert out.exists() and out.stat().st_size > 0

    def test_cli_entry_point(self, tmp_path, name, plot, cli, header):
        out = tmp_path / "figure.svg"
        rc = cli(
            [
                "--in",
                os.path.join(GOLDEN, name),
                "--out",
                str(out),
                "--title",
                "golden sample",
            ]
        )
        assert rc == 0
        assert out.exists() and out.stat().st_size > 0

    def test_empty_but_valid_csv(self, tmp_path, name, plot, cli, header):
        src = tmp_path / "empty.csv"
        src.write_text(f"# config_hash=0\n# version=0\n{header}\n")
        out = tmp_path / "empty.png"
        plot(str(src), str(out))
        assert out.exists() and out.stat().st_size > 0

    def test_header_mismatch_rejected(self, tmp_path, name, plot, cli, header):
        corrupted = header.replace(",", ",bad_", 1)
        src = tmp_path / "corrupt.csv"
        with open(os.path.join(GOLDEN, name)) as fh:
            lines = fh.read().splitlines()
        payload = [l for l in lines if not l.startswith("#")]
        src.write_text("\n".join([corrupted] + payload[1:]) + "\n")
        with pytest.raises(CsvFormatError):
            plot(str(src), str(tmp_path / "nope.png"))

    def test_missing_file_rejected(self, tmp_path, name, plot, cli, header):
        with pytest.raises(FileNotFoundError):
            plot(str(tmp_path / "nowhere.csv"), str(tmp_path / "out.png"))


class TestReadOnlyAndDeterministic:
    def test_inputs_unmodified_and_output_reproducible(self, tmp_path):
        src = os.path.join(GOLDEN, "error_sweep.csv")
        before = open(src, "rb").read()
        out_a = tmp_path / "a.png"
        out_b = tmp_path / "b.png"
        plot_error_sweep(src, str(out_a))
        plot_error_sweep(src, str(out_b))
        assert open(src, "rb").read() == before
        assert out_a.read_bytes() == out_b.read_bytes()
