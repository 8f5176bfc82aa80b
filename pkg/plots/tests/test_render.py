import json
import shutil
from pathlib import Path

import pytest

from ietplot import FigureSpec, SpecError, render, tail_slope
from ietplot.cli import main

SAMPLES = Path(__file__).resolve().parents[1] / "samples"


def spec_dict(kind, csv_name, x, y, out):
    return {"input": str(SAMPLES / csv_name), "kind": kind, "x": x,
            "y": y, "out": str(out)}


class TestRender:
    def test_series_on_roth(self, tmp_path):
        out = tmp_path / "ratio_a.svg"
        render(FigureSpec.from_dict(
            spec_dict("series", "roth.csv", "n", ["ratio_a"], out)))
        text = out.read_text()
        assert "tail =" in text

    def test_loglog_fit_on_separation(self, tmp_path):
        out = tmp_path / "sep.svg"
        render(FigureSpec.from_dict(
            spec_dict("loglog-fit", "diag.csv", "N_or_n", ["separation"],
                      out)))
        text = out.read_text()
        assert "slope" in text
        # the periodic fixture separation decays like 1/N
        cols_spec = spec_dict("loglog-fit", "diag.csv", "N_or_n",
                              ["separation"], out)
        from ietplot.render import read_columns
        cols = read_columns(cols_spec["input"], ["N_or_n", "separation"])
        slope = tail_slope(cols["N_or_n"], cols["separation"])
        assert abs(slope + 1) < 0.15

    def test_residual_on_linearizer(self, tmp_path):
        out = tmp_path / "lin.svg"
        render(FigureSpec.from_dict(
            spec_dict("residual", "lin.csv", "iter", ["residual"], out)))
        assert out.exists() and out.stat().st_size > 0

    def test_png_output(self, tmp_path):
        out = tmp_path / "ratio_a.png"
        render(FigureSpec.from_dict(
            spec_dict("series", "roth.csv", "n", ["ratio_a"], out)))
        assert out.stat().st_size > 0

    def test_byte_stable(self, tmp_path):
        a = tmp_path / "a.svg"
        b = tmp_path / "b.svg"
        for out in (a, b):
            render(FigureSpec.from_dict(
                spec_dict("series", "roth.csv", "n", ["theta_hat"], out)))
        assert a.read_bytes() == b.read_bytes()

    def test_missing_column_fails(self, tmp_path):
        with pytest.raises(SpecError) as err:
            render(FigureSpec.from_dict(
                spec_dict("series", "roth.csv", "n", ["no_such_column"],
                          tmp_path / "x.svg")))
        assert "no_such_column" in str(err.value)
        assert "available" in str(err.value)

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(SpecError):
            FigureSpec.from_dict(spec_dict("pie", "roth.csv", "n",
                                           ["ratio_a"], tmp_path / "x.svg"))

    def test_empty_csv_fails(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("a,b\n")
        with pytest.raises(SpecError):
            render(FigureSpec.from_dict(
                {"input": str(empty), "kind": "series", "x": "a",
                 "y": ["b"], "out": str(tmp_path / "x.svg")}))


class TestCli:
    def test_cli_renders_all_samples(self, tmp_path):
        specs = [
            spec_dict("series", "roth.csv", "n", ["ratio_a", "theta_hat"],
                      tmp_path / "roth.svg"),
            spec_dict("loglog-fit", "diag.csv", "N_or_n", ["separation"],
                      tmp_path / "sep.svg"),
            spec_dict("residual", "lin.csv", "iter", ["residual"],
                      tmp_path / "lin.svg"),
        ]
        spec_file = tmp_path / "specs.json"
        spec_file.write_text(json.dumps(specs))
        assert main(["--spec", str(spec_file)]) == 0
        for name in ("roth.svg", "sep.svg", "lin.svg"):
            assert (tmp_path / name).stat().st_size > 0

    def test_cli_missing_column_exit_2(self, tmp_path, capsys):
        spec_file = tmp_path / "spec.json"
        spec_file.write_text(json.dumps(
            spec_dict("series", "roth.csv", "n", ["nope"],
                      tmp_path / "x.svg")))
        assert main(["--spec", str(spec_file)]) == 2
        assert "nope" in capsys.readouterr().err

    def test_cli_bad_spec_file_exit_1(self, tmp_path):
        assert main(["--spec", str(tmp_path / "missing.json")]) == 1
