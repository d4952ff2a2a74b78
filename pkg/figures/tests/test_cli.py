from crdfigures.cli import main


def test_render_subcommand(results_csv, tmp_path, capsys):
    out = tmp_path / "fig.svg"
    rc = main(["render", "--family", "eta_vs_r",
               "--in", str(results_csv), "--out", str(out)])
    assert rc == 0
    assert out.exists()
    assert str(out) in capsys.readouterr().out


def test_render_png_flag(welfare_grid_csv, tmp_path):
    out = tmp_path / "heat.svg"
    rc = main(["render", "--family", "welfare_heatmap",
               "--in", str(welfare_grid_csv), "--out", str(out), "--png"])
    assert rc == 0
    assert out.with_suffix(".png").exists()


def test_multiple_inputs(bestresponse_csv, nash_csv, tmp_path):
    rc = main(["render", "--family", "best_response",
               "--in", str(bestresponse_csv), "--in", str(nash_csv),
               "--out", str(tmp_path / "br.svg")])
    assert rc == 0


def test_schema_mismatch_exit_code(nash_csv, tmp_path, capsys):
    rc = main(["render", "--family", "eta_vs_r",
               "--in", str(nash_csv), "--out", str(tmp_path / "x.svg")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "schema error" in err and "results-v1" in err
