"""Shared fixtures: synthetic desk-scale CSV artifacts in every schema."""

import textwrap

import pytest

from figures_report import lines


def pytest_terminal_summary(terminalreporter):
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)


def _write(path, text):
    path.write_text(textwrap.dedent(text).lstrip())
    return path


@pytest.fixture
def results_csv(tmp_path):
    """results-v1 sweep: r x delta grid, 2 runs per point."""
    header = "experiment,r,delta,run,eta,eta_stderr,mean_pi_L,mean_pi_H,seed"
    rows = []
    etas = {
        (0.1, 0.0): 0.41, (0.3, 0.0): 0.67, (0.5, 0.0): 0.75,
        (0.1, 0.1): 0.15, (0.3, 0.1): 0.66, (0.5, 0.1): 0.77,
        (0.5, 0.3): 0.70, (0.5, 0.5): 0.28,
    }
    for (r, d), eta in sorted(etas.items()):
        for run in range(2):
            e = eta + 0.01 * run
            rows.append(f"desk,{r},{d},{run},{e},0.002,"
                        f"{0.6 - 0.2 * d + 0.01 * run},{0.6 + 0.2 * d},{run}")
    body = "\n".join(["# schema=results-v1", header, *rows]) + "\n"
    path = tmp_path / "results.csv"
    path.write_text(body)
    return path


@pytest.fixture
def nash_csv(tmp_path):
    return _write(tmp_path / "nash.csv", """
        # schema=nash-v1
        experiment,r,delta,pi_L,pi_H,residual,refined
        desk,0.5,0.1,0.679,0.9171,2.5e-16,True
    """)


@pytest.fixture
def bestresponse_csv(tmp_path):
    header = "experiment,r,delta,class,opponent_pi,response_min,response_max"
    rows = []
    for i in range(11):
        opp = round(0.1 * i, 1)
        rows.append(f"desk,0.5,0.1,L,{opp},{max(0.0, 0.9 - opp)},{max(0.0, 0.9 - opp)}")
        rows.append(f"desk,0.5,0.1,H,{opp},{min(1.0, 1.1 - opp)},{min(1.0, 1.1 - opp)}")
    body = "\n".join(["# schema=bestresponse-v1", header, *rows]) + "\n"
    path = tmp_path / "bestresponse.csv"
    path.write_text(body)
    return path


@pytest.fixture
def welfare_grid_csv(tmp_path):
    values = [round(0.1 * i, 1) for i in range(11)]
    lines = [
        "# schema=welfare-grid-v1",
        "# r=0.5 delta=0.1",
        "# argmax_pi_L=0.6 argmax_pi_H=1.0 max_welfare=-0.0849",
    ]
    lines.append("pi_L\\pi_H," + ",".join(str(v) for v in values))
    for vl in values:
        row = [str(vl)]
        for vh in values:
            row.append(str(round(-0.5 + 0.4 * vl * vh - 0.1 * (vl - 0.6) ** 2, 6)))
        lines.append(",".join(row))
    path = tmp_path / "welfare_grid.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def empty_results_csv(tmp_path):
    return _write(tmp_path / "empty.csv", """
        # schema=results-v1
        experiment,r,delta,run,eta,eta_stderr,mean_pi_L,mean_pi_H,seed
    """)
