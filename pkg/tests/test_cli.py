import pytest

from sram_pad import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_no_arguments_prints_usage(capsys):
    code, out, err = run(capsys)
    assert code != 0 and "usage:" in err


def test_help_documents_exit_codes(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0
    for line in ("2  bad or missing flag", "3  missing or invalid configuration", "4  infeasible design"):
        assert line in out


def test_bad_flag(capsys):
    assert run(capsys, "optimize", "--vth", "triple")[0] == cli.EXIT_USAGE
    assert run(capsys, "pad-curve", "--x", "1:2")[0] == cli.EXIT_USAGE


def test_missing_config(capsys, tmp_path):
    code, _, err = run(capsys, "drv", "--tech", "ptm7")
    assert code == cli.EXIT_CONFIG and "ptm7" in err
    code, _, _ = run(capsys, "optimize", "--workload", "nope", "--n", "8")
    assert code == cli.EXIT_CONFIG


def test_infeasible(capsys):
    code, _, err = run(capsys, "optimize", "--n", "8", "--vdd", "0.3")
    assert code == cli.EXIT_INFEASIBLE and "infeasible" in err


def test_optimize_row(capsys):
    code, out, _ = run(capsys, "optimize", "--n", "32", "--sizes", "2", "--vth", "single", "--csv")
    assert code == 0
    header, row = out.strip().splitlines()
    assert header.startswith("assignment,counts,reduction_pct")
    assert row.startswith('"(1H,2H,0)"') or row.startswith('"(1H,0,0)"')


def test_out_file_matches_stdout_csv(capsys, tmp_path):
    target = tmp_path / "o.csv"
    assert run(capsys, "pad-curve", "--x", "0.1,0.2", "--n-step", "32", "--out", str(target))[0] == 0
    _, out, _ = run(capsys, "pad-curve", "--x", "0.1,0.2", "--n-step", "32", "--csv")
    assert target.read_text() == out
    assert [p.name for p in tmp_path.iterdir()] == ["o.csv"]


def test_parse_range():
    assert cli.parse_range("0.05:0.05:0.2") == [0.05, 0.1, 0.15, 0.2]
    assert cli.parse_range("1,2.5") == [1.0, 2.5]


def test_config_dir_env(capsys, tmp_path, monkeypatch):
    (tmp_path / "workloads.yaml").write_text("busy: {c_load: 400, t_cycle: 500, alpha: 1, vdd: 0.5}\n")
    monkeypatch.setenv("SRAM_PAD_CONFIG_DIR", str(tmp_path))
    assert run(capsys, "pad-curve", "--workload", "busy", "--x", "0.1", "--n-step", "64")[0] == 0


@pytest.mark.parametrize("argv", [
    ["characterize"],
    ["drv", "--method", "Conventional"],
    ["snm-sweep", "--w", "1,2", "--l", "1,2", "--threads", "2"],
    ["compare", "--idle", "0.5", "--threads", "0"],
])
def test_commands_run(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0 and out.strip()
