import json

from ergofix.cli import main
from ergofix.trace import read_trace


def test_run_metrics_plot(tmp_path, capsys):
    sc = tmp_path / "s.yaml"
    sc.write_text("duration_s: 0.2\nscripts:\n  hand_reference:\n"
                  "    - {t_s: 0.0, offset_m: [0, 0, 0]}\n    - {t_s: 0.2, offset_m: [0.02, 0, 0]}\n")
    out = tmp_path / "t.csv"
    assert main(["run", "--scenario", str(sc), "--out", str(out)]) == 0
    assert len(read_trace(out)) == 200
    capsys.readouterr()
    assert main(["metrics", "--trace", str(out), "--json"]) == 0
    m = json.loads(capsys.readouterr().out)
    assert set(m) == {"a_bar", "zeta_ne", "beta", "zeta_d"}
    pd = tmp_path / "f.csv"
    assert main(["plot-data", "--trace", str(out), "--quantity", "f", "--out", str(pd)]) == 0
    vals = [float(line.split(",")[1]) for line in pd.read_text().splitlines()[1:]]
    assert all(0.0 <= v <= 1.0 for v in vals)


def test_bad_inputs_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("duration_s: 1\nfixture: {arm: {k_p_N_per_m: abc}}\n")
    assert main(["run", "--scenario", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
    assert "k_p_N_per_m" in capsys.readouterr().err
    assert main(["metrics", "--trace", str(bad)]) == 2
    assert main(["run", "--scenario", "no_such", "--out", str(tmp_path / "x.csv")]) == 2
