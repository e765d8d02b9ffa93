import json
from pathlib import Path

import pytest

from riccati_foliations import cli
from riccati_foliations.errors import ConfigInvalid, UnknownSchema


def run(tmp_path, *argv, sub="out"):
    out = tmp_path / sub
    return cli.main([*argv, "--out", str(out)]), out


def test_missing_input_file_exits_2(tmp_path):
    code, _ = run(tmp_path, "limitset", "--group", str(tmp_path / "nope.json"))
    assert code == 2


def test_out_of_range_parameter_exits_2(tmp_path):
    code, _ = run(tmp_path, "limitset", "--depth", "99")
    assert code == 2


def test_module_error_exit_code(tmp_path):
    code, _ = run(tmp_path, "group", "build", "--signature", "2,3,5")
    assert code == 2


def test_resolve_tree_and_plot(tmp_path):
    code, out = run(tmp_path, "resolve", "5", "3")
    assert code == 0
    tree = json.loads((out / "tree.json").read_text())
    assert tree["schema"] == "riccati-foliations/resolution-tree/1"
    assert tree["result"]["tree"]["blowups"] == 4
    assert (out / "tree.json.plot.py").is_file()
    compile((out / "tree.json.plot.py").read_text(), "plot", "exec")
    manifest = json.loads((out / "manifest.json").read_text())
    names = {o["path"] for o in manifest["outputs"]}
    assert {"tree.json", "tree.json.plot.py", "report.json", "components.csv"} <= names
    assert all(len(o["sha256"]) == 64 for o in manifest["outputs"])


def test_report_embeds_config_and_seed(tmp_path):
    code, out = run(tmp_path, "current", "weyl", "--n", "1000", "--seed", "7")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["seed"] == 7 and rep["config"]["seed"] == 7
    assert rep["config"]["params"]["n"] == 1000


def test_determinism(tmp_path):
    argv = ["limitset", "--depth", "5", "--seed", "3"]
    _, a = run(tmp_path, *argv, sub="a")
    _, b = run(tmp_path, *argv, sub="b")
    ra = json.loads((a / "report.json").read_text())
    rb = json.loads((b / "report.json").read_text())
    ra["config"].pop("out"), rb["config"].pop("out")
    assert ra == rb
    assert (a / "limitset.csv").read_bytes() == (b / "limitset.csv").read_bytes()


def test_limitset_csv_plot_script(tmp_path):
    code, out = run(tmp_path, "limitset", "--depth", "4")
    assert code == 0
    script = cli.emit_plot_script(out / "limitset.csv")
    assert script.name == "limitset.csv.plot.py"
    assert "plt.plot" in script.read_text()


def test_slice_csv_scatter_script(tmp_path):
    code, out = run(tmp_path, "leviflat", "slice", "--depth", "9")
    assert code == 0
    text = cli.emit_plot_script(out / "slice.csv").read_text()
    assert "projection=\"3d\"" in text and "scatter" in text


def test_ratio_series_line_script(tmp_path):
    code, out = run(tmp_path, "current", "ahlfors")
    assert code == 0
    text = cli.emit_plot_script(out / "ratios.json").read_text()
    assert "semilogy" in text


def test_unknown_schema(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(UnknownSchema):
        cli.emit_plot_script(p)
    with pytest.raises(ConfigInvalid):
        cli.emit_plot_script(tmp_path / "missing.csv")


def test_config_file_and_precedence(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("# comment\ndepth = 4\nseed = 11\n")
    code, out = run(tmp_path, "limitset", "--config", str(cfgfile))
    rep = json.loads((out / "report.json").read_text())
    assert code == 0 and rep["config"]["params"]["depth"] == 4 and rep["seed"] == 11
    code, out = run(tmp_path, "limitset", "--config", str(cfgfile), "--depth", "3", sub="o2")
    assert json.loads((out / "report.json").read_text())["config"]["params"]["depth"] == 3


def test_bad_config_key(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("bogus = 1\n")
    code, _ = run(tmp_path, "limitset", "--config", str(cfgfile))
    assert code == 2


def test_environment_output_directory(tmp_path, monkeypatch):
    target = tmp_path / "envout"
    monkeypatch.setenv(cli.ENV_OUT, str(target))
    assert cli.main(["current", "weyl", "--n", "10"]) == 0
    assert (target / "report.json").is_file()


def test_quality_failure_exit_3(tmp_path):
    # a tiny walk budget misses the stationarity threshold
    code, out = run(tmp_path, "current", "harmonic", "--depth", "6", "--walkers", "20", "--steps", "20")
    rep = json.loads((out / "report.json").read_text())
    assert code == (0 if rep["status"] == "ok" else 3)


@pytest.mark.parametrize("argv", [["group", "build"], ["suspend"], ["holonomy"], ["halphen"], ["degree"],
                                  ["camacho-sad"], ["ode", "monodromy", "--ode", "euler:0.2"],
                                  ["invariant-lines"], ["dimension", "--depth", "8"],
                                  ["group", "deform", "--signature", "3,3,3,3", "--t", "0.05"]])
def test_commands_succeed(tmp_path, argv):
    code, out = run(tmp_path, *argv)
    assert code == 0
    assert (out / "manifest.json").is_file()


def test_verify_subset(tmp_path):
    code, out = run(tmp_path, "verify-all", "--preset", "triangle-2-3-7", "--only", "1,4,8")
    assert code == 0
    assert json.loads((out / "report.json").read_text())["result"]["all_passed"]
