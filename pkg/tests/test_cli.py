import json

import pytest

from xyfse.cli import CACHE_ENV, load_config, main, parse_config, report
from xyfse.errors import ConfigError, MalformedInput
from xyfse.fse import CSV_COLUMNS

SWEEP = """
[run]
task = sweep
output = {out}
gamma = 0
h = 0.5
patterns = 1,3,2; 4   # one multi-block and one single-block family
alphas = 2, 1.0
lambdas = 1-8
kinds = single, extrinsic
calibration_lengths = 64, 91, 128, 181, 256
"""


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_sweep(tmp_path):
    cfg = parse_config(SWEEP.format(out=tmp_path))
    assert cfg.task == "sweep"
    assert [str(f) for f in cfg.patterns] == ["1,3,2", "4"]
    assert cfg.lambdas == list(range(1, 9))
    assert cfg.alphas == [2.0, 1.0]
    assert cfg.fit_min_lambda == 4


@pytest.mark.parametrize(
    "edit",
    [
        ("h = 0.5", "h = 0.5\nbogus = 1"),
        ("patterns = 1,3,2; 4", "patterns ="),
        ("patterns = 1,3,2; 4", "patterns = 1,3"),
        ("lambdas = 1-8", "lambdas = 1-5"),
        ("lambdas = 1-8", "lambdas = 1, 3, 2, 4, 5, 6"),
        ("alphas = 2, 1.0", "alphas = 2, -1"),
        ("kinds = single, extrinsic", "kinds = joint"),
        ("task = sweep", "task = serve"),
        ("h = 0.5", "h = 1.5"),
    ],
)
def test_bad_configs_exit_2(tmp_path, capsys, edit):
    path = _write(tmp_path, SWEEP.format(out=tmp_path / "o").replace(*edit))
    code, _, err = _run(["run", path], capsys)
    assert code == 2
    payload = json.loads(err)
    assert payload["exit_code"] == 2 and payload["error"] == "ConfigError"


def test_unknown_preset():
    with pytest.raises(ConfigError):
        load_config("fig9")
    assert load_config("fig5").point.h == 0.6


def test_numerical_failure_exit_3(tmp_path, capsys):
    path = _write(tmp_path, SWEEP.format(out=tmp_path / "o").replace("64, 91, 128, 181, 256", "2, 3"))
    code, _, err = _run(["run", path, "--cache-dir", tmp_path / "cache"], capsys)
    assert code == 3
    assert json.loads(err)["error"] == "FitIllConditioned"


@pytest.fixture(scope="module")
def sweep_dir(tmp_path_factory):
    base = tmp_path_factory.mktemp("sweep")
    path = base / "run.ini"
    path.write_text(SWEEP.format(out=base / "out"))
    assert main(["run", str(path), "--cache-dir", str(base / "cache")]) == 0
    return base


def test_sweep_outputs(sweep_dir):
    out = sweep_dir / "out"
    header = (out / "records.csv").read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    fits = json.loads((out / "fits.json").read_text())
    # single for both families, extrinsic only for the multi-block one
    assert len(fits) == 3 * 2
    assert {f["status"] for f in fits if f["alpha"] == 1.0} == {"SKIPPED"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["lambda_list"] == list(range(1, 9))
    assert (out / "plots" / "plot.gp").is_file()
    assert list((sweep_dir / "cache").glob("G_*.txt"))


def test_rerun_is_byte_identical(sweep_dir, tmp_path, capsys):
    path = _write(tmp_path, SWEEP.format(out=tmp_path / "again"))
    code, _, _ = _run(["run", path, "--threads", 3, "--cache-dir", sweep_dir / "cache"], capsys)
    assert code == 0
    for name in ("records.csv", "fits.json", "manifest.json"):
        assert (tmp_path / "again" / name).read_bytes() == (sweep_dir / "out" / name).read_bytes()


def test_report(sweep_dir, capsys):
    code, out, _ = _run(["report", sweep_dir / "out"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "48 records, 6 fits"
    assert all(line.split()[-1] in {"PASS", "FAIL", "SKIPPED"} for line in lines[2:])


def test_report_statuses(tmp_path):
    (tmp_path / "records.csv").write_text(",".join(CSV_COLUMNS) + "\n")
    fits = [
        {"pattern": "1,3,2", "kind": "single", "alpha": 2.0, "eta": 1.05},
        {"pattern": "1,3,2", "kind": "single", "alpha": 3.0, "eta": 0.2},
        {"pattern": "1,3,2", "kind": "single", "alpha": 1.0, "eta": 1.7},
        {"pattern": "1,3,2", "kind": "single", "alpha": 4.0, "eta": None},
        {"pattern": "1,3,2", "kind": "single", "alpha": 20.0, "eta": 0.05},
    ]
    (tmp_path / "fits.json").write_text(json.dumps(fits))
    statuses = [line.split()[-1] for line in report(tmp_path).splitlines()[2:]]
    assert statuses == ["PASS", "FAIL", "SKIPPED", "FAIL", "PASS"]


def test_report_missing_files(tmp_path, capsys):
    with pytest.raises(MalformedInput):
        report(tmp_path)
    (tmp_path / "records.csv").write_text("a,b\n")
    (tmp_path / "fits.json").write_text("[]")
    code, _, err = _run(["report", tmp_path], capsys)
    assert code == 2 and json.loads(err)["error"] == "MalformedInput"


def test_correlator_preset(tmp_path, capsys):
    code, out, _ = _run(["run", "fig3", "--output", tmp_path / "fig3", "--cache-dir", tmp_path / "c"], capsys)
    assert code == 0
    assert json.loads(out)["tables"] == 2
    lines = (tmp_path / "fig3" / "K_gamma0.4_h0.5.dat").read_text().splitlines()
    assert len(lines) == 100 and lines[0].startswith("1 ")


def test_localization_preset(tmp_path, capsys):
    code, _, _ = _run(["run", "fig4", "--output", tmp_path / "fig4", "--cache-dir", tmp_path / "c"], capsys)
    assert code == 0
    summary = json.loads((tmp_path / "fig4" / "localization.json").read_text())
    assert [s["h"] for s in summary] == [1.0, 1.5]
    assert len(list((tmp_path / "fig4").glob("mode_*.dat"))) == 6


def test_cache_warm_uses_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path / "env-cache"))
    code, out, _ = _run(["cache", "warm", 0.4, 0.5, 20], capsys)
    assert code == 0
    path = tmp_path / "env-cache" / out.strip().rsplit("/", 1)[-1]
    lines = path.read_text().splitlines()
    assert lines[0] == "gamma=0.4 h=0.5 tol=1e-12"
    assert len(lines) == 1 + 41
    code, _, err = _run(["cache", "warm", 0.4, 0.5, -1], capsys)
    assert code == 2
