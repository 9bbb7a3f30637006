import json
from pathlib import Path

import numpy as np
import pytest

from grom3 import __version__
from grom3 import io as gio
from grom3.cli import main as _main
from grom3.errors import EmptyAfterFiltering, ParseError, SchemaError
from grom3.model import GroM3Model
from grom3.simulate import Dataset, preset_scenario


def main(argv):
    return _main([str(a) for a in argv])


def write(path, text):
    Path(path).write_text(text, encoding="utf-8")
    return path


class TestReadDataset:
    def test_binary_zero_based(self, tmp_path):
        f = write(tmp_path / "a.csv", "x,y\n0,1\n1,1\n0,0\n")
        data = gio.read_dataset(f)
        assert data.d == (2, 2) and data.n == 3
        assert np.array_equal(data.responses, [[0, 1], [1, 1], [0, 0]])

    def test_missing_rows_dropped(self, tmp_path):
        f = write(tmp_path / "a.csv", "x,y\n1,2\nNA,1\n2,\n2,2\n")
        with pytest.warns(UserWarning, match="dropped 2"):
            data = gio.read_dataset(f)
        assert data.n == 2 and data.dropped == 2

    def test_five_levels(self, tmp_path):
        rng = np.random.default_rng(0)
        Y = rng.integers(1, 6, size=(100, 40))
        Y[0] = 5
        lines = [",".join(f"q{j}" for j in range(40))] + [",".join(map(str, r)) for r in Y]
        data = gio.read_dataset(write(tmp_path / "a.csv", "\n".join(lines) + "\n"))
        assert data.d == (5,) * 40
        assert np.array_equal(data.responses, Y - 1)

    def test_parse_error_location(self, tmp_path):
        f = write(tmp_path / "a.csv", "x,y\n1,2\n1,b\n")
        with pytest.raises(ParseError) as exc:
            gio.read_dataset(f)
        assert exc.value.row == 3 and exc.value.column == 2

    def test_ragged_row(self, tmp_path):
        with pytest.raises(ParseError):
            gio.read_dataset(write(tmp_path / "a.csv", "x,y\n1,2,3\n"))

    def test_empty_after_filtering(self, tmp_path):
        with pytest.raises(EmptyAfterFiltering), pytest.warns(UserWarning):
            gio.read_dataset(write(tmp_path / "a.csv", "x,y\nNA,1\n"))

    def test_override(self, tmp_path):
        data = gio.read_dataset(write(tmp_path / "a.csv", "x,y\n1,2\n2,1\n"), d_override=(3, 4))
        assert data.d == (3, 4)

    def test_round_trip_bytes(self, tmp_path):
        text = "a,b,c\n1,2,3\n2,2,1\n3,1,2\n"
        f = write(tmp_path / "a.csv", text)
        gio.write_dataset(gio.read_dataset(f), tmp_path / "b.csv")
        assert (tmp_path / "b.csv").read_text(encoding="utf-8") == text


class TestModelFile:
    def test_preset_round_trip(self, tmp_path):
        m = preset_scenario("K2-p30")
        gio.write_model(m, tmp_path / "m.model")
        back = gio.read_model(tmp_path / "m.model")
        assert back == m
        for a, b in zip(back.lambdas, m.lambdas):
            assert np.array_equal(a, b)

    def test_random_floats_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        lams = [rng.dirichlet(np.ones(3), size=2).T for _ in range(4)]
        m = GroM3Model([0, 1, 0, 1], lams, rng.uniform(0.1, 2, 2), 2)
        gio.write_model(m, tmp_path / "m.model")
        back = gio.read_model(tmp_path / "m.model")
        assert np.array_equal(back.alpha, m.alpha)
        assert all(np.array_equal(a, b) for a, b in zip(back.lambdas, m.lambdas))

    def test_missing_alpha(self, tmp_path):
        f = write(tmp_path / "m.model", "p = 1\nK = 1\nd = 2\ns = 1\n[lambda 1]\n0.5\n0.5\n")
        with pytest.raises(SchemaError) as exc:
            gio.read_model(f)
        assert exc.value.field == "alpha"

    def test_minimal_hand_written(self, tmp_path):
        f = write(tmp_path / "m.model",
                  "# smallest model\np = 2\nG = 1\nK = 1\nd = 2 2\ns = 1 1\nalpha = 1\n"
                  "[lambda 1]\n0.3\n0.7\n[lambda 2]\n1\n0\n")
        m = gio.read_model(f)
        assert (m.p, m.G, m.K) == (2, 1, 1)

    def test_bad_table_names_block(self, tmp_path):
        f = write(tmp_path / "m.model",
                  "p = 2\nG = 1\nK = 1\nd = 2 2\ns = 1 1\nalpha = 1\n"
                  "[lambda 1]\n0.3\n0.7\n[lambda 2]\n1\n")
        with pytest.raises(SchemaError) as exc:
            gio.read_model(f)
        assert exc.value.field == "lambda[2]"


def test_config_file(tmp_path):
    f = write(tmp_path / "c.cfg", "# run\nseed = 3\nburn-in = 5 # short\n")
    assert gio.read_config(f) == {"seed": "3", "burn_in": "5"}


# --------------------------------------------------------------------------
# command line


def run(argv, capsys=None):
    code = main(argv)
    err = capsys.readouterr().err if capsys else ""
    return code, err


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--scenario", "K3-p30", "--n", "1000", "--seed", "7",
                 "--output", str(out)]) == 0
    return out


def test_simulate_output(simulated):
    data = gio.read_dataset(simulated / "data.csv")
    assert (data.n, data.p) == (1000, 30)
    raw = np.loadtxt(simulated / "data.csv", delimiter=",", skiprows=1)
    assert set(np.unique(raw)) == {1, 2, 3}
    manifest = json.loads((simulated / "manifest.json").read_text())
    assert manifest["version"] == __version__ and manifest["settings"]["seed"] == 7
    assert gio.read_model(simulated / "truth.model") == preset_scenario("K3-p30")


def test_replicates(tmp_path):
    assert main(["simulate", "--scenario", "K2-p30", "--n", "20", "--replicates", "3",
                 "--output", str(tmp_path)]) == 0
    files = sorted(p.name for p in tmp_path.glob("data_*.csv"))
    assert files == ["data_1.csv", "data_2.csv", "data_3.csv"]
    assert (tmp_path / "data_1.csv").read_bytes() != (tmp_path / "data_2.csv").read_bytes()


SHORT = ["--iterations", "60", "--burn-in", "40", "--thin", "5"]


def test_fit_outputs(simulated, tmp_path):
    assert main(["fit", "--input", simulated / "data.csv", "--G", "6", "--K", "3",
                 "--output", tmp_path, *SHORT]) == 0
    for name in ("alpha.csv", "s.csv", "lambda.csv", "acceptance.csv", "summary.model",
                 "summary.json", "manifest.json"):
        assert (tmp_path / name).exists()
    alpha = np.loadtxt(tmp_path / "alpha.csv", delimiter=",", skiprows=1)
    assert len(np.unique(alpha[:, 0])) == 4  # (60 - 40) / 5 stored states
    lam = np.loadtxt(tmp_path / "lambda.csv", delimiter=",", skiprows=1)
    assert lam.shape[0] == 4 * 30 * 3 * 3
    acc = np.loadtxt(tmp_path / "acceptance.csv", delimiter=",", skiprows=1)
    assert acc.shape[0] == 60


def test_fit_gom(simulated, tmp_path):
    assert main(["fit", "--input", simulated / "data.csv", "--K", "3",
                 "--fixed-grouping", "identity", "--output", tmp_path, *SHORT]) == 0
    s = np.loadtxt(tmp_path / "s.csv", delimiter=",", skiprows=1)
    assert np.array_equal(s[:, 2], s[:, 1])  # value equals variable index
    assert json.loads((tmp_path / "summary.json").read_text())["G"] == 30


def test_fit_grouping_file(simulated, tmp_path):
    write(tmp_path / "g.txt", " ".join(str(j % 6 + 1) for j in range(30)))
    assert main(["fit", "--input", simulated / "data.csv", "--K", "3", "--fixed-grouping",
                 tmp_path / "g.txt", "--output", tmp_path / "o", *SHORT]) == 0
    s = np.loadtxt(tmp_path / "o" / "s.csv", delimiter=",", skiprows=1)
    assert np.array_equal(s[:, 2], (s[:, 1] - 1) % 6 + 1)


def test_eval_perfect(simulated, tmp_path):
    assert main(["eval", "--summary", simulated / "truth.model", "--truth",
                 simulated / "truth.model", "--output", tmp_path]) == 0
    ev = json.loads((tmp_path / "eval.json").read_text())
    assert ev["ari"] == 1.0 and ev["rmse_lambda"] == 0.0 and ev["rmse_alpha"] == 0.0


def test_crv(simulated, tmp_path):
    assert main(["crv", "--input", simulated / "data.csv", "--summary",
                 simulated / "truth.model", "--output", tmp_path]) == 0
    for name in ("crv_sample.csv", "crv_model.csv"):
        lines = (tmp_path / name).read_text().splitlines()
        assert len(lines) == 31 and lines[0].split(",")[1] == "item1"


def test_check_id(simulated, tmp_path, capsys):
    assert main(["check-id", "--model", simulated / "truth.model", "--output", tmp_path]) == 0
    out = capsys.readouterr().out
    assert "theorem: theorem2\nsatisfied: true" in out
    assert (tmp_path / "identifiability.txt").read_text() == out


def test_select(simulated, tmp_path):
    assert main(["select", "--input", simulated / "data.csv", "--G-list", "5,6",
                 "--K-list", "3", "--output", tmp_path, *SHORT]) == 0
    rows = (tmp_path / "waic.csv").read_text().splitlines()
    assert rows[0] == "G,K,waic,occupied_groups,kept" and len(rows) == 3
    sel = json.loads((tmp_path / "selected.json").read_text())
    assert sel["K"] == 3 and sel["G"] in (5, 6)


@pytest.mark.parametrize("argv,code,etype", [
    (["nonsense"], 1, "UsageError"),
    (["fit", "--G", "2", "--K", "2", "--output", "{tmp}/o"], 1, "UsageError"),
    (["fit", "--input", "{tmp}/missing.csv", "--G", "2", "--K", "2", "--output", "{tmp}/o"], 2,
     "FileNotFoundError"),
    (["fit", "--input", "{tmp}/bad.csv", "--G", "2", "--K", "2", "--output", "{tmp}/o"], 2,
     "ParseError"),
    (["simulate", "--scenario", "K9-p30", "--n", "5", "--output", "{tmp}/o"], 2,
     "UnknownScenario"),
    (["eval", "--summary", "{tmp}/bad.model", "--truth", "{tmp}/bad.model", "--output",
      "{tmp}/o"], 2, "SchemaError"),
    (["fit", "--input", "{tmp}/ok.csv", "--G", "2", "--K", "2", "--burn-in", "50",
      "--iterations", "10", "--output", "{tmp}/o"], 1, "UsageError"),
])
def test_exit_codes(tmp_path, capsys, argv, code, etype):
    write(tmp_path / "bad.csv", "a,b\n1,x\n")
    write(tmp_path / "ok.csv", "a,b,c\n1,2,1\n2,1,1\n")
    write(tmp_path / "bad.model", "p = 1\n")
    got, err = run([a.format(tmp=tmp_path) for a in argv], capsys)
    assert got == code
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith(f"error code={code} type={etype} message=")


def test_numeric_failure_exit_code(tmp_path, capsys, monkeypatch):
    import grom3.cli as cli

    def boom(*a, **k):
        raise FloatingPointError("overflow in exp")

    monkeypatch.setattr(cli, "run_chain", boom)
    write(tmp_path / "ok.csv", "a,b,c\n1,2,1\n2,1,1\n")
    code, err = run(["fit", "--input", tmp_path / "ok.csv", "--G", "1", "--K", "2",
                     "--output", tmp_path / "o"], capsys)
    assert code == 3 and err.startswith("error code=3 type=FloatingPointError")


def test_flags_override_config(simulated, tmp_path):
    write(tmp_path / "c.cfg", "n = 10\nseed = 1\nscenario = K2-p30\n")
    assert main(["simulate", "--config", tmp_path / "c.cfg", "--seed", "2",
                 "--output", tmp_path / "o"]) == 0
    settings = json.loads((tmp_path / "o" / "manifest.json").read_text())["settings"]
    assert settings["seed"] == 2 and settings["n"] == 10


def _files(d):
    return {p.name: p.read_bytes() for p in Path(d).iterdir() if p.name != "manifest.json"}


@pytest.mark.parametrize("command", ["simulate", "fit", "select", "crv"])
def test_manifest_reproduces_run(simulated, tmp_path, command):
    args = {
        "simulate": ["--scenario", "K2-p30", "--n", "50", "--seed", "3", "--replicates", "2"],
        "fit": ["--input", simulated / "data.csv", "--G", "6", "--K", "3", "--variant", "gibbs",
                *SHORT],
        "select": ["--input", simulated / "data.csv", "--G-list", "6", "--K-list", "2,3", *SHORT],
        "crv": ["--input", simulated / "data.csv", "--summary", simulated / "truth.model"],
    }[command]
    assert main([command, *map(str, args), "--output", str(tmp_path / "a")]) == 0
    assert main([command, "--config", str(tmp_path / "a" / "manifest.json"),
                 "--output", str(tmp_path / "b")]) == 0
    first, second = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert first.keys() == second.keys() and first == second
