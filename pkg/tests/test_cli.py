import json
import subprocess
import sys

import jsonschema
import pytest

from ietlab import __version__
from ietlab.cli import load_schema, main

INV_PHI = "0.6180339887498948482045868343656381177203091798057628621354486227"

RUNS = {
    "class": ["class", "--perm", "4 3 2 1"],
    "lyapunov": ["lyapunov", "--perm", "3 2 1", "--steps", "2000", "--seed", "3"],
    "scan": ["scan", "--perm", "2 1", "--lambda", "1,phi", "--h", "1,1", "--t-min", "0.1",
             "--t-max", "0.9", "--t-steps", "5", "--visits", "20"],
    "exclude": ["exclude", "--samples", "20", "--blocks", "3", "--block", "5", "--seed", "2"],
    "dim": ["dim", "--steps", "300", "--spectrum-steps", "2000", "--seed", "1"],
    "induct": ["induct", "--perm", "4 3 2 1", "--lambda", "1/7,2/7,3/11,5/13", "--steps", "5",
               "--mode", "zorich"],
    "orbit": ["orbit", "--perm", "3 2 1", "--lambda", "1/3,1/5,1/7", "--x0", "1/11", "--steps", "6"],
}


def run(args, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, out.read_bytes() if out.exists() else b""


@pytest.mark.parametrize("command", sorted(RUNS))
def test_outputs_validate_and_reproduce(command, tmp_path):
    code, first = run(RUNS[command], tmp_path)
    assert code == 0
    code, second = run(RUNS[command], tmp_path)
    assert first == second
    doc = json.loads(first)
    jsonschema.validate(doc, load_schema(command))
    assert doc["version"] == __version__
    assert doc["config"]["command"] == command


@pytest.mark.parametrize("command", sorted(RUNS))
def test_csv_output_embeds_config(command, tmp_path):
    code, text = run(RUNS[command] + ["--format", "csv"], tmp_path, "a.csv")
    assert code == 0
    first = text.decode().splitlines()[0]
    assert first.startswith("# ")
    assert json.loads(first[2:])["command"] == command


def test_class_listing(tmp_path):
    _, out = run(["class", "--perm", "2 1"], tmp_path)
    doc = json.loads(out)
    assert doc["size"] == 1 and doc["genus"] == 1
    _, out = run(["class", "--perm", "4 3 2 1"], tmp_path)
    doc = json.loads(out)
    assert doc["size"] == 7 and {m["genus"] for m in doc["members"]} == {2}


def test_reducible_exit_code(capsys):
    assert main(["class", "--perm", "1 2"]) == 2
    assert "reducible" in capsys.readouterr().err


def test_bad_vector_exit_code(capsys):
    assert main(["orbit", "--perm", "2 1", "--lambda", "1/2,x"]) == 2
    assert main(["scan", "--perm", "2 1", "--lambda", "1,phi", "--h", "0.5,1"]) == 2


def test_tie_exit_code(capsys):
    assert main(["induct", "--perm", "2 1", "--lambda", "1/2,1/2"]) == 4


def test_tie_after_output_is_a_warning(tmp_path, capsys):
    code, out = run(["induct", "--perm", "2 1", "--lambda", "1/3,2/3", "--steps", "3"], tmp_path)
    assert code == 0
    doc = json.loads(out)
    assert doc["truncation"] == "tie" and len(doc["steps"]) == 1
    assert "tie" in capsys.readouterr().err


def test_precision_loss_exit_code(monkeypatch):
    import ietlab.cli as cli
    from ietlab.lyap import PrecisionLoss

    def boom(*args, **kwargs):
        raise PrecisionLoss("frame degenerated")

    monkeypatch.setattr(cli, "lyapunov_spectrum", boom)
    assert main(["lyapunov", "--perm", "2 1", "--steps", "1000"]) == 3


def test_divergence_exit_code(monkeypatch):
    import ietlab.cli as cli
    from ietlab.renorm import DivergenceGuard

    def boom(*args, **kwargs):
        raise DivergenceGuard("run too long")

    monkeypatch.setattr(cli, "zorich_step", boom)
    assert main(["induct", "--perm", "2 1", "--lambda", "0.3,0.7", "--mode", "zorich"]) == 3


def test_float_near_tie_is_truncated(tmp_path, capsys):
    # 0.1 + 0.15 = 0.25 in decimal, so rounding produces a near-tie
    code, out = run(["induct", "--perm", "5 4 3 2 1", "--lambda", "0.1,0.2,0.3,0.15,0.25",
                     "--steps", "20", "--mode", "zorich"], tmp_path)
    assert code == 0
    assert json.loads(out)["truncation"] == "divergence"


def test_scan_integer_t_gives_zero_rows(tmp_path):
    _, out = run(["scan", "--perm", "2 1", "--lambda", "1,phi", "--h", "1,1", "--t-min", "1",
                  "--t-max", "3", "--t-steps", "3", "--visits", "10"], tmp_path)
    doc = json.loads(out)
    assert all(d == 0 for series in doc["scan"]["visits"] for _, d in series)


def test_scan_golden_control(tmp_path):
    _, out = run(["scan", "--perm", "2 1", "--lambda", "1,phi", "--h", "1,1", "--t-min", INV_PHI,
                  "--visits", "30"], tmp_path)
    assert json.loads(out)["scan"]["summary"][0]["flag"] == "eigen"


def test_lyapunov_d2_symmetry(tmp_path):
    _, out = run(["lyapunov", "--perm", "2 1", "--steps", "100000", "--seed", "1"], tmp_path)
    e = json.loads(out)["spectrum"]["exponents"]
    assert abs(sum(e)) < 0.02 * e[0]


def test_exclude_far_line(tmp_path):
    _, out = run(["exclude", "--samples", "5", "--blocks", "2", "--offset", "1/5,-1/5,1/5,-1/5"],
                 tmp_path)
    assert json.loads(out)["probe"]["estimates"] == [0.0, 0.0, 0.0]


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "ietlab.cli", "class", "--perm", "2 1"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["size"] == 1


def test_orbit_rational_start_with_float_lengths(tmp_path):
    code, out = run(["orbit", "--perm", "2 1", "--lambda", "1,phi", "--x0", "1/3", "--steps", "3"],
                    tmp_path)
    assert code == 0
    assert json.loads(out)["itinerary"] == [1, 2, 1]
