import json
import math
import os
import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from malab import cli
from malab.grid import TorusGrid, read_field, write_field

GOLDEN = Path(__file__).parent / "golden"
DATA = Path(__file__).parent / "data"
UPDATE = os.environ.get("MALAB_UPDATE_GOLDEN") == "1"
NUMBER = re.compile(r"^[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")

CASES = {
    "weight-check": ["weight-check", "--family", "logp", "--p", "3", "--n", "2"],
    "weight-check-fails": ["weight-check", "--family", "logp", "--p", "2", "--n", "2"],
    "lux-norm": ["lux-norm", "--density", str(DATA / "density.csv"), "--weight", "PowerP:3:1"],
    "legendre": ["legendre", "--weight", "PowerP:3", "--s-max", "4", "--num", "9"],
    "radial-forward": ["radial-forward", "--profile", "triple_log", "--n", "2", "--num", "5"],
    "radial-inverse": ["radial-inverse", "--n", "2", "--num", "8"],
    "radial-integrability": ["radial-integrability", "--h-power", "0.5", "--log-abs-T", "150"],
    "rigidity": ["rigidity", "--profile", "exponential", "--p", "1.5", "--log-abs-T", "20"],
    "construct-chi": ["construct-chi", "--h-power", "2", "--B", "10"],
    "trick-constant": ["trick-constant", "--a", "0.25", "--b", "1", "--delta", "0.5", "--gamma", "1",
                       "--C1", "1", "--fp-norm", "1"],
    "solve-ma": ["solve-ma", "--random", "1", "--n", "2", "--N", "8"],
    "moser-trace": ["moser-trace", "--random", "2", "--p", "3", "--K", "6"],
    "energy-check": ["energy-check", "--random", "3", "--r", "1,2,4"],
    "skoda": ["skoda", "--random", "3", "--alpha", "1,10,100"],
    "envelope": ["envelope", "--random", "4", "--N", "16"],
    "reduction-check": ["reduction-check", "--random", "5", "--kind", "GeometricMean"],
    "beta-bounds": ["beta-bounds", "--random", "6"],
    "operator-check": ["operator-check", "--kind", "SigmaKRoot", "--n", "3", "--k", "2", "--samples", "500",
                       "--seed", "1"],
    "domination": ["domination", "--random", "7", "--N", "16"],
    "osc-experiment": ["osc-experiment", "--eps", "0.1,0.01", "--N", "16", "--weight", "LogP:2:1"],
}


def run(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def same_text(got, want, rel=1e-8):
    """Token-wise comparison; numbers within ``rel``."""
    gt = re.split(r"([\s,:\[\]{}\"=])", got)
    wt = re.split(r"([\s,:\[\]{}\"=])", want)
    if len(gt) != len(wt):
        return False
    for a, b in zip(gt, wt):
        if NUMBER.match(a) and NUMBER.match(b):
            x, y = float(a), float(b)
            if not math.isclose(x, y, rel_tol=rel, abs_tol=1e-12):
                return False
        elif a != b:
            return False
    return True


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden_output(name, capsys):
    code, out, err = run(CASES[name], capsys)
    assert code == 0, err
    path = GOLDEN / f"{name}.txt"
    if UPDATE:
        path.write_text(out)
    assert same_text(out, path.read_text()), f"{name} differs from {path}"


def test_golden_covers_every_subcommand():
    assert {argv[0] for argv in CASES.values()} == set(cli.SUBCOMMANDS)


@pytest.mark.parametrize("name", cli.SUBCOMMANDS)
def test_help(name, capsys):
    code, out, _ = run([name, "--help"], capsys)
    assert code == 0
    assert out.startswith("usage: malab " + name)
    assert len(out.splitlines()) > 3


def test_weight_check_prints_verdict(capsys):
    code, out, _ = run(CASES["weight-check"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "SatisfiesK"
    assert "tail:" in out


def test_lux_norm_of_constant_density(tmp_path, capsys):
    g = TorusGrid(1, 8)
    write_field(tmp_path / "one.mafld", g.constant(1.0))
    (tmp_path / "one.csv").write_text("f,m\n1.0,0.25\n1.0,0.75\n")
    for name in ("one.mafld", "one.csv"):
        code, out, _ = run(["lux-norm", "--density", str(tmp_path / name)], capsys)
        assert code == 0
        assert out == "1.0\n"


def test_domain_error_is_one_line(capsys):
    code, out, err = run(["trick-constant", "--a", "0.5", "--b", "1", "--delta", "0.5", "--gamma", "1",
                          "--C1", "1", "--fp-norm", "1"], capsys)
    assert code == 1
    assert out == ""
    assert re.fullmatch(r"error: Infeasible: [^\n]+\n", err)


@pytest.mark.parametrize("argv", [
    ["construct-chi", "--h-power", "1"],
    ["envelope", "--obstacle", "/nonexistent/field.mafld"],
    ["solve-ma", "--random", "0", "--N", "12"],
    ["weight-check", "--family", "nosuch", "--p", "1"],
])
def test_domain_errors_exit_one(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 1
    assert err.startswith("error: ") and err.count("\n") == 1
    assert "Traceback" not in err


@pytest.mark.parametrize("argv", [[], ["no-such-command"], ["trick-constant", "--a", "0.5"],
                                  ["legendre", "--weight", "PowerP:x"]])
def test_usage_errors_exit_two(argv, capsys):
    assert run(argv, capsys)[0] == 2


def test_save_outputs(tmp_path, capsys):
    target = tmp_path / "phi.mafld"
    code, out, _ = run(["solve-ma", "--random", "1", "--N", "16", "--save", str(target)], capsys)
    assert code == 0 and json.loads(out)["flags"]["psh"]
    assert read_field(target).grid == TorusGrid(1, 16)
    code, _, _ = run(["skoda", "--field", str(target), "--out", str(tmp_path / "s.csv")], capsys)
    assert code == 0
    assert (tmp_path / "s.csv").read_text().startswith("alpha,integral\n")
    code, _, _ = run(["envelope", "--obstacle", str(target), "--save", str(tmp_path / "env")], capsys)
    assert code == 0
    assert (tmp_path / "env.mafld").exists() and (tmp_path / "env.json").exists()


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("MA_LAB_SEED", "11")
    _, a, _ = run(["skoda", "--N", "16"], capsys)
    _, b, _ = run(["skoda", "--N", "16", "--random", "11"], capsys)
    _, c, _ = run(["skoda", "--N", "16", "--random", "12"], capsys)
    assert a == b != c
    monkeypatch.setenv("MA_LAB_SEED", "eleven")
    assert run(["skoda", "--N", "16"], capsys)[0] == 2


def write_config(path, **extra):
    cfg = {"command": "osc-experiment", "family": "power_sine", "eps": [0.1, 0.01, 0.001],
           "grid": {"n": 1, "N": 16}, "p": 2.0, "weights": [{"family": "LogP", "p": 2.0, "n": 1}]}
    cfg.update(extra)
    path.write_text(json.dumps(cfg))
    return path


def test_osc_config_is_deterministic_across_jobs(tmp_path, capsys):
    cfg = write_config(tmp_path / "sweep.json")
    outs = []
    for jobs in ("1", "3", "3"):
        out = tmp_path / f"rows{len(outs)}.csv"
        assert run(["osc-experiment", "--config", str(cfg), "--jobs", jobs, "--out", str(out)], capsys)[0] == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    lines = outs[0].decode().splitlines()
    assert lines[0] == "eps,osc,lp_norm,lux_logp_2_n1"
    assert len(lines) == 4


def test_osc_config_uses_output_key(tmp_path, capsys):
    target = tmp_path / "from_config.csv"
    cfg = write_config(tmp_path / "sweep.json", output=str(target))
    assert run(["osc-experiment", "--config", str(cfg)], capsys)[0] == 0
    assert target.read_text().startswith("eps,osc")


@pytest.mark.parametrize("extra", [{"colour": "red"}, {"grid": {"n": 3}}, {"eps": []},
                                   {"weights": [{"family": "LogP", "q": 1}]}, {"command": "envelope"}])
def test_config_schema_rejections(tmp_path, extra, capsys):
    cfg = write_config(tmp_path / "bad.json", **extra)
    code, _, err = run(["osc-experiment", "--config", str(cfg)], capsys)
    assert code == 2
    assert err.startswith("error: ConfigError:")


def test_config_invalid_json(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert run(["osc-experiment", "--config", str(p)], capsys)[0] == 2


def test_schema_is_valid():
    import jsonschema

    jsonschema.Draft202012Validator.check_schema(cli.load_schema())


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "malab.cli", "trick-constant", "--a", "0.25", "--b", "1",
                           "--delta", "0.5", "--gamma", "1", "--C1", "1", "--fp-norm", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert float(proc.stdout) == pytest.approx(math.log(4.0))
