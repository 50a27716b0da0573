import json
import math

import numpy as np
import pytest

from choreo import cli
from choreo.verify import CheckOutcome


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# classify / spectrum


def test_classify_stdout_json(capsys):
    code, out, _ = run(capsys, "classify", "--n", "5", "--alpha", "1", "--omega", "2.1")
    assert code == 0
    doc = json.loads(out)
    assert doc["regime"] == "ROTATING_CIRCLE"
    assert doc["predicted_winding"] == 2
    assert doc["config"]["command"] == "classify"


def test_classify_deterministic(capsys):
    _, out1, _ = run(capsys, "classify", "--n", "6", "--omega", "1.8")
    _, out2, _ = run(capsys, "classify", "--n", "6", "--omega", "1.8")
    assert out1 == out2


def test_spectrum_json(capsys):
    code, out, _ = run(capsys, "spectrum", "--n", "3", "--alpha", "1")
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["deltas"][1] - 1.0 / (2 * math.pi)) < 1e-14
    assert doc["multiplicities"] == [1, 2]


def test_spectrum_variant_requires_coprime(capsys):
    code, _, err = run(capsys, "spectrum", "--n", "6", "--variant", "2")
    assert code == 1
    assert "error" in err


def test_malformed_flag_exits_one(capsys):
    code, _, _ = run(capsys, "classify", "--n", "3", "--omega")
    assert code == 1


def test_unknown_subcommand_exits_one(capsys):
    code, _, _ = run(capsys, "frobnicate")
    assert code == 1


# ---------------------------------------------------------------------------
# minimize


def test_minimize_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    code, _, _ = run(
        capsys,
        "minimize",
        "--n", "3", "--alpha", "1", "--omega", "0",
        "--seed", "7", "--harmonics", "6", "--noise", "0.05",
        "--out", str(out), "--svg", "--csv",
    )
    assert code == 0
    doc = json.loads((out / "orbit.json").read_text())
    assert doc["result"]["converged"] is True
    assert abs(doc["diagnostics"]["radius"] - 3.0 ** (-1.0 / 6.0)) < 1e-4
    assert doc["config"]["seed"] == 7
    csv = (out / "iterations.csv").read_text().splitlines()
    assert csv[0] == "iter,action,grad_norm,step"
    assert len(csv) > 2
    svg = (out / "orbit.svg").read_text()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert (out / "samples.csv").exists()


def test_minimize_deterministic_artifacts(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code, _, _ = run(
            capsys,
            "minimize",
            "--n", "3", "--omega", "0", "--seed", "3",
            "--harmonics", "4", "--out", str(out),
        )
        assert code == 0
        outs.append((out / "orbit.json").read_bytes())
    assert outs[0] == outs[1]


def test_minimize_escape_exit_code_two(tmp_path, capsys):
    code, _, err = run(
        capsys,
        "minimize",
        "--n", "2", "--alpha", "1", "--omega", "1",
        "--harmonics", "4", "--grid", "16", "--seed", "0",
        "--out", str(tmp_path / "esc"),
    )
    assert code == 2
    assert "non-attainment" in err


def test_minimize_orbit_schema_round_trips(tmp_path, capsys):
    out = tmp_path / "run"
    run(
        capsys,
        "minimize",
        "--n", "3", "--omega", "0", "--seed", "1",
        "--harmonics", "4", "--out", str(out),
    )
    from choreo.loops import loop_from_json

    loop, params = loop_from_json(json.loads((out / "orbit.json").read_text()))
    assert params.n == 3
    assert loop.cutoff == 4


# ---------------------------------------------------------------------------
# verify


def test_verify_inequalities_suite_passes(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "inequalities", "--seeds", "40")
    assert code == 0
    assert "[PASS] inequalities/poincare" in out
    assert "jensen" in out
    assert "trig" in out


def test_verify_routing(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "chain", "--seeds", "24")
    assert code == 0
    assert "spectral/" not in out
    assert "chain/" in out


def test_verify_injected_fault_names_invariant(monkeypatch, capsys):
    # harness contract: corrupting delta_1 must fail with the invariant named
    import choreo.spectral as spectral
    import choreo.verify as verify

    true_spectrum = spectral.circulant_spectrum

    def corrupted(n, alpha, k=1, cross_validate=True):
        spec = true_spectrum(n, alpha, k=k, cross_validate=False)
        deltas = spec.deltas.copy()
        deltas[1] *= 1.5  # flip delta_1 away from 1/(2 pi)
        object.__setattr__(spec, "deltas", deltas)
        return spec

    monkeypatch.setattr(spectral, "circulant_spectrum", corrupted)
    code = cli.main(["verify", "--suite", "spectral"])
    out = capsys.readouterr()
    assert code == 1
    assert "delta1_value" in out.out
    assert "delta1_value" in out.err or "failed" in out.err


def test_verify_report_file(tmp_path, capsys):
    report = tmp_path / "report.json"
    code, _, _ = run(
        capsys, "verify", "--suite", "inequalities", "--seeds", "24",
        "--out", str(report),
    )
    assert code == 0
    doc = json.loads(report.read_text())
    assert doc["passed"] is True
    assert all(c["passed"] for c in doc["checks"])


# ---------------------------------------------------------------------------
# mountain pass


def test_mpa_config_runs_and_writes(tmp_path, capsys):
    config = {
        "n": 3,
        "alpha": 1.0,
        "omega": 1.5,
        "harmonics": 12,
        "nodes": 15,
        "max_sweeps": 300,
        "saddle_tol": 1e-6,
        "endpoints": [{"winding": -1}, {"winding": -2}],
        "bulge": {"amplitude": 0.35, "winding": 1, "shift": math.pi / 2},
        "out": str(tmp_path / "mpa"),
        "svg": True,
    }
    path = tmp_path / "mpa.json"
    path.write_text(json.dumps(config))
    code, _, _ = run(capsys, "mpa", "--config", str(path))
    assert code == 0
    doc = json.loads((tmp_path / "mpa" / "saddle.json").read_text())
    assert doc["result"]["converged"] is True
    assert doc["result"]["above_endpoints"] is True
    assert (tmp_path / "mpa" / "path.json").exists()
    assert (tmp_path / "mpa" / "saddle.svg").exists()


def test_mpa_rejects_unknown_fields(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 3, "endpoints": [], "bogus": 1}))
    code, _, err = run(capsys, "mpa", "--config", str(path))
    assert code == 1
    assert "bogus" in err


def test_mpa_requires_two_endpoints(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 3, "endpoints": [{"winding": -1}]}))
    code, _, _ = run(capsys, "mpa", "--config", str(path))
    assert code == 1
