"""Integration tests for the command-line front end.

Each test writes a run config to a temporary directory, runs ``main`` on it
and checks the exit code and the files written.
"""

import json

import pandas as pd
import pytest

from herzkit.cli.commands import main


GAUSSIAN_1D = {"variant": "Gaussian", "center": [0.0], "scale": 1.0}
GAUSSIAN_2D = {"variant": "Gaussian", "center": [0.0, 0.0], "scale": 1.0}


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch, tmp_path):
    """Isolate the run from HERZKIT_ variables and .env files."""
    for key in ("HERZKIT_THREADS", "HERZKIT_LOG_LEVEL"):
        monkeypatch.delenv(key, raising=False)
    monkeypatch.chdir(tmp_path)


def _run(tmp_path, config, *extra):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    out = tmp_path / "out"
    return main(["run", "--config", str(path), "--out", str(out), *extra]), out


def test_norm_command_writes_result(tmp_path):
    """A converging norm exits 0 with norm.json and terms.csv."""
    code, out = _run(tmp_path, {
        "command": "norm",
        "payload": {"function": GAUSSIAN_2D, "herz": {"alpha": 0.0, "p": 2, "q": 2, "n": 2}},
    })

    assert code == 0
    result = json.loads((out / "norm.json").read_text())
    assert result["converged"] is True
    terms = pd.read_csv(out / "terms.csv")
    assert list(terms["k"]) == sorted(terms["k"])


def test_norm_divergence_exit_code(tmp_path):
    """Growing terms towards the origin exit 3."""
    code, out = _run(tmp_path, {
        "command": "norm",
        "payload": {"function": GAUSSIAN_1D, "herz": {"alpha": -2.0, "p": 1, "q": 1, "n": 1}},
    })

    assert code == 3
    assert json.loads((out / "norm.json").read_text())["divergence"] == "low"


def test_check_command(tmp_path):
    """Violated hypotheses exit 1 and are listed in check.json."""
    code, out = _run(tmp_path, {
        "command": "check",
        "payload": {
            "theorem": "Embeddings1",
            "params": {"n": 2, "q": 2, "alpha1": 0.5, "alpha2": 0.0},
        },
    })

    assert code == 1
    report = json.loads((out / "check.json").read_text())
    assert report["ok"] is False
    assert [c["name"] for c in report["violated"]] == ["alpha2+n-1=alpha1+n/q"]


def test_check_command_passes(tmp_path):
    """Satisfied hypotheses exit 0."""
    code, _ = _run(tmp_path, {
        "command": "check",
        "payload": {"theorem": "Embeddings1", "params": {"n": 2, "q": 2, "alpha1": 0.0, "alpha2": 0.0}},
    })

    assert code == 0


def test_missing_config_file(tmp_path):
    """A missing config exits 2."""
    code = main(["run", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path)])

    assert code == 2


def test_invalid_payload(tmp_path, capsys):
    """Invalid payloads exit 2 and name the field."""
    code, _ = _run(tmp_path, {
        "command": "norm",
        "payload": {"function": GAUSSIAN_1D, "kind": "lebesgue", "p": 0.5},
    })

    assert code == 2
    assert "'p'" in capsys.readouterr().err


def test_missing_theorem_parameter(tmp_path):
    """A theorem bundle lacking a symbol exits 2."""
    code, _ = _run(tmp_path, {
        "command": "check",
        "payload": {"theorem": "Embeddings1", "params": {"n": 2, "q": 2, "alpha1": 0.0}},
    })

    assert code == 2


def test_embed_command(tmp_path):
    """A passing experiment exits 0 with its report and ratio tables."""
    code, out = _run(tmp_path, {
        "command": "embed",
        "payload": {
            "theorem": "L1loc",
            "params": {"n": 2, "alpha": 0.0, "p": 2, "q": 2},
            "family": [GAUSSIAN_2D],
        },
    })

    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["pass"] is True
    assert len(pd.read_csv(out / "ratios.csv")) == 1
    assert list(pd.read_csv(out / "scaling.csv").columns) == ["function_index", "dilation", "log2_ratio"]


def test_embed_all_members_errored(tmp_path):
    """A family with no usable member exits 4."""
    code, out = _run(tmp_path, {
        "command": "embed",
        "payload": {
            "theorem": "Embeddings1",
            "params": {"n": 2, "q": 2, "alpha1": 0.0, "alpha2": 0.0, "r": 1},
            "family": [
                {"variant": "SmoothPlateau", "center": [0.0, 0.0], "inner_radius": 1.0, "outer_radius": 1.0},
            ],
        },
    })

    assert code == 4
    assert json.loads((out / "report.json").read_text())["pass"] is False


def test_override_flag_is_watermarked(tmp_path):
    """--override-hypotheses runs failed hypotheses and marks the report."""
    code, out = _run(tmp_path, {
        "command": "embed",
        "payload": {
            "theorem": "Embeddings1",
            "params": {"n": 2, "q": 2, "alpha1": 0.5, "alpha2": 0.0, "r": 1},
            "family": [GAUSSIAN_2D],
        },
    }, "--override-hypotheses")

    report = json.loads((out / "report.json").read_text())
    assert code == 0
    assert report["override"] is True
    assert report["hypothesis"]["ok"] is False


def test_counterexample_command(tmp_path):
    """Case 1 writes its table."""
    code, out = _run(tmp_path, {
        "command": "counterexample",
        "payload": {
            "case": 1,
            "herz": {"alpha": 1.5, "p": 2, "q": 2, "n": 1},
            "eps_list": [0.5, 0.25, 0.125, 0.0625],
        },
    })

    assert code == 0
    table = pd.read_csv(out / "table.csv")
    assert list(table["eps"]) == [0.5, 0.25, 0.125, 0.0625]


def test_counterexample_regime_violation(tmp_path):
    """A counterexample outside its regime exits 1."""
    code, _ = _run(tmp_path, {
        "command": "counterexample",
        "payload": {"case": 1, "herz": {"alpha": 0.5, "p": 2, "q": 2, "n": 1}},
    })

    assert code == 1


def test_report_command(tmp_path):
    """Experiments run inside a report get their own directories."""
    experiment = {
        "theorem": "L1loc",
        "params": {"n": 2, "alpha": 0.0, "p": 2, "q": 2},
        "family": [GAUSSIAN_2D],
    }
    code, out = _run(tmp_path, {"command": "report", "payload": {"experiments": [experiment, experiment]}})

    assert code == 0
    assert (out / "experiment_1" / "report.json").exists()
    constants = pd.read_csv(out / "constants.csv")
    assert list(constants["reports"]) == [2]
    assert len(pd.read_csv(out / "breakdown.csv")) == 2


def test_outputs_do_not_depend_on_threads(tmp_path):
    """Same config and seed: one thread and four threads write identical files."""
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "command": "embed",
        "payload": {
            "theorem": "Embeddings1",
            "params": {"n": 2, "q": 2, "alpha1": 0.0, "alpha2": 0.0, "r": 1},
            "family": [GAUSSIAN_2D],
            "random_members": 3,
            "dilation_levels": [0, 1],
        },
    }))
    outputs = []
    for threads in ("1", "4"):
        out = tmp_path / f"out-{threads}"
        code = main(["run", "--config", str(config), "--out", str(out), "--seed", "5",
                     "--threads", threads])
        assert code == 0
        outputs.append(out)

    single, pooled = outputs
    names = sorted(p.name for p in single.iterdir())
    assert names == sorted(p.name for p in pooled.iterdir())
    for name in names:
        assert (single / name).read_bytes() == (pooled / name).read_bytes()
