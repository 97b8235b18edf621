import json
import subprocess
import sys

import pytest

from atomjunction.cli import EXIT_FIT, EXIT_INVALID, main
from atomjunction.scenario import bundled_path, bundled_scenarios, validate_config, validate_file

BUNDLED = ["budget", "deadtime_mc", "fig2a", "fig2b", "fig3_ximinus", "fig3_xiplus", "fig4"]


def _write(tmp_path, cfg, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def _report(out):
    vals = {}
    for line in (out / "report.txt").read_text().splitlines():
        if line.startswith("#") or " = " not in line:
            continue
        k, v = line.split(" = ", 1)
        vals[k] = v
    return vals


def test_bundled_list():
    assert bundled_scenarios() == BUNDLED


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenarios_validate(name):
    assert validate_file(bundled_path(name)) == []


def test_negative_dead_time_names_the_field():
    problems = validate_config({"kind": "counts_sim", "detector": {"dead_time_ns": -1.0}, "counts": {"photon_rate_hz": 1e5}})
    assert problems == ["detector.dead_time_ns: must be >= 0"]


def test_helicity_out_of_range():
    problems = validate_config({"kind": "fluorescence", "beam": {"helicity_plus_fraction": 1.2}})
    assert len(problems) == 1 and problems[0].startswith("beam.helicity_plus_fraction")


def test_every_violation_listed():
    cfg = {
        "kind": "absorption_timeseries",
        "bogus": 1,
        "cloud": {"rho_peak_per_um3": -1, "temperature_k": "hot", "extra": 0},
        "timeseries": {"t_start_ms": 5.0, "t_stop_ms": 2.0},
        "zeeman": {},
    }
    problems = validate_config(cfg)
    fields = {p.split(":")[0] for p in problems}
    assert fields == {
        "bogus",
        "cloud.rho_peak_per_um3",
        "cloud.temperature_k",
        "cloud.extra",
        "timeseries.t_stop_ms",
        "zeeman",
    }


def test_missing_and_unknown_kind():
    assert validate_config({}) == ["kind: required"]
    assert validate_config({"kind": "plot"})[0].startswith("kind: must be one of")
    assert validate_config([]) == ["<root>: expected a JSON object"]


def test_grid_and_budget_checks():
    p = validate_config({"kind": "zeeman_spectrum", "zeeman": {"detuning_mhz": {"min": 0, "max": 1, "num": 0, "step": 2}}})
    assert "zeeman.detuning_mhz.step: unknown key" in p
    assert "zeeman.detuning_mhz.num: expected an integer >= 1" in p
    p = validate_config({"kind": "budget", "budget": {"stages": [["a", 0.5], ["a", 1.5]]}})
    assert any("duplicate stage" in x for x in p)
    assert any("must lie in (0, 1]" in x for x in p)
    assert any("crossing_start" in x for x in p)


def test_validate_cli_exit_codes(tmp_path, capsys):
    assert main(["validate", "--config", "fig2a"]) == 0
    bad = _write(tmp_path, {"kind": "fig"})
    assert main(["validate", "--config", str(bad)]) == EXIT_INVALID
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec["error"] == "validation" and rec["violations"]
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == 1


def test_malformed_json(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{ not json")
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o"), "--quiet"]) == EXIT_INVALID
    rec = json.loads((tmp_path / "o" / "error.json").read_text())
    assert rec["violations"][0].startswith("<json>")


def test_run_writes_error_record_on_invalid_config(tmp_path):
    bad = _write(tmp_path, {"kind": "budget", "budget": {"stages": [["a", 2.0]]}})
    out = tmp_path / "out"
    assert main(["run", "--config", str(bad), "--out", str(out), "--quiet"]) == EXIT_INVALID
    rec = json.loads((out / "error.json").read_text())
    assert rec["status"] == "error"
    assert any(v.startswith("budget.stages[0]") for v in rec["violations"])


def test_fit_failure_exit_code(tmp_path):
    cfg = {"kind": "fit_zeeman", "zeeman": {"b_mt": 0.0, "sigma_plus_fraction": 0.3, "normalization": 0.04}}
    out = tmp_path / "out"
    assert main(["run", "--config", str(_write(tmp_path, cfg)), "--out", str(out), "--quiet"]) == EXIT_FIT
    assert json.loads((out / "error.json").read_text())["error"] == "SingularCurvatureError"


def test_budget_report_values(tmp_path):
    out = tmp_path / "b"
    assert main(["run", "--config", "budget", "--out", str(out), "--quiet"]) == 0
    vals = _report(out)
    assert float(vals["end_to_end"]) == pytest.approx(0.0454, abs=1e-4)
    assert vals["end_to_end_check"] == "pass"
    text = (out / "report.txt").read_text()
    assert "# reference end_to_end = 0.05" in text
    assert (out / "budget.csv").read_text().splitlines()[0] == "stage,factor,cumulative"


def test_empty_cloud_gives_flat_trace(tmp_path):
    cfg = {"kind": "absorption_timeseries", "cloud": {"rho_peak_per_um3": 0.0}, "timeseries": {"n_times": 51}}
    out = tmp_path / "e"
    assert main(["run", "--config", str(_write(tmp_path, cfg)), "--out", str(out), "--quiet"]) == 0
    assert float(_report(out)["dip_depth"]) == 0.0
    rows = (out / "timeseries.csv").read_text().splitlines()
    assert rows[0] == "time_ms,density_per_um3,absorbed_fraction,transmitted_pw"
    assert {r.split(",")[2] for r in rows[1:]} == {"0.0"}


SMALL_COUNTS = {
    "kind": "counts_sim",
    "seed": 4,
    "counts": {"photon_rate_hz": 2e6, "window_ms": 0.5, "n_windows": 400, "write_trace": True, "smooth_bins": 5},
}


@pytest.mark.parametrize("config", ["fig2b", "fig3_ximinus", "small_counts"])
def test_reruns_are_byte_identical(tmp_path, config):
    if config == "small_counts":
        config = str(_write(tmp_path, SMALL_COUNTS))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", config, "--out", str(a), "--quiet"]) == 0
    assert main(["run", "--config", config, "--out", str(b), "--quiet"]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_seed_override_changes_data(tmp_path):
    cfg = str(_write(tmp_path, SMALL_COUNTS))
    main(["run", "--config", cfg, "--out", str(tmp_path / "s4"), "--quiet"])
    main(["run", "--config", cfg, "--out", str(tmp_path / "s5"), "--seed", "5", "--quiet"])
    assert _report(tmp_path / "s5")["seed"] == "5"
    assert (tmp_path / "s4" / "counts.csv").read_bytes() != (tmp_path / "s5" / "counts.csv").read_bytes()


def test_fit_from_csv(tmp_path):
    first = tmp_path / "gen"
    main(["run", "--config", "fig3_xiplus", "--out", str(first), "--quiet"])
    cfg = {"kind": "fit_zeeman", "zeeman": {"b_mt": 0.78}, "fit": {"data_csv": "gen/data.csv"}}
    out = tmp_path / "refit"
    assert main(["run", "--config", str(_write(tmp_path, cfg)), "--out", str(out), "--quiet"]) == 0
    assert _report(out)["sigma_plus_fraction"] == _report(first)["sigma_plus_fraction"]


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "atomjunction.cli", "list-scenarios", "--quiet"], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.split() == BUNDLED
