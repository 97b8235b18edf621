"""Command-line scenario runner.

    atomjunction run --config fig2a --out results/
    atomjunction validate --config my.json
    atomjunction list-scenarios

Each run writes one CSV per curve and ``report.txt`` of ``key = value``
lines. Scalars with a published counterpart are followed by a comment
naming it and a ``<key>_check = pass|fail`` line. Failures exit nonzero
and print a JSON error record on stderr (also saved as ``error.json``).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__
from .cloud import CloudState, atoms_in_mode, mean_density_in_junction, junction_nodes
from .detector import (
    absorbed_fraction_sigma,
    count_variance,
    detection_rate,
    lost_fraction,
    measured_rate,
    photon_flux,
    records_from_counts,
    simulate_count_array,
    smooth,
)
from .fitting import FitError, fit_saturation, fit_zeeman, format_fit_report
from .optics import beam_radius, budget_product, illuminated_volume, mode_overlap, trench_to_detector_ratio
from .scenario import ScenarioError, Scenario, bundled_path, bundled_scenarios, resolve_config_path, validate_file
from .signals import (
    SaturationCurvePoint,
    ZeemanScenario,
    absorption_timeseries,
    dominant_line,
    fluorescence_rate,
    half_absorption_power,
    saturation_fractions,
    spectrum_peak,
    weak_absorption_coefficient,
    zeeman_spectrum,
)
from .synthetic import saturation_data, saturation_sigmas, zeeman_data

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_FIT = 3


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


class Report:
    def __init__(self, references: dict):
        self.references = references
        self.lines: list[str] = []
        self.values: dict[str, object] = {}

    def comment(self, text: str):
        self.lines.append(f"# {text}")

    def add(self, key: str, value):
        self.values[key] = value
        self.lines.append(f"{key} = {_fmt(value)}")
        ref = self.references.get(key)
        if ref is None:
            return
        tol = ref.get("tolerance")
        src = ref.get("source", "")
        tol_txt = f" +- {_fmt(tol)}" if tol is not None else ""
        self.lines.append(f"# reference {key} = {_fmt(ref['value'])}{tol_txt}" + (f" ({src})" if src else ""))
        if tol is not None and isinstance(value, (int, float, np.floating)):
            ok = abs(float(value) - ref["value"]) <= tol
            self.lines.append(f"{key}_check = {'pass' if ok else 'fail'}")

    def extend(self, lines):
        for line in lines:
            key, _, value = line.partition(" = ")
            try:
                num = float(value)
            except ValueError:
                self.lines.append(line)
                continue
            self.add(key, num)

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def _resolve_data_path(sc: Scenario, name: str) -> Path:
    p = Path(name)
    if not p.is_absolute() and sc.origin is not None:
        p = sc.origin.parent / p
    return p


def _read_columns(path: Path, columns) -> list[np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    missing = [c for c in columns if rows and c not in rows[0]]
    if not rows or missing:
        raise ScenarioError([f"fit.data_csv: {path} needs columns {', '.join(columns)}"])
    return [np.array([float(r[c]) for r in rows]) for c in columns]


# --- kinds ---------------------------------------------------------------


def _run_absorption_timeseries(sc: Scenario, out: Path, rep: Report):
    ts = sc.section("timeseries")
    cloud, mode, geom = sc.cloud(), sc.beam(), sc.trench()
    model = sc.pumping_model()
    nodes = junction_nodes(mode, geom)
    target = ts["junction_peak_density_per_um3"]
    if target is not None and cloud.rho_peak > 0:
        # rescale the cloud so the density seen by the beam peaks at the target
        t_arr = cloud.arrival_time()
        res = minimize_scalar(
            lambda t: -mean_density_in_junction(t, cloud, geom, mode, nodes=nodes),
            bounds=(max(0.0, t_arr - 2.0), t_arr + 2.0),
            method="bounded",
            options={"xatol": 1e-9},
        )
        peak = -res.fun
        cloud = CloudState(cloud.rho_peak * target / peak, cloud.center0, cloud.v_launch, cloud.temperature, cloud.sigma0)
    times = np.linspace(ts["t_start_ms"], ts["t_stop_ms"], ts["n_times"])
    tr = absorption_timeseries(times, cloud, ts["detected_power_pw"], ts["power_ratio"], mode, geom, model)
    _write_csv(
        out / "timeseries.csv",
        ("time_ms", "density_per_um3", "absorbed_fraction", "transmitted_pw"),
        zip(tr.times, tr.density, tr.absorbed, tr.transmitted),
    )
    peak_rho = float(tr.density.max())
    rep.add("cloud_rho_peak_per_um3", cloud.rho_peak)
    rep.add("cloud_atom_number", cloud.atom_number)
    rep.add("peak_junction_density_per_um3", peak_rho)
    rep.add("dip_depth", tr.dip_depth)
    rep.add("dip_time_ms", tr.dip_time if tr.dip_depth > 0 else math.nan)
    rep.add("dip_fwhm_ms", tr.dip_fwhm() if tr.dip_depth > 0 else math.nan)
    rep.add("illuminated_volume_um3", illuminated_volume(mode, geom))
    rep.add("atoms_in_mode", atoms_in_mode(peak_rho, mode, geom))
    rep.add("trench_power_pw", ts["detected_power_pw"] * ts["power_ratio"])


def _run_saturation_curve(sc: Scenario, out: Path, rep: Report):
    s = sc.section("saturation")
    mode, geom, det = sc.beam(), sc.trench(), sc.detector()
    model = sc.pumping_model()
    p = sc.grid("saturation", "detected_powers_pw")
    f = saturation_fractions(p, s["rho_per_um3"], s["power_ratio"], model, mode, geom)
    sig = saturation_sigmas(p, f, det, s["window_ms"] * 1e-3, s["n_shots"])
    _write_csv(out / "saturation.csv", ("detected_power_pw", "absorbed_fraction", "sigma_f"), zip(p, f, sig))
    f0 = saturation_fractions([0.0], s["rho_per_um3"], s["power_ratio"], model, mode, geom)[0]
    rep.add("weak_absorbed_fraction", f0)
    rep.add("isat_effective_pw_per_um2", model.isat())
    rep.add("half_absorption_power_pw", half_absorption_power(s["rho_per_um3"], s["power_ratio"], model, mode=mode, geometry=geom))


def _saturation_points(sc: Scenario) -> list[SaturationCurvePoint]:
    fit = sc.section("fit")
    if fit["data_csv"] is not None:
        p, f, s = _read_columns(_resolve_data_path(sc, fit["data_csv"]), ("detected_power_pw", "absorbed_fraction", "sigma_f"))
        return [SaturationCurvePoint(*map(float, row)) for row in zip(p, f, s)]
    s = sc.section("saturation")
    return saturation_data(
        s["rho_per_um3"],
        s["power_ratio"],
        seed=sc.seed,
        detected_powers=sc.grid("saturation", "detected_powers_pw"),
        n_shots=s["n_shots"],
        window=s["window_ms"] * 1e-3,
        detector=sc.detector(),
        pumping_model=sc.pumping_model(),
        mode=sc.beam(),
        geometry=sc.trench(),
    )


def _run_fit_saturation(sc: Scenario, out: Path, rep: Report):
    fit = sc.section("fit")
    mode, geom, model = sc.beam(), sc.trench(), sc.pumping_model()
    pts = _saturation_points(sc)
    _write_csv(
        out / "data.csv",
        ("detected_power_pw", "absorbed_fraction", "sigma_f"),
        ((pt.detected_power, pt.absorbed_fraction, pt.sigma_f) for pt in pts),
    )
    res = fit_saturation(pts, model, mode, geom, fixed_ratio=fit["fixed_ratio"], weighted=fit["weighted"])
    ratio = res.params.get("power_ratio", fit["fixed_ratio"])
    p = np.array([pt.detected_power for pt in pts])
    grid = np.logspace(math.log10(p.min()), math.log10(p.max()), 121)
    _write_csv(out / "fit.csv", ("detected_power_pw", "absorbed_fraction"), zip(grid, saturation_fractions(grid, res.params["rho"], ratio, model, mode, geom)))
    if fit["data_csv"] is None:
        s = sc.section("saturation")
        rep.add("true_rho", s["rho_per_um3"])
        rep.add("true_power_ratio", s["power_ratio"])
    rep.extend(format_fit_report(res))
    rep.add("reduced_chi2", res.reduced_chi2)
    if fit["data_csv"] is None and "power_ratio" in res.params:
        s = sc.section("saturation")
        rep.add("ratio_within_1sigma", abs(res.params["power_ratio"] - s["power_ratio"]) <= res.sigmas["power_ratio"])


def _run_zeeman_spectrum(sc: Scenario, out: Path, rep: Report):
    z = sc.section("zeeman")
    d = sc.grid("zeeman", "detuning_mhz")
    scen = ZeemanScenario(z["b_mt"] * 1e-3, z["sigma_plus_fraction"], z["normalization"], d)
    _write_csv(out / "zeeman.csv", ("detuning_mhz", "absorption"), zip(d, zeeman_spectrum(scen)))
    rep.add("dominant_line_mhz", dominant_line(scen))
    rep.add("spectrum_peak_mhz", spectrum_peak(scen))


def _run_fit_zeeman(sc: Scenario, out: Path, rep: Report):
    z, fit = sc.section("zeeman"), sc.section("fit")
    b = z["b_mt"] * 1e-3
    if fit["data_csv"] is not None:
        d, a, s = _read_columns(_resolve_data_path(sc, fit["data_csv"]), ("detuning_mhz", "absorption", "sigma"))
    else:
        d, a, s = zeeman_data(b, z["sigma_plus_fraction"], z["normalization"], sc.seed, sc.grid("zeeman", "detuning_mhz"), fit["noise_sigma"])
    _write_csv(out / "data.csv", ("detuning_mhz", "absorption", "sigma"), zip(d, a, s))
    res = fit_zeeman(d, a, s, b, fit["initial_fraction"], fit["weighted"])
    fitted = ZeemanScenario(b, res.params["sigma_plus_fraction"], res.params["normalization"], d)
    fine = np.linspace(d.min(), d.max(), 10 * (d.size - 1) + 1)
    _write_csv(out / "fit.csv", ("detuning_mhz", "absorption"), zip(fine, zeeman_spectrum(fitted, fine)))
    if fit["data_csv"] is None:
        rep.add("true_sigma_plus_fraction", z["sigma_plus_fraction"])
    rep.extend(format_fit_report(res))
    rep.add("sigma_minus_fraction", 1.0 - res.params["sigma_plus_fraction"])
    rep.add("reduced_chi2", res.reduced_chi2)
    rep.add("dominant_line_mhz", dominant_line(fitted))
    rep.add("spectrum_peak_mhz", spectrum_peak(fitted))


def _run_fluorescence(sc: Scenario, out: Path, rep: Report):
    fl, mode, geom = sc.section("fluorescence"), sc.beam(), sc.trench()
    rate = fluorescence_rate(fl["rho_per_um3"], fl["scattering_rate_hz"], mode.w0, geom.length, fl["eta"])
    rep.add("fluorescence_rate_hz", rate)
    rep.add("atoms_in_mode", atoms_in_mode(fl["rho_per_um3"], mode, geom))


def _run_budget(sc: Scenario, out: Path, rep: Report):
    full, det = sc.budgets()
    b = sc.section("budget")
    for name, budget in (("budget.csv", full), ("detection_budget.csv", det)):
        cum = np.cumprod([f for _, f in budget.stages])
        _write_csv(out / name, ("stage", "factor", "cumulative"), ((n, f, c) for (n, f), c in zip(budget.stages, cum)))
    rep.add("end_to_end", full.total())
    rep.add("trench_crossing", budget_product(full, b["crossing_start"], b["crossing_stop"]))
    rep.add("trench_to_detector_ratio", trench_to_detector_ratio(det))
    rep.add("beam_radius_at_16um", float(beam_radius(16.0)))
    rep.add("mode_overlap_16um", mode_overlap(2.2, 2.2, 16.0, 0.78))
    rep.add("weak_absorption_coefficient_um3", weak_absorption_coefficient())


def _run_counts_sim(sc: Scenario, out: Path, rep: Report):
    c, model = sc.section("counts"), sc.detector()
    window = c["window_ms"] * 1e-3
    photon_rate = c["photon_rate_hz"] if c["photon_rate_hz"] is not None else float(photon_flux(c["detected_power_pw"]))
    counts = simulate_count_array(lambda t: np.full_like(t, photon_rate), c["n_windows"], window, model, sc.seed)
    values, freq = np.unique(counts, return_counts=True)
    _write_csv(out / "count_histogram.csv", ("counts", "n_windows"), zip(values.tolist(), freq.tolist()))
    if c["write_trace"]:
        recs = records_from_counts(counts, window, model)
        sm = smooth([r.corrected_rate for r in recs], c["smooth_bins"])
        _write_csv(
            out / "counts.csv",
            ("time_ms", "counts", "corrected_rate_hz", "sigma_hz", "smoothed_rate_hz"),
            ((r.time * 1e3, r.counts, r.corrected_rate, r.sigma, s) for r, s in zip(recs, sm)),
        )
    x = counts.astype(float)
    mean = float(x.mean())
    dev2 = (x - mean) ** 2
    var = float(dev2.sum() / (x.size - 1)) if x.size > 1 else math.nan
    se = float(dev2.std() / math.sqrt(x.size)) if x.size > 1 else math.nan
    n = float(detection_rate(photon_rate, model))
    analytic = float(count_variance(n, window, model.dead_time))
    m = float(measured_rate(photon_rate, model))
    rep.add("event_rate_hz", n)
    rep.add("measured_rate_hz", m)
    rep.add("mean_counts", mean)
    rep.add("analytic_mean_counts", m * window)
    rep.add("count_variance", var)
    rep.add("analytic_count_variance", analytic)
    rep.add("variance_standard_error", se)
    rep.add("variance_z", (var - analytic) / se if se > 0 else math.nan)
    rep.add("lost_fraction", lost_fraction(m, model))
    rep.add("lost_fraction_at_1.5e7", lost_fraction(1.5e7, model))
    rep.add("shot_sigma_absorbed_fraction", float(absorbed_fraction_sigma(m, window, 1, model)))


RUNNERS = {
    "absorption_timeseries": _run_absorption_timeseries,
    "saturation_curve": _run_saturation_curve,
    "zeeman_spectrum": _run_zeeman_spectrum,
    "fit_saturation": _run_fit_saturation,
    "fit_zeeman": _run_fit_zeeman,
    "fluorescence": _run_fluorescence,
    "budget": _run_budget,
    "counts_sim": _run_counts_sim,
}


def run_scenario(config_path, out_dir, seed: int | None = None) -> Report:
    """Run one scenario file; raises ScenarioError, FitError or OSError."""
    path = Path(config_path)
    sc = Scenario.from_file(path, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep = Report(sc.references)
    rep.comment(f"atomjunction {__version__}")
    rep.add("scenario", path.stem)
    rep.add("kind", sc.kind)
    rep.add("seed", sc.seed)
    if sc.description:
        rep.comment(sc.description)
    RUNNERS[sc.kind](sc, out, rep)
    (out / "report.txt").write_text(rep.text())
    return rep


def _error(kind: str, message: str, out_dir=None, violations=None, code=EXIT_ERROR) -> int:
    rec = {"status": "error", "error": kind, "message": message}
    if violations is not None:
        rec["violations"] = violations
    text = json.dumps(rec, sort_keys=True)
    print(text, file=sys.stderr)
    if out_dir is not None:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "error.json").write_text(text + "\n")
        except OSError:
            pass
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="atomjunction", description="Simulate and fit cold atoms crossing a waveguide trench.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario and write CSV curves plus report.txt")
    r.add_argument("--config", required=True, metavar="PATH", help="scenario JSON file or bundled scenario name")
    r.add_argument("--out", required=True, metavar="DIR", help="output directory")
    r.add_argument("--seed", type=int, default=None, metavar="N", help="override the scenario seed")
    r.add_argument("--quiet", action="store_true", help="do not echo the report")
    v = sub.add_parser("validate", help="check a scenario without running it")
    v.add_argument("--config", required=True, metavar="PATH")
    v.add_argument("--quiet", action="store_true")
    ls = sub.add_parser("list-scenarios", help="list bundled scenarios")
    ls.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name in bundled_scenarios():
            desc = json.loads(bundled_path(name).read_text()).get("description", "")
            print(name if args.quiet else f"{name:14s} {desc}")
        return EXIT_OK

    path = resolve_config_path(args.config)
    if args.command == "validate":
        try:
            problems = validate_file(path)
        except OSError as exc:
            return _error("io", f"cannot read {path}: {exc.strerror or exc}")
        if not args.quiet:
            for p in problems:
                print(p)
            if not problems:
                print(f"{path}: ok")
        if problems:
            return _error("validation", f"{len(problems)} violation(s)", violations=problems, code=EXIT_INVALID)
        return EXIT_OK

    if args.seed is not None and args.seed < 0:
        return _error("validation", "--seed must be non-negative", args.out, ["seed: expected a non-negative integer"], EXIT_INVALID)
    try:
        rep = run_scenario(path, args.out, args.seed)
    except ScenarioError as exc:
        return _error("validation", str(exc), args.out, exc.violations, EXIT_INVALID)
    except FitError as exc:
        return _error(type(exc).__name__, str(exc), args.out, code=EXIT_FIT)
    except OSError as exc:
        return _error("io", f"{exc.filename or path}: {exc.strerror or exc}", args.out)
    if not args.quiet:
        sys.stdout.write(rep.text())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
