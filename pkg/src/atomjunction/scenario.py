"""Scenario files: schema, validation and construction of model objects.

A scenario is one JSON document. Field names carry their units
(``_um``, ``_ms``, ``_pw``, ``_mt``, ``_hz``, ...); conversion to the
internal units happens only here.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .cloud import CloudState
from .detector import DetectorModel
from .optics import DETECTION_CHAIN, FIBRE_CHAIN, BeamMode, PowerBudget, TrenchGeometry
from .pumping import PumpingModel, TwoLevelModel, default_pumping_model, polarization_fractions

__all__ = [
    "KINDS",
    "ScenarioError",
    "load_config",
    "validate_config",
    "validate_file",
    "bundled_scenarios",
    "bundled_path",
    "resolve_config_path",
    "Scenario",
]


class ScenarioError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class F:
    """Schema entry: expected kind, default, extra check returning an error string."""

    kind: str  # "float", "int", "bool", "str", "vec3", "floats", "stages", "grid", "refs"
    default: Any = None
    check: Callable[[Any], str | None] | None = None
    required: bool = False


def _ge(lo):
    return lambda v: None if v >= lo else f"must be >= {lo}"


def _gt(lo):
    return lambda v: None if v > lo else f"must be > {lo}"


def _unit(v):
    return None if 0.0 <= v <= 1.0 else "must lie in [0, 1]"


def _unit_open(v):
    return None if 0.0 < v <= 1.0 else "must lie in (0, 1]"


def _one_of(*opts):
    return lambda v: None if v in opts else f"must be one of {', '.join(opts)}"


SECTIONS: dict[str, dict[str, F]] = {
    "cloud": {
        "rho_peak_per_um3": F("float", 1e-2, _ge(0)),
        "center0_um": F("vec3", [0.0, 0.0, -3000.0]),
        "v_launch_um_per_ms": F("float", 400.0, _gt(0)),
        "temperature_k": F("float", 1e-4, _gt(0)),
        "sigma0_um": F("float", 300.0, _gt(0)),
    },
    "beam": {
        "w0_um": F("float", 2.2, _gt(0)),
        "wavelength_um": F("float", 0.780, _gt(0)),
        "power_in_trench_pw": F("float", 0.0, _ge(0)),
        "helicity_plus_fraction": F("float", 0.5, _unit),
    },
    "trench": {
        "length_um": F("float", 16.0, _gt(0)),
        "depth_um": F("float", 22.0, _gt(0)),
        "pitch_um": F("float", 10.0, _gt(0)),
        "n_guides": F("int", 12, _ge(1)),
    },
    "detector": {
        "quantum_efficiency": F("float", 0.5, _unit_open),
        "dead_time_ns": F("float", 32.0, _ge(0)),
        "background_rate_hz": F("float", 130.0, _ge(0)),
        "attenuation": F("float", 1.0, _unit_open),
    },
    "pumping": {
        "model": F("str", "ensemble", _one_of("ensemble", "fixed")),
        "isat_pw_per_um2": F("float", 22.4, _gt(0)),
        "n_polarizations": F("int", 64, _ge(1)),
    },
    "budget": {
        "stages": F("stages", None),
        "detection_stages": F("stages", None),
        "crossing_start": F("str", "trench_exit_face"),
        "crossing_stop": F("str", "mode_overlap"),
    },
    "timeseries": {
        "detected_power_pw": F("float", 5.0, _ge(0)),
        "power_ratio": F("float", 6.0, _gt(0)),
        "t_start_ms": F("float", 0.0, _ge(0)),
        "t_stop_ms": F("float", 15.0, _gt(0)),
        "n_times": F("int", 1501, _ge(2)),
        "junction_peak_density_per_um3": F("float", None, _ge(0)),
    },
    "saturation": {
        "rho_per_um3": F("float", 8e-3, _ge(0)),
        "power_ratio": F("float", 6.0, _gt(0)),
        "detected_powers_pw": F("grid", {"min": 0.1, "max": 1000.0, "num": 17, "spacing": "log"}),
        "n_shots": F("int", 100, _ge(1)),
        "window_ms": F("float", 2.0, _gt(0)),
    },
    "zeeman": {
        "b_mt": F("float", 0.78, _ge(0)),
        "sigma_plus_fraction": F("float", 0.5, _unit),
        "normalization": F("float", 1.0, _ge(0)),
        "detuning_mhz": F("grid", {"min": -25.0, "max": 25.0, "num": 51, "spacing": "linear"}),
    },
    "fluorescence": {
        "rho_per_um3": F("float", 1e-2, _ge(0)),
        "scattering_rate_hz": F("float", 1.9e7, _ge(0)),
        "eta": F("float", 1 / 12, _unit_open),
    },
    "fit": {
        "data_csv": F("str", None),
        "weighted": F("bool", True),
        "fixed_ratio": F("float", None, _gt(0)),
        "noise_sigma": F("float", 1e-3, _gt(0)),
        "initial_fraction": F("float", 0.5, _unit),
    },
    "counts": {
        "photon_rate_hz": F("float", None, _ge(0)),
        "detected_power_pw": F("float", None, _ge(0)),
        "window_ms": F("float", 2.0, _gt(0)),
        "n_windows": F("int", 1000, _ge(1)),
        "smooth_bins": F("int", 1, _ge(1)),
        "write_trace": F("bool", False),
    },
}

KINDS: dict[str, tuple[str, ...]] = {
    "absorption_timeseries": ("cloud", "beam", "trench", "pumping", "timeseries"),
    "saturation_curve": ("beam", "trench", "pumping", "detector", "saturation"),
    "zeeman_spectrum": ("zeeman",),
    "fluorescence": ("beam", "trench", "fluorescence"),
    "budget": ("budget",),
    "fit_saturation": ("beam", "trench", "pumping", "detector", "saturation", "fit"),
    "fit_zeeman": ("zeeman", "fit"),
    "counts_sim": ("detector", "counts"),
}

TOP_LEVEL = {"kind", "seed", "description", "references"} | set(SECTIONS)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_value(path: str, spec: F, v, out: list[str]):
    k = spec.kind
    if v is None:
        if spec.default is None and not spec.required:
            return
        out.append(f"{path}: must not be null")
        return
    if k == "float":
        if not _is_number(v):
            out.append(f"{path}: expected a number")
            return
    elif k == "int":
        if not (isinstance(v, int) and not isinstance(v, bool)):
            out.append(f"{path}: expected an integer")
            return
    elif k == "bool":
        if not isinstance(v, bool):
            out.append(f"{path}: expected true or false")
        return
    elif k == "str":
        if not isinstance(v, str):
            out.append(f"{path}: expected a string")
            return
    elif k == "vec3":
        if not (isinstance(v, list) and len(v) == 3 and all(_is_number(x) for x in v)):
            out.append(f"{path}: expected a list of three numbers")
        return
    elif k == "stages":
        if not isinstance(v, list) or not v:
            out.append(f"{path}: expected a non-empty list of [name, factor] pairs")
            return
        names = set()
        for i, st in enumerate(v):
            if not (isinstance(st, list) and len(st) == 2 and isinstance(st[0], str) and _is_number(st[1])):
                out.append(f"{path}[{i}]: expected [name, factor]")
                continue
            if st[0] in names:
                out.append(f"{path}[{i}]: duplicate stage {st[0]!r}")
            names.add(st[0])
            if not 0.0 < st[1] <= 1.0:
                out.append(f"{path}[{i}]: factor for {st[0]!r} must lie in (0, 1]")
        return
    elif k == "grid":
        if isinstance(v, list):
            if not v or not all(_is_number(x) for x in v):
                out.append(f"{path}: expected a non-empty list of numbers")
            return
        if not isinstance(v, dict):
            out.append(f"{path}: expected a list or a {{min, max, num, spacing}} object")
            return
        extra = set(v) - {"min", "max", "num", "spacing"}
        for key in sorted(extra):
            out.append(f"{path}.{key}: unknown key")
        for key in ("min", "max"):
            if not _is_number(v.get(key)):
                out.append(f"{path}.{key}: expected a number")
        num = v.get("num")
        if not (isinstance(num, int) and not isinstance(num, bool) and num >= 1):
            out.append(f"{path}.num: expected an integer >= 1")
        spacing = v.get("spacing", "linear")
        if spacing not in ("linear", "log"):
            out.append(f"{path}.spacing: must be linear or log")
        elif spacing == "log" and _is_number(v.get("min")) and v["min"] <= 0:
            out.append(f"{path}.min: must be > 0 for log spacing")
        return
    if spec.check is not None:
        msg = spec.check(v)
        if msg:
            out.append(f"{path}: {msg}")


def validate_config(cfg) -> list[str]:
    """Every schema and invariant violation in a parsed scenario, as ``path: message`` strings."""
    out: list[str] = []
    if not isinstance(cfg, dict):
        return ["<root>: expected a JSON object"]
    for key in sorted(set(cfg) - TOP_LEVEL):
        out.append(f"{key}: unknown key")
    kind = cfg.get("kind")
    if kind is None:
        out.append("kind: required")
    elif kind not in KINDS:
        out.append(f"kind: must be one of {', '.join(KINDS)}")
    seed = cfg.get("seed", 0)
    if not (isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0):
        out.append("seed: expected a non-negative integer")
    if "description" in cfg and not isinstance(cfg["description"], str):
        out.append("description: expected a string")
    refs = cfg.get("references", {})
    if not isinstance(refs, dict):
        out.append("references: expected an object")
    else:
        for name, ref in refs.items():
            if not (isinstance(ref, dict) and _is_number(ref.get("value"))):
                out.append(f"references.{name}: expected an object with a numeric value")
                continue
            for key in sorted(set(ref) - {"value", "tolerance", "source"}):
                out.append(f"references.{name}.{key}: unknown key")
            if "tolerance" in ref and not (_is_number(ref["tolerance"]) and ref["tolerance"] >= 0):
                out.append(f"references.{name}.tolerance: expected a non-negative number")
    allowed = KINDS.get(kind, tuple(SECTIONS))
    for section in SECTIONS:
        if section not in cfg:
            continue
        body = cfg[section]
        if kind in KINDS and section not in allowed:
            out.append(f"{section}: not used by kind {kind!r}")
            continue
        if not isinstance(body, dict):
            out.append(f"{section}: expected an object")
            continue
        schema = SECTIONS[section]
        for key in sorted(set(body) - set(schema)):
            out.append(f"{section}.{key}: unknown key")
        for key, spec in schema.items():
            if key in body:
                _check_value(f"{section}.{key}", spec, body[key], out)
    if kind == "absorption_timeseries" and isinstance(cfg.get("timeseries"), dict):
        ts = cfg["timeseries"]
        lo, hi = ts.get("t_start_ms", 0.0), ts.get("t_stop_ms", 15.0)
        if _is_number(lo) and _is_number(hi) and hi <= lo:
            out.append("timeseries.t_stop_ms: must exceed t_start_ms")
    if kind == "counts_sim" and isinstance(cfg.get("counts"), dict):
        c = cfg["counts"]
        if (c.get("photon_rate_hz") is None) == (c.get("detected_power_pw") is None):
            out.append("counts: give exactly one of photon_rate_hz, detected_power_pw")
    if kind == "budget" and isinstance(cfg.get("budget"), dict):
        b = cfg["budget"]
        stages = b.get("stages")
        if isinstance(stages, list) and all(isinstance(st, list) and st for st in stages):
            names = [st[0] for st in stages]
            for key in ("crossing_start", "crossing_stop"):
                name = b.get(key, SECTIONS["budget"][key].default)
                if isinstance(name, str) and name not in names:
                    out.append(f"budget.{key}: stage {name!r} not in budget.stages")
    return out


def load_config(path) -> dict:
    """Parse a scenario file; raises OSError if unreadable, ScenarioError if malformed JSON."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"<json>: {exc.msg} at line {exc.lineno} column {exc.colno}"]) from None


def validate_file(path) -> list[str]:
    try:
        cfg = load_config(path)
    except ScenarioError as exc:
        return exc.violations
    return validate_config(cfg)


def bundled_scenarios() -> list[str]:
    root = resources.files("atomjunction").joinpath("scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("atomjunction").joinpath("scenarios", f"{name}.json")))


def resolve_config_path(arg: str) -> Path:
    """A file path, or the name of a bundled scenario."""
    p = Path(arg)
    if p.exists():
        return p
    name = arg[:-4] if arg.endswith(".cfg") else arg[:-5] if arg.endswith(".json") else arg
    if name in bundled_scenarios():
        return bundled_path(name)
    return p


def _grid(spec) -> np.ndarray:
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    if spec.get("spacing", "linear") == "log":
        return np.logspace(math.log10(spec["min"]), math.log10(spec["max"]), spec["num"])
    return np.linspace(spec["min"], spec["max"], spec["num"])


class Scenario:
    """A validated scenario with defaults filled in and model objects on demand."""

    def __init__(self, cfg: dict, seed: int | None = None):
        problems = validate_config(cfg)
        if problems:
            raise ScenarioError(problems)
        self.raw = cfg
        self.kind: str = cfg["kind"]
        self.seed: int = cfg.get("seed", 0) if seed is None else seed
        self.description: str = cfg.get("description", "")
        self.references: dict = cfg.get("references", {})
        self.origin: Path | None = None

    @classmethod
    def from_file(cls, path, seed: int | None = None) -> "Scenario":
        sc = cls(load_config(path), seed)
        sc.origin = Path(path)
        return sc

    def section(self, name: str) -> dict:
        body = self.raw.get(name, {})
        return {k: body.get(k, spec.default) for k, spec in SECTIONS[name].items()}

    def cloud(self) -> CloudState:
        c = self.section("cloud")
        return CloudState(c["rho_peak_per_um3"], tuple(c["center0_um"]), c["v_launch_um_per_ms"], c["temperature_k"], c["sigma0_um"])

    def beam(self) -> BeamMode:
        b = self.section("beam")
        return BeamMode(b["w0_um"], b["wavelength_um"], b["power_in_trench_pw"], b["helicity_plus_fraction"])

    def trench(self) -> TrenchGeometry:
        t = self.section("trench")
        return TrenchGeometry(t["length_um"], t["depth_um"], t["pitch_um"], t["n_guides"])

    def detector(self) -> DetectorModel:
        d = self.section("detector")
        return DetectorModel(d["quantum_efficiency"], d["dead_time_ns"] * 1e-9, d["background_rate_hz"], d["attenuation"])

    def pumping_model(self) -> PumpingModel | TwoLevelModel:
        p = self.section("pumping")
        if p["model"] == "fixed":
            return TwoLevelModel(p["isat_pw_per_um2"])
        if p["n_polarizations"] == 64:
            return default_pumping_model()
        return PumpingModel(polarization_fractions(p["n_polarizations"]))

    def budgets(self) -> tuple[PowerBudget, PowerBudget]:
        b = self.section("budget")
        full = FIBRE_CHAIN if b["stages"] is None else PowerBudget(tuple(map(tuple, b["stages"])))
        det = DETECTION_CHAIN if b["detection_stages"] is None else PowerBudget(tuple(map(tuple, b["detection_stages"])))
        return full, det

    def grid(self, section: str, key: str) -> np.ndarray:
        return _grid(self.section(section)[key])
