"""Command-line scenario runner.

Usage::

    spinorlab run CONFIG [CONFIG ...] [--out DIR] [--format csv,json] [--batch]

A config is an INI file with two sections::

    [scenario]
    kind = collide          # planewave-check | collide | orbit-search |
                            # photon-mode | wavepacket | scales
    out = results/collide   # optional output directory
    formats = csv, json     # optional, default both

    [params]
    half_angle = 0.6283185307179586
    t_end = 10

Every key is checked against the scenario's parameter table; unknown keys
are rejected. Exit codes: 0 success, 1 configuration, 2 numeric
precondition, 3 a check or search did not meet its tolerance, 4 I/O.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import difflib
import json
import math
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import orbits, photon_modes, planewave, scales, semiclassical, wavepacket
from .errors import ConfigError, OutputError, PreconditionError, SpinorLabError

FORMATS = ("csv", "json")
SCHEMA_DIR = Path(__file__).parent / "schemas"


# value parsers: text -> python value, raising ValueError on bad text
def _float(text):
    return float(text)


def _int(text):
    return int(text)


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(conv):
    def parse(text):
        return tuple(conv(part) for part in text.split(",") if part.strip())

    return parse


def _complex(text):
    return complex(text.replace(" ", ""))


def _optional(conv):
    def parse(text):
        return None if text.strip().lower() in ("", "none", "default") else conv(text)

    return parse


def _choice(*options):
    def parse(text):
        v = text.strip()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v

    return parse


@dataclass(frozen=True)
class Param:
    parse: object
    default: object
    doc: str = ""


PI = math.pi

PARAMS = {
    "planewave-check": {
        "samples": Param(_int, 100, "number of random wavevectors"),
        "points": Param(_int, 4, "sample positions per wavevector"),
        "k_max": Param(_float, 3.0, "wavevector components drawn from [-k_max, k_max]"),
        "h": Param(_float, 1e-3, "finite-difference spacing"),
        "seed": Param(_int, 0),
        "c": Param(_float, 1.0),
        "hbar": Param(_float, 1.0),
        "tol": Param(_float, 1e-10, "bound on the analytic eigen residual"),
        "order_tol": Param(_float, 0.2, "allowed deviation of the convergence order from 2"),
    },
    "collide": {
        "half_angle": Param(_float, PI / 5, "approach angle from the symmetry axis"),
        "distance": Param(_float, 4.0, "start distance from the crossing point"),
        "momentum": Param(_optional(_float), None, "default: the half-turn value pi hbar / (4 r_o)"),
        "signs": Param(_choice("opposite", "same"), "opposite"),
        "r_o": Param(_float, 1.0),
        "dt_max": Param(_float, 0.05),
        "t_end": Param(_float, 10.0),
        "c": Param(_float, 1.0),
        "hbar": Param(_float, 1.0),
        "record_stride": Param(_int, 1),
        "event_tol": Param(_float, 1e-9),
        "mode": Param(_choice("free", "constrained"), "free"),
    },
    "orbit-search": {
        "side": Param(_float, 10.0),
        "momentum": Param(_optional(_float), None, "default: the half-turn value"),
        "phase": Param(_float, 0.0),
        "period_scale": Param(_float, 1.0),
        "free_params": Param(_list(str.strip), ("side", "phase")),
        "tol": Param(_float, 1e-6),
        "max_iter": Param(_int, 20),
        "r_o": Param(_float, 1.0),
        "dt_max": Param(_float, 0.25),
        "c": Param(_float, 1.0),
        "hbar": Param(_float, 1.0),
    },
    "photon-mode": {
        "k": Param(_float, 0.0),
        "k_o": Param(_float, 1.0),
        "branch": Param(_choice("plus", "minus"), "plus"),
        "h": Param(_float, 1e-3),
        "r_min": Param(_float, 0.5),
        "r_max": Param(_float, 5.0),
        "n_z": Param(_int, 5),
        "n_r": Param(_int, 64),
        "n_phi": Param(_int, 8),
        "profile_points": Param(_int, 201),
        "profile_r_max": Param(_float, 10.0),
        "tol": Param(_float, 1e-4),
        "order_tol": Param(_float, 0.2),
    },
    "wavepacket": {
        "points": Param(_list(_int), (128, 128)),
        "extent": Param(_list(_float), (64.0, 64.0)),
        "center": Param(_list(_float), (0.0, 0.0)),
        "width": Param(_list(_float), (4.0, 4.0), "density standard deviation per axis; inf for a plane wave"),
        "k0": Param(_list(_float), (1.0, 0.0)),
        "mix": Param(_list(_complex), (1.0, 0.0), "amplitudes on the plus and minus branches"),
        "dt": Param(_float, 0.05),
        "samples": Param(_int, 41),
        "c": Param(_float, 1.0),
        "hbar": Param(_float, 1.0),
        "zitterbewegung": Param(_bool, False, "run the trembling-motion analysis"),
        "noise_floor": Param(_float, 1e-6),
        "snapshot": Param(_bool, False, "write the final field as wavepacket.bin"),
    },
    "scales": {
        "e_rest": Param(_float, 8.187105776e-14, "rest energy for the radius estimate, J"),
        **{name: Param(_float, value) for name, value in scales.CODATA_2018.items()},
    },
}

SCENARIO_KEYS = ("kind", "out", "formats")


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    params: dict
    out: str | None = None
    formats: tuple = FORMATS
    source: str = "<string>"


def _key_lines(text: str) -> dict:
    """Map (section, key) to its 1-based line number."""
    lines, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            lines.setdefault((section, m.group(1)), no)
    return lines


def _nearest(word: str, options) -> str:
    return max(sorted(options), key=lambda o: difflib.SequenceMatcher(None, word, o).ratio())


def _unknown(kind_of: str, word: str, options, where: str) -> ConfigError:
    return ConfigError(f"{where}: unknown {kind_of} {word!r}; did you mean {_nearest(word, options)!r}?")


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    """Strict parse of a scenario config. Raises ConfigError or PreconditionError."""
    cp = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), strict=True, default_section="\0"
    )
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        detail = re.sub(r"\[line\s+(\d+)\]", r"line \1", str(exc))
        raise ConfigError(f"{source}: syntax error: {detail}") from exc
    where = _key_lines(text)

    def loc(section, key=None):
        line = where.get((section, key)) if key else None
        return f"{source}:{line}" if line else source

    for section in cp.sections():
        if section not in ("scenario", "params"):
            raise _unknown("section", section, ("scenario", "params"), source)
    if not cp.has_section("scenario"):
        raise ConfigError(f"{source}: missing [scenario] section")
    scen = cp["scenario"]
    for key in scen:
        if key not in SCENARIO_KEYS:
            raise _unknown("key", key, SCENARIO_KEYS, loc("scenario", key))
    kind = scen.get("kind", "").strip()
    if kind not in PARAMS:
        raise _unknown("scenario kind", kind, PARAMS, loc("scenario", "kind"))
    formats = tuple(f.strip() for f in scen.get("formats", ",".join(FORMATS)).split(",") if f.strip())
    for f in formats:
        if f not in FORMATS:
            raise _unknown("format", f, FORMATS, loc("scenario", "formats"))

    table = PARAMS[kind]
    params = {name: p.default for name, p in table.items()}
    if cp.has_section("params"):
        for key, raw in cp["params"].items():
            if key not in table:
                raise _unknown(f"{kind} parameter", key, table, loc("params", key))
            try:
                params[key] = table[key].parse(raw)
            except ValueError as exc:
                raise ConfigError(f"{loc('params', key)}: bad value for {key!r}: {exc}") from exc
    config = ScenarioConfig(kind, params, scen.get("out"), formats, source)
    validate(config)
    return config


def _require(cond: bool, message: str):
    if not cond:
        raise PreconditionError(message)


def validate(config: ScenarioConfig) -> None:
    """Check module preconditions before anything runs."""
    p = config.params
    positive = [k for k in ("c", "hbar", "r_o", "h", "k_o", "dt", "dt_max", "t_end", "tol", "event_tol", "e_rest", "G", "e", "eps0", "k_max") if k in p]
    for k in positive:
        _require(p[k] is not None and math.isfinite(p[k]) and p[k] > 0, f"{k} > 0 required (got {p[k]!r})")
    if p.get("momentum") is not None:
        _require(p["momentum"] > 0, "momentum > 0 required")
    kind = config.kind
    if kind == "planewave-check":
        _require(p["samples"] >= 1 and p["points"] >= 1, "samples >= 1 and points >= 1 required")
    elif kind == "collide":
        _require(0 < p["half_angle"] < PI / 2, "0 < half_angle < pi/2 required")
        _require(p["distance"] > p["r_o"], "distance > r_o required (particles must start apart)")
        _require(p["record_stride"] >= 1, "record_stride >= 1 required")
    elif kind == "orbit-search":
        _require(p["side"] > 2 * p["r_o"], f"side > 2 r_o required (side={p['side']!r}, r_o={p['r_o']!r})")
        _require(p["max_iter"] >= 0, "max_iter >= 0 required")
        _require(len(p["free_params"]) > 0, "free_params must be non-empty")
        allowed = ("side", "momentum", "phase", "period_scale")
        for name in p["free_params"]:
            if name not in allowed:
                raise _unknown("free parameter", name, allowed, config.source)
    elif kind == "photon-mode":
        _require(p["r_min"] > p["h"], "r_min > h required (stencil must not reach the axis)")
        _require(p["r_max"] > p["r_min"], "r_max > r_min required")
        _require(min(p["n_z"], p["n_r"], p["n_phi"], p["profile_points"]) >= 1, "grid counts >= 1 required")
    elif kind == "wavepacket":
        D = len(p["points"])
        for key in ("extent", "center", "width"):
            _require(len(p[key]) == D, f"{key} needs {D} entries to match points")
        _require(len(p["k0"]) in (D, 3), f"k0 needs {D} entries")
        _require(len(p["mix"]) == 2, "mix needs two amplitudes")
        _require(p["samples"] >= 3, "samples >= 3 required")


# ---- scenario runners: each returns (results, checks, tables, extra)


def _check(value, limit, passed=None):
    if passed is None:
        passed = value is not None and value < limit
    return {"value": value, "limit": limit, "passed": bool(passed)}


def _run_planewave(p, out_dir):
    rng = np.random.default_rng(p["seed"])
    ks = rng.uniform(-p["k_max"], p["k_max"], size=(p["samples"], 3))
    positions = rng.uniform(-1.0, 1.0, size=(p["points"], 3))
    rows = []
    worst = {"analytic": 0.0, "order_dev": 0.0, "eigenvalue": 0.0}
    for k in ks:
        for branch in planewave.BRANCHES:
            state = planewave.PlaneWaveSpinor(k, branch)
            lam = state.eigenvalue(p["c"], p["hbar"])
            expected = planewave.branch_sign(branch) * p["c"] * p["hbar"] * np.linalg.norm(k)
            an = max(planewave.analytic_residual(state, r, p["c"], p["hbar"]) for r in positions)
            fd = planewave.eigen_residual(state, positions, p["h"], p["c"], p["hbar"])
            order = planewave.convergence_order(state, positions, p["h"], p["c"], p["hbar"])
            worst["analytic"] = max(worst["analytic"], an)
            worst["order_dev"] = max(worst["order_dev"], abs(order - 2.0))
            worst["eigenvalue"] = max(worst["eigenvalue"], abs(lam - expected) / abs(expected))
            rows.append((*k, branch, lam, an, fd, order))
    results = {
        "max_analytic_residual": worst["analytic"],
        "max_fd_residual": max(r[6] for r in rows),
        "order_range": [min(r[7] for r in rows), max(r[7] for r in rows)],
        "max_eigenvalue_error": worst["eigenvalue"],
    }
    checks = {
        "analytic_residual": _check(worst["analytic"], p["tol"]),
        "convergence_order": _check(worst["order_dev"], p["order_tol"], worst["order_dev"] <= p["order_tol"]),
        "eigenvalue": _check(worst["eigenvalue"], 1e-12),
    }
    cols = ("kx", "ky", "kz", "branch", "eigenvalue", "analytic_residual", "fd_residual", "order")
    return results, checks, {"planewave-check.csv": (cols, rows)}


def _run_collide(p, out_dir):
    cfg = semiclassical.SimConfig(
        r_o=p["r_o"], dt_max=p["dt_max"], c=p["c"], hbar=p["hbar"], t_end=p["t_end"],
        record_stride=p["record_stride"], event_tol=p["event_tol"], mode=p["mode"],
    )
    momentum = p["momentum"] or semiclassical.reflecting_momentum(p["r_o"], p["hbar"])
    signs = (1, -1) if p["signs"] == "opposite" else (1, 1)
    particles = semiclassical.symmetric_encounter(p["half_angle"], p["distance"], momentum, signs)
    record = semiclassical.run(cfg, particles)
    summary = semiclassical.collision_summary(record)
    planarity = max(f.planarity for f in record.frames)
    speed_dev = max(float(np.max(np.abs(f.speeds - p["c"]))) for f in record.frames)
    results = {
        "momentum": momentum,
        "contacts": summary,
        "frames": len(record.frames),
        "max_planarity": planarity,
        "max_plane_offset": max(f.plane_offset for f in record.frames),
        "max_speed_deviation": speed_dev,
    }
    checks = {
        "planarity": _check(planarity, 1e-9),
        "speed": _check(speed_dev, 1e-12),
        "contact_occurred": _check(len(summary), 1, len(summary) >= 1),
    }
    if summary:
        checks["total_momentum"] = _check(max(c["dP_total"] for c in summary), 1e-9)
        checks["sigma_squared"] = _check(max(c["dsigma2_total"] for c in summary), 1e-10)
        if p["signs"] == "opposite":
            diff = max(semiclassical.exit_angle_difference(c) for c in summary)
            results["exit_angle_difference"] = diff
            checks["mirror_symmetry"] = _check(diff, 1e-6)
    rows = list(semiclassical.trajectory_rows(record))
    return results, checks, {"collide.csv": (semiclassical.CSV_COLUMNS, rows)}


def _run_orbit(p, out_dir):
    cfg = semiclassical.SimConfig(r_o=p["r_o"], dt_max=p["dt_max"], c=p["c"], hbar=p["hbar"])
    start = orbits.four_square_scenario(p["side"], p["momentum"], cfg, phase=p["phase"], period_scale=p["period_scale"])
    found = orbits.find_periodic(start, p["free_params"], p["tol"], p["max_iter"], cfg)
    report = orbits.orbit_report(found)
    report["initial_residual"] = start.residual
    checks = {"closure": _check(found.residual, p["tol"], found.converged)}
    tables = {}
    if found.record is not None:
        path = orbits.particle_path(found.record, 0)
        k = np.append(path.wavenumber, np.nan)
        rows = [(*pt, kk if np.isfinite(kk) else None) for pt, kk in zip(path.points, k)]
        tables["orbit-search.csv"] = (("x", "y", "z", "k_next"), rows)
    return report, checks, tables


def _run_photon(p, out_dir):
    mode = photon_modes.PhotonMode(k=p["k"], k_o=p["k_o"], branch=p["branch"])
    grid = photon_modes.CylSampleGrid(r=(p["r_min"], p["r_max"]), n=(p["n_z"], p["n_r"], p["n_phi"]))
    residual = photon_modes.laplacian_eigencheck(mode, grid, p["h"])
    order = photon_modes.convergence_order(mode, grid, p["h"])
    jz = photon_modes.jz_analysis(mode)
    axis_density = float(photon_modes.density_profile(mode, [0.0])[0, 1])
    expected_jz = Fraction(1) if p["branch"] == "plus" else Fraction(-1)
    results = {
        "eigen_residual": residual,
        "convergence_order": order,
        "jz": jz,
        "hsq_eigenvalue": photon_modes.hsq_eigenvalue(mode, 1.0, 1.0),
        "density_on_axis": axis_density,
        "first_density_maximum": photon_modes.first_density_maximum(mode),
    }
    checks = {
        "eigen_residual": _check(residual, p["tol"]),
        "convergence_order": _check(abs(order - 2.0), p["order_tol"], abs(order - 2.0) <= p["order_tol"]),
        "jz": _check(str(jz["Jz"]), str(expected_jz), jz["Jz"] == expected_jz),
        "density_on_axis": _check(axis_density, 1e-300, axis_density == 0.0),
    }
    r = np.linspace(0.0, p["profile_r_max"], p["profile_points"])
    rows = [tuple(row) for row in photon_modes.profile_table(mode, r)]
    cols = ("r", "density", "re_u", "im_u", "re_v", "im_v")
    return results, checks, {"photon-mode.csv": (cols, rows)}


def _run_wavepacket(p, out_dir):
    grid = wavepacket.Grid(p["points"], p["extent"])
    mix = np.array(p["mix"], dtype=complex)
    field0 = wavepacket.init_gaussian(grid, p["center"], p["width"], p["k0"], mix, p["c"], p["hbar"])
    series = wavepacket.run_series(field0, p["dt"], p["samples"])
    laws = wavepacket.verify_motion_laws(series, p["c"], p["hbar"])
    first = series.snapshots[0]
    results = {"laws": laws, "H": first.H, "p": first.p, "eps_H": first.eps_H, "r_M_defined": first.r_M is not None}
    checks = {
        "momentum": _check(laws["momentum"]["abs"], 1e-10),
        "norm": _check(laws["norm"]["drift"], 1e-12),
        "energy": _check(laws["energy"]["drift"], 1e-12),
    }
    if laws["angular_momentum"] is not None:
        checks["angular_momentum"] = _check(laws["angular_momentum"]["drift"], 1e-6)
    if laws["center_of_mass"] is not None:
        checks["center_of_mass"] = _check(laws["center_of_mass"]["rel"], 1e-3)
    if p["zitterbewegung"]:
        zb = wavepacket.zb_analysis(series, p["noise_floor"])
        results["zitterbewegung"] = {"frequency": zb.frequency, "amplitude": zb.amplitude, "axis": zb.axis, "fit_rms": zb.fit_rms}
    extra = {}
    if p["snapshot"]:
        extra["wavepacket.bin"] = wavepacket.evolve(field0, p["dt"], p["samples"] - 1)
    rows = list(series.rows())
    return results, checks, {"wavepacket.csv": (wavepacket.SERIES_COLUMNS, rows)}, extra


def _run_scales(p, out_dir):
    ctx = scales.ScaleContext(**{k: p[k] for k in scales.CODATA_2018})
    report = scales.scales_report(ctx, p["e_rest"])
    r_o = report["planck_length"]["result"]
    inv_alpha = report["coulomb_reduction_factor"]["inverse"]
    radius = report["electron_radius_rounded_inputs"]["result"]
    tube = report["tube_length_quoted_radius"]["result"]
    tube_orders = abs(math.log10(tube / scales.QUOTED["tube_length_m"]))
    checks = {
        "planck_length": _check(abs(r_o / 1.616255e-35 - 1), 1e-3),
        "fine_structure": _check(abs(inv_alpha / 137.035999 - 1), 1e-4),
        "electron_radius": _check(radius, 5e-28, 1e-28 <= radius <= 5e-28),
        "tube_length_orders": _check(tube_orders, 1.0, tube_orders <= 1.0),
    }
    rows = []
    for name in sorted(report):
        entry = report[name]
        if isinstance(entry, dict) and "result" in entry:
            rows.append((name, entry["result"], entry["unit"], entry.get("quoted"), entry.get("ratio")))
    return report, checks, {"scales.csv": (("name", "result", "unit", "quoted", "ratio"), rows)}


RUNNERS = {
    "planewave-check": _run_planewave,
    "collide": _run_collide,
    "orbit-search": _run_orbit,
    "photon-mode": _run_photon,
    "wavepacket": _run_wavepacket,
    "scales": _run_scales,
}

# the headline numbers for the one-line summary
HEADLINE = {
    "planewave-check": ("max_analytic_residual", "max_fd_residual"),
    "collide": ("max_planarity", "max_speed_deviation"),
    "orbit-search": ("residual", "iterations"),
    "photon-mode": ("eigen_residual", "convergence_order"),
    "wavepacket": ("H", "eps_H"),
    "scales": (),
}


def _plain(obj):
    """Recursively convert to JSON-safe builtins; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_plain(obj.real), _plain(obj.imag)]
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])


@dataclass
class Outcome:
    kind: str
    exit_code: int
    summary: str
    files: list = field(default_factory=list)


def run_scenario(config: ScenarioConfig, out_dir=None, formats=None) -> Outcome:
    """Run one scenario, write its outputs and return the exit code and summary."""
    start = time.perf_counter()
    out = Path(out_dir or config.out or "spinorlab-out")
    formats = tuple(formats or config.formats)
    try:
        produced = RUNNERS[config.kind](config.params, out)
    except SpinorLabError as exc:
        return Outcome(config.kind, exc.exit_code, f"{config.kind}: error: {exc}")
    results, checks, tables = produced[:3]
    extra = produced[3] if len(produced) > 3 else {}
    passed = all(c["passed"] for c in checks.values())
    doc = _plain({"scenario": config.kind, "params": config.params, "results": results, "checks": checks, "passed": passed})
    files = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "json" in formats:
            path = out / f"{config.kind}.json"
            path.write_text(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n")
            files.append(path)
        if "csv" in formats:
            for name, (cols, rows) in tables.items():
                _write_csv(out / name, cols, rows)
                files.append(out / name)
        for name, fld in extra.items():
            wavepacket.write_snapshot(fld, out / name)
            files.append(out / name)
    except OSError as exc:
        return Outcome(config.kind, OutputError.exit_code, f"{config.kind}: error: cannot write outputs to {out}: {exc}")
    heads = " ".join(f"{k}={doc['results'][k]!r}" for k in HEADLINE[config.kind] if k in doc["results"])
    failed = [name for name, c in checks.items() if not c["passed"]]
    status = "ok" if passed else "FAILED " + ",".join(sorted(failed))
    wall = time.perf_counter() - start
    return Outcome(config.kind, 0 if passed else 3, f"{config.kind}: {status} {heads} wall={wall:.2f}s".replace("  ", " "), files)


def _run_file(path: str, out_dir, formats, fallback=None) -> tuple[int, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        return OutputError.exit_code, f"{path}: error: cannot read config: {exc}"
    try:
        config = parse_config(text, source=str(path))
    except SpinorLabError as exc:
        return exc.exit_code, f"error: {exc}"
    outcome = run_scenario(config, out_dir or config.out or fallback, formats)
    return outcome.exit_code, outcome.summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinorlab", description="Run spinor dynamics scenarios from config files.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one or more scenario configs")
    run.add_argument("configs", nargs="+", metavar="CONFIG")
    run.add_argument("--out", help="output directory (overrides the config's 'out')")
    run.add_argument("--format", help="comma-separated subset of csv,json")
    run.add_argument("--batch", action="store_true", help="run configs concurrently, one process each")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    formats = None
    if args.format:
        formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
        bad = [f for f in formats if f not in FORMATS]
        if bad:
            print(f"error: unknown format {bad[0]!r}; did you mean {_nearest(bad[0], FORMATS)!r}?", file=sys.stderr)
            return ConfigError.exit_code
    # several configs get one subdirectory each, named after the file
    many = len(args.configs) > 1
    jobs = []
    for path in args.configs:
        stem = Path(path).stem
        out = str(Path(args.out) / stem) if args.out and many else args.out
        fallback = str(Path("spinorlab-out") / stem) if many else None
        jobs.append((path, out, formats, fallback))
    if args.batch and len(jobs) > 1:
        with ProcessPoolExecutor() as pool:
            outcomes = list(pool.map(_run_file, *zip(*jobs)))
    else:
        outcomes = [_run_file(*job) for job in jobs]
    for code, line in outcomes:
        print(line, file=sys.stdout if code == 0 else sys.stderr)
    return max(code for code, _ in outcomes)


if __name__ == "__main__":
    sys.exit(main())
