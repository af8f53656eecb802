"""Command-line front end: config-driven scans, sweeps, maps and trap reports.

Every run reads one TOML file (``--config``) or a bundled scenario
(``--scenario``), writes CSV tables with unit-bearing headers into ``--out``
and records the resolved parameters in ``manifest.json``.

Exit codes: 0 success, 1 user or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, NumericalError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

COMMANDS = ("scan", "report", "quartic", "mech-sweep", "tm1d-map")


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every offending field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


# --- configuration ---------------------------------------------------------------

_NUM = (int, float)

# block -> key -> (types, required, default)
SCHEMA = {
    "cavity": {
        "L": (_NUM, True, None), "R1": (_NUM, True, None), "R2": (_NUM, True, None),
        "wavelength": (_NUM, False, 1.55e-6), "finesse": (_NUM, False, None),
    },
    "disc": {
        "n": (_NUM, True, None), "t": (_NUM, True, None), "r": (_NUM, False, None),
        "r_over_sigma": (_NUM, False, 10.0), "x0": (_NUM, False, 0.0),
        "theta_y": (_NUM, False, 0.0), "theta_z": (_NUM, False, 0.0),
    },
    "scan": {
        "coordinate": (str, False, None), "start": (_NUM, False, None),
        "stop": (_NUM, False, None), "num": (int, False, 101), "tilts": (list, False, None),
        "crossing": (bool, False, False), "window": (_NUM, False, None),
    },
    "manifold": {
        "kind": (str, False, "two_mode"), "half_width": (int, False, 0),
        "families": (list, False, [[0, 0]]), "method": (str, False, "generalized"),
        "per_mode_k": (bool, False, False),
    },
    "quartic": {
        "coordinates": (list, False, ["x0"]), "theta_z": (list, True, None),
        "half_window": (_NUM, False, None),
    },
    "trap": {
        "P": (_NUM, True, None), "gamma_hz": (_NUM, True, None),
        "f_mech_hz": (_NUM, False, None), "mass": (_NUM, False, None),
    },
    "mech": {
        "t": (_NUM, False, 110e-9), "r": (_NUM, False, 5e-6), "l": (_NUM, False, 45e-6),
        "d": (_NUM, False, 100e-9), "sigma_over_r": (list, False, [1.0]),
        "f_min_hz": (_NUM, False, 1e4), "f_max_hz": (_NUM, False, 3e8),
        "num": (int, False, 200), "mesh_resolution": (int, False, 1),
        "modes_per_class": (int, False, 3),
    },
    "tm1d": {
        "n": (_NUM, True, None), "t": (_NUM, True, None), "mirror_t": (_NUM, False, 0.3),
        "x0_start": (_NUM, False, 0.0), "x0_stop": (_NUM, False, None),
        "x0_num": (int, False, 49), "detuning_min_fsr": (_NUM, False, -1.0),
        "detuning_max_fsr": (_NUM, False, 0.2), "detuning_num": (int, False, 241),
        "half_widths": (list, False, []),
    },
}

REQUIRED_BLOCKS = {
    "scan": ("cavity", "disc"),
    "report": ("cavity", "disc", "trap"),
    "quartic": ("cavity", "disc", "quartic"),
    "mech-sweep": ("mech",),
    "tm1d-map": ("cavity", "tm1d"),
}

COORD_UNITS = {"x0": "m", "theta_y": "rad", "theta_z": "rad"}


@dataclass
class ScanConfig:
    """Validated scenario: name, parameter blocks and the source it came from."""

    scenario: str
    blocks: dict
    source: str = ""
    raw: dict = field(default_factory=dict)

    def block(self, name: str) -> dict:
        return self.blocks.get(name, {})


def validate(raw: dict, command: str, source: str = "") -> ScanConfig:
    """Check types, required keys and ranges; collect every problem before failing."""
    problems = []
    scenario = raw.get("scenario")
    if not isinstance(scenario, str) or not scenario:
        problems.append("scenario: required string")
        scenario = ""
    blocks = {}
    for name, value in raw.items():
        if name == "scenario":
            continue
        if name not in SCHEMA:
            problems.append(f"{name}: unknown block")
            continue
        if not isinstance(value, dict):
            problems.append(f"{name}: must be a table")
            continue
        spec = SCHEMA[name]
        out = {}
        for key in value:
            if key not in spec:
                problems.append(f"{name}.{key}: unknown key")
        for key, (types, required, default) in spec.items():
            if key not in value:
                if required:
                    problems.append(f"{name}.{key}: required")
                out[key] = default
                continue
            v = value[key]
            if isinstance(v, bool) and types is not bool:
                problems.append(f"{name}.{key}: expected {_tname(types)}, got bool")
            elif not isinstance(v, types):
                problems.append(f"{name}.{key}: expected {_tname(types)}, got {type(v).__name__}")
            out[key] = v
        blocks[name] = out
    for name in REQUIRED_BLOCKS.get(command, ()):
        if name not in blocks:
            problems.append(f"{name}: block required by '{command}'")
    problems += _check_ranges(blocks, command, scenario)
    if problems:
        raise ConfigError(problems)
    return ScanConfig(scenario, blocks, source, raw)


def _tname(types):
    if isinstance(types, tuple):
        return "number"
    return types.__name__


def _positive(blocks, block, keys, problems):
    b = blocks.get(block, {})
    for k in keys:
        v = b.get(k)
        if isinstance(v, _NUM) and not isinstance(v, bool) and not v > 0:
            problems.append(f"{block}.{k}: must be positive")


def _check_ranges(blocks, command, scenario):
    problems = []
    _positive(blocks, "cavity", ("L", "R1", "R2", "wavelength", "finesse"), problems)
    _positive(blocks, "disc", ("t", "r", "r_over_sigma"), problems)
    _positive(blocks, "mech", ("t", "r", "l", "d", "f_min_hz", "f_max_hz", "num"), problems)
    _positive(blocks, "tm1d", ("t", "x0_num", "detuning_num"), problems)
    _positive(blocks, "trap", ("gamma_hz",), problems)
    d = blocks.get("disc", {})
    if isinstance(d.get("n"), _NUM) and d["n"] < 1:
        problems.append("disc.n: refractive index must be >= 1")
    for k in ("theta_y", "theta_z"):
        v = d.get(k)
        if isinstance(v, _NUM) and abs(v) >= 0.3:
            problems.append(f"disc.{k}: tilt must be below 0.3 rad")
    tr = blocks.get("trap", {})
    if isinstance(tr.get("P"), _NUM) and tr["P"] < 0:
        problems.append("trap.P: must be non-negative")
    s = blocks.get("scan")
    if command == "scan" and scenario != "fig3":
        if s is None:
            problems.append("scan: block required by 'scan'")
        else:
            c = s.get("coordinate")
            if c not in COORD_UNITS:
                problems.append(f"scan.coordinate: exactly one of {sorted(COORD_UNITS)} required")
            for k in ("start", "stop"):
                if s.get(k) is None:
                    problems.append(f"scan.{k}: required")
            if isinstance(s.get("num"), int) and s["num"] < 2:
                problems.append("scan.num: at least 2 points")
    m = blocks.get("manifold", {})
    if m.get("kind") not in (None, "two_mode", "longitudinal"):
        problems.append("manifold.kind: 'two_mode' or 'longitudinal'")
    if m.get("method") not in (None, "generalized", "linear"):
        problems.append("manifold.method: 'generalized' or 'linear'")
    if isinstance(m.get("half_width"), int) and m["half_width"] < 0:
        problems.append("manifold.half_width: must be >= 0")
    q = blocks.get("quartic", {})
    for c in q.get("coordinates") or []:
        if c not in ("x0", "theta_y"):
            problems.append(f"quartic.coordinates: {c!r} is not 'x0' or 'theta_y'")
    me = blocks.get("mech", {})
    if isinstance(me.get("mesh_resolution"), int) and me["mesh_resolution"] < 1:
        problems.append("mech.mesh_resolution: must be >= 1")
    for v in me.get("sigma_over_r") or []:
        if not isinstance(v, _NUM) or not v > 0:
            problems.append("mech.sigma_over_r: entries must be positive numbers")
    tm = blocks.get("tm1d", {})
    if isinstance(tm.get("mirror_t"), _NUM) and not 0 < tm["mirror_t"] <= 1:
        problems.append("tm1d.mirror_t: must lie in (0, 1]")
    return problems


def load_config(path: str | None, scenario: str | None, command: str) -> ScanConfig:
    if (path is None) == (scenario is None):
        raise ConfigError(["give exactly one of --config or --scenario"])
    if scenario is not None:
        names = bundled_scenarios()
        if scenario not in names:
            raise ConfigError([f"unknown scenario {scenario!r}; available: {', '.join(names)}"])
        text = resources.files("cavitrap").joinpath("scenarios", f"{scenario}.toml").read_text()
        source = f"bundled:{scenario}"
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError([f"cannot read config: {exc}"]) from None
        source = str(path)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML syntax: {exc}"]) from None
    return validate(raw, command, source)


def bundled_scenarios() -> list:
    root = resources.files("cavitrap").joinpath("scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


# --- builders ----------------------------------------------------------------------

def _geometry(cfg):
    from .mode_basis import CavityGeometry
    c = cfg.block("cavity")
    g = CavityGeometry(c["L"], c["R1"], c["R2"], c["wavelength"], c["finesse"])
    g.check_stable()
    return g


def _disc(cfg, beam):
    from .coupling import DiscParams
    d = cfg.block("disc")
    r = d["r"] if d["r"] is not None else d["r_over_sigma"] * beam.sigma
    return DiscParams(d["n"], d["t"], r, d["x0"], d["theta_y"], d["theta_z"])


def _manifold(cfg, geometry):
    from .mode_basis import ModeIndex
    from .spectrum import longitudinal_manifold, two_mode_manifold
    m = cfg.block("manifold") or _defaults("manifold")
    if m["kind"] == "two_mode":
        return two_mode_manifold(geometry)
    fams = tuple(tuple(int(v) for v in f) for f in m["families"])
    return longitudinal_manifold(geometry, ModeIndex(geometry.nearest_eta()), m["half_width"],
                                 fams)


def _defaults(block):
    return {k: v[2] for k, v in SCHEMA[block].items()}


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


class Writer:
    """Collects outputs in one directory; single writer for all workers."""

    def __init__(self, out: Path, plots: bool):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.plots = plots
        self.summary = {}

    def csv(self, name: str, header, rows) -> Path:
        path = self.out / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        self.files.append(name)
        return path

    def text(self, name: str, lines) -> Path:
        path = self.out / name
        path.write_text("\n".join(lines) + "\n")
        self.files.append(name)
        return path

    def plot(self, fn, *args, **kw):
        if not self.plots:
            return
        from . import plotting
        if not plotting.available():
            print("matplotlib not installed; skipping plots", file=sys.stderr)
            self.plots = False
            return
        path = fn(*args, **kw)
        self.files.append(Path(path).name)

    def manifest(self, cfg: ScanConfig, command: str, threads: int):
        from .kernels import BACKEND
        data = {
            "scenario": cfg.scenario, "command": command, "source": cfg.source,
            "version": __version__, "backend": BACKEND, "threads": threads,
            "parameters": cfg.blocks, "outputs": sorted(self.files), "summary": self.summary,
        }
        (self.out / "manifest.json").write_text(
            json.dumps(data, indent=2, sort_keys=True, default=_fmt) + "\n")


# --- runners -------------------------------------------------------------------

def run_scan(cfg: ScanConfig, w: Writer, threads: int = 1):
    if cfg.scenario == "fig3":
        return run_fig3(cfg, w, threads)
    from .mode_basis import beam_params, unperturbed_frequency, ModeIndex
    from .spectrum import crossing_scan, scan_branch, ManifoldSolver
    g = _geometry(cfg)
    beam = beam_params(g)
    disc = _disc(cfg, beam)
    man = _manifold(cfg, g)
    m = cfg.block("manifold") or _defaults("manifold")
    s = cfg.block("scan")
    coord = s["coordinate"]
    grid = np.linspace(s["start"], s["stop"], s["num"])
    tilts = s["tilts"] if s["tilts"] is not None else [disc.theta_z]
    w_ref = unperturbed_frequency(g, ModeIndex(g.nearest_eta()))
    unit = COORD_UNITS[coord]
    gaps = []
    for i, thz in enumerate(tilts):
        d = disc.with_(theta_z=float(thz))
        br = scan_branch(g, beam, d, man, coord, grid, m["method"], m["per_mode_k"],
                         omega_ref=w_ref, keep=min(len(man), 8), threads=threads)
        labels = man.labels()
        header = ([f"{coord} [{unit}]", "branch_id", "omega [rad/s]", "detuning [Hz]"]
                  + [f"weight_{lab} [1]" for lab in labels])
        rows = []
        for p, x in enumerate(grid):
            for b in range(br.n_branches):
                rows.append([x, b, br.omegas[p, b], (br.omegas[p, b] - w_ref) / (2 * np.pi),
                             *br.weights[p, b]])
        path = w.csv(f"scan_{i}.csv", header, rows)
        from . import plotting
        w.plot(plotting.plot_grouped, path, path.with_suffix(".png"), f"{coord} [{unit}]",
               "detuning [Hz]", "branch_id", title=f"{cfg.scenario}: theta_z = {thz:g} rad")
        if s["crossing"]:
            solver = ManifoldSolver(g, beam, d, man, coord, m["method"], m["per_mode_k"],
                                    False, w_ref)
            rep = crossing_scan(solver, grid, threads=threads)
            gaps.append([thz, rep.location, rep.gap, rep.gap / g.fsr, rep.G_minus,
                         rep.curvature])
    if gaps:
        w.csv("gaps.csv", ["theta_z [rad]", f"location [{unit}]", "gap [rad/s]", "gap [FSR]",
                           f"G_minus [rad/s/{unit}]", f"curvature [rad/s/{unit}^2]"], gaps)


def _gap_fit(thz, gaps):
    thz = np.asarray(thz, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    slope = float(thz @ gaps / (thz @ thz))
    resid = gaps - slope * thz
    r2 = 1.0 - float(resid @ resid) / float(((gaps - gaps.mean()) ** 2).sum())
    return slope, r2


def run_fig3(cfg: ScanConfig, w: Writer, threads: int = 1):
    """Four panels: wide x0 and theta_y scans, then refined crossings for each tilt."""
    from .coupling import perturbation_matrix
    from .mode_basis import ModeIndex, beam_params, unperturbed_frequency
    from .spectrum import ManifoldSolver, crossing_scan, scan_branch, two_mode_manifold
    from .trap import default_half_window, family_crossing
    from . import plotting
    g = _geometry(cfg)
    beam = beam_params(g)
    disc = _disc(cfg, beam).with_(x0=0.0, theta_y=0.0, theta_z=0.0)
    man = two_mode_manifold(g)
    s = cfg.block("scan") or _defaults("scan")
    num = s["num"]
    tilts = s["tilts"] if s["tilts"] is not None else [0.0, 1e-4, 2e-4, 3e-4]
    lam = g.lambda_ref
    w_ref = unperturbed_frequency(g, ModeIndex(g.nearest_eta()))
    wide = {"x0": np.linspace(-lam / 4, lam / 4, num), "theta_y": np.linspace(0.0, 10e-3, num)}
    summary = []
    for panel, fine_panel, coord in (("a", "c", "x0"), ("b", "d", "theta_y")):
        grid = wide[coord]
        unit = COORD_UNITS[coord]
        br = scan_branch(g, beam, disc, man, coord, grid, omega_ref=w_ref, threads=threads)
        rows = [[x, *((br.omegas[p] - w_ref) / g.fsr)] for p, x in enumerate(grid)]
        path = w.csv(f"fig3{panel}.csv", [f"{coord} [{unit}]", "lower [FSR]", "upper [FSR]"], rows)
        w.plot(plotting.plot_columns, path, path.with_suffix(".png"), title=f"fig3{panel}")
        flat = ManifoldSolver(g, beam, disc, man, coord)
        half = grid[grid >= 0]
        loc, _ = family_crossing(flat, half, man.modes[0], man.modes[1])
        span = default_half_window(g, beam, coord) / 2.0
        fine = loc + np.linspace(-span, span, num)
        rows = []
        for thz in tilts:
            d = disc.with_(theta_z=float(thz))
            br = scan_branch(g, beam, d, man, coord, fine, omega_ref=w_ref, threads=threads)
            om = np.sort(br.omegas, axis=1)
            rows += [[thz, x, *((om[p] - w_ref) / g.fsr)] for p, x in enumerate(fine)]
            if thz == 0:
                gap, v12 = 0.0, 0.0
                location = loc
            else:
                rep = crossing_scan(ManifoldSolver(g, beam, d, man, coord), fine, threads=threads)
                gap, location = rep.gap, rep.location
                V = perturbation_matrix(g, beam, d.with_(**{coord: location}), man.modes).V
                v12 = man.omegas[0] * abs(V[0, 1])
            summary.append([coord, thz, location, gap, gap / g.fsr, v12])
        path = w.csv(f"fig3{fine_panel}.csv", ["theta_z [rad]", f"{coord} [{unit}]",
                                                 "lower [FSR]", "upper [FSR]"], rows)
        w.plot(plotting.plot_grouped, path, path.with_suffix(".png"), f"{coord} [{unit}]",
               "upper [FSR]", "theta_z [rad]", title=f"fig3{fine_panel}")
    w.csv("fig3_gaps.csv", ["coordinate", "theta_z [rad]", "location [m or rad]", "gap [rad/s]",
                            "gap [FSR]", "omega1*|V12| [rad/s]"], summary)
    lines = []
    for coord in ("x0", "theta_y"):
        sel = [r for r in summary if r[0] == coord]
        slope, r2 = _gap_fit([r[1] for r in sel], [r[3] for r in sel])
        w.summary[f"gap_slope_{coord}"] = slope
        w.summary[f"gap_r2_{coord}"] = r2
        lines.append(f"{coord}: gap/theta_z = {slope:.6g} rad/s/rad, R^2 = {r2:.6f}")
    print("\n".join(lines))


def run_quartic(cfg: ScanConfig, w: Writer, threads: int = 1):
    from . import plotting
    from .mode_basis import beam_params
    from .trap import quartic_scan
    g = _geometry(cfg)
    beam = beam_params(g)
    disc = _disc(cfg, beam)
    q = cfg.block("quartic")
    rows = []
    for coord in q["coordinates"]:
        rep = quartic_scan(g, beam, disc, q["theta_z"], coord, half_window=q["half_window"],
                           threads=threads)
        for i, thz in enumerate(rep.theta_z):
            rows.append([coord, thz, rep.c1[i], rep.c2[i], rep.c4[i], rep.labels[i]])
        w.summary[f"quartic_point_{coord}"] = rep.quartic_point
        pt = "none" if rep.quartic_point is None else f"{rep.quartic_point:.6g} rad"
        print(f"{coord}: quartic point at theta_z = {pt}")
        for thz, lab in zip(rep.theta_z, rep.labels):
            print(f"  theta_z = {thz:.4g} rad: {lab}")
    # c1, c2, c4 are per unit of the scanned coordinate (m or rad)
    path = w.csv("quartic.csv", ["coordinate", "theta_z [rad]", "c1 [rad/s/unit]",
                                 "c2 [rad/s/unit^2]", "c4 [rad/s/unit^4]", "class"], rows)
    w.plot(plotting.plot_grouped, path, path.with_suffix(".png"), "theta_z [rad]",
           "c2 [rad/s/unit^2]", "coordinate", title=cfg.scenario)


def run_mech(cfg: ScanConfig, w: Writer, threads: int = 1):
    from . import mech, plotting
    m = cfg.block("mech")
    geom = mech.MechGeometry(m["t"], m["r"], m["l"], m["d"])
    model = mech.build_model(geom, m["mesh_resolution"])
    f_norm = np.logspace(np.log10(m["f_min_hz"]), np.log10(m["f_max_hz"]), m["num"])
    summary = []
    for ratio in m["sigma_over_r"]:
        sigma = ratio * geom.r
        S = np.concatenate([[0.0], mech.strength_for_frequency(model, 2 * np.pi * f_norm, sigma)])
        sw = mech.modal_sweep(model, sigma, S, m["modes_per_class"], threads=threads)
        rows = [[sn / (2 * np.pi), mid, sym, f, e] for sn, mid, sym, f, e in sw.to_rows()]
        name = f"mech_sigma_{ratio:g}.csv"
        path = w.csv(name, ["strength_norm [Hz]", "mode_id", "symmetry", "freq_Hz [Hz]",
                            "Uopt_over_Umat [1]"], rows)
        w.plot(plotting.plot_grouped, path, path.with_suffix(".png"), "strength_norm [Hz]",
               "Uopt_over_Umat [1]", "mode_id", logx=True, logy=True,
               title=f"sigma/r = {ratio:g}")
        s1 = mech.enhancement_ceiling(sw, "s1")
        t1 = mech.enhancement_ceiling(sw, "t1")
        summary.append([ratio, s1[0], s1[1] / (2 * np.pi), t1[0], t1[1] / (2 * np.pi),
                        mech.q_law_deviation(sw)])
    w.csv("mech_summary.csv", ["sigma_over_r [1]", "s1_ceiling [1]", "s1_ceiling_freq [Hz]",
                               "t1_ceiling [1]", "t1_onset_freq [Hz]", "q_law_deviation [1]"],
          summary)
    for r in summary:
        print(f"sigma/r = {r[0]:g}: s1 ceiling {r[1]:.4g}, t1 ceiling {r[3]:.4g} "
              f"at {r[4] / 1e6:.4g} MHz")


def run_tm1d(cfg: ScanConfig, w: Writer, threads: int = 1):
    from . import plotting
    from .coupling import DiscParams
    from .mode_basis import ModeIndex, beam_params, unperturbed_frequency
    from .spectrum import ManifoldSolver, follow_nearest, longitudinal_manifold
    from .tm1d import Slab, SlabStack, resonance_shift, transmission_map
    g = _geometry(cfg)
    tm = cfg.block("tm1d")
    lam = g.lambda_ref
    stack = SlabStack.around(g.L, lam, [Slab(tm["n"], tm["t"], 0.0)], tm["mirror_t"])
    stop = tm["x0_stop"] if tm["x0_stop"] is not None else lam / 2
    xs = np.linspace(tm["x0_start"], stop, tm["x0_num"])
    det = np.linspace(tm["detuning_min_fsr"], tm["detuning_max_fsr"], tm["detuning_num"])
    T = transmission_map(stack, xs, det * stack.fsr, threads=threads)
    rows = [[x, dd, T[i, j]] for i, x in enumerate(xs) for j, dd in enumerate(det)]
    path = w.csv("tm1d_map.csv", ["x0 [m]", "detuning [FSR]", "transmission [1]"], rows)
    w.plot(plotting.plot_map, path, path.with_suffix(".png"), title=cfg.scenario)
    branch = resonance_shift(stack, xs) / stack.fsr
    cols = [branch]
    header = ["x0 [m]", "transfer_matrix [FSR]"]
    if tm["half_widths"]:
        beam = beam_params(g)
        eta = stack.eta_ref
        disc = DiscParams(tm["n"], tm["t"], 10 * beam.sigma)
        w_ref = unperturbed_frequency(g, ModeIndex(eta))
        for hw in tm["half_widths"]:
            man = longitudinal_manifold(g, ModeIndex(eta), int(hw))
            solver = ManifoldSolver(g, beam, disc, man, "x0", "linear", True, False, w_ref)
            from .spectrum import _map
            vals = [(r[0] - w_ref) / g.fsr for r in _map(solver, xs, threads)]
            cols.append(follow_nearest(vals, branch[0]))
            header.append(f"modes_pm{int(hw)} [FSR]")
    rows = [[x, *[c[i] for c in cols]] for i, x in enumerate(xs)]
    path = w.csv("tm1d_branches.csv", header, rows)
    w.plot(plotting.plot_columns, path, path.with_suffix(".png"), title=cfg.scenario)


def run_report(cfg: ScanConfig, w: Writer | None = None, threads: int = 1) -> list:
    from .mode_basis import beam_params
    from .trap import trap_report
    g = _geometry(cfg)
    beam = beam_params(g)
    disc = _disc(cfg, beam)
    tr = cfg.block("trap")
    wm = None if tr["f_mech_hz"] is None else 2 * np.pi * tr["f_mech_hz"]
    rep = trap_report(tr["P"], g, disc, 2 * np.pi * tr["gamma_hz"], g.finesse, beam,
                      tr["mass"], wm)
    lines = rep.as_lines()
    print("\n".join(lines))
    if w is not None:
        w.text("report.txt", lines)
    return lines


RUNNERS = {"scan": run_scan, "quartic": run_quartic, "mech-sweep": run_mech,
           "tm1d-map": run_tm1d, "report": run_report}


def run_scenario(cfg: ScanConfig, command: str, out: Path, threads: int = 1,
                 plots: bool = True) -> Writer:
    """Run one validated scenario, write its outputs and manifest."""
    w = Writer(out, plots)
    try:
        RUNNERS[command](cfg, w, threads)
    except NumericalError as exc:
        raise NumericalError(f"scenario {cfg.scenario!r} ({command}): {exc}") from exc
    w.manifest(cfg, command, threads)
    return w


# --- entry point -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cavitrap", description="Cavity optical trap scans and reports.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="TOML scenario file")
        src.add_argument("--scenario", help="bundled scenario name")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads")
        sp.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    sub.add_parser("list", help="list bundled scenarios")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list":
        print("\n".join(bundled_scenarios()))
        return 0
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        cfg = load_config(args.config, args.scenario, args.command)
        run_scenario(cfg, args.command, Path(args.out), args.threads, not args.no_plots)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
