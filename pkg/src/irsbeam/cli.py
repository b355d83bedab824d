"""Command-line front end.

Subcommands: solve, pattern, gl-map, multibeam, prephase, oracle.  A JSON
config file can predefine any option; command-line flags win over the
file.  Unknown config keys are rejected.  All emitted angles are degrees,
and every dB value in the outputs names its convention in the summary's
``db_conventions`` block.

Exit codes: 0 success, 2 config error, 3 cost-cap refusal, 4 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, prephase as prephase_mod, solvers
from .geometry import (
    Direction,
    GlobalSet,
    Lattice,
    LatticeKind,
    PerElementBinary,
    array_factor,
    steering_vector,
)

__all__ = ["ConfigError", "CostRefusalError", "main", "read_weights", "write_weights"]

DB_CONVENTIONS = {
    "g_db": "20*log10(|G|), identical to 10*log10(|G|^2)",
    "gain_db": "20*log10(cell_count * |G|)",
    "sll_db": "20*log10(sidelobe peak / mainlobe peak)",
}

SIMULATE_POINT_CAP = 1500


class ConfigError(ValueError):
    """Invalid or contradictory scenario configuration."""


class CostRefusalError(RuntimeError):
    """A sweep was refused because its estimated cost exceeds the cap."""


# ---------------------------------------------------------------------------
# configuration plumbing

_SCHEMA = {
    "lattice": {"kind", "m", "n", "d_over_lambda"},
    "incident": None,
    "targets": None,
    "alphabet": {"bits", "set", "per_element_file"},
    "prephase": {"kappa", "seed", "file"},
    "solver": None,
    "grid": {"theta_step", "phi_step", "cut_step"},
    "cut_phi": None,
    "sweep": {"theta", "phi"},
    "seeds": None,
    "max_iters": None,
    "tol": None,
    "out": None,
    "seed": None,
    "simulate": None,
    "force": None,
    "cap": None,
}

_DEFAULTS = {
    "lattice": {"kind": "rect", "m": 30, "n": 30, "d_over_lambda": 0.5},
    "alphabet": {"bits": 1},
    "solver": "auto",
    "grid": {"theta_step": 0.25, "phi_step": 1.0, "cut_step": 0.05},
    "seeds": 30,
    "max_iters": 50,
    "tol": 1e-9,
    "out": "out",
    "seed": 0,
    "simulate": False,
    "force": False,
    "cap": 2**24,
}


def _check_keys(data: dict, schema=None, path=""):
    schema = _SCHEMA if schema is None else schema
    for key, value in data.items():
        where = f"{path}{key}"
        if key not in schema:
            raise ConfigError(f"unknown config key '{where}'")
        sub = schema[key]
        if isinstance(sub, set):
            if not isinstance(value, dict):
                raise ConfigError(f"config key '{where}' must be a section")
            for inner in value:
                if inner not in sub:
                    raise ConfigError(f"unknown config key '{where}.{inner}'")


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    _check_keys(data)
    return data


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _parse_angle_pair(text: str, field: str):
    parts = text.split(",")
    if len(parts) == 1:
        parts.append("180")  # bare theta: the same-plane convention
    if len(parts) != 2:
        raise ConfigError(f"{field} must be 'theta,phi' in degrees: got {text!r}")
    try:
        return [float(parts[0]), float(parts[1])]
    except ValueError as exc:
        raise ConfigError(f"{field} must be numeric degrees: got {text!r}") from exc


def _parse_size(text: str):
    try:
        m, n = text.lower().split("x")
        return int(m), int(n)
    except ValueError as exc:
        raise ConfigError(f"size must look like 'MxN': got {text!r}") from exc


def _parse_grid(text: str):
    parts = text.lower().split("x")
    try:
        steps = [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"grid must be 'step' or 'tstepxpstep': got {text!r}") from exc
    if len(steps) == 1:
        return {"theta_step": steps[0]}
    if len(steps) == 2:
        return {"theta_step": steps[0], "phi_step": steps[1]}
    raise ConfigError(f"grid must be 'step' or 'tstepxpstep': got {text!r}")


def _parse_range(text: str, field: str):
    try:
        lo, hi, step = (float(p) for p in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"{field} must be 'lo:hi:step': got {text!r}") from exc
    if step <= 0 or hi < lo:
        raise ConfigError(f"{field} must have hi >= lo and step > 0")
    return [lo, hi, step]


def _flags_to_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.lattice or args.size or args.d_over_lambda is not None:
        lat: dict = {}
        if args.lattice:
            lat["kind"] = args.lattice
        if args.size:
            lat["m"], lat["n"] = _parse_size(args.size)
        if args.d_over_lambda is not None:
            lat["d_over_lambda"] = args.d_over_lambda
        cfg["lattice"] = lat
    if args.incident:
        cfg["incident"] = _parse_angle_pair(args.incident, "--incident")
    if args.target:
        cfg["targets"] = [_parse_angle_pair(t, "--target") for t in args.target]
    if args.bits is not None and args.alphabet:
        raise ConfigError("give either --bits or --alphabet, not both")
    if args.bits is not None:
        cfg["alphabet"] = {"bits": args.bits}
    if args.alphabet:
        cfg["alphabet"] = {"per_element_file": args.alphabet}
    pre: dict = {}
    if args.kappa is not None:
        pre["kappa"] = args.kappa
    if getattr(args, "prephase_file", None):
        pre["file"] = args.prephase_file
    if pre:
        cfg["prephase"] = pre
    if args.seed is not None:
        cfg["seed"] = args.seed
        cfg.setdefault("prephase", {})
    if args.solver:
        cfg["solver"] = args.solver
    if args.grid:
        cfg["grid"] = _parse_grid(args.grid)
    if getattr(args, "cut", None) is not None:
        cfg["cut_phi"] = args.cut
    sweep: dict = {}
    if getattr(args, "sweep_theta", None):
        sweep["theta"] = _parse_range(args.sweep_theta, "--sweep-theta")
    if getattr(args, "sweep_phi", None):
        sweep["phi"] = _parse_range(args.sweep_phi, "--sweep-phi")
    if sweep:
        cfg["sweep"] = sweep
    if getattr(args, "seeds", None) is not None:
        cfg["seeds"] = args.seeds
    if getattr(args, "max_iters", None) is not None:
        cfg["max_iters"] = args.max_iters
    if getattr(args, "tol", None) is not None:
        cfg["tol"] = args.tol
    if args.out:
        cfg["out"] = args.out
    if getattr(args, "simulate", False):
        cfg["simulate"] = True
    if getattr(args, "force", False):
        cfg["force"] = True
    if getattr(args, "cap", None) is not None:
        cfg["cap"] = args.cap
    return cfg


def build_config(args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS)
    if args.config:
        cfg = _merge(cfg, _load_config_file(args.config))
    cfg = _merge(cfg, _flags_to_config(args))
    _check_keys(cfg)
    if "incident" not in cfg:
        raise ConfigError("missing required field 'incident'")
    if args.command != "gl-map" and not cfg.get("targets"):
        raise ConfigError("missing required field 'targets'")
    return cfg


# ---------------------------------------------------------------------------
# scenario assembly

def _build_lattice(cfg: dict) -> Lattice:
    lat = cfg["lattice"]
    kind_name = str(lat.get("kind", "rect"))
    try:
        kind = LatticeKind(kind_name)
    except ValueError as exc:
        raise ConfigError(f"lattice.kind must be 'rect' or 'tri': got {kind_name!r}") from exc
    try:
        return Lattice(
            m_count=int(lat["m"]),
            n_count=int(lat["n"]),
            spacing_over_lambda=float(lat["d_over_lambda"]),
            kind=kind,
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid lattice section: {exc}") from exc


def _direction(pair, field: str) -> Direction:
    try:
        return Direction.from_degrees(float(pair[0]), float(pair[1]))
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"invalid {field}: {exc}") from exc


def _build_alphabet(cfg: dict, count: int):
    alpha = cfg["alphabet"]
    forms = [k for k in ("bits", "set", "per_element_file") if k in alpha]
    if len(forms) != 1:
        raise ConfigError("alphabet needs exactly one of bits | set | per_element_file")
    if "bits" in alpha:
        bits = int(alpha["bits"])
        if not 1 <= bits <= 8:
            raise ConfigError("alphabet.bits must lie in [1, 8]")
        return GlobalSet.from_bits(bits)
    if "set" in alpha:
        members = [complex(re, im) for re, im in alpha["set"]]
        return GlobalSet(tuple(members))
    path = alpha["per_element_file"]
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read alphabet file: {exc}") from exc
    if "set" in data:
        return GlobalSet(tuple(complex(re, im) for re, im in data["set"]))
    if "per_element" not in data:
        raise ConfigError("alphabet file needs a 'set' or 'per_element' entry")
    pairs = data["per_element"]
    if len(pairs) != count:
        raise ConfigError(
            f"alphabet file lists {len(pairs)} cells, lattice has {count}"
        )
    return PerElementBinary.from_pairs(
        [(complex(*pa), complex(*pb)) for pa, pb in pairs]
    )


def _build_prephase(cfg: dict, lattice: Lattice):
    pre = cfg.get("prephase")
    if not pre:
        return None
    if "file" in pre:
        try:
            with open(pre["file"]) as fh:
                return prephase_mod.PrephaseConfig.from_jsonable(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise ConfigError(f"cannot read prephase file: {exc}") from exc
    if "kappa" not in pre:
        return None
    kappa = float(pre["kappa"])
    if not 0.0 <= kappa <= 1.0:
        raise ConfigError("prephase.kappa must lie in [0, 1]")
    seed = int(pre.get("seed", cfg.get("seed", 0)))
    return prephase_mod.build_random_binary_prephase(lattice, kappa, seed)


def _dispatch_solver(name: str, z, alphabet, cap: int):
    values = np.asarray(z)
    is_binary_global = isinstance(alphabet, GlobalSet) and set(alphabet.members) == {
        (1 + 0j),
        (-1 + 0j),
    }
    if name == "auto":
        if isinstance(alphabet, PerElementBinary):
            name = "gopa"
        elif is_binary_global:
            name = "opa"
        else:
            name = "kopa"
    if name == "threshold":
        sets = alphabet if isinstance(alphabet, PerElementBinary) else None
        if sets is None and not is_binary_global:
            raise ConfigError("threshold solver needs a 1-bit or per-element alphabet")
        return "threshold", solvers.threshold_solve(values, sets)
    if name == "opa":
        if not is_binary_global:
            raise ConfigError("opa solves the {1,-1} alphabet; use kopa or gopa")
        return "opa", solvers.opa_solve(values)
    if name == "gopa":
        if isinstance(alphabet, GlobalSet):
            if alphabet.size != 2:
                raise ConfigError("gopa needs binary constraint sets")
            a, b = alphabet.members
            alphabet = PerElementBinary.uniform(a, b, values.size)
        return "gopa", solvers.gopa_solve(values, alphabet)
    if name == "kopa":
        if not isinstance(alphabet, GlobalSet):
            raise ConfigError("kopa needs a global alphabet")
        return "kopa", solvers.kopa_solve(values, alphabet)
    if name == "brute":
        return "brute", solvers.brute_force_solve(values, alphabet, cap=cap)
    raise ConfigError(f"unknown solver {name!r}")


# ---------------------------------------------------------------------------
# output files

def _json_dump(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_weights(path, lattice: Lattice, weights, meta: dict | None = None):
    vals = np.asarray(getattr(weights, "values", weights), dtype=complex)
    ordering = (
        "row-major (m,n), n fastest"
        if lattice.kind is LatticeKind.RECTANGULAR
        else "n-major rows, m fastest within each row"
    )
    payload = {
        "format": "irsbeam-weights-v1",
        "lattice": {
            "kind": lattice.kind.value,
            "m": lattice.m_count,
            "n": lattice.n_count,
            "d_over_lambda": lattice.spacing_over_lambda,
        },
        "ordering": ordering,
        "weights": [[float(w.real), float(w.imag)] for w in vals],
    }
    payload.update(meta or {})
    _json_dump(Path(path), payload)


def read_weights(path):
    with open(path) as fh:
        data = json.load(fh)
    if data.get("format") != "irsbeam-weights-v1":
        raise ConfigError("unrecognised weight file format")
    lat = data["lattice"]
    lattice = Lattice(
        m_count=int(lat["m"]),
        n_count=int(lat["n"]),
        spacing_over_lambda=float(lat["d_over_lambda"]),
        kind=LatticeKind(lat["kind"]),
    )
    weights = np.array([complex(re, im) for re, im in data["weights"]])
    return lattice, weights, data


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _db(x: float) -> float:
    return 20.0 * math.log10(x) if x > 0 else -math.inf


# ---------------------------------------------------------------------------
# commands

def _target_metrics(lattice, weights, incident, targets):
    rows = []
    for tgt in targets:
        g = abs(array_factor(lattice, weights, incident, tgt))
        rows.append(
            {
                "theta_deg": tgt.theta_deg,
                "phi_deg": tgt.phi_deg,
                "g_linear": g,
                "g_db": _db(g),
                "gain_db": analysis.mainlobe_gain(lattice, weights, incident, tgt),
            }
        )
    return rows


def _mainlobe_error(lattice, weights, incident, target):
    span = 12.0
    grid = analysis.sample_pattern(
        lattice,
        weights,
        incident,
        theta_span=(max(-90.0, target.theta_deg - span), min(90.0, target.theta_deg + span)),
        phi_span=(target.phi_deg - span, target.phi_deg + span),
        theta_step=0.1,
        phi_step=0.25,
    )
    found, _ = analysis.find_mainlobe(grid, target)
    return found, analysis.beamforming_error(target, found)


def cmd_solve(cfg: dict, command: str = "solve") -> int:
    lattice = _build_lattice(cfg)
    incident = _direction(cfg["incident"], "incident")
    targets = [_direction(t, f"targets[{i}]") for i, t in enumerate(cfg["targets"])]
    pre_cfg = _build_prephase(cfg, lattice)
    out = Path(cfg["out"])

    start = time.perf_counter()
    if pre_cfg is not None:
        alphabet = prephase_mod.prephase_alphabets(pre_cfg)
        solver_name = "gopa"
        result = prephase_mod.prephase_solve(lattice, incident, targets[0], pre_cfg)
    else:
        alphabet = _build_alphabet(cfg, lattice.element_count)
        z = steering_vector(lattice, incident, targets[0])
        wanted = "brute" if command == "oracle" else cfg["solver"]
        solver_name, result = _dispatch_solver(wanted, z, alphabet, int(cfg["cap"]))
    runtime = time.perf_counter() - start

    found, be_deg = _mainlobe_error(lattice, result.weights, incident, targets[0])
    meta = {
        "incident_deg": [incident.theta_deg, incident.phi_deg],
        "targets_deg": [[t.theta_deg, t.phi_deg] for t in targets],
        "solver": solver_name,
        "rng_seed": pre_cfg.rng_seed if pre_cfg is not None else cfg.get("seed"),
    }
    write_weights(out / "weights.json", lattice, result.weights, meta)
    if pre_cfg is not None:
        _json_dump(out / "prephase.json", pre_cfg.to_jsonable())
    summary = {
        "command": command,
        "solver": solver_name,
        "runtime_s": runtime,
        "lattice": meta_lattice(lattice),
        "incident_deg": meta["incident_deg"],
        "objective": {"value": result.objective, "scale": "unnormalised |sum w_i z_i|"},
        "targets": _target_metrics(lattice, result.weights, incident, targets),
        "mainlobe_deg": [found.theta_deg, found.phi_deg],
        "beamforming_error_deg": be_deg,
        "db_conventions": DB_CONVENTIONS,
    }
    if pre_cfg is not None:
        summary["prephase"] = {"kappa": pre_cfg.kappa, "rng_seed": pre_cfg.rng_seed}
    _json_dump(out / "summary.json", summary)
    print(f"{command}: |G| = {summary['targets'][0]['g_linear']:.6f} "
          f"({summary['targets'][0]['g_db']:.2f} dB) in {runtime:.3f} s -> {out}")
    return 0


def meta_lattice(lattice: Lattice) -> dict:
    return {
        "kind": lattice.kind.value,
        "m": lattice.m_count,
        "n": lattice.n_count,
        "d_over_lambda": lattice.spacing_over_lambda,
        "cell_count": lattice.element_count,
    }


def cmd_pattern(cfg: dict) -> int:
    lattice = _build_lattice(cfg)
    incident = _direction(cfg["incident"], "incident")
    targets = [_direction(t, f"targets[{i}]") for i, t in enumerate(cfg["targets"])]
    pre_cfg = _build_prephase(cfg, lattice)
    out = Path(cfg["out"])

    start = time.perf_counter()
    if pre_cfg is not None:
        result = prephase_mod.prephase_solve(lattice, incident, targets[0], pre_cfg)
        solver_name = "gopa"
    else:
        alphabet = _build_alphabet(cfg, lattice.element_count)
        z = steering_vector(lattice, incident, targets[0])
        solver_name, result = _dispatch_solver(cfg["solver"], z, alphabet, int(cfg["cap"]))

    cut_phi = cfg.get("cut_phi")
    if cut_phi is not None:
        grid = analysis.sample_cut(
            lattice, result.weights, incident, float(cut_phi),
            theta_step=float(cfg["grid"]["cut_step"]),
        )
    else:
        grid = analysis.sample_pattern(
            lattice,
            result.weights,
            incident,
            theta_step=float(cfg["grid"]["theta_step"]),
            phi_step=float(cfg["grid"]["phi_step"]),
        )
    mainlobe, peak = analysis.find_mainlobe(grid, targets[0])
    sll = analysis.sidelobe_level(grid, mainlobe)
    try:
        col = int(np.argmin(np.abs(
            np.mod(np.asarray(grid.phi_deg) - mainlobe.phi_deg + 180.0, 360.0) - 180.0
        )))
        width = analysis.beamwidth_3db(
            grid.theta_deg,
            grid.magnitude[:, col],
            peak_index=int(np.argmin(np.abs(grid.theta_deg - mainlobe.theta_deg))),
        )
    except analysis.UnresolvedWidthError:
        width = None
    runtime = time.perf_counter() - start

    rows = []
    for i, th in enumerate(grid.theta_deg):
        for j, ph in enumerate(grid.phi_deg):
            mag = grid.magnitude[i, j]
            rows.append([f"{th:.6g}", f"{ph:.6g}", repr(float(mag)), f"{_db(mag):.6f}"])
    _write_csv(out / "pattern.csv", ["theta_deg", "phi_deg", "magnitude", "magnitude_db"], rows)
    write_weights(out / "weights.json", lattice, result.weights, {
        "incident_deg": [incident.theta_deg, incident.phi_deg],
        "targets_deg": [[t.theta_deg, t.phi_deg] for t in targets],
        "solver": solver_name,
    })
    summary = {
        "command": "pattern",
        "solver": solver_name,
        "runtime_s": runtime,
        "lattice": meta_lattice(lattice),
        "grid": {
            "theta_points": len(grid.theta_deg),
            "phi_points": len(grid.phi_deg),
        },
        "mainlobe_deg": [mainlobe.theta_deg, mainlobe.phi_deg],
        "mainlobe_magnitude": peak,
        "sll_db": sll,
        "beamwidth_deg": width,
        "beamforming_error_deg": analysis.beamforming_error(targets[0], mainlobe),
        "db_conventions": DB_CONVENTIONS,
    }
    _json_dump(out / "summary.json", summary)
    print(f"pattern: mainlobe at ({mainlobe.theta_deg:.2f}, {mainlobe.phi_deg:.2f}) deg, "
          f"SLL {sll:.2f} dB -> {out}")
    return 0


def cmd_gl_map(cfg: dict) -> int:
    lattice = _build_lattice(cfg)
    incident_spec = cfg["incident"]
    sweep = cfg.get("sweep") or {}
    th_lo, th_hi, th_step = sweep.get("theta", [-90.0, 90.0, 5.0])
    ph_lo, ph_hi, ph_step = sweep.get("phi", [0.0, 90.0, 5.0])
    thetas = np.arange(th_lo, th_hi + th_step / 2, th_step)
    phis = np.arange(ph_lo, ph_hi + ph_step / 2, ph_step)
    predictor = (
        analysis.predict_grating_lobe_rect
        if lattice.kind is LatticeKind.RECTANGULAR
        else analysis.predict_grating_lobe_tri
    )
    out = Path(cfg["out"])

    theory_rows = []
    points = []
    for ph0 in phis:
        for th0 in thetas:
            mainlobe = Direction.from_degrees(th0, ph0)
            incident = Direction.from_degrees(incident_spec[0], ph0 + 180.0)
            pred = predictor(incident, mainlobe, lattice.spacing_over_lambda)
            points.append((incident, mainlobe))
            if pred.exists:
                theory_rows.append([
                    f"{th0:.6g}", f"{ph0:.6g}", 1,
                    f"{pred.lobe_direction.theta_deg:.6f}",
                    f"{pred.lobe_direction.phi_deg:.6f}",
                    pred.integer_pair[0], pred.integer_pair[1],
                ])
            else:
                theory_rows.append([f"{th0:.6g}", f"{ph0:.6g}", 0, "", "", "", ""])
    _write_csv(
        out / "glmap_theory.csv",
        ["theta0_deg", "phi0_deg", "lobe_exists", "theta_star_deg", "phi_star_deg", "a", "b"],
        theory_rows,
    )

    if cfg["simulate"]:
        if len(points) > SIMULATE_POINT_CAP and not cfg["force"]:
            raise CostRefusalError(
                f"simulating {len(points)} sweep points exceeds the cap of "
                f"{SIMULATE_POINT_CAP} (each point solves a "
                f"{lattice.element_count}-cell surface and scans its pattern); "
                f"pass --force to proceed"
            )
        alphabet = _build_alphabet(cfg, lattice.element_count)
        sim_rows = []
        for incident, mainlobe in points:
            z = steering_vector(lattice, incident, mainlobe)
            _, result = _dispatch_solver(cfg["solver"], z, alphabet, int(cfg["cap"]))
            sll = analysis.uv_sidelobe_level(
                lattice, result.weights, incident, mainlobe, grid_size=256
            )
            sim_rows.append([
                f"{mainlobe.theta_deg:.6g}", f"{mainlobe.phi_deg:.6g}", f"{sll:.4f}",
            ])
        _write_csv(out / "glmap_sim.csv", ["theta0_deg", "phi0_deg", "sll_db"], sim_rows)

    n_lobes = sum(1 for r in theory_rows if r[2] == 1)
    print(f"gl-map: {n_lobes}/{len(theory_rows)} sweep points predict a grating lobe -> {out}")
    return 0


def cmd_multibeam(cfg: dict) -> int:
    lattice = _build_lattice(cfg)
    incident = _direction(cfg["incident"], "incident")
    targets = [_direction(t, f"targets[{i}]") for i, t in enumerate(cfg["targets"])]
    if len(targets) < 2:
        raise ConfigError("multibeam needs at least two --target directions")
    alphabet = _build_alphabet(cfg, lattice.element_count)
    out = Path(cfg["out"])

    start = time.perf_counter()
    zs = [steering_vector(lattice, incident, t) for t in targets]
    seeds = solvers.default_cophase_seeds(len(targets), points=int(cfg["seeds"]))
    result = solvers.multibeam_solve(
        zs, alphabet, seeds=seeds,
        max_iters=int(cfg["max_iters"]), tol=float(cfg["tol"]),
    )
    runtime = time.perf_counter() - start

    conv_rows = []
    for s_idx, history in enumerate(result.histories):
        for k, (inner, total) in enumerate(history, start=1):
            conv_rows.append([s_idx, k, repr(inner), repr(total)])
    _write_csv(
        out / "convergence.csv",
        ["seed_index", "iteration", "cophased_objective", "beam_sum"],
        conv_rows,
    )
    write_weights(out / "weights.json", lattice, result.weights, {
        "incident_deg": [incident.theta_deg, incident.phi_deg],
        "targets_deg": [[t.theta_deg, t.phi_deg] for t in targets],
        "solver": "multibeam",
    })
    target_rows = _target_metrics(lattice, result.weights, incident, targets)
    lobes = []
    for tgt in targets:
        found, err = _mainlobe_error(lattice, result.weights, incident, tgt)
        lobes.append({
            "target_deg": [tgt.theta_deg, tgt.phi_deg],
            "mainlobe_deg": [found.theta_deg, found.phi_deg],
            "beamforming_error_deg": err,
        })
    summary = {
        "command": "multibeam",
        "runtime_s": runtime,
        "lattice": meta_lattice(lattice),
        "incident_deg": [incident.theta_deg, incident.phi_deg],
        "objective": {"value": result.objective, "scale": "unnormalised sum_j |G_j|"},
        "best_seed": result.best_seed,
        "converged": result.converged,
        "targets": target_rows,
        "mainlobes": lobes,
        "db_conventions": DB_CONVENTIONS,
    }
    _json_dump(out / "summary.json", summary)
    print(f"multibeam: best seed {result.best_seed}, beam sum {result.objective:.4f} "
          f"in {runtime:.2f} s -> {out}")
    return 0


# ---------------------------------------------------------------------------
# entry point

def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--lattice", choices=["rect", "tri"])
    parser.add_argument("--size", help="lattice extents, e.g. 30x30")
    parser.add_argument("--d-over-lambda", type=float, dest="d_over_lambda")
    parser.add_argument("--incident", help="'theta,phi' in degrees")
    parser.add_argument("--target", action="append", help="'theta,phi' in degrees; repeatable")
    parser.add_argument("--bits", type=int, help="equispaced alphabet with 2^bits phases")
    parser.add_argument("--alphabet", help="JSON alphabet file")
    parser.add_argument("--kappa", type=float, help="random two-prephase fraction")
    parser.add_argument("--seed", type=int, help="seed for any randomised choice")
    parser.add_argument("--solver", choices=["auto", "threshold", "opa", "gopa", "kopa", "brute"])
    parser.add_argument("--grid", help="pattern steps in degrees: 'step' or 'tstepxpstep'")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--cap", type=int, help="enumeration cap for brute force")


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irsbeam",
        description="Discrete beamforming and grating-lobe analysis for reflecting surfaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="optimal weights toward one target")
    p_pattern = sub.add_parser("pattern", help="solve, then sample the radiation pattern")
    p_pattern.add_argument("--cut", type=float, help="1-D theta cut at this phi (degrees)")
    p_glmap = sub.add_parser("gl-map", help="grating-lobe existence map over target sweeps")
    p_glmap.add_argument("--sweep-theta", help="'lo:hi:step' in degrees")
    p_glmap.add_argument("--sweep-phi", help="'lo:hi:step' in degrees")
    p_glmap.add_argument("--simulate", action="store_true",
                         help="also simulate the per-point sidelobe level")
    p_glmap.add_argument("--force", action="store_true",
                         help="ignore the sweep cost cap")
    p_multi = sub.add_parser("multibeam", help="joint beamforming toward several targets")
    p_multi.add_argument("--seeds", type=int, help="co-phasing grid points per dimension")
    p_multi.add_argument("--max-iters", type=int, dest="max_iters")
    p_multi.add_argument("--tol", type=float)
    p_pre = sub.add_parser("prephase", help="solve under a prephase partition")
    p_pre.add_argument("--prephase-file", dest="prephase_file",
                       help="JSON prephase spec (list of psi + assignment)")
    p_oracle = sub.add_parser("oracle", help="exhaustive-search reference solution")

    for p in (p_solve, p_pattern, p_glmap, p_multi, p_pre, p_oracle):
        _add_common(p)
    return parser


def main(argv=None) -> int:
    parser = _make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "pattern":
            return cmd_pattern(cfg)
        if args.command == "gl-map":
            return cmd_gl_map(cfg)
        if args.command == "multibeam":
            return cmd_multibeam(cfg)
        if args.command == "prephase":
            if not cfg.get("prephase"):
                raise ConfigError("prephase needs --kappa (with --seed) or --prephase-file")
            return cmd_solve(cfg, command="prephase")
        if args.command == "oracle":
            return cmd_solve(cfg, command="oracle")
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (solvers.CapExceededError, CostRefusalError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 3
    except (analysis.UnresolvedWidthError, ArithmeticError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
