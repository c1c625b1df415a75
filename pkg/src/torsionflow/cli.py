"""Command-line interface.

Subcommands:

  run       march the flow from a JSON config; writes series.csv,
            final.json, optional snapshots/, and manifest.json
  measure   one torsion solve on the configured initial body; prints
            rigidity estimates and the boundary measure density
  residual  evaluate the stationarity defect for given support samples
  verify    run self-check suites and report pass/fail

Outputs are byte-identical across identical invocations: every float is
written with repr-precision, dictionaries are sorted, and the only
wall-clock content (a timestamp) lives in manifest.json.  The exit code
of `run` encodes the stop reason (0 converged, 2 step budget, 3 lost
convexity/positivity, 4 solver failure); config errors exit 1.

The environment variable TORSIONFLOW_OUT provides the default output
location when --out is not given.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import ConfigError, TorsionFlowError, UnknownSuite
from .flow import SERIES_FIELDS, FlowConfig, FlowResult, run
from .geometry import SupportFunction, angle_grid, build_body
from .orlicz import OrliczFamily, power, table
from .torsion import build_mesh, solve_torsion, torsional_measure_density
from .validation import check_density, check_support
from .verify import run_suite

EXIT_BY_STOP = {
    "Converged": 0,
    "MaxSteps": 2,
    "ConvexityLoss": 3,
    "PositivityLoss": 3,
    "SolverFailure": 4,
}

DEFAULTS = {
    "mode": "plain",
    "psi": {"kind": "power", "p": 3.0},
    "epsilon": 0.1,
    "f": {"kind": "const", "c": 1.0},
    "initial": {"kind": "disk", "radius": 1.0},
    "grid": {"n_theta": 64, "n_radial": 32},
    "stepping": {"dt0": 1e-3, "dt_max": 2e-3, "delta_max": None, "safety": 0.5},
    "renormalize_T": True,
    "q_floor": None,
    "stop": {"residual_tol": 1e-4, "t_max": None, "max_steps": 1000000},
    "output": {"snapshot_every": 0},
    "allow_degenerate_plain": False,
}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _merge_section(raw: dict, path: str) -> dict:
    base = dict(DEFAULTS[path]) if path in DEFAULTS else {}
    given = raw.get(path, {})
    if not isinstance(given, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in given:
        if key not in base and path in ("grid", "stepping", "stop", "output"):
            raise ConfigError(f"{path}.{key}: unknown field")
    base.update(given)
    return base


def _load_table_csv(path: str, n_theta: int, what: str) -> np.ndarray:
    """Read 'theta,value' rows; the angles must match the run grid."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as err:
        raise ConfigError(f"{what}.path: cannot read {path!r}: {err}") from err
    except ValueError as err:
        raise ConfigError(f"{what}.path: malformed CSV {path!r}: {err}") from err
    if data.shape[1] != 2 or data.shape[0] != n_theta:
        raise ConfigError(
            f"{what}.path: expected {n_theta} 'theta,value' rows, "
            f"got shape {data.shape}"
        )
    if np.max(np.abs(data[:, 0] - angle_grid(n_theta))) > 1e-9:
        raise ConfigError(
            f"{what}.path: theta column does not match the uniform "
            f"grid of {n_theta} angles"
        )
    return data[:, 1]


def _build_family(node) -> OrliczFamily:
    if not isinstance(node, dict) or "kind" not in node:
        raise ConfigError("psi: expected an object with a 'kind' field")
    kind = node["kind"]
    if kind == "power":
        try:
            return power(float(node.get("p", 3.0)))
        except (TypeError, ValueError) as err:
            raise ConfigError(f"psi.p: {err}") from err
    if kind == "table":
        try:
            return table(node["s"], node["values"], node.get("class", "B"))
        except KeyError as err:
            raise ConfigError(f"psi.{err.args[0]}: required for tables") from err
        except (TypeError, ValueError, TorsionFlowError) as err:
            raise ConfigError(f"psi: {err}") from err
    raise ConfigError(f"psi.kind: expected 'power' or 'table', got {kind!r}")


def _build_density(node, n_theta: int) -> np.ndarray:
    if not isinstance(node, dict) or "kind" not in node:
        raise ConfigError("f: expected an object with a 'kind' field")
    kind = node["kind"]
    if kind == "const":
        f = np.full(n_theta, float(node.get("c", 1.0)))
    elif kind == "cosine":
        c = float(node.get("c", 1.0))
        a = float(node.get("a", 0.0))
        k = int(node.get("k", 2))
        f = c * (1.0 + a * np.cos(k * angle_grid(n_theta)))
    elif kind == "table":
        f = _load_table_csv(node.get("path", ""), n_theta, "f")
    else:
        raise ConfigError(
            f"f.kind: expected 'const', 'cosine' or 'table', got {kind!r}"
        )
    return check_density(f, n_theta)


def _build_initial(node, n_theta: int) -> SupportFunction:
    if not isinstance(node, dict) or "kind" not in node:
        raise ConfigError("initial: expected an object with a 'kind' field")
    kind = node["kind"]
    if kind == "disk":
        h = SupportFunction.disk(float(node.get("radius", 1.0)), n_theta)
    elif kind == "ellipse":
        h = SupportFunction.ellipse(
            float(node.get("a", 1.2)), float(node.get("b", 1.0)), n_theta
        )
    elif kind == "translated_disk":
        h = SupportFunction.translated_disk(
            float(node.get("radius", 1.0)),
            (float(node.get("cx", 0.0)), float(node.get("cy", 0.0))),
            n_theta,
        )
    elif kind == "table":
        h = check_support(_load_table_csv(node.get("path", ""), n_theta,
                                          "initial"), n_theta)
    else:
        raise ConfigError(
            "initial.kind: expected 'disk', 'ellipse', 'translated_disk' "
            f"or 'table', got {kind!r}"
        )
    return h


def parse_config(path: str):
    """Load and validate a JSON run config.

    Returns (FlowConfig, resolved dict echoing every applied value).
    Raises ConfigError naming the offending field.
    """
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as err:
        raise ConfigError(f"config: cannot read {path!r}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config: invalid JSON in {path!r}: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be an object")
    for key in raw:
        if key not in DEFAULTS:
            raise ConfigError(f"{key}: unknown field")

    grid = _merge_section(raw, "grid")
    stepping = _merge_section(raw, "stepping")
    stop = _merge_section(raw, "stop")
    output = _merge_section(raw, "output")
    mode = raw.get("mode", DEFAULTS["mode"])
    psi_node = raw.get("psi", DEFAULTS["psi"])
    f_node = raw.get("f", DEFAULTS["f"])
    init_node = raw.get("initial", DEFAULTS["initial"])

    try:
        n_theta = int(grid["n_theta"])
        n_radial = int(grid["n_radial"])
    except (TypeError, ValueError) as err:
        raise ConfigError(f"grid: {err}") from err

    family = _build_family(psi_node)
    f_samples = _build_density(f_node, n_theta)
    try:
        h0 = _build_initial(init_node, n_theta)
    except ConfigError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigError(f"initial: {err}") from err

    t_max = stop.get("t_max")
    config = FlowConfig(
        family=family,
        f_samples=f_samples,
        h0=h0,
        mode=mode,
        epsilon=float(raw.get("epsilon", DEFAULTS["epsilon"])),
        n_radial=n_radial,
        dt0=float(stepping["dt0"]),
        dt_max=float(stepping["dt_max"]),
        delta_max=None if stepping["delta_max"] is None
        else float(stepping["delta_max"]),
        safety=float(stepping["safety"]),
        renormalize=bool(raw.get("renormalize_T", DEFAULTS["renormalize_T"])),
        q_floor=None if raw.get("q_floor", DEFAULTS["q_floor"]) is None
        else float(raw["q_floor"]),
        residual_tol=float(stop["residual_tol"]),
        t_max=float("inf") if t_max is None else float(t_max),
        max_steps=int(stop["max_steps"]),
        snapshot_every=int(output["snapshot_every"]),
        allow_degenerate_plain=bool(
            raw.get("allow_degenerate_plain", DEFAULTS["allow_degenerate_plain"])
        ),
    )

    resolved = {
        "mode": mode,
        "psi": psi_node,
        "epsilon": config.epsilon,
        "f": f_node,
        "initial": init_node,
        "grid": {"n_theta": n_theta, "n_radial": n_radial},
        "stepping": stepping,
        "renormalize_T": config.renormalize,
        "q_floor": config.q_floor,
        "stop": {"residual_tol": config.residual_tol, "t_max": t_max,
                 "max_steps": config.max_steps},
        "output": output,
        "allow_degenerate_plain": config.allow_degenerate_plain,
    }
    return config, resolved


def _write_series(path: str, series: np.ndarray):
    with open(path, "w") as fh:
        fh.write(",".join(SERIES_FIELDS) + "\n")
        for row in series:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _write_polyline(path: str, points: np.ndarray):
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for x, y in points:
            fh.write(f"{_fmt(x)},{_fmt(y)}\n")


def _json_dump(obj, path: str):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_run_outputs(out_dir: str, result: FlowResult, resolved: dict):
    os.makedirs(out_dir, exist_ok=True)
    _write_series(os.path.join(out_dir, "series.csv"), result.series)
    final = {
        "stop_reason": result.stop_reason,
        "steps": result.steps,
        "gamma": result.gamma,
        "eta": result.eta,
        "T0": result.t0,
        "theta": [float(t) for t in result.final_h.theta],
        "h": [float(v) for v in result.final_h.samples],
        "diagnostics": result.diagnostics,
    }
    _json_dump(final, os.path.join(out_dir, "final.json"))
    if result.snapshots:
        snap_dir = os.path.join(out_dir, "snapshots")
        os.makedirs(snap_dir, exist_ok=True)
        for step, points in result.snapshots:
            _write_polyline(
                os.path.join(snap_dir, f"step_{step:08d}.csv"), points
            )
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    manifest = {
        "config": resolved,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    _json_dump(manifest, os.path.join(out_dir, "manifest.json"))


def _default_out(given, fallback: str) -> str:
    if given:
        return given
    return os.environ.get("TORSIONFLOW_OUT", fallback)


def _cmd_run(args) -> int:
    config, resolved = parse_config(args.config)
    result = run(config)
    out_dir = _default_out(args.out, "out")
    _write_run_outputs(out_dir, result, resolved)
    print(f"{result.stop_reason} after {result.steps} steps; "
          f"residual {result.diagnostics['residual_sup']:.3e}; "
          f"outputs in {out_dir}")
    return EXIT_BY_STOP[result.stop_reason]


def _cmd_measure(args) -> int:
    config, _ = parse_config(args.config)
    body = build_body(config.h0)
    sol = solve_torsion(build_mesh(body, config.n_radial))
    m = torsional_measure_density(body, sol)
    payload = {
        "T_volume": sol.t_volume,
        "T_work": sol.t_work,
        "T_boundary": sol.t_boundary,
        "q": [float(v) for v in sol.q],
        "m": [float(v) for v in m],
        "cg_iterations": sol.cg_iterations,
        "q_recovery_deviation": sol.q_deviation,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    out_dir = _default_out(args.out, "")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        _json_dump(payload, os.path.join(out_dir, "measure.json"))
        _write_polyline(os.path.join(out_dir, "boundary.csv"), body.boundary)
    return 0


def _cmd_residual(args) -> int:
    from .flow import eta as eta_of, residual_profile

    config, _ = parse_config(args.config)
    h = check_support(
        _load_table_csv(args.h, config.h0.n_theta, "h"), config.h0.n_theta
    )
    body = build_body(h)
    sol = solve_torsion(build_mesh(body, config.n_radial))
    psi_h = config.psi_star(body.h)
    gamma = args.gamma
    if gamma is None:
        gamma = 1.0 / eta_of(config.f_samples, psi_h, sol.t_boundary)
    profile, sup_rel = residual_profile(
        body, sol, config.f_samples, psi_h, gamma
    )
    print(json.dumps({
        "gamma": float(gamma),
        "sup_rel": sup_rel,
        "profile": [float(v) for v in profile],
    }, indent=2, sort_keys=True))
    return 0


def _cmd_verify(args) -> int:
    reports = run_suite(args.suite)
    width = max(len(r.name) for r in reports)
    for r in reports:
        flag = "PASS" if r.passed else "FAIL"
        print(f"{flag}  {r.name:<{width}}  measured={r.measured:.6g}  "
              f"expected={r.expected:.6g}  tol={r.tolerance:g} ({r.metric}, "
              f"{r.provenance})")
    failed = [r for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed")
    out = _default_out(args.out, "")
    if out:
        _json_dump([r.to_dict() for r in reports], out)
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="torsionflow",
        description="Normalized support-function flow for the planar "
                    "Orlicz-Minkowski problem for torsional rigidity",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="march a flow from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", help="output directory (default: "
                                     "$TORSIONFLOW_OUT or ./out)")
    p_run.set_defaults(func=_cmd_run)

    p_meas = sub.add_parser("measure",
                            help="torsional measure of the configured body")
    p_meas.add_argument("--config", required=True)
    p_meas.add_argument("--out", help="also write measure.json/boundary.csv here")
    p_meas.set_defaults(func=_cmd_measure)

    p_res = sub.add_parser("residual",
                           help="stationarity defect of given support samples")
    p_res.add_argument("--config", required=True)
    p_res.add_argument("--h", required=True,
                       help="CSV of theta,h rows on the run grid")
    p_res.add_argument("--gamma", type=float,
                       help="multiplier (default: self-consistent 1/eta)")
    p_res.set_defaults(func=_cmd_residual)

    p_ver = sub.add_parser("verify", help="run self-check suites")
    p_ver.add_argument("--suite", default="all",
                       help="suite name or 'all' (default)")
    p_ver.add_argument("--out", help="write the JSON report here")
    p_ver.set_defaults(func=_cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except UnknownSuite as err:
        print(f"error: {err.args[0]}", file=sys.stderr)
        return 1
    except TorsionFlowError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
