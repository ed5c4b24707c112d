"""Command-line entry point: ``ldflows run <command> config.toml``.

Each command reads one declarative TOML file, calls the matching library
function and writes ``<command>-<hash>.csv`` and/or ``<command>-<hash>.json``
into the output directory, where ``<hash>`` identifies the effective
configuration. Outputs carry no timestamps, so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy
import tomli
import tomli_w

from . import __version__
from .convergence import (bridge_experiment, ldp_tube_experiment, lln_experiment, mosco_quadratic_experiment,
                          mosco_ri_experiment, shifted_reference)
from .curves import BVCurve, SampledCurve
from .dissipation import DissipationFamily, check_conditions
from .energy import make_builtin, make_wiggly
from .errors import ConfigError, LDFlowsError
from .flows import solve_dissipative_flow, solve_generalized_flow, solve_quadratic_flow, solve_rate_independent
from .functionals import action_J_alpha_beta, action_J_Q, action_J_RI
from .io import curve_to_csv, dumps_json, read_curve, rows_to_csv
from .stochastic import (estimate_escape_rates, simulate_jump_ensemble, simulate_jump_process,
                         simulate_langevin_wiggly, simulate_sde)

__all__ = ["main", "load_config", "dump_config", "config_hash", "COMMANDS"]


# ---------------------------------------------------------------------------
# config handling


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config does not parse: {exc}") from exc


def dump_config(config: dict) -> str:
    return tomli_w.dumps(config)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _block(cfg, name) -> dict:
    blk = cfg.get(name, {})
    if not isinstance(blk, dict):
        raise ConfigError(f"[{name}] must be a table")
    return blk


def _need(blk, key, where, cast=float):
    if key not in blk:
        raise ConfigError(f"missing '{key}' in [{where}]")
    try:
        return cast(blk[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for '{key}' in [{where}]: {blk[key]!r}") from exc


def _landscape(cfg):
    blk = dict(_block(cfg, "landscape"))
    name = blk.pop("id", None)
    if name is None:
        raise ConfigError("missing 'id' in [landscape]")
    if name == "custom":
        raise ConfigError("custom landscapes need Python callables and are library-only")
    try:
        return make_builtin(name, **blk)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _family(cfg):
    blk = dict(_block(cfg, "dissipation"))
    tag = blk.pop("tag", None)
    if tag is None:
        raise ConfigError("missing 'tag' in [dissipation]")
    try:
        return DissipationFamily(tag, beta=float(blk.get("beta", 1.0)), alpha=blk.get("alpha"),
                                 omega=blk.get("omega"), threshold=float(blk.get("threshold", 0.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _seed(cfg, override):
    if override is not None:
        return int(override)
    run = _block(cfg, "run")
    if "seed" not in run:
        raise ConfigError("stochastic commands need 'seed' in [run]")
    return int(run["seed"])


def _exclusive(regime, allowed: set[str], command: str):
    groups = {"alpha": "alpha/beta", "beta": "alpha/beta", "omega": "omega", "A": "A"}
    present = {k for k in groups if k in regime}
    extra = present - allowed
    if extra:
        raise ConfigError(f"command '{command}' does not take {sorted(extra)} in [regime]")


def _test_curve(cfg, landscape):
    blk = _block(cfg, "input")
    spec = blk.get("curve")
    if spec is None:
        raise ConfigError("missing 'curve' in [input]")
    if isinstance(spec, str):
        return read_curve(spec)
    kind = spec.get("kind", "line")
    T = float(spec.get("T", landscape.horizon))
    t = np.linspace(0.0, T, int(spec.get("points", 1001)))
    x0 = float(spec.get("x0", 0.0))
    if kind == "line":
        x = x0 + float(spec.get("slope", 0.0)) * t
    elif kind == "sine":
        x = x0 + float(spec.get("amplitude", 0.1)) * np.sin(2 * math.pi * float(spec.get("frequency", 1.0)) * t / T)
    else:
        raise ConfigError(f"unknown test curve kind {kind!r}")
    return SampledCurve(t, x)


# ---------------------------------------------------------------------------
# commands; each returns (csv_text or None, json_payload or None, flags)


def _cmd_simulate(cfg, seed):
    L = _landscape(cfg)
    rg, run = _block(cfg, "regime"), _block(cfg, "run")
    _exclusive(rg, {"alpha", "beta"}, "simulate")
    n, a, b = _need(rg, "n", "regime", int), _need(rg, "alpha", "regime"), _need(rg, "beta", "regime")
    T = float(run.get("T", L.horizon))
    x0 = float(run.get("x0", 0.0))
    path = simulate_jump_process(L, n, a, b, x0, T, seed)
    payload = {"event_count": path.event_count, "end_value": path.end_value(), "exited": path.exited,
               "exit_time": path.exit_time}
    if int(run.get("replicas", 1)) >= 2:
        stats = simulate_jump_ensemble(L, n, a, b, x0, T, int(run["replicas"]), seed)
        payload["ensemble"] = stats.to_dict()
    return rows_to_csv(["t", "x"], path.csv_rows()), payload, {"exited": path.exited}


def _cmd_sde(cfg, seed):
    L = _landscape(cfg)
    rg, run = _block(cfg, "regime"), _block(cfg, "run")
    _exclusive(rg, {"omega"}, "sde")
    p = simulate_sde(L, _need(rg, "omega", "regime"), _need(rg, "h", "regime"), float(run.get("x0", 0.0)),
                     float(run.get("T", L.horizon)), _need(run, "dt", "run"), seed)
    return rows_to_csv(["t", "x"], zip(p.grid, p.values)), {"flags": p.flags}, p.flags


def _cmd_langevin(cfg, seed):
    L = _landscape(cfg)
    rg, run = _block(cfg, "regime"), _block(cfg, "run")
    _exclusive(rg, {"beta"}, "langevin")
    W = make_wiggly(L, _need(rg, "n", "regime", int), float(rg.get("amplitude", 1.0)))
    beta = _need(rg, "beta", "regime")
    p = simulate_langevin_wiggly(W, beta, float(run.get("T", L.horizon)), run.get("dt"), seed,
                                 run.get("x0"))
    payload = {"flags": p.flags, "kramers_prefactor": W.kramers_prefactor}
    try:
        left, right = estimate_escape_rates(p, W)
        payload["rates"] = {"left": left, "right": right}
    except LDFlowsError as exc:
        payload["rates"] = {"error": type(exc).__name__, "message": str(exc)}
    return rows_to_csv(["t", "x"], zip(p.grid, p.values)), payload, p.flags


def _cmd_flow(cfg, seed):
    L = _landscape(cfg)
    rg, run = _block(cfg, "regime"), _block(cfg, "run")
    T = float(run.get("T", L.horizon))
    x0 = float(run.get("x0", 0.0))
    tol = float(run.get("tol", 1e-8))
    if "dissipation" in cfg:
        curve = solve_dissipative_flow(L, _family(cfg), x0, T, tol)
    elif "omega" in rg:
        _exclusive(rg, {"omega"}, "flow")
        curve = solve_quadratic_flow(L, float(rg["omega"]), x0, T, tol)
    else:
        _exclusive(rg, {"alpha", "beta"}, "flow")
        curve = solve_generalized_flow(L, _need(rg, "alpha", "regime"), _need(rg, "beta", "regime"), x0, T, tol)
    return curve_to_csv(curve), {"flags": curve.flags, "end_value": float(curve.x[-1])}, curve.flags


def _cmd_ri_flow(cfg, seed):
    L = _landscape(cfg)
    rg, run = _block(cfg, "regime"), _block(cfg, "run")
    _exclusive(rg, {"A"}, "ri-flow")
    bv = solve_rate_independent(L, _need(rg, "A", "regime"), float(run.get("x0", 0.0)),
                                float(run.get("T", L.horizon)), run.get("dt_load"))
    jumps = [j.__dict__ for j in bv.jumps]
    return curve_to_csv(bv), {"jumps": jumps, "total_variation": bv.total_variation}, {}


def _cmd_action(cfg, seed):
    L = _landscape(cfg)
    rg = _block(cfg, "regime")
    curve = _test_curve(cfg, L)
    fn = _block(cfg, "input").get("functional")
    if fn is None:
        fn = "J_RI" if "A" in rg else ("J_Q" if "omega" in rg else "J_alpha_beta")
    if fn == "J_RI":
        _exclusive(rg, {"A"}, "action")
        bv = curve if isinstance(curve, BVCurve) else BVCurve(curve.t, curve.x)
        rep = action_J_RI(bv, L, _need(rg, "A", "regime"))
    elif fn == "J_Q":
        _exclusive(rg, {"omega"}, "action")
        rep = action_J_Q(curve, L, _need(rg, "omega", "regime"))
    elif fn == "J_alpha_beta":
        _exclusive(rg, {"alpha", "beta"}, "action")
        rep = action_J_alpha_beta(curve, L, _need(rg, "alpha", "regime"), _need(rg, "beta", "regime"))
    else:
        raise ConfigError(f"unknown functional {fn!r}")
    return None, rep.to_dict(), {}


def _cmd_mosco_q(cfg, seed):
    L = _landscape(cfg)
    rg = _block(cfg, "regime")
    _exclusive(rg, {"omega"}, "mosco-q")
    tab = mosco_quadratic_experiment(L, _test_curve(cfg, L), _need(rg, "omega", "regime"),
                                     _need(rg, "beta_list", "regime", list))
    return tab.to_csv(), tab.to_dict(), {}


def _cmd_mosco_ri(cfg, seed):
    L = _landscape(cfg)
    rg, run = _block(cfg, "regime"), _block(cfg, "run")
    if "alpha" in rg or "alpha" in _block(cfg, "dissipation"):
        raise ConfigError("mosco-ri ties alpha = exp(-beta A); do not set alpha")
    _exclusive(rg, {"A", "beta"}, "mosco-ri")
    A = _need(rg, "A", "regime")
    tag = _block(cfg, "dissipation").get("tag", "cosh")
    template = DissipationFamily(tag, beta=1.0, threshold=A)
    if "input" in cfg:
        bv = _test_curve(cfg, L)
        if not isinstance(bv, BVCurve):
            bv = BVCurve(bv.t, bv.x)
    else:
        bv = solve_rate_independent(L, A, float(run.get("x0", 0.0)), float(run.get("T", L.horizon)),
                                    run.get("dt_load"))
    tab = mosco_ri_experiment(L, bv, template, _need(rg, "beta_list", "regime", list))
    return tab.to_csv(), tab.to_dict(), {}


def _cmd_lln(cfg, seed):
    L = _landscape(cfg)
    rg, run = _block(cfg, "regime"), _block(cfg, "run")
    _exclusive(rg, {"alpha", "beta"}, "lln")
    tab = lln_experiment(L, _need(rg, "n_list", "regime", list), _need(rg, "alpha", "regime"),
                         _need(rg, "beta", "regime"), _need(run, "replicas", "run", int), seed,
                         float(run.get("x0", 0.0)), float(run.get("T", L.horizon)))
    return tab.to_csv(), tab.to_dict(), {}


def _cmd_bridge(cfg, seed):
    L = _landscape(cfg)
    rg, run = _block(cfg, "regime"), _block(cfg, "run")
    _exclusive(rg, {"omega"}, "bridge")
    window = run.get("window")
    tab = bridge_experiment(L, _need(rg, "n_list", "regime", list), _need(rg, "delta", "regime"),
                            _need(rg, "omega", "regime"), rg.get("h"), _need(run, "replicas", "run", int), seed,
                            float(run.get("x0", 0.0)), float(run.get("T", L.horizon)),
                            tuple(window) if window else None, run.get("dt"))
    return tab.to_csv(), tab.to_dict(), {}


def _cmd_ldp(cfg, seed):
    L = _landscape(cfg)
    rg, run = _block(cfg, "regime"), _block(cfg, "run")
    _exclusive(rg, {"alpha", "beta"}, "ldp")
    alpha, beta = _need(rg, "alpha", "regime"), _need(rg, "beta", "regime")
    x0 = float(run.get("x0", 0.0))
    T = float(run.get("T", L.horizon))
    radius = _need(run, "tube_radius", "run")
    shift = float(run.get("shift", 2.0 * radius))
    reference = shifted_reference(L, alpha, beta, x0, T, shift)
    tab = ldp_tube_experiment(L, _need(rg, "n_list", "regime", list), alpha, beta, reference, radius,
                              _need(run, "replicas", "run", int), seed, x0)
    return tab.to_csv(), tab.to_dict(), {}


def _cmd_check_dissipation(cfg, seed):
    rg = _block(cfg, "regime")
    report = check_conditions(_family(cfg), _need(rg, "beta_list", "regime", list),
                              float(rg.get("M", 1.0)), _need(rg, "R", "regime"))
    return None, report, {}


COMMANDS: dict[str, tuple[Callable, bool]] = {
    "simulate": (_cmd_simulate, True),
    "sde": (_cmd_sde, True),
    "langevin": (_cmd_langevin, True),
    "flow": (_cmd_flow, False),
    "ri-flow": (_cmd_ri_flow, False),
    "action": (_cmd_action, False),
    "mosco-q": (_cmd_mosco_q, False),
    "mosco-ri": (_cmd_mosco_ri, False),
    "lln": (_cmd_lln, True),
    "bridge": (_cmd_bridge, True),
    "ldp": (_cmd_ldp, True),
    "check-dissipation": (_cmd_check_dissipation, False),
}


def _versions():
    return {"ldflows": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run(command: str, config_path, out=None, seed_override=None, strict=False) -> int:
    """Execute one command; returns the process exit status."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {sorted(COMMANDS)}")
    cfg = load_config(config_path)
    func, stochastic = COMMANDS[command]
    seed = _seed(cfg, seed_override) if stochastic else None
    effective = json.loads(json.dumps(cfg, default=str))
    if seed is not None:
        effective.setdefault("run", {})["seed"] = seed
    digest = config_hash({"command": command, "config": effective})
    out_dir = Path(out if out is not None else _block(cfg, "output").get("directory", "."))
    formats = _block(cfg, "output").get("formats", ["csv", "json"])
    csv_text, payload, flags = func(cfg, seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"command": command, "config": effective, "config_hash": digest, "seed": seed,
                "versions": _versions()}
    written = []
    if csv_text is not None and "csv" in formats:
        p = out_dir / f"{command}-{digest}.csv"
        p.write_text(csv_text)
        written.append(str(p))
    doc = {"manifest": manifest, "result": payload}
    p = out_dir / f"{command}-{digest}.json"
    p.write_text(dumps_json(doc))
    written.append(str(p))
    print(json.dumps({"status": "ok", "outputs": written}))
    if strict and flags and flags.get("exited"):
        sys.stderr.write(json.dumps({"error": "DomainExit", "message": "trajectory left the domain",
                                     "flags": flags}, default=str) + "\n")
        return 3
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ldflows", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run one command from a config file")
    r.add_argument("command", choices=sorted(COMMANDS))
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory (overrides [output].directory)")
    r.add_argument("--seed", type=int, default=None, help="override [run].seed")
    r.add_argument("--strict", action="store_true", help="nonzero exit when a trajectory leaves the domain")
    args = parser.parse_args(argv)
    try:
        return run(args.command, args.config, args.out, args.seed, args.strict)
    except ConfigError as exc:
        sys.stderr.write(json.dumps({"error": "ConfigError", "message": str(exc)}) + "\n")
        return 2
    except (LDFlowsError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
