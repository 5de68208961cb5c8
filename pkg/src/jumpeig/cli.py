"""Command-line front end.

    jumpeig <command> --config run.json [--out path] [--format csv|json]
                      [--seed N] [--assert]

Every command produces a table (``columns`` + ``rows``) plus a free-form
``summary``. CSV output holds the table only; JSON output holds all three and
regenerates the identical CSV through :func:`json_to_csv`. Floats are written
with 17 significant digits. Errors go to stderr as a JSON object and give
exit status 1; failed ``--assert`` checks give exit status 3.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import asym, bvp, degenerate, eigen, mc
from .errors import InvalidArgument, JumpEigError
from .model import (JUMP_PRESETS, RATE_PRESETS, build_grid, build_jump_measure,
                    build_rate_field)

COMMANDS = ("solve", "sweep", "constant", "diagnose", "simulate", "fk-check", "degenerate")
CONFIG_METHODS = ("auto", "fixed_point", "matrix", "both")
SWEEP_COLUMNS = ("gamma", "h", "lambda0", "lambda0_richardson", "scaled", "k",
                 "method", "iterations", "residual")

_SCHEMA = {
    "grid": {"n", "nodes_per_layer", "layer_power"},
    "rate": {"preset", "slope", "coeffs"},
    "jump": {"preset", "k", "location", "components"},
    "mc": {"n_paths", "dt", "t_list", "seed", "x0", "x0_list", "lambda", "horizon"},
    "diagnose": {"epsilon"},
    "degenerate": {"check_gammas", "epsilon", "slack"},
    "output": {"path", "format"},
    "expect": {"value", "rel_tol"},
}
_TOP = {"grid", "rate", "jump", "gammas", "k", "method", "richardson", "rel_tol",
        "mc", "diagnose", "degenerate", "output", "expect"}
_REQUIRED = ("grid", "rate", "jump", "gammas")


class ConfigError(InvalidArgument):
    kind = "config"


@dataclass
class RunConfig:
    n: int
    rate: dict
    jump: dict
    gammas: list
    k: float | None = None
    method: str = "auto"
    richardson: bool | None = None
    rel_tol: float = 1e-12
    nodes_per_layer: float = 40.0
    layer_power: float = 0.5
    mc: dict = field(default_factory=dict)
    diagnose: dict = field(default_factory=dict)
    degenerate: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    expect: dict = field(default_factory=dict)

    def problem(self, n: int | None = None):
        grid = build_grid(self.n if n is None else n)
        rate = dict(self.rate)
        jump = dict(self.jump)
        V = build_rate_field(rate.pop("preset"), grid, **rate)
        mu = build_jump_measure(jump.pop("preset"), grid, **jump)
        return grid, V, mu


_SHORTHAND = re.compile(r"^\s*([a-z_]+)\s*\(\s*([^)]*)\s*\)\s*$")
_SHORT_ARG = {"linear": "slope", "poly": "k", "atom": "location"}


def _preset_block(name: str, raw, valid) -> dict:
    """Accept ``"uniform"``, ``"atom(0.5)"`` or ``{"preset": ..., ...}``."""
    if isinstance(raw, str):
        m = _SHORTHAND.match(raw)
        if m:
            preset, arg = m.group(1), m.group(2)
            if preset not in _SHORT_ARG:
                raise ConfigError(f"{name}: preset {preset!r} takes no argument")
            val = float(arg)
            if preset == "poly":
                val = int(val)
            raw = {"preset": preset, _SHORT_ARG[preset]: val}
        else:
            raw = {"preset": raw.strip()}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be a preset name or an object")
    _unknown(name, raw, _SCHEMA[name])
    if "preset" not in raw:
        raise ConfigError(f"missing required key: {name}.preset")
    if raw["preset"] not in valid:
        raise ConfigError(f"invalid {name} preset {raw['preset']!r}; valid: {', '.join(valid)}")
    return dict(raw)


def _unknown(where: str, d: dict, allowed) -> None:
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown keys in {where}: {', '.join(extra)}")


def validate_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _unknown("config", raw, _TOP)
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required key: {key}")
    grid = raw["grid"]
    if not isinstance(grid, dict):
        raise ConfigError("grid must be an object")
    _unknown("grid", grid, _SCHEMA["grid"])
    if "n" not in grid:
        raise ConfigError("missing required key: grid.n")
    for sect in ("mc", "diagnose", "degenerate", "output", "expect"):
        if not isinstance(raw.get(sect, {}), dict):
            raise ConfigError(f"{sect} must be an object")
        _unknown(sect, raw.get(sect, {}), _SCHEMA[sect])
    gammas = raw["gammas"]
    if not isinstance(gammas, list) or not all(isinstance(g, (int, float)) for g in gammas):
        raise ConfigError("gammas must be a list of numbers")
    method = raw.get("method", "auto")
    if method not in CONFIG_METHODS:
        raise ConfigError(f"invalid method {method!r}; valid: {', '.join(CONFIG_METHODS)}")
    fmt = raw.get("output", {}).get("format")
    if fmt is not None and fmt not in ("csv", "json"):
        raise ConfigError("output.format must be 'csv' or 'json'")
    cfg = RunConfig(
        n=int(grid["n"]),
        rate=_preset_block("rate", raw["rate"], RATE_PRESETS),
        jump=_preset_block("jump", raw["jump"], JUMP_PRESETS),
        gammas=[float(g) for g in gammas],
        k=raw.get("k"),
        method=method,
        richardson=raw.get("richardson"),
        rel_tol=float(raw.get("rel_tol", 1e-12)),
        nodes_per_layer=float(grid.get("nodes_per_layer", 40.0)),
        layer_power=float(grid.get("layer_power", 0.5)),
        mc=dict(raw.get("mc", {})),
        diagnose=dict(raw.get("diagnose", {})),
        degenerate=dict(raw.get("degenerate", {})),
        output=dict(raw.get("output", {})),
        expect=dict(raw.get("expect", {})),
    )
    cfg.problem()  # builds the grid, rate and measure so bad parameters fail here
    return cfg


def parse_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return validate_config(raw)


# ---------------------------------------------------------------------------
# serialization

def _cell_json(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_cell_json(v) for v in x]
    if isinstance(x, dict):
        return {k: _cell_json(v) for k, v in x.items()}
    return x


def _cell_csv(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


@dataclass
class Table:
    command: str
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)
    assertions: list = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {"command": self.command, "columns": list(self.columns),
                "rows": [[_cell_json(v) for v in r] for r in self.rows],
                "summary": _cell_json(self.summary),
                "assertions": _cell_json(self.assertions)}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        return json_to_csv(self.to_json_obj())


def json_to_csv(obj: dict) -> str:
    """CSV text (LF line ends) for a parsed JSON result."""
    buf = io.StringIO()
    buf.write(",".join(obj["columns"]) + "\n")
    for row in obj["rows"]:
        buf.write(",".join(_cell_csv(v) for v in row) + "\n")
    return buf.getvalue()


def _check(table: Table, name: str, ok: bool, detail: str = "") -> None:
    table.assertions.append({"name": name, "passed": bool(ok), "detail": detail})


def _check_expect(table: Table, cfg: RunConfig, value: float) -> None:
    if "value" not in cfg.expect:
        return
    target = float(cfg.expect["value"])
    tol = float(cfg.expect.get("rel_tol", 1e-6))
    err = abs(value - target) / abs(target) if target != 0 else abs(value)
    _check(table, "expect", err <= tol, f"got {value:.10g}, expected {target:.10g}, rel err {err:.3g}")


# ---------------------------------------------------------------------------
# commands

def _nonempty(cfg: RunConfig) -> list:
    if not cfg.gammas:
        raise InvalidArgument("gammas must be nonempty")
    return cfg.gammas


def cmd_solve(cfg: RunConfig, seed=None) -> Table:
    grid, V, mu = cfg.problem()
    cols = ["gamma", "h", "lambda0", "lambda_star", "method", "iterations", "residual"]
    if cfg.method == "both":
        cols += ["lambda0_matrix", "agreement"]
    if cfg.richardson:
        cols += ["lambda0_richardson"]
    t = Table("solve", cols, [])
    for gam in _nonempty(cfg):
        route = "fixed_point" if cfg.method == "both" else cfg.method
        res = eigen.principal_eigenvalue(gam, V, mu, grid, route, cfg.rel_tol)
        row = [gam, grid.h, res.lambda0, res.lambda_star, res.method, res.iterations, res.residual]
        _check(t, f"0 < lambda0 < lambda_star at gamma={gam:g}",
               0.0 < res.lambda0 < res.lambda_star)
        if cfg.method == "both":
            alt = eigen.principal_eigenvalue_matrix(gam, V, mu, grid, cfg.rel_tol)
            agree = abs(res.lambda0 - alt.lambda0) / abs(res.lambda0)
            row += [alt.lambda0, agree]
            _check(t, f"route agreement at gamma={gam:g}", agree <= 1e-6, f"{agree:.3g}")
        if cfg.richardson:
            rr = eigen.principal_eigenvalue_richardson(gam, V, mu, grid, route, cfg.rel_tol)
            row += [rr.value]
        t.rows.append(row)
    _check_expect(t, cfg, t.rows[0][2])
    return t


def cmd_sweep(cfg: RunConfig, seed=None) -> Table:
    if cfg.method == "both":
        raise InvalidArgument("method 'both' applies to solve only")
    grid, V, mu = cfg.problem()
    sw = asym.sweep_gamma(_nonempty(cfg), V, mu, grid, cfg.method,
                          richardson=True if cfg.richardson is None else cfg.richardson,
                          k=cfg.k, n_min=cfg.n, nodes_per_layer=cfg.nodes_per_layer,
                          layer_power=cfg.layer_power, rel_tol=cfg.rel_tol)
    rows = [[r[c] for c in SWEEP_COLUMNS] for r in sw.rows()]
    summary = {"fit_exponent": sw.fit_exponent, "fit_constant": sw.fit_constant,
               "limit_constant": sw.limit_constant,
               "extrapolated_intercept": sw.extrapolated_intercept}
    t = Table("sweep", list(SWEEP_COLUMNS), rows, summary)
    _check(t, "all lambda0 positive", bool(np.all(sw.lambda0s > 0)))
    _check_expect(t, cfg, sw.extrapolated_intercept)
    return t


def cmd_constant(cfg: RunConfig, seed=None) -> Table:
    grid, V, mu = cfg.problem()
    k = mu.k_vanish if cfg.k is None else cfg.k
    if math.isinf(k):
        raise InvalidArgument("limit constant needs a jump measure with a density")
    k = int(k)
    c = asym.theoretical_limit_constant(k, V, mu)
    t = Table("constant", ["k", "scaling_power", "constant", "rate", "jump"],
              [[k, asym.scaling_power(k), c, V.name, mu.name]])
    _check(t, "constant positive", c > 0)
    _check_expect(t, cfg, c)
    return t


def cmd_diagnose(cfg: RunConfig, seed=None) -> Table:
    grid, V, mu = cfg.problem()
    eps = float(cfg.diagnose.get("epsilon", 0.1))
    t = Table("diagnose", ["gamma", "lambda0", "v_limit_sup", "normal_deriv_err_0",
                           "normal_deriv_err_1", "lambda0_over_gamma"], [])
    for gam in _nonempty(cfg):
        d = asym.lemma_diagnostics(gam, V, mu, grid, eps)
        t.rows.append([gam, d.lambda0, d.v_limit_sup, d.normal_deriv_errs[0],
                       d.normal_deriv_errs[1], d.sublinearity_ratio])
    ratios = [r[-1] for r in t.rows]
    dec = all(b < a for a, b in zip(ratios, ratios[1:]))
    t.summary = {"ratio_strictly_decreasing": dec}
    if len(ratios) > 1:
        _check(t, "lambda0/gamma strictly decreasing", dec)
    return t


def _seed(cfg: RunConfig, seed) -> int:
    s = seed if seed is not None else cfg.mc.get("seed")
    if s is None:
        raise InvalidArgument("Monte Carlo commands need a seed (--seed or mc.seed)")
    return int(s)


def cmd_simulate(cfg: RunConfig, seed=None) -> Table:
    s = _seed(cfg, seed)
    grid, V, mu = cfg.problem()
    n_paths = int(cfg.mc.get("n_paths", 100_000))
    t_list = [float(x) for x in cfg.mc.get("t_list", [1.0])]
    x0 = cfg.mc.get("x0")
    dt = cfg.mc.get("dt")
    t = Table("simulate", ["gamma", "t", "survival", "std_error", "n_paths", "seed"], [])
    decay = []
    for gam in _nonempty(cfg):
        p, se = mc.survival_curve(gam, V, mu, t_list, n_paths, dt, s, x0)
        t.rows.extend([gam, ti, pi, si, n_paths, s] for ti, pi, si in zip(t_list, p, se))
        if len(t_list) >= 3:
            keep = p * n_paths >= 10
            rate, r2 = mc.fit_decay_rate(np.asarray(t_list)[keep], p[keep])
            lam = eigen.principal_eigenvalue(gam, V, mu, grid, "auto", cfg.rel_tol).lambda0
            decay.append({"gamma": gam, "rate": rate, "r_squared": r2, "lambda0_pde": lam})
            _check(t, f"decay rate within 15% of lambda0 at gamma={gam:g}",
                   abs(rate - lam) <= 0.15 * lam, f"{rate:.6g} vs {lam:.6g}")
    t.summary = {"decay": decay, "x0": x0, "dt": dt}
    return t


def cmd_fk_check(cfg: RunConfig, seed=None) -> Table:
    s = _seed(cfg, seed)
    grid, V, _ = cfg.problem()
    n_paths = int(cfg.mc.get("n_paths", 100_000))
    lam = float(cfg.mc.get("lambda", 0.0))
    xs = [float(x) for x in cfg.mc.get("x0_list", [0.25, 0.5, 0.75])]
    horizon = float(cfg.mc.get("horizon", 5.0))
    t = Table("fk-check", ["gamma", "lambda", "x0", "fk", "std_error", "bvp_u", "z"], [])
    for gam in _nonempty(cfg):
        u = bvp.solve_u(lam, gam, V, grid)
        for x in xs:
            est = mc.fk_estimate_u(x, lam, gam, V, n_paths, cfg.mc.get("dt"), s, horizon)
            ux = float(np.interp(x, grid.full_nodes, u.full))
            z = (est.value - ux) / est.std_error if est.std_error > 0 else math.inf
            t.rows.append([gam, lam, x, est.value, est.std_error, ux, z])
            _check(t, f"|z| <= 3 at gamma={gam:g}, x0={x:g}", abs(z) <= 3.0, f"z={z:.3g}")
    return t


def cmd_degenerate(cfg: RunConfig, seed=None) -> Table:
    opts = cfg.degenerate
    slack = float(opts.get("slack", degenerate.SLOPE_SLACK))
    ds = degenerate.degenerate_sweep(_nonempty(cfg), n_min=cfg.n, slack=slack,
                                     richardson=True if cfg.richardson is None else cfg.richardson)
    sw = ds.sweep
    slopes = list(ds.local_slopes)
    t = Table("degenerate", ["gamma", "h", "lambda0", "lambda0_richardson", "local_slope"], [])
    for i, r in enumerate(sw.rows()):
        slope = slopes[i - 1] if i >= 1 and i - 1 < len(slopes) else float("nan")
        t.rows.append([r["gamma"], r["h"], r["lambda0"], r["lambda0_richardson"], slope])
    eps = float(opts.get("epsilon", 0.01))
    reports = []
    for g in opts.get("check_gammas", [1e6]):
        g = float(g)
        for sign, power in ((">=0", 1.0 / 3.0), ("<=0", 2.0 / 3.0)):
            rep = degenerate.supersolution_check(g, eps * g ** power, sign)
            reports.append({"gamma": g, "sign": sign, "c": rep.c,
                            "extreme_residual": rep.extreme_residual, "at": rep.at,
                            "holds": rep.holds})
            _check(t, f"supersolution {sign} at gamma={g:g}", rep.holds,
                   f"extreme residual {rep.extreme_residual:.6g} at x={rep.at:.6g}")
    c1, c2 = degenerate.bound_certificate(sw) if len(sw) else (math.nan, math.nan)
    t.summary = {"exploratory_fitted_exponent": ds.fitted_exponent,
                 "slope_window": list(ds.window), "slopes_in_window": ds.slopes_in_window,
                 "bound_certificate": [c1, c2], "supersolution": reports}
    _check(t, "local slopes in window", ds.slopes_in_window)
    return t


_DISPATCH = {"solve": cmd_solve, "sweep": cmd_sweep, "constant": cmd_constant,
             "diagnose": cmd_diagnose, "simulate": cmd_simulate, "fk-check": cmd_fk_check,
             "degenerate": cmd_degenerate}


def run_command(cmd: str, cfg: RunConfig, seed: int | None = None) -> Table:
    if cmd not in _DISPATCH:
        raise InvalidArgument(f"unknown command {cmd!r}; valid: {', '.join(COMMANDS)}")
    return _DISPATCH[cmd](cfg, seed)


def _error_object(exc: Exception) -> dict:
    kind = getattr(exc, "kind", None) or "internal"
    return {"error": {"kind": kind, "type": type(exc).__name__, "message": str(exc)}}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="jumpeig", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--assert", dest="check", action="store_true")
    args = ap.parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise InvalidArgument("--seed must be an unsigned 64-bit integer")
        cfg = parse_config(args.config)
        table = run_command(args.command, cfg, args.seed)
    except (JumpEigError, ValueError, ArithmeticError) as exc:
        sys.stderr.write(json.dumps(_error_object(exc)) + "\n")
        return 1
    fmt = args.format or cfg.output.get("format", "csv")
    text = table.to_json() if fmt == "json" else table.to_csv()
    out = args.out or cfg.output.get("path")
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.check:
        failed = [a for a in table.assertions if not a["passed"]]
        for a in failed:
            sys.stderr.write(json.dumps({"assertion_failed": a}) + "\n")
        if failed:
            return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
