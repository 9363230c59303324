"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 no interior equilibrium.

Settings are resolved in order of precedence: explicit flag, the
``WOM_SEED`` environment variable (seed only), ``--config`` file, built-in
default.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

from . import analytics as an
from . import equilibrium as eq
from . import simulator as sim
from .analytics import DomainError, MarketParams

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_NO_EQUILIBRIUM = 3

REFERENCE_COST = 0.075

# key -> (type, default); keys double as config-file keys and flag names
_SETTINGS = {
    "v": (float, 1.0),
    "c": (float, None),
    "k": (int, 1),
    "l": (float, None),
    "q": (float, None),
    "n": (int, 100_000),
    "seed": (int, 0),
    "reps": (int, 64),
    "format": (str, None),
    "out": (str, None),
    "k-max-exp": (int, 16),
    "q0": (float, None),
    "steps": (int, 100_000),
    "gain": (float, eq.BR_GAIN),
    "points": (int, 1001),
    "eta": (float, None),
    "deviation-price": (float, None),
    "workers": (int, 1),
}


class UsageError(Exception):
    """Invalid configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        val = self.values.get(key)
        return default if val is None else val

    def require(self, *keys):
        missing = [k for k in keys if self.values.get(k) is None]
        if missing:
            raise UsageError(f"{self.command}: missing required setting(s): " + ", ".join("--" + m for m in missing))


def _convert(key: str, raw: str):
    typ = _SETTINGS[key][0]
    try:
        val = typ(raw)
    except ValueError:
        raise UsageError(f"invalid value for {key}: {raw!r}") from None
    if typ is float and not math.isfinite(val):
        raise UsageError(f"{key} must be finite, got {raw!r}")
    return val


def read_config_file(path: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in _SETTINGS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _convert(key, raw)
    return out


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for key, (typ, _) in _SETTINGS.items():
        kwargs = {"type": typ, "default": None, "dest": key.replace("-", "_")}
        if key == "format":
            kwargs["choices"] = ["csv", "json"]
        common.add_argument("--" + key, **kwargs)
    common.add_argument("--config", default=None, help="flat key=value settings file")

    parser = argparse.ArgumentParser(
        prog="wom-search",
        description="Costly search with word-of-mouth price sharing: equilibria and checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "interior equilibria for --v --c --k [--l]",
        "bounds": "search-cost band [c_lower, c_upper] for --k",
        "figure1": "benefit curve and reference cost levels (v=1, k=1 by default)",
        "scan": "stable equilibrium along k = 2^0 .. 2^k-max-exp",
        "link": "link-formation conditions at --q (or at the stable root)",
        "dynamics": "best-response adjustment of the searching share from --q0",
        "simulate": "agent-based Monte Carlo estimates",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def resolve(argv=None, environ=None) -> RunConfig:
    """Parse flags and merge them with the config file and environment."""
    environ = os.environ if environ is None else environ
    ns = _build_parser().parse_args(argv)
    values = {key: default for key, (_, default) in _SETTINGS.items()}
    if ns.config:
        values.update(read_config_file(ns.config))
    if environ.get("WOM_SEED"):
        values["seed"] = _convert("seed", environ["WOM_SEED"])
    for key in _SETTINGS:
        val = getattr(ns, key.replace("-", "_"))
        if val is not None:
            values[key] = val
    return RunConfig(ns.command, values)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if hasattr(x, "item"):
        return _fmt(x.item())
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[h]) for h in header])
    return buf.getvalue()


def render_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(cfg: RunConfig, text: str, stdout):
    out = cfg.get("out")
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _table(cfg: RunConfig, header, rows, meta=None) -> str:
    if cfg.get("format", "csv") == "json":
        return render_json({"meta": meta or {}, "rows": [{h: r[h] for h in header} for r in rows]})
    return render_csv(header, rows)


def _params(cfg: RunConfig) -> MarketParams:
    cfg.require("v", "c", "k")
    return MarketParams(v=cfg["v"], c=cfg["c"], k=cfg["k"], l=cfg.get("l", 0.0))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_solve(cfg: RunConfig, stdout, stderr) -> int:
    params = _params(cfg)
    if params.c >= params.v:
        raise UsageError("search cost must lie in (0, v)")
    report = eq.solve_search_equilibrium(params)
    if not report.roots:
        stderr.write(
            f"no interior equilibrium: c = {params.c!r} exceeds c_upper(k={params.k}) = {report.c_upper!r}\n"
        )
        return EXIT_NO_EQUILIBRIUM
    header = ["v", "c", "k", "q", "stability", "eta", "expected_price", "expected_min_price",
              "support_low", "support_high", "firm_profit", "slope"]
    with_link = cfg.get("l") is not None
    if with_link:
        header += ["l", "l_bar", "searcher_forms", "nonsearcher_forms"]
    rows = []
    for root in report.roots:
        row = {"v": params.v, "c": params.c, "k": params.k, **root.as_dict()}
        if with_link:
            link = eq.link_decision(params, root.q)
            row.update(l=params.l, l_bar=link.l_bar, searcher_forms=link.searcher_forms,
                       nonsearcher_forms=link.nonsearcher_forms)
        rows.append(row)
    meta = {"status": report.status, "c_upper": report.c_upper, "note": report.note}
    _emit(cfg, _table(cfg, header, rows, meta), stdout)
    return EXIT_OK


def cmd_bounds(cfg: RunConfig, stdout, stderr) -> int:
    b = eq.cost_bounds(cfg["v"], cfg["k"])
    header = ["v", "k", "c_lower", "c_lower_limit", "c_upper", "q_at_peak"]
    row = {"v": cfg["v"], "k": cfg["k"], "c_lower": b.c_lower, "c_lower_limit": b.c_lower_limit,
           "c_upper": b.c_upper, "q_at_peak": float(b.q_at_peak)}
    _emit(cfg, _table(cfg, header, [row]), stdout)
    return EXIT_OK


def benefit_curve_rows(v: float = 1.0, k: int = 1, c1: float = REFERENCE_COST, points: int = 1001):
    """Benefit curve on a uniform q grid with the three reference levels."""
    if points < 2:
        raise UsageError("points must be >= 2")
    b = eq.cost_bounds(v, k)
    rows = []
    for i in range(points):
        q = i / (points - 1)
        # the curve vanishes as q -> 0 (no quotes, no dispersion benefit)
        benefit = 0.0 if q == 0.0 else an.search_benefit(q, k, v)
        rows.append({"v": v, "k": k, "q": q, "benefit": benefit, "c_lower": b.c_lower,
                     "c1": c1, "c_upper": b.c_upper})
    return rows


def cmd_benefit_curve(cfg: RunConfig, stdout, stderr) -> int:
    c1 = cfg.get("c", REFERENCE_COST)
    rows = benefit_curve_rows(cfg["v"], cfg["k"], c1, cfg["points"])
    header = ["v", "k", "q", "benefit", "c_lower", "c1", "c_upper"]
    _emit(cfg, _table(cfg, header, rows), stdout)
    return EXIT_OK


def cmd_scan(cfg: RunConfig, stdout, stderr) -> int:
    cfg.require("v", "c")
    kmax = cfg["k-max-exp"]
    if not 0 <= kmax <= 30:
        raise UsageError("k-max-exp must lie in [0, 30]")
    rows = eq.asymptotic_scan(cfg["v"], cfg["c"], [2**j for j in range(kmax + 1)], workers=cfg["workers"])
    header = ["v", "c", "k", "status", "q", "eta", "expected_price", "c_lower", "c_upper",
              "l_bar", "firm_profit", "implication_holds"]
    out = [{"v": cfg["v"], "c": cfg["c"], **r.as_dict()} for r in rows]
    _emit(cfg, _table(cfg, header, out), stdout)
    return EXIT_OK


def cmd_link(cfg: RunConfig, stdout, stderr) -> int:
    cfg.require("v", "k")
    q = cfg.get("q")
    l = cfg.get("l", 0.0)
    if q is None:
        params = _params(cfg)
        root = eq.solve_search_equilibrium(params).stable
        if root is None:
            stderr.write("no stable interior equilibrium to evaluate links at\n")
            return EXIT_NO_EQUILIBRIUM
        q = root.q
    else:
        params = MarketParams(v=cfg["v"], c=cfg.get("c", 0.5 * cfg["v"]), k=cfg["k"], l=l)
    d = eq.link_decision(params, q)
    header = ["v", "k", "l", "q", "l_bar", "nonsearcher_value", "searcher_forms", "nonsearcher_forms"]
    row = {"v": params.v, "k": params.k, "l": params.l, "q": q, "l_bar": d.l_bar,
           "nonsearcher_value": d.nonsearcher_value, "searcher_forms": d.searcher_forms,
           "nonsearcher_forms": d.nonsearcher_forms}
    _emit(cfg, _table(cfg, header, [row]), stdout)
    return EXIT_OK


def cmd_dynamics(cfg: RunConfig, stdout, stderr) -> int:
    cfg.require("v", "c", "k", "q0")
    traj = eq.best_response_dynamics(cfg["v"], cfg["c"], cfg["k"], cfg["q0"], steps=cfg["steps"], gain=cfg["gain"])
    header = ["v", "c", "k", "q0", "gain", "status", "step", "q"]
    echo = {"v": cfg["v"], "c": cfg["c"], "k": cfg["k"], "q0": cfg["q0"], "gain": cfg["gain"], "status": traj.status}
    rows = [{**echo, "step": i, "q": float(x)} for i, x in enumerate(traj.q)]
    _emit(cfg, _table(cfg, header, rows), stdout)
    if not traj.converged:
        stderr.write(f"not converged after {cfg['steps']} steps\n")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, stdout, stderr) -> int:
    cfg.require("q", "k", "n", "seed", "reps")
    config = sim.SimConfig(
        n_consumers=cfg["n"], k=cfg["k"], q=cfg["q"], v=cfg["v"], master_seed=cfg["seed"],
        replications=cfg["reps"], eta_override=cfg.get("eta"), deviation_price=cfg.get("deviation-price"),
    )
    res = sim.simulate_market(config, workers=cfg["workers"])
    payload = res.as_dict()
    if 0 < config.q:
        shares = an.information_shares(config.q, config.k)
        payload["analytic"] = {
            "share_none": shares.none_share,
            "share_captive": shares.captive_share,
            "share_compare": shares.compare_share,
            "firm_profit": an.firm_profit(config.q, config.k, config.v),
            "search_benefit": an.search_benefit(config.q, config.k, config.v),
            "second_search_benefit": an.second_search_benefit(config.q, config.k, config.v),
        }
    if cfg.get("format") == "csv":
        header = ["statistic", "mean", "se"]
        rows = []
        for name in ("share_none", "share_captive", "share_compare", "search_benefit_estimate",
                     "second_search_benefit_estimate", "mean_transaction_price"):
            e = getattr(res, name)
            rows.append({"statistic": name, "mean": e.mean, "se": e.se})
        for i, e in enumerate(res.firm_profits):
            rows.append({"statistic": f"firm_profit_{'ab'[i]}", "mean": e.mean, "se": e.se})
        _emit(cfg, render_csv(header, rows), stdout)
    else:
        _emit(cfg, render_json(payload), stdout)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "bounds": cmd_bounds,
    "figure1": cmd_benefit_curve,
    "scan": cmd_scan,
    "link": cmd_link,
    "dynamics": cmd_dynamics,
    "simulate": cmd_simulate,
}


def main(argv=None, stdout=None, stderr=None, environ=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        cfg = resolve(argv, environ)
        return COMMANDS[cfg.command](cfg, stdout, stderr)
    except SystemExit as exc:  # argparse
        return int(exc.code or 0)
    except (UsageError, DomainError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
