"""Batch front end: ``rwre --config run.ini [--seed S] [--trials N] ...``.

A config is an INI file with a ``[run]`` section, a ``[law]`` section and
an optional section named after the experiment::

    [run]
    experiment = cylinder-audit
    seed = 7

    [law]
    jumps = (0,1) (1,-1) (-2,0)
    weights = 2 2 1

    [cylinder-audit]
    u = 2,1
    N = 4
    L = 10

Each run prints one logfmt summary line (also written to ``summary.logfmt``
under ``--out``). ``--per-trial`` adds ``trials.ndjson``; ``--emit-dot``
writes the cylinder graph as ``graph.dot``.

Exit codes: 0 success, 2 invalid config, 3 a checked property failed.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

from . import __version__
from .environment import DirichletLaw, annealed_drift_exact
from .graph import (
    DEL,
    M,
    ConstructionError,
    CylinderSpec,
    build_cylinder,
    class_sums,
    divergence,
    frac_str,
)
from .lattice import Direction, JumpLaw, check_c3
from . import experiments as ex

EXIT_OK, EXIT_CONFIG, EXIT_PROPERTY = 0, 2, 3
EXPERIMENTS = (
    "drift",
    "transience",
    "loop-reversal",
    "two-walk",
    "cylinder-audit",
    "ineq-804",
    "c3-check",
    "erasure-check",
)
U64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Invalid configuration; ``line`` points into the config file when known."""

    def __init__(self, msg: str, line: Optional[int] = None, path: str = "<config>"):
        super().__init__(msg)
        self.line, self.path = line, path

    def __str__(self) -> str:
        where = f"{self.path}:{self.line}" if self.line else self.path
        return f"{where}: {self.args[0]}"


# --- config parsing -------------------------------------------------------------


def _line_index(text: str) -> dict:
    """``{(section, key): line_number}`` for every option line."""
    index, section = {}, None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.fullmatch(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            index[(section, None)] = n
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            index[(section, m.group(1).strip().lower())] = n
    return index


_INT_RE = re.compile(r"[+-]?\d+")
_FRAC_RE = re.compile(r"[+-]?\d+(/\d+)?")


@dataclass
class Config:
    """Parsed and validated run configuration."""

    experiment: str
    seed: int
    trials: int
    horizon: int
    law: JumpLaw
    params: dict = field(default_factory=dict)
    text: str = ""

    def digest(self) -> str:
        canon = {
            "experiment": self.experiment,
            "seed": self.seed,
            "trials": self.trials,
            "horizon": self.horizon,
            "jumps": [list(j) for j in self.law.jumps],
            "weights": [frac_str(w) for w in self.law.weights],
            "params": {k: _canon(v) for k, v in sorted(self.params.items())},
        }
        blob = json.dumps(canon, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _canon(v):
    if isinstance(v, Fraction):
        return frac_str(v)
    if isinstance(v, tuple):
        return [_canon(x) for x in v]
    return v


class _Reader:
    def __init__(self, cp: configparser.ConfigParser, lines: dict, path: str):
        self.cp, self.lines, self.path = cp, lines, path

    def error(self, section, key, msg):
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        return ConfigError(msg, line, self.path)

    def raw(self, section, key, default=None, required=False):
        if self.cp.has_section(section) and self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        if required:
            raise self.error(section, None, f"missing required key {key!r} in [{section}]")
        return default

    def integer(self, section, key, default=None, lo=None, hi=None, required=False):
        s = self.raw(section, key, None, required)
        if s is None:
            return default
        if not _INT_RE.fullmatch(s):
            raise self.error(section, key, f"{key} must be an integer, got {s!r}")
        v = int(s)
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise self.error(section, key, f"{key}={v} outside [{lo}, {hi}]")
        return v

    def real(self, section, key, default=None, lo=None, required=False, positive=False):
        s = self.raw(section, key, None, required)
        if s is None:
            return default
        try:
            v = float(Fraction(s)) if "/" in s else float(s)
        except ValueError:
            raise self.error(section, key, f"{key} must be a number, got {s!r}") from None
        if not math.isfinite(v) or (lo is not None and v < lo) or (positive and v <= 0):
            raise self.error(section, key, f"{key}={s} out of range")
        return v

    def vector(self, section, key, default=None, dim=None, required=False, integer=False):
        s = self.raw(section, key, None, required)
        if s is None:
            return default
        parts = [p for p in re.split(r"[\s,()]+", s) if p]
        try:
            vals = tuple(int(p) if integer else float(p) for p in parts)
        except ValueError:
            raise self.error(section, key, f"{key} must be a list of numbers, got {s!r}") from None
        if dim is not None and len(vals) != dim:
            raise self.error(section, key, f"{key} needs {dim} components, got {len(vals)}")
        return vals


def _parse_law(r: _Reader) -> JumpLaw:
    jumps_s = r.raw("law", "jumps", required=True)
    groups = re.findall(r"\(([^)]*)\)", jumps_s)
    if not groups or re.sub(r"\([^)]*\)|[\s,]", "", jumps_s):
        raise r.error("law", "jumps", "jumps must look like '(0,1) (1,-1) (-2,0)'")
    jumps = []
    for g in groups:
        parts = [p for p in re.split(r"[\s,]+", g) if p]
        if not parts or not all(_INT_RE.fullmatch(p) for p in parts):
            raise r.error("law", "jumps", f"jump ({g}) must have integer coordinates")
        jumps.append(tuple(int(p) for p in parts))
    w_s = r.raw("law", "weights", required=True)
    tokens = [t for t in re.split(r"[\s,]+", w_s) if t]
    for t in tokens:
        if not _FRAC_RE.fullmatch(t):
            raise r.error("law", "weights", f"weight {t!r} is not an integer or 'p/q' rational")
    try:
        weights = [Fraction(t) for t in tokens]
    except ZeroDivisionError:
        raise r.error("law", "weights", "weight with zero denominator") from None
    try:
        return JumpLaw(jumps, weights)
    except ValueError as e:
        raise r.error("law", None, str(e)) from None


def _parse_params(r: _Reader, exp: str, law: JumpLaw) -> dict:
    s = exp
    d = law.d
    p: dict = {}
    if exp == "transience":
        p["direction"] = r.vector(s, "direction", dim=d, required=True)
        p["b"] = r.real(s, "b", 50.0, positive=True)
        p["proxy"] = r.raw(s, "proxy", "strict")
        if p["proxy"] not in ("strict", "erasure"):
            raise r.error(s, "proxy", f"proxy must be strict or erasure, got {p['proxy']!r}")
    elif exp in ("loop-reversal", "cylinder-audit", "ineq-804"):
        if d != 2:
            raise r.error("law", "jumps", f"{exp} needs a two-dimensional law")
        p["u"] = r.vector(s, "u", dim=2, required=True, integer=True)
        p["u2"] = r.vector(s, "u2", None, dim=2, integer=True)
        p["N"] = r.integer(s, "N", lo=1, required=True)
        p["L"] = r.integer(s, "L", lo=1, required=True)
        if exp == "loop-reversal":
            p["vertex"] = r.raw(s, "vertex", DEL)
    elif exp == "two-walk":
        if d != 2:
            raise r.error("law", "jumps", "two-walk needs a two-dimensional law")
        p["direction"] = r.vector(s, "direction", dim=2, required=True)
        p["L"] = r.real(s, "L", 10.0, positive=True)
        p["z_L"] = r.vector(s, "z_L", None, dim=2, integer=True)
        p["pilot"] = r.integer(s, "pilot", 1000, lo=1)
        p["uncensored"] = r.integer(s, "uncensored", None, lo=1)
    elif exp == "c3-check":
        p["box_radius"] = r.integer(s, "box_radius", 6, lo=1, hi=200)
    elif exp == "erasure-check":
        p["max_len"] = r.integer(s, "max_len", 12, lo=1, hi=16)
    return p


def load_config(text: str, path: str = "<config>", seed: Optional[int] = None,
                trials: Optional[int] = None, env: Optional[dict] = None) -> Config:
    """Parse and validate; flag values override the file, ``RWRE_SEED`` in
    ``env`` is the fallback seed."""
    env = os.environ if env is None else env
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=path)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("expected a [section] header first", e.lineno, path) from None
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigError("cannot parse line", line, path) from None
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key {e.option!r} in [{e.section}]", e.lineno, path) from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", e.lineno, path) from None
    r = _Reader(cp, _line_index(text), path)
    if not cp.has_section("run"):
        raise ConfigError("missing [run] section", None, path)
    exp = r.raw("run", "experiment", required=True)
    if exp not in EXPERIMENTS:
        raise r.error("run", "experiment", f"unknown experiment {exp!r}; choose from {', '.join(EXPERIMENTS)}")
    if seed is None:
        seed = r.integer("run", "seed", None, lo=0, hi=U64)
    if seed is None and env.get("RWRE_SEED"):
        s = env["RWRE_SEED"].strip()
        if not s.isdigit() or int(s) > U64:
            raise ConfigError(f"RWRE_SEED must be an unsigned 64-bit integer, got {s!r}", None, "RWRE_SEED")
        seed = int(s)
    if seed is None:
        seed = 0
    if trials is None:
        trials = r.integer("run", "trials", 10_000, lo=1, hi=10**9)
    horizon = r.integer("run", "horizon", 10_000, lo=1, hi=10**8)
    law = _parse_law(r)
    params = _parse_params(r, exp, law)
    return Config(exp, seed, trials, horizon, law, params, text)


# --- output ---------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return frac_str(v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "null"
    return str(v)


def logfmt(record: dict) -> str:
    out = []
    for k, v in record.items():
        s = _fmt(v)
        if s == "" or re.search(r'[\s="\\]', s):
            s = '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'
        out.append(f"{k}={s}")
    return " ".join(out)


def ndjson(records: list) -> str:
    return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in records)


def _vec(vals) -> str:
    return "[" + ", ".join(_fmt(v) for v in vals) + "]"


# --- experiments ----------------------------------------------------------------


@dataclass
class Outcome:
    summary: dict
    ok: bool = True
    records: list = field(default_factory=list)
    dot: Optional[str] = None


def _cylinder(cfg: Config) -> CylinderSpec:
    p = cfg.params
    return CylinderSpec(cfg.law, p["u"], p["u2"], p["N"], p["L"])


def _drift(cfg, workers):
    dlaw = DirichletLaw(cfg.law)
    exact = annealed_drift_exact(dlaw)
    res = ex.first_step_mean(dlaw, cfg.trials, cfg.seed, workers)
    ok = res.within([float(c) for c in exact])
    return Outcome({"drift": _vec(exact), "empirical": _vec(round(float(m), 6) for m in res.mean),
                    "std_error": _vec(round(float(s), 6) for s in res.std_error),
                    "within_4se": ok}, ok, res.records)


def _transience(cfg, workers):
    p = cfg.params
    dlaw = DirichletLaw(cfg.law)
    out, rows = ex.transience_table(dlaw, Direction.of(p["direction"]), [p["b"]], cfg.horizon,
                                    cfg.trials, cfg.seed, p["proxy"], workers)
    est = out[p["b"]]
    drift = annealed_drift_exact(dlaw)
    ell_drift = sum(float(c) * x for c, x in zip(drift, Direction.of(p["direction"]).ell))
    return Outcome({"proxy": p["proxy"], "b": p["b"], "estimate": est.estimate,
                    "std_error": round(est.std_error, 6), "censored": est.censored,
                    "ell_dot_drift": round(float(ell_drift), 12)}, True, rows)


def _loop_reversal(cfg, workers):
    spec = _cylinder(cfg)
    g = build_cylinder(spec)
    x = _vertex(g, cfg.params["vertex"])
    res = ex.verify_loop_reversal(g, x, cfg.trials, cfg.seed, cfg.horizon, workers)
    summary = {"vertex": str(x), "censored": res.censored}
    ok = True
    for y, (est, exact) in res.rows.items():
        good = est.within(float(exact))
        ok &= good
        tag = str(y).replace(" ", "")
        summary[f"empirical[{tag}]"] = est.estimate
        summary[f"exact[{tag}]"] = float(exact)
        summary[f"std_error[{tag}]"] = round(est.std_error, 6)
    summary["within_4se"] = ok
    return Outcome(summary, ok, res.records, g.to_dot())


def _vertex(g, name: str):
    if name in (DEL, M):
        return name
    for v in g.vertices:
        if str(v).replace(" ", "") == name.replace(" ", ""):
            return v
    raise ConfigError(f"vertex {name!r} is not in the graph")


def _two_walk(cfg, workers):
    p = cfg.params
    dlaw = DirichletLaw(cfg.law)
    rep = ex.decomposition_report(dlaw, Direction.of(p["direction"]), p["L"], cfg.trials, cfg.seed,
                                  horizon=cfg.horizon, z_L=p["z_L"], pilot=p["pilot"],
                                  uncensored=p["uncensored"], workers=workers)
    c = rep.counts
    ok = c["violations"] == 0 and c["i_not_p"] == 0
    return Outcome({"z_L": _vec(rep.z_L), **c}, ok, rep.records)


def _cylinder_audit(cfg, workers):
    spec = _cylinder(cfg)
    g = build_cylinder(spec)
    divs = [abs(divergence(g, v)) for v in g.vertices]
    sums = class_sums(g)
    W = sums["2a"]
    equal = sums["2a"] == sums["2b"] == sums["2c"] == sums["2d"]
    drift = annealed_drift_exact(DirichletLaw(cfg.law))
    zero_drift = sum(c * u for c, u in zip(drift, spec.u)) == 0
    ok = (max(divs) == 0 and equal) if zero_drift else True
    summary = {"vertices": len(g.vertices), "edges": len(g.edges), "divergence_max": max(divs),
               "W": W, **{f"sum_{k}": v for k, v in sums.items()},
               "class_sums_equal": equal, "drift_dot_u": sum(c * u for c, u in zip(drift, spec.u)),
               "sum_2c_minus_2a": sums["2c"] - sums["2a"]}
    records = [{"vertex": str(v), "divergence": frac_str(divergence(g, v))} for v in g.vertices]
    return Outcome(summary, ok, records, g.to_dot())


def _ineq_804(cfg, workers):
    spec = _cylinder(cfg)
    rep = ex.inequality_804_report(spec, cfg.trials, cfg.seed, cfg.horizon, workers)
    return Outcome({"lhs": rep.lhs, "first_return_special": rep.first_return_special.estimate,
                    "detour_term": rep.detour_term.estimate, "slack": round(rep.slack, 6),
                    "holds": rep.holds, "return_via_special": rep.return_via_special.estimate},
                   rep.holds, rep.records, build_cylinder(spec).to_dot())


def _c3(cfg, workers):
    status = check_c3(cfg.law, cfg.params["box_radius"])
    return Outcome({"c3": status, "box_radius": cfg.params["box_radius"]}, True)


def _erasure(cfg, workers):
    rows = ex.erasure_agreement(cfg.trials, cfg.seed, cfg.params["max_len"], workers)
    bad = sum(r["dp"] != r["oracle"] for r in rows)
    return Outcome({"paths": len(rows), "disagreements": bad}, bad == 0, rows)


RUNNERS: dict[str, Callable[[Config, int], Outcome]] = {
    "drift": _drift,
    "transience": _transience,
    "loop-reversal": _loop_reversal,
    "two-walk": _two_walk,
    "cylinder-audit": _cylinder_audit,
    "ineq-804": _ineq_804,
    "c3-check": _c3,
    "erasure-check": _erasure,
}


def run(cfg: Config, workers: int = 1, out: Optional[Path] = None, per_trial: bool = False,
        emit_dot: bool = False, stdout=None) -> int:
    """Execute ``cfg`` and write its artifacts; returns the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    try:
        res = RUNNERS[cfg.experiment](cfg, workers)
    except (ConstructionError, ConfigError, ValueError) as e:
        # the experiment rejected a parameter combination the parser accepted
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    head = {"experiment": cfg.experiment, "seed": cfg.seed, "trials": cfg.trials,
            "config_digest": cfg.digest(), "version": __version__}
    line = logfmt({**head, **res.summary, "status": "ok" if res.ok else "property_failed"})
    print(line, file=stdout)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.logfmt").write_text(line + "\n")
        if per_trial:
            stamp = {"config_digest": head["config_digest"], "seed": cfg.seed, "version": __version__}
            (out / "trials.ndjson").write_text(ndjson([{**r, **stamp} for r in res.records]))
        if emit_dot and res.dot is not None:
            (out / "graph.dot").write_text(res.dot)
    return EXIT_OK if res.ok else EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rwre", description=__doc__.split("\n")[0])
    ap.add_argument("--config", required=True, type=Path, help="INI experiment config")
    ap.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides config and RWRE_SEED)")
    ap.add_argument("--trials", type=int, help="number of trials (overrides config)")
    ap.add_argument("--workers", type=int, default=1, help="worker processes")
    ap.add_argument("--out", type=Path, help="directory for summary and optional outputs")
    ap.add_argument("--emit-dot", action="store_true", help="write the cylinder graph as DOT")
    ap.add_argument("--per-trial", action="store_true", help="write per-trial ndjson records")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed <= U64:
            raise ConfigError("--seed must be an unsigned 64-bit integer", None, "--seed")
        if args.trials is not None and args.trials < 1:
            raise ConfigError("--trials must be positive", None, "--trials")
        if args.workers < 1:
            raise ConfigError("--workers must be positive", None, "--workers")
        try:
            text = args.config.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config: {e.strerror}", None, str(args.config)) from None
        cfg = load_config(text, str(args.config), args.seed, args.trials)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, args.workers, args.out, args.per_trial, args.emit_dot)


if __name__ == "__main__":
    sys.exit(main())
