"""Command-line front door: ``dirca {entropy,mixing,ergodic,binom,selftest}``.

Exit codes: 0 ok, 1 config error, 2 budget exceeded, 3 asserted invariant
failed, 4 I/O error.  Output is byte-stable for a fixed plan; wall time goes
to the log on stderr only.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import binom, entropy, mixing
from .cone import DirectionCone, parse_sequence
from .errors import BudgetExceeded, DircaError
from .lca import ActionIndex, parse_rule
from .measure import DEFAULT_BUDGET, ExactProb, parse_cylinder

log = logging.getLogger("dirca")

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_INVARIANT, EXIT_IO = 0, 1, 2, 3, 4
BUDGET_FLOOR = 2**10
SUBCOMMANDS = ("entropy", "mixing", "ergodic", "binom", "selftest")

# defaults per key; the subcommand set tells which keys a section may use
DEFAULTS = {
    "rule": None,
    "seed": None,
    "budget": DEFAULT_BUDGET,
    "out": "-",
    "format": "csv",
    "log_base": "nats",
    "strict": False,
    "seq": "syndetic:gap=1,len=6,n=0",
    "M": 1,
    "check_atoms": False,
    "mode": "decay",
    "B": "[0:00]",
    "C": "[0:00]",
    "beta": "1",
    "b": "2",
    "k_max": 20,
    "N": None,
    "n_max": None,
    "direction": "1,1",
    "seeds": 100,
    "tol": 0.01,
    "orbits": False,
    "k": 2,
    "variant": "paper",
    "method": "jump",
    "dump": False,
}
GLOBAL_KEYS = {"rule", "seed", "budget", "out", "format", "log_base", "strict"}
KEYS = {
    "entropy": {"seq", "M", "check_atoms"},
    "mixing": {"mode", "B", "C", "beta", "b", "k_max", "M", "N", "n_max"},
    "ergodic": {"direction", "B", "N", "seeds", "tol", "orbits"},
    "binom": {"k", "N", "n_max", "seeds", "variant", "method", "dump", "tol"},
    "selftest": set(),
}
DEFAULT_RULES = {
    "entropy": "a=2;coeffs=1,0,1",
    "mixing": "a=2;coeffs=0,1,1",
    "ergodic": "a=2;coeffs=0,1,1",
}
SUB_DEFAULTS = {
    "mixing": {"B": "[0:00]", "N": 0, "n_max": 5},
    "ergodic": {"B": "[0:0]", "N": 100000},
    "binom": {"N": 1, "n_max": 100000},
}
# config files may use the flag spelling as well
KEY_ALIASES = {"nmax": "n_max", "kmax": "k_max", "log-base": "log_base",
               "check-atoms": "check_atoms"}


class ConfigError(DircaError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


@dataclass(frozen=True)
class ExperimentPlan:
    subcommand: str
    settings: tuple  # sorted (key, value) pairs

    def __getitem__(self, key):
        return dict(self.settings)[key]

    def echo(self) -> dict:
        return {"subcommand": self.subcommand, **dict(self.settings)}


@dataclass
class Report:
    plan: ExperimentPlan
    records: list
    flags: dict = field(default_factory=dict)
    columns: list | None = None
    wall_time: float = 0.0


def _global_flags(g):
    g.add_argument("--rule")
    g.add_argument("--seed", type=int)
    g.add_argument("--budget", type=int)
    g.add_argument("--out")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--log-base", dest="log_base", choices=("nats", "bits", "a"))
    g.add_argument("--strict", action="store_const", const=True,
                   help="exit 3 when a statistical acceptance flag fails")
    g.add_argument("--config", help="key=value file with [global] and per-subcommand sections")


def _flag_parser() -> _Parser:
    # global flags are accepted before or after the subcommand
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    _global_flags(common)
    p = _Parser(prog="dirca", description="Directional dynamics of linear cellular automata.",
                parents=[common], argument_default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)
    sub.required = True

    e = sub.add_parser("entropy", help="join entropies along a direction sequence",
                       parents=[common], argument_default=argparse.SUPPRESS)
    e.add_argument("--seq")
    e.add_argument("--M", type=int)
    e.add_argument("--check-atoms", dest="check_atoms", action="store_const", const=True)

    m = sub.add_parser("mixing", help="cone-averaged correlation decay or independence points",
                       parents=[common], argument_default=argparse.SUPPRESS)
    m.add_argument("--mode", choices=("decay", "independence"))
    m.add_argument("--B")
    m.add_argument("--C")
    m.add_argument("--beta")
    m.add_argument("--b")
    m.add_argument("--kmax", dest="k_max", type=int)
    m.add_argument("--M", type=int)
    m.add_argument("--N", type=int)
    m.add_argument("--nmax", dest="n_max", type=int)

    r = sub.add_parser("ergodic", help="Birkhoff averages of a cylinder along a direction",
                       parents=[common], argument_default=argparse.SUPPRESS)
    r.add_argument("--direction")
    r.add_argument("--B")
    r.add_argument("--N", type=int)
    r.add_argument("--seeds", type=int)
    r.add_argument("--tol", type=float)
    r.add_argument("--orbits", action="store_const", const=True,
                   help="emit running averages at log-spaced checkpoints")

    b = sub.add_parser("binom", help="digit frequencies of binomial sums mod k",
                       parents=[common], argument_default=argparse.SUPPRESS)
    b.add_argument("--k", type=int)
    b.add_argument("--N", type=int)
    b.add_argument("--nmax", dest="n_max", type=int)
    b.add_argument("--seeds", type=int)
    b.add_argument("--variant", choices=binom.VARIANTS)
    b.add_argument("--method", choices=tuple(binom.METHODS))
    b.add_argument("--tol", type=float)
    b.add_argument("--dump", action="store_const", const=True,
                   help="emit n, s_n for the first seed instead of the frequency table")

    sub.add_parser("selftest", help="run the exact invariant suite",
                   parents=[common], argument_default=argparse.SUPPRESS)
    return p


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _coerce(key: str, text: str):
    default = DEFAULTS[key]
    if key in ("seed", "N", "n_max", "M", "k_max", "seeds", "k", "budget"):
        return int(text)
    if key == "tol":
        return float(text)
    if isinstance(default, bool):
        if text.lower() not in _BOOL:
            raise ConfigError(f"{key}: expected a boolean, got {text!r}")
        return _BOOL[text.lower()]
    return text


def _read_config(path: str, subcommand: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str  # keys are case-sensitive (M vs m)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    out = {}
    for section in cp.sections():
        if section != "global" and section not in SUBCOMMANDS:
            raise ConfigError(f"unknown config section [{section}]")
        allowed = GLOBAL_KEYS | (KEYS[section] if section != "global" else set())
        for key, text in cp.items(section):
            key = KEY_ALIASES.get(key, key)
            if key not in allowed:
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
            if section in ("global", subcommand):
                try:
                    out[key] = _coerce(key, text)
                except ValueError as exc:
                    raise ConfigError(f"{key}: {exc}") from exc
    return out


def parse_config(argv=None) -> ExperimentPlan:
    """Flags over config file over defaults.  Raises :class:`ConfigError`."""
    ns = _flag_parser().parse_args(argv)
    sc = ns.subcommand
    settings = {k: DEFAULTS[k] for k in GLOBAL_KEYS | KEYS[sc]}
    settings.update({k: v for k, v in SUB_DEFAULTS.get(sc, {}).items() if k in settings})
    if getattr(ns, "config", None):
        settings.update(_read_config(ns.config, sc))
    for k, v in vars(ns).items():
        if k in settings and v is not None:
            settings[k] = v

    if settings["seed"] is None:
        env = os.environ.get("DIRCA_SEED")
        try:
            settings["seed"] = int(env) if env else 0
        except ValueError:
            raise ConfigError(f"DIRCA_SEED must be an integer, got {env!r}")
    if settings["budget"] < BUDGET_FLOOR:
        raise ConfigError(f"budget {settings['budget']} is below the floor {BUDGET_FLOOR}")
    if settings["rule"] is None:
        settings["rule"] = DEFAULT_RULES.get(sc)
    _validate_literals(sc, settings)
    return ExperimentPlan(sc, tuple(sorted(settings.items())))


def _validate_literals(sc: str, s: dict):
    try:
        if s["rule"] is not None:
            parse_rule(s["rule"])
        if sc == "entropy":
            parse_sequence(s["seq"])
        if sc in ("mixing", "ergodic"):
            parse_cylinder(s["B"])
        if sc == "mixing":
            parse_cylinder(s["C"])
            _cone(s)
        if sc == "ergodic":
            _direction(s["direction"])
    except (ValueError, DircaError) as exc:
        raise ConfigError(str(exc)) from exc
    for key in ("N", "n_max", "k_max", "seeds", "M", "k"):
        if key in s and s[key] is not None and s[key] < 0:
            raise ConfigError(f"{key} must be non-negative")
    if sc == "binom" and s["k"] < 2:
        raise ConfigError("k must be >= 2")


def _cone(s: dict) -> DirectionCone:
    return DirectionCone(Fraction(s["beta"]), Fraction(s["b"]))


def _direction(text: str) -> ActionIndex:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"direction must be 'm,n', got {text!r}")
    return ActionIndex(int(parts[0]), int(parts[1]))


# -- dispatch ---------------------------------------------------------------

def _run_entropy(plan: ExperimentPlan) -> Report:
    rule = parse_rule(plan["rule"])
    S = parse_sequence(plan["seq"])
    prof = entropy.hS_profile(S, plan["M"], rule, plan["budget"])
    base = plan["log_base"]
    records = []
    for row in prof.rows():
        if base != "nats":
            row[f"H_{base}"] = entropy.convert_entropy(row["H_nats"], base, rule.a)
            row[f"H_per_step_{base}"] = entropy.convert_entropy(row["H_per_step"], base, rule.a)
        records.append(row)
    flags = {"all_uniform": all(prof.uniform), "closed_form_applies": prof.closed_form is not None}
    if plan["check_atoms"]:
        rep = entropy.verify_atom_structure(S, plan["M"], rule, plan["budget"])
        flags["atom_structure"] = rep.passed
        if not rep.passed:
            flags["atom_structure_reason"] = rep.reason
    return Report(plan, records, flags)


def _run_mixing(plan: ExperimentPlan) -> Report:
    rule = parse_rule(plan["rule"])
    if plan["mode"] == "independence":
        rows = mixing.independence_point_check(plan["M"], plan["N"], rule, plan["n_max"],
                                               plan["budget"])
        records = [{"m": r.m, "n": r.n, "passed": r.passed, "boundary": r.boundary,
                    "disjoint": r.disjoint} for r in rows]
        flags = {"independent_beyond_boundary": all(r.passed for r in rows if not r.boundary)}
        return Report(plan, records, flags, ["m", "n", "passed", "boundary", "disjoint"])
    B, C = parse_cylinder(plan["B"]), parse_cylinder(plan["C"])
    series = mixing.decay_profile(B, C, _cone(plan.echo()), plan["k_max"], rule, plan["budget"])
    records = []
    for row, exact in zip(series.rows(), series.exact):
        row["D_k_rational"] = exact
        records.append(row)
    return Report(plan, records, {"final_D_k": series.values[-1]})


def _run_ergodic(plan: ExperimentPlan) -> Report:
    rule = parse_rule(plan["rule"])
    B = parse_cylinder(plan["B"])
    direction = _direction(plan["direction"])
    seeds = [mixing.derive_seed(plan["seed"], "ergodic", i) for i in range(plan["seeds"])]
    rep = mixing.orbit_frequency_report(seeds, direction, B, plan["N"], rule, plan["tol"])
    if plan["orbits"]:
        records = []
        for st in rep.stats:
            avg = st.averages
            records.extend({"seed": st.seed, "t": t, "average": float(avg[t - 1])}
                           for t in st.checkpoints())
        columns = ["seed", "t", "average"]
    else:
        records = [{"seed": st.seed, "N": st.N, "average": st.final, "deviation": st.deviation,
                    "within": st.deviation < rep.tolerance} for st in rep.stats]
        columns = ["seed", "N", "average", "deviation", "within"]
    flags = {"pass_fraction": rep.pass_fraction, "accepted": rep.pass_fraction >= 0.95}
    return Report(plan, records, flags, columns)


def _run_binom(plan: ExperimentPlan) -> Report:
    k, N, n_max = plan["k"], plan["N"], plan["n_max"]
    seeds = [mixing.derive_seed(plan["seed"], "binom", k, N, i) for i in range(plan["seeds"])]
    fn = binom.METHODS[plan["method"]]
    if plan["dump"]:
        if not seeds:
            raise ConfigError("--dump needs at least one seed")
        x = binom.DigitStream.random(k, binom.required_length(N, n_max), seeds[0])
        s = fn(x, N, n_max, plan["variant"])
        records = [{"n": n, "s_n": int(v)} for n, v in enumerate(s, start=1)]
        return Report(plan, records, {"seed_used": seeds[0]}, ["n", "s_n"])
    reports = binom.frequency_run(k, N, n_max, seeds, plan["variant"], plan["method"])
    columns = ["k", "N", "variant", "n_max", "seed"] + [f"freq_{j}" for j in range(k)] + ["max_dev"]
    records = []
    for r in reports:
        row = {"k": k, "N": N, "variant": plan["variant"], "n_max": n_max, "seed": r.extra["seed"]}
        row.update({f"freq_{j}": f for j, f in enumerate(r.freqs)})
        row["max_dev"] = r.max_dev
        records.append(row)
    within = sum(r.max_dev < plan["tol"] for r in reports)
    frac = within / len(reports) if reports else 0.0
    return Report(plan, records, {"pass_fraction": frac, "accepted": frac >= 0.95}, columns)


def _run_selftest(plan: ExperimentPlan) -> Report:
    from .selftest import run_checks

    results = run_checks()
    records = [{"check": name, "passed": ok, "detail": detail} for name, ok, detail in results]
    flags = {"all_passed": all(ok for _, ok, _ in results)}
    return Report(plan, records, flags, ["check", "passed", "detail"])


RUNNERS = {
    "entropy": _run_entropy,
    "mixing": _run_mixing,
    "ergodic": _run_ergodic,
    "binom": _run_binom,
    "selftest": _run_selftest,
}

# flags whose failure means exit 3 (always, or only under --strict)
HARD_FLAGS = {"atom_structure", "independent_beyond_boundary", "all_passed"}
SOFT_FLAGS = {"accepted"}


def run_plan(plan: ExperimentPlan) -> Report:
    t0 = time.perf_counter()
    report = RUNNERS[plan.subcommand](plan)
    report.wall_time = time.perf_counter() - t0
    log.info("%s finished in %.3f s", plan.subcommand, report.wall_time)
    return report


def failed_flags(report: Report, strict: bool) -> list[str]:
    keys = HARD_FLAGS | (SOFT_FLAGS if strict else set())
    return sorted(k for k in keys if report.flags.get(k) is False)


# -- emission ---------------------------------------------------------------

def render(v):
    """Stable text for one value: 17 significant digits for reals."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (ExactProb, Fraction)):
        return str(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return format(v, ".17g") if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if v is None:
        return ""
    return v


def _json_value(v):
    if isinstance(v, (bool, int, str)) or v is None:
        return v
    r = render(v)
    return r


def to_json(report: Report) -> str:
    doc = {
        "plan": {k: _json_value(v) for k, v in report.plan.echo().items()},
        "records": [{k: _json_value(v) for k, v in rec.items()} for rec in report.records],
        "flags": {k: _json_value(v) for k, v in report.flags.items()},
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def to_csv(report: Report) -> str:
    columns = report.columns or (list(report.records[0]) if report.records else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for rec in report.records:
        w.writerow([render(rec.get(c)) for c in columns])
    return buf.getvalue()


def emit(report: Report, fmt: str = "csv", path: str = "-"):
    text = to_json(report) if fmt == "json" else to_csv(report)
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        plan = parse_config(argv)
    except ConfigError as exc:
        print(f"dirca: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_plan(plan)
    except BudgetExceeded as exc:
        print(f"dirca: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ConfigError as exc:
        print(f"dirca: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, DircaError) as exc:
        print(f"dirca: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    try:
        emit(report, plan["format"], plan["out"])
    except OSError as exc:
        print(f"dirca: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    bad = failed_flags(report, plan["strict"])
    if bad:
        print(f"dirca: failed checks: {', '.join(bad)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
