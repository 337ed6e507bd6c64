"""``gdof`` command line: curve, simulate, verify, sweep.

Settings resolve as command-line flag > ``--config`` file > built-in default.
The config file is plain ``key=value`` lines using the long flag names
(``alpha-grid=0:3:3/32``); ``#`` starts a comment.

Exit codes: 0 success, 1 verification counterexample, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import __version__, analysis, report, schemes
from .channel import as_rational, derive_params

log = logging.getLogger("gdof")

DEFAULTS = {
    "users": 3,
    "base": 64,
    "levels": 8,
    "alpha": None,
    "alpha-grid": "0:3:3/32",
    "trials": 10_000,
    "seed": 1,
    "out": "-",
    "format": "csv",
    "zero-noise": False,
    "cap": 10**6,
    "alphabet": "full",
    "inject-fault": False,
}
INT_KEYS = {"users", "base", "levels", "trials", "seed", "cap"}
BOOL_KEYS = {"zero-noise", "inject-fault"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    K: int
    Q: int
    M: int
    alphas: tuple[Fraction, ...]
    trials: int
    seed: int
    out: str
    fmt: str
    zero_noise: bool
    cap: int
    alphabet: str
    inject_fault: bool

    @property
    def alpha(self) -> Fraction:
        return self.alphas[0]

    def echo(self) -> dict:
        return {"tool_version": __version__, "command": self.command}


def parse_grid(text: str) -> tuple[Fraction, ...]:
    """``lo:hi:step`` (inclusive of ``hi`` when it lands on the grid) or a comma list."""
    try:
        if ":" not in text:
            return tuple(as_rational(t.strip()) for t in text.split(",") if t.strip())
        lo, hi, step = (as_rational(t.strip()) for t in text.split(":"))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"alpha-grid: cannot parse {text!r} ({exc})") from None
    if step <= 0:
        raise ConfigError("alpha-grid: step must be positive")
    out, a = [], lo
    while a <= hi:
        out.append(a)
        a += step
    return tuple(out)


def read_config_file(path: str) -> dict:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"config file: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in INT_KEYS:
            return int(value)
        if key in BOOL_KEYS:
            if isinstance(value, bool):
                return value
            if str(value).lower() in ("1", "true", "yes", "on"):
                return True
            if str(value).lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
    except ValueError:
        raise ConfigError(f"{key}: invalid value {value!r}") from None
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gdof", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"gdof {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "curve": "tabulate the theoretical per-user GDOF d(alpha)",
        "simulate": "Monte-Carlo run of one scheme: error profile, rates, empirical GDOF",
        "verify": "exhaustive noise-free round-trip check of one scheme",
        "sweep": "theory vs empirical GDOF over an alpha grid",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text, description=text)
        sp.add_argument("--config", help="key=value file; flags override it")
        sp.add_argument("--users", "-K", help="number of users K")
        sp.add_argument("--base", "-Q", help="digit base Q")
        sp.add_argument("--levels", "-M", help="level shift M (SNR = Q^(2M/|alpha-1|))")
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--alpha", help="interference exponent, e.g. 1.5 or 2/3")
        g.add_argument("--alpha-grid", dest="alpha_grid", help="lo:hi:step or a comma list")
        sp.add_argument("--trials", help="Monte-Carlo symbols per point")
        sp.add_argument("--seed", help="64-bit seed")
        sp.add_argument("--out", help="output path ('-' for stdout)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--zero-noise", dest="zero_noise", action="store_const", const=True)
        sp.add_argument("--cap", help="max message tuples for verify")
        sp.add_argument("--alphabet", choices=("full", "extremes"),
                        help="verify: enumerate the full digit alphabet or only its two extremes")
        sp.add_argument("--inject-fault", dest="inject_fault", action="store_const", const=True,
                        help=argparse.SUPPRESS)
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(read_config_file(args.config))
    flags = {k.replace("_", "-"): v for k, v in vars(args).items() if k not in ("command", "config")}
    if flags.get("alpha") is not None:
        merged["alpha-grid"] = None
    if flags.get("alpha-grid") is not None:
        merged["alpha"] = None
    merged.update({k: v for k, v in flags.items() if v is not None})
    v = {k: _coerce(k, val) for k, val in merged.items()}

    if v["alpha"] is not None:
        try:
            alphas = (as_rational(v["alpha"]),)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"alpha: cannot parse {v['alpha']!r}") from None
    else:
        alphas = parse_grid(str(v["alpha-grid"]))

    cfg = RunConfig(
        command=args.command, K=v["users"], Q=v["base"], M=v["levels"], alphas=alphas,
        trials=v["trials"], seed=v["seed"], out=v["out"], fmt=v["format"],
        zero_noise=v["zero-noise"], cap=v["cap"], alphabet=v["alphabet"],
        inject_fault=v["inject-fault"],
    )
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.K < 2:
        raise ConfigError(f"users: need K >= 2, got {cfg.K}")
    if not cfg.alphas:
        raise ConfigError("alpha-grid: empty grid")
    if any(a < 0 for a in cfg.alphas):
        raise ConfigError("alpha: must be >= 0")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed: must be a 64-bit unsigned integer")
    if cfg.fmt not in ("csv", "json"):
        raise ConfigError(f"format: expected csv or json, got {cfg.fmt!r}")
    if cfg.alphabet not in ("full", "extremes"):
        raise ConfigError(f"alphabet: expected full or extremes, got {cfg.alphabet!r}")
    if cfg.command == "curve":
        return
    if cfg.Q < 2 * cfg.K + 4:
        raise ConfigError(f"base: need Q >= 2K+4 = {2 * cfg.K + 4}, got {cfg.Q}")
    if cfg.M < 1:
        raise ConfigError(f"levels: need M >= 1, got {cfg.M}")
    if cfg.trials < 1:
        raise ConfigError(f"trials: need >= 1, got {cfg.trials}")
    if cfg.cap < 1:
        raise ConfigError(f"cap: need >= 1, got {cfg.cap}")
    if cfg.command in ("simulate", "verify"):
        if len(cfg.alphas) != 1:
            raise ConfigError(f"{cfg.command}: needs a single --alpha")
        if cfg.alpha == 1:
            raise ConfigError("alpha: alpha = 1 has no layered scheme (d(1) = 1/K)")
        if cfg.command == "verify" and schemes.classify(cfg.alpha) is schemes.Regime.NOISY:
            raise ConfigError("alpha: the noisy regime (alpha < 1/2) has no layered scheme to verify")


# -- commands ---------------------------------------------------------------

def cmd_curve(cfg: RunConfig) -> tuple[list[dict], int]:
    rows = [
        {**cfg.echo(), "K": cfg.K, "alpha": a, "regime": str(schemes.classify(a)),
         "d_theory": analysis.gdof_theoretical(a, cfg.K)}
        for a in cfg.alphas
    ]
    return rows, 0


def cmd_simulate(cfg: RunConfig) -> tuple[list[dict], int]:
    t0 = time.perf_counter()
    try:
        res = analysis.simulate(cfg.K, cfg.Q, cfg.M, cfg.alpha, cfg.trials, cfg.seed, cfg.zero_noise)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    log.info("simulate: %d trials in %.2f s", res.trials, time.perf_counter() - t0)
    base = {**cfg.echo(), "K": cfg.K, "Q": cfg.Q, "M": cfg.M, "alpha": cfg.alpha,
            "regime": str(res.regime), "trials": res.trials, "seed": cfg.seed,
            "zero_noise": cfg.zero_noise}
    rows = [{
        **base, "record": "summary", "rate_formula": res.rate_formula,
        "rate_measured": res.rate_measured, "d_theory": res.d_theory,
        "d_empirical": res.d_empirical, "d_measured": res.d_measured,
        "out_of_alphabet": res.out_of_alphabet,
    }]
    if res.profile is not None:
        for i, r in enumerate(res.profile.rates):
            lo, hi = res.profile.interval(i)
            rows.append({**base, "record": "level", "index": i, "value": r, "ci_low": lo, "ci_high": hi})
        for k, r in enumerate(res.user_message_error):
            rows.append({**base, "record": "user", "index": k, "value": r})
        layout = schemes.build_layout(res.regime, cfg.K, cfg.Q, cfg.M, cfg.alpha)
        for pos, r in zip(layout.info_positions, res.info_digit_error):
            rows.append({**base, "record": "digit", "index": pos, "value": r})
    return rows, 0


def cmd_verify(cfg: RunConfig) -> tuple[list[dict], int]:
    try:
        enc = None
        if cfg.inject_fault:
            layout = schemes.build_layout(schemes.classify(cfg.alpha), cfg.K, cfg.Q, cfg.M, cfg.alpha)
            enc = analysis.corrupt_copy_map(layout)
        rep = analysis.verify_round_trip(cfg.K, cfg.Q, cfg.M, cfg.alpha, cap=cfg.cap,
                                         alphabet=cfg.alphabet, encoder_layout=enc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    base = {**cfg.echo(), "K": cfg.K, "Q": cfg.Q, "M": cfg.M, "alpha": cfg.alpha,
            "regime": str(rep.layout.regime),
            "test_alphabet": ";".join(map(str, rep.test_alphabet)), "cap": cfg.cap}
    rows = [{**base, "tuples": rep.tuples, "failures": rep.failures,
             "result": "pass" if rep.passed else "fail"}]
    for ce in rep.counterexamples:
        trace = json.dumps(ce, separators=(",", ":"))
        print(f"counterexample: {trace}", file=sys.stderr)
        rows.append({**base, "result": "counterexample", "trace": trace})
    return rows, 0 if rep.passed else 1


def cmd_sweep(cfg: RunConfig) -> tuple[list[dict], int]:
    pts = analysis.sweep(cfg.alphas, cfg.K, cfg.Q, cfg.M, cfg.trials, cfg.seed, cfg.zero_noise)
    rows = [
        {**cfg.echo(), "alpha": p.alpha, "regime": str(p.regime), "K": p.K, "Q": p.Q,
         "M": p.M, "trials": p.trials, "d_theory": p.d_theory, "d_empirical": p.d_empirical,
         "gap": p.gap, "max_level_error": p.max_level_error, "seed": cfg.seed,
         "zero_noise": cfg.zero_noise, "error": p.error}
        for p in pts
    ]
    return rows, 0


COMMANDS = {
    "curve": (cmd_curve, report.CURVE_COLUMNS),
    "simulate": (cmd_simulate, report.SIMULATE_COLUMNS),
    "verify": (cmd_verify, report.VERIFY_COLUMNS),
    "sweep": (cmd_sweep, report.SWEEP_COLUMNS),
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        fn, columns = COMMANDS[cfg.command]
        rows, code = fn(cfg)
    except ConfigError as exc:
        print(f"gdof: configuration error: {exc}", file=sys.stderr)
        return 2
    text = report.render(rows, columns, cfg.fmt)
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
