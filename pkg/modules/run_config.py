# ============================================================================
# MODULE: RUN CONFIG
# ============================================================================
# Command line + config file parsing into a validated RunConfig
# ============================================================================

"""
Run configuration for main.py.

Values come from an optional flat config file (`key = value` lines, keys
named like the flags without the leading dashes, `#` comments) and from
the command line; flags win. `RunConfig.to_pairs()` is what the CSV header
echoes, and feeding those pairs back through `config_from_pairs` yields the
same RunConfig (up to `out` and `workers`, which never reach the report).
"""

import argparse
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import config
from modules.appell import AppellSystem, positivity_report
from modules.errors import UsageError
from modules.functions import TestFunction, get_function
from modules.log_utils import log_warning
from modules.operator_core import BnSchedule
from modules.q_kernel import QContext, TruncationPolicy, check_q

COMMANDS = ("validate", "moments", "eval", "converge", "bound")

KEYS = (
    "command", "q", "q_schedule", "bn", "coeffs", "f", "n", "b", "x",
    "tol_rel", "kmax", "alpha", "points", "x_max", "workers", "out",
)


@dataclass(frozen=True)
class RunConfig:
    command: str
    qctx: QContext
    bn: BnSchedule
    coeffs: Tuple[float, ...]
    f: str
    n: Tuple[int, ...]
    b: Tuple[float, ...]
    x: Optional[Tuple[float, ...]] = None
    tol_rel: float = config.TOL_REL
    kmax: int = config.K_MAX
    alpha: float = config.DEFAULT_ALPHA
    points: Optional[int] = None
    x_max: float = math.inf
    workers: int = config.DEFAULT_WORKERS
    out: Optional[str] = None

    def truncation(self) -> TruncationPolicy:
        return TruncationPolicy(tol_rel=self.tol_rel, k_max=self.kmax)

    def function(self) -> TestFunction:
        return get_function(self.f)

    def to_pairs(self) -> List[Tuple[str, str]]:
        """(key, value) pairs echoed in the report header."""
        pairs = [("command", self.command)]
        if self.qctx.mode == "fixed":
            pairs.append(("q", repr(self.qctx.q_fixed)))
        else:
            pairs.append(("q-schedule", self.qctx.schedule_id))
        pairs += [
            ("bn", self.bn.spec()),
            ("coeffs", _join(self.coeffs)),
            ("f", self.f),
            ("n", ",".join(str(n) for n in self.n)),
            ("b", _join(self.b)),
        ]
        if self.x is not None:
            pairs.append(("x", _join(self.x)))
        pairs += [("tol-rel", repr(self.tol_rel)), ("kmax", str(self.kmax)), ("alpha", repr(self.alpha))]
        if self.points is not None:
            pairs.append(("points", str(self.points)))
        if math.isfinite(self.x_max):
            pairs.append(("x-max", repr(self.x_max)))
        return pairs


def _join(values: Iterable[float]) -> str:
    return ",".join(repr(float(v)) for v in values)


# ============================================================================
# ARGUMENT PARSER
# ============================================================================

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="main.py",
        description="Chlodowsky q-Favard-Szasz operator lab: moment validation and approximation experiments",
        allow_abbrev=False,
    )
    parser.add_argument("command", nargs="?", help=" | ".join(COMMANDS))
    parser.add_argument("--q", help="fixed q in (0, 1]")
    parser.add_argument("--q-schedule", help="one-minus-inv-n | ratio")
    parser.add_argument("--bn", help="const:<c> | power:<p> | log")
    parser.add_argument("--coeffs", help="comma-separated Appell coefficients a_0,a_1,...")
    parser.add_argument("--f", help="test function id")
    parser.add_argument("--n", help="comma-separated ascending n values")
    parser.add_argument("--b", help="comma-separated interval ends (bound)")
    parser.add_argument("--x", help="comma-separated evaluation points")
    parser.add_argument("--tol-rel", help="relative truncation tolerance")
    parser.add_argument("--kmax", help="maximum number of series terms")
    parser.add_argument("--alpha", help="weight exponent (converge)")
    parser.add_argument("--points", help="grid size / x-points per n")
    parser.add_argument("--x-max", help="right end of the converge grid (default: domain-derived)")
    parser.add_argument("--workers", help="thread pool size")
    parser.add_argument("--out", help="CSV output path (stdout when omitted)")
    parser.add_argument("--config", help="flat key = value config file")
    return parser


# ============================================================================
# CONFIG FILE
# ============================================================================

def _normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def parse_config_text(text: str) -> Dict[str, str]:
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"config line {number} is not 'key = value': {line!r}")
        values[_normalize_key(key)] = value.strip()
    return values


def read_config_file(path: str) -> Dict[str, str]:
    with open(path, 'r', encoding='utf-8') as f:
        return parse_config_text(f.read())


# ============================================================================
# VALUE PARSERS
# ============================================================================

def _floats(text: str) -> Tuple[float, ...]:
    values = tuple(float(t) for t in text.split(",") if t.strip())
    if not values:
        raise ValueError("empty list")
    return values


def _q(text: str) -> float:
    q = float(text)
    check_q(q)
    return q


def _ns(text: str) -> Tuple[int, ...]:
    ns = tuple(int(t) for t in text.split(",") if t.strip())
    if not ns or ns[0] < 1:
        raise ValueError("n values must be positive integers")
    if any(a >= b for a, b in zip(ns, ns[1:])):
        raise ValueError("n values must be strictly ascending")
    return ns


def _positive_floats(text: str) -> Tuple[float, ...]:
    values = _floats(text)
    if not all(v > 0 for v in values):
        raise ValueError("values must be positive")
    return values


def _nonnegative_floats(text: str) -> Tuple[float, ...]:
    values = _floats(text)
    if not all(v >= 0 for v in values):
        raise ValueError("values must be >= 0")
    return values


def _coeffs(text: str) -> Tuple[float, ...]:
    coeffs = _floats(text)
    AppellSystem(coeffs)
    return coeffs


def _tol_rel(text: str) -> float:
    return TruncationPolicy(tol_rel=float(text)).tol_rel


def _kmax(text: str) -> int:
    return TruncationPolicy(k_max=int(text)).k_max


def _alpha(text: str) -> float:
    alpha = float(text)
    if not alpha >= 0:
        raise ValueError("alpha must be >= 0")
    return alpha


def _at_least(minimum: int):
    def parse(text: str) -> int:
        value = int(text)
        if value < minimum:
            raise ValueError(f"must be at least {minimum}")
        return value
    return parse


def _x_max(text: str) -> float:
    if text.lower() in ("auto", "inf"):
        return math.inf
    value = float(text)
    if not value > 0:
        raise ValueError("x-max must be positive")
    return value


def _field(raw: Dict[str, str], key: str, parse, default=None):
    text = raw.get(key)
    if text is None:
        return default
    try:
        return parse(text)
    except ValueError as e:
        raise UsageError(f"Invalid value for '{key.replace('_', '-')}': {text!r} ({e})", key=key)


# ============================================================================
# BUILD
# ============================================================================

def _qctx(raw: Dict[str, str]) -> QContext:
    if "q" in raw and "q_schedule" in raw:
        raise UsageError("q and q-schedule are mutually exclusive", key="q")
    if "q" in raw:
        return QContext.fixed(_field(raw, "q", _q))
    return _field(raw, "q_schedule", QContext.schedule, QContext.schedule(config.DEFAULT_Q_SCHEDULE))


def _build(file_values: Dict[str, str], flag_values: Dict[str, str]) -> RunConfig:
    for key in file_values:
        if key not in KEYS:
            raise UsageError(f"Unknown config key '{key}'", key=key)
    file_values = dict(file_values)
    if "q" in flag_values:
        file_values.pop("q_schedule", None)
    if "q_schedule" in flag_values:
        file_values.pop("q", None)
    raw = {**file_values, **flag_values}

    command = raw.get("command")
    if command not in COMMANDS:
        raise UsageError(f"command must be one of {', '.join(COMMANDS)}, got {command!r}", key="command")

    cfg = RunConfig(
        command=command,
        qctx=_qctx(raw),
        bn=_field(raw, "bn", BnSchedule.parse, BnSchedule.parse(config.DEFAULT_BN)),
        coeffs=_field(raw, "coeffs", _coeffs, tuple(config.DEFAULT_COEFFS)),
        f=_field(raw, "f", lambda t: get_function(t.strip()).id, config.DEFAULT_FUNCTION),
        n=_field(raw, "n", _ns, tuple(config.DEFAULT_N)),
        b=_field(raw, "b", _positive_floats, tuple(config.DEFAULT_B)),
        x=_field(raw, "x", _nonnegative_floats),
        tol_rel=_field(raw, "tol_rel", _tol_rel, config.TOL_REL),
        kmax=_field(raw, "kmax", _kmax, config.K_MAX),
        alpha=_field(raw, "alpha", _alpha, config.DEFAULT_ALPHA),
        points=_field(raw, "points", _at_least(2)),
        x_max=_field(raw, "x_max", _x_max, math.inf),
        workers=_field(raw, "workers", _at_least(1), config.DEFAULT_WORKERS),
        out=raw.get("out"),
    )
    if cfg.command == "converge" and cfg.points is not None and cfg.points < config.MIN_GRID_POINTS:
        raise UsageError(f"converge needs points >= {config.MIN_GRID_POINTS}, got {cfg.points}", key="points")

    if not positivity_report(AppellSystem(cfg.coeffs)).positive:
        log_warning(f"Appell coefficients {cfg.coeffs} are not all nonnegative; "
                    f"the operator is not guaranteed to be positive")
    return cfg


def parse_config(args: Sequence[str], config_file: str = None) -> RunConfig:
    """Flags from args over values from the config file (args' --config when not given)."""
    ns = build_parser().parse_args(list(args))
    flags = {k: v for k, v in vars(ns).items() if v is not None and k != "config"}
    path = config_file or ns.config
    return _build(read_config_file(path) if path else {}, flags)


def config_from_pairs(pairs: Iterable[Tuple[str, str]]) -> RunConfig:
    """RunConfig from (key, value) pairs, e.g. a report's metadata header."""
    return _build({_normalize_key(k): v for k, v in pairs}, {})
