"""Command-line driver.

Every subcommand writes one JSON document (``schema_version`` 1) or one CSV
table with a header row and a ``schema_version`` column.  Parameters are
resolved with the precedence

    command-line flag  >  environment variable ZX_<NAME>  >  --config file  >  default

where the config file holds ``name = value`` lines (``#`` starts a comment).
Unknown keys in the config file are rejected; unrelated ZX_ variables are
ignored.

Exit codes: 0 success, 1 usage or invalid argument, 2 capacity, 3 domain or range.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import arith_core, dickman, evaluators, resonance, scan
from .characters import build_character_group
from .errors import CapacityError, DomainError, InvalidArgumentError, OutOfRangeError, ZetaDerivError

SCHEMA_VERSION = 1
ENV_PREFIX = "ZX_"

EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


#: JSON Schema (draft 2020-12) of every document written with --format json.
JSON_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "command", "parameters", "result"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": ["rho", "constants", "psi", "friable", "scan-zeta", "scan-l", "certificate",
                             "resonance-char"]},
        "parameters": {"type": "object"},
        "result": {"type": "object"},
    },
}


def _float_list(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


@dataclass(frozen=True)
class Param:
    name: str
    parse: Callable[[Any], Any]
    default: Any = None
    help: str = ""
    required: bool = False


COMMON = [
    Param("out", str, "-", "output path ('-' for stdout)"),
    Param("format", str, "json", "csv or json"),
    Param("threads", _int, 1, "worker threads"),
]

COMMANDS: dict[str, list[Param]] = {
    "rho": [
        Param("u_max", float, dickman.DEFAULT_U_MAX, "largest u in the table"),
        Param("step", float, dickman.DEFAULT_STEP, "grid step (1/step must be an integer)"),
    ],
    "constants": [
        Param("ell_max", _int, 3, "largest ell"),
        Param("A_list", _float_list, [0.0, 0.5, 1.0], "comma-separated A values"),
    ],
    "psi": [
        Param("x", float, required=True, help="upper limit"),
        Param("y", float, required=True, help="friability bound"),
    ],
    "friable": [
        Param("x", float, required=True, help="upper limit"),
        Param("y", float, required=True, help="friability bound"),
        Param("t", float, 0.0, "height"),
    ],
    "scan-zeta": [
        Param("T", float, required=True, help="scan [T, 2T]"),
        Param("sigma", float, None, "real part (give sigma or A)"),
        Param("A", float, None, "sigma = 1 - A / log log T"),
        Param("ell", _int, 0, "derivative order"),
        Param("N", _int, None, "truncation length (default floor(T))"),
        Param("grid_step", float, None, "coarse grid step (default 0.1/log N)"),
        Param("refine_iters", _int, scan.DEFAULT_REFINE_ITERS, "golden-section rounds"),
        Param("trend", _bool, False, "emit the trend table instead of a single scan"),
        Param("heights", _float_list, list(scan.TREND_HEIGHTS), "trend heights T"),
        Param("ells", _int_list, list(scan.TREND_ELLS), "trend derivative orders"),
        Param("A_list", _float_list, list(scan.TREND_AS), "trend A values"),
    ],
    "scan-l": [
        Param("q", _int, required=True, help="modulus"),
        Param("ell", _int, 0, "derivative order"),
        Param("sigma", float, 1.0, "real point"),
        Param("N", _int, 10**6, "truncation length"),
    ],
    "certificate": [
        Param("target", str, None, "zeta-1line or zeta-subone (default: chosen from A(T))"),
        Param("T", float, required=True, help="height"),
        Param("ell", _int, 0, "derivative order"),
        Param("sigma", float, 1.0, "real part"),
        Param("y", float, None, "override resonator y (needs b)"),
        Param("b", _int, None, "override resonator b (needs y)"),
    ],
    "resonance-char": [
        Param("q", _int, required=True, help="modulus"),
        Param("ell", _int, 0, "derivative order"),
        Param("sigma", float, 1.0, "real point"),
        Param("M", _int, None, "resonator length (default floor(q^1/4) + 1)"),
        Param("N", _int, None, "truncation length (default floor(q^3/4))"),
    ],
}

POSITIONAL = {"psi": ("x", "y"), "friable": ("x", "y", "t")}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zetaderiv", description="Derivatives of zeta and L-functions near the 1-line.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for command, params in COMMANDS.items():
        p = sub.add_parser(command)
        for name in POSITIONAL.get(command, ()):
            p.add_argument(f"pos_{name}", nargs="?", default=None, metavar=name)
        for param in params + COMMON:
            p.add_argument(_flag(param.name), dest=param.name, default=None, help=param.help)
        p.add_argument("--config", default=None, help="key = value file")
    return parser


def read_config(path: str) -> dict[str, str]:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def resolve(command: str, args: argparse.Namespace, env: dict[str, str]) -> dict[str, Any]:
    """Merge flags, environment and config file into typed parameters."""
    params = COMMANDS[command] + COMMON
    known = {p.name for p in params}
    config = read_config(args.config) if args.config else {}
    unknown = sorted(set(config) - known)
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
    out: dict[str, Any] = {}
    for p in params:
        raw = getattr(args, p.name, None)
        if raw is None and p.name in POSITIONAL.get(command, ()):
            raw = getattr(args, f"pos_{p.name}", None)
        if raw is None:
            raw = env.get(ENV_PREFIX + p.name.upper())
        if raw is None:
            raw = config.get(p.name)
        if raw is None:
            if p.required:
                raise UsageError(f"missing required parameter {p.name!r}")
            out[p.name] = p.default
            continue
        try:
            out[p.name] = p.parse(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {p.name}: {exc}") from exc
    if out["format"] not in ("csv", "json"):
        raise UsageError(f"--format must be csv or json, got {out['format']!r}")
    if out["threads"] < 1:
        raise UsageError("--threads must be >= 1")
    return out


def check_writable(path: str) -> None:
    if path == "-":
        return
    target = os.path.abspath(path)
    parent = os.path.dirname(target)
    if os.path.isdir(target):
        raise UsageError(f"output path {path} is a directory")
    if not os.path.isdir(parent):
        raise UsageError(f"output directory {parent} does not exist")
    if os.path.exists(target) and not os.access(target, os.W_OK):
        raise UsageError(f"output path {path} is not writable")
    if not os.access(parent, os.W_OK):
        raise UsageError(f"output directory {parent} is not writable")


# ---------------------------------------------------------------- serialization

def _plain(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def _json_scalar(value) -> str:
    value = _plain(value)
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return "null"
        return "%.17g" % value
    if isinstance(value, str):
        import json

        return json.dumps(value, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with doubles at 17 significant digits and NaN as null."""
    obj = _plain(obj)
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{_json_scalar(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(_plain(v), (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json_scalar(v) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in seq) + "\n" + pad + "]"
    return _json_scalar(obj)


def _csv_cell(value) -> str:
    value = _plain(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def flatten(obj, prefix: str = "") -> dict:
    """Nested dicts and lists to a single row with dotted keys."""
    obj = _plain(obj)
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            out.update(flatten(v, f"{prefix}{k}."))
        return out
    if isinstance(obj, (list, tuple)):
        out = {}
        for i, v in enumerate(obj):
            out.update(flatten(v, f"{prefix}{i}."))
        return out
    return {prefix[:-1]: obj}


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["schema_version"] + list(rows[0].keys()) if rows else ["schema_version"]
    writer.writerow(header)
    for row in rows:
        writer.writerow([str(SCHEMA_VERSION)] + [_csv_cell(row.get(k)) for k in header[1:]])
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def cmd_rho(p: dict) -> tuple[dict, list[dict]]:
    table = dickman.build_dickman_table(p["u_max"], p["step"])
    u = table.u.tolist()
    lr = table.values.tolist()
    rho = [math.exp(v) for v in lr]
    rows = [{"u": a, "rho": b, "log_rho": c} for a, b, c in zip(u, rho, lr)]
    return {"u_max": table.u_max, "step": table.step, "u": u, "rho": rho, "log_rho": lr}, rows


def cmd_constants(p: dict) -> tuple[dict, list[dict]]:
    if p["ell_max"] < 0:
        raise InvalidArgumentError("ell_max must be nonnegative")
    table = dickman.default_table()
    rows = []
    for ell in range(p["ell_max"] + 1):
        Y = dickman.weighted_moment(table, ell, 0.0).value
        for A in p["A_list"]:
            C = dickman.weighted_moment(table, ell, 2 * A).value
            D = dickman.weighted_moment(table, ell, A).value
            rows.append({"ell": ell, "A": A, "Y": Y, "C": C, "D": D, "D_le_C": D <= C})
    return {"rows": rows}, rows


def cmd_psi(p: dict) -> tuple[dict, list[dict]]:
    count = arith_core.psi_count(p["x"], p["y"])
    result = {"x": p["x"], "y": p["y"], "psi": count}
    return result, [result]


def cmd_friable(p: dict) -> tuple[dict, list[dict]]:
    d = evaluators.friable_approx_report(p["x"], p["y"], p["t"]).to_dict()
    return d, [d]


def cmd_scan_zeta(p: dict) -> tuple[dict, list[dict]]:
    if p["trend"]:
        rows = scan.trend_table(p["heights"], p["ells"], p["A_list"], p["threads"], p["refine_iters"])
        return {"rows": rows, "any_violation": any(r["violation"] for r in rows)}, rows
    if (p["sigma"] is None) == (p["A"] is None):
        raise UsageError("give exactly one of --sigma and --A")
    N = p["N"] if p["N"] is not None else math.floor(p["T"])
    kw = {"grid_step": p["grid_step"], "refine_iters": p["refine_iters"]}
    if p["sigma"] is not None:
        cfg = scan.ScanConfig(p["T"], p["sigma"], p["ell"], N, **kw)
    else:
        cfg = scan.ScanConfig.from_A(p["T"], p["A"], p["ell"], N, **kw)
    res = scan.scan_zeta_max(cfg, p["threads"])
    result = {"T": cfg.T, "sigma": cfg.sigma, "A": cfg.A, "ell": cfg.ell, "N": cfg.N,
              "grid_step": cfg.grid_step, "refine_iters": cfg.refine_iters}
    result.update(res.to_dict())
    summary = {k: v for k, v in result.items() if k not in ("candidates", "refinement_history")}
    return result, [summary]


def cmd_scan_l(p: dict) -> tuple[dict, list[dict]]:
    group = build_character_group(p["q"])
    index, value = scan.scan_l_max(group, p["ell"], p["sigma"], p["N"], p["threads"])
    result = {"q": group.q, "ell": p["ell"], "sigma": p["sigma"], "N": p["N"],
              "chi_index": index, "chi_vector": list(group.index_vector(index)), "value": value}
    row = dict(result)
    row["chi_vector"] = " ".join(str(v) for v in result["chi_vector"])
    return result, [row]


def cmd_certificate(p: dict) -> tuple[dict, list[dict]]:
    if (p["y"] is None) != (p["b"] is None):
        raise UsageError("--y and --b must be given together")
    override = (p["y"], p["b"]) if p["y"] is not None else None
    rep = resonance.zeta_certificate(p["T"], p["ell"], p["sigma"], override_params=override, target=p["target"])
    d = rep.to_dict()
    return d, [flatten(d)]


def cmd_resonance_char(p: dict) -> tuple[dict, list[dict]]:
    group = build_character_group(p["q"])
    M = p["M"] if p["M"] is not None else math.floor(group.q ** 0.25) + 1
    N = p["N"] if p["N"] is not None else math.floor(group.q ** 0.75)
    rep = resonance.character_resonance(group, p["ell"], p["sigma"], resonance.default_character_weights(M),
                                        M, N, p["threads"])
    d = rep.to_dict()
    return d, [flatten(d)]


HANDLERS = {
    "rho": cmd_rho,
    "constants": cmd_constants,
    "psi": cmd_psi,
    "friable": cmd_friable,
    "scan-zeta": cmd_scan_zeta,
    "scan-l": cmd_scan_l,
    "certificate": cmd_certificate,
    "resonance-char": cmd_resonance_char,
}


def render(command: str, params: dict, result: dict, rows: list[dict]) -> str:
    if params["format"] == "csv":
        return to_csv(rows)
    shown = {k: v for k, v in params.items() if k not in ("out", "format", "threads")}
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "parameters": shown, "result": result}
    return to_json(doc) + "\n"


def run(argv=None, env=None) -> int:
    env = dict(os.environ) if env is None else env
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        params = resolve(args.command, args, env)
        check_writable(params["out"])
        result, rows = HANDLERS[args.command](params)
        text = render(args.command, params, result, rows)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidArgumentError as exc:
        print(f"invalid argument: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (DomainError, OutOfRangeError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ZetaDerivError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if params["out"] == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(params["out"], "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"cannot write {params['out']}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    return EXIT_OK


def main(argv=None) -> int:
    return run(argv)


def entry_point() -> None:
    sys.exit(run())
