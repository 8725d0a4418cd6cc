"""Command-line front end: ``privmac {validate,entropy,region,cover,run}``.

Exit codes: 0 success (or pass), 1 a check did not pass, 2 parse or usage
error, 3 channel validation error, 4 numerical failure.  Every output file
carries ``schema_version`` and an echo of the configuration.  The thread
count for theta-grid evaluation comes from ``PRIVMAC_THREADS`` (default 1).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .channel import ChannelParseError, ChannelValidationError, build_control_state, load_channel
from .mc import covering_experiment, end_to_end_run
from .regions import (ToleranceConfig, ih_term, imax_term, asymptotic_region, default_theta_grid,
                      private_region_union, secrecy_thresholds)
from .split import split_control_state

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3, 4
THREADS_ENV = "PRIVMAC_THREADS"


class NumericFailure(RuntimeError):
    pass


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise SystemExit(f"{THREADS_ENV} must be an integer, got {raw!r}")


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _clean(o):
    """Replace non-finite floats by strings so the output stays strict JSON."""
    if isinstance(o, float) and not math.isfinite(o):
        return "inf" if o > 0 else ("-inf" if o < 0 else "nan")
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def dump_json(doc) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True, default=_json_default) + "\n"


def _tolerances(args) -> ToleranceConfig:
    try:
        return ToleranceConfig(eps=args.eps, delta=args.delta, eps_prime=args.eps_prime,
                               gamma=args.gamma, c0=args.c0)
    except ValueError as exc:
        raise SystemExit(_usage_error(str(exc)))


def _usage_error(msg: str) -> int:
    print(f"privmac: error: {msg}", file=sys.stderr)
    return EXIT_PARSE


def _config_echo(args) -> dict:
    keys = ("command", "channel", "eps", "delta", "eps_prime", "gamma", "c0", "theta_grid",
            "trials", "seed", "theta", "senders", "messages", "max_block_size")
    out = {}
    for k in keys:
        if hasattr(args, k):
            v = getattr(args, k)
            out[k] = str(v) if isinstance(v, Path) else v
    return out


def _envelope(args, body: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "config": _config_echo(args), **body}


def _emit(args, name: str, doc: dict):
    text = dump_json(doc)
    if args.out is None:
        sys.stdout.write(text)
    else:
        write_atomic(Path(args.out) / name, text)


# -- commands -------------------------------------------------------------------------

def cmd_validate(args) -> int:
    f = load_channel(args.channel)
    ch = f.channel
    doc = _envelope(args, {"valid": True, "x_alphabet": list(ch.x_alphabet),
                           "y_alphabet": list(ch.y_alphabet), "dim_c": ch.dim_c,
                           "dim_e": ch.dim_e})
    _emit(args, "validate.json", doc)
    return EXIT_OK


def cmd_entropy(args) -> int:
    tol = _tolerances(args)
    f = load_channel(args.channel)
    cs = build_control_state(f.channel, f.p_x, f.p_y)
    ih = {k: ih_term(cs, l, r, tol.eps) for k, (l, r) in
          {"X:YC": ("X", "YC"), "Y:XC": ("Y", "XC"), "XY:C": ("XY", "C")}.items()}
    imax = {k: imax_term(cs, l, r, tol.delta_prime) for k, (l, r) in
            {"X:E": ("X", "E"), "Y:E": ("Y", "E"), "XY:E": ("XY", "E")}.items()}
    asym = asymptotic_region(cs)
    doc = _envelope(args, {
        "i_hypo": {"eps": tol.eps, "terms": ih},
        "i_max_smooth": {"eps": tol.delta_prime, "metric": "purified", "terms": imax},
        "von_neumann": dict(asym.terms),
    })
    _emit(args, "entropy.json", doc)
    return EXIT_OK


def region_outputs(args) -> tuple[str, str]:
    tol = _tolerances(args)
    f = load_channel(args.channel)
    grid = default_theta_grid(args.theta_grid)
    results = private_region_union(f.channel, f.p_x, f.p_y, tol, grid, workers=_threads())
    asym = asymptotic_region(build_control_state(f.channel, f.p_x, f.p_y))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "R1", "R2"])
    for r in results:
        for v in r.private.vertices:
            w.writerow([repr(r.theta), repr(float(v[0]) + 0.0), repr(float(v[1]) + 0.0)])
    for v in asym.difference.vertices:
        w.writerow(["asym", repr(float(v[0]) + 0.0), repr(float(v[1]) + 0.0)])

    doc = _envelope(args, {
        "tolerances": {**tol.to_dict(), "delta_prime": tol.delta_prime,
                       "threshold_constant": tol.threshold_constant},
        "theta_grid": grid,
        "regions": [r.to_dict() for r in results],
        "union_empty": all(r.private.is_empty() for r in results),
        "asymptotic": asym.to_dict(),
    })
    return buf.getvalue(), dump_json(doc)


def cmd_region(args) -> int:
    csv_text, report = region_outputs(args)
    out = Path(args.out or ".")
    write_atomic(out / "regions.csv", csv_text)
    write_atomic(out / "report.json", report)
    return EXIT_OK


def cover_report(args) -> dict:
    tol = _tolerances(args)
    f = load_channel(args.channel)
    cs = build_control_state(f.channel, f.p_x, f.p_y)
    if args.senders == 1:
        # single-sender covering: K = 2^ceil(I_max(X:E) - log delta + 2)
        need = {"X": imax_term(cs, "X", "E", tol.delta_prime) - math.log2(tol.delta) + 2}
        state = cs
    elif args.senders == 2:
        const = tol.threshold_constant
        need = {"X": max(0.0, imax_term(cs, "X", "E", tol.delta_prime) + const),
                "Y": max(0.0, imax_term(cs, "Y", "EX", tol.delta_prime) + const + tol.c0)}
        state = cs
    else:
        state = split_control_state(cs, args.theta)
        t = secrecy_thresholds(state, tol)
        need = {"U": t.log_k1, "Y": t.log_k2, "V": t.log_k3}
    sizes = {k: 2 ** math.ceil(v) for k, v in need.items()}
    rep = covering_experiment(state, sizes, tol, args.trials, args.seed, thresholds=need)
    return _envelope(args, {"covering": rep.to_dict()})


def cmd_cover(args) -> int:
    doc = cover_report(args)
    _emit(args, "cover.json", doc)
    for w in doc["covering"]["warnings"]:
        print(f"privmac: warning: {w}", file=sys.stderr)
    return EXIT_OK if doc["covering"]["pass"] else EXIT_FAIL


def run_report(args) -> dict:
    tol = _tolerances(args)
    f = load_channel(args.channel)
    rep = end_to_end_run(f.channel, f.p_x, f.p_y, tol, args.theta, tuple(args.messages),
                         args.seed, max_block_size=args.max_block_size)
    t = rep["targets"]
    rep["pass"] = bool(rep["decode_error"] <= t["decode_49_sqrt_eps"]
                       and rep["secrecy_max_deviation"] <= t["secrecy_40_delta_1_8"])
    return _envelope(args, {"run": rep})


def cmd_run(args) -> int:
    doc = run_report(args)
    _emit(args, "run.json", doc)
    for w in doc["run"]["warnings"]:
        print(f"privmac: warning: {w}", file=sys.stderr)
    return EXIT_OK if doc["run"]["pass"] else EXIT_FAIL


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="privmac", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tolerances=True):
        sp.add_argument("--channel", type=Path, required=True, help="channel JSON file")
        sp.add_argument("--out", type=Path, default=None,
                        help="output directory (JSON goes to stdout when omitted)")
        if tolerances:
            sp.add_argument("--eps", type=float, default=0.05)
            sp.add_argument("--delta", type=float, default=0.1)
            sp.add_argument("--eps-prime", type=float, default=0.05)
            sp.add_argument("--gamma", type=float, default=0.01)
            sp.add_argument("--c0", type=float, default=0.0)

    common(sub.add_parser("validate", help="check a channel file"), tolerances=False)
    common(sub.add_parser("entropy", help="one-shot and asymptotic information terms"))
    sp = sub.add_parser("region", help="private regions over a theta grid")
    common(sp)
    sp.add_argument("--theta-grid", type=int, default=33, help="number of theta points")
    sp = sub.add_parser("cover", help="Monte-Carlo covering experiment")
    common(sp)
    sp.add_argument("--senders", type=int, choices=(1, 2, 3), default=2)
    sp.add_argument("--theta", type=float, default=0.5, help="split used with --senders 3")
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp = sub.add_parser("run", help="end-to-end private code simulation")
    common(sp)
    sp.add_argument("--theta", type=float, default=0.5)
    sp.add_argument("--messages", type=int, nargs=2, default=[2, 2], metavar=("M", "N"))
    sp.add_argument("--max-block-size", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    return p


COMMANDS = {"validate": cmd_validate, "entropy": cmd_entropy, "region": cmd_region,
            "cover": cmd_cover, "run": cmd_run}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        if isinstance(exc.code, int):
            return exc.code
        print(f"privmac: error: {exc.code}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        return _usage_error(str(exc))
    except ChannelParseError as exc:
        print(dump_json({"schema_version": SCHEMA_VERSION, "error": "parse",
                         "message": str(exc)}), file=sys.stderr, end="")
        return EXIT_PARSE
    except ChannelValidationError as exc:
        print(dump_json({"schema_version": SCHEMA_VERSION, "error": "validation",
                         "issues": exc.issues}), file=sys.stderr, end="")
        return EXIT_INVALID
    except (FloatingPointError, np.linalg.LinAlgError, NumericFailure) as exc:
        print(f"privmac: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception as exc:
        try:
            import cvxpy
        except ImportError:  # pragma: no cover
            raise exc
        if isinstance(exc, cvxpy.error.SolverError):
            print(f"privmac: numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        raise


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
