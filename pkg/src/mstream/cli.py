"""Command-line front end: run, sample, exact-observe and compare programs.

``mstream run|sample|exact|check`` executes ``.ms`` dataflow programs (or IR
term literals, for ``check``) and emits machine-readable traces and
distributions.  All output is computed in full before anything is printed, so
a failure never leaves partial JSON behind.

Exit codes: 0 success; 1 check found a difference; 2 syntax errors; 3
causality or type errors (including malformed inputs); 4 a stochastic program
under the deterministic backend; 5 state-cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional

from .errors import (
    BadIndex,
    CausalityError,
    ElaborationError,
    MStreamError,
    NondeterministicStream,
    NotEnumerable,
    ParseError,
    ShapeMismatch,
    StateCapExceeded,
    TermTypeError,
)
from .lang import elaborate, parse
from .rng import mix
from .sfg_ir import (
    Signature,
    compile as compile_term,
    default_signature,
    is_stochastic,
    read_term,
)
from .stream_core import (
    obs_equal,
    observe,
    observe_marginals,
    run_det,
    sample_trace,
)
from .values import value_str, value_to_json


@dataclass(frozen=True)
class RunConfig:
    source: str
    main: Optional[str] = None
    steps: int = 9
    backend: str = "det"  # "det" | "stoch"
    mode: str = "run"  # "run" | "sample" | "exact"
    seed: int = 0
    trials: int = 1
    state_cap: Optional[int] = None
    fmt: str = "json"  # "json" | "csv" | "plain"
    inputs: Optional[str] = None
    joint: bool = False


def _json_to_value(x):
    if x is None:
        return None  # unit
    if isinstance(x, bool):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, list):
        return tuple(_json_to_value(v) for v in x)
    raise ShapeMismatch(f"not a stream value: {x!r}")


def _read_inputs(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"inputs: {e.msg}", ln, e.colno)
            if not isinstance(data, list):
                raise ShapeMismatch(
                    f"inputs line {ln}: each tick must be an array of values")
            rows.append(tuple(_json_to_value(v) for v in data))
    return rows


def _load_term(source, main, sig):
    """A .ms file elaborates as a program; anything else reads as a term."""
    if os.path.exists(source) or source.endswith(".ms"):
        try:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ParseError(f"cannot read {source}: {e.strerror}", 0, 0)
        return elaborate(parse(text), main)
    return read_term(source)


def _build(cfg: RunConfig, sig: Signature):
    term = _load_term(cfg.source, cfg.main, sig)
    return term, compile_term(term, sig)


def _input_rows(cfg, stream):
    open_program = any(stream.in_seq.at(t) != ()
                       for t in range(cfg.steps + 1))
    if cfg.inputs is None:
        if open_program:
            raise ShapeMismatch(
                "the program has inputs; provide --inputs FILE "
                "(JSON lines, one array per tick)")
        return None
    rows = _read_inputs(cfg.inputs)
    if len(rows) < cfg.steps + 1:
        raise ShapeMismatch(
            f"--steps {cfg.steps} needs {cfg.steps + 1} input rows, "
            f"got {len(rows)}")
    return rows[:cfg.steps + 1]


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------

def _row_key(v):
    """Width-1 rows display as the bare value."""
    if isinstance(v, tuple) and len(v) == 1:
        return value_str(v[0])
    return value_str(v)


def _dist_json(d):
    return {_row_key(v): f"{q.numerator}/{q.denominator}"
            for v, q in d.items()}


def _csv_lines(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r)
    return buf.getvalue().splitlines()


def _trace_lines(trace, fmt, trial=None):
    if fmt == "json":
        out = []
        for t, row in enumerate(trace):
            obj = {} if trial is None else {"trial": trial}
            obj["t"] = t
            obj["out"] = [value_to_json(v) for v in row]
            out.append(json.dumps(obj))
        return out
    if fmt == "csv":
        rows = []
        for t, row in enumerate(trace):
            head = [] if trial is None else [trial]
            rows.append(head + [t] + [value_str(v) for v in row])
        return _csv_lines(rows)
    out = []
    for t, row in enumerate(trace):
        head = "" if trial is None else f"trial {trial} "
        out.append(f"{head}t={t}: " + " ".join(value_str(v) for v in row))
    return out


def _dist_lines(dists, fmt, joint_row=None):
    if fmt == "json":
        out = [json.dumps({"t": t, "dist": _dist_json(d)})
               for t, d in enumerate(dists)]
        if joint_row is not None:
            out.append(json.dumps(joint_row))
        return out
    if fmt == "csv":
        rows = []
        for t, d in enumerate(dists):
            for v, q in d.items():
                rows.append([t, _row_key(v), f"{q.numerator}/{q.denominator}"])
        if joint_row is not None:
            for k, p in joint_row["joint"].items():
                rows.append(["joint", k, p])
        return _csv_lines(rows)
    out = []
    for t, d in enumerate(dists):
        cells = ", ".join(f"{k}: {p}" for k, p in _dist_json(d).items())
        out.append(f"t={t}  {{{cells}}}")
    if joint_row is not None:
        cells = ", ".join(f"{k}: {p}" for k, p in joint_row["joint"].items())
        out.append(f"joint  {{{cells}}}")
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_run(cfg: RunConfig) -> list:
    sig = default_signature()
    term, stream = _build(cfg, sig)
    rows = _input_rows(cfg, stream)
    if cfg.backend == "det":
        if is_stochastic(term, sig):
            raise NondeterministicStream(
                "the program samples; rerun with --backend stoch or use "
                "`mstream sample`")
        trace = run_det(stream, rows, cfg.steps)
    else:
        trace = sample_trace(stream, rows, cfg.steps, cfg.seed)
    return _trace_lines(trace, cfg.fmt)


def cmd_sample(cfg: RunConfig) -> list:
    _, stream = _build(cfg, default_signature())
    rows = _input_rows(cfg, stream)
    traces = [sample_trace(stream, rows, cfg.steps, mix(cfg.seed, i))
              for i in range(cfg.trials)]
    lines = []
    for i, tr in enumerate(traces):
        lines.extend(_trace_lines(tr, cfg.fmt, trial=i))
    return lines


def cmd_exact(cfg: RunConfig) -> list:
    _, stream = _build(cfg, default_signature())
    if cfg.inputs is not None:
        raise ShapeMismatch("exact mode takes no --inputs; it enumerates "
                            "closed programs")
    dists = observe_marginals(stream, cfg.steps, cfg.state_cap)
    joint_row = None
    if cfg.joint:
        proc = observe(stream, cfg.steps, cfg.state_cap)
        joint_row = {
            "joint": _dist_json(proc.dist(())),
            "slices": [[r.start, r.stop] for r in proc.out_slices()],
        }
    return _dist_lines(dists, cfg.fmt, joint_row)


def cmd_check(a: str, b: str, horizon: int, main: Optional[str],
              fmt: str, cap: Optional[int]) -> tuple:
    """Returns (exit_code, lines)."""
    sig = default_signature()
    sa = compile_term(_load_term(a, main, sig), sig)
    sb = compile_term(_load_term(b, main, sig), sig)
    if sa.in_seq != sb.in_seq or sa.out_seq != sb.out_seq:
        raise ShapeMismatch(
            f"interfaces differ: {sa.in_seq!r} -> {sa.out_seq!r} vs "
            f"{sb.in_seq!r} -> {sb.out_seq!r}")
    if obs_equal(sa, sb, horizon, cap):
        if fmt == "json":
            return 0, [json.dumps({"equal": True, "horizon": horizon})]
        return 0, [f"equal up to t={horizon}"]
    for k in range(horizon + 1):
        ta = observe(sa, k, cap).kernel.table()
        tb = observe(sb, k, cap).kernel.table()
        if ta != tb:
            if fmt == "json":
                diff = {
                    "equal": False,
                    "t": k,
                    "left": {value_str(r): _dist_json(d)
                             for r, d in sorted(ta.items())},
                    "right": {value_str(r): _dist_json(d)
                              for r, d in sorted(tb.items())},
                }
                return 1, [json.dumps(diff)]
            lines = [f"differ at t={k}"]
            for label, tab in (("left", ta), ("right", tb)):
                for r, d in sorted(tab.items()):
                    lines.append(f"{label} {value_str(r)} -> "
                                 f"{json.dumps(_dist_json(d))}")
            return 1, lines
    raise ShapeMismatch("behaviors differ but no differing truncation "
                        "found; this is a bug")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _nonneg(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _common(sub, inputs=True):
    sub.add_argument("source", help=".ms program file")
    sub.add_argument("--main", help="definition to run (default: `main` "
                     "or the last definition)")
    sub.add_argument("--steps", type=_nonneg, default=9,
                     help="last tick; ticks 0..N are produced (default 9)")
    sub.add_argument("--format", dest="fmt", default="json",
                     choices=("json", "csv", "plain"))
    sub.add_argument("--state-cap", type=_positive, default=None,
                     help="abort exact enumeration beyond this many states "
                     "(default: MSTREAM_STATE_CAP or 10^6)")
    if inputs:
        sub.add_argument("--inputs", default=None,
                         help="JSON-lines file, one array of values per "
                         "tick")


def build_parser():
    p = argparse.ArgumentParser(
        prog="mstream",
        description="Run, sample, exactly observe, and compare synchronous "
        "stream programs.")
    sp = p.add_subparsers(dest="cmd", required=True)

    run = sp.add_parser("run", help="execute one trace")
    _common(run)
    run.add_argument("--backend", choices=("det", "stoch"), default="det")
    run.add_argument("--seed", type=int, default=0)

    sam = sp.add_parser("sample", help="draw independent seeded traces")
    _common(sam)
    sam.add_argument("--seed", type=int, default=0)
    sam.add_argument("--trials", type=_positive, default=1)

    ex = sp.add_parser("exact", help="exact per-tick output distributions")
    _common(ex, inputs=False)
    ex.add_argument("--joint", action="store_true",
                    help="also emit the joint distribution over all ticks")

    ch = sp.add_parser("check", help="observational equality of two "
                       "programs or term literals")
    ch.add_argument("a", help=".ms file or term literal")
    ch.add_argument("b", help=".ms file or term literal")
    ch.add_argument("--horizon", type=_nonneg, default=5)
    ch.add_argument("--main", default=None)
    ch.add_argument("--format", dest="fmt", default="json",
                    choices=("json", "csv", "plain"))
    ch.add_argument("--state-cap", type=_positive, default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "check":
            code, lines = cmd_check(args.a, args.b, args.horizon, args.main,
                                    args.fmt, args.state_cap)
        else:
            cfg = RunConfig(
                source=args.source,
                main=args.main,
                steps=args.steps,
                backend=getattr(args, "backend", "det"),
                mode=args.cmd,
                seed=getattr(args, "seed", 0),
                trials=getattr(args, "trials", 1),
                state_cap=args.state_cap,
                fmt=args.fmt,
                inputs=getattr(args, "inputs", None),
                joint=getattr(args, "joint", False),
            )
            code = 0
            lines = {"run": cmd_run, "sample": cmd_sample,
                     "exact": cmd_exact}[args.cmd](cfg)
    except ParseError as e:
        print(f"mstream: syntax error: {e}", file=sys.stderr)
        return 2
    except (CausalityError, TermTypeError, ElaborationError, ShapeMismatch,
            NotEnumerable, BadIndex) as e:
        print(f"mstream: {e}", file=sys.stderr)
        return 3
    except NondeterministicStream as e:
        print(f"mstream: {e}", file=sys.stderr)
        return 4
    except StateCapExceeded as e:
        print(f"mstream: {e}", file=sys.stderr)
        return 5
    except MStreamError as e:  # anything else from the engine
        print(f"mstream: {e}", file=sys.stderr)
        return 3
    for line in lines:
        print(line)
    return code


if __name__ == "__main__":
    sys.exit(main())
