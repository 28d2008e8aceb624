"""Command-line interface.

Thin client over the library: each subcommand parses arguments, calls the
same functions the HTTP service wraps, and writes CSV/JSON artifacts.

Exit codes: 0 success; 1 validation failure (bad arguments, invalid model,
failing verify suite); 2 numerical failure (blow-up where a value was
required); 3 I/O error.

Complex scalars on the command line use Python's "a+bj" form; vector
arguments are comma-separated ("-1+0j,-0.5+0.5j").
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .closedforms import (ORACLE_DEFAULT_U, ORACLE_NAMES, oracle_eval,
                          oracle_model)
from .errors import BlowUpError
from .model import AffineModel
from .riccati import COMPLETE, solve_riccati, transform
from .simulate import SimConfig, simulate
from .verify import SUITES, run_suite

__all__ = ["main", "run", "RunConfig"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the documented contract is exit 1
    def error(self, message):
        raise _UsageError(message)


def _parse_complex_vector(text):
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise _UsageError("empty complex vector")
    try:
        return np.array([complex(p.replace(" ", "")) for p in parts])
    except ValueError as exc:
        raise _UsageError(f"cannot parse complex vector {text!r}: {exc}") from None


def _parse_real_vector(text):
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise _UsageError("empty vector")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise _UsageError(f"cannot parse vector {text!r}: {exc}") from None


def _load_model(path):
    # missing/unreadable file is an I/O error (exit 3); bad content is a
    # validation error (exit 1), so read here and parse separately
    with open(path) as f:
        text = f.read()
    return AffineModel.from_json(text)


def _threads(args):
    if getattr(args, "threads", None) is not None:
        return args.threads
    env = os.environ.get("AFFINE_KIT_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise _UsageError(f"AFFINE_KIT_THREADS={env!r} is not an integer") from None
    return 1


# ----------------------------------------------------------------------
# subcommand handlers

def _cmd_transform(args):
    model = _load_model(args.model)
    x = _parse_real_vector(args.x)
    u = _parse_complex_vector(args.u)
    value = transform(model, x, args.t, u, tol=args.tol)
    print(repr(complex(value)))
    if value.killed:
        print(f"transform killed: flow blew up before t={args.t}", file=sys.stderr)
    if args.out:
        if args.t <= 0.0:
            raise _UsageError("--out needs t > 0 (no trajectory to write at t=0)")
        solve_riccati(model, u, horizon=args.t, tol=args.tol).to_csv(args.out)
    return 0


def _cmd_riccati(args):
    model = _load_model(args.model)
    u = _parse_complex_vector(args.u)
    sol = solve_riccati(model, u, horizon=args.horizon, tol=args.tol)
    text = sol.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    if sol.status != COMPLETE:
        print(f"status={sol.status} t_star={sol.t_star!r}", file=sys.stderr)
    return 0


def _cmd_simulate(args):
    model = _load_model(args.model)
    x0 = _parse_real_vector(args.x0)
    cfg = SimConfig(dt=args.dt, horizon=args.horizon, n_paths=args.n_paths,
                    seed=args.seed, scheme=args.scheme, record_every=args.record_every)
    ensemble = simulate(model, x0, cfg, threads=_threads(args))
    if args.out:
        ensemble.to_csv(args.out)
    text = ensemble.to_summary_json(args.summary_out)
    if args.summary_out is None:
        print(text)
    return 0


def _cmd_verify(args):
    bundle = run_suite(args.suite, seed=args.seed, n_paths=args.n_paths,
                       threads=_threads(args))
    text = json.dumps(bundle, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
        print(f"suite={args.suite} passed={bundle['passed']}")
    else:
        print(text)
    return 0 if bundle["passed"] else 1


def _cmd_oracle(args):
    if args.dump_model:
        oracle_model(args.name).to_json(args.dump_model)
    u = _parse_complex_vector(args.u if args.u is not None else ORACLE_DEFAULT_U[args.name])
    x = _parse_real_vector(args.x) if args.x is not None else None
    out = oracle_eval(args.name, args.t, u, x)
    if args.dump_model:
        out["model_path"] = args.dump_model
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


# ----------------------------------------------------------------------

def _build_parser():
    parser = _Parser(prog="affine-kit",
                     description="Affine-process transforms, simulation, and checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="evaluate E_x[e^<u,X_t>]")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--x", required=True, help="start state, comma-separated reals")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--u", required=True, help='complex vector, e.g. "-1+0j"')
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", help="also write the solver trajectory CSV here")
    p.set_defaults(fn=_cmd_transform)

    p = sub.add_parser("riccati", help="integrate the Riccati system, emit CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--u", required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(fn=_cmd_riccati)

    p = sub.add_parser("simulate", help="simulate an ensemble of sample paths")
    p.add_argument("--model", required=True)
    p.add_argument("--x0", required=True, help="start state, comma-separated reals")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--n-paths", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", default="euler_project",
                   choices=("euler_project", "gillespie_exact"))
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: AFFINE_KIT_THREADS or 1)")
    p.add_argument("--out", help="long-format path CSV")
    p.add_argument("--summary-out", help="summary JSON path (stdout when omitted)")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("verify", help="run a check suite, exit 0 iff it passes")
    p.add_argument("--suite", default="all", choices=SUITES)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--n-paths", type=int, default=None,
                   help="override Monte-Carlo path counts (smoke runs)")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", help="bundle JSON path (stdout when omitted)")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("oracle", help="closed-form values for a named example")
    p.add_argument("--name", required=True, choices=ORACLE_NAMES)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--u", default=None, help="complex vector (per-model default)")
    p.add_argument("--x", default=None, help="state for the transform value")
    p.add_argument("--dump-model", help="write the example's model JSON here")
    p.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=_cmd_serve)

    return parser


@dataclass(frozen=True)
class RunConfig:
    """Programmatic mirror of one CLI invocation."""
    command: str
    model_path: str = None
    params: dict = field(default_factory=dict)


def run(cfg):
    """Dispatch a RunConfig through the same parsing and validation as the
    command line; returns the exit status."""
    argv = [cfg.command]
    if cfg.model_path is not None:
        argv += ["--model", cfg.model_path]
    for key, val in cfg.params.items():
        if val is None:
            continue
        argv += ["--" + key.replace("_", "-"), str(val)]
    return main(argv)


# values like "-1+0j" start with a dash; argparse would read them as flags,
# so fold these options into --flag=value form before parsing
_VALUE_FLAGS = ("--u", "--x", "--x0")


def _merge_value_flags(argv):
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(tok + "=" + argv[i + 1])
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None):
    parser = _build_parser()
    if argv is None:
        argv = sys.argv[1:]
    argv = _merge_value_flags(list(argv))
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except BlowUpError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
