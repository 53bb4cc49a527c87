"""Command-line front end.

Subcommands::

    extent        static cost report: extent, per-gate factors, gate counts
    traj-count    trajectory count for (epsilon, delta, p_max) at the
                  circuit's extent
    raw-estimate  Monte Carlo estimates at a fixed trajectory count
    estimate      adaptive estimates to a target (epsilon, delta)
    exact         exact probabilities (enumerates all trajectories)
    oracle        dense reference probabilities (small circuits only)
    rank          top-K bitstrings by estimated probability

Bitstring files are newline-separated binary strings (leftmost character =
mode 0, length = mode count); blank lines and '#' comments are skipped.
Estimation commands write one record per input line, in input order, as
JSON lines or CSV with floats at 17 significant digits.  Identical inputs
and seed give byte-identical output for any --threads value.

Exit codes: 0 success, 2 bad input, 3 capability refusal (exact/oracle cap).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .circuits import (
    BasisState,
    Circuit,
    extent,
    parse_circuit,
    trajectory_count,
)
from .engine import EstimateResult, batch_estimate
from .errors import CapacityError, InvalidCircuitError
from .reference import oracle_probability

THREADS_ENV = "FERMIBORN_THREADS"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAPACITY = 3


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise InvalidCircuitError(f"cannot read {path}: {exc.strerror}") from exc


def _load_circuit(path: str) -> Circuit:
    return parse_circuit(_read_text(path))


def _load_bitstrings(path: str, n: int) -> list[BasisState]:
    out = []
    for lineno, raw in enumerate(_read_text(path).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(BasisState.from_string(line, n))
        except InvalidCircuitError as exc:
            raise InvalidCircuitError(f"{path}:{lineno}: {exc}") from exc
    if not out:
        raise InvalidCircuitError(f"{path}: no bitstrings found")
    return out


def _default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InvalidCircuitError(
                f"{THREADS_ENV} must be an integer, got {env!r}"
            ) from exc
    return 0


_CSV_HEADER = "bitstring,probability,trajectories_used,extent,seed,achieved_epsilon"


def _emit_records(
    targets: list[BasisState],
    results: list[EstimateResult],
    fmt: str,
    with_epsilon: bool,
    out,
) -> None:
    if fmt == "csv":
        print(_CSV_HEADER, file=out)
    for state, res in zip(targets, results):
        if fmt == "csv":
            eps = _fmt(res.achieved_epsilon) if with_epsilon else ""
            print(
                f"{state.to_string()},{_fmt(res.probability)},"
                f"{res.trajectories_used},{_fmt(res.extent)},{res.seed},{eps}",
                file=out,
            )
        else:
            record = {
                "bitstring": state.to_string(),
                "probability": float(_fmt(res.probability)),
                "trajectories_used": res.trajectories_used,
                "extent": float(_fmt(res.extent)),
                "seed": res.seed,
            }
            if with_epsilon:
                record["achieved_epsilon"] = float(_fmt(res.achieved_epsilon))
            print(json.dumps(record), file=out)


def cmd_extent(args, out) -> int:
    circuit = _load_circuit(args.circuit)
    report = extent(circuit)
    print(
        json.dumps(
            {
                "extent": float(_fmt(report.extent)),
                "per_gate_factors": [float(_fmt(f)) for f in report.per_gate_factors],
                "num_cphase": circuit.k,
                "num_matchgates": circuit.matchgate_count,
                "num_modes": circuit.n,
            }
        ),
        file=out,
    )
    return EXIT_OK


def cmd_traj_count(args, out) -> int:
    circuit = _load_circuit(args.circuit)
    xi = extent(circuit).extent
    try:
        count = trajectory_count(args.epsilon, args.delta, args.pmax, xi)
    except ValueError as exc:
        raise InvalidCircuitError(str(exc)) from exc
    print(
        json.dumps(
            {
                "trajectories": count,
                "epsilon": args.epsilon,
                "delta": args.delta,
                "p_max": args.pmax,
                "extent": float(_fmt(xi)),
            }
        ),
        file=out,
    )
    return EXIT_OK


def _run_batch(args, out, mode: str) -> int:
    circuit = _load_circuit(args.circuit)
    targets = _load_bitstrings(args.bitstrings, circuit.n)
    try:
        results = batch_estimate(
            circuit,
            targets,
            mode,
            trajectories=getattr(args, "trajectories", None),
            epsilon=getattr(args, "epsilon", None),
            delta=getattr(args, "delta", None),
            seed=args.seed,
            threads=args.threads,
            chunk_size=args.chunk_size,
        )
    except ValueError as exc:
        raise InvalidCircuitError(str(exc)) from exc
    _emit_records(targets, results, args.format, mode == "adaptive", out)
    return EXIT_OK


def cmd_raw_estimate(args, out) -> int:
    return _run_batch(args, out, "raw")


def cmd_estimate(args, out) -> int:
    return _run_batch(args, out, "adaptive")


def cmd_exact(args, out) -> int:
    return _run_batch(args, out, "exact")


def cmd_oracle(args, out) -> int:
    circuit = _load_circuit(args.circuit)
    targets = _load_bitstrings(args.bitstrings, circuit.n)
    xi = extent(circuit).extent
    results = [
        EstimateResult(oracle_probability(circuit, b), 0.0, 0, xi, args.seed)
        for b in targets
    ]
    _emit_records(targets, results, args.format, False, out)
    return EXIT_OK


def cmd_rank(args, out) -> int:
    circuit = _load_circuit(args.circuit)
    targets = _load_bitstrings(args.bitstrings, circuit.n)
    results = batch_estimate(
        circuit,
        targets,
        "raw",
        trajectories=args.trajectories,
        seed=args.seed,
        threads=args.threads,
        chunk_size=args.chunk_size,
    )
    # Stable sort: ties keep input order.
    order = sorted(range(len(targets)), key=lambda i: -results[i].probability)
    top_k = args.top_k if args.top_k is not None else len(targets)
    if top_k < 0:
        raise InvalidCircuitError(f"--top-k must be nonnegative, got {top_k}")
    picked = order[:top_k]
    _emit_records(
        [targets[i] for i in picked], [results[i] for i in picked], args.format, False, out
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fermiborn",
        description=(
            "Born-rule probabilities for particle number-conserving "
            "matchgate + controlled-phase circuits"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, bitstrings=True, sampling=True):
        p.add_argument("--circuit", required=True, help="circuit document path")
        if bitstrings:
            p.add_argument(
                "--bitstrings", required=True, help="newline-separated bitstring file"
            )
        if sampling:
            p.add_argument("--seed", type=int, default=0, help="stream seed (default 0)")
            p.add_argument(
                "--threads",
                type=int,
                default=None,
                help=f"worker count, 0 = all cores (default ${THREADS_ENV} or 0)",
            )
            p.add_argument(
                "--chunk-size", type=int, default=1024, help="trajectories per chunk"
            )
            p.add_argument(
                "--format", choices=("jsonl", "csv"), default="jsonl", help="output format"
            )

    p = sub.add_parser("extent", help="report extent and gate counts")
    common(p, bitstrings=False, sampling=False)
    p.set_defaults(func=cmd_extent)

    p = sub.add_parser("traj-count", help="trajectory count for an error target")
    common(p, bitstrings=False, sampling=False)
    p.add_argument("--epsilon", type=float, required=True, help="additive error")
    p.add_argument("--delta", type=float, required=True, help="failure probability")
    p.add_argument(
        "--pmax", type=float, default=1.0, help="probability upper bound (default 1)"
    )
    p.set_defaults(func=cmd_traj_count)

    p = sub.add_parser("raw-estimate", help="fixed-trajectory Monte Carlo estimates")
    common(p)
    p.add_argument("--trajectories", type=int, required=True, help="trajectory count")
    p.set_defaults(func=cmd_raw_estimate)

    p = sub.add_parser("estimate", help="adaptive estimates to (epsilon, delta)")
    common(p)
    p.add_argument("--epsilon", type=float, required=True, help="additive error")
    p.add_argument("--delta", type=float, required=True, help="failure probability")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("exact", help="exact probabilities (2^k enumeration)")
    common(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("oracle", help="dense reference probabilities (n <= 16)")
    common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("rank", help="rank bitstrings by estimated probability")
    common(p)
    p.add_argument(
        "--trajectories",
        type=int,
        default=1000,
        help="trajectories per bitstring (default 1000)",
    )
    p.add_argument(
        "--top-k", type=int, default=None, help="emit only the top K (default: all)"
    )
    p.set_defaults(func=cmd_rank)

    return parser


def main(argv: list[str] | None = None, out=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        try:
            args.threads = _default_threads()
        except InvalidCircuitError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    stream = out if out is not None else sys.stdout
    try:
        return args.func(args, stream)
    except CapacityError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InvalidCircuitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
