"""``qtsplin`` command line.

Every command prints one JSON report on stdout. Exit status: 0 for an
affirmative result, 1 for a negative mathematical verdict, 2 for usage or
input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from qtsplin.cvp import kl_cvp_decompose, weak_sum_decompose
from qtsplin.generators import FAMILIES, generate
from qtsplin.io import (
    lin_to_dict,
    quad_to_dict,
    read_linear,
    read_quadratic,
    write_linear,
    write_quadratic,
)
from qtsplin.linearizer import EXHAUSTIVE_VERIFY_MAX_N, linearize, verify_linearization
from qtsplin.model import (
    InputError,
    LinearCostMatrix,
    QuadraticCostMatrix,
    Tour,
    format_rational,
    to_rational,
    tour_cost_linear,
    tour_cost_quadratic,
)
from qtsplin.oracle import DEFAULT_CAP, brute_linearize, enumerate_tours
from qtsplin.reduction import is_quadratic_reduced, qrf_decompose

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _fail(message)


class _Fail(Exception):
    pass


def _fail(message: str):
    raise _Fail(message)


def _emit(report: dict) -> None:
    sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")


def _tour_report(Q: Optional[QuadraticCostMatrix], C: Optional[LinearCostMatrix], tour: Tour) -> dict:
    out = {"tour": list(tour.order)}
    if Q is not None:
        out["quadratic_value"] = format_rational(tour_cost_quadratic(Q, tour))
    if C is not None:
        out["linear_value"] = format_rational(tour_cost_linear(C, tour))
    return out


def _parse_verify(text: str) -> tuple[str, int]:
    if text in ("auto", "exhaustive", "off"):
        return text, 0
    if text.startswith("sample:"):
        try:
            count = int(text.split(":", 1)[1])
        except ValueError:
            count = 0
        if count > 0:
            return "sample", count
    _fail(f"--verify expects exhaustive, sample:N, auto or off, got {text!r}")


def _resolve(mode: str, n: int) -> str:
    if mode == "auto":
        return "exhaustive" if n <= EXHAUSTIVE_VERIFY_MAX_N else "sample"
    return mode


def _check_cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        _fail(f"{what} enumerates {n}-node tours; n={n} exceeds --cap {cap}")


def cmd_linearize(args) -> int:
    Q, _ = read_quadratic(args.quad)
    mode, samples = _parse_verify(args.verify)
    mode = _resolve(mode, Q.n)
    if mode == "exhaustive":
        _check_cap(Q.n, args.cap, "exhaustive verification")
    out = linearize(Q, fast_path=args.fast_path, strict=args.strict)
    stats = dict(out.stats)
    if not args.timings:
        stats.pop("timings", None)
    report = {"linearizable": out.linearizable, "stats": stats}
    if not out.linearizable:
        witness = out.witness.to_dict()
        if out.witness.matrix is not None:
            witness["matrix"] = lin_to_dict(out.witness.matrix)
        report["witness"] = witness
        _emit(report)
        return EXIT_NEGATIVE

    C = out.linearization
    report["C"] = lin_to_dict(C)
    if args.out:
        write_linear(args.out, C)
    if mode != "off":
        bad = verify_linearization(Q, C, mode=mode, samples=samples or 1000, seed=args.seed)
        report["verification"] = {"mode": mode, "passed": bad is None}
        if bad is not None:
            # a failed self-check is a defect, not a verdict about Q
            report["verification"]["counterexample"] = _tour_report(Q, C, bad)
            _emit(report)
            sys.stderr.write("internal error: returned linearization failed verification\n")
            return EXIT_INPUT
    _emit(report)
    return EXIT_OK


def cmd_reduce(args) -> int:
    Q, meta = read_quadratic(args.quad)
    dec = qrf_decompose(Q)
    report = {"n": Q.n}
    if args.reduced:
        write_quadratic(args.reduced, dec.reduced, meta)
        report["reduced"] = str(args.reduced)
    else:
        report["reduced"] = quad_to_dict(dec.reduced)
    if args.linear:
        write_linear(args.linear, dec.linear, meta)
        report["linear"] = str(args.linear)
    else:
        report["linear"] = lin_to_dict(dec.linear)
    _emit(report)
    return EXIT_OK


def cmd_verify_decomposition(args) -> int:
    Q, _ = read_quadratic(args.quad)
    R, _ = read_quadratic(args.reduced)
    L, _ = read_linear(args.linear)
    if not Q.n == R.n == L.n:
        _fail(f"dimension mismatch: {Q.n}, {R.n}, {L.n}")
    _check_cap(Q.n, args.cap, "verify-decomposition")
    report = {"reduced_form": is_quadratic_reduced(R), "identity": True}
    for t in enumerate_tours(Q.n, args.cap):
        if tour_cost_quadratic(Q, t) != tour_cost_quadratic(R, t) + tour_cost_linear(L, t):
            report["identity"] = False
            report["counterexample"] = _tour_report(Q, None, t)
            report["counterexample"]["decomposed_value"] = format_rational(
                tour_cost_quadratic(R, t) + tour_cost_linear(L, t)
            )
            break
    _emit(report)
    return EXIT_OK if report["identity"] and report["reduced_form"] else EXIT_NEGATIVE


def _parse_arc(text: str) -> tuple[int, int]:
    parts = text.split(",")
    try:
        k, l = (int(p) for p in parts)
    except ValueError:
        _fail(f"--kl expects two node indices 'k,l', got {text!r}")
    return k, l


def cmd_cvp(args) -> int:
    M, _ = read_linear(args.lin)
    if M.n < 3:
        _fail(f"CVP check needs at least 3 nodes, got {M.n}")
    if args.kl:
        k, l = _parse_arc(args.kl)
        cert = kl_cvp_decompose(M, k, l)
        report = {"kl": [k, l], "has_property": cert is not None}
        if cert is not None:
            report["constant"] = format_rational(cert.constant)
            report["a"] = {str(u): format_rational(x) for u, x in sorted(cert.a.items())}
            report["b"] = {str(v): format_rational(x) for v, x in sorted(cert.b.items())}
    else:
        cert = weak_sum_decompose(M)
        report = {"has_property": cert is not None}
        if cert is not None:
            report["constant"] = format_rational(cert.constant)
            report["a"] = [format_rational(x) for x in cert.a]
            report["b"] = [format_rational(x) for x in cert.b]
    _emit(report)
    return EXIT_OK if cert is not None else EXIT_NEGATIVE


def cmd_oracle(args) -> int:
    Q, _ = read_quadratic(args.quad)
    _check_cap(Q.n, args.cap, "oracle")
    C = brute_linearize(Q, cap=args.cap)
    report = {"linearizable": C is not None, "tours": len(enumerate_tours(Q.n, args.cap))}
    if C is not None:
        report["C"] = lin_to_dict(C)
        if args.out:
            write_linear(args.out, C)
    _emit(report)
    return EXIT_OK if C is not None else EXIT_NEGATIVE


def cmd_verify(args) -> int:
    Q, _ = read_quadratic(args.quad)
    C, _ = read_linear(args.lin)
    if Q.n != C.n:
        _fail(f"dimension mismatch: Q on {Q.n} nodes, C on {C.n}")
    mode, samples = _parse_verify(args.mode)
    if mode == "off":
        _fail("verify needs a mode other than off")
    mode = _resolve(mode, Q.n)
    if mode == "exhaustive":
        _check_cap(Q.n, args.cap, "exhaustive verification")
    bad = verify_linearization(Q, C, mode=mode, samples=samples or 1000, seed=args.seed)
    report = {"valid": bad is None, "mode": mode}
    if bad is not None:
        report["counterexample"] = _tour_report(Q, C, bad)
    _emit(report)
    return EXIT_OK if bad is None else EXIT_NEGATIVE


def cmd_generate(args) -> int:
    try:
        density = to_rational(args.density)
    except InputError:
        _fail(f"--density must be an exact rational such as 1/2, got {args.density!r}")
    inst = generate(
        args.family, args.n, args.seed,
        density=density, epsilon=args.epsilon, base=args.base,
    )
    meta = {"family": inst.family, "seed": inst.seed}
    write_quadratic(args.out, inst.Q, meta)
    report = {"family": inst.family, "n": inst.Q.n, "seed": inst.seed, "instance": str(args.out)}
    if inst.planted is not None:
        planted_path = args.planted_out or _planted_path(args.out)
        write_linear(planted_path, inst.planted, meta)
        report["planted"] = str(planted_path)
    _emit(report)
    return EXIT_OK


def _planted_path(out: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + ".planted" + (p.suffix or ".json")))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qtsplin", description="Exact linearization of quadratic TSP cost matrices.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("linearize", help="decide linearizability and build C")
    p.add_argument("quad")
    p.add_argument("--fast-path", action="store_true", help="try the row-CVP sufficient test first")
    p.add_argument("--verify", default="auto", help="exhaustive | sample:N | auto | off (default auto)")
    p.add_argument("--strict", action="store_true", help="reject nonzero structurally null cells")
    p.add_argument("--timings", action="store_true", help="include per-stage timings in stats")
    p.add_argument("--out", help="also write C to this linear instance file")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled verification")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("reduce", help="split Q into reduced form Q_R and linear part L")
    p.add_argument("quad")
    p.add_argument("--reduced", help="output file for Q_R")
    p.add_argument("--linear", help="output file for L")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("verify-decomposition", help="check Q[t] = Q_R[t] + L(t) on every tour")
    p.add_argument("quad")
    p.add_argument("reduced")
    p.add_argument("linear")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.set_defaults(func=cmd_verify_decomposition)

    p = sub.add_parser("cvp", help="constant value property of a linear matrix")
    p.add_argument("lin")
    p.add_argument("--kl", help="restrict to tours through arc k,l")
    p.set_defaults(func=cmd_cvp)

    p = sub.add_parser("oracle", help="brute-force linearization by tour enumeration")
    p.add_argument("quad")
    p.add_argument("--out", help="write the oracle's C to this file")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="check a linearization, reporting a counterexample tour")
    p.add_argument("quad")
    p.add_argument("lin")
    p.add_argument("--mode", default="auto", help="exhaustive | sample:N | auto (default auto)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", help="write a seeded instance file")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--density", default="1/2", help="cell density for the random family")
    p.add_argument("--epsilon", default="1", help="perturbation size for the perturbed family")
    p.add_argument("--base", default="diagonal", choices=("diagonal", "tensor_sum", "row_cvp"),
                   help="planted family underlying perturbed / equivalence_noise")
    p.add_argument("--out", required=True)
    p.add_argument("--planted-out", help="planted linearization file (default <out>.planted.json)")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (_Fail, InputError) as exc:
        message = str(exc)
    except OSError as exc:
        message = f"{exc.filename}: {exc.strerror}"
    sys.stderr.write(json.dumps({"error": message}, sort_keys=True) + "\n")
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
