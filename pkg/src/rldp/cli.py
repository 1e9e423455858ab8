"""Command-line interface: ``rldp {fit,build,eval,audit,obfuscate,sweep}``.

Exit codes: 0 success or audit pass, 1 audit fail, 2 usage or input error,
3 precondition error (zero marginals, dimension cap, infeasible parameters).
"""

from __future__ import annotations

import argparse
import csv
import sys
from typing import Optional

from rldp.audit import check_ldp, check_rldp_maximal, serialize_report, stress_rldp
from rldp.core import JointDistribution, deserialize_distribution, serialize_distribution
from rldp.errors import (
    DimensionMismatch,
    EmptyData,
    Infeasible,
    InvariantViolation,
    ParseError,
    PreconditionError,
    RLDPError,
    ZeroMarginal,
)
from rldp.infotheory import entropy
from rldp.protocols import (
    Method,
    ProtocolSpec,
    build_grr,
    build_grr_cr,
    build_ir,
    build_srr,
    build_ue,
    build_ue_cr,
    deserialize_spec,
    materialize,
    obfuscate_many,
    optimize_protocol,
    serialize_spec,
)
from rldp.protocols.utility import utility
from rldp.randstats import SeededRng, empirical_distribution, load_categorical_csv
from rldp.sweep import SweepConfig, parse_eps_grid, run_sweep, write_csv
from rldp.uncertainty import ConfidenceSet

EXIT_OK, EXIT_AUDIT_FAIL, EXIT_USAGE, EXIT_PRECONDITION = 0, 1, 2, 3


class UsageError(RLDPError):
    pass


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w") as fh:
        fh.write(text)


def _load_dist(path: str) -> JointDistribution:
    return deserialize_distribution(_read(path))


def _load_spec(path: str) -> ProtocolSpec:
    return deserialize_spec(_read(path))


def _confidence_set(P: JointDistribution, n: Optional[int], alpha: float) -> ConfidenceSet:
    n = n if n is not None else P.n
    if n is None:
        raise UsageError("sample size unknown: pass --n or use a distribution file with 'n'")
    return ConfidenceSet.from_sample(P, int(n), alpha)


# -- subcommands --------------------------------------------------------------


def cmd_fit(args) -> int:
    data = load_categorical_csv(args.input, args.s_col, args.u_col)
    P = empirical_distribution(data.counts(), data.alphabet, args.smoothing,
                               s_labels=data.s_labels, u_labels=data.u_labels)
    _write(args.out, serialize_distribution(P))
    return EXIT_OK


def _build(args, P: JointDistribution) -> ProtocolSpec:
    method = Method.parse(args.method)
    eps = args.eps
    if method is Method.GRR:
        return build_grr(P.alphabet, eps)
    if method is Method.SRR:
        return build_srr(P.alphabet, eps)
    if method is Method.UE:
        return build_ue(P.alphabet, eps)
    F = _confidence_set(P, args.n, args.alpha)
    if method is Method.POLYOPT:
        from rldp.polyopt import polyopt_build

        spec, _ = polyopt_build(F, eps, args.objective, include_diagonal=args.include_diagonal)
        return spec
    if args.eps2 is None:
        return optimize_protocol(F, method, eps)
    if method is Method.IR:
        return build_ir(F, eps, args.eps2)
    if method is Method.GRR_CR:
        return build_grr_cr(F, eps, args.eps2)
    if args.kappa is None or args.lam is None:
        raise UsageError("ue-cr with --eps2 also needs --kappa and --lambda (or use --optimize)")
    return build_ue_cr(F, eps, args.eps2, args.kappa, args.lam)


def cmd_build(args) -> int:
    P = _load_dist(args.dist)
    spec = _build(args, P)
    _write(args.out, serialize_spec(spec))
    return EXIT_OK


def cmd_eval(args) -> int:
    spec = _load_spec(args.protocol)
    P = _load_dist(args.dist)
    u = utility(spec, P)
    lines = [f"utility\t{u!r}"]
    if args.normalized:
        h = entropy(P)
        lines.append(f"normalized_utility\t{(u / h if h > 0 else 0.0)!r}")
    if args.eval_dist:
        Q = _load_dist(args.eval_dist)
        v = utility(spec, Q)
        lines.append(f"eval_utility\t{v!r}")
        if args.normalized:
            h = entropy(Q)
            lines.append(f"eval_normalized_utility\t{(v / h if h > 0 else 0.0)!r}")
        lines.append(f"difference\t{(v - u)!r}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_audit(args) -> int:
    spec = _load_spec(args.protocol)
    eps = spec.eps if args.eps is None else args.eps
    kind = spec.certificate.get("guarantee", "")
    channel = materialize(spec)
    if args.mode == "ldp" or (args.mode == "auto" and kind == "ldp"):
        report = check_ldp(channel, eps)
    elif args.mode == "maximal" or (args.mode == "auto" and kind == "maximal-set"):
        report = check_rldp_maximal(channel, spec.alphabet, eps)
    else:
        if args.dist is None:
            raise UsageError("stress audits need --dist for the confidence set")
        P = _load_dist(args.dist)
        n = args.n if args.n is not None else spec.certificate.get("n")
        alpha = args.alpha if args.alpha is not None else spec.certificate.get("alpha") or 0.05
        F = _confidence_set(P, n, alpha)
        report = stress_rldp(channel, F, eps, args.samples, SeededRng(args.seed))
    text = serialize_report(report)
    if args.out:
        _write(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_AUDIT_FAIL


def cmd_obfuscate(args) -> int:
    spec = _load_spec(args.protocol)
    s_labels = u_labels = None
    if args.dist:
        P = _load_dist(args.dist)
        s_labels, u_labels = P.s_labels, P.u_labels
    if s_labels is None:
        s_labels = tuple(str(i) for i in range(spec.alphabet.a1))
    if u_labels is None:
        u_labels = tuple(str(i) for i in range(spec.alphabet.a2))
    data = load_categorical_csv(args.input, args.s_col, args.u_col, s_labels, u_labels)
    if data.alphabet != spec.alphabet:
        raise DimensionMismatch(f"data alphabet {data.alphabet} does not match protocol {spec.alphabet}")
    xs = data.s_codes * spec.alphabet.a2 + data.u_codes
    ys = obfuscate_many(spec, xs, SeededRng(args.seed))
    labels = spec.output_labels
    with open(args.input, newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    header, body = rows[0], [r for r in rows[1:] if r]
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header + ["released", "released_label"])
        for row, y in zip(body, ys):
            writer.writerow(row + [int(y), labels[int(y)]])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = SweepConfig(
        methods=[m for m in args.methods.split(",") if m.strip()],
        eps_grid=parse_eps_grid(args.eps_grid), a1=args.a1, a2=args.a2, n=args.n,
        trials=args.trials, alpha=args.alpha, seed=args.seed, robustness=args.robustness,
        timing=args.timing, audit_share=args.audit_share, audit_samples=args.audit_samples,
    )
    records = run_sweep(cfg)
    if args.out == "-":
        write_csv(records, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            write_csv(records, fh)
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------


def _nonneg_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v >= 0 or v == float("inf"):
        raise argparse.ArgumentTypeError(f"must be finite and nonnegative: {text!r}")
    return v


def _alpha(text: str) -> float:
    v = _nonneg_float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rldp", description="Robust local differential privacy toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="estimate a joint distribution from a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--s-col", required=True, help="column holding the sensitive attribute S")
    p.add_argument("--u-col", required=True, help="column holding the non-sensitive attribute U")
    p.add_argument("--smoothing", type=_nonneg_float, default=0.0, help="pseudocount per cell")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("build", help="build a protocol and write it as JSON")
    p.add_argument("--method", required=True, choices=[m.value for m in Method])
    p.add_argument("--eps", type=_nonneg_float, required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--n", type=int, default=None, help="sample size (defaults to the file's n)")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--eps2", type=_nonneg_float, default=None, help="budget given to U")
    grp.add_argument("--optimize", action="store_true", help="optimize free parameters (default)")
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--objective", choices=["center", "robust"], default="center")
    p.add_argument("--include-diagonal", action="store_true",
                   help="also constrain pairs with s1 == s2 in the polyopt cone")
    p.add_argument("--seed", type=_seed, default=0, help="accepted for interface symmetry")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("eval", help="mutual information of a protocol under a distribution")
    p.add_argument("--protocol", required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--normalized", action="store_true", help="also divide by H(X)")
    p.add_argument("--eval-dist", default=None, help="second distribution, e.g. the ground truth")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("audit", help="check a protocol's privacy claim")
    p.add_argument("--protocol", required=True)
    p.add_argument("--dist", default=None)
    p.add_argument("--eps", type=_nonneg_float, default=None, help="level to test (default: certified eps)")
    p.add_argument("--alpha", type=_alpha, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--mode", choices=["auto", "ldp", "maximal", "stress"], default="auto")
    p.add_argument("--out", default=None, help="also write the report here")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("obfuscate", help="release every row of a CSV through a protocol")
    p.add_argument("--protocol", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--s-col", required=True)
    p.add_argument("--u-col", required=True)
    p.add_argument("--dist", default=None, help="fitted distribution supplying the value labels")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_obfuscate)

    p = sub.add_parser("sweep", help="synthetic utility experiment to CSV")
    p.add_argument("--methods", required=True, help="comma list, e.g. grr,srr,ir,grr-cr,ue-cr,polyopt")
    p.add_argument("--eps-grid", required=True, help="start:stop:count, endpoints included")
    p.add_argument("--a1", type=int, default=3)
    p.add_argument("--a2", type=int, default=3)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--robustness", action="store_true", help="also record utility at the true P")
    p.add_argument("--timing", action="store_true", help="record build times (breaks byte-reproducibility)")
    p.add_argument("--audit-share", type=_nonneg_float, default=0.05)
    p.add_argument("--audit-samples", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


_USAGE_ERRORS = (UsageError, ParseError, DimensionMismatch, InvariantViolation, EmptyData)
_PRECONDITION_ERRORS = (PreconditionError, ZeroMarginal, Infeasible)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _PRECONDITION_ERRORS as exc:
        print(f"rldp {args.command}: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except _USAGE_ERRORS as exc:
        print(f"rldp {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RLDPError as exc:  # DomainError and friends: bad parameter values
        print(f"rldp {args.command}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"rldp {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
