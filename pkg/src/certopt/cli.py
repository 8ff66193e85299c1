"""Command-line front end: ``run``, ``verify``, ``compare``, ``gen-instance``.

Exit codes: 0 success, 1 usage or configuration error, 2 iteration budget
exhausted.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from typing import Optional, Sequence

from . import harness
from .harness import Algorithm, RunConfig, Status
from .instances import (
    build_oracles,
    generate_fisher,
    generate_game,
    QuadBoxToy,
    instance_from_dict,
    instance_json,
    instance_to_dict,
    write_atomic,
)
from .oracles import DomainError, UnsupportedError

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2
SUITES = ("correspondence", "rates", "soundness", "identities")
TRACE_HEADER = "iter,phi,psi,cert_gap,pd_gap,wall_ns"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for budget exhaustion
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt_real(x: Optional[float]) -> str:
    return "" if x is None else format(float(x), ".17g")


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _float_list(text: str) -> "list[float]":
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _load(path: str, seed: Optional[int] = None):
    """Instance plus the ``alpha`` its file pins down (``None`` if absent)."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"instance file {path}: invalid JSON ({exc})") from None
    if seed is not None and isinstance(data, dict):
        data = dict(data, seed=seed)
    inst = instance_from_dict(data)
    return inst, (inst.alpha if "alpha" in data else None)


def _problem(args):
    """Oracles and the explicit alpha in force (flag over file), if any."""
    inst, file_alpha = _load(args.instance, getattr(args, "seed", None))
    alpha = args.alpha if getattr(args, "alpha", None) is not None else file_alpha
    problem = build_oracles(inst)
    if alpha is not None and alpha != problem.alpha:
        problem = problem.with_alpha(alpha)
    return problem, alpha


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        write_atomic(out, text)


def trace_csv(result: harness.RunResult, config: RunConfig, timing: bool = True) -> str:
    buf = io.StringIO()
    buf.write(f"# algorithm={config.algorithm.value} alpha_policy={config.alpha_policy} "
              f"alpha={fmt_real(result.alpha)} epsilon={fmt_real(config.epsilon)}\n")
    buf.write(TRACE_HEADER + "\n")
    for t in result.traces:
        wall = str(t.wall_ns) if timing else ""
        buf.write(",".join([str(t.iter), fmt_real(t.phi_at_test), fmt_real(t.psi_at_dual),
                            fmt_real(t.cert_gap), fmt_real(t.pd_gap), wall]) + "\n")
    return buf.getvalue()


def cmd_run(args) -> int:
    problem, alpha = _problem(args)
    config = RunConfig(args.algorithm, args.epsilon, alpha=alpha, max_iters=args.max_iters,
                       record_every=args.record_every, seed=args.seed or 0)
    result = harness.run(problem, config)
    _emit(trace_csv(result, config, timing=not args.no_wall_time), args.out)
    stream = sys.stderr if args.out in (None, "-") else sys.stdout
    print(f"status={result.status.value} iterations={result.iterations} "
          f"final_gap={fmt_real(result.final_gap)}", file=stream)
    return EXIT_BUDGET if result.status is Status.BUDGET_EXHAUSTED else EXIT_OK


def cmd_verify(args) -> int:
    problem, _ = _problem(args)
    if args.suite == "correspondence":
        report = harness.check_correspondence(problem, k_max=args.iters, tol=args.tol)
    elif args.suite == "rates":
        report = harness.check_all_rates(problem, k_max=args.iters)
    elif args.suite == "soundness":
        report = harness.check_soundness(problem, args.epsilon, resolution=args.resolution)
    else:
        report = harness.check_identities(problem, seed=args.seed or 0)
    _emit(report.to_json() + "\n", args.out)
    print(report.summary(), file=sys.stderr)
    return EXIT_OK if report.overall else EXIT_CONFIG


def cmd_compare(args) -> int:
    algos = [Algorithm(a) for a in args.algorithms]
    if len(algos) < 2:
        raise UsageError("compare: name at least two algorithms")
    problem, _ = _problem(args)
    epsilons = args.epsilons
    if not epsilons or any(not e > 0 for e in epsilons):
        raise ValueError("--epsilons: need positive values")
    counts = {a: harness.iterations_to_certificate(problem, a, epsilons, args.max_iters)
              for a in algos}
    buf = io.StringIO()
    buf.write("epsilon,alpha," + ",".join(a.value for a in algos) + "\n")
    for i, eps in enumerate(epsilons):
        alpha = harness.alpha_from_epsilon(problem, eps)
        buf.write(",".join([fmt_real(eps), fmt_real(alpha)]
                           + [str(counts[a][i]) for a in algos]) + "\n")
    _emit(buf.getvalue(), args.out)
    exhausted = any(c < 0 for cs in counts.values() for c in cs)
    if len(epsilons) >= 2 and not exhausted:
        for a in algos:
            print(f"slope {a.value}={harness.loglog_slope(epsilons, counts[a]):.6f}",
                  file=sys.stderr)
    return EXIT_BUDGET if exhausted else EXIT_OK


def cmd_gen_instance(args) -> int:
    seed = args.seed or 0
    if args.kind == "game":
        if args.n is None:
            raise ValueError("--n is required for a game")
        kw = {k: v for k, v in (("alpha", args.alpha), ("L", args.L)) if v is not None}
        inst = generate_game(args.n, seed, m=args.m, **kw)
    elif args.kind == "fisher":
        if args.n is None or args.m is None:
            raise ValueError("--m and --n are required for a Fisher market")
        kw = {k: v for k, v in (("alpha", args.alpha), ("delta", args.delta)) if v is not None}
        inst = generate_fisher(args.m, args.n, seed, **kw)
        if args.L is not None:
            inst = instance_from_dict(dict(instance_to_dict(inst), L=args.L))
    else:
        inst = QuadBoxToy(n=args.n or 1, alpha=args.alpha or 1.0, L=args.L or 1.0, seed=seed)
    include_alpha = args.alpha is not None or args.kind == "quadbox"
    _emit(instance_json(inst, include_alpha), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="certopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    algos = [a.value for a in Algorithm]

    p = sub.add_parser("run", help="run one method to an epsilon-certificate")
    p.add_argument("--instance", required=True)
    p.add_argument("--algorithm", required=True, choices=algos)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--alpha", type=float,
                   help="explicit alpha; default is the instance's alpha if its file sets "
                        "one, else epsilon / (2 M)")
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--record-every", type=_positive_int, default=1)
    p.add_argument("--seed", type=_u64, help="override the instance generator seed")
    p.add_argument("--out", help="trace CSV path (default: stdout)")
    p.add_argument("--no-wall-time", action="store_true",
                   help="leave wall_ns empty so reruns are byte-identical")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--iters", type=_positive_int, default=200)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--alpha", type=float)
    p.add_argument("--resolution", type=float, default=1e-4)
    p.add_argument("--seed", type=_u64)
    p.add_argument("--out", help="JSON report path (default: stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="iterations-to-certificate across an epsilon sweep")
    p.add_argument("--instance", required=True)
    p.add_argument("--algorithms", "--algorithm", required=True,
                   type=lambda t: [s for s in t.split(",") if s],
                   help="comma-separated, e.g. mda,taa")
    p.add_argument("--epsilons", type=_float_list, default=[1e-1, 1e-2, 1e-3])
    p.add_argument("--max-iters", type=int, default=1_000_000)
    p.add_argument("--seed", type=_u64)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen-instance", help="write a seeded instance JSON")
    p.add_argument("--kind", required=True, choices=["game", "fisher", "quadbox"])
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--m", type=_positive_int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=_u64)
    p.add_argument("--out", help="JSON path (default: stdout)")
    p.set_defaults(func=cmd_gen_instance)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb == "verify" and args.suite not in SUITES:
            raise UsageError(f"unknown suite {args.suite!r}; expected one of {', '.join(SUITES)}")
        if args.verb == "compare":
            for a in args.algorithms:
                if a not in {x.value for x in Algorithm}:
                    raise UsageError(f"--algorithms: unknown algorithm {a!r}")
        return args.func(args)
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_CONFIG
    except (UsageError, ValueError, UnsupportedError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
