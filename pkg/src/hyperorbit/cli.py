"""Command-line surface for reproducible desk-scale runs.

Subcommands: construct (write a stock system file), validate (check a
system file against the acceptance conditions), steer (synthesize an orbit
word for a target), verify (run the lemma / density / coverage suites).
Every JSON output embeds the effective run configuration; outputs are
byte-identical across runs with the same configuration.

Exit codes: 0 success, 2 validation or check failure, 3 steering target not
found, 64 usage error, 65 malformed input file.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from fractions import Fraction

import mpmath
from mpmath import mpf

from .config import RunConfig, resolve_config
from .errors import (
    BudgetExceeded,
    HyperorbitError,
    MalformedInput,
    SteerNotFound,
)
from .precision import set_precision
from .scalars import Field
from .steering import steer_affine, synthesize_word
from .svgplot import save_scatter_svg
from .systems import (
    AffineSystem,
    SemigroupSystem,
    build_complex_example,
    build_quadrant_example,
    build_real_example,
    dumps_canonical,
    load_system,
    save_system,
)
from .verification import (
    brute_force_orbit,
    cloud_to_jsonable,
    coverage,
    density_experiment,
    verify_lemmas,
)

EX_OK = 0
EX_CHECK = 2
EX_NOTFOUND = 3
EX_USAGE = 64
EX_DATA = 65

FAMILIES = ("real-example", "complex-example", "quadrant", "affine-1d")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract says 64
        raise _UsageError(message)


def build_parser() -> _Parser:
    # Shared flags are accepted before or after the subcommand; SUPPRESS
    # keeps the subparser from clobbering a value parsed at the top level.
    shared = argparse.ArgumentParser(add_help=False)
    for name, kwargs in (
        ("--config", {"help": "JSON config file (overrides flags)"}),
        ("--precision", {"type": int, "help": "working decimal digits"}),
        ("--seed", {"type": int, "help": "seed for randomized suites"}),
        ("--eps", {"help": "steering tolerance (decimal string)"}),
        ("--budget-exponent", {"type": int, "help": "cap on each stage exponent"}),
        (
            "--budget-nodes",
            {"type": int, "help": "candidate evaluations per steering call"},
        ),
    ):
        shared.add_argument(name, default=argparse.SUPPRESS, **kwargs)

    parser = _Parser(
        prog="hyperorbit",
        description=__doc__.splitlines()[0],
        parents=[shared],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_command(name, **kwargs):
        return sub.add_parser(name, parents=[shared], **kwargs)

    p_con = add_command("construct", help="write a stock system file")
    p_con.add_argument("--family", required=True, choices=FAMILIES)
    p_con.add_argument("--n", type=int, help="dimension (example families only)")
    p_con.add_argument("--out", required=True, help="output system file")
    p_con.set_defaults(func=cmd_construct)

    p_val = add_command("validate", help="check a system file")
    p_val.add_argument("system", help="system JSON file")
    p_val.add_argument("--out", help="also write the report here")
    p_val.set_defaults(func=cmd_validate)

    p_steer = add_command("steer", help="synthesize a word for a target")
    p_steer.add_argument("system", help="system JSON file")
    p_steer.add_argument(
        "--target", required=True, help="comma-separated coordinates"
    )
    p_steer.add_argument(
        "--from",
        dest="start_point",
        help="affine orbit start point (defaults to the origin)",
    )
    p_steer.add_argument("--budget", type=int, help="per-stage exponent cap")
    p_steer.add_argument("--out", help="write the result here instead of stdout")
    p_steer.set_defaults(func=cmd_steer)

    p_ver = add_command("verify", help="run a verification suite")
    p_ver.add_argument("system", help="system JSON file")
    p_ver.add_argument(
        "--suite", required=True, choices=("lemmas", "density", "coverage")
    )
    p_ver.add_argument("--depth", type=int, default=50, help="lemma audit depth")
    p_ver.add_argument(
        "--targets", help="JSON file with a list of target vectors (density)"
    )
    p_ver.add_argument("--grid-lo", default="-1", help="density grid lower bound")
    p_ver.add_argument("--grid-hi", default="1", help="density grid upper bound")
    p_ver.add_argument("--grid-step", default="1/2", help="density grid step")
    p_ver.add_argument("--budget", type=int, help="per-stage exponent cap")
    p_ver.add_argument(
        "--shape", default="2,12,12", help="coverage word shape m,k_max,l_max"
    )
    p_ver.add_argument("--box-lo", default="1/10", help="coverage box lower bound")
    p_ver.add_argument("--box-hi", default="2", help="coverage box upper bound")
    p_ver.add_argument("--cell", default="1/10", help="coverage cell width")
    p_ver.add_argument(
        "--min-coverage", default="0", help="fraction the coverage run must reach"
    )
    p_ver.add_argument("--svg", help="write a scatter SVG here (1-D/2-D clouds)")
    p_ver.add_argument("--out", help="write the report here instead of stdout")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def _emit(payload: dict, cfg: RunConfig, out_path=None) -> None:
    body = dict(payload)
    body["config"] = cfg.to_jsonable()
    text = dumps_canonical(body)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_vector(raw: str, system) -> tuple:
    tokens = [t.strip() for t in raw.split(",") if t.strip()]
    if len(tokens) != system.n:
        raise _UsageError(
            f"target has {len(tokens)} coordinates, the system needs {system.n}"
        )
    out = []
    for tok in tokens:
        try:
            value = mpmath.mpmathify(tok)
        except (ValueError, TypeError) as exc:
            raise _UsageError(f"cannot parse coordinate {tok!r}: {exc}") from exc
        if system.field is Field.REAL and isinstance(value, mpmath.mpc):
            raise _UsageError(f"complex coordinate {tok!r} for a real system")
        out.append(value)
    return tuple(out)


def _fraction_flag(raw: str, name: str) -> Fraction:
    try:
        return Fraction(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise _UsageError(f"--{name} must be rational, got {raw!r}") from exc


def cmd_construct(args, cfg: RunConfig) -> int:
    family = args.family
    if family in ("real-example", "complex-example"):
        if args.n is None or args.n < 1:
            raise _UsageError("--n must be a positive integer for example families")
        builder = build_real_example if family == "real-example" else build_complex_example
        system = builder(args.n)
        report = system.validation()
    elif family == "quadrant":
        if args.n is not None:
            raise _UsageError("--n does not apply to the quadrant family")
        system, report = build_quadrant_example()
    else:  # affine-1d
        if args.n is not None:
            raise _UsageError("--n does not apply to the affine-1d family")
        from .matrices import Diagonal, LowerTriangular

        system = AffineSystem(
            Field.REAL,
            LowerTriangular.build(Field.REAL, [[3]]),
            (1,),
            Diagonal.build(Field.REAL, [Fraction(-1, 2)]),
            metadata={"family": "affine-1d"},
        )
        report = system.validation()
    system.metadata["run_config"] = cfg.to_jsonable()
    if not report.accepted:
        _emit({"report": report.to_jsonable(), "written": None}, cfg)
        return EX_CHECK
    save_system(args.out, system)
    _emit({"report": report.to_jsonable(), "written": args.out}, cfg)
    return EX_OK


def cmd_validate(args, cfg: RunConfig) -> int:
    system = load_system(args.system)
    report = system.validation()
    _emit({"report": report.to_jsonable()}, cfg, args.out)
    if args.out:
        _emit({"report": report.to_jsonable()}, cfg)
    return EX_OK if report.accepted else EX_CHECK


def cmd_steer(args, cfg: RunConfig) -> int:
    system = load_system(args.system)
    target = _parse_vector(args.target, system)
    eps = mpf(cfg.eps)  # flags fold into cfg; the config file wins over both
    budget = cfg.search_budget(args.budget)
    try:
        if isinstance(system, AffineSystem):
            if args.start_point is not None:
                start = _parse_vector(args.start_point, system)
            else:
                start = tuple(mpf(0) for _ in range(system.n))
            result = steer_affine(system, start, target, eps, budget)
        else:
            if args.start_point is not None:
                raise _UsageError("--from applies only to affine systems")
            result = synthesize_word(system, target, eps, budget)
    except SteerNotFound as exc:
        _emit(
            {"found": False, "reason": str(exc), "diagnostics": exc.diagnostics or {}},
            cfg,
        )
        return EX_NOTFOUND
    payload = {"found": True, "result": result.to_jsonable()}
    _emit(payload, cfg, args.out)
    if args.out:
        _emit(payload, cfg)
    return EX_OK


def _density_targets(args, system) -> list:
    if args.targets:
        with open(args.targets, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise MalformedInput(f"targets file is not JSON: {exc}") from exc
        if not isinstance(raw, list) or not raw:
            raise MalformedInput("targets file must hold a non-empty JSON list")
        targets = []
        for row in raw:
            if not isinstance(row, list) or len(row) != system.n:
                raise MalformedInput(f"bad target row: {row!r}")
            targets.append(tuple(mpmath.mpmathify(str(v)) for v in row))
        return targets
    if system.field is not Field.REAL:
        raise _UsageError("--targets FILE is required for complex systems")
    lo = _fraction_flag(args.grid_lo, "grid-lo")
    hi = _fraction_flag(args.grid_hi, "grid-hi")
    step = _fraction_flag(args.grid_step, "grid-step")
    if not (lo < hi and step > 0):
        raise _UsageError("need grid-lo < grid-hi and a positive grid-step")
    ticks = []
    value = lo
    while value <= hi:
        ticks.append(mpf(value.numerator) / value.denominator)
        value += step
    return [tuple(c) for c in itertools.product(ticks, repeat=system.n)]


def cmd_verify(args, cfg: RunConfig) -> int:
    system = load_system(args.system)
    if isinstance(system, AffineSystem):
        raise _UsageError("verification suites run on linear system files")
    if args.suite == "lemmas":
        report = verify_lemmas(system, depth=args.depth)
        _emit({"suite": "lemmas", "report": report.to_jsonable()}, cfg, args.out)
        if args.out:
            _emit({"suite": "lemmas", "report": report.to_jsonable()}, cfg)
        return EX_OK if report.passed else EX_CHECK

    if args.suite == "density":
        targets = _density_targets(args, system)
        eps = cfg.eps
        summary = density_experiment(
            system, None, targets, eps, cfg.search_budget(args.budget)
        )
        payload = {"suite": "density", "summary": summary.to_jsonable()}
        _emit(payload, cfg, args.out)
        if args.out:
            _emit(payload, cfg)
        return EX_OK if summary.successes == summary.total else EX_CHECK

    # coverage suite
    try:
        shape = tuple(int(v) for v in args.shape.split(","))
    except ValueError as exc:
        raise _UsageError(f"--shape must be three integers, got {args.shape!r}") from exc
    if len(shape) != 3:
        raise _UsageError(f"--shape must be three integers, got {args.shape!r}")
    lo = _fraction_flag(args.box_lo, "box-lo")
    hi = _fraction_flag(args.box_hi, "box-hi")
    cell = _fraction_flag(args.cell, "cell")
    floor = _fraction_flag(args.min_coverage, "min-coverage")
    cloud = brute_force_orbit(system, word_shape=shape, cap=cfg.enum_cap)
    box = [(lo, hi)] * cloud.real_dimension
    report = coverage(cloud, box, cell)
    outside = 0
    for point in cloud.points:
        coords = cloud.realified(point)
        if any(c < 0 for c in coords):
            outside += 1
    passed = report.fraction >= floor
    payload = {
        "suite": "coverage",
        "points": len(cloud),
        "word_shape": list(shape),
        "coverage": report.to_jsonable(),
        "outside_nonnegative_orthant": outside,
        "min_coverage": [floor.numerator, floor.denominator],
        "passed": passed,
    }
    if args.svg:
        save_scatter_svg(args.svg, cloud, box, cell)
        payload["svg"] = args.svg
    _emit(payload, cfg, args.out)
    if args.out:
        _emit(payload, cfg)
    return EX_OK if passed else EX_CHECK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        flags = {
            "precision_digits": getattr(args, "precision", None),
            "seed": getattr(args, "seed", None),
            "eps": getattr(args, "eps", None),
            "budget_exponent": getattr(args, "budget_exponent", None),
            "budget_nodes": getattr(args, "budget_nodes", None),
        }
        cfg = resolve_config(flags, getattr(args, "config", None))
        set_precision(cfg.precision_digits)
        return args.func(args, cfg)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except MalformedInput as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EX_DATA
    except SteerNotFound as exc:
        print(f"not found: {exc}", file=sys.stderr)
        return EX_NOTFOUND
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EX_CHECK
    except HyperorbitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_CHECK


if __name__ == "__main__":
    sys.exit(main())
