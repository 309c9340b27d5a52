"""Command-line front end: ``dyneq {transform,check,extract,simulate,gen,bench,report-check}``."""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import benchgen
from .bench import check_report, rows_to_csv, rows_to_json, run_bench
from .circuit import CircuitError, PiFraction, is_dynamic
from .equivalence import (
    CheckConfig, EquivalenceError, EquivalenceResult, check_distribution, check_full,
)
from .extract import ExtractConfig, ExtractError, distribution_json, extract, resolve_workers
from .qasm import QasmError, parse, serialize
from .reconstruct import ReconstructError, reconstruct_unitary
from .statevec import SimulationError, outcome_distribution_static

EXIT_OK, EXIT_DIFFERENT, EXIT_ERROR = 0, 1, 2

_PI_ANGLE = re.compile(r"^(?P<sign>[+-]?)(?P<num>\d+)?\s*\*?\s*(?:pi|π)\s*(?:/\s*(?P<den>\d+))?$")


def parse_angle(text: str):
    """``"3pi/8"``, ``"-pi/4"``, ``"3*pi/8"`` become exact multiples of pi; anything else a float."""
    m = _PI_ANGLE.match(text.strip())
    if m:
        num = int(m.group("num") or 1) * (-1 if m.group("sign") == "-" else 1)
        return PiFraction(Fraction(num, int(m.group("den") or 1)))
    return float(text)


def parse_sizes(text: str) -> list[int]:
    """``"2..10"``, ``"2,4,8"`` or a mix; the empty string means no sizes."""
    sizes: list[int] = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if ".." in part:
            lo, hi = part.split("..")
            sizes.extend(range(int(lo), int(hi) + 1))
        else:
            sizes.append(int(part))
    return sizes


def parse_input(bits: str | None) -> int:
    if not bits:
        return 0
    if any(ch not in "01" for ch in bits):
        raise ValueError(f"--input expects a bitstring (qubit 0 last), got {bits!r}")
    return int(bits, 2)


def _read_circuit(path: str):
    return parse(Path(path).read_text(encoding="utf-8"))


def _workers(args) -> int:
    return resolve_workers(args.workers if args.workers is not None else os.environ.get("DYNEQ_WORKERS", 1))


def _extract_cfg(args) -> ExtractConfig:
    return ExtractConfig(prune_threshold=args.prune, max_branches=args.max_branches, parallel=_workers(args))


def _report_error(exc: Exception, path: str | None = None) -> None:
    if isinstance(exc, QasmError):
        for e in exc.errors:
            print(f"{path or '<input>'}:{e.span.line}:{e.span.column}: {e.kind} error: {e.message}",
                  file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)


def _emit_mapping(data: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(data, indent=2))
    elif fmt == "csv":
        print("key,value")
        for k, v in data.items():
            print(f"{k},{json.dumps(v) if isinstance(v, (dict, list)) else v}")
    else:
        for k, v in data.items():
            print(f"{k}: {v}")


_ERRORS = (QasmError, OSError, CircuitError, ReconstructError, EquivalenceError, ExtractError,
           SimulationError, ValueError)


def cmd_transform(args) -> int:
    try:
        g = _read_circuit(args.input)
        out, wires = reconstruct_unitary(g)
        Path(args.output).write_text(serialize(out), encoding="utf-8")
        sidecar = Path(args.wiremap) if args.wiremap else Path(args.output).with_suffix(".wiremap.json")
        sidecar.write_text(json.dumps(wires.to_json()) + "\n", encoding="utf-8")
    except _ERRORS as exc:
        _report_error(exc, args.input)
        return EXIT_ERROR
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        g, g2 = _read_circuit(args.first), _read_circuit(args.second)
        cfg = CheckConfig(tolerance=args.tolerance, input_state=parse_input(args.input),
                          align=args.align, dense_cap=args.dense_cap, workers=_workers(args),
                          extract=_extract_cfg(args))
        if args.sim:
            result = check_distribution(g, g2, cfg)
        else:
            result = check_full(g, g2, cfg)
    except _ERRORS as exc:
        _report_error(exc)
        hint = ""
        if isinstance(exc, EquivalenceError) and "too many qubits" in str(exc):
            hint = "; rerun with --sim for fixed-input distribution checking"
        result = EquivalenceResult("error", float("nan"), mode="distribution" if args.sim else "full",
                                   message=str(exc) + hint)
    _emit_mapping(result.to_json(), args.format)
    return {"equivalent": EXIT_OK, "not_equivalent": EXIT_DIFFERENT}.get(result.verdict, EXIT_ERROR)


def _emit_distribution(data: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(data, indent=2))
    elif fmt == "csv":
        print("bitstring,probability")
        for k, v in data["entries"].items():
            print(f"{k},{v!r}")
    else:
        for k, v in data["entries"].items():
            print(f"{k or '(empty)'}  {v:.10f}")
        print(f"pruned mass: {data['prunedMass']:.3g}")


def cmd_extract(args) -> int:
    try:
        g = _read_circuit(args.input_file)
        dist = extract(g, parse_input(args.input), _extract_cfg(args))
    except _ERRORS as exc:
        _report_error(exc, args.input_file)
        return EXIT_ERROR
    _emit_distribution(distribution_json(dist, args.input or "0"), args.format)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        g = _read_circuit(args.input_file)
        if is_dynamic(g):
            raise SimulationError("circuit is dynamic; use 'extract' or 'transform' first")
        dist = outcome_distribution_static(g, parse_input(args.input))
    except _ERRORS as exc:
        _report_error(exc, args.input_file)
        return EXIT_ERROR
    data = distribution_json(dist, args.input or "0")
    data.pop("branchesSimulated")
    _emit_distribution(data, args.format)
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        theta = parse_angle(args.theta) if args.theta else None
        spec = benchgen.BenchSpec(args.family, args.variant, args.size or len(args.secret or "") or 1,
                                  theta, args.secret)
        g = spec.build()
        if args.prepare_eigenstate and args.family == "qpe":
            fn = benchgen.iqpe_dynamic if args.variant == "dynamic" else benchgen.qpe_static
            g = fn(spec.size, spec.theta if spec.theta is not None else parse_angle("3pi/8"), True)
    except _ERRORS as exc:
        _report_error(exc)
        return EXIT_ERROR
    text = serialize(g)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    families = [f for f in args.families.split(",") if f]
    unknown = [f for f in families if f not in benchgen.FAMILIES]
    if unknown:
        print(f"error: unknown families {unknown}", file=sys.stderr)
        return EXIT_ERROR
    try:
        sizes = parse_sizes(args.sizes)
        cfg = _extract_cfg(args)
    except ValueError as exc:
        _report_error(exc)
        return EXIT_ERROR
    rows = run_bench(families, sizes, seed=args.seed, dense_cap=args.dense_cap, extract_cfg=cfg,
                     repeats=args.repeats)
    csv_text, json_text = rows_to_csv(rows), rows_to_json(rows)
    if args.out:
        out = Path(args.out)
        out.write_text(csv_text, encoding="utf-8")
        out.with_suffix(".json").write_text(json_text + "\n", encoding="utf-8")
    if args.format == "json":
        print(json_text)
    elif args.format == "csv" or not args.out:
        sys.stdout.write(csv_text)
    else:
        for r in rows:
            print(f"{r.family:>4} {r.size:>3}  {r.status}")
    return EXIT_OK


def cmd_report_check(args) -> int:
    try:
        problems = check_report(Path(args.report).read_text(encoding="utf-8"))
    except OSError as exc:
        _report_error(exc)
        return EXIT_ERROR
    for p in problems:
        print(p, file=sys.stderr)
    return EXIT_ERROR if problems else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=None,
                        help="max deviation (full mode, default 1e-10) or TVD (--sim, default 1e-9)")
    common.add_argument("--prune", type=float, default=1e-12, help="branch pruning threshold")
    common.add_argument("--max-branches", type=int, default=2 ** 26)
    common.add_argument("--workers", default=None, help="worker count or 'auto' (env DYNEQ_WORKERS)")
    common.add_argument("--dense-cap", type=int, default=14, help="largest qubit count for dense unitaries")
    common.add_argument("--input", default=None, help="basis input bitstring, qubit 0 last")
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="dyneq", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("transform", parents=[common], help="reconstruct a unitary-only circuit")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--wiremap", default=None, help="sidecar JSON path (default: OUTPUT.wiremap.json)")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("check", parents=[common], help="check two circuits for equivalence")
    s.add_argument("first")
    s.add_argument("second")
    s.add_argument("--sim", action="store_true", help="compare outcome distributions for --input")
    s.add_argument("--align", choices=("none", "measurements"), default="measurements",
                   help="pair qubits writing the same clbit before comparing (full mode)")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("extract", parents=[common], help="outcome distribution of a (dynamic) circuit")
    s.add_argument("input_file")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("simulate", parents=[common], help="outcome distribution of a static circuit")
    s.add_argument("input_file")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("gen", parents=[common], help="write a benchmark circuit as QASM")
    s.add_argument("--family", choices=sorted(benchgen.FAMILIES), required=True)
    s.add_argument("--variant", choices=("static", "dynamic"), default="static")
    s.add_argument("--size", type=int, default=None)
    s.add_argument("--theta", default=None, help="phase angle, e.g. 3pi/8 (qpe)")
    s.add_argument("--secret", default=None, help="secret bitstring (bv)")
    s.add_argument("--prepare-eigenstate", action="store_true", help="add an X preparing |1> (qpe)")
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("bench", parents=[common], help="run the static/dynamic benchmark table")
    s.add_argument("--families", default="bv,qft,qpe")
    s.add_argument("--sizes", default="2..6")
    s.add_argument("--repeats", type=int, default=1, help="timing repeats (median reported)")
    s.add_argument("--out", default=None, help="CSV report path; a JSON twin is written next to it")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("report-check", help="validate a bench CSV report")
    s.add_argument("report")
    s.set_defaults(func=cmd_report_check)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
