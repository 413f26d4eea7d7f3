"""Command-line entry point: ``resetguard scan|gen|sweep``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import generators as gen
from .circuit import Circuit, compose, shift_clbits
from .qasm import ParseError, emit_qasm, parse_angle, read_qasm_file
from .scanner import ScanConfig, Verdict, scan
from .sweep import SweepSpecError, load_sweep_spec, run_sweep, write_outputs
from .unitary import DEFAULT_QUBIT_CAP, SCAN_TOL

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SUSPICIOUS = 2

FAMILIES = ("victim", "resets", "xchain", "rxrz", "cxchain", "grover2", "grover3", "qrng", "random-identity")


def _angle(text: str) -> float:
    try:
        return parse_angle(text)
    except ParseError as exc:
        raise argparse.ArgumentTypeError(f"bad angle {text!r}: {exc.message}") from None


def _angle_list(text: str) -> list[float]:
    return [_angle(part) for part in text.split(",")]


def cmd_scan(args) -> int:
    try:
        cfg = ScanConfig(
            theta_low=args.theta_low,
            theta_high=args.theta_high,
            tol=args.tol,
            full_matrix_cap=args.full_matrix_cap,
            attempt_full_matrix=not args.no_full_matrix,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)

    status = EXIT_OK
    parse_failed = False
    for path in args.files:
        try:
            circuit = read_qasm_file(path)
        except ParseError as exc:
            print(f"{path}:{exc.line}:{exc.column}: {exc.kind.value}: {exc.message}", file=sys.stderr)
            parse_failed = True
            continue
        except OSError as exc:
            print(f"{path}: {exc.strerror or exc}", file=sys.stderr)
            parse_failed = True
            continue
        report = scan(circuit, cfg)
        if report.verdict is Verdict.SUSPICIOUS:
            status = EXIT_SUSPICIOUS
        text = report.to_text() if args.format == "text" else report.to_json()
        if args.out:
            suffix = ".txt" if args.format == "text" else ".json"
            (Path(args.out) / (Path(path).stem + suffix)).write_text(text + "\n")
        else:
            print(text)
    return EXIT_ERROR if parse_failed else status


def build_family(args) -> Circuit:
    family = args.family
    if family == "victim":
        thetas = args.theta if args.theta is not None else [0.0]
        phis = args.phi if args.phi is not None else [0.0] * len(thetas)
        return gen.gen_victim(thetas, phis)
    if family == "resets":
        return gen.gen_resets(args.qubits or 1, args.k)
    if family == "xchain":
        return gen.gen_x_chain(2 if args.n is None else args.n)
    if family == "rxrz":
        theta = args.theta[0] if args.theta else math.pi
        phi = args.phi[0] if args.phi else math.pi / 2
        return gen.gen_rx_rz(theta, phi, args.depth or 1)
    if family == "cxchain":
        return gen.gen_cx_chain(2 if args.n is None else args.n)
    if family == "grover2":
        return gen.gen_grover2()
    if family == "grover3":
        return gen.gen_grover3()
    if family == "qrng":
        return gen.gen_qrng(4 if args.n is None else args.n)
    if family == "random-identity":
        return gen.gen_random_identity(args.qubits or 7, 10 if args.depth is None else args.depth, args.seed)
    raise ValueError(f"unknown family {family!r}")


def attack_circuit(masking: Circuit, victim_thetas, victim_phis, k: int) -> Circuit:
    """Victim shot, ``k`` resets, then the masking circuit on fresh classical bits."""
    n = masking.num_qubits
    thetas = victim_thetas if victim_thetas is not None else [0.0] * n
    phis = victim_phis if victim_phis is not None else [0.0] * len(thetas)
    if len(thetas) != n:
        raise ValueError(f"need {n} victim angle(s) for a {n}-qubit masking circuit")
    victim = gen.gen_victim(thetas, phis)
    chained = compose(compose(victim, gen.gen_resets(n, k)), shift_clbits(masking, victim.num_clbits))
    return chained.renamed(f"{masking.name}_attack")


def cmd_gen(args) -> int:
    try:
        circuit = build_family(args)
        if args.compose:
            if args.family in ("victim", "resets"):
                raise ValueError("--compose needs a masking family")
            circuit = attack_circuit(circuit, args.victim_theta, args.victim_phi, args.k)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = emit_qasm(circuit)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        doc = json.loads(Path(args.spec).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"{args.spec}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.seed is not None and isinstance(doc, dict):
        doc["seed"] = args.seed
    try:
        spec = load_sweep_spec(doc)
    except SweepSpecError as exc:
        print(f"{args.spec}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    tables, rows = run_sweep(spec, workers=args.workers)
    out = Path(args.out)
    for path in write_outputs(spec, tables, rows, out):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resetguard", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="scan OpenQASM files for masked reset attacks")
    p.add_argument("files", nargs="+")
    p.add_argument("--theta-low", type=_angle, default=math.pi / 4)
    p.add_argument("--theta-high", type=_angle, default=3 * math.pi / 4)
    p.add_argument("--tol", type=float, default=SCAN_TOL)
    p.add_argument("--full-matrix-cap", type=int, default=DEFAULT_QUBIT_CAP)
    p.add_argument("--no-full-matrix", action="store_true", help="per-qubit checks only")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json")
    fmt.add_argument("--text", dest="format", action="store_const", const="text")
    p.set_defaults(format="json", func=cmd_scan)
    p.add_argument("--out", help="write one report per file into this directory")

    p = sub.add_parser("gen", help="emit a generated circuit as OpenQASM")
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("--n", type=int, help="gate count (xchain, cxchain) or qubits (qrng)")
    p.add_argument("--theta", type=_angle_list, help="angle or comma-separated angles")
    p.add_argument("--phi", type=_angle_list)
    p.add_argument("--depth", type=int, help="rxrz depth (default 1) or random-identity depth (default 10)")
    p.add_argument("--k", type=int, default=0, help="number of resets")
    p.add_argument("--qubits", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--compose", action="store_true", help="prepend victim and reset segments")
    p.add_argument("--victim-theta", type=_angle_list)
    p.add_argument("--victim-phi", type=_angle_list)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sweep", help="run a simulated attack sweep from a JSON spec")
    p.add_argument("spec")
    p.add_argument("--out", default="sweep_out")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
