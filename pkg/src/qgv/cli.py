"""Command-line interface.

Exit codes: 0 success (or verification accepted), 1 verification not
accepted, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import optics
from .channels import NoiseSpec, avg_gate_fidelity, gate_by_name
from .protocol import build_protocol, dump_protocol, process_operator
from .simulator import VerificationConfig, run_campaign
from .stats import VerificationTarget, plan

EXIT_OK = 0
EXIT_NOT_ACCEPTED = 1
EXIT_USAGE = 2

GATE_CHOICES = ("cnot", "toffoli")
# targets typed with a few decimals (e.g. 0.7071) are renormalized
RENORMALIZE_TOL = 1e-4


class UsageError(Exception):
    pass


def _unit_interval(name):
    def parse(text):
        try:
            x = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}")
        if not 0.0 < x < 1.0:
            raise argparse.ArgumentTypeError(f"{name} must lie strictly between 0 and 1, got {x}")
        return x
    return parse


def _positive_int(text):
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if x < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {x}")
    return x


def _noise(text):
    try:
        return NoiseSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _gate_info(name):
    protocol = build_protocol(name)
    return protocol, process_operator(protocol).nu


def cmd_gap(args) -> int:
    _, nu = _gate_info(args.gate)
    print(f"{nu:.9f}")
    return EXIT_OK


def cmd_plan(args) -> int:
    protocol, nu = _gate_info(args.gate)
    budget = plan(VerificationTarget(args.epsilon, args.delta, protocol.dim, nu))
    print(f"gate={args.gate} d={protocol.dim} nu={nu:.6f} epsilon={args.epsilon} delta={args.delta}")
    print(f"n_optimal      {budget.n_optimal}")
    print(f"n_local_tight  {budget.n_local_tight}")
    print(f"n_local_loose  {budget.n_local_loose}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = VerificationConfig(
        gate=args.gate, noise=args.noise, epsilon=args.epsilon, delta=args.delta,
        tests=args.tests, runs=args.runs, seed=args.seed, stride=args.stride,
        threshold=args.threshold,
    )
    result = run_campaign(cfg, workers=args.workers)
    if args.out:
        result.write(args.out)
    s = result.summary()
    exponent = "nan" if s["fitted_exponent"] is None else f"{s['fitted_exponent']:.6f}"
    print(f"gate={s['gate']} noise={s['noise']} runs={s['runs']} tests={cfg.tests} "
          f"pass_rate={s['final_pass_rate']:.6f} delta={s['final_delta']:.6f} "
          f"epsilon={s['final_epsilon']:.6f} exponent={exponent} "
          f"accepted={'yes' if s['accepted'] else 'no'}")
    return EXIT_OK if result.accepted else EXIT_NOT_ACCEPTED


def cmd_fidelity(args) -> int:
    gate = gate_by_name(args.gate)
    try:
        channel = args.noise.channel(gate)
    except ValueError as exc:
        raise UsageError(str(exc))
    f = avg_gate_fidelity(channel, gate)
    print(f"F_avg = {f:.6f}")
    print(f"epsilon_A = {1.0 - f:.6f}")
    return EXIT_OK


def _parse_target(text):
    try:
        amps = np.array([complex(part.strip().replace(" ", "")) for part in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse amplitudes {text!r}")
    if amps.size != 2:
        raise UsageError("target needs exactly two amplitudes")
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > RENORMALIZE_TOL:
        raise UsageError(f"target is not normalized (norm {norm:.6f})")
    if abs(norm - 1.0) > 1e-12:
        print(f"warning: renormalizing target (norm {norm:.9f})", file=sys.stderr)
    return amps / norm


def cmd_solve_angles(args) -> int:
    target = _parse_target(args.target)
    pair = optics.solve_angles(target, args.convention)
    fid = abs(np.vdot(optics.qubit_amplitudes(pair, args.convention), target)) ** 2
    h_deg, q_deg = pair.degrees()
    print(f"h = {h_deg:.6f} deg")
    print(f"q = {q_deg:.6f} deg")
    print(f"fidelity = {fid:.12f}")
    return EXIT_OK


def cmd_dump_protocol(args) -> int:
    sys.stdout.write(dump_protocol(build_protocol(args.gate)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgv", description="Quantum gate verification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def gate_arg(p):
        p.add_argument("--gate", required=True, choices=GATE_CHOICES, type=str.lower)

    p = sub.add_parser("gap", help="spectral gap of a protocol's process verification operator")
    gate_arg(p)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("plan", help="test budgets for a target infidelity and significance")
    gate_arg(p)
    p.add_argument("--epsilon", required=True, type=_unit_interval("epsilon"))
    p.add_argument("--delta", required=True, type=_unit_interval("delta"))
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", help="simulate a verification campaign")
    gate_arg(p)
    p.add_argument("--noise", default=NoiseSpec(), type=_noise,
                   help="kind:strength[:qubit], e.g. depolarizing:0.004")
    p.add_argument("--epsilon", required=True, type=_unit_interval("epsilon"))
    p.add_argument("--delta", required=True, type=_unit_interval("delta"))
    p.add_argument("--tests", required=True, type=_positive_int)
    p.add_argument("--runs", default=50, type=_positive_int)
    p.add_argument("--seed", default=0, type=int)
    p.add_argument("--stride", default=None, type=_positive_int)
    p.add_argument("--threshold", default=None, type=float,
                   help="accept when the mean passing rate reaches this value")
    p.add_argument("--workers", default=1, type=_positive_int)
    p.add_argument("--out", default=None, help="directory for curve CSVs and summary.json")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fidelity", help="average gate fidelity of a noisy gate")
    gate_arg(p)
    p.add_argument("--noise", default=NoiseSpec(), type=_noise)
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("solve-angles", help="HWP/QWP angles preparing a single-qubit state")
    p.add_argument("--target", required=True, help="two comma-separated amplitudes, e.g. 0,1 or 0.7071,0.7071j")
    p.add_argument("--convention", default="a", choices=optics.CONVENTIONS)
    p.set_defaults(func=cmd_solve_angles)

    p = sub.add_parser("dump-protocol", help="list test states and settings")
    gate_arg(p)
    p.set_defaults(func=cmd_dump_protocol)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"qgv {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
