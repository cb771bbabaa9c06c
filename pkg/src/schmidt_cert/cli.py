"""Command-line interface: ``schmidt-cert <subcommand> ...``.

Exit codes: 0 ran to completion, 1 input error, 2 a reproduction check failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import serialization as ser
from .certify import SrSampler, certify_schmidt_number, payoff_nonnegativity_sweep
from .decompose import ProductEnsemble, solve_gamma, standard_ensemble
from .games import (
    BellGame,
    bell_correlation,
    bell_functional,
    bell_projector_measurement,
    chsh_counterexample_game,
    game_from_witness,
    semiquantum_correlation,
)
from .qlinalg import check_density
from .reproduce import run as run_reproduction
from .schmidt import counterexample_state, isotropic_state, optimal_witness

log = logging.getLogger("schmidt_cert")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CHECK_FAILED = 2
MAX_CLI_DIM = 16


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for failed checks here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out:
        ser.write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _grid(args) -> np.ndarray:
    if args.lambda_steps < 1:
        raise InputError("--lambda-steps must be at least 1")
    if not (0.0 <= args.lambda_start <= 1.0 and 0.0 <= args.lambda_stop <= 1.0):
        raise InputError("lambda grid must lie inside [0, 1]")
    return np.linspace(args.lambda_start, args.lambda_stop, args.lambda_steps)


def _check_paths(inputs, out) -> None:
    if out is None:
        return
    for p in inputs:
        if p is not None and Path(p).resolve() == Path(out).resolve():
            raise InputError(f"output path {out} equals an input path")


# --- subcommands ----------------------------------------------------------------


def cmd_witness(args) -> int:
    d, r = args.d, args.r
    if not 1 <= d <= MAX_CLI_DIM or not 1 <= r <= d:
        raise InputError(f"need 1 <= r <= d <= {MAX_CLI_DIM}, got d={d}, r={r}")
    if r == d:
        log.warning("r = d: the witness is positive semidefinite and certifies nothing")
    _emit(ser.dumps(ser.witness_to_json(optimal_witness(d, r)), round_floats=False), args.out)
    return EXIT_OK


def cmd_state(args) -> int:
    if args.family == "isotropic":
        if args.d is None or args.p is None:
            raise InputError("isotropic family needs --d and --p")
        rho, dims = isotropic_state(args.d, args.p), [args.d, args.d]
    elif args.family == "counterexample":
        if args.p is None:
            raise InputError("counterexample family needs --p (the mixing weight lambda)")
        rho, dims = counterexample_state(args.p), [8, 8]
    else:
        d = args.d or 2
        rho = np.zeros((d * d, d * d))
        rho[0, 0] = 1.0
        dims = [d, d]
    _emit(ser.dumps(ser.operator_to_json(rho, dims), round_floats=False), args.out)
    return EXIT_OK


def _load_ensemble(path) -> ProductEnsemble:
    obj = ser.read_json(path)
    if not isinstance(obj, list):
        raise InputError(f"{path}: expected a list of operators")
    return ProductEnsemble(tuple(ser.operator_from_json(o)[0] for o in obj))


def cmd_decompose(args) -> int:
    _check_paths([args.witness, args.left, args.right], args.out)
    w = ser.witness_from_json(ser.read_json(args.witness))
    left = _load_ensemble(args.left) if args.left else standard_ensemble(w.dims[0])
    right = _load_ensemble(args.right) if args.right else standard_ensemble(w.dims[1])
    dec = solve_gamma(w, left, right, tol=args.tolerance)
    _emit(ser.dumps(ser.decomposition_to_json(dec), round_floats=False), args.out)
    return EXIT_OK


def _parse_dist(text):
    if text is None:
        return None
    return [float(v) for v in text.split(",")]


def cmd_synth(args) -> int:
    _check_paths([args.decomposition], args.out)
    dec = ser.decomposition_from_json(ser.read_json(args.decomposition))
    game = game_from_witness(dec, _parse_dist(args.px), _parse_dist(args.qy))
    _emit(ser.dumps(ser.game_to_json(game), round_floats=False), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    _check_paths([args.game, args.state], args.out)
    game = ser.game_from_json(ser.read_json(args.game))
    rho, _ = ser.operator_from_json(ser.read_json(args.state))
    rho = check_density(rho)
    if isinstance(game, BellGame):
        table = bell_correlation(game, rho)
    else:
        dA0, dB0 = game.input_dims
        table = semiquantum_correlation(game, rho, bell_projector_measurement(dA0),
                                        bell_projector_measurement(dB0))
    _emit(ser.correlation_csv(table), args.out)
    return EXIT_OK


def cmd_certify(args) -> int:
    _check_paths([args.state, args.witness], args.out)
    w = ser.witness_from_json(ser.read_json(args.witness))
    rho, _ = ser.operator_from_json(ser.read_json(args.state))
    dec = None
    if args.mode == "compiled":
        dec = solve_gamma(w, standard_ensemble(w.dims[0]), standard_ensemble(w.dims[1]))
    report = certify_schmidt_number(rho, w, via=args.mode, decomposition=dec, tolerance=args.tolerance)
    report.seed = args.seed
    if args.trials:
        if args.seed is None:
            raise InputError("--trials needs an explicit --seed")
        if dec is None:
            dec = solve_gamma(w, standard_ensemble(w.dims[0]), standard_ensemble(w.dims[1]))
        if w.dims[0] != w.dims[1]:
            raise InputError("the soundness sweep needs equal local dimensions")
        sweep = payoff_nonnegativity_sweep(game_from_witness(dec),
                                           SrSampler(d=w.dims[0], r=w.r, seed=args.seed), args.trials)
        report.trials = sweep.trials
        report.worst_case = sweep.worst_case
        report.diagnostics["sweep_sound"] = sweep.sound
    _emit(ser.dumps(ser.report_to_json(report)), args.out)
    return EXIT_OK


def cmd_chsh_scan(args) -> int:
    game = chsh_counterexample_game()
    rows = [(lam, bell_functional(game, bell_correlation(game, counterexample_state(lam))), "chsh_value")
            for lam in _grid(args)]
    _emit(ser.scan_csv(rows), args.out)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    if args.seed is None:
        raise InputError("reproduce needs an explicit --seed")
    rep = run_reproduction(args.seed, trials=args.trials)
    out = Path(args.out)
    ser.write_atomic(out / "checklist.json", ser.dumps(rep.checklist(args.seed, args.trials)))
    ser.write_atomic(out / "witness_scan.csv", ser.scan_csv(rep.scans["witness"]))
    ser.write_atomic(out / "chsh_scan.csv", ser.scan_csv(rep.scans["chsh"]))
    lines = ["d,r,threshold\n"] + [f"{d},{r},{ser.fmt(v)}\n" for d, r, v in rep.scans["thresholds"]]
    ser.write_atomic(out / "thresholds.csv", "".join(lines))
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}")
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


# --- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="schmidt-cert", description="Schmidt-number certification toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("witness", help="write the optimal Schmidt-number witness")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_witness)

    s = sub.add_parser("state", help="write a state from a built-in family")
    s.add_argument("--family", choices=["isotropic", "counterexample", "product"], required=True)
    s.add_argument("--d", type=int)
    s.add_argument("--p", type=float, help="visibility (isotropic) or mixing weight (counterexample)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_state)

    s = sub.add_parser("decompose", help="expand a witness over product ensembles")
    s.add_argument("--witness", required=True)
    s.add_argument("--left", help="JSON list of operators; default: standard ensemble")
    s.add_argument("--right")
    s.add_argument("--tolerance", type=float, default=1e-9)
    s.add_argument("--out")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("synth", help="compile a decomposition into a semiquantum game")
    s.add_argument("--decomposition", required=True)
    s.add_argument("--px", help="comma-separated input distribution for Alice")
    s.add_argument("--qy", help="comma-separated input distribution for Bob")
    s.add_argument("--out")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("simulate", help="correlation table of a game on a state (CSV)")
    s.add_argument("--game", required=True)
    s.add_argument("--state", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("certify", help="certify Schmidt number with a witness")
    s.add_argument("--state", required=True)
    s.add_argument("--witness", required=True)
    s.add_argument("--mode", choices=["direct", "compiled"], default="direct")
    s.add_argument("--trials", type=int, default=0)
    s.add_argument("--seed", type=int)
    s.add_argument("--tolerance", type=float, default=1e-9)
    s.add_argument("--out")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("chsh-scan", help="CHSH value of the counterexample family over a lambda grid")
    s.add_argument("--lambda-start", type=float, default=0.0)
    s.add_argument("--lambda-stop", type=float, default=1.0)
    s.add_argument("--lambda-steps", type=int, default=101)
    s.add_argument("--out")
    s.set_defaults(func=cmd_chsh_scan)

    s = sub.add_parser("reproduce", help="run every reproduction check and write the report")
    s.add_argument("--seed", type=int)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--out", default="reproduction")
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
