"""JSON and CSV formats for operators, witnesses, decompositions, games and reports.

Operator schema::

    {"dims": [d1, d2, ...], "re": [[...]], "im": [[...]]}

NaN and infinities are rejected on read. Reports are written with at most 12
significant digits so repeated runs produce identical bytes; operator files
keep full double precision.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .certify import CertificationReport
from .decompose import GammaDecomposition, ProductEnsemble
from .games import BellGame, CorrelationTable, SemiquantumGame
from .qlinalg import DimensionError
from .schmidt import WitnessOperator


NOISE_FLOOR = 1e-14


class FormatError(ValueError):
    """Malformed or non-finite input file."""


def fmt(v: float) -> str:
    return format(float(v), ".12g")


def clean(obj, round_floats: bool = True):
    """Convert numpy types recursively; optionally round floats to 12 significant digits."""
    if isinstance(obj, dict):
        return {k: clean(v, round_floats) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v, round_floats) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist(), round_floats)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        if not round_floats:
            return float(obj)
        # roundoff-level values would otherwise leak platform-specific digits
        if abs(obj) < NOISE_FLOOR:
            return 0.0
        return float(fmt(obj))
    return obj


def dumps(obj, round_floats: bool = True) -> str:
    return json.dumps(clean(obj, round_floats), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _reject_constant(name):
    raise FormatError(f"non-finite number {name} in input")


def loads(text: str):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc


def read_json(path) -> dict:
    return loads(Path(path).read_text())


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- operators -----------------------------------------------------------------


def operator_to_json(op, dims) -> dict:
    m = np.asarray(op, dtype=complex)
    return {"dims": [int(d) for d in dims], "re": m.real.tolist(), "im": m.imag.tolist()}


def operator_from_json(obj) -> tuple[np.ndarray, list[int]]:
    try:
        dims = [int(d) for d in obj["dims"]]
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed operator: {exc}") from exc
    if re.shape != im.shape or re.ndim != 2:
        raise FormatError("operator 're' and 'im' must be matrices of equal shape")
    if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
        raise FormatError("operator has non-finite entries")
    total = int(np.prod(dims))
    if re.shape != (total, total):
        raise DimensionError(f"operator shape {re.shape} does not match dims {dims}")
    return re + 1j * im, dims


def witness_to_json(w: WitnessOperator) -> dict:
    out = operator_to_json(w.op, w.dims)
    out["r"] = int(w.r)
    return out


def witness_from_json(obj) -> WitnessOperator:
    op, dims = operator_from_json(obj)
    if len(dims) != 2 or "r" not in obj:
        raise FormatError("witness needs two factor dimensions and an 'r' field")
    return WitnessOperator(op=op, r=int(obj["r"]), dims=(dims[0], dims[1]))


# --- decompositions ------------------------------------------------------------------


def decomposition_to_json(dec: GammaDecomposition) -> dict:
    out = {
        "gamma": dec.gamma.tolist(),
        "left": [operator_to_json(s, [dec.left.d]) for s in dec.left.states],
        "right": [operator_to_json(s, [dec.right.d]) for s in dec.right.states],
        "residual": dec.residual,
    }
    if dec.target is not None:
        out["witness"] = witness_to_json(dec.target)
    return out


def decomposition_from_json(obj) -> GammaDecomposition:
    try:
        left = ProductEnsemble(tuple(operator_from_json(o)[0] for o in obj["left"]))
        right = ProductEnsemble(tuple(operator_from_json(o)[0] for o in obj["right"]))
        gamma = np.asarray(obj["gamma"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed decomposition: {exc}") from exc
    if not np.all(np.isfinite(gamma)):
        raise FormatError("gamma has non-finite entries")
    target = witness_from_json(obj["witness"]) if "witness" in obj else None
    return GammaDecomposition(gamma=gamma, left=left, right=right, target=target,
                              residual=float(obj.get("residual", 0.0)))


# --- games ---------------------------------------------------------------------------


def game_to_json(game: BellGame | SemiquantumGame) -> dict:
    out = {
        "inputsA": len(game.p_x),
        "inputsB": len(game.q_y),
        "pX": game.p_x.tolist(),
        "qY": game.q_y.tolist(),
        "payoff": game.payoff.tolist(),
    }
    if isinstance(game, SemiquantumGame):
        dA0, dB0 = game.input_dims
        out["type"] = "semiquantum"
        out["inputStates"] = {
            "A": [operator_to_json(s, [dA0]) for s in game.input_states_a],
            "B": [operator_to_json(s, [dB0]) for s in game.input_states_b],
        }
    else:
        dA, dB = game.dims
        out["type"] = "bell"
        out["measurements"] = {
            "A": [[operator_to_json(e, [dA]) for e in m] for m in game.measurements_a],
            "B": [[operator_to_json(e, [dB]) for e in m] for m in game.measurements_b],
        }
    return out


def game_from_json(obj) -> BellGame | SemiquantumGame:
    try:
        kind = obj["type"]
        p_x, q_y, payoff = obj["pX"], obj["qY"], np.asarray(obj["payoff"], dtype=float)
        if not np.all(np.isfinite(payoff)):
            raise FormatError("payoff has non-finite entries")
        if kind == "semiquantum":
            states = obj["inputStates"]
            return SemiquantumGame(
                input_states_a=tuple(operator_from_json(o)[0] for o in states["A"]),
                input_states_b=tuple(operator_from_json(o)[0] for o in states["B"]),
                p_x=p_x, q_y=q_y, payoff=payoff,
            )
        if kind == "bell":
            ms = obj["measurements"]
            return BellGame(
                p_x=p_x, q_y=q_y,
                measurements_a=tuple([operator_from_json(e)[0] for e in m] for m in ms["A"]),
                measurements_b=tuple([operator_from_json(e)[0] for e in m] for m in ms["B"]),
                payoff=payoff,
            )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed game: {exc}") from exc
    raise FormatError(f"unknown game type {obj.get('type')!r}")


# --- reports and tables ----------------------------------------------------------------


def report_to_json(report: CertificationReport) -> dict:
    return {
        "witness": report.witness,
        "game": report.game,
        "mode": report.mode,
        "payoff": report.payoff,
        "threshold": report.threshold,
        "verdict": report.verdict,
        "trials": report.trials,
        "worstCase": report.worst_case,
        "seed": report.seed,
        "diagnostics": report.diagnostics,
    }


def correlation_csv(table: CorrelationTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "a", "b", "p"])
    for x, y, a, b, p in table.rows():
        w.writerow([x, y, a, b, fmt(p)])
    return buf.getvalue()


def scan_csv(rows) -> str:
    """``rows`` of ``(lambda, value, quantity)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "value", "quantity"])
    for lam, val, name in rows:
        w.writerow([fmt(lam), fmt(val), name])
    return buf.getvalue()
