"""Command line front end: ``renyi <command> --scenario file.json``.

Each command writes ``<command>.csv`` with a fixed header and a JSON sidecar
``<command>.json`` holding full-precision values, the scenario with its
defaults filled in, and provenance. Exit codes: 0 success, 2 invalid input,
3 numerical failure.

Scenario schema (JSON)::

    {
      "name": "example",
      "rho":   [[0.7, 0], [0, 0.3]]                 # real matrix, or
               {"real": [[...]], "imag": [[...]]}   # complex matrix, or
               {"family": "power", "beta": 3}       # diagonal model
      "sigma": ...,
      "params": {
        "alpha": [1.5, 2.0], "z": [...], "u_grid": [...] | {"points": 101},
        "r_grid": [...], "kappa": [...], "levels": [...], "n_grid": [...],
        "copies": 3, "trials": 5, "seed": 0, "tol": 1e-6
      }
    }

Model families take ``beta`` (power), ``gamma`` (superpower), ``ratio``
(geometric) or ``values`` (finite), plus optional ``normalize`` and
``level``. Omitting ``z`` selects ``z = alpha`` for every ``alpha``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .discrimination import (
    Channel,
    ClassicalPair,
    DPI_TOL,
    measured_lower_bound,
    sc_exponent_estimate,
    apply_channel,
)
from .divergences import d_max, d_sandwiched, log_q_alpha_z
from .hoeffding import cutoff_rate, default_r_grid, default_u_grid, hoeffding_anti, psi_curve
from .operators import DiagonalModel, as_hermitian
from .truncation import CONV_TOL, ladder, model_d_max
from .types import AlphaZ, ExtendedValue, InvalidInputError, NumericalError
from .variational import optimizer_H, var_certificate

COMMANDS = ("compute", "ladder", "variational", "hoeffding", "cutoff", "simulate", "measured", "dpi", "report")
HEADERS = {
    "compute": ("alpha", "z", "Q", "D", "D_tilde", "status"),
    "ladder": ("level", "value", "status"),
    "variational": ("alpha", "z", "objective", "Q", "gap", "certified"),
    "hoeffding": ("r", "H_star", "H_hat", "argmax_u"),
    "cutoff": ("kappa", "value", "lower", "upper", "regular"),
    "simulate": ("n", "r", "exponent", "prediction", "gap"),
    "measured": ("alpha", "n", "value", "per_copy", "sandwiched", "gap"),
    "dpi": ("trial", "alpha", "before", "after", "holds"),
}
# columns holding logarithmic quantities, rescaled by --bits
LOG_COLUMNS = {
    "compute": {"D", "D_tilde"},
    "ladder": set(),
    "variational": set(),
    "hoeffding": {"r", "H_star", "H_hat"},
    "cutoff": {"value", "lower", "upper"},
    "simulate": {"r", "exponent", "prediction", "gap"},
    "measured": {"value", "per_copy", "sandwiched", "gap"},
    "dpi": {"before", "after"},
}
MODEL_KEYS = {"power": "beta", "superpower": "gamma", "geometric": "ratio"}


class ScenarioError(InvalidInputError):
    """Invalid scenario content, tagged with the offending field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass
class Scenario:
    name: str
    rho: object
    sigma: object
    params: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def is_model(self) -> bool:
        return isinstance(self.rho, DiagonalModel) and isinstance(self.sigma, DiagonalModel)

    def pairs(self):
        alphas, zs = self.params["alpha"], self.params["z"]
        if zs is None:
            return [AlphaZ(a, a) for a in alphas]
        return [AlphaZ(a, z) for a in alphas for z in zs]


# ---------------------------------------------------------------------------
# parsing


def _float_list(value, where, lo=-math.inf, lo_open=False):
    if not isinstance(value, list) or not value:
        raise ScenarioError(where, "expected a non-empty list of numbers")
    out = []
    for i, x in enumerate(value):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ScenarioError(f"{where}[{i}]", f"expected a finite number, got {x!r}")
        if x < lo or (lo_open and x == lo):
            raise ScenarioError(f"{where}[{i}]", f"value {x} out of range")
        out.append(float(x))
    return out


def _int_list(value, where):
    vals = _float_list(value, where, 1.0)
    if any(v != int(v) for v in vals):
        raise ScenarioError(where, "expected positive integers")
    return [int(v) for v in vals]


def _matrix(value, where):
    rows = np.asarray(value, dtype=object)
    if rows.ndim != 2 or rows.shape[0] != rows.shape[1] or rows.size == 0:
        raise ScenarioError(where, "expected a non-empty square matrix")
    try:
        return np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError(where, "matrix entries must be numbers") from None


def _operator(entry, where):
    if isinstance(entry, list):
        A = _matrix(entry, where)
    elif isinstance(entry, dict) and "family" in entry:
        fam = entry["family"]
        normalize = bool(entry.get("normalize", True))
        level = entry.get("level")
        try:
            if fam == "finite":
                vals = _float_list(entry.get("values"), f"{where}.values", 0.0, True)
                return DiagonalModel.finite(vals, normalize, level)
            if fam not in MODEL_KEYS:
                raise ScenarioError(f"{where}.family", f"unknown family {fam!r}")
            key = MODEL_KEYS[fam]
            if key not in entry:
                raise ScenarioError(f"{where}.{key}", f"required for family {fam!r}")
            (x,) = _float_list([entry[key]], f"{where}.{key}")
            return DiagonalModel(fam, (x,), normalize, 1 if level is None else level)
        except ScenarioError:
            raise
        except InvalidInputError as exc:
            raise ScenarioError(where, str(exc)) from None
    elif isinstance(entry, dict) and "real" in entry:
        A = _matrix(entry["real"], f"{where}.real").astype(complex)
        if "imag" in entry:
            B = _matrix(entry["imag"], f"{where}.imag")
            if B.shape != A.shape:
                raise ScenarioError(f"{where}.imag", "shape differs from the real part")
            A = A + 1j * B
    else:
        raise ScenarioError(where, "expected a matrix, {real, imag}, or {family, ...}")
    try:
        A = as_hermitian(A, where)
        if np.linalg.eigvalsh(A)[0] < -1e-10 * max(np.abs(A).max(), 1e-300):
            raise InvalidInputError("matrix is not positive semidefinite")
    except InvalidInputError as exc:
        raise ScenarioError(where, str(exc)) from None
    return A


def _defaults(params):
    return {
        "alpha": [1.5, 2.0, 3.0],
        "z": None,
        "u_grid": None,
        "r_grid": None,
        "kappa": [0.25, 0.5, 0.75],
        "levels": None,
        "n_grid": [250, 500, 1000, 2000],
        "copies": 3,
        "trials": 5,
        "seed": 0,
        "tol": CONV_TOL,
    } | params


def parse_scenario(path) -> Scenario:
    """Load and validate a scenario file, filling in defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(str(path), f"cannot read file ({exc.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    if not isinstance(raw, dict):
        raise ScenarioError("<root>", "expected a JSON object")
    for key in ("rho", "sigma"):
        if key not in raw:
            raise ScenarioError(key, "missing")
    rho = _operator(raw["rho"], "rho")
    sigma = _operator(raw["sigma"], "sigma")
    if isinstance(rho, DiagonalModel) != isinstance(sigma, DiagonalModel):
        raise ScenarioError("sigma", "rho and sigma must both be matrices or both be models")
    if not isinstance(rho, DiagonalModel) and rho.shape != sigma.shape:
        raise ScenarioError("sigma", f"shape {sigma.shape} differs from rho {rho.shape}")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ScenarioError("params", "expected an object")
    unknown = set(params) - set(_defaults({}))
    if unknown:
        raise ScenarioError(f"params.{sorted(unknown)[0]}", "unknown parameter")
    p = _defaults(dict(params))
    p["alpha"] = _float_list(p["alpha"], "params.alpha", 1.0, True)
    if p["z"] is not None:
        p["z"] = _float_list(p["z"], "params.z", 0.0, True)
    if isinstance(p["u_grid"], dict):
        pts = p["u_grid"].get("points")
        if not isinstance(pts, int) or pts < 2:
            raise ScenarioError("params.u_grid.points", "expected an integer >= 2")
        p["u_grid"] = default_u_grid(pts).tolist()
    elif p["u_grid"] is not None:
        p["u_grid"] = _float_list(p["u_grid"], "params.u_grid", 0.0)
        if max(p["u_grid"]) > 1.0:
            raise ScenarioError("params.u_grid", "points must lie in [0, 1]")
    if p["r_grid"] is not None:
        p["r_grid"] = _float_list(p["r_grid"], "params.r_grid")
    p["kappa"] = _float_list(p["kappa"], "params.kappa", 0.0, True)
    if max(p["kappa"]) >= 1.0:
        raise ScenarioError("params.kappa", "values must lie in (0, 1)")
    if p["levels"] is not None:
        p["levels"] = _int_list(p["levels"], "params.levels")
    p["n_grid"] = _int_list(p["n_grid"], "params.n_grid")
    for key in ("copies", "trials", "seed"):
        if isinstance(p[key], bool) or not isinstance(p[key], int) or p[key] < 0:
            raise ScenarioError(f"params.{key}", "expected a non-negative integer")
    if not 1 <= p["copies"] <= 3:
        raise ScenarioError("params.copies", "expected 1, 2 or 3")
    (p["tol"],) = _float_list([p["tol"]], "params.tol", 0.0, True)
    return Scenario(str(raw.get("name", path.stem)), rho, sigma, p, raw)


# ---------------------------------------------------------------------------
# commands


def _status(ev: ExtendedValue) -> str:
    return ev.reason


def _model_log_q(sc: Scenario, p: AlphaZ):
    rep = ladder(sc.rho, sc.sigma, p, sc.params["levels"], conv_tol=sc.params["tol"])
    if rep.verdict == "diverging":
        return ExtendedValue(math.inf, "ladder_divergent"), rep.verdict
    log_q = rep.log_limit
    return ExtendedValue(log_q), rep.verdict


def cmd_compute(sc: Scenario):
    rows, prov = [], []
    log_tr = sc.rho.log_trace() if sc.is_model else math.log(np.trace(sc.rho).real)
    for p in sc.pairs():
        if sc.is_model:
            lq, status = _model_log_q(sc, p)
            prov.append(f"fa_ladder:{status}")
        else:
            lq = log_q_alpha_z(sc.rho, sc.sigma, p)
            status = _status(lq)
            prov.append("matrix")
        Q = math.exp(lq.value) if lq.value < 709.0 else math.inf
        D = lq.value / (p.alpha - 1.0)
        rows.append([p.alpha, p.z, Q, D, D - log_tr / (p.alpha - 1.0), status])
    return rows, {"evaluation": prov}


def cmd_ladder(sc: Scenario):
    rows, reports = [], []
    for p in sc.pairs():
        rep = ladder(sc.rho, sc.sigma, p, sc.params["levels"], conv_tol=sc.params["tol"])
        for lv, v in zip(rep.levels, rep.values):
            level = list(lv) if isinstance(lv, tuple) else lv
            status = rep.verdict if v.is_finite else v.reason
            rows.append([level, v.value, status])
        reports.append(
            {
                "alpha": p.alpha,
                "z": p.z,
                "verdict": rep.verdict,
                "limit": rep.limit,
                "est_error": rep.est_error,
                "monotone": rep.monotone,
                "notes": list(rep.notes),
            }
        )
    return rows, {"ladders": reports}


def _require_matrix(sc: Scenario, command: str):
    if sc.is_model:
        raise ScenarioError("rho", f"command {command!r} needs matrix operators")


def cmd_variational(sc: Scenario):
    _require_matrix(sc, "variational")
    rows = []
    for p in sc.pairs():
        w = optimizer_H(sc.rho, sc.sigma, p)
        cert = var_certificate(sc.rho, sc.sigma, p, [w.H])
        rows.append([p.alpha, p.z, cert.best_objective, cert.Q.value, cert.gap, cert.certified])
    return rows, {"witness": "optimizer_H"}


def _dmax(sc: Scenario) -> ExtendedValue:
    return model_d_max(sc.rho, sc.sigma, sc.params["levels"]) if sc.is_model else d_max(sc.rho, sc.sigma)


def cmd_hoeffding(sc: Scenario):
    curve = psi_curve(sc.rho, sc.sigma, sc.params["u_grid"], sc.params["levels"])
    r_grid = sc.params["r_grid"]
    if r_grid is None:
        r_grid = default_r_grid(_dmax(sc).value, 41).tolist()
    rows = []
    for r in r_grid:
        rep = hoeffding_anti(curve, r)
        rows.append([r, rep.H_star.value, rep.H_hat.value, rep.maximizer_u])
    return rows, {"psi_provenance": curve.provenance, "psi_u": curve.u.tolist(), "psi": curve.values.tolist()}


def cmd_cutoff(sc: Scenario):
    rows = []
    for k in sc.params["kappa"]:
        res = cutoff_rate(sc.rho, sc.sigma, k, levels=sc.params["levels"])
        value = res.value.value if res.value is not None else math.nan
        rows.append([k, value, res.lower, res.upper, res.regular])
    return rows, {}


def _classical(sc: Scenario) -> ClassicalPair:
    if sc.is_model:
        raise ScenarioError("rho", "command 'simulate' needs finite diagonal matrices")
    for name, A in (("rho", sc.rho), ("sigma", sc.sigma)):
        if np.max(np.abs(A - np.diag(np.diag(A)))) > 0:
            raise ScenarioError(name, "command 'simulate' needs diagonal (classical) operators")
    return ClassicalPair(np.diag(sc.rho).real, np.diag(sc.sigma).real)


def cmd_simulate(sc: Scenario):
    pair = _classical(sc)
    r_grid = sc.params["r_grid"]
    if r_grid is None:
        dm = d_max(sc.rho, sc.sigma).value
        r_grid = [0.5 * dm] if math.isfinite(dm) else [1.0]
    rows, fits = [], []
    for r in r_grid:
        est = sc_exponent_estimate(pair, r, tuple(sc.params["n_grid"]), sc.params["u_grid"])
        for n, e in zip(est.n_grid, est.exponents):
            rows.append([n, r, e, est.prediction, e - est.prediction])
        fits.append(
            {"r": r, "extrapolated": est.extrapolated, "gap": est.gap, "bound_holds": est.bound_holds}
        )
    return rows, {"extrapolation": fits}


def cmd_measured(sc: Scenario):
    _require_matrix(sc, "measured")
    rows = []
    for a in sc.params["alpha"]:
        cache = {}
        for n in range(1, sc.params["copies"] + 1):
            b = measured_lower_bound(sc.rho, sc.sigma, a, n, seed=sc.params["seed"], _cache=cache)
            rows.append([a, n, b.value, b.per_copy, b.sandwiched, b.gap])
    return rows, {}


def cmd_dpi(sc: Scenario):
    _require_matrix(sc, "dpi")
    rng = np.random.default_rng(sc.params["seed"])
    d = sc.rho.shape[0]
    rows = []
    for t in range(sc.params["trials"]):
        ch = Channel.random(d, d, 2, rng)
        rho_out, sigma_out = apply_channel(ch, sc.rho), apply_channel(ch, sc.sigma)
        for a in sc.params["alpha"]:
            before = d_sandwiched(sc.rho, sc.sigma, a).value
            after = d_sandwiched(rho_out, sigma_out, a).value
            holds = math.isinf(before) or after <= before + DPI_TOL
            rows.append([t, a, before, after, holds])
    return rows, {"channel": "haar_isometry(d, d, 2 kraus)"}


RUNNERS = {
    "compute": cmd_compute,
    "ladder": cmd_ladder,
    "variational": cmd_variational,
    "hoeffding": cmd_hoeffding,
    "cutoff": cmd_cutoff,
    "simulate": cmd_simulate,
    "measured": cmd_measured,
    "dpi": cmd_dpi,
}


# ---------------------------------------------------------------------------
# output


def _scale(command, rows, bits):
    if not bits:
        return rows
    cols = [i for i, h in enumerate(HEADERS[command]) if h in LOG_COLUMNS[command]]
    out = []
    for row in rows:
        row = list(row)
        for i in cols:
            row[i] = row[i] / math.log(2)
        out.append(row)
    return out


def _cell(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, list):
        return ";".join(_cell(v) for v in x)
    return str(x)


def _echo(sc: Scenario):
    return {"name": sc.name, "rho": sc.raw["rho"], "sigma": sc.raw["sigma"], "params": sc.params}


def write_outputs(command, sc: Scenario, rows, meta, out: Path, bits: bool):
    out.mkdir(parents=True, exist_ok=True)
    rows = _scale(command, rows, bits)
    with open(out / f"{command}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADERS[command])
        for row in rows:
            w.writerow([_cell(x) for x in row])
    sidecar = {
        "command": command,
        "units": "bits" if bits else "nats",
        "columns": list(HEADERS[command]),
        "rows": rows,
        "provenance": meta,
        "scenario": _echo(sc),
    }
    with open(out / f"{command}.json", "w") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True)
        fh.write("\n")


def run(command: str, sc: Scenario, out: Path, bits: bool = False) -> list[str]:
    """Run ``command`` on ``sc`` and write its outputs; returns the file stems written."""
    if command not in COMMANDS:
        raise InvalidInputError(f"unknown command {command!r}")
    if command == "report":
        plan = ["compute", "hoeffding", "cutoff"] + (["ladder"] if sc.is_model else ["variational"])
        done = []
        for c in plan:
            done += run(c, sc, out, bits)
        with open(out / "report.json", "w") as fh:
            json.dump({"scenario": sc.name, "outputs": done}, fh, indent=1, sort_keys=True)
            fh.write("\n")
        return done
    rows, meta = RUNNERS[command](sc)
    write_outputs(command, sc, rows, meta, out, bits)
    return [command]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="renyi", description="Renyi divergence toolkit")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--scenario", required=True, help="scenario JSON file")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--bits", action="store_true", help="report logarithms in bits")
    ap.add_argument("--seed", type=int, help="override params.seed")
    ap.add_argument("--tol", type=float, help="override params.tol (ladder convergence)")
    args = ap.parse_args(argv)
    try:
        sc = parse_scenario(args.scenario)
        if args.seed is not None:
            sc.params["seed"] = args.seed
        if args.tol is not None:
            if not args.tol > 0:
                raise ScenarioError("--tol", "must be positive")
            sc.params["tol"] = args.tol
        with np.errstate(all="ignore"):
            run(args.command, sc, Path(args.out), args.bits)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
