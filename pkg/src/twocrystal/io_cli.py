"""JSON run configuration, result emission and the ``twocrystal`` command.

Exit codes: 0 success, 1 configuration or I/O error, 2 a physics invariant
or tolerance check failed, 64 command-line usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from twocrystal import experiment as ex
from twocrystal import fock_core as fc
from twocrystal import timeline as tl
from twocrystal.errors import (
    ConfigError,
    InvalidCoupling,
    InvalidModeSet,
    InvalidParams,
    InvalidRate,
    InvalidSelection,
    IoError,
    SimulationError,
)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2, 64

NORMALIZATION_TOL = 1e-12
ORACLE_TOL = 1e-10
BALANCE_TOL = 1e-12


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("twocrystal").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def _field_path(parts) -> str:
    return ".".join(str(p) for p in parts) or "<root>"


def _reject_constant(token: str):
    raise ValueError(f"non-finite number {token} is not allowed")


# -- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class CrystalSection:
    etas: tuple[complex, ...]
    selected_index: int


@dataclass(frozen=True)
class ExperimentSection:
    n0: float
    phi: float
    sigma: float | None = None
    sigma_parts: ex.SigmaParts | None = None


@dataclass(frozen=True)
class TimelineSection:
    tau_pcoh: float
    d_max: float
    duration: float
    seed: int
    n_refr: float = tl.DEFAULT_N_REFR
    q_e: float | None = None


@dataclass(frozen=True)
class ScanSection:
    delta_min: float
    delta_max: float
    steps: int


@dataclass(frozen=True)
class OutputSection:
    format: str = "json"
    path: str = "-"


@dataclass(frozen=True)
class RunConfig:
    crystal: CrystalSection
    experiment: ExperimentSection
    timeline: TimelineSection | None = None
    scan: ScanSection | None = None
    output: OutputSection = OutputSection()

    def coefficients(self) -> fc.DcCoefficients:
        return fc.dc_coefficients(_coupling_table(self.crystal))

    def experiment_config(self, sigma: float | None = None, phi: float | None = None) -> ex.ExperimentConfig:
        e = self.experiment
        parts = None if sigma is not None else e.sigma_parts
        return ex.ExperimentConfig(
            coeffs=self.coefficients(),
            n0=e.n0,
            phi=e.phi if phi is None else phi,
            sigma=e.sigma if sigma is None else sigma,
            sigma_parts=parts,
        )

    def timescale_params(self) -> tl.TimescaleParams:
        if self.timeline is None:
            raise ConfigError("timeline", "section is required by this command")
        t = self.timeline
        q_e = t.q_e
        if q_e is None:
            q_e = 4 * self.experiment.n0 * abs(self.coefficients().alpha_sel) ** 2
        try:
            return tl.TimescaleParams(q_e=q_e, tau_pcoh=t.tau_pcoh, d_max=t.d_max, n_refr=t.n_refr)
        except InvalidParams as err:
            raise ConfigError("timeline", str(err)) from err


def _coupling_table(c: CrystalSection) -> fc.CouplingTable:
    try:
        return fc.build_coupling_table(c.etas, c.selected_index)
    except InvalidSelection as err:
        raise ConfigError("crystal.selected_index", str(err)) from err
    except (InvalidModeSet, InvalidCoupling) as err:
        raise ConfigError("crystal.etas", str(err)) from err


def parse_config(doc: Any) -> RunConfig:
    """Validate a decoded JSON document and re-check module constraints."""
    validator = jsonschema.Draft202012Validator(load_schema("run_config"))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ConfigError(_field_path(first.absolute_path), first.message)

    c = doc["crystal"]
    crystal = CrystalSection(
        etas=tuple(complex(re, im) for re, im in c["etas"]),
        selected_index=c["selected_index"],
    )
    e = doc["experiment"]
    parts = e.get("sigma_parts")
    experiment = ExperimentSection(
        n0=float(e["n0"]),
        phi=float(e["phi"]),
        sigma=float(e["sigma"]) if "sigma" in e else None,
        sigma_parts=ex.SigmaParts(**{k: float(v) for k, v in parts.items()}) if parts else None,
    )
    timeline = None
    if "timeline" in doc:
        t = doc["timeline"]
        timeline = TimelineSection(
            tau_pcoh=float(t["tau_pcoh"]),
            d_max=float(t["d_max"]),
            duration=float(t["duration"]),
            seed=int(t["seed"]),
            n_refr=float(t.get("n_refr", tl.DEFAULT_N_REFR)),
            q_e=float(t["q_e"]) if "q_e" in t else None,
        )
    scan = None
    if "scan" in doc:
        s = doc["scan"]
        scan = ScanSection(float(s["delta_min"]), float(s["delta_max"]), int(s["steps"]))
    out = doc.get("output", {})
    output = OutputSection(format=out.get("format", "json"), path=out.get("path", "-"))

    cfg = RunConfig(crystal=crystal, experiment=experiment, timeline=timeline, scan=scan, output=output)
    # Constraints owned by the physics modules.
    _coupling_table(crystal)
    try:
        cfg.experiment_config()
    except InvalidRate as err:
        raise ConfigError("experiment.n0", str(err)) from err
    except InvalidParams as err:
        raise ConfigError("experiment.sigma", str(err)) from err
    if timeline is not None:
        cfg.timescale_params()
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as err:
        raise IoError(f"cannot read config {path}: {err}") from err
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except ValueError as err:
        raise ConfigError("<root>", f"invalid JSON: {err}") from err
    return parse_config(doc)


# -- result documents -------------------------------------------------------


def cplx(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _state(s: fc.SectorState) -> dict:
    return {"uv_amp": cplx(s.uv_amp), "pair_amps": [cplx(z) for z in s.pair_amps]}


def coeffs_result(coeffs: fc.DcCoefficients) -> dict:
    defect = abs(coeffs.beta**2 + float(np.sum(np.abs(coeffs.alpha) ** 2)) - 1.0)
    modes = [
        {
            "mode": m,
            "selected": m == coeffs.selected,
            "eta": cplx(coeffs.table.eta[m]),
            "alpha": cplx(coeffs.alpha[m]),
            "gamma": cplx(coeffs.gamma[m]),
        }
        for m in range(coeffs.n_modes)
    ]
    return {
        "xi": coeffs.xi,
        "beta": coeffs.beta,
        "selected_index": coeffs.selected,
        "normalization_defect": defect,
        "modes": modes,
    }


def expa_result(coeffs: fc.DcCoefficients, n0: float) -> dict:
    r = ex.experiment_a_rates(coeffs, n0)
    return {"n0": float(n0), "q_prime": r.q_prime, "q": r.q, "q_total": r.q_total}


def expb_result(cfg: ex.ExperimentConfig) -> dict:
    r = ex.run_experiment_b(cfg)
    bal = ex.uv_channel_balance(cfg)
    return {
        "n0": cfg.n0,
        "sigma": cfg.sigma,
        "phi": cfg.phi,
        "delta": cfg.delta,
        "input_state": _state(r.input_state),
        "output_state": _state(r.output_state),
        "prob_c": r.prob_c,
        "prob_selected": r.prob_selected,
        "prob_nonselected": {str(m): p for m, p in r.prob_nonselected.items()},
        "rate_c": r.rate_c,
        "rate_selected": r.rate_selected,
        "rate_nonselected_total": r.rate_nonselected_total,
        "uv_loss": r.uv_loss,
        "q_e": 4 * cfg.n0 * abs(cfg.coeffs.alpha_sel) ** 2,
        "balance": {"lhs": bal.lhs, "rhs": bal.rhs, "residual": bal.residual},
        "balance_residual": r.balance_residual,
    }


def scan_result(rows: list[ex.ScanRow]) -> dict:
    return {"rows": [row._asdict() for row in rows]}


def timeline_result(p: tl.TimescaleParams, events, stats: tl.TimelineStats) -> dict:
    ts = tl.derive_timescales(p)
    return {
        "timescales": {
            "t_mean": ts.t_mean,
            "delta": ts.delta,
            "ratio": ts.ratio,
            "inequality_holds": ts.inequality_holds,
        },
        "stats": {
            "n_incoming": stats.n_incoming,
            "n_born": stats.n_born,
            "n_overlapping_born": stats.n_overlapping_born,
            "overlap_fraction": stats.overlap_fraction,
            "t_mean_measured": stats.t_mean_measured if math.isfinite(stats.t_mean_measured) else None,
        },
        "events": [
            {"t_start": e.t_start, "duration": e.duration, "origin": e.origin.value} for e in events
        ],
    }


def oracle_result(tables: list[fc.CouplingTable]) -> dict:
    dev = 0.0
    defect = 0.0
    for t in tables:
        u = fc.closed_form_unitary(fc.dc_coefficients(t))
        dev = max(dev, float(np.max(np.abs(u - fc.brute_force_unitary(t)))))
        defect = max(defect, fc.unitarity_defect(u))
    return {
        "n_tables": len(tables),
        "max_deviation": dev,
        "max_unitarity_defect": defect,
        "tolerance": ORACLE_TOL,
        "passed": dev <= ORACLE_TOL and defect <= ORACLE_TOL,
    }


def mc_result(r: tl.MonteCarloResult, seed: int) -> dict:
    return {
        "duration": r.duration,
        "seed": int(seed),
        "n_trials": r.n_trials,
        "channels": {name: r.channel(name) for name in r.channels},
    }


def result_document(command: str, result: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "result": result}


def validate_result(doc: Any) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` is not a valid result."""
    jsonschema.Draft202012Validator(load_schema("result")).validate(doc)


# -- writers ----------------------------------------------------------------


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _flatten(obj: Any, prefix: str = ""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix[:-1], obj


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def json_text(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _emit(text: str, dest: str) -> None:
    if dest == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as err:
        raise IoError(f"cannot write {dest}: {err}") from err


# -- command line -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="twocrystal",
        description="Two-crystal down-conversion interference simulator. "
        "Angles in radians, rates in 1/s, times in s.",
        epilog="Exit codes: 0 ok, 1 config/IO error, 2 invariant violated, 64 usage error.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, help_: str, config_required: bool = True):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", required=config_required, metavar="PATH", help="JSON run configuration")
        p.add_argument("--out", metavar="PATH", help="output file, '-' for stdout (overrides output.path)")
        p.add_argument("--format", choices=["json", "csv"], help="output format (overrides output.format)")
        return p

    def angles(p):
        p.add_argument("--sigma", type=float, help="flight phase of the incoming pair (overrides experiment.sigma)")
        p.add_argument("--phi", type=float, help="UV photon phase at X (overrides experiment.phi)")
        p.add_argument("--deg", action="store_true", help="read --sigma/--phi in degrees")

    def stochastic(p):
        p.add_argument("--seed", type=int, help="master RNG seed (overrides timeline.seed)")
        p.add_argument("--duration", type=float, help="simulated time in s (overrides timeline.duration)")

    add("coeffs", "closed-form beta, alpha, gamma table")
    add("expa", "experiment A coincidence rates")
    angles(add("expb", "experiment B output amplitudes, rates and UV-channel balance"))
    add("scan", "selected-pair and UV rates across the fringe delta = sigma - phi")
    stochastic(add("timeline", "Poisson occupancy timeline of crystal X"))
    p = add("oracle-check", "compare closed-form unitary with the matrix-exponential oracle", config_required=False)
    p.add_argument("--random-modes", type=int, metavar="M", help="check random tables with M modes instead of the config crystal")
    p.add_argument("--trials", type=int, default=1, help="number of random tables (default 1)")
    p.add_argument("--seed", type=int, default=0, help="seed for random tables (default 0)")
    p = add("mc", "Monte Carlo exit-channel counts for experiment B")
    angles(p)
    stochastic(p)
    return parser


def _angle(v: float | None, deg: bool) -> float | None:
    if v is None:
        return None
    return math.radians(v) if deg else v


def _run(args) -> int:
    cfg = load_config(args.config) if args.config else None
    fmt = args.format or (cfg.output.format if cfg else "json")
    dest = args.out or (cfg.output.path if cfg else "-")
    status = EXIT_OK
    violations: list[str] = []

    if args.command == "oracle-check":
        if args.random_modes is not None:
            if args.random_modes < 1 or args.trials < 1:
                raise ConfigError("--random-modes", "mode count and trials must be >= 1")
            rng = np.random.default_rng(args.seed)
            tables = [fc.random_coupling_table(rng, args.random_modes) for _ in range(args.trials)]
        elif cfg is not None:
            tables = [_coupling_table(cfg.crystal)]
        else:
            raise ConfigError("--config", "required unless --random-modes is given")
        result = oracle_result(tables)
        if not result["passed"]:
            violations.append(f"oracle deviation {result['max_deviation']:.3e} exceeds {ORACLE_TOL:g}")
        print(f"max deviation {result['max_deviation']:.3e}", file=sys.stderr)

    elif args.command == "coeffs":
        result = coeffs_result(cfg.coefficients())
        if result["normalization_defect"] > NORMALIZATION_TOL:
            violations.append(f"beta^2 + sum|alpha|^2 off by {result['normalization_defect']:.3e}")

    elif args.command == "expa":
        result = expa_result(cfg.coefficients(), cfg.experiment.n0)

    elif args.command == "expb":
        ecfg = cfg.experiment_config(_angle(args.sigma, args.deg), _angle(args.phi, args.deg))
        result = expb_result(ecfg)
        if result["balance_residual"] > BALANCE_TOL * ecfg.n0:
            violations.append(f"balance residual {result['balance_residual']:.3e} exceeds {BALANCE_TOL:g} n0")

    elif args.command == "scan":
        if cfg.scan is None:
            raise ConfigError("scan", "section is required by the scan command")
        grid = ex.fringe_grid(cfg.scan.delta_min, cfg.scan.delta_max, cfg.scan.steps)
        rows = ex.phase_scan(cfg.coefficients(), cfg.experiment.n0, grid)
        result = scan_result(rows)
        if fmt == "csv":
            _emit(csv_text(["delta", "rate_selected", "rate_c"], rows), dest)
            return status

    elif args.command == "timeline":
        p = cfg.timescale_params()
        seed = args.seed if args.seed is not None else cfg.timeline.seed
        duration = args.duration if args.duration is not None else cfg.timeline.duration
        events, stats = tl.simulate_timeline(p, duration, seed)
        result = timeline_result(p, events, stats)
        if fmt == "csv":
            rows = ((e.t_start, e.duration, e.origin.value) for e in events)
            _emit(csv_text(["t_start", "duration", "origin"], rows), dest)
            summary = {k: v for k, v in result.items() if k != "events"}
            print(json.dumps(summary, allow_nan=False), file=sys.stderr)
            return status

    elif args.command == "mc":
        ecfg = cfg.experiment_config(_angle(args.sigma, args.deg), _angle(args.phi, args.deg))
        seed = args.seed if args.seed is not None else (cfg.timeline.seed if cfg.timeline else None)
        duration = args.duration if args.duration is not None else (cfg.timeline.duration if cfg.timeline else None)
        if seed is None or duration is None:
            raise ConfigError("timeline", "seed and duration are required by mc")
        mc = tl.coincidence_monte_carlo(ecfg.coeffs, ecfg.n0, ecfg.sigma, ecfg.phi, duration, seed)
        result = mc_result(mc, seed)

    doc = result_document(args.command, result)
    if fmt == "csv":
        _emit(csv_text(["key", "value"], _flatten(result)), dest)
    else:
        _emit(json_text(doc), dest)
    for v in violations:
        print(f"invariant violated: {v}", file=sys.stderr)
        status = EXIT_INVARIANT
    return status


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except IoError as err:
        print(f"io error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
