"""``pclpv`` command line: synth, simulate, benchmark, validate.

Exit codes: 0 success, 1 configuration or usage error, 2 infeasible SDP,
3 numerical failure (including unbounded problems and singular ``Y``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, sdp
from .config import (
    ConfigError,
    cost_from,
    distribution_from,
    initial_conditions,
    load_config,
    missile_from,
    options_from,
)
from .orthopoly import ConfigurationError, make_basis, make_lagrange
from .plant import linearize_origin, missile_quasi_lpv
from .simulate import cost_to_go, simulate_closed_loop, write_trajectory_csv
from .synthesis import (
    SingularityError,
    SynthesisError,
    gain_dims,
    gain_from_dict,
    gain_to_dict,
    sample_grid,
    spectral_abscissa,
    synth_lpv_sampled,
    synth_lti,
    synth_pclpv,
    synth_sclpv,
)
from .validation import SUITES, run_suites

log = logging.getLogger("pclpv")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3
METHODS = ("lti", "lpv", "pclpv", "sclpv")
DEFAULT_BENCHMARK = {"lpv_samples": [2, 20, 50, 100], "pclpv_orders": [3, 4, 5], "sclpv_orders": [5, 9, 12]}


# -- JSON with 17 significant digits -------------------------------------------------

def _encode(obj, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        text = f"{x:.17g}"
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _encode(v, indent, level + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps17(obj, indent: int = 2) -> str:
    """JSON text whose floats carry 17 significant digits (exact round trip)."""
    return _encode(obj, indent, 0) + "\n"


def write_json(obj, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(dumps17(obj), encoding="utf-8")


# -- synthesis and benchmark rows -------------------------------------------------------

def synthesize(config: dict, method: str, order: int | None = None, samples: int | None = None):
    """Run one design on the configured missile plant."""
    missile = missile_from(config)
    system = missile_quasi_lpv(missile)
    weights = cost_from(config)
    options = options_from(config)
    syn = config["synthesis"]
    if method == "lti":
        A, B = linearize_origin(missile)
        return synth_lti(A, B, weights.Q, weights.R, options)
    if method == "lpv":
        k = int(samples if samples is not None else syn["samples"])
        return synth_lpv_sampled(system, weights.Q, weights.R, sample_grid(system.distribution, k), options)
    N = int(order if order is not None else syn["order"])
    basis = make_basis(distribution_from(config), N)
    if method == "pclpv":
        return synth_pclpv(system, weights.Q, weights.R, basis, options)
    if method == "sclpv":
        return synth_sclpv(system, weights.Q, weights.R, make_lagrange(basis), options)
    raise ConfigurationError(f"unknown method {method!r}")


def _endpoint_abscissa(system, gain) -> float:
    lo, hi = system.distribution.support
    return max(spectral_abscissa(system, gain, lo), spectral_abscissa(system, gain, hi))


def synth_record(result, config: dict) -> dict:
    system = missile_quasi_lpv(missile_from(config))
    rec = {
        "method": result.method,
        "label": result.label,
        "status": "optimal",
        "sdp_variables": result.nvars,
        "seconds": result.seconds,
        "objective": result.objective,
        "sdp_residual": result.sdp_residual,
        "decay_residual": result.decay_residual,
        "endpoint_abscissa": _endpoint_abscissa(system, result.gain),
        "variable_scale": result.extra.get("scale", 1.0),
        "solver_tolerance": result.solution.info.get("tolerance"),
    }
    for key in ("order", "samples"):
        if key in result.extra:
            rec[key] = result.extra[key] if key == "order" else len(result.extra[key])
    return rec


def _row_label(method: str, param) -> str:
    return {
        "lti": "LTI",
        "lpv": f"LPV ({param} samples)",
        "pclpv": f"pcLPV (N={param})",
        "sclpv": f"scLPV (N={param})",
    }[method]


def benchmark_rows(config: dict, methods=None) -> list[tuple[str, int | None]]:
    spec = {**DEFAULT_BENCHMARK, **config.get("benchmark", {})}
    rows = [("lti", None)]
    rows += [("lpv", int(k)) for k in spec["lpv_samples"]]
    rows += [("pclpv", int(n)) for n in spec["pclpv_orders"]]
    rows += [("sclpv", int(n)) for n in spec["sclpv_orders"]]
    if methods:
        rows = [r for r in rows if r[0] in methods]
    return rows


def run_row(config: dict, method: str, param) -> tuple[dict, object]:
    """Synthesize and simulate one benchmark row; failures are recorded, not raised."""
    label = _row_label(method, param)
    rec = {"controller": label, "method": method}
    rec["order" if method in ("pclpv", "sclpv") else "samples"] = param
    try:
        result = synthesize(
            config, method,
            order=param if method in ("pclpv", "sclpv") else None,
            samples=param if method == "lpv" else None,
        )
    except SynthesisError as exc:
        rec.update(status=exc.status, error=str(exc))
        return rec, None
    except SingularityError as exc:
        rec.update(status=sdp.NUMERICAL_FAILURE, error=str(exc))
        return rec, None
    rec.update({k: v for k, v in synth_record(result, config).items() if k not in ("label", "method")})
    missile = missile_from(config)
    weights = cost_from(config)
    sim = config["simulation"]
    runs = []
    default = None
    target = [float(v) for v in sim["x0"]]
    for x0 in initial_conditions(config):
        res = simulate_closed_loop(missile, result.gain, x0, float(sim["t_final"]), float(sim["dt"]), weights.Q, weights.R)
        runs.append({"x0": x0, "cost": res.J, "diverged": res.diverged, "converged": res.converged})
        if default is None and [float(v) for v in x0] == target:
            default = res
    if default is None:
        default = simulate_closed_loop(
            missile, result.gain, sim["x0"], float(sim["t_final"]), float(sim["dt"]), weights.Q, weights.R
        )
    rec.update(
        cost_to_go=default.J,
        cost_to_go_final=cost_to_go(default),
        diverged=default.diverged,
        converged=default.converged,
        flagged=default.flagged,
        runs=runs,
    )
    return rec, result.gain


def manifest(config: dict, records: list[dict]) -> dict:
    return {"tool": "pclpv", "version": __version__, "config": config, "records": records}


def _fmt(v, spec: str) -> str:
    if v is None:
        return "-"
    return format(v, spec)


def table_text(records: list[dict], x0) -> str:
    head = ["Controller", "Synthesis time (s)", "# SDP variables", "Objective", "Cost-to-go", "Note"]
    rows = []
    for r in records:
        note = r.get("status", "") if r.get("status") != "optimal" else ("not converged" if r.get("flagged") else "")
        if r.get("diverged"):
            note = "diverged"
        rows.append([
            r["controller"], _fmt(r.get("seconds"), ".4f"), _fmt(r.get("sdp_variables"), "d"),
            _fmt(r.get("objective"), ".4f"), _fmt(r.get("cost_to_go"), ".4f"), note,
        ])
    widths = [max(len(str(x)) for x in col) for col in zip(head, *rows)]
    line = lambda cells: "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()  # noqa: E731
    out = [f"x0 = ({x0[0]:g}, {x0[1]:g}); cost over the simulation horizon", line(head), line(["-" * w for w in widths])]
    out += [line(r) for r in rows]
    return "\n".join(out) + "\n"


def write_table_csv(records: list[dict], path) -> None:
    cols = ["controller", "method", "order", "samples", "status", "seconds", "sdp_variables", "objective",
            "cost_to_go", "diverged", "converged", "sdp_residual", "decay_residual", "endpoint_abscissa"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in records:
            w.writerow(["" if r.get(c) is None else (f"{r[c]:.17g}" if isinstance(r[c], float) else r[c]) for c in cols])


# -- commands --------------------------------------------------------------------------

def _load(args) -> dict:
    config = load_config(args.config)
    if args.seed is not None:
        config["seed"] = int(args.seed)
    config.setdefault("seed", 0)
    return config


def cmd_synth(args) -> int:
    config = _load(args)
    method = args.method or config["synthesis"]["method"]
    if method not in METHODS:
        print(f"error: unknown method {method!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = synthesize(config, method, args.order, args.samples)
    except SynthesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE if exc.status == sdp.INFEASIBLE else EXIT_NUMERICAL
    except SingularityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out = Path(args.out or f"gain_{method}.json")
    write_json({**gain_to_dict(result.gain), "label": result.label}, out)
    rec = synth_record(result, config)
    write_json(manifest(config, [rec]), out.with_name(out.stem + ".manifest.json"))
    if args.sdpa:
        sdp.write_sdpa(result.problem, args.sdpa)
    print(f"{result.label}: objective={result.objective:.10g} variables={result.nvars} "
          f"seconds={result.seconds:.3f} sdp_residual={result.sdp_residual:.2e} "
          f"decay_residual={result.decay_residual:.2e}")
    print(f"gain written to {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load(args)
    try:
        with open(args.gain, encoding="utf-8") as fh:
            gain = gain_from_dict(json.load(fh))
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: cannot read gain {args.gain}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    missile = missile_from(config)
    weights = cost_from(config)
    if tuple(gain_dims(gain)) != (1, 2) or weights.Q.shape != (2, 2):
        print(f"error: gain dimensions {tuple(gain_dims(gain))} do not match the plant (1, 2)", file=sys.stderr)
        return EXIT_CONFIG
    sim = config["simulation"]
    x0 = args.x0 if args.x0 is not None else sim["x0"]
    try:
        res = simulate_closed_loop(missile, gain, x0, float(sim["t_final"]), float(sim["dt"]), weights.Q, weights.R)
    except SingularityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out = Path(args.out or "trajectory.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(res, out)
    flag = "diverged" if res.diverged else ("not converged" if not res.converged else "converged")
    print(f"x0=({x0[0]:g}, {x0[1]:g}) J={res.J:.10g} [{flag}]")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    config = _load(args)
    methods = None
    if args.methods:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        bad = [m for m in methods if m not in METHODS]
        if bad:
            print(f"error: unknown methods {bad}", file=sys.stderr)
            return EXIT_CONFIG
    rows = benchmark_rows(config, methods)
    out = Path(args.out or "benchmark")
    out.mkdir(parents=True, exist_ok=True)
    threads = max(1, int(args.threads or 1))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda row: run_row(config, *row), rows))
    records = [rec for rec, _ in results]
    for (rec, gain), (method, param) in zip(results, rows):
        if gain is not None:
            tag = method if param is None else f"{method}_{param}"
            write_json({**gain_to_dict(gain), "label": rec["controller"]}, out / "gains" / f"{tag}.json")
    write_json(manifest(config, records), out / "manifest.json")
    write_table_csv(records, out / "benchmark.csv")
    text = table_text(records, config["simulation"]["x0"])
    (out / "benchmark.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    config_seed = args.seed if args.seed is not None else 0
    if args.config:
        config_seed = _load(args).get("seed", 0)
    names = args.suite or None
    results = run_suites(names, seed=int(config_seed), norm_perturbation=args.perturb_norms)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print("all suites passed" if not failed else f"failed: {', '.join(failed)}")
    return 1 if failed else EXIT_OK


# -- argument parsing ------------------------------------------------------------------

def _global_flags(parser: argparse.ArgumentParser, default) -> None:
    parser.add_argument("--config", default=default, help="run configuration JSON (default: shipped reference)")
    parser.add_argument("--out", default=default, help="output file or directory")
    parser.add_argument("--seed", type=int, default=default, help="seed for Monte Carlo validation")
    parser.add_argument("--threads", type=int, default=default, help="benchmark worker threads")
    parser.add_argument("-v", "--verbose", action="store_true", default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pclpv", description="Polynomial chaos LPV regulator synthesis")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, None)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="synthesize one controller")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--order", type=int, help="expansion degree N (pclpv, sclpv)")
    p.add_argument("--samples", type=int, help="number of LPV grid samples")
    p.add_argument("--sdpa", help="also write the SDP in SDPA sparse format")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", parents=[common], help="simulate a stored gain on the nonlinear missile")
    p.add_argument("--gain", required=True)
    p.add_argument("--x0", type=float, nargs=2, metavar=("ALPHA", "Q"))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", parents=[common], help="compare all controllers")
    p.add_argument("--methods", help="comma-separated subset of " + ",".join(METHODS))
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("validate", parents=[common], help="run the property suites")
    p.add_argument("--suite", action="append", choices=list(SUITES))
    p.add_argument("--perturb-norms", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
