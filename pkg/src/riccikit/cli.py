"""Batch front-end: parse experiment configs, run verification suites, emit
machine-readable reports.

Exit codes: 0 all pass, 1 at least one inequality failure, 2 config error,
3 runtime error (a row errored but the suite completed).  The environment
variable RG_SEED overrides the config seed.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import List, Optional

import numpy as np

from . import catalog, engine, families, fields, measures, tensor_core, transport
from .bodies import body_from_spec
from .errors import (
    IOFailure,
    RicciKitError,
    SchemaViolation,
    UnknownInequalityId,
)

CSV_COLUMNS = [
    "suite", "inequality", "dim", "function",
    "lhs", "lhs_err", "rhs", "rhs_err", "slack", "status", "seed", "n",
]

_MEASURE_IDS = {
    "classical_bl", "generalized_bl", "refined_bl", "negdim_bl", "compact_bl",
    "payne_weinberger", "bakry_emery_lsi", "entropic_bl", "muq_lsi",
    "bakry_t_lsi", "poly_product", "exp_product", "klartag_transfer",
}
_BODY_IDS = {
    "cone_variance", "l1_type", "dim_bl_boundary", "hardy_boundary",
    "hardy_dirichlet", "hardy_n0", "strong_boundary", "one_lip_reduction",
}
_MIN_DIMS = {
    "hardy_boundary": 6,
    "hardy_n0": 6,
    "cone_variance": 3,
    "l1_type": 3,
    "strong_boundary": 8,
    "dim_bl_boundary": 4,
}


@dataclass
class ExperimentConfig:
    suite: str
    inequality: str
    dims: List[int]
    samples: int = 200000
    seed: int = 0
    workers: int = 1
    measure: Optional[dict] = None
    target: Optional[dict] = None
    body: Optional[dict] = None
    params: dict = field(default_factory=dict)
    function_filter: Optional[List[str]] = None


def parse_config(document) -> ExperimentConfig:
    """Validate a JSON config document; the first violation is reported with
    a JSON-pointer path."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaViolation("", f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise SchemaViolation("", "config must be a JSON object")

    ineq = document.get("inequality")
    if not isinstance(ineq, str):
        raise SchemaViolation("/inequality", "missing or non-string inequality id")
    if ineq not in catalog.CATALOG:
        raise UnknownInequalityId(ineq)

    dims = document.get("dims")
    if not isinstance(dims, list) or not dims:
        raise SchemaViolation("/dims", "dims must be a non-empty list of integers")
    for i, d in enumerate(dims):
        if not isinstance(d, int) or d < 1:
            raise SchemaViolation(f"/dims/{i}", f"invalid dimension {d!r}")
        floor = _MIN_DIMS.get(ineq)
        if floor is not None and d < floor:
            raise SchemaViolation(
                f"/dims/{i}",
                f"{ineq} requires dimension >= {floor} "
                f"(the admissibility window of the theorem)",
            )

    samples = document.get("samples", 200000)
    if not isinstance(samples, int) or samples < 100:
        raise SchemaViolation("/samples", "samples must be an integer >= 100")
    seed = document.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise SchemaViolation("/seed", "seed must be a non-negative integer")
    workers = document.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise SchemaViolation("/workers", "workers must be a positive integer")

    measure = document.get("measure")
    if ineq in _MEASURE_IDS and measure is None and ineq != "bakry_t_lsi":
        raise SchemaViolation("/measure", f"{ineq} requires a measure spec")
    if measure is not None and "kind" not in measure:
        raise SchemaViolation("/measure/kind", "measure spec needs a kind")
    body = document.get("body")
    if ineq in _BODY_IDS:
        if body is None:
            raise SchemaViolation("/body", f"{ineq} requires a body spec")
        if "kind" not in body:
            raise SchemaViolation("/body/kind", "body spec needs a kind")

    params = document.get("params", {})
    if not isinstance(params, dict):
        raise SchemaViolation("/params", "params must be an object")

    return ExperimentConfig(
        suite=document.get("suite", ineq),
        inequality=ineq,
        dims=list(dims),
        samples=samples,
        seed=seed,
        workers=workers,
        measure=measure,
        target=document.get("target"),
        body=body,
        params=dict(params),
        function_filter=document.get("function_filter"),
    )


def _instance_params(config: ExperimentConfig, d: int) -> dict:
    params = dict(config.params)
    params["dim"] = d
    if config.measure is not None:
        params["measure"] = measures.from_spec(config.measure, d)
    if config.target is not None:
        params["target"] = measures.from_spec(config.target, d)
    if config.body is not None:
        params["body"] = body_from_spec({**config.body, "dim": d})
    return params


def run_suite(config: ExperimentConfig) -> engine.VerificationReport:
    """Run one config over its dims; instantiation failures become error rows
    instead of aborting the suite."""
    report = engine.VerificationReport()
    seed = config.seed
    env_seed = os.environ.get("RG_SEED")
    if env_seed is not None:
        seed = int(env_seed)
    for d in config.dims:
        try:
            inst = catalog.instantiate(config.inequality, _instance_params(config, d))
        except RicciKitError as exc:
            report.add(engine.ReportRow(
                suite=config.suite, inequality=config.inequality, dim=d,
                function="-", lhs=math.nan, lhs_err=math.nan, rhs=math.nan,
                rhs_err=math.nan, slack=math.nan, status="error",
                seed=seed, n=config.samples,
            ))
            report.attachments[f"{config.inequality}:d={d}:error"] = str(exc)
            continue
        functions = engine.default_suite(d, seed=seed)
        if config.function_filter:
            functions = [f for f in functions if f.id in config.function_filter]
        sub = engine.check_inequality(
            inst, functions=functions, budget=config.samples,
            seed=seed, workers=config.workers, suite_name=config.suite,
        )
        report.extend(sub)
    return report


def run_documents(documents) -> engine.VerificationReport:
    report = engine.VerificationReport()
    for doc in documents:
        report.extend(run_suite(parse_config(doc)))
    return report


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def report_to_csv(report: engine.VerificationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in report.rows:
        d = r.as_dict()
        writer.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def report_to_json(report: engine.VerificationReport) -> str:
    return json.dumps(
        {
            "rows": [r.as_dict() for r in report.rows],
            "attachments": report.attachments,
        },
        indent=2,
        sort_keys=True,
        default=float,
    )


def emit_report(report, fmt="csv", path=None):
    if not report.rows:
        raise IOFailure("refusing to emit an empty report")
    text = report_to_csv(report) if fmt == "csv" else report_to_json(report)
    if path is None or path == "-":
        sys.stdout.write(text)
        return None
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOFailure(str(exc)) from exc
    return path


def load_bundled(name):
    """Load a bundled suite (e.g. 'paper-smoke') from package data."""
    fname = f"{name}.json"
    ref = resources.files("riccikit") / "configs" / fname
    if not ref.is_file():
        raise SchemaViolation("", f"no bundled suite named {name!r}")
    return json.loads(ref.read_text())


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def exit_code_for(report: engine.VerificationReport) -> int:
    """1 if any graded row failed, else 3 if any row errored, else 0;
    report-only rows never affect the exit status."""
    if any(r.status == "fail" for r in report.rows):
        return 1
    if any(r.status == "error" for r in report.rows):
        return 3
    return 0


def _cmd_check(args):
    if os.path.exists(args.config):
        with open(args.config, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = load_bundled(args.config)
    documents = payload if isinstance(payload, list) else [payload]
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.samples is not None:
        overrides["samples"] = args.samples
    if args.workers is not None:
        overrides["workers"] = args.workers
    documents = [{**doc, **overrides} for doc in documents]
    report = run_documents(documents)
    emit_report(report, fmt=args.format, path=args.out)
    return exit_code_for(report)


def _cmd_ricci(args):
    x = np.asarray(args.point, dtype=float)
    d = x.size
    fam = json.loads(args.family)
    mspec = json.loads(args.measure) if args.measure else {"kind": "gaussian"}
    mu = measures.from_spec(mspec, d)
    kind = fam.get("type", "euclidean")
    n_param = math.inf
    if kind == "product_power":
        data = families.ProductMetricData.power(fam["p"], d)
        closed = families.product_ricci(data, mu.potential, x)
        metric = fields.power_product_metric(fam["p"], d)
    elif kind == "product_exp":
        data = families.ProductMetricData.exponential(fam["lam"], d)
        closed = families.product_ricci(data, mu.potential, x)
        metric = fields.exp_product_metric([fam["lam"]] * d)
    elif kind == "conformal_radial":
        n_param = fam.get("N", math.inf)
        data = families.ConformalMetricData.radial(fam["theta"], fam.get("eps", 1e-6))
        closed = families.conformal_ricci_N(data, mu.potential, n_param, x)
        metric = fields.conformal_metric(data.phi, d)
    else:
        closed = mu.potential.hessian(x)
        metric = fields.euclidean_metric(d)
    cp = tensor_core.generalized_ricci(metric, mu.potential, x, n_param=n_param)
    out = {
        "point": x.tolist(),
        "closed_form": np.asarray(closed).tolist(),
        "finite_difference": cp.ric_gmu_n.tolist(),
        "max_abs_disagreement": float(np.abs(closed - cp.ric_gmu_n).max()),
    }
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


_POTENTIALS_1D = {
    "uniform": lambda p: (lambda t: 0.0),
    "gaussian": lambda p: (lambda t: 0.5 * t * t / p.get("sigma", 1.0) ** 2),
    "exp": lambda p: (lambda t: p.get("rate", 1.0) * t),
    "power": lambda p: (lambda t: p.get("c", 1.0) * abs(t) ** p.get("q", 2.0)),
}


def _cmd_spectrum(args):
    spec = json.loads(args.potential)
    kind = spec.get("kind", "uniform")
    if kind not in _POTENTIALS_1D:
        raise SchemaViolation("/potential/kind", f"unknown potential {kind!r}")
    pot = _POTENTIALS_1D[kind](spec)
    lam, cp = engine.spectral_gap_1d(pot, (args.a, args.b), n=args.n)
    json.dump({"lambda_1": lam, "poincare_constant": cp}, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_transport(args):
    mu = measures.from_spec(json.loads(args.mu), 1).coord_densities[0]
    nu = measures.from_spec(json.loads(args.nu), 1).coord_densities[0]
    rows = []
    phi = transport.transport_potential_1d(mu, nu)
    vpot = mu.potential_field()
    wpot = nu.potential_field()
    for x in args.points:
        t, tp = transport.monotone_map_1d(mu, nu, x)
        res = transport.monge_ampere_residual(phi, vpot, wpot, [x])
        rows.append({"x": x, "T": t, "T_prime": tp, "monge_ampere_residual": res})
    json.dump(rows, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_manifest(args):
    json.dump(catalog.manifest(), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="riccikit",
        description="generalized Ricci tensors and inequality verification",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run inequality suites from a config")
    p.add_argument("--config", required=True,
                   help="path to a JSON config, or a bundled suite name")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("ricci", help="evaluate generalized Ricci tensors")
    p.add_argument("--family", required=True, help="metric family JSON")
    p.add_argument("--measure", default=None, help="measure spec JSON")
    p.add_argument("--point", nargs="+", type=float, required=True)
    p.set_defaults(func=_cmd_ricci)

    p = sub.add_parser("spectrum", help="1-D spectral gap oracle")
    p.add_argument("--potential", required=True, help="potential JSON")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--n", type=int, default=4096)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("transport", help="1-D monotone transport diagnostics")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--points", nargs="+", type=float, required=True)
    p.set_defaults(func=_cmd_transport)

    p = sub.add_parser("manifest", help="print the machine-readable catalog")
    p.set_defaults(func=_cmd_manifest)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaViolation, UnknownInequalityId) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RicciKitError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
