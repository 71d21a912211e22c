"""Command-line front end.

Subcommands: solve a single instance, sweep a distortion grid to CSV,
synthesize and structurally verify a channel realization, run Monte-Carlo
validation, and emit the canonical variable form.  Sources are JSON documents
{"p1": int, "p2": int, "Q": [[...]]} with Q row-major.

Exit codes: 0 success, 2 invalid input, 3 infeasible (zero budget against
positive variance), 4 structural check failure, 5 statistical check failure,
1 internal failure (e.g. a sweep point whose solve misbehaves).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import sys
from dataclasses import replace

import numpy as np

from . import canonical as canon
from . import realization as real
from . import sim
from .model import (
    DistortionPair,
    GaussianPairSource,
    NotPositiveDefiniteError,
    SourceValidationError,
    load_source,
    validate_source,
)
from .solver import DEFAULT_CONFIG, SolveBranch, SolveReport, SolverConfig, solve

LN2 = math.log(2.0)

# Below this many samples the three-sigma distortion allowance exceeds 50%,
# so the statistical checks carry no information and are skipped.
def _min_samples(src: GaussianPairSource) -> int:
    return 72 * max(src.p1, src.p2)


def _unit_scale(unit: str) -> float:
    return 1.0 / LN2 if unit == "bits" else 1.0


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _config_from_args(args: argparse.Namespace) -> SolverConfig:
    cfg = DEFAULT_CONFIG
    overrides = {}
    if getattr(args, "tol_gap", None) is not None:
        overrides["gap_tol"] = args.tol_gap
    if getattr(args, "tol_region", None) is not None:
        overrides["region_tol"] = args.tol_region
    if getattr(args, "tol_psd", None) is not None:
        overrides["psd_rtol"] = args.tol_psd
    return replace(cfg, **overrides) if overrides else cfg


def _kkt_dict(report: SolveReport) -> dict | None:
    cert = report.certificate
    if cert is None:
        return None
    return {
        "lambda1": cert.lambda1,
        "lambda2": cert.lambda2,
        "theta": cert.theta.tolist(),
        "stationarity_residual": cert.stationarity_residual,
        "slackness_residuals": list(cert.slackness_residuals),
        "dual_feasible": cert.dual_feasible,
    }


def _solve_dict(report: SolveReport, d: DistortionPair, unit: str) -> dict:
    scale = _unit_scale(unit)
    return {
        "d1": d.d1,
        "d2": d.d2,
        "unit": unit,
        "rate": report.rate_nats * scale,
        "branch": report.branch.value,
        "in_region_d": report.in_region_d,
        "gray_bound": report.gray_bound_nats * scale,
        "sigma": report.sigma.sigma.tolist(),
        "kkt": _kkt_dict(report),
        "iterations": report.iterations,
        "wall_time_s": report.wall_time,
    }


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def _cmd_solve(src: GaussianPairSource, args: argparse.Namespace) -> int:
    d = DistortionPair(args.d1, args.d2)
    report = solve(src, d, _config_from_args(args))
    if report.branch is SolveBranch.INFEASIBLE:
        print(
            "infeasible: rate is infinite (zero distortion budget against "
            "positive source variance)",
            file=sys.stderr,
        )
        return 3
    if args.output == "csv":
        scale = _unit_scale(args.unit)
        lines = ["d1,d2,rate,branch,gray_bound,in_region_d"]
        lines.append(
            f"{_fmt(d.d1)},{_fmt(d.d2)},{_fmt(report.rate_nats * scale)},"
            f"{report.branch.value},{_fmt(report.gray_bound_nats * scale)},"
            f"{str(report.in_region_d).lower()}"
        )
        _emit("\n".join(lines), args.out)
    else:
        _emit(json.dumps(_solve_dict(report, d, args.unit), indent=2), args.out)
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _parse_grid(text: str) -> tuple[np.ndarray, np.ndarray]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"grid must look like 'a:b:k,c:d:m', got {text!r}")
    axes = []
    for part in parts:
        fields = part.split(":")
        if len(fields) != 3:
            raise ValueError(f"grid axis must be 'min:max:steps', got {part!r}")
        lo, hi = float(fields[0]), float(fields[1])
        steps = int(fields[2])
        if not (lo > 0.0 and hi >= lo and steps >= 1):
            raise ValueError(
                f"grid bounds must be positive and increasing with steps >= 1, got {part!r}"
            )
        axes.append(np.linspace(lo, hi, steps))
    return axes[0], axes[1]


def _sweep_point(payload: tuple) -> tuple[float, float, float, str, float, bool]:
    q, p1, p2, d1, d2, cfg = payload
    src = validate_source(np.asarray(q), p1, p2)
    report = solve(src, DistortionPair(d1, d2), cfg)
    return (d1, d2, report.rate_nats, report.branch.value, report.gray_bound_nats,
            report.in_region_d)


def _check_sweep_monotone(
    d1_axis: np.ndarray, d2_axis: np.ndarray, rates: np.ndarray, tol: float = 1e-8
) -> None:
    inc_d1 = np.diff(rates, axis=0)
    inc_d2 = np.diff(rates, axis=1)
    if (inc_d1 > tol).any() or (inc_d2 > tol).any():
        bad = np.argwhere(inc_d1 > tol)
        i, j = (int(bad[0][0]) + 1, int(bad[0][1])) if bad.size else (0, 0)
        if not bad.size:
            bad = np.argwhere(inc_d2 > tol)
            i, j = int(bad[0][0]), int(bad[0][1]) + 1
        raise RuntimeError(
            f"sweep rates are not non-increasing near (d1={d1_axis[i]:.6g}, "
            f"d2={d2_axis[j]:.6g})"
        )


def _cmd_sweep(src: GaussianPairSource, args: argparse.Namespace) -> int:
    try:
        d1_axis, d2_axis = _parse_grid(args.grid)
    except ValueError as exc:
        print(f"invalid grid: {exc}", file=sys.stderr)
        return 2
    cfg = _config_from_args(args)
    points = [(float(a), float(b)) for a in d1_axis for b in d2_axis]
    payloads = [(src.q.tolist(), src.p1, src.p2, a, b, cfg) for a, b in points]
    rows: list[tuple] = []
    try:
        if args.jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
                for row in pool.map(_sweep_point, payloads):
                    rows.append(row)
        else:
            for payload in payloads:
                rows.append(_sweep_point(payload))
    except Exception as exc:  # results arrive in order, so len(rows) names the point
        at = points[min(len(rows), len(points) - 1)]
        print(f"sweep failed at grid point (d1={at[0]:.6g}, d2={at[1]:.6g}): {exc}",
              file=sys.stderr)
        return 1

    rates = np.array([row[2] for row in rows]).reshape(len(d1_axis), len(d2_axis))
    try:
        _check_sweep_monotone(d1_axis, d2_axis, rates)
    except RuntimeError as exc:
        print(str(exc), file=sys.stderr)
        return 1

    scale = _unit_scale(args.unit)
    if args.output == "json":
        obj = [
            {
                "d1": r[0], "d2": r[1], "rate": r[2] * scale, "branch": r[3],
                "gray_bound": r[4] * scale, "in_region_d": r[5],
            }
            for r in rows
        ]
        _emit(json.dumps(obj, indent=2), args.out)
    else:
        lines = ["d1,d2,rate,branch,gray_bound,in_region_d"]
        for r in rows:
            lines.append(
                f"{_fmt(r[0])},{_fmt(r[1])},{_fmt(r[2] * scale)},{r[3]},"
                f"{_fmt(r[4] * scale)},{str(r[5]).lower()}"
            )
        _emit("\n".join(lines), args.out)
    return 0


# ---------------------------------------------------------------------------
# realize
# ---------------------------------------------------------------------------


def _cmd_realize(src: GaussianPairSource, args: argparse.Namespace) -> int:
    d = DistortionPair(args.d1, args.d2)
    report = solve(src, d, _config_from_args(args))
    if report.branch is SolveBranch.INFEASIBLE:
        print("infeasible: rate is infinite", file=sys.stderr)
        return 3
    sigma = report.sigma.sigma
    if args.debug_tamper_sigma is not None:
        sigma = (1.0 - args.debug_tamper_sigma) * sigma
    tol = args.tol_check
    try:
        r = real.realize(src, sigma)
    except (real.FeasibilityError, NotPositiveDefiniteError) as exc:
        print(f"structural failure: realization rejected: {exc}", file=sys.stderr)
        return 4
    c1 = real.verify_condition1(r, tol=tol)
    m = real.conditional_mean_map(r)
    target = real.conditional_mean_target(r, tol=tol)
    cm_dev = float(np.linalg.norm(m - target, "fro"))
    rep_err = float(
        np.linalg.norm(real.implied_error_covariance(r) - report.sigma.sigma, "fro")
    )
    passed = c1.passed and cm_dev <= tol and rep_err <= tol
    obj = {
        "H": r.h.tolist(),
        "Qv": r.qv.tolist(),
        "checks": {
            "condition1_deviation": c1.deviation,
            "condition1_rank": c1.rank,
            "full_rank": c1.full_rank,
            "cm_map_deviation": cm_dev,
            "reproduction_error": rep_err,
            "tolerance": tol,
            "passed": passed,
        },
        "solve": _solve_dict(report, d, args.unit),
    }
    _emit(json.dumps(obj, indent=2), args.out)
    if not passed:
        print("structural failure: realization checks exceeded tolerance", file=sys.stderr)
        return 4
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _cmd_verify(src: GaussianPairSource, args: argparse.Namespace) -> int:
    d = DistortionPair(args.d1, args.d2)
    report = solve(src, d, _config_from_args(args))
    if report.branch is SolveBranch.INFEASIBLE:
        print("infeasible: rate is infinite", file=sys.stderr)
        return 3
    n_min = _min_samples(src)
    if args.samples < n_min:
        obj = {
            "samples": args.samples,
            "seed": args.seed,
            "generator": sim.GENERATOR,
            "warning": "insufficient samples",
            "minimum_samples": n_min,
            "checks_skipped": True,
        }
        _emit(json.dumps(obj, indent=2), args.out)
        return 0
    seeds = np.random.SeedSequence(args.seed).generate_state(3, np.uint64)
    r = real.realize(src, report.sigma)
    batch = sim.sample_source(src, args.samples, int(seeds[0]))
    batch = sim.push_channel(batch, r, int(seeds[1]))
    dist = sim.check_distortion(batch, d)
    eye = np.eye(src.n)
    alt_rng = np.random.Generator(np.random.Philox(int(seeds[2])))
    alternatives = [0.9 * eye, 1.1 * eye, alt_rng.standard_normal((src.n, src.n))]
    cm = sim.check_cm_optimality(batch, r, alternatives)
    passed = dist.passed and cm.passed
    obj = {
        "samples": args.samples,
        "seed": args.seed,
        "generator": sim.GENERATOR,
        "distortion": {
            "empirical_d1": dist.empirical_d1,
            "empirical_d2": dist.empirical_d2,
            "bound_d1": dist.bound_d1,
            "bound_d2": dist.bound_d2,
            "passed": dist.passed,
        },
        "cm_optimality": {
            "base_mse": list(cm.base_mse),
            "margins": [
                {"margin": list(mm), "slack": list(ss)} for mm, ss in cm.margins
            ],
            "passed": cm.passed,
        },
        "passed": passed,
        "solve": _solve_dict(report, d, args.unit),
    }
    _emit(json.dumps(obj, indent=2), args.out)
    if not passed:
        print("statistical check failed", file=sys.stderr)
        return 5
    return 0


# ---------------------------------------------------------------------------
# canonical
# ---------------------------------------------------------------------------


def _cmd_canonical(src: GaussianPairSource, args: argparse.Namespace) -> int:
    try:
        form = canon.to_canonical_form(src)
    except NotPositiveDefiniteError as exc:
        print(f"invalid source for canonical form: {exc}", file=sys.stderr)
        return 2
    obj = {
        "p1": form.p1,
        "p2": form.p2,
        "S1": form.s1.tolist(),
        "S2": form.s2.tolist(),
        "d1_vals": form.d1_vals.tolist(),
        "d2_vals": form.d2_vals.tolist(),
        "d4_vals": form.d4_vals.tolist(),
        "partition": {
            "p11": form.partition.p11, "p12": form.partition.p12,
            "p13": form.partition.p13, "p21": form.partition.p21,
            "p22": form.partition.p22, "p23": form.partition.p23,
        },
        "det_identity_residual": canon.det_identity_residual(src, form),
    }
    _emit(json.dumps(obj, indent=2), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("source", help="path to source JSON {p1, p2, Q}")
    sp.add_argument("--unit", choices=("nats", "bits"), default="nats")
    sp.add_argument("-o", "--out", default=None, help="write output to file instead of stdout")
    sp.add_argument("--tol-gap", type=float, default=None,
                    help="barrier duality-gap tolerance (default 1e-9)")
    sp.add_argument("--tol-region", type=float, default=None,
                    help="strict-positivity margin of the closed-form region test (default 1e-9)")
    sp.add_argument("--tol-psd", type=float, default=None,
                    help="relative PSD tolerance for feasibility checks (default 1e-10)")


def _add_distortions(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--d1", type=float, required=True, help="distortion budget of block 1")
    sp.add_argument("--d2", type=float, required=True, help="distortion budget of block 2")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jointrdf",
        description="Joint rate-distortion analysis of a correlated Gaussian source pair",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="compute the rate and optimal error covariance")
    _add_common(sp)
    _add_distortions(sp)
    sp.add_argument("--output", choices=("json", "csv"), default="json")
    sp.set_defaults(handler=_cmd_solve)

    sp = sub.add_parser("sweep", help="solve a distortion grid and emit surface data")
    _add_common(sp)
    sp.add_argument("--grid", required=True,
                    help="grid axes d1_min:d1_max:steps,d2_min:d2_max:steps")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes for grid points")
    sp.add_argument("--output", choices=("json", "csv"), default="csv")
    sp.set_defaults(handler=_cmd_sweep)

    sp = sub.add_parser("realize", help="synthesize and structurally verify a channel")
    _add_common(sp)
    _add_distortions(sp)
    sp.add_argument("--tol-check", type=float, default=real.CHECK_TOL,
                    help="structural check tolerance (default 1e-8)")
    sp.add_argument("--debug-tamper-sigma", type=float, default=None,
                    help=argparse.SUPPRESS)
    sp.set_defaults(handler=_cmd_realize)

    sp = sub.add_parser("verify", help="Monte-Carlo validation of a solved instance")
    _add_common(sp)
    _add_distortions(sp)
    sp.add_argument("--samples", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.set_defaults(handler=_cmd_verify)

    sp = sub.add_parser("canonical", help="emit the canonical variable form")
    _add_common(sp)
    sp.set_defaults(handler=_cmd_canonical)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        src = load_source(args.source)
    except (OSError, SourceValidationError) as exc:
        print(f"invalid source: {exc}", file=sys.stderr)
        return 2
    try:
        return args.handler(src, args)
    except (SourceValidationError, NotPositiveDefiniteError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
