"""Command line front end: scenario runs, convergence ladders and the
full verification battery.

    prehyp <subcommand> --config <path> [--out <dir>] [--seed <n>]

Subcommands: check-pair, solve, direct-vs-reduced, greens, adjoint-check,
beta, isometry, convergence <subcommand>, verify-all.  Every run writes a
deterministic report.json (plus CSV dumps when requested); wall-clock
timings go to a separate timings.json so reports stay byte-reproducible.

Exit codes: 0 all tolerances met, 1 configuration error, 2 tolerance
failure, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .bundle_ops import is_complementary_pair, symbol_invertibility
from .cauchy import (
    compatibility_round_trip,
    solve_cauchy,
    solve_first_order_direct,
)
from .config import ConfigError, ScenarioConfig, SourceSpec, WindowSpec, load_config
from .geometry import CauchyLine
from .greens import (
    adjoint_pairing_check,
    identity_i_residual,
    identity_ii_residual,
    identity_iii_leak,
    make_test_section,
)
from .qft_dirac import (
    DiracModel,
    beta_sigma,
    default_rep,
    dirac_current,
    hypersurface_independence,
)

SUBCOMMANDS = (
    "check-pair", "solve", "direct-vs-reduced", "greens", "adjoint-check",
    "beta", "isometry", "convergence", "verify-all",
)
CONVERGENCE_TARGETS = ("solve", "direct-vs-reduced", "greens", "adjoint-check", "beta")

# per-subcommand tolerances at the configured resolution; convergence
# orders are gated separately
TOLERANCES = {
    "pair_min_det_margin": -1e-10,
    "solve_leak": 1e-7,
    "direct_vs_reduced": 5e-3,
    "greens_identity": 2e-2,
    "greens_leak": 1e-7,
    "adjoint_defect": 1e-3,
    "adjoint_mismatch_min": 1e-1,
    "beta_hermitian": 1e-12,
    "beta_drift": 1e-3,
    "isometry_mismatch": 1e-3,
    "min_order": 1.8,
    "order_floor": 1e-10,
}

N_RANDOM_COVECTORS = 200

# documented report field lists; writers reject anything else
REPORT_FIELDS = {
    "top": {"subcommand", "seed", "scenario", "results", "passed", "failures"},
    "check-pair": {"pair_passed", "max_deviation", "tol", "n_covectors", "min_det_margin", "all_invertible"},
    "solve": {"residual_l2", "residual_linf", "trace_defect", "support_leak"},
    "direct-vs-reduced": {"mismatch", "reference_linf"},
    "greens": {"retarded", "advanced"},
    "adjoint-check": {"defect", "lhs", "rhs", "mismatch_control"},
    "beta": {"value", "positivity", "hermitian_defect", "hypersurface_drift", "levels"},
    "isometry": {"gram_mismatch", "min_gram_eigenvalue", "gram_sigma", "gram_sigma_prime"},
    "convergence": {"target", "ladder", "orders", "final_order"},
    "verify-all": set(),  # nested per-battery results, validated recursively
}


class ToleranceFailure(Exception):
    pass


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, float) and value != value:  # NaN never serializes
        return "nan"
    return value


# ---------------------------------------------------------------------------
# scenario plumbing

def _default_source(cfg: ScenarioConfig) -> SourceSpec:
    """Synthesize a source for driven runs when the config has no [source]
    block: the initial-data window in x, a narrow window around t0 in t."""
    span = cfg.t_range[1] - cfg.t_range[0]
    t_half = 0.05 * span
    return SourceSpec(
        list(cfg.initial_components),
        WindowSpec(cfg.window.center, cfg.window.halfwidth, cfg.window.steepness),
        WindowSpec(cfg.t0, t_half, 1.0 / t_half),
    )


def _mirrored(spec: SourceSpec) -> SourceSpec:
    return SourceSpec(
        list(spec.components),
        WindowSpec(-spec.x_window.center, spec.x_window.halfwidth, spec.x_window.steepness),
        WindowSpec(-spec.t_window.center, spec.t_window.halfwidth, spec.t_window.steepness),
    )


def _section_from_spec(grid, spec: SourceSpec):
    return make_test_section(
        grid,
        spec.components,
        (spec.x_window.center, spec.x_window.halfwidth, spec.x_window.steepness),
        (spec.t_window.center, spec.t_window.halfwidth, spec.t_window.steepness),
    )


def _require_dirac(cfg: ScenarioConfig, what: str) -> DiracModel:
    if cfg.preset not in ("dirac_massive", "dirac_massless"):
        raise ConfigError(f"{what} requires a dirac_massive or dirac_massless preset scenario")
    return DiracModel(mass=cfg.mass)


# ---------------------------------------------------------------------------
# subcommand bodies: each returns (results dict, failure strings)

def run_check_pair(cfg: ScenarioConfig, seed: int, nx: Optional[int] = None):
    metric = cfg.metric()
    p, q = cfg.operators()
    pair = is_complementary_pair(p, q, metric)
    rng = np.random.default_rng(seed)
    chart = metric.chart
    min_margin = np.inf
    all_inv = True
    count = 0
    while count < N_RANDOM_COVECTORS:
        t = rng.uniform(chart.t_min, chart.t_max)
        x = rng.uniform(chart.x_min, chart.x_max)
        xi = tuple(rng.uniform(-1.0, 1.0, size=2))
        g = metric.inverse_on_covector((t, x), xi)
        if abs(g) < 1e-3:  # skip near-null covectors
            continue
        count += 1
        rep = symbol_invertibility(p, (t, x), xi)
        all_inv &= rep.invertible
        # for rank 2 pairs det sigma_P(xi) = -g(xi, xi), so the margin
        # |det| - |g| should never go (numerically) negative; rank 1
        # symbols are linear in xi and only the invertibility flag applies
        margin = rep.abs_det - abs(g) if p.k == 2 else rep.abs_det
        min_margin = min(min_margin, margin)
    min_margin = float(min_margin)
    failures = []
    if not pair.passed:
        failures.append(f"pair deviation {pair.max_deviation:.3e} exceeds tol {pair.pq.tol:.3e}")
    if not all_inv:
        failures.append("singular principal symbol at a non-null covector")
    if p.k == 2 and min_margin < TOLERANCES["pair_min_det_margin"]:
        failures.append(f"determinant margin {min_margin:.3e} below {TOLERANCES['pair_min_det_margin']:.1e}")
    results = {
        "pair_passed": pair.passed,
        "max_deviation": pair.max_deviation,
        "tol": pair.pq.tol,
        "n_covectors": N_RANDOM_COVECTORS,
        "min_det_margin": min_margin,
        "all_invertible": all_inv,
    }
    return results, failures


def run_solve(cfg: ScenarioConfig, seed: int, nx: Optional[int] = None):
    metric = cfg.metric()
    grid = cfg.grid(metric, nx)
    p, q = cfg.operators()
    data = cfg.initial_data(grid)
    phi, rep = solve_cauchy(p, q, metric, data, grid)
    failures = []
    if rep.support_leak > TOLERANCES["solve_leak"]:
        failures.append(f"support leak {rep.support_leak:.3e} exceeds {TOLERANCES['solve_leak']:.1e}")
    results = {
        "residual_l2": rep.residual_l2,
        "residual_linf": rep.residual_linf,
        "trace_defect": rep.trace_defect,
        "support_leak": rep.support_leak,
    }
    return results, failures, phi


def run_direct_vs_reduced(cfg: ScenarioConfig, seed: int, nx: Optional[int] = None):
    metric = cfg.metric()
    grid = cfg.grid(metric, nx)
    p, q = cfg.operators()
    data = cfg.initial_data(grid)
    reduced, _ = solve_cauchy(p, q, metric, data, grid)
    direct = solve_first_order_direct(p, metric, data, grid)
    ref = float(np.max(np.abs(direct.values)))
    mismatch = float(np.max(np.abs(reduced.values - direct.values))) / ref
    failures = []
    if mismatch > TOLERANCES["direct_vs_reduced"]:
        failures.append(f"reduced-vs-direct mismatch {mismatch:.3e} exceeds {TOLERANCES['direct_vs_reduced']:.1e}")
    return {"mismatch": mismatch, "reference_linf": ref}, failures


def run_greens(cfg: ScenarioConfig, seed: int, nx: Optional[int] = None):
    metric = cfg.metric()
    grid = cfg.grid(metric, nx)
    p, q = cfg.operators()
    spec = cfg.source or _default_source(cfg)
    phi = _section_from_spec(grid, spec)
    results = {}
    failures = []
    for direction in ("retarded", "advanced"):
        i1 = identity_i_residual(p, q, metric, phi, direction, grid)
        i2 = identity_ii_residual(p, q, metric, phi, direction, grid)
        leak = identity_iii_leak(p, q, metric, phi, direction, grid)
        results[direction] = {"identity_i": i1, "identity_ii": i2, "support_leak": leak}
        for name, val, tol in (
            ("identity_i", i1, TOLERANCES["greens_identity"]),
            ("identity_ii", i2, TOLERANCES["greens_identity"]),
            ("support_leak", leak, TOLERANCES["greens_leak"]),
        ):
            if val > tol:
                failures.append(f"{direction} {name} {val:.3e} exceeds {tol:.1e}")
    return results, failures


def run_adjoint_check(cfg: ScenarioConfig, seed: int, nx: Optional[int] = None):
    metric = cfg.metric()
    grid = cfg.grid(metric, nx)
    p, q = cfg.operators()
    spec = cfg.source or _default_source(cfg)
    dual_spec = cfg.dual_source or _mirrored(spec)
    f = _section_from_spec(grid, spec)
    psi = _section_from_spec(grid, dual_spec)
    defect, lhs, rhs = adjoint_pairing_check(p, q, metric, psi, f, grid)
    control, _, _ = adjoint_pairing_check(p, q, metric, psi, f, grid, mismatch_directions=True)
    failures = []
    if defect > TOLERANCES["adjoint_defect"]:
        failures.append(f"pairing defect {defect:.3e} exceeds {TOLERANCES['adjoint_defect']:.1e}")
    if control < TOLERANCES["adjoint_mismatch_min"]:
        failures.append(f"mismatched-direction control {control:.3e} below {TOLERANCES['adjoint_mismatch_min']:.1e}")
    results = {"defect": defect, "lhs": lhs, "rhs": rhs, "mismatch_control": control}
    return results, failures


def run_beta(cfg: ScenarioConfig, seed: int, nx: Optional[int] = None):
    model = _require_dirac(cfg, "beta")
    metric = cfg.metric()
    grid = cfg.grid(metric, nx)
    p, q = cfg.operators()
    data = cfg.initial_data(grid)
    phi, _ = solve_cauchy(p, q, metric, data, grid)
    # an independent second solution for the symmetry check
    from .grids import make_cauchy_data
    swapped = make_cauchy_data(
        grid, list(reversed([f"({c})*(1+x)" for c in cfg.initial_components])),
        cfg.t0, cfg.window.center, cfg.window.halfwidth, cfg.window.steepness,
    )
    psi, _ = solve_cauchy(p, q, metric, swapped, grid, check_pair=False)
    rep = model.rep
    levels = [float(grid.ts[int(round(f * (grid.nt - 1)))]) for f in (0.2, 0.35, 0.5, 0.65, 0.8)]
    herm_rep = hypersurface_independence(psi, phi, levels, metric, rep)
    b_pf = beta_sigma(psi, phi, CauchyLine(cfg.t0), metric, rep)
    b_fp = beta_sigma(phi, psi, CauchyLine(cfg.t0), metric, rep)
    herm_defect = abs(b_pf - np.conj(b_fp))
    scale = max(abs(b_pf), 1.0)
    herm_defect = float(herm_defect / scale)
    failures = []
    if herm_rep.positivity_margin <= 0:
        failures.append(f"beta(phi, phi) = {herm_rep.positivity_margin:.3e} not positive")
    if herm_defect > TOLERANCES["beta_hermitian"]:
        failures.append(f"Hermitian defect {herm_defect:.3e} exceeds {TOLERANCES['beta_hermitian']:.1e}")
    if herm_rep.hypersurface_drift > TOLERANCES["beta_drift"]:
        failures.append(f"hypersurface drift {herm_rep.hypersurface_drift:.3e} exceeds {TOLERANCES['beta_drift']:.1e}")
    results = {
        "value": b_pf,
        "positivity": herm_rep.positivity_margin,
        "hermitian_defect": herm_defect,
        "hypersurface_drift": herm_rep.hypersurface_drift,
        "levels": levels,
    }
    return results, failures, (phi, model, grid, metric)


def run_isometry(cfg: ScenarioConfig, seed: int, nx: Optional[int] = None):
    model = _require_dirac(cfg, "isometry")
    metric = cfg.metric()
    grid = cfg.grid(metric, nx)
    from .grids import make_cauchy_data
    from .qft_dirac import data_space_isometry_check
    mods = ("1", "x", "cos(3*x)")
    corpus = [
        make_cauchy_data(
            grid, [f"({c})*({m})" for c in cfg.initial_components],
            cfg.t0, cfg.window.center, cfg.window.halfwidth, cfg.window.steepness,
        )
        for m in mods
    ]
    t_prime = cfg.t0 + 0.5 * (cfg.t_range[1] - cfg.t0)
    rep = data_space_isometry_check(
        corpus, CauchyLine(cfg.t0), CauchyLine(t_prime), metric, model, grid
    )
    failures = []
    if rep.gram_mismatch > TOLERANCES["isometry_mismatch"]:
        failures.append(f"Gram mismatch {rep.gram_mismatch:.3e} exceeds {TOLERANCES['isometry_mismatch']:.1e}")
    if rep.min_gram_eigenvalue <= 0:
        failures.append(f"Gram matrix not positive definite (min eig {rep.min_gram_eigenvalue:.3e})")
    results = {
        "gram_mismatch": rep.gram_mismatch,
        "min_gram_eigenvalue": rep.min_gram_eigenvalue,
        "gram_sigma": rep.gram_sigma,
        "gram_sigma_prime": rep.gram_sigma_prime,
    }
    return results, failures


# ---------------------------------------------------------------------------
# convergence ladders

def _ladder_error(target: str, cfg: ScenarioConfig, seed: int, nx: int) -> float:
    if target == "solve":
        results, _, _ = run_solve(cfg, seed, nx)
        return results["residual_l2"]
    if target == "direct-vs-reduced":
        results, _ = run_direct_vs_reduced(cfg, seed, nx)
        return results["mismatch"]
    if target == "greens":
        results, _ = run_greens(cfg, seed, nx)
        return results["retarded"]["identity_i"]
    if target == "adjoint-check":
        results, _ = run_adjoint_check(cfg, seed, nx)
        return results["defect"]
    if target == "beta":
        results, _, _ = run_beta(cfg, seed, nx)
        return results["hypersurface_drift"]
    raise ConfigError(f"convergence target must be one of {', '.join(CONVERGENCE_TARGETS)}")


def run_convergence(cfg: ScenarioConfig, seed: int, target: str):
    if target not in CONVERGENCE_TARGETS:
        raise ConfigError(f"convergence target must be one of {', '.join(CONVERGENCE_TARGETS)}")
    if cfg.nx < 64:
        raise ConfigError("convergence ladder needs grid.nx >= 64")
    nxs = [cfg.nx // 4, cfg.nx // 2, cfg.nx]
    with ThreadPoolExecutor(max_workers=3) as pool:
        errors = list(pool.map(lambda n: _ladder_error(target, cfg, seed, n), nxs))
    orders = []
    for coarse, fine in zip(errors, errors[1:]):
        if fine <= 0:
            orders.append(float("inf"))
        else:
            orders.append(float(np.log2(coarse / fine)))
    final = orders[-1]
    at_floor = errors[-1] <= TOLERANCES["order_floor"]
    failures = []
    if final < TOLERANCES["min_order"] and not at_floor:
        failures.append(
            f"observed order {final:.2f} below {TOLERANCES['min_order']} "
            f"(errors {', '.join(f'{e:.3e}' for e in errors)})"
        )
    ladder = [
        {"nx": n, "error": e, "order": (None if i == 0 else orders[i - 1])}
        for i, (n, e) in enumerate(zip(nxs, errors))
    ]
    results = {"target": target, "ladder": ladder, "orders": orders, "final_order": final}
    return results, failures


# ---------------------------------------------------------------------------
# orchestration

def run(subcommand: str, cfg: ScenarioConfig, seed: int = 0, target: Optional[str] = None):
    """Execute a subcommand; returns (report dict, timings dict, artifacts).

    The report is fully deterministic for a fixed config and seed; all
    wall-clock measurements live in the timings dict.
    """
    timings: Dict[str, float] = {}
    artifacts: Dict[str, object] = {}

    def timed(name: str, fn: Callable):
        start = time.perf_counter()
        out = fn()
        timings[name] = time.perf_counter() - start
        return out

    failures: List[str] = []
    if subcommand == "check-pair":
        results, failures = timed("check-pair", lambda: run_check_pair(cfg, seed))
    elif subcommand == "solve":
        results, failures, phi = timed("solve", lambda: run_solve(cfg, seed))
        artifacts["solution"] = phi
    elif subcommand == "direct-vs-reduced":
        results, failures = timed("direct-vs-reduced", lambda: run_direct_vs_reduced(cfg, seed))
    elif subcommand == "greens":
        results, failures = timed("greens", lambda: run_greens(cfg, seed))
    elif subcommand == "adjoint-check":
        results, failures = timed("adjoint-check", lambda: run_adjoint_check(cfg, seed))
    elif subcommand == "beta":
        results, failures, extra = timed("beta", lambda: run_beta(cfg, seed))
        artifacts["beta"] = extra
    elif subcommand == "isometry":
        results, failures = timed("isometry", lambda: run_isometry(cfg, seed))
    elif subcommand == "convergence":
        if target is None:
            raise ConfigError("convergence needs a target subcommand")
        results, failures = timed(f"convergence-{target}", lambda: run_convergence(cfg, seed, target))
        artifacts["ladder"] = results["ladder"]
    elif subcommand == "verify-all":
        results, failures = _run_verify_all(cfg, seed, timings)
    else:
        raise ConfigError(f"unknown subcommand {subcommand!r}")

    report = {
        "subcommand": subcommand if target is None else f"{subcommand} {target}",
        "seed": seed,
        "scenario": _jsonable(cfg.echo()),
        "results": _jsonable(results),
        "passed": not failures,
        "failures": list(failures),
    }
    _validate_report(report, subcommand)
    return report, timings, artifacts


def _run_verify_all(cfg: ScenarioConfig, seed: int, timings: Dict[str, float]):
    batteries: List[Tuple[str, Callable]] = [
        ("check-pair", lambda: run_check_pair(cfg, seed)[:2]),
        ("solve", lambda: run_solve(cfg, seed)[:2]),
        ("direct-vs-reduced", lambda: run_direct_vs_reduced(cfg, seed)),
        ("greens", lambda: run_greens(cfg, seed)),
        ("adjoint-check", lambda: run_adjoint_check(cfg, seed)),
        ("convergence solve", lambda: run_convergence(cfg, seed, "solve")),
    ]
    if cfg.preset in ("dirac_massive", "dirac_massless"):
        batteries.append(("beta", lambda: run_beta(cfg, seed)[:2]))
        batteries.append(("isometry", lambda: run_isometry(cfg, seed)))

    def timed_battery(item):
        name, fn = item
        start = time.perf_counter()
        out = fn()
        return name, out, time.perf_counter() - start

    # independent batteries run concurrently; assembly below is ordered
    with ThreadPoolExecutor(max_workers=4) as pool:
        outcomes = list(pool.map(timed_battery, batteries))
    results = {}
    failures: List[str] = []
    for name, (res, fails), elapsed in outcomes:
        results[name] = res
        failures.extend(f"{name}: {f}" for f in fails)
        timings[name] = elapsed
    return results, failures


def _validate_report(report: Dict, subcommand: str) -> None:
    unknown = set(report) - REPORT_FIELDS["top"]
    if unknown:
        raise AssertionError(f"undocumented report fields: {sorted(unknown)}")
    allowed = REPORT_FIELDS.get(subcommand)
    if allowed:
        extra = set(report["results"]) - allowed
        if extra:
            raise AssertionError(f"undocumented result fields for {subcommand}: {sorted(extra)}")


# ---------------------------------------------------------------------------
# output files

def write_report(report: Dict, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        fh.write(json.dumps(report, sort_keys=True, indent=2))
        fh.write("\n")
    return path


def write_timings(timings: Dict[str, float], out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "timings.json")
    with open(path, "w") as fh:
        fh.write(json.dumps({k: round(v, 6) for k, v in sorted(timings.items())}, indent=2))
        fh.write("\n")
    return path


def write_csv_dumps(subcommand: str, artifacts: Dict, out_dir: str) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "solution" in artifacts:
        phi = artifacts["solution"]
        grid = phi.grid
        path = os.path.join(out_dir, "solution_final.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"] + [f"re_{c}" for c in range(phi.k)] + [f"im_{c}" for c in range(phi.k)])
            final = phi.values[-1]
            for i, x in enumerate(grid.xs):
                w.writerow([repr(float(x))] + [repr(float(v.real)) for v in final[i]] + [repr(float(v.imag)) for v in final[i]])
        written.append(path)
    if "ladder" in artifacts:
        path = os.path.join(out_dir, "convergence.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["nx", "error", "order"])
            for row in artifacts["ladder"]:
                w.writerow([row["nx"], repr(row["error"]), "" if row["order"] is None else repr(row["order"])])
        written.append(path)
    if "beta" in artifacts:
        phi, model, grid, metric = artifacts["beta"]
        j = grid.nt // 2
        density = dirac_current(phi.values[j], phi.values[j], model.rep, "t")
        path = os.path.join(out_dir, "current_density.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "j_t"])
            for x, d in zip(grid.xs, density):
                w.writerow([repr(float(x)), repr(float(d.real))])
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# entry point

def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="prehyp",
        description="verification runs for first-order hyperbolic operator pairs",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("target", nargs="?", default=None,
                        help="ladder target for the convergence subcommand")
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1

    if args.subcommand == "convergence" and args.target is None:
        print("config error: convergence needs a target subcommand", file=sys.stderr)
        return 1
    if args.subcommand != "convergence" and args.target is not None:
        print(f"config error: unexpected argument {args.target!r}", file=sys.stderr)
        return 1

    out_dir = args.out or cfg.output_directory
    try:
        report, timings, artifacts = run(args.subcommand, cfg, args.seed, args.target)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # anything unexpected is an internal error
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3

    try:
        if "json" in cfg.output_formats:
            path = write_report(report, out_dir)
            write_timings(timings, out_dir)
            print(path)
        if "csv" in cfg.output_formats:
            for path in write_csv_dumps(args.subcommand, artifacts, out_dir):
                print(path)
    except Exception as e:
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    status = "pass" if report["passed"] else "FAIL"
    print(f"{report['subcommand']}: {status}")
    for f in report["failures"]:
        print(f"  {f}")
    return 0 if report["passed"] else 2


if __name__ == "__main__":
    sys.exit(main())
