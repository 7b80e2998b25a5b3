"""``mfpc`` command-line entry point.

Subcommands: ``solve``, ``sweep``, ``oracle-check``, ``decode-sim``.  Each
writes CSV tables (``#`` provenance lines, then one header row) and a JSON
summary into ``--out``.  Exit codes: 0 ok, 2 config error, 3 no
convergence, 4 oracle mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from mfpc import __version__
from mfpc import rng as _rng
from mfpc.channel import Population, sample_population
from mfpc.config import ConfigError, ExperimentConfig, load_config, parse_float_list, parse_int_list, validate
from mfpc.decoding import DecodingScenario, mpr_success_rates
from mfpc.game import Protocol, best_response, data_rate, utility
from mfpc.oracle import (
    NoGridEquilibriumError,
    TruncationBindsError,
    brute_force_best_response,
    cdma_closed_form,
    grid_cell,
    search_with_grid_retry,
)
from mfpc.solver import NonConvergenceError, SolverConfig, solve, verify_fixed_point
from mfpc.welfare import compare, equilibrium_rates, jains_index, social_welfare

log = logging.getLogger("mfpc")

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_ORACLE = 0, 2, 3, 4


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def _provenance(cfg: ExperimentConfig, seed) -> dict:
    return {"config_digest": cfg.digest(), "generator": f"mfpc {__version__}",
            "rng": _rng.rng_descriptor(), "seed": seed}


def write_table(path: Path, header: list[str], rows, cfg: ExperimentConfig, seed) -> None:
    buf = io.StringIO()
    for k, v in _provenance(cfg, seed).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def write_summary(path: Path, summary: dict, cfg: ExperimentConfig, seed) -> None:
    doc = {**_provenance(cfg, seed), "config": cfg.canonical(), **summary}
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def _threads() -> int:
    raw = os.environ.get("MFPC_THREADS", "")
    try:
        return max(1, int(raw)) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise ConfigError(f"MFPC_THREADS must be an integer, got {raw!r}") from None


def _population(cfg: ExperimentConfig, seed: int | None = None) -> Population:
    return sample_population(cfg.channel(), cfg.users, cfg.seed if seed is None else seed)


# -- solve -------------------------------------------------------------------

def cmd_solve(cfg: ExperimentConfig, protocol: Protocol, out: Path) -> int:
    pop = _population(cfg)
    params = cfg.protocol_params()
    result = solve(pop, params, protocol, cfg.solver_config())
    rates = equilibrium_rates(result, pop, params)
    utils = utility(result.profile, pop.thetas, result.interference, params)
    tag = protocol.value
    write_table(out / f"solve_{tag}.csv", ["theta", "power", "interference", "rate", "utility"],
                zip(pop.thetas, result.profile, result.interference, rates, utils), cfg, cfg.seed)
    summary = {
        "protocol": tag,
        "users": pop.n,
        "converged": result.converged,
        "iterations": result.iterations,
        "norm": result.norm.value,
        "residuals": result.residuals.tolist(),
        "fixed_point_deviation": verify_fixed_point(result, pop, params),
        "welfare": social_welfare(result, pop, params),
        "jain": jains_index(rates) if np.any(rates > 0) else None,
    }
    write_summary(out / f"solve_{tag}.json", summary, cfg, cfg.seed)
    if not result.converged:
        print(f"mfpc: {tag} did not converge in {cfg.max_iter} iterations "
              f"(residual {result.residuals[-1]:.3e})", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    print(f"{tag}: converged in {result.iterations} iterations; welfare {summary['welfare']:.6f}")
    return EXIT_OK


# -- sweep -------------------------------------------------------------------

SWEEP_HEADER = ["beta", "seed", "protocol", "welfare", "jain", "iterations", "converged",
                "crossing_count", "rate_crossing_count", "max_gap_violation", "welfare_gain"]


def _sweep_cell(cfg: ExperimentConfig, beta: float, seed: int) -> list[list]:
    pop = _population(cfg, seed)
    params = cfg.protocol_params(beta)
    scfg = cfg.solver_config()
    cdma = solve(pop, params, Protocol.CDMA, scfg, raise_on_nonconvergence=True)
    noma = solve(pop, params, Protocol.NOMA, scfg, raise_on_nonconvergence=True)
    rep = compare(cdma, noma, pop, params)
    common = [len(rep.crossing_thetas), len(rep.rate_crossing_thetas), rep.max_gap_violation, rep.welfare_gain]
    return [
        [beta, seed, "cdma", rep.welfare_cdma, rep.jain_cdma, cdma.iterations, cdma.converged, *common],
        [beta, seed, "noma", rep.welfare_noma, rep.jain_noma, noma.iterations, noma.converged, *common],
    ]


def cmd_sweep(cfg: ExperimentConfig, betas: list[float], seeds: list[int], out: Path) -> int:
    if not betas or not seeds:
        raise ConfigError("sweep needs at least one beta and one seed")
    cells = [(b, s) for b in betas for s in seeds]
    with ThreadPoolExecutor(max_workers=min(_threads(), len(cells))) as pool:
        blocks = list(pool.map(lambda c: _sweep_cell(cfg, *c), cells))
    rows = [r for block in blocks for r in block]

    aggregates = []
    for beta in betas:
        for tag in ("cdma", "noma"):
            sel = [r for r in rows if r[0] == beta and r[2] == tag]
            col = {h: [r[i] for r in sel] for i, h in enumerate(SWEEP_HEADER)}
            aggregates.append([
                beta, "mean", tag, float(np.mean(col["welfare"])), float(np.mean(col["jain"])),
                float(np.mean(col["iterations"])), all(col["converged"]),
                float(np.mean(col["crossing_count"])), float(np.mean(col["rate_crossing_count"])),
                float(np.max(col["max_gap_violation"])), float(np.mean(col["welfare_gain"])),
            ])
    write_table(out / "sweep.csv", SWEEP_HEADER, rows + aggregates, cfg, seeds)
    summary = {
        "betas": betas,
        "seeds": seeds,
        "aggregates": [dict(zip(SWEEP_HEADER, r)) for r in aggregates],
        "noma_dominates_every_row": all(r[-1] > 0 for r in rows),
    }
    write_summary(out / "sweep.json", summary, cfg, seeds)
    for r in aggregates:
        print(f"beta={r[0]:<6g} {r[2]}: welfare {r[3]:.5f}  jain {r[4]:.4f}")
    return EXIT_OK


# -- oracle-check -------------------------------------------------------------

def _faulty_response(theta, z, params, user_index=None):
    return np.clip(np.asarray(best_response(theta, z, params, user_index)) + 1.0, params.e_min, params.e_max)


def run_oracle_checks(cfg: ExperimentConfig, response=best_response, br_samples: int = 200,
                      br_grid: int = 100_001, tiny_grid: int = 61) -> list[dict]:
    """Closed form vs iteration, grid-searched best responses, tiny exhaustive equilibria."""
    params = cfg.protocol_params()
    pop = _population(cfg)
    checks = []

    try:
        closed = cdma_closed_form(pop, params)
    except TruncationBindsError as exc:
        checks.append({"name": "closed_form_cdma", "status": "skipped", "detail": f"TruncationBinds: {exc}"})
    else:
        res = solve(pop, params, Protocol.CDMA, SolverConfig(tol=1e-12, max_iter=cfg.max_iter), response=response)
        err = float(np.max(np.abs(res.profile - closed)))
        checks.append({"name": "closed_form_cdma", "status": "pass" if err <= 1e-8 else "fail",
                       "max_abs_error": err, "tolerance": 1e-8})

    gen = _rng.stream(cfg.seed, "oracle-best-response")
    thetas = gen.choice(pop.thetas, size=br_samples)
    zs = gen.uniform(0.0, params.e_max * float(np.mean(pop.thetas)), size=br_samples)
    cell = grid_cell(params, br_grid)
    worst = 0.0
    for th, z in zip(thetas, zs):
        analytic = float(response(th, z, params, None))
        worst = max(worst, abs(analytic - brute_force_best_response(th, z, params, br_grid)))
    checks.append({"name": "best_response_grid", "status": "pass" if worst <= cell else "fail",
                   "max_abs_error": worst, "tolerance": cell, "samples": br_samples})

    for n in (1, 2, 3):
        tiny_pop = Population.from_thetas(np.quantile(pop.thetas, np.linspace(0.5, 0.95, n)))
        for protocol in Protocol:
            name = f"tiny_exhaustive_{protocol.value}_n{n}"
            try:
                grid_eq, points = search_with_grid_retry(tiny_pop, params, protocol, tiny_grid)
            except NoGridEquilibriumError as exc:
                checks.append({"name": name, "status": "skipped", "detail": str(exc)})
                continue
            cell = grid_cell(params, points)
            res = solve(tiny_pop, params, protocol, SolverConfig(tol=1e-12), response=response)
            err = float(np.max(np.abs(grid_eq - res.profile)))
            checks.append({"name": name, "status": "pass" if err <= cell else "fail",
                           "max_abs_error": err, "tolerance": cell, "grid_points": points})
    return checks


def cmd_oracle_check(cfg: ExperimentConfig, out: Path, inject_fault: bool = False) -> int:
    checks = run_oracle_checks(cfg, response=_faulty_response if inject_fault else best_response)
    for c in checks:
        extra = f" (err {c['max_abs_error']:.3e} <= {c['tolerance']:.3e})" if "max_abs_error" in c else ""
        print(f"{c['status'].upper():7s} {c['name']}{extra}" + (f" - {c['detail']}" if "detail" in c else ""))
    failed = [c["name"] for c in checks if c["status"] == "fail"]
    write_summary(out / "oracle_check.json", {"checks": checks, "passed": not failed,
                                              "fault_injected": inject_fault}, cfg, cfg.seed)
    if failed:
        print(f"mfpc: oracle mismatch in {', '.join(failed)}", file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


# -- decode-sim -------------------------------------------------------------

def cmd_decode_sim(cfg: ExperimentConfig, protocol: Protocol, out: Path) -> int:
    pop = _population(cfg)
    params = cfg.protocol_params()
    result = solve(pop, params, protocol, cfg.solver_config(), raise_on_nonconvergence=True)
    scenario = DecodingScenario(
        rates=cfg.rate, profile=result.profile, pop=pop, params=params, sic_variant=cfg.variant,
        trials=cfg.trials, seed=cfg.seed, dist=cfg.channel() if cfg.fresh_gains else None,
        power_rule=cfg.power_rule)
    success = mpr_success_rates(scenario)
    rates = data_rate(result.profile, pop.thetas, result.interference, params)
    tag = f"decode_{protocol.value}_{scenario.sic_variant.value}"
    write_table(out / f"{tag}.csv", ["theta", "power", "equilibrium_rate", "target_rate", "success_rate"],
                zip(pop.thetas, result.profile, rates, scenario.rates, success), cfg, cfg.seed)
    write_summary(out / f"{tag}.json", {
        "protocol": protocol.value, "variant": scenario.sic_variant.value, "trials": cfg.trials,
        "power_rule": scenario.power_rule.value, "fresh_gains": cfg.fresh_gains,
        "mean_success_rate": float(np.mean(success)),
    }, cfg, cfg.seed)
    print(f"{tag}: mean success rate {np.mean(success):.4f} over {cfg.trials} trials")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfpc", description="Mean-field uplink power control under CDMA and NOMA.")
    parser.add_argument("--version", action="version", version=f"mfpc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, type=Path, help="experiment config file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--tol", type=float, help="override solver tolerance")
        p.add_argument("--max-iter", type=int, help="override iteration cap")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("solve", help="solve one equilibrium and write the per-user table")
    common(p)
    p.add_argument("--protocol", choices=[x.value for x in Protocol], default="cdma")
    p.add_argument("--beta", help="override the power price")

    p = sub.add_parser("sweep", help="compare protocols over beta values and seeds")
    common(p)
    p.add_argument("--beta", help="comma-separated beta values (default: config [sweep] betas)")
    p.add_argument("--seeds", help="seeds, e.g. '0-9' or '1,2,5' (default: config [sweep] seeds)")

    p = sub.add_parser("oracle-check", help="cross-check the solver against independent oracles")
    common(p)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("decode-sim", help="Monte-Carlo SIC decoding at the equilibrium")
    common(p)
    p.add_argument("--protocol", choices=[x.value for x in Protocol], default="noma")
    p.add_argument("--trials", type=int)
    p.add_argument("--variant", choices=["strict", "improved"])
    p.add_argument("--beta", help="override the power price")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        beta = getattr(args, "beta", None)
        overrides = {"tol": args.tol, "max_iter": args.max_iter,
                     "trials": getattr(args, "trials", None), "variant": getattr(args, "variant", None)}
        if args.command != "sweep" and beta is not None:
            overrides["beta"] = float(beta)
        cfg = cfg.with_overrides(**overrides)
        validate(cfg)
        args.out.mkdir(parents=True, exist_ok=True)

        if args.command == "solve":
            return cmd_solve(cfg, Protocol(args.protocol), args.out)
        if args.command == "sweep":
            betas = parse_float_list(beta) if beta else cfg.betas
            seeds = parse_int_list(args.seeds) if args.seeds else cfg.seeds
            return cmd_sweep(cfg, betas, seeds, args.out)
        if args.command == "oracle-check":
            return cmd_oracle_check(cfg, args.out, inject_fault=args.inject_fault)
        if args.command == "decode-sim":
            return cmd_decode_sim(cfg, Protocol(args.protocol), args.out)
    except (ConfigError, ValueError) as exc:
        print(f"mfpc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"mfpc: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
