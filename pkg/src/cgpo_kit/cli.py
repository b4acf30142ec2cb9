"""Batch runner: ``cgpo-kit <subcommand> --config path.json [--out dir] [--seed n] [--max-dim n]``.

Every subcommand prints a JSON report on stdout (and writes it to ``--out``
together with any CSV series). Exit codes: 0 success, 2 negative verdict,
1 error; errors are reported on stderr as ``{"error": {"code", "message"}}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, config as cfg
from .channels import (
    CPTP_TOL,
    QuantumChannel,
    apply,
    dephasing_channel,
    gibbs_replacement_channel,
    identity_channel,
    is_covariant,
    is_covariant_sampled,
    is_cptp,
    is_gibbs_preserving,
    tensor_power_channel,
)
from .feasibility import DEFAULT_MAX_ITERS, DEFAULT_TOL, FeasibilityProblem, find_cgpo, find_gpo, minimal_epsilon, random_gp_channel
from .protocols.catalyst import build_catalyst
from .protocols.convert import CatalyticBudget, correlated_catalytic_convert, search_cgpo_map
from .protocols.phase import loglog_slope, variance_scaling
from .protocols.sublinear import expected_error, sublinear_study
from .protocols.pipeline import (
    EXACT_MAX_INPUT_DIM,
    PipelineParams,
    cgpo_pipeline,
    covariance_defect,
    error_budget_sweep,
)
from .qcore import (
    HERMITIAN_TOL,
    PSD_TOL,
    TRACE_TOL,
    DimensionBudgetError,
    matrix_from_dict,
    random_density_matrix,
    set_max_dim,
    tensor_power,
    trace_distance,
)
from .thermo import LORENZ_TOL, extended_free_energy, free_energy, gibbs_state, lorenz_curve, lorenz_margin
from .worked_example import reproduce_example

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2

BASE_TOLERANCES = {
    "hermitian": HERMITIAN_TOL,
    "psd": PSD_TOL,
    "trace": TRACE_TOL,
    "channel": CPTP_TOL,
    "lorenz": LORENZ_TOL,
    "solver": DEFAULT_TOL,
}


class Outcome:
    def __init__(self, result: dict, ok: bool = True, series: dict | None = None, tolerances: dict | None = None):
        self.result = result
        self.ok = ok
        self.series = series or {}
        self.tolerances = tolerances or {}


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([r.get(h) for h in header])
    return buf.getvalue()


# ---------------------------------------------------------------- commands


def cmd_free_energy(config: dict, seed: int) -> Outcome:
    H, beta = cfg.system_from(config)
    rho = cfg.state_from(config["state"], H.dim)
    result = {"free_energy": free_energy(rho, H, beta)}
    alphas = config.get("alphas", [])
    if alphas:
        p = np.real(np.diag(rho))
        if beta == 0:
            raise cfg.ConfigError("extended free energies need beta > 0")
        result["extended_free_energies"] = [
            {"alpha": a, "F_alpha": extended_free_energy(p, H, beta, cfg.alpha_from(a)),
             "endpoint": math.isinf(cfg.alpha_from(a))}
            for a in alphas
        ]
        result["note"] = "extended free energies use the diagonal of the state"
    return Outcome(result)


def _distribution(spec, dim):
    rho = cfg.state_from(spec, dim)
    return np.real(np.diag(rho))


def cmd_thermomajorize(config: dict, seed: int) -> Outcome:
    H, beta = cfg.system_from(config)
    tol = config.get("tol", LORENZ_TOL)
    p = _distribution(config["p"], H.dim)
    pp = _distribution(config["p_prime"], H.dim)
    q = gibbs_state(H, beta).diagonal().real
    margin = lorenz_margin(p, pp, q)
    verdict = margin >= -tol
    a, b = lorenz_curve(p, q), lorenz_curve(pp, q)
    series = {"lorenz_p.csv": a.to_csv(), "lorenz_p_prime.csv": b.to_csv()}
    result = {"thermomajorizes": verdict, "margin": margin, "lorenz_p": a.breakpoints, "lorenz_p_prime": b.breakpoints}
    return Outcome(result, verdict, series, {"lorenz": tol})


def _channel_from(spec: dict, H, beta, seed) -> QuantumChannel:
    kind = spec["kind"]
    if kind == "identity":
        return identity_channel(H)
    if kind == "gibbs_replacement":
        return gibbs_replacement_channel(H, beta)
    if kind == "dephasing":
        return dephasing_channel(H)
    if kind == "random_gp":
        return random_gp_channel(H, beta, seed, covariant=spec.get("covariant", False))
    if "choi" not in spec:
        raise cfg.ConfigError("channel of kind 'choi' needs a 'choi' matrix")
    return QuantumChannel(matrix_from_dict(spec["choi"]), H, H)


def cmd_check_channel(config: dict, seed: int) -> Outcome:
    H, beta = cfg.system_from(config)
    tol = config.get("tol", CPTP_TOL)
    ch = _channel_from(config["channel"], H, beta, seed)
    n = config.get("copies", 1)
    if n > 1:
        ch = tensor_power_channel(ch, n)
    checks = {
        "cptp": is_cptp(ch, tol).to_dict(),
        "gibbs_preserving": is_gibbs_preserving(ch, beta, tol).to_dict(),
        "covariant": is_covariant(ch, tol).to_dict(),
        "covariant_sampled": is_covariant_sampled(ch, tol).to_dict(),
    }
    ok = all(c["pass"] for c in checks.values())
    return Outcome({"checks": checks, "cgpo": ok, "copies": n}, ok, tolerances={"channel": tol})


def cmd_feasibility(config: dict, seed: int) -> Outcome:
    H, beta = cfg.system_from(config)
    problem = FeasibilityProblem(
        cfg.state_from(config["rho"], H.dim),
        cfg.state_from(config["target"], H.dim),
        H,
        beta,
        epsilon=config.get("epsilon", 0.0),
        require_covariance=config.get("covariant", False),
        max_iters=config.get("max_iters", DEFAULT_MAX_ITERS),
        tol=config.get("tol", DEFAULT_TOL),
        diagonal=config.get("diagonal", False),
    )
    solve = find_cgpo if problem.require_covariance else find_gpo
    out = solve(problem)
    result = {"problem": problem.to_dict(), "outcome": out.to_dict(include_channel=True)}
    if config.get("minimize", False):
        eps, best = minimal_epsilon(problem, steps=config.get("steps", 20))
        result["minimal_epsilon"] = {"epsilon": eps, "trace_error": best.trace_error}
    if out.oracle is not None and out.found and not out.oracle:
        # a witness contradicting the exact oracle would be a solver bug
        raise RuntimeError("solver witness contradicts the Blackwell oracle")
    return Outcome(result, out.found, tolerances={"solver": problem.tol})


def cmd_phase_est(config: dict, seed: int) -> Outcome:
    H, _ = cfg.system_from(config)
    rho = cfg.state_from(config["state"], H.dim)
    rows = variance_scaling(rho, H, config["copies"], config.get("shots", 10_000), seed,
                            config.get("bins_per_copy", 8))
    ms = [r["m"] for r in rows]
    result = {"rows": rows}
    if len(ms) >= 2:
        result["loglog_slope"] = loglog_slope(ms, [r["variance"] for r in rows])
        result["exact_loglog_slope"] = loglog_slope(ms, [r["exact_variance"] for r in rows])
    series = {"phase_est.csv": _csv(["m", "variance", "failure_prob"], rows)}
    return Outcome(result, True, series)


def _params_from(spec: dict) -> PipelineParams:
    extra = {k: spec[k] for k in ("L", "delta1", "epsilon") if k in spec}
    if all(k in spec for k in ("set_size", "nu", "b1", "b2")):
        return PipelineParams(spec["N"], spec["set_size"], spec["nu"], spec["b1"], spec["b2"],
                              delta=spec.get("delta"), **extra)
    if "delta" not in spec:
        raise cfg.ConfigError("params need either set_size/nu/b1/b2 or delta")
    return PipelineParams.from_fraction(spec["N"], spec["delta"], spec.get("set_size"), **extra)


def cmd_pipeline(config: dict, seed: int) -> Outcome:
    H, beta = cfg.system_from(config)
    ref = cfg.state_from(config["reference"], H.dim)
    params = _params_from(config["params"])
    share = config.get("share_estimator", False)
    lam = random_gp_channel(H.tensor_power(params.set_size), beta, seed)
    result = {"params": params.to_dict(), "share_estimator": share}
    ok = True
    if H.dim ** params.N <= EXACT_MAX_INPUT_DIM:
        ch = cgpo_pipeline(lam, params, H, ref, share_estimator=share)
        g_in = tensor_power(gibbs_state(H, beta), params.N)
        g_out = tensor_power(gibbs_state(H, beta), params.output_copies)
        checks = {
            "cptp": is_cptp(ch).to_dict(),
            "gibbs_preserving": is_gibbs_preserving(ch, beta).to_dict(),
            "covariant": is_covariant(ch).to_dict(),
        }
        cc = config.get("covariance_check", {})
        rng = np.random.default_rng(seed)
        ts = np.linspace(0, H.period, cc.get("grid", 64), endpoint=False)
        inputs = [random_density_matrix(ch.dim_in, rng) for _ in range(cc.get("inputs", 20))]
        result.update(
            mode="exact_mixture",
            checks=checks,
            gibbs_error=trace_distance(apply(ch, g_in), g_out),
            covariance_defect=covariance_defect(ch, ts, inputs),
        )
        ok = all(c["pass"] for c in checks.values())
    else:
        sample = cgpo_pipeline(lam, params, H, ref, mode="sample", seed=seed, share_estimator=share)
        result.update(mode="sample", t1=sample.t1, t2=sample.t2)
    series = {}
    sweep = config.get("sweep")
    if sweep is not None:
        if "target" not in config:
            raise cfg.ConfigError("an error-budget sweep needs a target state")
        target = cfg.state_from(config["target"], H.dim)
        rows = error_budget_sweep(ref, target, H, beta, params, sweep["L"], sweep["delta1"])
        result["error_budget"] = rows
        ok = ok and all(r.get("holds", False) for r in rows)
        cols = ["L", "delta1", "measured", "shift_in", "lambda_error", "shift_out", "bound", "holds"]
        series["pipeline.csv"] = _csv(cols, rows)
    return Outcome(result, ok, series)


def cmd_catalyst(config: dict, seed: int) -> Outcome:
    H, beta = cfg.system_from(config)
    rho = cfg.state_from(config["rho"], H.dim)
    rp = cfg.state_from(config["rho_prime"], H.dim)
    budget = CatalyticBudget(
        epsilon=config.get("epsilon", 0.01),
        max_copies=config.get("max_copies", config.get("copies", 2)),
        bisection_steps=config.get("bisection_steps", 10),
        max_iters=config.get("max_iters", DEFAULT_MAX_ITERS),
    )
    if config.get("mode", "compile") == "convert":
        rep = correlated_catalytic_convert(rho, rp, H, beta, budget)
        return Outcome({"mode": "convert", "budget": budget.to_dict(), **rep.to_dict()},
                       rep.status == "success")
    n = config.get("copies", 2)
    lam = search_cgpo_map(rho, rp, H, beta, n, budget)
    if lam is None:
        return Outcome({"mode": "compile", "copies": n, "status": "lambda_not_found"}, False)
    _, rep, _ = build_catalyst(lam, rho, rp)
    return Outcome({"mode": "compile", "copies": n, "catalyst": rep.to_dict()}, rep.exact)


def cmd_sublinear(config: dict, seed: int) -> Outcome:
    H, _ = cfg.system_from(config)
    rho = cfg.state_from(config["state"], H.dim)
    target = cfg.state_from(config.get("target", config["state"]), H.dim)
    L = config.get("L")
    rows = sublinear_study(rho, target, H, config["N"], config["M"], config.get("runs", 200), seed,
                           config.get("workers", 1), L)
    for r in rows:
        r["exact_error"] = expected_error(rho, r["N"], target, r["M"], H, L)
    series = {"sublinear.csv": _csv(["N", "M", "mean_error", "std_error", "exact_error", "runs"], rows)}
    return Outcome({"rows": rows}, True, series)


def cmd_reproduce_example(config: dict, seed: int) -> Outcome:
    grid = np.linspace(config.get("c_min", 0.994), config.get("c_max", 0.995), config.get("c_points", 101))
    rep = reproduce_example(grid, config.get("max_iters", DEFAULT_MAX_ITERS))
    d = rep.to_dict()
    series = {"xi_scan.csv": _csv(["c", "trace", "min_eigenvalue", "distance"], d["values"]["xi_scan"])}
    return Outcome(d, rep.passed, series)


COMMANDS = {
    "free-energy": cmd_free_energy,
    "thermomajorize": cmd_thermomajorize,
    "check-channel": cmd_check_channel,
    "feasibility": cmd_feasibility,
    "phase-est": cmd_phase_est,
    "pipeline": cmd_pipeline,
    "catalyst": cmd_catalyst,
    "sublinear": cmd_sublinear,
    "reproduce-example": cmd_reproduce_example,
}


# ------------------------------------------------------------------ runner


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def _error(code: str, message: str) -> int:
    print(json.dumps({"error": {"code": code, "message": message}}), file=sys.stderr)
    return EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgpo-kit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="directory for the JSON report and CSV series")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--max-dim", type=int, help="dimension budget (overrides CGPO_KIT_MAX_DIM)")
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which would read as a negative verdict
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        config = cfg.load(args.config, args.command)
    except OSError as exc:
        return _error("io_error", str(exc))
    except cfg.ConfigError as exc:
        return _error(exc.code, str(exc))
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    if args.max_dim is not None:
        if args.max_dim < 1:
            return _error("invalid_argument", "--max-dim must be positive")
        set_max_dim(args.max_dim)
    try:
        outcome = COMMANDS[args.command](config, seed)
    except DimensionBudgetError as exc:
        return _error(exc.code, str(exc))
    except cfg.ConfigError as exc:
        return _error(exc.code, str(exc))
    except ValueError as exc:
        code = "dimension_budget_exceeded" if "dimension budget" in str(exc) else "invalid_input"
        return _error(code, str(exc))
    except Exception as exc:  # noqa: BLE001 - every failure must map to an exit code
        return _error("internal_error", f"{type(exc).__name__}: {exc}")
    finally:
        if args.max_dim is not None:
            set_max_dim(None)

    report = {
        "command": args.command,
        "version": __version__,
        "config_hash": cfg.config_hash(config),
        "seed": seed,
        "tolerances": {**BASE_TOLERANCES, **outcome.tolerances},
        "verdict": outcome.ok,
        "result": outcome.result,
    }
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.command}.json").write_text(text + "\n")
        for name, body in outcome.series.items():
            (out / name).write_text(body)
    print(text)
    return EXIT_OK if outcome.ok else EXIT_NEGATIVE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
