"""Command line entry point: ``vigil {solve,analyze,simulate,sweep,verify} --config PATH``."""
import argparse
import os
import sys
import typing
from dataclasses import dataclass

import numpy as np

from . import verify
from .analysis import analyze
from .app import App
from .exceptions import BaseError, CommandError
from .kkt import compute_Tn, embed_solution, three_stage_spec
from .middleware.debug_middleware import DebugMiddleware
from .middleware.error import ErrorMiddleware
from .middleware.prometheus_monitoring import PrometheusMonitoringMiddleware
from .model import SystemConfig, alpha_table, load_config
from .policy import (
    TabularPolicy,
    always_update_policy,
    compile_three_stage,
    dump_policy,
    load_policy,
    never_update_policy,
)
from .sim import monte_carlo
from .utils import documents
from .utils.helper import parse_seed
from .utils.logger import get_logger
from .validator import ExperimentValidator

log = get_logger("vigil.cli")

MODES = ("solve", "analyze", "simulate", "sweep", "verify")
DEFAULT_SWEEP_POINTS = 10
MONOTONE_TOLERANCE = 1e-9
DOMINANCE_SIGMAS = 4.0
EXIT_OK, EXIT_FAILED_CHECKS, EXIT_ERROR = 0, 1, 2


@dataclass
class ExperimentSpec:
    config: typing.Optional[SystemConfig]
    mode: str
    sweep_rates: typing.Optional[typing.List[float]] = None
    trials: int = 10000
    seed: int = 0
    output_path: str = "results"
    workers: int = 1
    policy_path: typing.Optional[str] = None
    full: bool = False

    def to_document(self) -> dict:
        return {
            "config": self.config.to_document() if self.config is not None else None,
            "mode": self.mode,
            "sweep_rates": list(self.sweep_rates) if self.sweep_rates is not None else None,
            "trials": self.trials,
            "seed": self.seed,
            "output_path": self.output_path,
            "workers": self.workers,
            "policy_path": self.policy_path,
            "full": self.full,
        }

    def summary(self) -> dict:
        summary = {
            "mode": self.mode,
            "trials": self.trials,
            "seed": self.seed,
            "output_path": self.output_path,
        }
        if self.config is not None:
            summary.update(
                n_sources=self.config.n_sources,
                horizon=self.config.horizon,
                rate_budget=self.config.rate_budget,
            )
        return summary

    def output(self, name: str) -> str:
        return os.path.join(self.output_path, name)


def parse_rates(text: str) -> typing.List[float]:
    try:
        rates = [float(r) for r in text.split(",") if r.strip()]
    except ValueError:
        raise CommandError(f"--rates must be a comma separated list of numbers, got {text!r}")
    if not rates:
        raise CommandError("--rates is empty")
    return rates


def build_spec(args: argparse.Namespace) -> ExperimentSpec:
    """Config document plus command line overrides."""
    cfg = None
    if args.config is None:
        if args.mode != "verify":
            raise CommandError(f"{args.mode} needs --config")
    else:
        document = documents.read_document(args.config)
        if not isinstance(document, dict):
            raise CommandError(f"Config {args.config} must hold a JSON object")
        if args.trials is not None:
            document["trials"] = args.trials
        if args.seed is not None:
            document["seed"] = args.seed
        if args.workers is not None:
            document["workers"] = args.workers
        cfg = load_config(document)

    try:
        seed = parse_seed(args.seed) if args.seed is not None else (cfg.seed if cfg else 0)
    except ValueError as e:
        raise CommandError(str(e))

    if args.full and args.mode != "verify":
        raise CommandError("--full is only accepted by verify")

    rates = None
    if args.rates is not None:
        if args.mode != "sweep":
            raise CommandError("--rates is only accepted by sweep")
        rates = parse_rates(args.rates)
    elif args.mode == "sweep":
        rates = [float(r) for r in np.linspace(0.0, cfg.full_rate, DEFAULT_SWEEP_POINTS)]
    if rates is not None:
        full = cfg.full_rate
        outside = [r for r in rates if not 0.0 <= r <= full]
        if outside:
            raise CommandError(f"Sweep rates {outside} outside [0, {full}]")

    return ExperimentSpec(
        config=cfg,
        mode=args.mode,
        sweep_rates=rates,
        trials=cfg.trials if cfg else (args.trials or 10000),
        seed=seed,
        output_path=args.out,
        workers=cfg.workers if cfg else (args.workers or 1),
        policy_path=args.policy,
        full=args.full,
    )


def switching_policy(cfg: SystemConfig) -> TabularPolicy:
    alpha = alpha_table(cfg)
    return compile_three_stage(cfg, three_stage_spec(cfg, compute_Tn(cfg, alpha)))


def policy_for(spec: ExperimentSpec) -> TabularPolicy:
    if spec.policy_path:
        return load_policy(documents.read_document(spec.policy_path), spec.config)
    return switching_policy(spec.config)


def run_solve(spec: ExperimentSpec) -> dict:
    cfg = spec.config
    alpha = alpha_table(cfg)
    solution = compute_Tn(cfg, alpha)
    point = embed_solution(cfg, alpha, solution)
    stages = three_stage_spec(cfg, solution)
    table = analyze(cfg, compile_three_stage(cfg, stages))
    solution_path = documents.write_document(
        spec.output("solution.json"),
        {
            "config": cfg.to_document(),
            "solution": solution.to_document(),
            "embedding": {"s": point.s, "z": point.z, "objective": point.objective},
            "approx_objective": table.objective,
            "update_rate": table.rate,
        },
    )
    policy_path = documents.write_document(spec.output("policy.json"), dump_policy(stages))
    return {
        "exit_code": EXIT_OK,
        "solution_path": solution_path,
        "policy_path": policy_path,
        "switch_times": list(solution.switch_times),
    }


def run_analyze(spec: ExperimentSpec) -> dict:
    table = analyze(spec.config, policy_for(spec))
    csv_path = table.write_csv(spec.output("analysis.csv"))
    summary = table.summary()
    summary_path = documents.write_document(spec.output("analysis_summary.json"), summary)
    return {"exit_code": EXIT_OK, "csv_path": csv_path, "summary_path": summary_path, **summary}


def run_simulate(spec: ExperimentSpec) -> dict:
    cfg = spec.config
    policy = policy_for(spec)
    estimate = monte_carlo(cfg, policy, spec.trials, spec.seed, spec.workers)
    table = analyze(cfg, policy)
    rows = (
        [t, estimate.per_t_error_freq[t - 1], table.rho_union[t - 1].lower, table.rho[t - 1].upper]
        for t in range(1, cfg.horizon + 1)
    )
    csv_path = documents.write_csv(
        spec.output("simulation.csv"), ["t", "error_freq", "rho_lower", "rho_upper"], rows
    )
    summary = estimate.summary()
    summary_path = documents.write_document(spec.output("simulation_summary.json"), summary)
    return {"exit_code": EXIT_OK, "csv_path": csv_path, "summary_path": summary_path, **summary}


SWEEP_HEADER = (
    "r",
    "policy",
    "approx_objective",
    "mc_error",
    "mc_error_se",
    "mc_rate",
    "mc_rate_se",
)


def _sweep_row(cfg: SystemConfig, name: str, policy: TabularPolicy, spec: ExperimentSpec) -> list:
    estimate = monte_carlo(cfg, policy, spec.trials, spec.seed, spec.workers)
    return [
        cfg.rate_budget,
        name,
        analyze(cfg, policy).objective,
        estimate.error_prob.mean,
        estimate.error_prob.se,
        estimate.update_rate.mean,
        estimate.update_rate.se,
    ]


def run_sweep(spec: ExperimentSpec) -> dict:
    if not spec.sweep_rates:
        raise CommandError("sweep needs at least one rate")
    base = spec.config
    # always and never do not depend on r
    baselines = {
        "always": _sweep_row(base, "always", always_update_policy(base), spec),
        "never": _sweep_row(base, "never", never_update_policy(base), spec),
    }
    rows = []
    switching_objectives = []
    dominated = []
    for r in spec.sweep_rates:
        cfg = base.with_rate(float(r))
        row = _sweep_row(cfg, "switching", switching_policy(cfg), spec)
        switching_objectives.append((float(r), row[2]))
        never = baselines["never"]
        if row[3] > never[3] + DOMINANCE_SIGMAS * max(row[4], never[4]):
            dominated.append(float(r))
        rows.append(row)
        rows.extend([float(r)] + baseline[1:] for baseline in baselines.values())

    ordered = [objective for _, objective in sorted(switching_objectives)]
    monotone = all(b <= a + MONOTONE_TOLERANCE for a, b in zip(ordered, ordered[1:]))
    if not monotone:
        log.warning("switching objective increases with the rate budget", objectives=ordered)
    if dominated:
        log.warning("switching policy errs more often than never-update", rates=dominated)
    csv_path = documents.write_csv(spec.output("sweep.csv"), SWEEP_HEADER, rows)
    return {"exit_code": EXIT_OK, "csv_path": csv_path, "monotone": monotone, "dominates_never": not dominated}


def run_verify(spec: ExperimentSpec) -> dict:
    verdict = verify.run_all(spec.seed, full=spec.full)
    verdict_path = documents.write_document(spec.output("verify.json"), verdict.to_document())
    return {
        "exit_code": EXIT_OK if verdict.passed else EXIT_FAILED_CHECKS,
        "verdict_path": verdict_path,
        "passed": verdict.passed,
    }


HANDLERS = {
    "solve": run_solve,
    "analyze": run_analyze,
    "simulate": run_simulate,
    "sweep": run_sweep,
    "verify": run_verify,
}


def register_commands(app: App) -> App:
    for name, handler in HANDLERS.items():
        app.command(name, validator=ExperimentValidator)(handler)
    return app


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vigil",
        description="Synthesize, analyze and simulate rate-limited update policies for top-K monitoring.",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", help="system config document (JSON)")
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--trials", type=int, help="Monte Carlo episodes")
    parser.add_argument("--seed", help="seed as hex, e.g. 0x2a")
    parser.add_argument("--rates", help="comma separated rate budgets for sweep")
    parser.add_argument("--policy", help="policy document to analyze or simulate instead of the switching policy")
    parser.add_argument("--workers", type=int, help="worker processes for Monte Carlo")
    parser.add_argument("--full", action="store_true", help="run verify checks at acceptance scale")
    parser.add_argument("--metrics", help="write Prometheus metrics to this text file")
    parser.add_argument("--log-dir", help="directory for log files")
    return parser


def create_app(args: argparse.Namespace) -> App:
    app = App(app_name="vigil", logger_files_path=args.log_dir)
    register_commands(app)
    app.add_middleware(DebugMiddleware, log_level="info")
    if args.metrics:
        app.add_middleware(PrometheusMonitoringMiddleware, app, textfile_path=args.metrics)

    def on_error(error, name, spec):
        log.error(f"{name} failed: {error}", mode=name)
        return {"exit_code": EXIT_ERROR, "error": str(error)}

    app.add_middleware(ErrorMiddleware, BaseError, on_error)
    return app


def main(argv: typing.Sequence[str] = None) -> int:
    args = build_parser().parse_args(argv)
    app = create_app(args)
    try:
        spec = build_spec(args)
    except BaseError as e:
        log.error(f"invalid invocation: {e}")
        print(documents.dumps({"exit_code": EXIT_ERROR, "error": str(e)}))
        return EXIT_ERROR
    response = app.run(spec.mode, spec)
    print(documents.dumps(response))
    return response["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
