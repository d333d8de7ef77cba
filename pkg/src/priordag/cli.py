"""Experiment runner: load data and priors, weight the priors, run a search
method with and without the prior penalty, evaluate, and write comparison
artifacts (results.csv, weights.json, estimated graphs, report.md).
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import benchmarks, notears, priors, scoring, search
from .datasets import Dataset, VariableMeta
from .graphs import load_adjacency_json, save_adjacency_json
from .metrics import EvalReport, evaluate

__all__ = ["ConfigError", "ExperimentConfig", "validate_config", "run_experiment", "main"]

METHOD_GREEDY = "greedy"
METHOD_NOTEARS = "notears"

DEFAULT_SAMPLE_N = 5000
DEFAULT_LAMBDA = 1.0
DEFAULT_TAU = 0.3


class ConfigError(ValueError):
    """All config violations, reported together with their field paths."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    method: str = METHOD_GREEDY
    truth: str | None = None
    prior_paths: tuple = ()
    lambdas: tuple = (DEFAULT_LAMBDA,)
    penalty_kind: str = "l1"
    sample_n: int = DEFAULT_SAMPLE_N
    seed: int = 0
    output_dir: str = "results"
    likelihood: str = "auto"
    skeleton_metrics: bool = False
    threshold_tau: float = DEFAULT_TAU


def _load_config_dict(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: not valid JSON ({exc})"]) from exc


def validate_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and semantically validate a JSON experiment config.

    Collects every violation before raising, so one bad field does not mask
    the rest.  CLI flags (overrides) take precedence over file values.
    """
    obj = _load_config_dict(path)
    if overrides:
        obj.update({k: v for k, v in overrides.items() if v is not None})
    problems = []

    known = {"dataset", "method", "truth", "prior_paths", "lambda", "penalty_kind",
             "sample_n", "seed", "output_dir", "likelihood", "skeleton_metrics",
             "threshold_tau"}
    for key in obj:
        if key not in known:
            problems.append(f"{key}: unknown field")

    dataset = obj.get("dataset")
    if not dataset:
        problems.append("dataset: required (bundled network name or CSV path)")

    method = str(obj.get("method", METHOD_GREEDY)).lower()
    if method not in (METHOD_GREEDY, METHOD_NOTEARS):
        problems.append(f"method: must be '{METHOD_GREEDY}' or '{METHOD_NOTEARS}', got {method!r}")

    penalty_kind = str(obj.get("penalty_kind", "l1")).lower()
    if penalty_kind not in (scoring.PENALTY_L1, scoring.PENALTY_L2):
        problems.append(f"penalty_kind: must be 'l1' or 'l2', got {penalty_kind!r}")
    if method == METHOD_NOTEARS and penalty_kind == scoring.PENALTY_L1:
        problems.append("penalty_kind: the continuous optimizer supports l2 only")

    lam = obj.get("lambda", DEFAULT_LAMBDA)
    lambdas = tuple(lam) if isinstance(lam, (list, tuple)) else (lam,)
    if len(lambdas) == 0:
        problems.append("lambda: sweep list must be nonempty")
    for k, value in enumerate(lambdas):
        if not isinstance(value, (int, float)) or value < 0:
            problems.append(f"lambda[{k}]: must be a nonnegative number, got {value!r}")

    sample_n = obj.get("sample_n", DEFAULT_SAMPLE_N)
    if not isinstance(sample_n, int) or sample_n < 1:
        problems.append(f"sample_n: must be a positive integer, got {sample_n!r}")

    seed = obj.get("seed", 0)
    if not isinstance(seed, int):
        problems.append(f"seed: must be an integer, got {seed!r}")

    likelihood = str(obj.get("likelihood", "auto")).lower()
    if likelihood not in ("auto", scoring.GAUSSIAN, scoring.MULTINOMIAL):
        problems.append(f"likelihood: must be 'auto', 'gaussian' or 'discrete', got {likelihood!r}")

    skeleton_metrics = obj.get("skeleton_metrics", False)
    if not isinstance(skeleton_metrics, bool):
        problems.append(f"skeleton_metrics: must be a boolean, got {skeleton_metrics!r}")

    threshold_tau = obj.get("threshold_tau", DEFAULT_TAU)
    if not isinstance(threshold_tau, (int, float)) or threshold_tau < 0:
        problems.append(f"threshold_tau: must be a nonnegative number, got {threshold_tau!r}")

    output_dir = str(obj.get("output_dir", "results"))
    probe = Path(output_dir)
    while not probe.exists() and probe.parent != probe:
        probe = probe.parent
    if probe.exists() and not os.access(probe, os.W_OK):
        problems.append(f"output_dir: {output_dir!r} is not writable")

    truth = obj.get("truth")
    dataset_is_bundled = isinstance(dataset, str) and \
        dataset.lower() in benchmarks.BUNDLED_NETWORKS
    dataset_d = None
    if dataset and dataset_is_bundled:
        dataset_d = benchmarks.load_network(dataset.lower()).d
    elif dataset:
        if not Path(str(dataset)).exists():
            problems.append(f"dataset: {dataset!r} is neither a bundled network nor an existing file")
        if not truth:
            problems.append("truth: required when dataset is a CSV path")

    prior_paths = tuple(obj.get("prior_paths", ()))
    for k, p in enumerate(prior_paths):
        if not Path(str(p)).exists():
            problems.append(f"prior_paths[{k}]: file {p!r} does not exist")
            continue
        if dataset_d is not None:
            try:
                prior = priors.load_prior_file(p)
            except Exception as exc:
                problems.append(f"prior_paths[{k}]: {exc}")
                continue
            if prior.adjacency.d != dataset_d:
                problems.append(
                    f"prior_paths[{k}]: prior has {prior.adjacency.d} variables "
                    f"but dataset {dataset!r} has {dataset_d}"
                )

    if problems:
        raise ConfigError(problems)

    return ExperimentConfig(
        dataset=str(dataset), method=method, truth=truth,
        prior_paths=prior_paths, lambdas=lambdas, penalty_kind=penalty_kind,
        sample_n=sample_n, seed=seed, output_dir=str(obj.get("output_dir", "results")),
        likelihood=likelihood, skeleton_metrics=skeleton_metrics,
        threshold_tau=float(threshold_tau),
    )


def _load_experiment_data(config: ExperimentConfig):
    """Returns (Dataset, GroundTruth or None)."""
    name = config.dataset.lower()
    if name in benchmarks.BUNDLED_NETWORKS:
        net = benchmarks.load_network(name)
        data = benchmarks.forward_sample(net, config.sample_n, seed=config.seed)
        truth = benchmarks.load_ground_truth(name)
        return data, truth
    truth = None
    if config.truth:
        if Path(config.truth).exists():
            adjacency, names = load_adjacency_json(config.truth)
            truth = benchmarks.GroundTruth(name=str(config.truth), adjacency=adjacency,
                                           variables=tuple(names))
        else:
            truth = benchmarks.load_ground_truth(config.truth)
    data = benchmarks.load_observations(config.dataset, ground_truth=truth)
    return data, truth


def _run_variant(method, data, ensemble, lam, config: ExperimentConfig):
    """One search run; lam is None for the unpenalized baseline."""
    if method == METHOD_GREEDY:
        score_config = scoring.ScoreConfig(
            lam=lam if lam is not None else 0.0,
            penalty=config.penalty_kind if lam is not None else scoring.PENALTY_NONE,
            likelihood=_effective_likelihood(config, data),
        )
        return search.greedy_search(
            data, ensemble if lam is not None else None, score_config,
            search.SearchConfig(seed=config.seed),
        )
    notears_config = notears.NotearsConfig(
        lambda_prior=lam if lam is not None else 0.0,
        threshold_tau=config.threshold_tau,
    )
    return notears.solve(data, ensemble if lam is not None else None, notears_config)


def _effective_likelihood(config: ExperimentConfig, data: Dataset) -> str:
    if config.likelihood != "auto":
        return config.likelihood
    return scoring.MULTINOMIAL if data.all_discrete() else scoring.GAUSSIAN


def run_experiment(config: ExperimentConfig):
    """Run baseline plus one enhanced run per lambda; write all artifacts.

    Returns (baseline EvalReport, {lambda: EvalReport}); reports are None
    when no ground truth is available (pure-observational datasets).
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    data, truth = _load_experiment_data(config)

    ensemble = None
    prior_list = [priors.load_prior_file(p, variables=data.names) for p in config.prior_paths]
    if prior_list:
        ensemble = priors.compute_weights(
            prior_list, data, likelihood=_effective_likelihood(config, data)
        )
        weights_payload = [
            {"source": p.source, "weight": float(w)}
            for p, w in zip(ensemble.priors, ensemble.weights)
        ]
        with open(out / "weights.json", "w") as fh:
            json.dump({"weights": weights_payload}, fh, indent=2)
            fh.write("\n")

    variants = [("baseline", None)]
    if ensemble is not None:
        variants += [("enhanced", lam) for lam in config.lambdas]

    def execute(tag_lam):
        tag, lam = tag_lam
        run_dir = out / "runs" / (tag if lam is None else f"{tag}_lambda_{lam:g}")
        run_dir.mkdir(parents=True, exist_ok=True)
        result = _run_variant(config.method, data, ensemble, lam, config)
        search.save_result_json(result, data.names, run_dir / "estimated.json")
        if config.method == METHOD_NOTEARS:
            notears.write_trace_csv(result, run_dir / "trace.csv")
        report = evaluate(result.adjacency, truth, skeleton=config.skeleton_metrics) \
            if truth is not None else None
        return tag, lam, result, report

    with ThreadPoolExecutor(max_workers=min(4, len(variants))) as pool:
        outcomes = list(pool.map(execute, variants))
    outcomes.sort(key=lambda t: (-1.0 if t[1] is None else float(t[1])))

    rows = []
    for tag, lam, result, report in outcomes:
        save_adjacency_json(
            result.adjacency, data.names,
            out / ("estimated_baseline.json" if lam is None else f"estimated_lambda_{lam:g}.json"),
        )
        row = {
            "method": config.method,
            "variant": tag,
            "lambda": "" if lam is None else format(float(lam), "g"),
            "penalty": "" if lam is None else config.penalty_kind,
            "n_edges": result.adjacency.n_edges(),
            "final_score": format(result.final_score, ".12g"),
        }
        if report is not None:
            row.update({k: v for k, v in report.to_dict().items()})
        rows.append(row)

    fieldnames = ["method", "variant", "lambda", "penalty", "n_edges", "final_score"]
    if truth is not None:
        fieldnames += EvalReport.csv_header()
    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)

    _write_report_md(out / "report.md", config, rows, truth, outcomes)

    baseline_report = next(r for t, lam, _, r in outcomes if lam is None)
    enhanced = {lam: r for t, lam, _, r in outcomes if lam is not None}
    return baseline_report, enhanced


def _write_report_md(path, config: ExperimentConfig, rows, truth, outcomes=()) -> None:
    lines = [
        f"# Experiment report: {config.dataset} / {config.method}",
        "",
        f"Generated: {datetime.datetime.now().isoformat()}",
        "",
        f"- seed: {config.seed}",
        f"- sample_n: {config.sample_n}",
        f"- penalty: {config.penalty_kind}",
        f"- priors: {', '.join(config.prior_paths) if config.prior_paths else 'none'}",
        "",
    ]
    if truth is None:
        lines.append("No ground truth supplied; structural metrics unavailable.")
    else:
        lines.append("| variant | lambda | SHD | TPR | FDR | edges |")
        lines.append("|---|---|---|---|---|---|")
        base = next(r for r in rows if r["variant"] == "baseline")
        for row in rows:
            lines.append(
                f"| {row['variant']} | {row['lambda'] or '-'} | {row['shd']} "
                f"| {row['tpr']:.4f} | {row['fdr']:.4f} | {row['n_edges']} |"
            )
        lines.append("")
        lines.append("Deltas vs baseline (enhanced - baseline):")
        lines.append("")
        lines.append("| lambda | dSHD | dTPR | dFDR |")
        lines.append("|---|---|---|---|")
        for row in rows:
            if row["variant"] == "baseline":
                continue
            lines.append(
                f"| {row['lambda']} | {row['shd'] - base['shd']} "
                f"| {row['tpr'] - base['tpr']:+.4f} | {row['fdr'] - base['fdr']:+.4f} |"
            )
    if outcomes:
        lines += ["", "Diagnostics:", ""]
        for tag, lam, result, _ in outcomes:
            label = tag if lam is None else f"{tag} lambda={lam:g}"
            pieces = []
            for key in ("cache_hits", "cache_misses", "ridge_fallbacks",
                        "h_final", "rho_final", "converged", "threshold_used"):
                if key in result.diagnostics:
                    value = result.diagnostics[key]
                    pieces.append(f"{key}={value:.3g}" if isinstance(value, float)
                                  else f"{key}={value}")
            lines.append(f"- {label}: " + (", ".join(pieces) or "none"))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------

def _cmd_run(args) -> int:
    overrides = {
        "method": args.method,
        "output_dir": args.output_dir,
        "seed": args.seed,
        "sample_n": args.sample_n,
        "lambda": json.loads(args.lam) if args.lam is not None else None,
        "penalty_kind": args.penalty_kind,
        "threshold_tau": args.threshold_tau,
        "skeleton_metrics": True if args.skeleton_metrics else None,
    }
    config = validate_config(args.config, overrides)
    out = Path(config.output_dir)
    try:
        baseline, enhanced = run_experiment(config)
    except Exception as exc:
        out.mkdir(parents=True, exist_ok=True)
        (out / "FAILED").write_text(f"{type(exc).__name__}: {exc}\n")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out / 'results.csv'}")
    if baseline is not None:
        print(f"baseline: SHD={baseline.shd} TPR={baseline.tpr:.4f} FDR={baseline.fdr:.4f}")
        for lam, report in sorted(enhanced.items()):
            print(f"enhanced lambda={lam:g}: SHD={report.shd} "
                  f"TPR={report.tpr:.4f} FDR={report.fdr:.4f}")
    return 0


def _cmd_sample(args) -> int:
    net = benchmarks.load_network(args.network)
    data = benchmarks.forward_sample(net, args.n, seed=args.seed)
    benchmarks.save_observations_csv(data, args.out)
    print(f"wrote {args.out} ({data.n} rows, {data.d} variables)")
    return 0


def _cmd_query(args) -> int:
    if args.network:
        variables = benchmarks.load_network(args.network).variables
    else:
        with open(args.variables) as fh:
            spec = json.load(fh)
        variables = [
            VariableMeta(name=v["name"], kind=v.get("kind", "continuous"),
                         categories=tuple(v["categories"]) if v.get("categories") else None)
            for v in spec["variables"]
        ]
    if args.fixtures:
        backend = priors.FixtureBackend(args.fixtures, args.model)
    else:
        backend = priors.HttpChatBackend(name=args.model)
    prior, transcripts = priors.run_query_pipeline(backend, variables)
    priors.save_prior_file(prior, [v.name for v in variables], args.out)
    print(f"wrote {args.out} ({prior.adjacency.n_edges()} edges from {prior.source!r})")
    if args.transcripts:
        payload = [
            {"stage": t.stage, "prompt": t.prompt_text, "response": t.response_text,
             "timestamp": t.timestamp, "warnings": list(t.warnings)}
            for t in transcripts
        ]
        with open(args.transcripts, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.transcripts}")
    return 0


def _cmd_eval(args) -> int:
    estimated, _ = load_adjacency_json(args.estimated)
    if Path(args.truth).exists():
        adjacency, names = load_adjacency_json(args.truth)
        truth = benchmarks.GroundTruth(name=args.truth, adjacency=adjacency,
                                       variables=tuple(names))
    else:
        truth = benchmarks.load_ground_truth(args.truth)
    report = evaluate(estimated, truth, skeleton=args.skeleton_metrics)
    print(report.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="priordag",
        description="Prior-regularized score-based causal structure learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a baseline-vs-enhanced experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="JSON experiment config")
    p_run.add_argument("--method", choices=[METHOD_GREEDY, METHOD_NOTEARS])
    p_run.add_argument("--output-dir", dest="output_dir")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--sample-n", dest="sample_n", type=int)
    p_run.add_argument("--lambda", dest="lam",
                       help="penalty strength, a number or JSON list (sweep)")
    p_run.add_argument("--penalty-kind", dest="penalty_kind", choices=["l1", "l2"])
    p_run.add_argument("--threshold-tau", dest="threshold_tau", type=float,
                       help=f"continuous-optimizer edge threshold (default {DEFAULT_TAU})")
    p_run.add_argument("--skeleton-metrics", action="store_true", default=False)
    p_run.set_defaults(func=_cmd_run)

    p_sample = sub.add_parser("sample", help="sample a bundled network to CSV")
    p_sample.add_argument("--network", required=True, choices=list(benchmarks.BUNDLED_NETWORKS))
    p_sample.add_argument("--n", type=int, default=DEFAULT_SAMPLE_N)
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--out", required=True)
    p_sample.set_defaults(func=_cmd_sample)

    p_query = sub.add_parser("query", help="run the three-stage prior-elicitation pipeline")
    src = p_query.add_mutually_exclusive_group(required=True)
    src.add_argument("--network", choices=list(benchmarks.BUNDLED_NETWORKS),
                     help="take variable metadata from a bundled network")
    src.add_argument("--variables", help="JSON file with a variables list")
    p_query.add_argument("--model", required=True, help="model label / fixture directory name")
    p_query.add_argument("--fixtures", help="fixture root directory (offline replay mode)")
    p_query.add_argument("--out", required=True, help="output prior JSON")
    p_query.add_argument("--transcripts", help="optional transcript JSON output")
    p_query.set_defaults(func=_cmd_query)

    p_eval = sub.add_parser("eval", help="evaluate an estimated graph against a ground truth")
    p_eval.add_argument("--estimated", required=True, help="estimated graph JSON")
    p_eval.add_argument("--truth", required=True,
                        help="bundled ground-truth name or graph JSON path")
    p_eval.add_argument("--skeleton-metrics", action="store_true", default=False)
    p_eval.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
