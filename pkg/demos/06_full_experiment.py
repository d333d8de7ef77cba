"""End-to-end experiment: baseline vs prior-enhanced search across a sweep.

This drives the same machinery as the `priordag run` command and leaves the
artifacts (results.csv, weights.json, estimated graphs, report.md) in a
scratch directory for inspection.
"""

import json
import tempfile
from pathlib import Path

from priordag.benchmarks import bundled_path
from priordag.cli import run_experiment, validate_config

workdir = Path(tempfile.mkdtemp(prefix="priordag_demo_"))
config_path = workdir / "config.json"
config_path.write_text(json.dumps({
    "dataset": "asia",
    "method": "greedy",
    "sample_n": 5000,
    "seed": 7,
    "prior_paths": [
        str(bundled_path("fixtures", "asia_gpt4_prior.json")),
        str(bundled_path("fixtures", "asia_gpt35_prior.json")),
        str(bundled_path("fixtures", "asia_gemini_prior.json")),
    ],
    "lambda": [0, 1, 10, 1000],
    "penalty_kind": "l1",
    "output_dir": str(workdir / "out"),
}, indent=2))

config = validate_config(config_path)
print(f"running {config.method} on {config.dataset} with "
      f"{len(config.prior_paths)} priors, lam sweep {config.lambdas}")
baseline, enhanced = run_experiment(config)

print()
print(f"baseline      : SHD {baseline.shd}, TPR {baseline.tpr:.3f}, FDR {baseline.fdr:.3f}")
for lam, report in sorted(enhanced.items()):
    print(f"lam = {lam:>6g} : SHD {report.shd}, TPR {report.tpr:.3f}, FDR {report.fdr:.3f}")

out = workdir / "out"
print()
print(f"artifacts in {out}:")
for path in sorted(out.rglob("*")):
    if path.is_file():
        print(f"  {path.relative_to(out)}")

print()
print("results.csv:")
print((out / "results.csv").read_text())
