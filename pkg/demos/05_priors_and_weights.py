"""Eliciting prior graphs and combining several of them into one ensemble.

The three-stage prompt pipeline (introduce the variables, ask for pairwise
cause -> effect statements, ask the model to re-check itself) is replayed
here from recorded fixtures, so everything is offline and deterministic.
Each prior is then scored on the data with the same BIC used for search;
softmin weighting hands better-fitting priors more influence.
"""

from priordag import (
    FixtureBackend,
    compute_weights,
    evaluate,
    forward_sample,
    load_ground_truth,
    load_network,
    run_query_pipeline,
)
from priordag.benchmarks import bundled_path

net = load_network("asia")
truth = load_ground_truth("asia")
fixtures = bundled_path("fixtures")

print("Replaying the three-stage pipeline for three recorded models")
print("============================================================")
priors = []
for model in ("asia_gpt4", "asia_gpt35", "asia_gemini"):
    backend = FixtureBackend(fixtures, model)
    prior, transcripts = run_query_pipeline(backend, net.variables)
    priors.append(prior)
    quality = evaluate(prior.adjacency, truth)
    print(f"{model:<12} {prior.adjacency.n_edges()} edges | "
          f"correct {quality.counts.true_positives}, "
          f"wrong {quality.counts.false_positives} | stages: "
          + ", ".join(t.stage for t in transcripts))

print()
print("One transcript, abridged (final stage of asia_gpt35):")
backend = FixtureBackend(fixtures, "asia_gpt35")
_, transcripts = run_query_pipeline(backend, net.variables)
final = transcripts[-1]
print(f"  prompt   : {final.prompt_text[:70]}...")
print(f"  response : {final.response_text.splitlines()[0]}")
print(f"             ({len(final.response_text.splitlines()) - 1} statement lines follow)")

print()
print("Weighting the ensemble on sampled data")
print("======================================")
data = forward_sample(net, n=5000, seed=3)
ensemble = compute_weights(priors, data)
for prior, weight in zip(ensemble.priors, ensemble.weights):
    print(f"  {prior.source:<12} weight {weight:.4f}")
print(f"  sum = {float(ensemble.weights.sum()):.15f}")
print("(the flawless prior fits the data best, so it dominates)")
