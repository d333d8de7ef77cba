"""Continuous DAG learning: least squares + smooth acyclicity constraint.

The augmented-Lagrangian loop drives h(W) = trace(exp(W o W)) - d to zero,
then thresholds the weighted matrix into a binary DAG.  A weighted l2
penalty toward prior graphs plugs straight into the smooth objective.
"""

import numpy as np

from priordag import (
    Dataset,
    NotearsConfig,
    PriorEnsemble,
    PriorGraph,
    VariableMeta,
    evaluate,
    h_acyclicity,
    notears_solve,
)
from priordag.graphs import AdjacencyMatrix, edge_list

print("The acyclicity function h")
print("=========================")
for label, w in [
    ("empty graph      ", np.zeros((3, 3))),
    ("one edge         ", np.array([[0, 0.8, 0], [0, 0, 0], [0, 0, 0.0]])),
    ("two-cycle        ", np.array([[0, 1.0], [1.0, 0]])),
]:
    h, _ = h_acyclicity(w)
    print(f"  {label} h = {h:.6f}")

print()
print("Two-variable model: y = 2 x + noise")
print("===================================")
rng = np.random.default_rng(0)
x = rng.normal(size=1000)
y = 2.0 * x + 0.1 * rng.normal(size=1000)
data = Dataset(np.column_stack([x, y]), (VariableMeta("x"), VariableMeta("y")))
result = notears_solve(data, None, NotearsConfig())
w = result.diagnostics["weights"]
print(f"recovered edges: {edge_list(result.adjacency)} (0 -> 1 means x -> y)")
print(f"estimated coefficient: {w[0, 1]:.3f}")

print()
print("A 10-node random linear model, with and without the true prior")
print("==============================================================")
d, n_edges, n = 10, 10, 1000
order = rng.permutation(d)
truth = np.zeros((d, d))
pairs = [(order[i], order[j]) for i in range(d) for j in range(i + 1, d)]
for k in rng.choice(len(pairs), size=n_edges, replace=False):
    truth[pairs[k]] = 1.0
truth = AdjacencyMatrix(truth)
weights = truth.entries * rng.uniform(0.5, 2.0, size=(d, d))
samples = np.zeros((n, d))
for v in [order[i] for i in range(d)]:
    parents = np.flatnonzero(truth.entries[:, v])
    samples[:, v] = samples[:, parents] @ weights[parents, v] + rng.normal(size=n)
data = Dataset(samples, tuple(VariableMeta(f"v{i}") for i in range(d)))

base = notears_solve(data, None, NotearsConfig())
print(f"baseline : SHD {evaluate(base.adjacency, truth).shd}, "
      f"converged h = {base.diagnostics['h_final']:.2e}")

ensemble = PriorEnsemble.single(PriorGraph(source="oracle", adjacency=truth))
enhanced = notears_solve(data, ensemble, NotearsConfig(lambda_prior=0.1))
print(f"enhanced : SHD {evaluate(enhanced.adjacency, truth).shd}, "
      f"converged h = {enhanced.diagnostics['h_final']:.2e}")

print()
print("Outer-loop trace of the enhanced run (iteration, descriptor, objective):")
for row in enhanced.trace:
    print("  ", row)
