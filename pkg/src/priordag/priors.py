"""Prior graphs: acquisition (fixtures, files, or a live chat endpoint) and
combination into a weighted ensemble.

A prior is one external guess at the causal graph.  Several priors are merged
by scoring each one on the data with the same BIC used for search and turning
the scores into softmin weights, so better-fitting priors weigh more and the
weights sum to one.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import re
import time
import urllib.error
import urllib.request
from dataclasses import dataclass

import numpy as np

from .datasets import Dataset, VariableMeta
from .graphs import AdjacencyMatrix, GraphError, edge_list, is_acyclic
from .scoring import BicScorer

__all__ = [
    "STAGES",
    "PriorGraph",
    "PriorEnsemble",
    "QueryTranscript",
    "TransportError",
    "StatementParseError",
    "FixtureBackend",
    "HttpChatBackend",
    "parse_statements",
    "run_query_pipeline",
    "load_prior_file",
    "save_prior_file",
    "compute_weights",
]

STAGES = ("understanding", "discovery", "revision")

ENDPOINT_ENV = "PRIOR_LLM_ENDPOINT"
TOKEN_ENV = "PRIOR_LLM_TOKEN"


class TransportError(RuntimeError):
    """Endpoint unreachable or misbehaving; safe to retry."""


class StatementParseError(ValueError):
    """Final response contained no usable statements; carries the raw text."""

    def __init__(self, message: str, raw_text: str):
        super().__init__(message)
        self.raw_text = raw_text


@dataclass(frozen=True)
class PriorGraph:
    """One external prior: a binary adjacency plus provenance.

    The adjacency need not be acyclic; contradictory edges from a live model
    are kept as-is and handled downstream (penalties are defined on any
    binary matrix, and scoring repairs cycles first).
    """

    source: str
    adjacency: AdjacencyMatrix
    raw_statements: tuple | None = None
    variables: tuple | None = None

    def __post_init__(self):
        if not self.adjacency.binary:
            raise GraphError("prior adjacency must be binary")
        if self.raw_statements is not None:
            object.__setattr__(
                self, "raw_statements", tuple(tuple(s) for s in self.raw_statements)
            )
        if self.variables is not None:
            variables = tuple(self.variables)
            if len(variables) != self.adjacency.d:
                raise GraphError(
                    f"{len(variables)} variable names for d={self.adjacency.d}"
                )
            object.__setattr__(self, "variables", variables)


@dataclass(frozen=True)
class PriorEnsemble:
    """Priors with normalized nonnegative weights summing to one."""

    priors: tuple
    weights: np.ndarray

    def __post_init__(self):
        priors = tuple(self.priors)
        if not priors:
            raise ValueError("ensemble needs at least one prior")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(priors),):
            raise ValueError(f"{w.size} weights for {len(priors)} priors")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        d = priors[0].adjacency.d
        for p in priors:
            if p.adjacency.d != d:
                raise ValueError("all priors must share one dimension")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "weights", w)

    @property
    def d(self) -> int:
        return self.priors[0].adjacency.d

    @classmethod
    def single(cls, prior: PriorGraph) -> "PriorEnsemble":
        return cls((prior,), np.array([1.0]))


@dataclass(frozen=True)
class QueryTranscript:
    stage: str
    prompt_text: str
    response_text: str
    timestamp: str
    warnings: tuple = ()

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown pipeline stage {self.stage!r}")
        object.__setattr__(self, "warnings", tuple(self.warnings))


# ---------------------------------------------------------------------------
# Chat backends.
# ---------------------------------------------------------------------------

class FixtureBackend:
    """Replays recorded responses from ``<root>/<model>/<stage>.txt``.

    Responses are returned verbatim in pipeline-stage order, so a given
    fixture directory always reproduces the same prior bit for bit.
    """

    def __init__(self, root, model: str):
        self.root = os.fspath(root)
        self.name = model
        self._stage_index = 0

    def reset(self) -> None:
        self._stage_index = 0

    def complete(self, prompt: str) -> str:
        if self._stage_index >= len(STAGES):
            raise TransportError(f"fixture {self.name!r} has no stage left to replay")
        stage = STAGES[self._stage_index]
        path = os.path.join(self.root, self.name, f"{stage}.txt")
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise TransportError(f"missing fixture file {path}: {exc}") from exc
        self._stage_index += 1
        return text


class HttpChatBackend:
    """Minimal chat-completion client: POST a JSON messages list, read a
    JSON object with a ``text`` field.  Keeps the running conversation so the
    three pipeline stages form one chat.
    """

    def __init__(self, endpoint: str | None = None, token: str | None = None,
                 name: str = "llm", retries: int = 2, timeout: float = 60.0):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        self.token = token if token is not None else os.environ.get(TOKEN_ENV)
        if not self.endpoint:
            raise TransportError(
                f"no endpoint: pass one or set {ENDPOINT_ENV} in the environment"
            )
        self.name = name
        self.retries = retries
        self.timeout = timeout
        self._messages = []

    def complete(self, prompt: str) -> str:
        self._messages.append({"role": "user", "content": prompt})
        body = json.dumps({"messages": self._messages}).encode()
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        last_error = None
        for attempt in range(self.retries + 1):
            request = urllib.request.Request(self.endpoint, data=body, headers=headers)
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                    payload = json.loads(resp.read().decode())
                text = payload["text"]
                self._messages.append({"role": "assistant", "content": text})
                return text
            except (urllib.error.URLError, OSError, KeyError, json.JSONDecodeError) as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(0.5 * (attempt + 1))
        raise TransportError(f"endpoint {self.endpoint} failed: {last_error}") from last_error


# ---------------------------------------------------------------------------
# Statement parsing and the three-stage pipeline.
# ---------------------------------------------------------------------------

_STATEMENT_RE = re.compile(r"^\s*(.+?)\s*->\s*(.+?)\s*$")


def _parse_with_warnings(text: str, variables) -> tuple:
    names = [v.name if isinstance(v, VariableMeta) else str(v) for v in variables]
    lookup = {name.lower(): k for k, name in enumerate(names)}
    pairs = []
    seen = set()
    warnings = []
    for line in text.splitlines():
        if not line.strip():
            continue
        match = _STATEMENT_RE.match(line)
        if not match:
            warnings.append(f"skipped line (not a statement): {line.strip()!r}")
            continue
        cause, effect = match.group(1).strip(), match.group(2).strip()
        ci = lookup.get(cause.lower())
        ei = lookup.get(effect.lower())
        if ci is None or ei is None:
            unknown = cause if ci is None else effect
            warnings.append(f"dropped statement with unknown variable {unknown!r}: {line.strip()!r}")
            continue
        if ci == ei:
            warnings.append(f"dropped self-loop statement: {line.strip()!r}")
            continue
        if (ci, ei) not in seen:
            seen.add((ci, ei))
            pairs.append((ci, ei))
    return pairs, warnings


def parse_statements(text: str, variables) -> list:
    """Extract ``<cause> -> <effect>`` lines as (cause_index, effect_index) pairs.

    Matching is case-insensitive against the variable names; unmatched lines
    are skipped, duplicates collapsed, self-loops dropped.
    """
    pairs, _ = _parse_with_warnings(text, variables)
    return pairs


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def run_query_pipeline(backend, variables) -> tuple:
    """Issue the three-stage prompt sequence and parse the final statements.

    Stage one introduces each variable by name and possible values, stage two
    asks for pairwise cause -> effect statements, stage three asks the model
    to re-check its own statements for inaccuracies and restate the final
    list.  The revised (final) statement list becomes the prior graph.

    Returns (PriorGraph, [QueryTranscript]) with one transcript per stage.
    """
    variables = list(variables)
    if not variables:
        raise ValueError("variables must be nonempty")
    names = [v.name if isinstance(v, VariableMeta) else str(v) for v in variables]

    lines = []
    for v in variables:
        if isinstance(v, VariableMeta) and v.categories:
            lines.append(f"- {v.name}: possible values {', '.join(map(str, v.categories))}")
        else:
            lines.append(f"- {v.name}: continuous measurement")
    understanding_prompt = (
        "You will analyze cause-and-effect relationships among the variables of a "
        "dataset. Here is each variable's name and its possible values:\n"
        + "\n".join(lines)
        + "\nConfirm briefly that you understand what each variable represents."
    )
    discovery_prompt = (
        "Based on that understanding, list the direct cause-and-effect relationships "
        "between pairs of these variables. Answer with one statement per line, "
        "formatted exactly as '<cause> -> <effect>', using only the variable names "
        "given above. Do not include anything else on those lines."
    )
    revision_prompt = (
        "Re-examine the statements you just gave and identify potential inaccuracies "
        "in the generated statements. Then output the final, corrected list of "
        "statements, one '<cause> -> <effect>' per line. Output only the final list."
    )

    transcripts = []
    responses = []
    for stage, prompt in zip(
        STAGES, (understanding_prompt, discovery_prompt, revision_prompt)
    ):
        response = backend.complete(prompt)
        responses.append(response)
        transcripts.append(
            QueryTranscript(stage=stage, prompt_text=prompt,
                            response_text=response, timestamp=_now())
        )

    final_text = responses[-1]
    pairs, warnings = _parse_with_warnings(final_text, variables)
    matched_any = bool(pairs) or any(w.startswith("dropped") for w in warnings)
    if final_text.strip() and not matched_any:
        # A nonempty final answer in which nothing even resembled a statement
        # is a malformed response, not an empty statement list.
        raise StatementParseError(
            f"no statement of the form '<cause> -> <effect>' found in the final "
            f"response from {getattr(backend, 'name', 'backend')!r}",
            raw_text=final_text,
        )
    if warnings:
        last = transcripts[-1]
        transcripts[-1] = QueryTranscript(
            stage=last.stage, prompt_text=last.prompt_text,
            response_text=last.response_text, timestamp=last.timestamp,
            warnings=tuple(warnings),
        )

    adjacency = AdjacencyMatrix.from_edges(len(names), pairs)
    statements = tuple((names[i], names[j], "") for i, j in pairs)
    prior = PriorGraph(
        source=getattr(backend, "name", "llm"),
        adjacency=adjacency,
        raw_statements=statements,
        variables=tuple(names),
    )
    return prior, transcripts


# ---------------------------------------------------------------------------
# Prior files.
# ---------------------------------------------------------------------------

def load_prior_file(path, variables=None) -> PriorGraph:
    """Read a prior from a JSON edge-list file with a ``source`` field.

    File edges resolve against the file's own variable list; a ``variables``
    argument re-maps them onto the given name order instead (names must then
    agree as sets).  Unlike live LLM text, files are authoritative, so any
    unknown name is a hard error.
    """
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed prior file {path}: {exc}") from exc
    for key in ("source", "variables", "edges"):
        if key not in obj:
            raise GraphError(f"prior file {path} missing {key!r}")
    file_names = list(obj["variables"])
    if variables is not None:
        target = list(variables)
        if sorted(target) != sorted(file_names):
            raise GraphError(
                f"prior file {path} variables do not match the requested order"
            )
        names = target
    else:
        names = file_names
    index = {name: k for k, name in enumerate(names)}
    edges = []
    for frm, to in obj["edges"]:
        if frm not in index or to not in index:
            unknown = frm if frm not in index else to
            raise GraphError(f"unknown variable {unknown!r} in prior file {path}")
        edges.append((index[frm], index[to]))
    adjacency = AdjacencyMatrix.from_edges(len(names), edges)
    return PriorGraph(
        source=str(obj["source"]),
        adjacency=adjacency,
        raw_statements=tuple((frm, to, "") for frm, to in obj["edges"]),
        variables=tuple(names),
    )


def save_prior_file(prior: PriorGraph, names, path) -> None:
    names = list(names)
    obj = {
        "source": prior.source,
        "variables": names,
        "edges": [[names[i], names[j]] for i, j in edge_list(prior.adjacency)],
    }
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Weighting.
# ---------------------------------------------------------------------------

def _break_cycles(adjacency: AdjacencyMatrix, scorer: BicScorer) -> AdjacencyMatrix:
    """Greedy minimal repair: drop the cycle edge whose removal costs least.

    Each removal changes only the child column's local score, so candidates
    are ranked by that local delta; ties break on the smallest (i, j).
    """
    a = adjacency.entries.copy()
    while not is_acyclic(AdjacencyMatrix(a, binary=True)):
        reach = _transitive_closure(a)
        best = None
        for i, j in zip(*np.nonzero(a)):
            if not reach[j, i]:
                continue  # edge not on any cycle
            parents = frozenset(np.flatnonzero(a[:, j]).tolist())
            delta = scorer.local(int(j), parents - {int(i)}) - scorer.local(int(j), parents)
            key = (delta, int(i), int(j))
            if best is None or key < best:
                best = key
        _, bi, bj = best
        a[bi, bj] = 0.0
    return AdjacencyMatrix(a, binary=True)


def _transitive_closure(a: np.ndarray) -> np.ndarray:
    reach = a.astype(bool)
    d = a.shape[0]
    for k in range(d):
        reach = reach | (reach[:, k:k + 1] & reach[k:k + 1, :])
    return reach


def compute_weights(priors, data: Dataset, scorer: BicScorer | None = None,
                    likelihood: str = "auto") -> PriorEnsemble:
    """Score each prior on the data and convert scores to softmin weights.

    Weights are ``exp(-(S_m - min S) / T)`` normalized to sum to one, with
    temperature ``T`` the population standard deviation of the scores (1 when
    all scores are equal).  Lower score means better fit means larger weight.
    Cyclic priors are scored after a minimal cycle-breaking repair; the
    original (possibly cyclic) adjacency is kept for the penalty term.
    """
    priors = tuple(priors)
    if not priors:
        raise ValueError("need at least one prior")
    if scorer is None:
        scorer = BicScorer(data, likelihood=likelihood)
    scores = np.empty(len(priors))
    for k, prior in enumerate(priors):
        try:
            graph = prior.adjacency
            if not is_acyclic(graph):
                graph = _break_cycles(graph, scorer)
            scores[k] = scorer.total(graph)
        except Exception as exc:
            raise RuntimeError(f"scoring prior {prior.source!r} failed: {exc}") from exc

    spread = float(scores.std())
    temperature = spread if spread > 0 else 1.0
    shifted = -(scores - scores.min()) / temperature
    raw = np.exp(shifted)
    weights = raw / raw.sum()
    return PriorEnsemble(priors=priors, weights=weights)
