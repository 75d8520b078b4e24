"""Metaphor-paraphrase evaluation: datasets, scoring, rank correlation, reports.

A dataset is JSONL, one triple per line: a metaphorical target fragment, an
apt literal paraphrase, and an inapt one, each with a mean human rating.  A
model scores a triple by composing all three fragments and comparing the
target's similarity to each paraphrase; a triple with any out-of-vocabulary
lemma is excluded whole, as is one whose composition degenerates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .compose import (
    ComposeConfig,
    Fragment,
    Token,
    compose_fragment,
    compose_fragment_vectors,
)
from .errors import DataError, DegenerateCompositionError, OOVError
from .linalg import similarity, von_neumann_entropy

SIM_MODES = ("trace", "frobenius_cosine", "cosine")


@dataclass(frozen=True)
class Triple:
    id: str
    form: str
    target: Fragment
    apt: Fragment
    inapt: Fragment
    human_apt: float
    human_inapt: float

    def __post_init__(self):
        patterns = {self.target.pattern, self.apt.pattern, self.inapt.pattern}
        if len(patterns) != 1:
            raise DataError(
                f"triple {self.id}: fragments mix patterns {sorted(patterns)}")

    def fragments(self):
        return (("target", self.target), ("apt", self.apt), ("inapt", self.inapt))


@dataclass(frozen=True)
class TripleScore:
    triple_id: str
    sim_apt: float
    sim_inapt: float

    @property
    def correct(self) -> bool:
        # an exact tie counts as incorrect
        return self.sim_apt > self.sim_inapt


@dataclass(frozen=True)
class ChangeMatrix:
    """Fourfold table of (verb-baseline correct?, composed correct?)."""

    both: int
    verb_only: int
    composed_only: int
    neither: int

    def as_tuple(self):
        return (self.both, self.verb_only, self.composed_only, self.neither)

    @property
    def total(self) -> int:
        return sum(self.as_tuple())


def _fragment_from_json(obj, form: str, where: str) -> Fragment:
    if not isinstance(obj, dict) or "tokens" not in obj:
        raise DataError(f"{where}: fragment needs a 'tokens' list")
    tokens = []
    for tok in obj["tokens"]:
        if not isinstance(tok, dict):
            raise DataError(f"{where}: token entries must be objects")
        for key in ("surface", "lemma", "role"):
            if key not in tok:
                raise DataError(f"{where}: token missing field '{key}'")
        tokens.append(Token(tok["surface"], tok["lemma"], tok["role"]))
    return Fragment(tuple(tokens), form=form)


def load_triples(path) -> list[Triple]:
    """Parse and validate a JSONL triple dataset; result is ordered by id."""
    triples = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{where}: invalid JSON ({exc})") from exc
            for key in ("id", "form", "human", "target", "apt", "inapt"):
                if key not in obj:
                    raise DataError(f"{where}: missing field '{key}'")
            human = obj["human"]
            if not isinstance(human, dict) or not {"apt", "inapt"} <= set(human):
                raise DataError(f"{where}: 'human' needs 'apt' and 'inapt' ratings")
            for side in ("apt", "inapt"):
                if not isinstance(human[side], (int, float)):
                    raise DataError(f"{where}: human rating '{side}' must be a number")
            if obj["form"] not in ("short", "long"):
                raise DataError(f"{where}: form must be 'short' or 'long'")
            if obj["id"] in seen:
                raise DataError(f"{where}: duplicate id {obj['id']!r}")
            seen.add(obj["id"])
            try:
                triple = Triple(
                    id=obj["id"],
                    form=obj["form"],
                    target=_fragment_from_json(obj["target"], obj["form"], where),
                    apt=_fragment_from_json(obj["apt"], obj["form"], where),
                    inapt=_fragment_from_json(obj["inapt"], obj["form"], where),
                    human_apt=float(human["apt"]),
                    human_inapt=float(human["inapt"]),
                )
            except DataError as exc:
                raise DataError(f"{where}: {exc}") from exc
            triples.append(triple)
    if not triples:
        raise DataError(f"{path}: no triples")
    triples.sort(key=lambda t: t.id)
    return triples


def _fragment_json(fragment: Fragment) -> dict:
    return {"tokens": [
        {"surface": t.surface, "lemma": t.lemma, "role": t.role}
        for t in fragment.tokens
    ]}


def serialize_triples(triples) -> str:
    """Canonical JSONL: fixed key order, compact separators, one per line."""
    lines = []
    for t in triples:
        obj = {
            "id": t.id,
            "form": t.form,
            "human": {"apt": t.human_apt, "inapt": t.human_inapt},
            "target": _fragment_json(t.target),
            "apt": _fragment_json(t.apt),
            "inapt": _fragment_json(t.inapt),
        }
        lines.append(json.dumps(obj, separators=(",", ":")) + "\n")
    return "".join(lines)


def _missing_lemmas(triple: Triple, store, config: ComposeConfig) -> list[str]:
    missing = set()
    for _, fragment in triple.fragments():
        for tok in fragment.content_tokens(config.include_function_words):
            if tok.lemma not in store:
                missing.add(tok.lemma)
    return sorted(missing)


def score_model(triples, store, config: ComposeConfig, sim_mode: str = "trace"):
    """Compose and score each triple; returns (scores, exclusions).

    Any out-of-vocabulary lemma in any of the three fragments excludes the
    whole triple with reason "oov:<lemma>"; degenerate compositions exclude
    with reason "degenerate".
    """
    if sim_mode not in SIM_MODES:
        raise DataError(f"score_model: unknown similarity mode {sim_mode!r}")
    scores: list[TripleScore] = []
    exclusions: list[tuple[str, str]] = []
    for triple in triples:
        missing = _missing_lemmas(triple, store, config)
        if missing:
            exclusions.append((triple.id, "oov:" + ",".join(missing)))
            continue
        try:
            target = compose_fragment(triple.target, store, config)
            apt = compose_fragment(triple.apt, store, config)
            inapt = compose_fragment(triple.inapt, store, config)
        except DegenerateCompositionError:
            exclusions.append((triple.id, "degenerate"))
            continue
        scores.append(TripleScore(
            triple.id,
            similarity(target, apt, sim_mode),
            similarity(target, inapt, sim_mode),
        ))
    return scores, exclusions


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v) / (nu * nv)


def score_model_vectors(triples, vectors, config: ComposeConfig):
    """Vector-baseline scoring: same exclusion rules, cosine similarity."""
    scores: list[TripleScore] = []
    exclusions: list[tuple[str, str]] = []
    for triple in triples:
        missing = _missing_lemmas(triple, vectors, config)
        if missing:
            exclusions.append((triple.id, "oov:" + ",".join(missing)))
            continue
        target = compose_fragment_vectors(triple.target, vectors, config)
        apt = compose_fragment_vectors(triple.apt, vectors, config)
        inapt = compose_fragment_vectors(triple.inapt, vectors, config)
        scores.append(TripleScore(
            triple.id, _cosine(target, apt), _cosine(target, inapt)))
    return scores, exclusions


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        # positions i..j share the mean of ranks i+1..j+1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(xs, ys) -> float:
    """Pearson correlation of average ranks; ties share their mean rank."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("spearman_rho: need two equal-length 1-d sequences")
    if x.size < 2:
        raise DataError("spearman_rho: need at least 2 observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DataError("spearman_rho: undefined for a constant sequence")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    return float((dx @ dy) / math.sqrt((dx @ dx) * (dy @ dy)))


def paraphrase_accuracy(scores, baseline_scores):
    """Accuracy of the scores plus the fourfold change table vs the baseline.

    Both score lists must cover the same triple ids (the verb-only baseline
    is computed on exactly the triples the composed method could score).
    """
    if not scores:
        raise DataError("paraphrase_accuracy: empty score list")
    by_id = {s.triple_id: s for s in baseline_scores}
    if set(by_id) != {s.triple_id for s in scores}:
        raise DataError("paraphrase_accuracy: baseline covers different triples")
    cells = {"both": 0, "verb_only": 0, "composed_only": 0, "neither": 0}
    for s in scores:
        verb_ok = by_id[s.triple_id].correct
        comp_ok = s.correct
        key = ("both" if comp_ok else "verb_only") if verb_ok else (
            "composed_only" if comp_ok else "neither")
        cells[key] += 1
    accuracy = sum(1 for s in scores if s.correct) / len(scores)
    return accuracy, ChangeMatrix(**cells)


@dataclass(frozen=True)
class EntropyReport:
    method: str
    n_fragments: int
    mean_entropy_verb: float
    mean_entropy_composed: float

    @property
    def ratio(self) -> float:
        if self.mean_entropy_verb == 0.0:
            return 1.0 if self.mean_entropy_composed == 0.0 else math.inf
        return self.mean_entropy_composed / self.mean_entropy_verb


def entropy_report(triples, store, config: ComposeConfig) -> EntropyReport:
    """Mean verb entropy vs mean composed entropy over scorable fragments."""
    verb_entropies = []
    composed_entropies = []
    for triple in triples:
        if _missing_lemmas(triple, store, config):
            continue
        for _, fragment in triple.fragments():
            try:
                composed = compose_fragment(fragment, store, config)
            except DegenerateCompositionError:
                continue
            verb = compose_fragment(
                fragment, store, ComposeConfig(method="verb_only"))
            verb_entropies.append(von_neumann_entropy(verb))
            composed_entropies.append(von_neumann_entropy(composed))
    n = len(composed_entropies)
    return EntropyReport(
        method=config.method,
        n_fragments=n,
        mean_entropy_verb=float(np.mean(verb_entropies)) if n else 0.0,
        mean_entropy_composed=float(np.mean(composed_entropies)) if n else 0.0,
    )


@dataclass(frozen=True)
class EvalReport:
    model_id: str
    method: str
    form: str
    sim_mode: str
    n_pairs_total: int
    n_pairs_used: int
    rho: float | None
    rho_apt: float | None
    rho_inapt: float | None
    accuracy: float
    change_matrix: ChangeMatrix
    mean_entropy_verb: float
    mean_entropy_composed: float
    entropy_ratio: float
    excluded: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "model": self.model_id,
            "method": self.method,
            "form": self.form,
            "sim_mode": self.sim_mode,
            "n_pairs_total": self.n_pairs_total,
            "n_pairs_used": self.n_pairs_used,
            "rho": self.rho,
            "rho_apt": self.rho_apt,
            "rho_inapt": self.rho_inapt,
            "accuracy": self.accuracy,
            "change_matrix": {
                "both": self.change_matrix.both,
                "verb_only": self.change_matrix.verb_only,
                "composed_only": self.change_matrix.composed_only,
                "neither": self.change_matrix.neither,
            },
            "mean_entropy_verb": self.mean_entropy_verb,
            "mean_entropy_composed": self.mean_entropy_composed,
            "entropy_ratio": self.entropy_ratio,
            "excluded": [{"id": i, "reason": r} for i, r in self.excluded],
        }


CSV_HEADER = ("model,method,form,sim_mode,n_used,rho,accuracy,"
              "entropy_verb,entropy_composed")


def report_csv_row(report: EvalReport) -> str:
    rho = "" if report.rho is None else f"{report.rho:.6f}"
    return (f"{report.model_id},{report.method},{report.form},{report.sim_mode},"
            f"{report.n_pairs_used},{rho},{report.accuracy:.6f},"
            f"{report.mean_entropy_verb:.6f},{report.mean_entropy_composed:.6f}")


def _maybe_rho(xs, ys):
    try:
        return spearman_rho(xs, ys)
    except DataError:
        return None


def evaluate(triples, store, config: ComposeConfig, sim_mode: str = "trace",
             model_id: str = "model") -> EvalReport:
    """Full evaluation of one store under one composition configuration.

    rho pools apt and inapt pairs (2 per scored triple) against the human
    means; per-category rhos are also reported.  Accuracy is measured against
    the verb-only baseline scored on the same triples.
    """
    triples = list(triples)
    scores, exclusions = score_model(triples, store, config, sim_mode)
    scored_ids = {s.triple_id for s in scores}
    scored_triples = [t for t in triples if t.id in scored_ids]
    human = {t.id: (t.human_apt, t.human_inapt) for t in scored_triples}

    sims, ratings = [], []
    sims_apt, ratings_apt, sims_inapt, ratings_inapt = [], [], [], []
    for s in scores:
        h_apt, h_inapt = human[s.triple_id]
        sims.extend([s.sim_apt, s.sim_inapt])
        ratings.extend([h_apt, h_inapt])
        sims_apt.append(s.sim_apt)
        ratings_apt.append(h_apt)
        sims_inapt.append(s.sim_inapt)
        ratings_inapt.append(h_inapt)

    if config.method == "verb_only":
        baseline = scores
    else:
        baseline, _ = score_model(
            scored_triples, store,
            ComposeConfig(method="verb_only",
                          include_function_words=config.include_function_words),
            sim_mode)
    accuracy, change = paraphrase_accuracy(scores, baseline) if scores else (
        0.0, ChangeMatrix(0, 0, 0, 0))
    entropy = entropy_report(scored_triples, store, config)

    forms = {t.form for t in triples}
    return EvalReport(
        model_id=model_id,
        method=config.method,
        form=forms.pop() if len(forms) == 1 else "mixed",
        sim_mode=sim_mode,
        n_pairs_total=2 * len(triples),
        n_pairs_used=2 * len(scores),
        rho=_maybe_rho(sims, ratings) if len(scores) >= 1 else None,
        rho_apt=_maybe_rho(sims_apt, ratings_apt),
        rho_inapt=_maybe_rho(sims_inapt, ratings_inapt),
        accuracy=accuracy,
        change_matrix=change,
        mean_entropy_verb=entropy.mean_entropy_verb,
        mean_entropy_composed=entropy.mean_entropy_composed,
        entropy_ratio=entropy.ratio,
        excluded=exclusions,
    )
