"""Composition of density matrices along simple grammatical patterns.

Four binary operators (add, mult, fuzz, phaser) plus a verb-only baseline,
applied to subject-verb, verb-object, and subject-verb-object fragments with
the nesting (subj (verb (adj obj))).  A minimal pregroup checker decides
grammaticality of the corresponding type sequences.

Cancellation of pregroup types is not confluent step-by-step (a locally
greedy cancellation can strand a sequence that another order fully reduces),
so the checker searches all cancellation orders with a cubic dynamic program
and returns a canonical result: grammatical if any order reaches exactly
[s], otherwise the minimal residual (shortest, then lexicographically
smallest).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    DataError,
    DegenerateCompositionError,
    DimensionMismatchError,
    OOVError,
)
from .linalg import DensityMatrix, eigendecompose, psd_sqrt

METHODS = ("add", "mult", "fuzz", "phaser", "verb_only")
OPERATOR_SIDES = ("verb", "noun")
ROLES = ("subj", "verb", "obj", "adj", "function")

COMPOSE_TRACE_TOL = 1e-12


# ---------------------------------------------------------------------------
# pregroup types


class SimpleType(NamedTuple):
    base: str  # "n" or "s"
    adjoint: int  # -1 left, 0 none, +1 right

    def __str__(self) -> str:
        return self.base + {-1: "^l", 0: "", 1: "^r"}[self.adjoint]


_ADJOINT_SUFFIX = {"l": -1, "r": 1}


def _parse_simple(text: str) -> SimpleType:
    base, _, suffix = text.partition("^")
    if base not in ("n", "s") or (suffix and suffix not in _ADJOINT_SUFFIX):
        raise DataError(f"bad pregroup type {text!r}")
    return SimpleType(base, _ADJOINT_SUFFIX.get(suffix, 0))


@dataclass(frozen=True)
class PregroupType:
    """A word's type: a nonempty product of simple types, e.g. n^r s n^l."""

    simples: tuple[SimpleType, ...]

    def __post_init__(self):
        if not self.simples:
            raise DataError("PregroupType: empty type")

    @classmethod
    def parse(cls, text: str) -> "PregroupType":
        parts = text.split()
        if not parts:
            raise DataError("PregroupType: empty type string")
        return cls(tuple(_parse_simple(p) for p in parts))

    def __str__(self) -> str:
        return " ".join(str(s) for s in self.simples)


_SENTENCE = SimpleType("s", 0)


def _cancels(a: SimpleType, b: SimpleType) -> bool:
    # x^z followed by x^(z+1) collapses: covers x^l x and x x^r
    return a.base == b.base and b.adjoint == a.adjoint + 1


@dataclass(frozen=True)
class ReductionResult:
    grammatical: bool
    residual: tuple[SimpleType, ...]

    def __str__(self) -> str:
        body = " ".join(str(s) for s in self.residual) or "1"
        return body if self.grammatical else f"ungrammatical: {body}"


def pregroup_reduce(types: Sequence[PregroupType]) -> ReductionResult:
    """Reduce a concatenation of word types by adjacent-pair cancellation.

    Grammatical iff some cancellation order leaves exactly [s].  The reported
    residual is canonical over all orders, so the outcome does not depend on
    how the reduction happened to proceed.
    """
    if not types:
        raise DataError("pregroup_reduce: empty type list")
    seq = tuple(s for t in types for s in t.simples)
    n = len(seq)

    # vanish[i][j]: the span [i, j) cancels away completely
    vanish = [[False] * (n + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        vanish[i][i] = True
    for span in range(2, n + 1, 2):
        for i in range(n - span + 1):
            j = i + span
            vanish[i][j] = any(
                _cancels(seq[i], seq[k]) and vanish[i + 1][k] and vanish[k + 1][j]
                for k in range(i + 1, j, 2)
            )

    grammatical = any(
        seq[p] == _SENTENCE and vanish[0][p] and vanish[p + 1][n] for p in range(n)
    )
    if grammatical:
        return ReductionResult(True, (_SENTENCE,))

    # minimal reachable residual: keep a position, or drop a vanishing span
    def smaller(a, b):
        return (len(a), a) < (len(b), b)

    best: list[tuple[SimpleType, ...]] = [()] * (n + 1)
    for j in range(1, n + 1):
        cand = best[j - 1] + (seq[j - 1],)
        for i in range(j - 2, -1, -2):
            if vanish[i][j] and smaller(best[i], cand):
                cand = best[i]
        best[j] = cand
    return ReductionResult(False, best[n])


DEFAULT_TYPE_LEXICON = {
    "subj": "n",
    "obj": "n",
    "noun": "n",
    "adj": "n n^l",
    "verb_sv": "n^r s",
    "verb_vo": "s n^l",
    "verb_svo": "n^r s n^l",
}


def load_type_lexicon(path) -> dict[str, str]:
    """TSV `role<TAB>type`; entries override the defaults."""
    lexicon = dict(DEFAULT_TYPE_LEXICON)
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected role<TAB>type")
        PregroupType.parse(parts[1])  # validate early
        lexicon[parts[0]] = parts[1]
    return lexicon


# ---------------------------------------------------------------------------
# fragments


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    role: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise DataError(f"token {self.surface!r}: unknown role {self.role!r}")


@dataclass(frozen=True)
class Fragment:
    """An annotated SV / VO / SVO fragment; function words are padding."""

    tokens: tuple[Token, ...]
    form: str = "short"

    def __post_init__(self):
        if self.form not in ("short", "long"):
            raise DataError(f"Fragment: unknown form {self.form!r}")
        verbs = [t for t in self.tokens if t.role == "verb"]
        if len(verbs) != 1:
            raise DataError(f"Fragment: need exactly one verb, got {len(verbs)}")
        for role in ("subj", "obj"):
            if sum(t.role == role for t in self.tokens) > 1:
                raise DataError(f"Fragment: more than one {role} token")
        if self.pattern is None:
            raise DataError("Fragment: need a subject or an object (SV/VO/SVO)")

    @property
    def verb(self) -> Token:
        return next(t for t in self.tokens if t.role == "verb")

    @property
    def pattern(self) -> str | None:
        has_subj = any(t.role == "subj" for t in self.tokens)
        has_obj = any(t.role == "obj" for t in self.tokens)
        if has_subj and has_obj:
            return "svo"
        if has_subj:
            return "sv"
        if has_obj:
            return "vo"
        return None

    def content_tokens(self, include_function_words: bool = False) -> list[Token]:
        skip = () if include_function_words else ("function",)
        return [t for t in self.tokens if t.role not in skip]

    def text(self) -> str:
        return " ".join(t.surface for t in self.tokens)


def fragment_types(fragment: Fragment, lexicon: Mapping[str, str] | None = None
                   ) -> list[PregroupType]:
    """Pregroup types for the fragment's typed tokens, in order.

    Function words carry no type here; the checker covers the core pattern
    only.  Adjectives and nouns use their fixed types; the verb's type
    follows the fragment pattern.
    """
    lex = dict(DEFAULT_TYPE_LEXICON)
    if lexicon:
        lex.update(lexicon)
    out = []
    for tok in fragment.tokens:
        if tok.role in ("subj", "obj"):
            out.append(PregroupType.parse(lex["subj" if tok.role == "subj" else "obj"]))
        elif tok.role == "adj":
            out.append(PregroupType.parse(lex["adj"]))
        elif tok.role == "verb":
            out.append(PregroupType.parse(lex[f"verb_{fragment.pattern}"]))
    return out


def check_grammatical(fragment: Fragment, lexicon: Mapping[str, str] | None = None
                      ) -> ReductionResult:
    return pregroup_reduce(fragment_types(fragment, lexicon))


# ---------------------------------------------------------------------------
# composition


@dataclass(frozen=True)
class ComposeConfig:
    method: str = "add"
    operator_side: str = "verb"  # ignored for add/mult/verb_only
    include_function_words: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"ComposeConfig: unknown method {self.method!r}")
        if self.operator_side not in OPERATOR_SIDES:
            raise DataError(f"ComposeConfig: unknown operator_side {self.operator_side!r}")


def _renormalized(raw: np.ndarray, method: str) -> DensityMatrix:
    trace = float(np.trace(raw))
    if trace < COMPOSE_TRACE_TOL:
        raise DegenerateCompositionError(
            f"{method}: output trace {trace:.3e} below {COMPOSE_TRACE_TOL:.0e} "
            "(operator and argument have disjoint support)"
        )
    return DensityMatrix(raw)


def compose_pair(operator: DensityMatrix, argument: DensityMatrix, method: str
                 ) -> DensityMatrix:
    """One binary composition step; the result is renormalized to trace 1."""
    if operator.dim != argument.dim:
        raise DimensionMismatchError(
            f"compose_pair: dims {operator.dim} vs {argument.dim}"
        )
    a, b = operator.data, argument.data
    if method == "add":
        return DensityMatrix(a + b)
    if method == "mult":
        return _renormalized(a * b, method)
    if method == "fuzz":
        out = np.zeros_like(b)
        for value, basis in eigendecompose(operator).eigenspaces:
            projector = basis @ basis.T
            out += value * (projector @ b @ projector)
        return _renormalized(out, method)
    if method == "phaser":
        root = psd_sqrt(a)
        return _renormalized(root @ b @ root, method)
    raise DataError(f"compose_pair: unknown method {method!r}")


def _lookup(matrices, lemma: str):
    if hasattr(matrices, "matrix"):
        return matrices.matrix(lemma)
    return matrices[lemma]


def _attach_modifiers(fragment: Fragment, include_function_words: bool
                      ) -> dict[int, list[Token]]:
    """Map head position -> modifier tokens, nearest modifier last.

    Adjectives (and, if included, function words) attach to the next subject
    or object; trailing modifiers fall back to the previous one, then to the
    verb.
    """
    tokens = fragment.tokens
    heads = {i for i, t in enumerate(tokens) if t.role in ("subj", "obj")}
    verb_pos = next(i for i, t in enumerate(tokens) if t.role == "verb")
    attach: dict[int, list[Token]] = {}
    mod_roles = ("adj", "function") if include_function_words else ("adj",)
    for i, tok in enumerate(tokens):
        if tok.role not in mod_roles:
            continue
        following = [h for h in heads if h > i]
        preceding = [h for h in heads if h < i]
        head = min(following) if following else (max(preceding) if preceding else verb_pos)
        attach.setdefault(head, []).append(tok)
    return attach


def compose_fragment(fragment: Fragment, matrices, config: ComposeConfig
                     ) -> DensityMatrix:
    """Compose a fragment into one density matrix.

    add/mult combine all included words n-ary with a single renormalization;
    fuzz/phaser nest per (subj (verb (adj obj))) with the configured side
    (verb or noun) acting as operator at verb-noun steps.  Adjectives always
    operate on their noun.
    """
    included = fragment.content_tokens(config.include_function_words)
    missing = sorted({t.lemma for t in included if t.lemma not in matrices})
    if missing:
        raise OOVError(missing)

    if config.method == "verb_only":
        return _lookup(matrices, fragment.verb.lemma)

    if config.method in ("add", "mult"):
        raws = [_lookup(matrices, t.lemma).data for t in included]
        combined = raws[0].copy()
        for raw in raws[1:]:
            combined = combined + raw if config.method == "add" else combined * raw
        return _renormalized(combined, config.method)

    # fuzz / phaser: build noun phrases, then nest
    attach = _attach_modifiers(fragment, config.include_function_words)
    tokens = fragment.tokens

    def phrase(position: int) -> DensityMatrix:
        acc = _lookup(matrices, tokens[position].lemma)
        for modifier in reversed(attach.get(position, [])):
            acc = compose_pair(_lookup(matrices, modifier.lemma), acc, config.method)
        return acc

    positions = {t.role: i for i, t in enumerate(tokens) if t.role in ("subj", "obj")}
    verb_matrix = phrase(next(i for i, t in enumerate(tokens) if t.role == "verb"))

    def step(verb_side: DensityMatrix, noun_side: DensityMatrix) -> DensityMatrix:
        if config.operator_side == "verb":
            return compose_pair(verb_side, noun_side, config.method)
        return compose_pair(noun_side, verb_side, config.method)

    if fragment.pattern == "svo":
        vo = step(verb_matrix, phrase(positions["obj"]))
        return step(vo, phrase(positions["subj"]))
    if fragment.pattern == "vo":
        return step(verb_matrix, phrase(positions["obj"]))
    return step(verb_matrix, phrase(positions["subj"]))


def compose_fragment_vectors(fragment: Fragment, vectors: Mapping[str, np.ndarray],
                             config: ComposeConfig) -> np.ndarray:
    """Vector-space analogue for baselines: add, mult, or verb_only."""
    if config.method not in ("add", "mult", "verb_only"):
        raise DataError(f"vector composition supports add/mult/verb_only, "
                        f"not {config.method!r}")
    included = fragment.content_tokens(config.include_function_words)
    missing = sorted({t.lemma for t in included if t.lemma not in vectors})
    if missing:
        raise OOVError(missing)
    if config.method == "verb_only":
        return np.asarray(vectors[fragment.verb.lemma], dtype=np.float64)
    out = np.asarray(vectors[included[0].lemma], dtype=np.float64).copy()
    for tok in included[1:]:
        vec = np.asarray(vectors[tok.lemma], dtype=np.float64)
        out = out + vec if config.method == "add" else out * vec
    return out
