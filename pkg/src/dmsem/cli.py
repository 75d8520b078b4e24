"""Command-line entry point.

Subcommands cover the whole pipeline: vocabulary building, training,
sense induction, fragment composition, evaluation, entropy reporting,
and model inspection.  Every command is deterministic for a fixed seed
and writes its artifacts atomically (temp file + rename), so reruns of
the same invocation produce byte-identical outputs.

Exit codes: 0 success, 1 usage error, 2 data or I/O error, 3 numeric error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .compose import (
    ComposeConfig,
    Fragment,
    Token,
    check_grammatical,
    compose_fragment,
    fragment_types,
)
from .corpus import build_vocab, iter_sentences
from .errors import DataError, DmsemError, NumericError
from .evaluation import (
    CSV_HEADER,
    entropy_report,
    evaluate,
    load_triples,
    report_csv_row,
)
from .linalg import DensityMatrix, eigendecompose, von_neumann_entropy
from .senses import (
    collect_contexts,
    context2dm,
    contextual2dm,
    load_contextual_instances,
)
from .store import (
    DensityStore,
    SenseStore,
    atomic_write_text,
    load_vectors,
    save_vectors,
)
from .training import TrainConfig, densities_from_table, train

SENSE_SUBDIR = "senses"
VECTORS_NAME = "vectors.txt"
VOCAB_NAME = "vocab.tsv"


class UsageError(Exception):
    """Bad flags or flag combinations; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunPlan:
    """A validated invocation: inputs exist, flags are consistent."""

    command: str
    inputs: tuple[Path, ...]
    outputs: tuple[Path, ...]
    options: argparse.Namespace
    train_config: TrainConfig | None = None
    compose_config: ComposeConfig | None = None
    seed: int | None = None


def build_parser() -> _Parser:
    parser = _Parser(prog="dmsem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("vocab",
                       help="count tokens and write a vocabulary TSV")
    p.add_argument("--corpus", required=True, help="input text, one sentence per line")
    p.add_argument("--out", required=True, help="output TSV path (token<TAB>count)")
    p.add_argument("--min-count", type=int, default=1,
                   help="drop tokens seen fewer times than this (default 1)")

    p = sub.add_parser("train",
                       help="train embeddings or sense matrices on a corpus")
    p.add_argument("--corpus", required=True, help="training text, one sentence per line")
    p.add_argument("--out", required=True, help="output model directory")
    p.add_argument("--variant", choices=["sgns", "word2dm", "ms_word2dm"],
                   default="sgns", help="training objective (default sgns)")
    p.add_argument("--dim", type=int, default=50, help="embedding dimension")
    p.add_argument("--senses", type=int, default=None,
                   help="sense columns per word (density variants only)")
    p.add_argument("--metric", choices=["cosine", "euclidean"], default=None,
                   help="sense-selection metric (density variants only)")
    p.add_argument("--negatives", type=int, default=5,
                   help="negative samples per positive pair")
    p.add_argument("--window", type=int, default=5, help="context window radius")
    p.add_argument("--epochs", type=int, default=5, help="passes over the corpus")
    p.add_argument("--lr", type=float, default=0.025, help="initial learning rate")
    p.add_argument("--lr-end", type=float, default=0.0001, help="final learning rate")
    p.add_argument("--min-count", type=int, default=1,
                   help="drop tokens seen fewer times than this")
    sub_group = p.add_mutually_exclusive_group()
    sub_group.add_argument("--subsample", type=float, default=1e-5,
                           help="frequent-word subsampling threshold (default 1e-5)")
    sub_group.add_argument("--no-subsample", action="store_true",
                           help="disable frequent-word subsampling")
    p.add_argument("--seed", type=int, default=1, help="random seed (u64)")
    p.add_argument("--threads", type=int, default=1,
                   help="1 (the default) is the deterministic path; training "
                        "currently always runs single-threaded")

    p = sub.add_parser("context2dm",
                       help="build density matrices by clustering context vectors")
    p.add_argument("--corpus", required=True, help="text the contexts are drawn from")
    p.add_argument("--vectors", required=True, help="word vectors, text format")
    p.add_argument("--words", required=True,
                   help="comma-separated words to build matrices for")
    p.add_argument("--out", required=True, help="output density store directory")
    p.add_argument("--window", type=int, default=5, help="context window radius")
    p.add_argument("--k-min", type=int, default=2, help="fewest sense clusters to try")
    p.add_argument("--k-max", type=int, default=10, help="most sense clusters to try")
    p.add_argument("--per-occurrence", action="store_true",
                   help="keep one context vector per co-occurrence instead of "
                        "one per context type")

    p = sub.add_parser("contextual2dm",
                       help="build density matrices from contextual instance vectors")
    p.add_argument("--instances", required=True,
                   help='JSONL of {"word": ..., "vector": [...]}')
    p.add_argument("--out", required=True, help="output density store directory")
    p.add_argument("--method", choices=["pca", "svd"], default="pca",
                   help="axis extraction (default pca; svd skips centering)")
    p.add_argument("--dim-out", type=int, default=2,
                   help="number of principal axes to keep (default 2)")

    p = sub.add_parser("compose",
                       help="compose one fragment and print its spectrum")
    _add_compose_flags(p)
    p.add_argument("--tokens", required=True,
                   help='comma-separated lemma:role pairs, e.g. "idea:subj,blossom:verb"')
    p.add_argument("--form", choices=["short", "long"], default="short",
                   help="fragment form label (default short)")
    p.add_argument("--check-types", action="store_true",
                   help="also run the pregroup type reduction")

    p = sub.add_parser("eval",
                       help="score a paraphrase dataset and write a report")
    _add_compose_flags(p)
    p.add_argument("--dataset", required=True, help="triples, JSONL")
    p.add_argument("--sim", choices=["trace", "cosine"], default="trace",
                   help="similarity mode (default trace)")
    p.add_argument("--report", default=None, help="write the full report as JSON")
    p.add_argument("--csv", default=None, help="write a one-row CSV summary")
    p.add_argument("--model-id", default=None,
                   help="model name used in reports (default: model directory name)")

    p = sub.add_parser("entropy",
                       help="report verb vs composed entropy over a dataset")
    _add_compose_flags(p)
    p.add_argument("--dataset", required=True, help="triples, JSONL")
    p.add_argument("--report", default=None, help="write the report as JSON")

    p = sub.add_parser("inspect",
                       help="print a stored word's eigenvalue spectrum and entropy")
    p.add_argument("--model", required=True, help="density store directory")
    p.add_argument("--word", required=True, help="word to inspect")
    p.add_argument("--top", type=int, default=10,
                   help="eigenvalues to print (default 10)")

    return parser


def _add_compose_flags(p) -> None:
    p.add_argument("--model", required=True, help="density store directory")
    p.add_argument("--method",
                   choices=["verb_only", "add", "mult", "fuzz", "phaser"],
                   required=True, help="composition operator")
    p.add_argument("--operator-side", choices=["verb", "noun"], default=None,
                   help="which word acts as the operator (fuzz/phaser only)")
    p.add_argument("--include-function-words", action="store_true",
                   help="give function words matrices instead of skipping them")


_INPUT_FLAGS = ("corpus", "vectors", "dataset", "instances", "model")
_OUTPUT_FLAGS = ("out", "report", "csv")


def parse_invocation(argv) -> RunPlan:
    """Parse argv into a validated RunPlan or raise UsageError/DataError."""
    if not argv:
        raise UsageError("dmsem: a subcommand is required (see --help)")
    parser = build_parser()
    args = parser.parse_args(list(argv))
    if args.command is None:
        raise UsageError("dmsem: a subcommand is required (see --help)")

    train_config = None
    compose_config = None
    if args.command == "train":
        if args.variant == "sgns":
            for flag, name in ((args.senses, "--senses"), (args.metric, "--metric")):
                if flag is not None:
                    raise UsageError(
                        f"dmsem train: {name} conflicts with --variant sgns")
        if args.threads < 1:
            raise UsageError("dmsem train: --threads must be >= 1")
        if not 0 <= args.seed < 2 ** 64:
            raise UsageError("dmsem train: --seed must fit in 64 bits")
        threshold = None if args.no_subsample else args.subsample
        try:
            train_config = TrainConfig(
                dim=args.dim,
                senses=args.senses if args.senses is not None else 5,
                negatives=args.negatives,
                window=args.window,
                lr_start=args.lr,
                lr_end=args.lr_end,
                epochs=args.epochs,
                seed=args.seed,
                sense_metric=args.metric if args.metric is not None else "cosine",
                variant=args.variant,
                min_count=args.min_count,
                subsample_threshold=threshold,
            )
        except (DataError, ValueError) as exc:
            raise UsageError(f"dmsem train: {exc}") from exc
    elif args.command in ("compose", "eval", "entropy"):
        if args.operator_side is not None and args.method not in ("fuzz", "phaser"):
            raise UsageError(
                f"dmsem {args.command}: --operator-side conflicts with "
                f"--method {args.method}")
        compose_config = ComposeConfig(
            method=args.method,
            operator_side=args.operator_side or "verb",
            include_function_words=args.include_function_words,
        )

    inputs = tuple(Path(getattr(args, f)) for f in _INPUT_FLAGS
                   if getattr(args, f, None) is not None)
    outputs = tuple(Path(getattr(args, f)) for f in _OUTPUT_FLAGS
                    if getattr(args, f, None) is not None)
    for path in inputs:
        if not path.exists():
            raise DataError(f"{path}: no such file or directory")

    return RunPlan(command=args.command, inputs=inputs, outputs=outputs,
                   options=args, train_config=train_config,
                   compose_config=compose_config,
                   seed=getattr(args, "seed", None))


def execute(plan: RunPlan) -> int:
    """Run a validated plan; returns the process exit status."""
    for out in plan.outputs:
        parent = out.parent
        if parent and not parent.exists():
            parent.mkdir(parents=True, exist_ok=True)
    runner = _RUNNERS[plan.command]
    return runner(plan.options, plan)


def _run_vocab(args, plan: RunPlan) -> int:
    sentences = list(iter_sentences(args.corpus))
    vocab = build_vocab(sentences, min_count=args.min_count)
    text = "".join(f"{t}\t{c}\n" for t, c in zip(vocab.tokens, vocab.counts))
    atomic_write_text(args.out, text)
    print(f"vocab: {len(vocab)} types, {vocab.total_count} tokens -> {args.out}")
    return 0


def _run_train(args, plan: RunPlan) -> int:
    config = plan.train_config
    table = train(args.corpus, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    vocab = table.vocab
    atomic_write_text(out / VOCAB_NAME,
                      "".join(f"{t}\t{c}\n" for t, c in zip(vocab.tokens, vocab.counts)))
    if config.variant == "sgns":
        save_vectors(out / VECTORS_NAME, vocab.tokens, table.targets)
        items = []
        for word in vocab.tokens:
            v = table.vector(word)
            norm = np.linalg.norm(v)
            if norm == 0.0:
                continue
            items.append((word, DensityMatrix.pure(v / norm)))
    else:
        SenseStore(config.dim, config.senses, vocab.tokens,
                   table.senses).save(out / SENSE_SUBDIR)
        items = densities_from_table(table)
    store = DensityStore.from_matrices(items)
    store.save(out)
    print(f"trained {config.variant}: {len(store.words)} words, "
          f"dim {config.dim}, {config.epochs} epochs -> {out}")
    return 0


def _run_context2dm(args, plan: RunPlan) -> int:
    words = sorted({w for w in args.words.split(",") if w})
    if not words:
        raise UsageError("dmsem context2dm: --words is empty")
    names, matrix = load_vectors(args.vectors)
    vectors = dict(zip(names, matrix))
    sentences = list(iter_sentences(args.corpus))
    items = []
    for word in words:
        ctx = collect_contexts(sentences, vectors, word, window=args.window,
                               dedupe=not args.per_occurrence)
        items.append((word, context2dm(ctx, k_min=args.k_min, k_max=args.k_max)))
    store = DensityStore.from_matrices(items)
    store.save(args.out)
    print(f"context2dm: {len(items)} words, dim {store.dim} -> {args.out}")
    return 0


def _run_contextual2dm(args, plan: RunPlan) -> int:
    grouped = load_contextual_instances(args.instances)
    items = [(word, contextual2dm(grouped[word], method=args.method,
                                  d_out=args.dim_out))
             for word in sorted(grouped)]
    store = DensityStore.from_matrices(items)
    store.save(args.out)
    print(f"contextual2dm ({args.method}): {len(items)} words, "
          f"dim {store.dim} -> {args.out}")
    return 0


def _parse_tokens(spec: str) -> Fragment:
    tokens = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        lemma, sep, role = part.partition(":")
        if not sep or not lemma or not role:
            raise UsageError(
                f'dmsem compose: bad token {part!r} (expected "lemma:role")')
        tokens.append(Token(surface=lemma, lemma=lemma, role=role))
    if not tokens:
        raise UsageError("dmsem compose: --tokens is empty")
    return Fragment(tuple(tokens), form="short")


def _run_compose(args, plan: RunPlan) -> int:
    fragment = _parse_tokens(args.tokens)
    if args.form != fragment.form:
        fragment = Fragment(fragment.tokens, form=args.form)
    store = DensityStore.load(args.model)
    print(f"fragment: {fragment.text()} (pattern {fragment.pattern}, "
          f"form {fragment.form})")
    if args.check_types:
        types = fragment_types(fragment)
        result = check_grammatical(fragment)
        joined = "  ".join(str(t) for t in types)
        print(f"types: {joined} -> {result}")
    composed = compose_fragment(fragment, store, plan.compose_config)
    _print_spectrum(composed, top=8)
    return 0


def _print_spectrum(matrix: DensityMatrix, top: int) -> None:
    system = eigendecompose(matrix)
    values = np.sort(system.eigenvalues)[::-1]
    shown = " ".join(f"{v:.6f}" for v in values[:top])
    suffix = " ..." if values.size > top else ""
    print(f"entropy: {von_neumann_entropy(matrix):.6f} nats")
    print(f"eigenvalues: {shown}{suffix}")


def _run_eval(args, plan: RunPlan) -> int:
    triples = load_triples(args.dataset)
    store = DensityStore.load(args.model)
    model_id = args.model_id or Path(args.model).name or "model"
    report = evaluate(triples, store, plan.compose_config, sim_mode=args.sim,
                      model_id=model_id)

    print(f"model: {report.model_id}  method: {report.method}  "
          f"sim: {report.sim_mode}  form: {report.form}")
    print(f"pairs: {report.n_pairs_used}/{report.n_pairs_total} used "
          f"({len(report.excluded)} triples excluded)")
    rho = "n/a" if report.rho is None else f"{report.rho:.4f}"
    print(f"rho: {rho}")
    cm = report.change_matrix
    print(f"accuracy: {report.accuracy:.4f} (relative to verb only: "
          f"both {cm.both}, verb_only {cm.verb_only}, "
          f"composed_only {cm.composed_only}, neither {cm.neither})")
    print(f"entropy verb -> composed: {report.mean_entropy_verb:.4f} -> "
          f"{report.mean_entropy_composed:.4f} (ratio {report.entropy_ratio:.4f})")
    for triple_id, reason in report.excluded:
        print(f"excluded: {triple_id} ({reason})")

    if args.report is not None:
        atomic_write_text(args.report, _report_json(report.to_json_dict()))
        print(f"report -> {args.report}")
    if args.csv is not None:
        atomic_write_text(args.csv, CSV_HEADER + "\n" + report_csv_row(report) + "\n")
        print(f"csv -> {args.csv}")
    return 0


def _run_entropy(args, plan: RunPlan) -> int:
    triples = load_triples(args.dataset)
    store = DensityStore.load(args.model)
    report = entropy_report(triples, store, plan.compose_config)
    print(f"method: {report.method}  fragments: {report.n_fragments}")
    print(f"mean verb entropy: {report.mean_entropy_verb:.6f} nats")
    print(f"mean composed entropy: {report.mean_entropy_composed:.6f} nats")
    print(f"ratio: {report.ratio:.6f}")
    if args.report is not None:
        payload = {
            "method": report.method,
            "n_fragments": report.n_fragments,
            "mean_entropy_verb": report.mean_entropy_verb,
            "mean_entropy_composed": report.mean_entropy_composed,
            "ratio": report.ratio,
        }
        atomic_write_text(args.report, _report_json(payload))
        print(f"report -> {args.report}")
    return 0


def _run_inspect(args, plan: RunPlan) -> int:
    store = DensityStore.load(args.model)
    matrix = store.matrix(args.word)
    print(f"word: {args.word} (dim {store.dim})")
    _print_spectrum(matrix, top=args.top)
    return 0


def _report_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


_RUNNERS = {
    "vocab": _run_vocab,
    "train": _run_train,
    "context2dm": _run_context2dm,
    "contextual2dm": _run_contextual2dm,
    "compose": _run_compose,
    "eval": _run_eval,
    "entropy": _run_entropy,
    "inspect": _run_inspect,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        plan = parse_invocation(argv)
        return execute(plan)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DmsemError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
