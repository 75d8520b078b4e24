"""Acceptance suite: nine end-to-end criteria, one verdict line each.

Each test prints `[PASS]`/`[FAIL] acceptance N: ...` directly to the
terminal (bypassing capture) so a full run leaves a one-line audit trail
per criterion, then asserts.
"""
import itertools
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg

from dmsem.cli import main as cli_main
from dmsem.compose import (
    ComposeConfig,
    PregroupType,
    SimpleType,
    compose_pair,
    pregroup_reduce,
)
from dmsem.corpus import ContextPair
from dmsem.evaluation import (
    ChangeMatrix,
    entropy_report,
    evaluate,
    load_triples,
    score_model,
    spearman_rho,
)
from dmsem.linalg import DensityMatrix, similarity, von_neumann_entropy
from dmsem.store import DensityStore
from dmsem.training import (
    EmbeddingTable,
    SenseTable,
    TrainConfig,
    finalize_density,
    ms_word2dm_step,
    select_sense,
    sgns_step,
    train,
)

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def verdict(capsys):
    def emit(number: int, description: str, failures: list):
        tag = "PASS" if not failures else "FAIL"
        with capsys.disabled():
            print(f"[{tag}] acceptance {number}: {description}", flush=True)
        assert not failures, f"acceptance {number}: " + "; ".join(failures)

    return emit


def random_density(rng, d: int) -> DensityMatrix:
    m = rng.standard_normal((d, d))
    a = m @ m.T + 1e-6 * np.eye(d)
    return DensityMatrix(a / np.trace(a))


def test_criterion_1_composition_invariants(verdict):
    rng = np.random.default_rng(4101)
    failures = []
    start = time.monotonic()
    for _ in range(1000):
        d = int(rng.integers(2, 17))
        a, b = random_density(rng, d), random_density(rng, d)
        for method in ("add", "mult", "fuzz", "phaser"):
            out = compose_pair(a, b, method).data
            sym = float(np.max(np.abs(out - out.T)))
            min_eig = float(np.linalg.eigvalsh(out).min())
            tr = abs(float(np.trace(out)) - 1.0)
            if sym > 1e-10:
                failures.append(f"{method} d={d}: asymmetry {sym:.2e}")
            if min_eig < -1e-8:
                failures.append(f"{method} d={d}: eigenvalue {min_eig:.2e}")
            if tr > 1e-12:
                failures.append(f"{method} d={d}: trace off by {tr:.2e}")
            if failures:
                break
        if failures:
            break
    elapsed = time.monotonic() - start
    if elapsed >= 30.0:
        failures.append(f"runtime {elapsed:.1f}s >= 30s")
    verdict(1, "composition keeps symmetric PSD trace-1 "
               "(1000 random pairs, d 2..16, under 30 s)", failures)


def _fuzz_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(a)
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        if groups and abs(v - values[groups[-1][0]]) <= 1e-8 * max(
                abs(values).max(), 1.0):
            groups[-1].append(i)
        else:
            groups.append([i])
    out = np.zeros_like(a)
    for idx in groups:
        p = vectors[:, idx] @ vectors[:, idx].T
        out += np.mean(values[idx]) * (p @ b @ p)
    return out / np.trace(out)


def _phaser_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    root = scipy.linalg.sqrtm(a).real
    out = root @ b @ root
    return out / np.trace(out)


def test_criterion_2_operator_oracles(verdict):
    rng = np.random.default_rng(4202)
    failures = []
    for i in range(200):
        a, b = random_density(rng, 6), random_density(rng, 6)
        fuzz = compose_pair(a, b, "fuzz").data
        phaser = compose_pair(a, b, "phaser").data
        df = float(np.linalg.norm(fuzz - _fuzz_oracle(a.data, b.data)))
        dp = float(np.linalg.norm(phaser - _phaser_oracle(a.data, b.data)))
        if df > 1e-8:
            failures.append(f"pair {i}: fuzz off oracle by {df:.2e}")
        if dp > 1e-8:
            failures.append(f"pair {i}: phaser off oracle by {dp:.2e}")
        if failures:
            break

    # planted degenerate eigenspace: re-mixing its basis must not move fuzz
    for i in range(20):
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        values = np.array([0.3, 0.3, 0.2, 0.1, 0.06, 0.04])
        a1 = DensityMatrix(q @ np.diag(values) @ q.T)
        theta = rng.uniform(0, 2 * np.pi)
        rot = np.eye(6)
        rot[:2, :2] = [[np.cos(theta), -np.sin(theta)],
                       [np.sin(theta), np.cos(theta)]]
        q2 = q @ rot
        a2 = DensityMatrix(q2 @ np.diag(values) @ q2.T)
        b = random_density(rng, 6)
        gap = float(np.linalg.norm(compose_pair(a1, b, "fuzz").data
                                   - compose_pair(a2, b, "fuzz").data))
        if gap > 1e-8:
            failures.append(f"remix {i}: fuzz moved by {gap:.2e}")
            break
    verdict(2, "fuzz and phaser match brute-force oracles; fuzz ignores "
               "degenerate-basis choice", failures)


def test_criterion_3_analytic_constants(verdict):
    failures = []
    for d in range(2, 65):
        h = von_neumann_entropy(DensityMatrix.maximally_mixed(d))
        if abs(h - math.log(d)) > 1e-10:
            failures.append(f"entropy(I/{d}) off by {abs(h - math.log(d)):.2e}")
        mixed = DensityMatrix.maximally_mixed(d)
        if abs(similarity(mixed, mixed) - 1.0 / d) > 1e-12:
            failures.append(f"self-similarity of I/{d} not 1/{d}")
    rng = np.random.default_rng(4303)
    for _ in range(50):
        d = int(rng.integers(2, 33))
        v = rng.standard_normal(d)
        h = von_neumann_entropy(DensityMatrix.pure(v))
        if h > 1e-10:
            failures.append(f"pure-state entropy {h:.2e}")
            break
    verdict(3, "entropy(I/d)=ln d, Tr self-similarity of I/n is 1/n, "
               "pure states carry zero entropy", failures)


def _central_diff(objective, params: np.ndarray, h: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(params)
    for i in range(params.size):
        step = np.zeros_like(params)
        step[i] = h
        grad[i] = (objective(params + step) - objective(params - step)) / (2 * h)
    return grad


def _block_errors(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = max(float(np.linalg.norm(numeric)), 1e-12)
    return float(np.linalg.norm(analytic - numeric)) / denom


def test_criterion_4_gradient_checks(verdict):
    rng = np.random.default_rng(4404)
    failures = []
    logistic = lambda x: 1.0 / (1.0 + np.exp(-x))

    from dmsem.corpus import Vocabulary
    words = [f"w{i}" for i in range(12)]
    vocab = Vocabulary([(w, 10) for w in words])

    for trial in range(100):
        d = 7
        targets = rng.standard_normal((12, d))
        contexts = rng.standard_normal((12, d))
        table = EmbeddingTable(vocab, targets.copy(), contexts.copy())
        ids = rng.permutation(12)[:4]
        t, c, n1, n2 = (int(i) for i in ids)
        negs = np.array([n1, n2])

        def objective_sgns(params, d=d, t=t, c=c, negs=negs):
            tv, cv, nv = (params[:d], params[d:2 * d],
                          params[2 * d:].reshape(2, d))
            val = math.log(logistic(tv @ cv))
            for k in range(2):
                val += math.log(logistic(-(tv @ nv[k])))
            return val

        base = np.concatenate([targets[t], contexts[c], contexts[negs].ravel()])
        lr = 1.0
        sgns_step(table, ContextPair(t, np.array([c])), negs, lr)
        analytic = np.concatenate([
            (table.targets[t] - targets[t]) / lr,
            (table.contexts[c] - contexts[c]) / lr,
            ((table.contexts[negs] - contexts[negs]) / lr).ravel(),
        ])
        err = _block_errors(analytic, _central_diff(objective_sgns, base))
        if err > 1e-6:
            failures.append(f"sgns trial {trial}: gradient error {err:.2e}")
            break

    m = 3
    for trial in range(100):
        d = 6
        senses = rng.standard_normal((12, d, m))
        contexts = rng.standard_normal((12, d))
        table = SenseTable(vocab, senses.copy(), contexts.copy())
        ids = rng.permutation(12)[:5]
        t, c1, c2, n1, n2 = (int(i) for i in ids)
        ctx = np.array([c1, c2])
        negs = np.array([n1, n2])
        c_t = contexts[c1] + contexts[c2]
        j = select_sense(senses[t], c_t, "cosine")

        before = senses[t].copy()
        ms_word2dm_step(table, t, ctx, negs, lr=1.0, metric="cosine")
        for col in range(m):
            if col != j and (table.senses[t][:, col].tobytes()
                             != before[:, col].tobytes()):
                failures.append(f"ms trial {trial}: column {col} moved")

        def objective_ms(params, d=d, j=j):
            b, v1, v2, nv = (params[:d], params[d:2 * d], params[2 * d:3 * d],
                             params[3 * d:].reshape(2, d))
            val = math.log(logistic(b @ (v1 + v2)))
            for k in range(2):
                val += math.log(logistic(-(b @ nv[k])))
            return val

        base = np.concatenate([senses[t][:, j], contexts[c1], contexts[c2],
                               contexts[negs].ravel()])
        analytic = np.concatenate([
            table.senses[t][:, j] - senses[t][:, j],
            table.contexts[c1] - contexts[c1],
            table.contexts[c2] - contexts[c2],
            (table.contexts[negs] - contexts[negs]).ravel(),
        ])
        err = _block_errors(analytic, _central_diff(objective_ms, base))
        if err > 1e-6:
            failures.append(f"ms trial {trial}: gradient error {err:.2e}")
        if failures:
            break
    verdict(4, "analytic gradients match central differences (100 cases "
               "each); unselected sense columns stay bitwise intact", failures)


def _planted_corpus(seed: int, n_sentences: int = 20000, length: int = 10):
    rng = np.random.default_rng(seed)
    topic = {0: [f"mus{i}" for i in range(15)],
             1: [f"fish{i}" for i in range(15)]}
    filler = [f"any{i}" for i in range(20)]
    sentences = []
    for s in range(n_sentences):
        side = s % 2
        words = []
        for _ in range(length):
            if rng.random() < 0.25:
                words.append(filler[rng.integers(20)])
            else:
                words.append(topic[side][rng.integers(15)])
        if rng.random() < 0.2:
            words.insert(int(rng.integers(len(words) + 1)), "bass")
        sentences.append(words)
    return sentences


def test_criterion_5_planted_ambiguity(verdict):
    failures = []
    start = time.monotonic()
    spread_hits = 0
    entropy_hits = 0
    seeds = (101, 102, 103, 104, 105)
    for seed in seeds:
        sentences = _planted_corpus(seed)
        n_tokens = sum(len(s) for s in sentences)
        if n_tokens < 200_000:
            failures.append(f"seed {seed}: corpus only {n_tokens} tokens")
        config = TrainConfig(dim=20, senses=5, window=3, epochs=1, seed=seed,
                             variant="ms_word2dm", subsample_threshold=None)
        table = train(sentences, config, progress=lambda line: None)
        rho = finalize_density(table, "bass")
        eigs = np.linalg.eigvalsh(rho.data)
        if int(np.sum(eigs > 0.1)) >= 2:
            spread_hits += 1
        h_alone = von_neumann_entropy(rho)
        composed = compose_pair(finalize_density(table, "mus0"), rho, "mult")
        if von_neumann_entropy(composed) < h_alone:
            entropy_hits += 1
    elapsed = time.monotonic() - start
    if spread_hits < 4:
        failures.append(f"only {spread_hits}/5 seeds spread the spectrum")
    if entropy_hits < 4:
        failures.append(f"only {entropy_hits}/5 seeds reduced entropy")
    if elapsed >= 300.0:
        failures.append(f"runtime {elapsed:.0f}s >= 300s")
    verdict(5, "planted two-sense word develops >= 2 large eigenvalues and "
               "composition disambiguates (5 seeds, under 5 min)", failures)


def test_criterion_6_entropy_direction(verdict):
    failures = []
    config = TrainConfig(dim=16, senses=3, window=3, epochs=8, seed=7,
                         variant="ms_word2dm", subsample_threshold=None)
    table = train(DATA / "toy_corpus.txt", config, progress=lambda line: None)
    from dmsem.training import densities_from_table
    store = DensityStore.from_matrices(densities_from_table(table))
    triples = load_triples(DATA / "toy_triples.jsonl")
    for side in ("verb", "noun"):
        ratios = {}
        for method in ("fuzz", "phaser"):
            report = entropy_report(
                triples, store, ComposeConfig(method=method, operator_side=side))
            ratios[method] = report.ratio
        if ratios["phaser"] > ratios["fuzz"]:
            failures.append(f"{side} operator: phaser {ratios['phaser']:.4f} "
                            f"> fuzz {ratios['fuzz']:.4f}")
    verdict(6, "phaser's composed/verb entropy ratio does not exceed fuzz's "
               "on the trained bundled fixture", failures)


def _fixture_stores():
    """Hand-built pure-state store for the bundled triples.

    Verbs live in the e1-e2 plane with pairwise angles chosen so trace
    similarity reproduces the human rating order exactly; nouns and
    adjectives live in the orthogonal e3-e4 plane.
    """
    triples = load_triples(DATA / "toy_triples.jsonl")
    apt_rank = {t.id: r for r, t in
                enumerate(sorted(triples, key=lambda t: t.human_apt))}
    inapt_rank = {t.id: r for r, t in
                  enumerate(sorted(triples, key=lambda t: t.human_inapt))}
    store = {}
    others = set()
    for i, triple in enumerate(triples):
        phi = 0.17 + 0.41 * i
        c_apt = 0.82 + 0.01 * apt_rank[triple.id]
        c_inapt = 0.03 + 0.01 * inapt_rank[triple.id]
        angles = {
            triple.target.verb.lemma: phi,
            triple.apt.verb.lemma: phi + math.acos(math.sqrt(c_apt)),
            triple.inapt.verb.lemma: phi + math.acos(math.sqrt(c_inapt)),
        }
        for lemma, angle in angles.items():
            store[lemma] = DensityMatrix.pure(
                np.array([math.cos(angle), math.sin(angle), 0.0, 0.0]))
        for _, fragment in triple.fragments():
            for token in fragment.content_tokens(False):
                if token.role != "verb":
                    others.add(token.lemma)
    for j, lemma in enumerate(sorted(others)):
        psi = 0.29 * j
        store[lemma] = DensityMatrix.pure(
            np.array([0.0, 0.0, math.cos(psi), math.sin(psi)]))
    return triples, store


def test_criterion_7_evaluation_harness(verdict):
    failures = []
    if spearman_rho([1, 2, 3], [10, 20, 30]) != 1.0:
        failures.append("identity case not exactly 1")
    if spearman_rho([1, 2, 3], [3, 2, 1]) != -1.0:
        failures.append("reversed case not exactly -1")
    if spearman_rho([1, 2, 3, 4], [2, 1, 4, 3]) != pytest.approx(0.6, abs=1e-15):
        failures.append("hand case not 0.6")

    triples, store = _fixture_stores()
    report = evaluate(triples, store, ComposeConfig(method="verb_only"),
                      sim_mode="trace", model_id="hand")
    if report.accuracy != 1.0:
        failures.append(f"verb-only accuracy {report.accuracy}")
    if report.rho is None or report.rho < 0.9:
        failures.append(f"verb-only rho {report.rho}")
    if report.n_pairs_used != 24 or report.excluded:
        failures.append("unexpected exclusions on the full store")

    added = evaluate(triples, store, ComposeConfig(method="add"),
                     sim_mode="trace", model_id="hand")
    if added.accuracy != 1.0:
        failures.append(f"additive accuracy {added.accuracy}")

    partial = {w: m for w, m in store.items() if w not in ("wilt", "money")}
    gapped = evaluate(triples, partial, ComposeConfig(method="verb_only"),
                      sim_mode="trace", model_id="hand")
    expected = [("m001", "oov:wilt"), ("m012", "oov:money")]
    if gapped.excluded != expected:
        failures.append(f"exclusions {gapped.excluded}")
    if gapped.n_pairs_used != 20:
        failures.append(f"n_pairs_used {gapped.n_pairs_used}")
    verdict(7, "exact rank-correlation constants, perfect accuracy and "
               "rho >= 0.9 on the hand-built fixture, OOV counts by hand",
            failures)


def test_criterion_8_pregroup_reducer(verdict):
    failures = []
    sentence = [PregroupType.parse("n"), PregroupType.parse("n^r s n^l"),
                PregroupType.parse("n")]
    result = pregroup_reduce(sentence)
    if not result.grammatical:
        failures.append("n (n^r s n^l) n did not reduce to s")

    s_type = SimpleType("s", 0)
    alphabet = [SimpleType(base, z) for base in ("n", "s") for z in (-1, 0, 1)]

    def cancels(a, b):
        return a.base == b.base and b.adjoint == a.adjoint + 1

    memo: dict = {}

    def reducible(seq):
        if seq == (s_type,):
            return True
        if len(seq) < 2:
            return False
        if seq in memo:
            return memo[seq]
        out = False
        for i in range(len(seq) - 1):
            if cancels(seq[i], seq[i + 1]) and reducible(seq[:i] + seq[i + 2:]):
                out = True
                break
        memo[seq] = out
        return out

    def oracle(seq):
        if seq == (s_type,):
            return True
        for i in range(len(seq) - 1):
            if cancels(seq[i], seq[i + 1]) and reducible(seq[:i] + seq[i + 2:]):
                return True
        return False

    checked = 0
    for length in range(1, 9):
        for seq in itertools.product(alphabet, repeat=length):
            mine = pregroup_reduce([PregroupType((s,)) for s in seq]).grammatical
            if mine != oracle(seq):
                failures.append(
                    f"disagreement on {' '.join(str(s) for s in seq)}")
                break
            checked += 1
        if failures:
            break
    if not failures and checked != sum(6 ** n for n in range(1, 9)):
        failures.append(f"only checked {checked} sequences")
    verdict(8, "reduction decision agrees with exhaustive search on every "
               "type list through length 8", failures)


def test_criterion_9_pipeline_determinism(verdict, tmp_path):
    failures = []
    start = time.monotonic()
    runs = []
    for name in ("run1", "run2"):
        base = tmp_path / name
        base.mkdir()
        model = base / "model"
        codes = [
            cli_main(["vocab", "--corpus", str(DATA / "toy_corpus.txt"),
                      "--out", str(base / "vocab.tsv")]),
            cli_main(["train", "--corpus", str(DATA / "toy_corpus.txt"),
                      "--out", str(model), "--variant", "ms_word2dm",
                      "--dim", "8", "--senses", "2", "--window", "2",
                      "--epochs", "2", "--no-subsample", "--seed", "11"]),
            cli_main(["eval", "--dataset", str(DATA / "toy_triples.jsonl"),
                      "--model", str(model), "--method", "fuzz",
                      "--operator-side", "noun", "--sim", "trace",
                      "--report", str(base / "report.json"),
                      "--csv", str(base / "report.csv")]),
        ]
        if codes != [0, 0, 0]:
            failures.append(f"{name}: exit codes {codes}")
        runs.append(base)
    elapsed = time.monotonic() - start
    artifacts = ["vocab.tsv", "model/manifest.json", "model/data.bin",
                 "model/vocab.tsv", "model/senses/manifest.json",
                 "model/senses/data.bin", "report.json", "report.csv"]
    for rel in artifacts:
        b1 = (runs[0] / rel).read_bytes()
        b2 = (runs[1] / rel).read_bytes()
        if b1 != b2:
            failures.append(f"{rel} differs between reruns")
    if elapsed >= 60.0:
        failures.append(f"pipeline took {elapsed:.0f}s >= 60s")
    verdict(9, "vocab -> train -> eval rerun with a fixed seed is "
               "byte-identical and finishes under a minute", failures)
