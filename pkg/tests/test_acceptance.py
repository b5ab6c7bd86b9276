"""Acceptance gate: one test per criterion, one pass/fail line each.

Criteria are property-based and oracle-backed; tolerances are pinned in the
assertions and must not be loosened to make a run green.
"""

import itertools
import json
import math
import os
import random
import shutil
import subprocess
import sys
import time

import numpy as np
import pytest

from modal_align.alignment_metrics import model_pair_score, ols_fit, pearson
from modal_align.embedding_store import EmbeddingSet, pair_datasets, split_dataset
from modal_align.projection_head import (
    GDM_DIMS,
    LLM_DIMS,
    HeadConfig,
    forward_batch,
    init_head,
    preset_configs,
)
from modal_align.protein_meta import (
    ProteinRecord,
    category_label,
    describe_protein,
    parse_fasta,
    rank_rarity,
)
from modal_align.retrieval import RetrievalIndex, query_topk
from modal_align.synthetic import gen_synthetic
from modal_align.text_metrics import bleu, lcs_length, rouge_l, score_pair
from modal_align.trainer import (
    ReweightSpec,
    TrainConfig,
    batch_loss,
    loss_gradients,
    pair_gradients,
    pair_loss,
    train_pair,
)


def report(num, name, fn):
    try:
        fn()
    except Exception:
        print(f"ACCEPTANCE {num} ({name}): FAIL")
        raise
    print(f"ACCEPTANCE {num} ({name}): PASS")


def gaussian_set(n, dim, modality, seed, name):
    rng = np.random.default_rng(seed)
    ids = [f"RND{i:06d}" for i in range(n)]
    vecs = rng.standard_normal((n, dim)).astype(np.float32)
    return EmbeddingSet(name, modality, dim, dict(zip(ids, vecs)))


def test_criterion_01_untrained_near_zero():
    def check():
        start = time.perf_counter()
        g_set = gaussian_set(1000, 128, "graph", 42, "rand-graph")
        t_set = gaussian_set(1000, 256, "text", 43, "rand-text")
        paired = pair_datasets(g_set, t_set)
        g_head = init_head(HeadConfig(128, 256, (), seed=42))
        t_head = init_head(HeadConfig(256, 256, (), seed=43))
        rep = model_pair_score(paired.ids, g_head, t_head, paired)
        elapsed = time.perf_counter() - start
        assert abs(rep.alignment) < 0.05, f"|F_sim| = {abs(rep.alignment):.5f}"
        assert elapsed < 10.0, f"took {elapsed:.1f}s"

    report(1, "untrained near-zero", check)


@pytest.fixture(scope="module")
def trained_fixture():
    """The correlated fixture plus 1-layer and 2-layer training runs."""
    g_set, t_set = gen_synthetic(1000, 64, 128, 256, 0.1, 42)
    paired = pair_datasets(g_set, t_set)
    split = split_dataset(paired, 42)
    out = {"paired": paired, "split": split}
    cfg = TrainConfig()  # lr 1e-3, 40 epochs, B=32, tau 0.2
    start = time.perf_counter()
    g1 = init_head(HeadConfig(128, 256, (), seed=42))
    t1 = init_head(HeadConfig(256, 256, (), seed=43))
    g1, t1, _ = train_pair(paired, split, g1, t1, cfg)
    out["train_seconds"] = time.perf_counter() - start
    out["one_layer"] = model_pair_score(split.test, g1, t1, paired)
    g2 = init_head(HeadConfig(128, 256, (384,), seed=42))
    t2 = init_head(HeadConfig(256, 256, (), seed=43))
    g2, t2, _ = train_pair(paired, split, g2, t2, cfg)
    out["two_layer"] = model_pair_score(split.test, g2, t2, paired)
    return out


def test_criterion_02_trained_recovery(trained_fixture):
    def check():
        rep = trained_fixture["one_layer"]
        assert rep.alignment >= 0.5, f"F_sim = {rep.alignment:.4f}"
        assert rep.positive_score > rep.negative_score
        assert trained_fixture["train_seconds"] < 120.0

    report(2, "trained recovery", check)


def test_criterion_03_gradient_correctness():
    def check():
        start = time.perf_counter()
        from modal_align.errors import DegenerateOutput

        rng = np.random.default_rng(101)
        eps = 1e-4
        worst = 0.0
        done = 0
        while done < 20:
            out_dim = int(rng.integers(2, 17))
            hidden = tuple(int(rng.integers(2, 17)) for _ in range(int(rng.integers(0, 3))))
            g_cfg = HeadConfig(int(rng.integers(2, 17)), out_dim, hidden,
                               seed=int(rng.integers(1 << 31)))
            t_cfg = HeadConfig(int(rng.integers(2, 17)), out_dim, (),
                               seed=int(rng.integers(1 << 31)))
            g_head, t_head = init_head(g_cfg), init_head(t_cfg)
            b = int(rng.integers(2, 5))
            xg = rng.standard_normal((b, g_cfg.input_dim))
            xt = rng.standard_normal((b, t_cfg.input_dim))
            try:
                _, g_grads, t_grads = pair_gradients(g_head, t_head, xg, xt, 0.2)
            except DegenerateOutput:
                continue  # dead-ReLU draw, resample; not a valid instance
            done += 1
            for head, grads in ((g_head, g_grads), (t_head, t_grads)):
                for param, grad in zip(head.parameters(), grads.parameters()):
                    flat_p = param.ravel()
                    fd_grad = np.zeros_like(flat_p)
                    for i in range(flat_p.size):
                        orig = flat_p[i]
                        flat_p[i] = orig + eps
                        up = pair_loss(g_head, t_head, xg, xt, 0.2)
                        flat_p[i] = orig - eps
                        down = pair_loss(g_head, t_head, xg, xt, 0.2)
                        flat_p[i] = orig
                        fd_grad[i] = (up - down) / (2 * eps)
                    # relative error of the gradient vector per tensor
                    denom = max(np.linalg.norm(fd_grad),
                                np.linalg.norm(grad.ravel()), 1e-12)
                    rel = np.linalg.norm(fd_grad - grad.ravel()) / denom
                    worst = max(worst, float(rel))
        assert worst < 1e-4, f"max rel err {worst:.2e}"
        assert time.perf_counter() - start < 10.0

    report(3, "gradient correctness", check)


def test_criterion_04_metric_oracle():
    def check():
        rng = np.random.default_rng(404)
        for _ in range(50):
            n = int(rng.integers(2, 201))
            gd, td = int(rng.integers(2, 10)), int(rng.integers(2, 10))
            ids = [f"P{i:04d}" for i in range(n)]
            g_set = EmbeddingSet("g", "graph", gd, {
                pid: rng.standard_normal(gd).astype(np.float32) for pid in ids
            })
            t_set = EmbeddingSet("t", "text", td, {
                pid: rng.standard_normal(td).astype(np.float32) for pid in ids
            })
            paired = pair_datasets(g_set, t_set)
            out_dim = int(rng.integers(2, 8))
            g_head = init_head(HeadConfig(gd, out_dim, (), seed=int(rng.integers(1 << 31))))
            t_head = init_head(HeadConfig(td, out_dim, (), seed=int(rng.integers(1 << 31))))
            rep = model_pair_score(ids, g_head, t_head, paired)
            ordered = sorted(ids)
            g_proj, _ = forward_batch(
                g_head, np.stack([paired.graph.records[i] for i in ordered]).astype(np.float64)
            )
            t_proj, _ = forward_batch(
                t_head, np.stack([paired.text.records[i] for i in ordered]).astype(np.float64)
            )
            pos = 0.0
            for i in range(n):
                pos += float(np.dot(g_proj[i], t_proj[i]))
            neg = 0.0
            for i in range(n):
                for j in range(n):
                    if j != i:
                        neg += abs(float(np.dot(g_proj[i], t_proj[j])))
            assert rep.positive_score == pos / n
            assert rep.negative_score == neg / (n * (n - 1))
            assert rep.alignment == rep.positive_score - rep.negative_score

    report(4, "metric vs double-loop oracle (bit-for-bit)", check)


def test_criterion_05_random_baseline_loss():
    def check():
        rng = np.random.default_rng(505)
        losses = []
        for _ in range(200):
            g = rng.standard_normal((32, 256))
            t = rng.standard_normal((32, 256))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            t /= np.linalg.norm(t, axis=1, keepdims=True)
            losses.append(batch_loss(g, t, 0.2)[0])
        mean = float(np.mean(losses))
        assert math.log(32) - 0.15 <= mean <= math.log(32) + 0.15, f"mean loss {mean:.4f}"

    report(5, "random-baseline loss near ln 32", check)


def test_criterion_06_multi_layer_heads(trained_fixture):
    def check():
        one = trained_fixture["one_layer"].alignment
        two = trained_fixture["two_layer"].alignment
        assert two >= one - 0.05, f"2-layer {two:.4f} vs 1-layer {one:.4f}"
        g_cfg, _ = preset_configs("gearnet", "llama3.1-70b", 3)
        assert g_cfg.layer_dims == [(3072, 4096), (4096, 6144), (6144, 8192)]
        for gdm, in_dim in GDM_DIMS.items():
            for llm, out_dim in LLM_DIMS.items():
                for layers in (1, 2, 3):
                    gc, tc = preset_configs(gdm, llm, layers)
                    chain = [in_dim, *gc.hidden_dims, out_dim]
                    assert gc.layer_dims == list(zip(chain[:-1], chain[1:]))
                    assert len(gc.layer_dims) == layers
                    assert tc.layer_dims == [(out_dim, out_dim)]

    report(6, "multi-layer heads and preset shapes", check)


def test_criterion_07_reweighting_exactness():
    def check():
        # Constructed batch: sample 0's term vanishes exactly (its positive
        # logit dominates so the log-sum collapses to the max), leaving
        # base = term_1 / 2 and weighted = term_1. Doubling sample 1's
        # weight must then change the loss by exactly term_1 / B.
        g = np.array([[1.0, 0.0], [0.0, 1.0]])
        t = np.array([[1.0, 0.0], [-1.0, 0.0]])
        tau = 0.002
        base, _ = batch_loss(g, t, tau)
        weighted, _ = batch_loss(g, t, tau, weights=np.array([1.0, 2.0]))
        term0_only, _ = batch_loss(g, t, tau, weights=np.array([1.0, 0.0]))
        assert term0_only == 0.0  # sample 0's term is exactly zero
        term1_half = base  # so the unweighted loss is term_1 / 2
        assert base == pytest.approx(math.log(2.0) / 2.0, abs=1e-15)
        assert weighted - base == term1_half  # exactly term_1 / B

        # doubling a sample's weight doubles exactly its gradient rows
        rng = np.random.default_rng(707)
        gp = rng.standard_normal((3, 5))
        tp = rng.standard_normal((3, 5))
        gp /= np.linalg.norm(gp, axis=1, keepdims=True)
        tp /= np.linalg.norm(tp, axis=1, keepdims=True)
        dg1, _ = loss_gradients(gp, tp, 0.2)
        dg2, _ = loss_gradients(gp, tp, 0.2, np.array([2.0, 1.0, 1.0]))
        np.testing.assert_array_equal(dg2[0], 2.0 * dg1[0])
        np.testing.assert_array_equal(dg2[1:], dg1[1:])

        # factor 1 reproduces the unweighted run bitwise
        g_set, t_set = gen_synthetic(60, 4, 6, 8, 0.05, 9)
        paired = pair_datasets(g_set, t_set)
        split = split_dataset(paired, 9)

        def run(reweight):
            gh = init_head(HeadConfig(6, 8, (), seed=1))
            th = init_head(HeadConfig(8, 8, (), seed=2))
            gh, th, hist = train_pair(
                paired, split, gh, th,
                TrainConfig(epochs=3, batch_size=8, reweight=reweight),
            )
            return (
                b"".join(p.tobytes() for p in gh.parameters() + th.parameters()),
                tuple(hist.train_loss),
                tuple(hist.val_loss),
            )

        rare = frozenset(split.train[:7])
        assert run(None) == run(ReweightSpec(rare_ids=rare, factor=1.0))

    report(7, "reweighting exactness", check)


def test_criterion_08_retrieval_exactness():
    def check():
        rng = np.random.default_rng(808)
        for _ in range(100):
            n = int(rng.integers(11, 5001))
            dim = int(rng.integers(2, 9))
            vecs = rng.standard_normal((n, dim))
            # plant duplicate vectors so ID tie-breaking is actually exercised
            vecs[1] = vecs[0]
            vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
            ids = sorted(f"P{i:05d}" for i in range(n))
            index = RetrievalIndex(ids=ids, vectors=vecs)
            q = rng.standard_normal(dim)
            q /= np.linalg.norm(q)
            by_k = {}
            for k in (3, 5, 10):
                result = query_topk(index, q, k)
                scored = sorted(
                    ((-float(np.dot(vecs[i], q)), pid) for i, pid in enumerate(ids))
                )
                expected = [(pid, -neg) for neg, pid in scored[:k]]
                assert result.neighbors == expected
                by_k[k] = [pid for pid, _ in result.neighbors]
            assert set(by_k[3]) <= set(by_k[5]) <= set(by_k[10])

    report(8, "retrieval vs brute-force sort", check)


def test_criterion_09_statistics():
    def check():
        assert pearson([1, 2, 3], [2, 4, 6]) == 1.0
        fit = ols_fit([0.0, 1.0, 2.0], [1.0, 3.0, 5.0])
        assert fit.slope == 2.0 and fit.intercept == 1.0
        rng = np.random.default_rng(909)
        done = 0
        while done < 100:
            n = int(rng.integers(2, 50))
            x = rng.standard_normal(n)
            y = rng.standard_normal(n)
            if np.ptp(x) == 0 or np.ptp(y) == 0:
                continue
            a = np.vstack([x, np.ones(n)]).T
            slope, intercept = np.linalg.solve(a.T @ a, a.T @ y)
            fit = ols_fit(x, y)
            assert abs(fit.slope - slope) < 1e-12
            assert abs(fit.intercept - intercept) < 1e-12
            assert abs(pearson(x, y) - np.corrcoef(x, y)[0, 1]) < 1e-12
            done += 1

    report(9, "statistics vs normal-equations oracle", check)


def subsequences(seq):
    for mask in range(1 << len(seq)):
        yield tuple(seq[i] for i in range(len(seq)) if mask >> i & 1)


def lcs_oracle(a, b):
    subs_b = set(subsequences(b))
    return max(len(s) for s in subsequences(a) if s in subs_b)


def test_criterion_10_text_metrics():
    def check():
        same = score_pair("the protein alpha", "The PROTEIN alpha!")
        assert same["rouge_l_f1"] == 1.0 and same["bleu"] == pytest.approx(1.0)
        disjoint = score_pair("aa bb", "cc dd")
        assert disjoint["rouge_l_f1"] == 0.0 and disjoint["bleu"] == 0.0
        assert rouge_l(["a", "x", "b"], ["a", "b", "c"]) == 2.0 / 3.0
        assert bleu(list("abcd"), list("abcd")) == pytest.approx(1.0)
        # LCS vs the exponential subsequence oracle: exhaustive through
        # length 4 per side, dense random coverage of lengths 5..8 (the
        # full <=8 cross product is ~10^8 pairs and is sampled instead).
        alphabet = "abc"
        seqs_short = [
            list(s)
            for length in range(5)
            for s in itertools.product(alphabet, repeat=length)
        ]
        for a in seqs_short:
            for b in seqs_short:
                assert lcs_length(a, b) == lcs_oracle(a, b)
        rng = random.Random(10)
        for _ in range(5000):
            a = [rng.choice(alphabet) for _ in range(rng.randint(0, 8))]
            b = [rng.choice(alphabet) for _ in range(rng.randint(0, 8))]
            assert lcs_length(a, b) == lcs_oracle(a, b)

    report(10, "text metrics and LCS oracle", check)


GOLDEN_FASTA = """\
>3PYK_1|Chains A, B|Carbonic anhydrase|Homo sapiens (9606)
MSHHWGYGKHNGPEHWHKDFPIAKGERQSPVDIDTHTAKYDPSLKPLSVSYDQATSLRIL
>3I1A_1|Chain A|Spectinomycin phosphotransferase|Legionella pneumophila (446)
MKLNELVNSLQGELIPFE
"""


def test_criterion_11_fasta_description_rarity():
    def check():
        records = parse_fasta(GOLDEN_FASTA)
        by_id = {r.protein_id: r for r in records}
        assert describe_protein(by_id["3PYK"]) == (
            "The protein structure 3PYK has a sequence length of 60 amino acids. "
            "Here is more information: The protein structure 3PYK involves the "
            "following chains: A, B. The protein is named Carbonic anhydrase and "
            "is derived from the organism Homo sapiens."
        )
        assert describe_protein(by_id["3I1A"]) == (
            "The protein structure 3I1A has a sequence length of 18 amino acids. "
            "Here is more information: The protein structure 3I1A involves the "
            "following chains: A. The protein is named Spectinomycin "
            "phosphotransferase and is derived from the organism Legionella "
            "pneumophila."
        )
        assert category_label(by_id["3PYK"].molecule_name, by_id["3PYK"].organism) == (
            "carbonic anhydrase, homo sapiens"
        )
        assert category_label(by_id["3I1A"].molecule_name, by_id["3I1A"].organism) == (
            "spectinomycin phosphotransferase, legionella pneumophila"
        )

        rng = random.Random(1111)
        synth = []
        for i in range(1000):
            c = rng.randint(0, 120)
            synth.append(
                ProteinRecord(f"S{i:05d}", ["A"], f"mol{c}", f"org{c % 9}", 10)
            )
        top_n = 40
        table = rank_rarity(synth, top_n=top_n)
        from collections import Counter

        counts = Counter(category_label(r.molecule_name, r.organism) for r in synth)
        ordered = sorted(counts.items(), key=lambda kv: (kv[1], kv[0]))
        rare = {label for label, _ in ordered[:top_n]}
        popular = {label for label, _ in ordered[-top_n:]} - rare
        for rec in synth:
            label = category_label(rec.molecule_name, rec.organism)
            expected = (
                "rare" if label in rare else ("popular" if label in popular else "unlabeled")
            )
            assert table.label_of(rec.protein_id) == expected

    report(11, "FASTA description template and rarity oracle", check)


def _run_cli(argv, threads):
    env = dict(os.environ)
    env["MODAL_ALIGN_THREADS"] = threads
    env.pop("MODAL_ALIGN_SUMMARIZER_URL", None)
    proc = subprocess.run(
        [sys.executable, "-m", "modal_align", *map(str, argv)],
        capture_output=True,
        env=env,
    )
    assert proc.returncode == 0, proc.stderr.decode()
    return proc.stdout


def _dir_bytes(path):
    out = {}
    for root, _, names in os.walk(path):
        for name in names:
            full = os.path.join(root, name)
            out[os.path.relpath(full, path)] = open(full, "rb").read()
    return out


def test_criterion_12_cli_determinism(tmp_path):
    def check():
        # shared inputs, produced once
        syn = tmp_path / "syn"
        _run_cli(["gen-synthetic", "--n", 40, "--latent", 4, "--g-dim", 6,
                  "--t-dim", 8, "--seed", 0, "--out", syn], "1")
        fasta = tmp_path / "p.fasta"
        fasta.write_text(GOLDEN_FASTA)
        fdir = tmp_path / "fastas"
        fdir.mkdir()
        shutil.copy(fasta, fdir / "p.fasta")

        pairdir = tmp_path / "pair"
        _run_cli(["ingest", "--graph", syn / "graph.emb", "--text", syn / "text.emb",
                  "--out", pairdir], "1")
        manifest = pairdir / "manifest.json"
        rundir = tmp_path / "run"
        _run_cli(["train", "--pair", manifest, "--epochs", 2, "--batch", 8,
                  "--out", rundir], "1")
        scores = tmp_path / "scores.csv"
        _run_cli(["per-protein", "--pair", manifest, "--gh", rundir / "g_head.phd1",
                  "--th", rundir / "t_head.phd1", "--out", scores], "1")
        other = tmp_path / "scores2.csv"
        shutil.copy(scores, other)
        ids = [r.split(",")[0] for r in scores.read_text().strip().splitlines()[1:]]
        meta = tmp_path / "meta.csv"
        meta.write_text("id,sequence_length,chain_count\n"
                        + "".join(f"{pid},{100 + i},{1 + i % 2}\n"
                                  for i, pid in enumerate(ids)))
        all_ids = json.loads(manifest.read_text())["ids"]
        descs = tmp_path / "d.jsonl"
        descs.write_text("".join(
            json.dumps({"id": pid, "description": f"about {pid}"}) + "\n"
            for pid in all_ids
        ))
        shutil.copy(manifest, rundir / "manifest.json")
        query = json.loads(manifest.read_text())["split"]["test"][0]

        def variants(name):
            """Run dirs for the four repetitions of one subcommand."""
            dirs = []
            for threads in ("1", "4"):
                for rep in ("a", "b"):
                    d = tmp_path / f"{name}-{threads}{rep}"
                    d.mkdir()
                    dirs.append((threads, d))
            return dirs

        commands = {
            "gen-synthetic": lambda d: ["gen-synthetic", "--n", 40, "--latent", 4,
                                        "--g-dim", 6, "--t-dim", 8, "--seed", 0,
                                        "--out", d / "syn"],
            "ingest": lambda d: ["ingest", "--graph", syn / "graph.emb",
                                 "--text", syn / "text.emb", "--out", d / "pair"],
            "describe": lambda d: ["describe", "--fasta", fasta,
                                   "--out", d / "d.jsonl", "--meta-out", d / "m.csv"],
            "rarity": lambda d: ["rarity", "--fasta-dir", fdir, "--top", 1,
                                 "--out", d / "r.csv"],
            "train": lambda d: ["train", "--pair", manifest, "--epochs", 2,
                                "--batch", 8, "--out", d / "run"],
            "eval": lambda d: ["eval", "--pair", manifest,
                               "--gh", rundir / "g_head.phd1",
                               "--th", rundir / "t_head.phd1"],
            "per-protein": lambda d: ["per-protein", "--pair", manifest,
                                      "--gh", rundir / "g_head.phd1",
                                      "--th", rundir / "t_head.phd1",
                                      "--out", d / "s.csv"],
            "correlate": lambda d: ["correlate", scores, other, "--out", d / "c.csv"],
            "analyze": lambda d: ["analyze", "length", "--scores", scores,
                                  "--meta", meta],
            "retrieve": lambda d: ["retrieve", "--index", rundir, "--query-id", query,
                                   "--k", 3, "--descriptions", descs],
            "textscore": lambda d: ["textscore", "--candidates", descs,
                                    "--references", descs],
            "gradcheck": lambda d: ["gradcheck", "--instances", 1, "--seed", 3],
        }
        for name, build in commands.items():
            outputs = []
            for threads, d in variants(name):
                stdout = _run_cli(build(d), threads)
                outputs.append((stdout, _dir_bytes(d)))
            first = outputs[0]
            for other_out in outputs[1:]:
                assert other_out == first, f"{name} output differs across runs"

    report(12, "CLI determinism across repeats and thread counts", check)
