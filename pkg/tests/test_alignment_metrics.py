import numpy as np
import pytest

from modal_align import errors
from modal_align.alignment_metrics import (
    correlation_matrix,
    group_summary,
    model_pair_score,
    ols_fit,
    pearson,
    per_protein_scores,
)
from modal_align.embedding_store import EmbeddingSet, PairedDataset
from modal_align.projection_head import HeadConfig, ProjectionHead


def identity_head(dim):
    cfg = HeadConfig(dim, dim, (), seed=0)
    return ProjectionHead(layers=[(np.eye(dim), np.zeros(dim))], config=cfg)


def paired_from_vectors(g_vecs, t_vecs):
    ids = [f"P{i}" for i in range(len(g_vecs))]
    g = EmbeddingSet("g", "graph", len(g_vecs[0]),
                     {pid: np.asarray(v, np.float32) for pid, v in zip(ids, g_vecs)})
    t = EmbeddingSet("t", "text", len(t_vecs[0]),
                     {pid: np.asarray(v, np.float32) for pid, v in zip(ids, t_vecs)})
    return PairedDataset(graph=g, text=t), ids


def naive_report(g_proj, t_proj):
    """Independent double-loop oracle with sequential accumulation."""
    n = len(g_proj)
    pos = 0.0
    for i in range(n):
        pos += float(np.dot(g_proj[i], t_proj[i]))
    neg = 0.0
    for i in range(n):
        for j in range(n):
            if j != i:
                neg += abs(float(np.dot(g_proj[i], t_proj[j])))
    return pos / n, neg / (n * (n - 1))


class TestModelPairScore:
    def test_orthonormal_perfect_alignment(self):
        basis = [np.eye(4)[i] * 5.0 for i in range(4)]
        paired, ids = paired_from_vectors(basis, basis)
        head = identity_head(4)
        report = model_pair_score(ids, head, head, paired)
        assert report.positive_score == pytest.approx(1.0)
        assert report.negative_score == pytest.approx(0.0, abs=1e-12)
        assert report.alignment == pytest.approx(1.0)
        assert report.negative_pair_count == 12

    def test_collapse_case(self):
        same = [np.array([1.0, 1.0, 0.0])] * 3
        paired, ids = paired_from_vectors(same, same)
        head = identity_head(3)
        report = model_pair_score(ids, head, head, paired)
        assert report.positive_score == pytest.approx(1.0)
        assert report.negative_score == pytest.approx(1.0)
        assert report.alignment == pytest.approx(0.0, abs=1e-12)

    def test_matches_brute_force_bitwise(self):
        from modal_align.projection_head import forward_batch, init_head

        rng = np.random.default_rng(77)
        for _ in range(10):
            n = int(rng.integers(3, 40))
            gd, td = int(rng.integers(2, 9)), int(rng.integers(2, 9))
            paired, ids = paired_from_vectors(
                rng.standard_normal((n, gd)), rng.standard_normal((n, td))
            )
            gh = init_head(HeadConfig(gd, 6, (), seed=int(rng.integers(1000))))
            th = init_head(HeadConfig(td, 6, (), seed=int(rng.integers(1000))))
            report = model_pair_score(ids, gh, th, paired)
            ordered = sorted(ids)
            xg = np.stack([paired.graph.records[i] for i in ordered]).astype(np.float64)
            xt = np.stack([paired.text.records[i] for i in ordered]).astype(np.float64)
            g_proj, _ = forward_batch(gh, xg)
            t_proj, _ = forward_batch(th, xt)
            pos, neg = naive_report(g_proj, t_proj)
            assert report.positive_score == pos
            assert report.negative_score == neg

    def test_too_few_proteins(self):
        paired, ids = paired_from_vectors([[1.0, 0]], [[1.0, 0]])
        with pytest.raises(errors.TooFewProteins):
            model_pair_score(ids, identity_head(2), identity_head(2), paired)


class TestPerProteinScores:
    def test_identical_projections(self):
        vecs = [np.eye(3)[i] for i in range(3)]
        paired, ids = paired_from_vectors(vecs, vecs)
        head = identity_head(3)
        scores = per_protein_scores(ids, head, head, paired)
        assert [pid for pid, _ in scores] == sorted(ids)
        assert all(s == pytest.approx(1.0) for _, s in scores)

    def test_negated_projections(self):
        vecs = [np.eye(3)[i] for i in range(3)]
        neg = [-v for v in vecs]
        paired, ids = paired_from_vectors(vecs, neg)
        head = identity_head(3)
        scores = per_protein_scores(ids, head, head, paired)
        assert all(s == pytest.approx(-1.0) for _, s in scores)

    def test_matches_per_id_brute_force(self):
        from modal_align.projection_head import forward, init_head

        rng = np.random.default_rng(13)
        paired, ids = paired_from_vectors(
            rng.standard_normal((10, 5)), rng.standard_normal((10, 7))
        )
        gh = init_head(HeadConfig(5, 4, (), seed=1))
        th = init_head(HeadConfig(7, 4, (), seed=2))
        scores = dict(per_protein_scores(ids, gh, th, paired))
        for pid in ids:
            u = forward(gh, paired.graph.records[pid].astype(np.float64))
            v = forward(th, paired.text.records[pid].astype(np.float64))
            assert scores[pid] == pytest.approx(float(np.dot(u, v)), abs=1e-12)


class TestPearson:
    def test_exact_linear(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == 1.0

    def test_negation(self):
        assert pearson([1, 2, 3], [-1, -2, -3]) == -1.0

    def test_hand_case(self):
        assert pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)

    def test_affine_invariance(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(50)
        y = rng.standard_normal(50)
        r = pearson(x, y)
        assert pearson(3.0 * x + 7.0, y) == pytest.approx(r, abs=1e-12)
        assert pearson(x, 0.5 * y - 2.0) == pytest.approx(r, abs=1e-12)

    def test_zero_variance(self):
        with pytest.raises(errors.ZeroVariance):
            pearson([1, 1, 1], [1, 2, 3])

    def test_length_mismatch(self):
        with pytest.raises(errors.LengthMismatch):
            pearson([1, 2], [1, 2, 3])


class TestCorrelationMatrix:
    def test_self_correlation_diagonal(self):
        scores = [("A", 0.1), ("B", 0.5), ("C", 0.9)]
        labels, mat = correlation_matrix({"m1": scores, "m2": list(scores)})
        assert mat[0, 0] == 1.0 and mat[1, 1] == 1.0
        assert mat[0, 1] == pytest.approx(1.0)

    def test_negation_off_diagonal(self):
        s1 = [("A", 0.1), ("B", 0.5), ("C", 0.9)]
        s2 = [(pid, -v) for pid, v in s1]
        _, mat = correlation_matrix({"a": s1, "b": s2})
        assert mat[0, 1] == -1.0
        assert mat[1, 0] == -1.0

    def test_planted_correlations_match_oracle(self):
        rng = np.random.default_rng(5)
        ids = [f"P{i}" for i in range(40)]
        base = rng.standard_normal(40)
        lists = {
            "x": list(zip(ids, base)),
            "y": list(zip(ids, 0.8 * base + 0.2 * rng.standard_normal(40))),
            "z": list(zip(ids, rng.standard_normal(40))),
        }
        labels, mat = correlation_matrix(lists)
        for a in range(3):
            for b in range(3):
                xa = np.array([v for _, v in lists[labels[a]]])
                xb = np.array([v for _, v in lists[labels[b]]])
                expected = np.corrcoef(xa, xb)[0, 1]
                assert mat[a, b] == pytest.approx(expected, abs=1e-12)

    def test_id_set_mismatch(self):
        with pytest.raises(errors.IdSetMismatch):
            correlation_matrix({"a": [("A", 1.0), ("B", 2.0)], "b": [("A", 1.0), ("C", 2.0)]})


class TestOlsFit:
    def test_exact_line(self):
        x = [0.0, 1.0, 2.0, 3.0]
        fit = ols_fit(x, [2 * v + 1 for v in x])
        assert fit.slope == 2.0
        assert fit.intercept == 1.0
        assert fit.pearson_r == 1.0

    def test_constant_y(self):
        fit = ols_fit([1.0, 2.0, 3.0], [5.0, 5.0, 5.0])
        assert fit.slope == 0.0
        assert fit.pearson_r is None

    def test_constant_x_raises(self):
        with pytest.raises(errors.ZeroVariance):
            ols_fit([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            n = int(rng.integers(2, 30))
            x = rng.standard_normal(n)
            if np.ptp(x) == 0:
                continue
            y = rng.standard_normal(n)
            fit = ols_fit(x, y)
            a = np.vstack([x, np.ones(n)]).T
            slope, intercept = np.linalg.solve(a.T @ a, a.T @ y)
            assert fit.slope == pytest.approx(slope, abs=1e-12)
            assert fit.intercept == pytest.approx(intercept, abs=1e-12)


class TestGroupSummary:
    def test_pinned_quartile_convention(self):
        scores = [(f"P{i}", v) for i, v in enumerate([1.0, 2.0, 3.0, 4.0])]
        out = group_summary(scores, lambda pid: "single")
        s = out["single"]
        assert s["median"] == 2.5 and s["q1"] == 1.5 and s["q3"] == 3.5

    def test_odd_count_tukey_hinges(self):
        scores = [(f"P{i}", float(v)) for i, v in enumerate([1, 2, 3, 4, 5])]
        s = group_summary(scores, lambda pid: "single")["single"]
        assert s["median"] == 3.0 and s["q1"] == 2.0 and s["q3"] == 4.0

    def test_constant_scores(self):
        scores = [(f"P{i}", 0.25) for i in range(6)]
        s = group_summary(scores, lambda pid: "single")["single"]
        assert {s["mean"], s["median"], s["q1"], s["q3"], s["min"], s["max"]} == {0.25}

    def test_empty_group_reports_n0(self):
        scores = [("A", 0.5)]
        out = group_summary(scores, lambda pid: "single")
        assert out["multiple"] == {"n": 0}
