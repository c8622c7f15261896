import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cosine_py, knn_oracle
from sector_embed.analytics import (
    SimilarityMatrix,
    cosine,
    density_threshold,
    export_graph,
    format_knn_table,
    knn,
    knn_to_json,
    mismatches,
    similarity_matrix,
    write_edges_csv,
    write_gexf,
)
from sector_embed.corpus import LabeledCompany
from sector_embed.embedder import EmbeddingMatrix
from sector_embed.errors import ConfigurationError, UnknownTickerError, ValidationError

# Hand-built 4 company similarity matrix used by the graph and mismatch tests.
HAND_T = ("AAA", "BBB", "CCC", "DDD")
HAND_S = np.array([
    [1.0, 0.9, 0.2, 0.61],
    [0.9, 1.0, 0.6, 0.1],
    [0.2, 0.6, 1.0, 0.75],
    [0.61, 0.1, 0.75, 1.0],
])
HAND_LABELS = [
    LabeledCompany("AAA", "A", "Finance", "Bank"),
    LabeledCompany("BBB", "B", "Finance", "Bank"),
    LabeledCompany("CCC", "C", "Energy", "Oil"),
    LabeledCompany("DDD", "D", "Energy", "Gas"),
]


def _emb(rows, tickers=None):
    rows = np.asarray(rows, dtype=float)
    return EmbeddingMatrix(tuple(tickers or [f"T{i:02d}" for i in range(len(rows))]), rows)


class TestCosine:
    def test_self(self, rng):
        u = rng.normal(size=7)
        assert cosine(u, u) == pytest.approx(1.0, abs=1e-15)

    def test_orthogonal(self):
        assert cosine([1, 0], [0, 1]) == 0.0

    @pytest.mark.parametrize("k,expected", [(3.5, 1.0), (1e-3, 1.0), (-2.0, -1.0)])
    def test_scale(self, k, expected, rng):
        u = rng.normal(size=5)
        assert cosine(u, k * u) == pytest.approx(expected, abs=1e-15)

    def test_zero_vector(self):
        with pytest.raises(ValidationError):
            cosine([0, 0], [1, 2])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
    def test_bounded(self, u, v):
        if np.linalg.norm(u) < 1e-6 or np.linalg.norm(v) < 1e-6:
            return
        assert -1.0 <= cosine(u, v) <= 1.0


class TestSimilarityMatrix:
    def test_symmetric_unit_diagonal(self, rng):
        sm = similarity_matrix(_emb(rng.normal(size=(30, 7))))
        assert np.array_equal(sm.S, sm.S.T)
        assert np.all(np.diag(sm.S) == 1.0)

    def test_matches_pairwise_cosine(self, rng):
        W = rng.normal(size=(6, 4))
        sm = similarity_matrix(_emb(W))
        for i in range(6):
            for j in range(6):
                if i != j:
                    assert sm.S[i, j] == pytest.approx(cosine_py(W[i], W[j]), abs=1e-14)

    def test_zero_row_named(self):
        with pytest.raises(ValidationError, match="T01"):
            similarity_matrix(_emb([[1, 0], [0, 0]]))

    def test_asymmetric_rejected(self):
        with pytest.raises(ValidationError):
            SimilarityMatrix(("A", "B"), [[1, 0.5], [0.4, 1]])


class TestKnn:
    def test_three_companies(self):
        E = _emb([[1, 0], [1, 0.2], [0, 1]], ["A", "B", "C"])
        out = knn(E, "A", 2)
        assert [t for t, _ in out] == ["B", "C"]
        assert out[0][1] > out[1][1]

    def test_matches_full_sort(self, rng):
        W = rng.normal(size=(20, 8))
        E = _emb(W)
        for q in E.tickers[:5]:
            for k in (1, 5, 19):
                assert [t for t, _ in knn(E, q, k)] == knn_oracle(W.tolist(), list(E.tickers), q, k)

    def test_all_others_once(self, rng):
        E = _emb(rng.normal(size=(12, 3)))
        out = [t for t, _ in knn(E, "T04", 11)]
        assert sorted(out) == sorted(set(E.tickers) - {"T04"})

    def test_ties_by_ticker(self):
        E = _emb([[1, 0], [0, 1], [0, 1], [0, 1]], ["Q", "ZZ", "AA", "MM"])
        assert [t for t, _ in knn(E, "Q", 3)] == ["AA", "MM", "ZZ"]

    def test_scale_invariant(self, rng):
        W = rng.normal(size=(15, 4))
        a, b = knn(_emb(W), "T03", 14), knn(_emb(7.5 * W), "T03", 14)
        assert [t for t, _ in a] == [t for t, _ in b]
        np.testing.assert_allclose([s for _, s in a], [s for _, s in b], atol=1e-14)

    def test_other_metrics(self):
        E = _emb([[1, 0], [3, 0], [1, 0.5], [-1, 0]], ["A", "B", "C", "D"])
        assert [t for t, _ in knn(E, "A", 3, "euclidean")] == ["C", "B", "D"]
        assert [t for t, _ in knn(E, "A", 3, "dot")] == ["B", "C", "D"]

    def test_unknown_ticker_suggests(self):
        E = _emb(np.eye(3), ["JPM", "INTC", "WMT"])
        with pytest.raises(UnknownTickerError) as exc:
            knn(E, "JPN", 1)
        assert exc.value.suggestion == "JPM"
        assert "did you mean 'JPM'" in str(exc.value)

    @pytest.mark.parametrize("k", [0, 3])
    def test_bad_k(self, k):
        with pytest.raises(ConfigurationError):
            knn(_emb(np.eye(3)), "T00", k)

    def test_output_formats(self):
        text = format_knn_table("JPM", [("C", 0.9612)], [LabeledCompany("C", "Citibank", "Finance", "Major Bank")])
        assert "Citibank - Finance - Major Bank" in text and "0.96" in text
        assert json.loads(knn_to_json("JPM", [("C", 0.96)]))["neighbors"][0] == {"ticker": "C", "score": 0.96}


class TestMismatches:
    def test_one_sector_is_empty(self, rng):
        sm = similarity_matrix(_emb(rng.normal(size=(5, 3)), list("ABCDE")))
        labels = [LabeledCompany(t, t, "Finance", "X") for t in sm.tickers]
        assert mismatches(sm, labels, -1.0) == []

    def test_hand_matrix(self):
        # cross-sector pairs: AC 0.2, AD 0.61, BC 0.6, BD 0.1 -> only AD reaches 0.61
        sm = SimilarityMatrix(HAND_T, HAND_S)
        assert mismatches(sm, HAND_LABELS, 0.61) == [("AAA", "DDD", 0.61, "Finance", "Energy")]
        assert [r[:2] for r in mismatches(sm, HAND_LABELS, 0.6)] == [("AAA", "DDD"), ("BBB", "CCC")]

    def test_min_sim_extremes(self):
        sm = SimilarityMatrix(HAND_T, HAND_S)
        assert len(mismatches(sm, HAND_LABELS, -1.0)) == 4
        assert mismatches(sm, HAND_LABELS, 1.0 + 1e-9) == []

    def test_fine_level(self):
        sm = SimilarityMatrix(HAND_T, HAND_S)
        assert ("CCC", "DDD") in [r[:2] for r in mismatches(sm, HAND_LABELS, 0.7, level="sector2")]


class TestGraph:
    def test_hand_matrix(self):
        edges = export_graph(SimilarityMatrix(HAND_T, HAND_S), 0.6)
        # pairs above 0.6: AB 0.9, AD 0.61, CD 0.75 (BC is exactly 0.6 -> no edge)
        assert edges.pairs() == {("AAA", "BBB"), ("AAA", "DDD"), ("CCC", "DDD")}
        assert edges.density == 0.5

    def test_extreme_thresholds(self, rng):
        sm = similarity_matrix(_emb(rng.normal(size=(9, 3))))
        assert export_graph(sm, 1.0).edges == ()
        assert len(export_graph(sm, -1.0).edges) == 9 * 8 // 2

    def test_edges_ordered_and_unique(self, rng):
        sm = similarity_matrix(_emb(rng.normal(size=(15, 3)), [f"Z{chr(90 - i)}" for i in range(15)]))
        e = export_graph(sm, 0.0)
        assert all(x.source < x.target for x in e.edges)
        assert len(e.pairs()) == len(e.edges)
        assert all(x.weight > 0.0 for x in e.edges)

    def test_monotone(self, rng):
        sm = similarity_matrix(_emb(rng.normal(size=(25, 4))))
        sweep = np.linspace(-1, 1, 20)
        sets = [export_graph(sm, t).pairs() for t in sweep]
        for lo, hi in zip(sets, sets[1:]):
            assert hi <= lo

    def test_density_threshold(self, rng):
        sm = similarity_matrix(_emb(rng.normal(size=(30, 5))))
        for target in (0.05, 0.2, 0.5):
            t = density_threshold(sm, target)
            assert export_graph(sm, t).density <= target
            # anything lower admits too many edges
            assert export_graph(sm, np.nextafter(t, -2)).density > target

    def test_density_one(self, rng):
        sm = similarity_matrix(_emb(rng.normal(size=(6, 3))))
        assert density_threshold(sm, 1.0) == -1.0

    def test_csv_and_gexf(self, tmp_path):
        sm = SimilarityMatrix(HAND_T, HAND_S)
        e = export_graph(sm, 0.6)
        write_edges_csv(tmp_path / "e.csv", e)
        lines = (tmp_path / "e.csv").read_text().splitlines()
        assert lines[0] == "source,target,weight"
        assert lines[1] == "AAA,BBB,0.90000000000000002"
        write_gexf(tmp_path / "g.gexf", e, sm.tickers, HAND_LABELS)
        root = ET.parse(tmp_path / "g.gexf").getroot()
        ns = {"g": "http://www.gexf.net/1.2draft"}
        assert len(root.findall(".//g:node", ns)) == 4
        assert len(root.findall(".//g:edge", ns)) == 3
