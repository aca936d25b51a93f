import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datar.bigdata import BigData
from datar.engines.inputs import generate
from datar.errors import EmptyGraph, EmptyInput, InvalidParams, KTooLarge, TypeMismatch
from datar.records import Edge, Point, Record, Text
from datar.tasks import (
    KMeansParams,
    PageRankParams,
    display_score,
    kmeans,
    kmeans_records,
    lloyd,
    pagerank,
    pagerank_records,
    pagerank_scores,
    sort_strings,
    word_count,
    wcss,
)

import oracles


def words(ws):
    return BigData.from_origin([Record(str(i), Text(w)) for i, w in enumerate(ws, 1)], "memory")


def points(ps):
    return BigData.from_origin([Record(str(i), Point(x, y)) for i, (x, y) in enumerate(ps)], "memory")


def edges(es):
    return BigData.from_origin([Record(str(i), Edge(s, d)) for i, (s, d) in enumerate(es)], "memory")


def utf8(s):
    return s.encode("utf-8")


# -- word count ------------------------------------------------------------------


def test_spark_yarn():
    out = word_count(words(["Spark", "YARN", "Spark", "Spark", "Spark"]))
    assert [(r.key, r.value.name, r.value.count) for r in out.records] == [("Spark", "Spark", 4), ("YARN", "YARN", 1)]


def test_wordcount_empty():
    assert word_count(words([])).records == ()


def test_wordcount_10k_against_recount():
    bd = generate("words", 10_000, 42)
    got = {r.value.name: r.value.count for r in word_count(bd).records}
    assert got == oracles.recount(r.value.text for r in bd.records)


@given(st.lists(st.text(max_size=3)))
def test_wordcount_properties(ws):
    out = word_count(words(ws)).records
    assert sum(r.value.count for r in out) == len(ws)
    names = [r.value.name for r in out]
    assert sorted(names) == sorted(set(ws))
    assert [utf8(n) for n in names] == sorted(utf8(n) for n in names)
    assert all(r.key for r in out)


# -- sort --------------------------------------------------------------------------


def test_sort_small():
    assert [r.value.text for r in sort_strings(words(["b", "a", "c"])).records] == ["a", "b", "c"]
    assert sort_strings(words([])).records == ()


def test_sort_is_bytewise():
    out = [r.value.text for r in sort_strings(words(["b", "B", "é", "a", "Z"])).records]
    assert out == ["B", "Z", "a", "b", "é"]


def test_sort_100k_against_merge_sort():
    bd = generate("strings", 100_000, 42)
    expected = oracles.merge_sort(list(bd.records), key=lambda r: utf8(r.value.text))
    assert sort_strings(bd).records == tuple(expected)


@given(st.lists(st.text(st.characters(blacklist_categories=("Cs",)), max_size=4)))
def test_sort_properties(ws):
    bd = words(ws)
    out = sort_strings(bd).records
    texts = [r.value.text for r in out]
    assert [utf8(t) for t in texts] == sorted(utf8(t) for t in ws)
    assert sorted(r.key for r in out) == sorted(r.key for r in bd.records)
    # stable: equal strings keep input order
    for a, b in zip(out, out[1:]):
        if a.value.text == b.value.text:
            assert int(a.key) < int(b.key)


# -- k-means --------------------------------------------------------------------------

FOUR = [(0, 0), (0, 1), (10, 10), (10, 11)]


@pytest.mark.parametrize("seed", range(10))
def test_four_points_optimal(seed):
    best, best_labels = oracles.best_partition(FOUR, 2)
    assert oracles.as_partition(FOUR, best_labels) == {frozenset({(0, 0), (0, 1)}), frozenset({(10, 10), (10, 11)})}
    # unique minimum: every other 2-partition is strictly worse
    res = lloyd(np.array(FOUR, float), 2, 20, seed)
    assert oracles.as_partition(FOUR, res.labels.tolist()) == oracles.as_partition(FOUR, best_labels)
    assert oracles.partition_wcss(FOUR, res.labels.tolist()) == pytest.approx(best)


def test_four_point_minimum_is_unique():
    import itertools

    w = sorted(
        oracles.partition_wcss(FOUR, labels)
        for labels in itertools.product(range(2), repeat=4)
        if len(set(labels)) == 2 and labels[0] == 0
    )
    assert w[0] == pytest.approx(1.0) and w[1] > w[0] + 1


def test_k1_is_the_mean():
    rng = random.Random(5)
    ps = [(rng.uniform(-5, 5), rng.uniform(-5, 5)) for _ in range(50)]
    _, (c,) = kmeans(points(ps), KMeansParams(k=1))
    assert c.x == pytest.approx(sum(p[0] for p in ps) / 50, abs=1e-12)
    assert c.y == pytest.approx(sum(p[1] for p in ps) / 50, abs=1e-12)


def test_k_equals_n():
    ps = [(i, i * i) for i in range(7)]
    res = lloyd(np.array(ps, float), 7, 20, 3)
    assert sorted(res.labels.tolist()) == list(range(7))
    assert wcss(ps, res.labels, res.centroids) == 0.0


@settings(max_examples=50)
@given(st.integers(0, 2**32), st.integers(1, 6), st.integers(6, 40))
def test_lloyd_matches_reference(seed, k, n):
    rng = random.Random(seed)
    ps = [(float(rng.randint(0, 20)), float(rng.randint(0, 20))) for _ in range(n)]
    res = lloyd(np.array(ps), k, 20, seed)
    labels, centroids = oracles.lloyd_reference(ps, k, 20, seed)
    assert res.labels.tolist() == labels
    assert res.centroids.tolist() == [list(c) for c in centroids]


@settings(max_examples=50)
@given(st.integers(0, 2**32), st.integers(1, 5), st.integers(5, 60), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_kmeans_properties(seed, k, n, tx, ty):
    rng = random.Random(seed)
    ps = np.array([(rng.randint(0, 100), rng.randint(0, 100)) for _ in range(n)], float)
    res = lloyd(ps, k, 20, seed)
    assert all(b <= a for a, b in zip(res.wcss, res.wcss[1:]))
    assert res.labels.min() >= 0 and res.labels.max() < k
    # integer coordinates and an integer shift keep the arithmetic exact
    shifted = lloyd(ps + np.array([round(tx), round(ty)]), k, 20, seed)
    assert shifted.labels.tolist() == res.labels.tolist()


def test_wcss_history_matches_objective():
    bd = generate("points", 2000, 1)
    ps = np.array([(r.value.x, r.value.y) for r in bd.records])
    res = lloyd(ps, 10, 20, 1)
    assert res.wcss[-1] == pytest.approx(wcss(ps, res.labels, res.centroids), rel=1e-12)


def test_empty_cluster_keeps_centroid():
    # duplicated points: k distinct rows chosen but two start on the same spot
    ps = np.array([(0, 0), (0, 0), (5, 5)], float)
    res = lloyd(ps, 3, 5, 0)
    assert len(res.centroids) == 3
    assert np.isfinite(res.centroids).all()


def test_kmeans_assignments_shape():
    bd = points([(0, 0), (0, 1), (10, 10)])
    out, cents = kmeans(bd, KMeansParams(k=2, seed=0))
    assert [r.key for r in out.records] == ["0", "1", "2"]
    assert [r.value.name for r in out.records] == ["0", "1", "2"]
    assert out.lineage[-1].params == {"k": "2", "iterations": "20", "seed": "0"}
    assert len(cents) == 2


def test_kmeans_errors():
    with pytest.raises(EmptyInput):
        kmeans(points([]), KMeansParams(k=1))
    with pytest.raises(KTooLarge):
        kmeans(points([(0, 0)]), KMeansParams(k=2))
    with pytest.raises(TypeMismatch):
        kmeans_records(words(["a"]).records, {})
    with pytest.raises(InvalidParams):
        KMeansParams(k=0)
    with pytest.raises(InvalidParams):
        kmeans_records(points([(0, 0)]).records, {"clusters": "2"})


# -- PageRank ---------------------------------------------------------------------------


def test_two_cycle():
    s = pagerank_scores([("A", "B"), ("B", "A")], 0.85, 20)
    assert s["A"] == pytest.approx(0.5, abs=1e-15) and s["B"] == pytest.approx(0.5, abs=1e-15)


def test_single_page():
    assert pagerank_scores([], nodes=["A"]) == {"A": 1.0}


def test_chain_against_dense_oracle():
    chain = [("A", "B"), ("B", "C"), ("C", "D"), ("D", "E")]
    got = pagerank_scores(chain, 0.85, 50)
    want = oracles.pagerank_dense(chain, 0.85, 50)
    assert got.keys() == want.keys()
    for page in want:
        assert abs(got[page] - want[page]) <= 1e-8


@settings(max_examples=50)
@given(st.integers(0, 2**32), st.integers(1, 50), st.integers(0, 200), st.floats(0.05, 0.95))
def test_random_graphs_against_dense_oracle(seed, n, m, d):
    rng = random.Random(seed)
    es = [(f"p{rng.randrange(n)}", f"p{rng.randrange(n)}") for _ in range(m)]
    nodes = [f"p{i}" for i in range(n)]
    got = pagerank_scores(es, d, 20, nodes=nodes)
    want = oracles.pagerank_dense(es, d, 20, nodes=nodes)
    assert max(abs(got[p] - want[p]) for p in want) <= 1e-8


@settings(max_examples=50)
@given(st.integers(0, 2**32), st.integers(1, 60), st.integers(0, 300))
def test_pagerank_properties(seed, n, m):
    rng = random.Random(seed)
    es = [(f"p{rng.randrange(n)}", f"p{rng.randrange(n)}") for _ in range(m)]
    nodes = [f"p{i}" for i in range(n)]
    sums = []
    scores = pagerank_scores(es, 0.85, 20, nodes=nodes, on_iteration=lambda t, r: sums.append(math.fsum(r)))
    assert all(abs(s - 1.0) <= 1e-9 for s in sums)
    assert all(v > 0 for v in scores.values())
    # relabel pages with a random permutation
    perm = list(range(n))
    rng.shuffle(perm)
    rename = {f"p{i}": f"q{perm[i]}" for i in range(n)}
    relabeled = pagerank_scores([(rename[s], rename[d]) for s, d in es], 0.85, 20, nodes=rename.values())
    for p, v in scores.items():
        assert relabeled[rename[p]] == pytest.approx(v, abs=1e-12)


def test_pagerank_records_display_scale():
    out = pagerank(edges([("A", "B"), ("B", "A")]), PageRankParams())
    assert [(r.key, r.value.value) for r in out.records] == [("A", 500.0), ("B", 500.0)]
    assert display_score(0.0123456) == 12.346


def test_pagerank_errors():
    with pytest.raises(EmptyGraph):
        pagerank_scores([])
    with pytest.raises(TypeMismatch):
        pagerank_records(words(["a"]).records, {})
    with pytest.raises(InvalidParams):
        PageRankParams(damping=1.0)
    with pytest.raises(InvalidParams):
        pagerank_records(edges([("A", "B")]).records, {"alpha": "0.5"})
    with pytest.raises(InvalidParams):
        pagerank_records(edges([("A", "B")]).records, {"damping": "high"})
