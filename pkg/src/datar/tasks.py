"""The four reference workloads: word count, string sort, k-means, PageRank.

Each workload comes in two layers. The ``*_records`` functions are lineage
operators (``fn(records, params)``) so they can be recorded and replayed;
the plain-named functions take a ``BigData`` and apply the operator as an
action.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from datar.bigdata import BigData, apply_action
from datar.errors import EmptyGraph, EmptyInput, InvalidParams, KTooLarge, TypeMismatch
from datar.records import Edge, Number, Pair, Point, Record, Text


def _utf8(s: str) -> bytes:
    return s.encode("utf-8", "surrogatepass")


def _check_params(task: str, params: Mapping[str, str], allowed: Iterable[str]) -> None:
    unknown = sorted(set(params) - set(allowed))
    if unknown:
        raise InvalidParams(f"{task}: unknown parameter(s) {', '.join(unknown)}")


def _require(records: Sequence[Record], cls: type, task: str) -> None:
    for r in records:
        if not isinstance(r.value, cls):
            raise TypeMismatch(f"{task} expects {cls.__name__} records, got {type(r.value).__name__} at key {r.key!r}")


def _parse_int(task: str, name: str, raw: str) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise InvalidParams(f"{task}: {name} must be an integer, got {raw!r}") from None


# -- word count --------------------------------------------------------------


def word_count_records(records: Sequence[Record], params: Mapping[str, str]) -> list[Record]:
    _check_params("wordcount", params, ())
    _require(records, Text, "wordcount")
    counts = Counter(r.value.text for r in records)
    out = []
    for word in sorted(counts, key=_utf8):
        # an empty line has no usable key; it is counted under a placeholder
        out.append(Record(word or "<empty>", Pair(word, counts[word])))
    return out


def word_count(bd: BigData) -> BigData:
    return apply_action(bd, "wordcount", word_count_records, {})


# -- sort ----------------------------------------------------------------------


def sort_records(records: Sequence[Record], params: Mapping[str, str]) -> list[Record]:
    _check_params("sort", params, ())
    _require(records, Text, "sort")
    return sorted(records, key=lambda r: _utf8(r.value.text))


def sort_strings(bd: BigData) -> BigData:
    return apply_action(bd, "sort", sort_records, {})


# -- k-means -------------------------------------------------------------------


@dataclass(frozen=True)
class KMeansParams:
    k: int = 3
    iterations: int = 20
    seed: int = 42

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParams(f"kmeans: k must be >= 1, got {self.k}")
        if self.iterations < 1:
            raise InvalidParams(f"kmeans: iterations must be >= 1, got {self.iterations}")
        if not -(2**63) <= self.seed < 2**64:
            raise InvalidParams("kmeans: seed must fit in 64 bits")

    @classmethod
    def from_params(cls, params: Mapping[str, str]) -> "KMeansParams":
        _check_params("kmeans", params, ("k", "iterations", "seed"))
        kw = {name: _parse_int("kmeans", name, params[name]) for name in ("k", "iterations", "seed") if name in params}
        return cls(**kw)

    def to_params(self) -> dict[str, str]:
        return {"k": str(self.k), "iterations": str(self.iterations), "seed": str(self.seed)}


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    wcss: list[float] = field(default_factory=list)

    @property
    def iterations_run(self) -> int:
        return len(self.wcss) - 1


_CHUNK = 8192


def _sq_distances(points: np.ndarray, centroids: np.ndarray, lo: int, hi: int) -> np.ndarray:
    dx = points[lo:hi, 0:1] - centroids[:, 0]
    dy = points[lo:hi, 1:2] - centroids[:, 1]
    return dx * dx + dy * dy


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, float]:
    labels = np.empty(len(points), dtype=np.int64)
    total = 0.0
    for lo in range(0, len(points), _CHUNK):
        hi = min(lo + _CHUNK, len(points))
        d2 = _sq_distances(points, centroids, lo, hi)
        # argmin returns the first minimum, so ties go to the lowest cluster index
        lab = np.argmin(d2, axis=1)
        labels[lo:hi] = lab
        total += float(d2[np.arange(hi - lo), lab].sum())
    return labels, total


def _update(points: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    k = len(centroids)
    counts = np.bincount(labels, minlength=k)
    sx = np.bincount(labels, weights=points[:, 0], minlength=k)
    sy = np.bincount(labels, weights=points[:, 1], minlength=k)
    new = centroids.copy()
    live = counts > 0
    new[live, 0] = sx[live] / counts[live]
    new[live, 1] = sy[live] / counts[live]
    return new


def lloyd(
    points: np.ndarray,
    k: int,
    iterations: int,
    seed: int,
    on_iteration: Callable[[int, float], None] | None = None,
) -> KMeansResult:
    """Seeded Lloyd iterations on an ``(n, 2)`` array.

    Initial centroids are ``k`` distinct input rows drawn with
    ``random.Random(seed)``. Each round recomputes centroids as cluster means
    (an empty cluster keeps its centroid) and reassigns every point; the loop
    stops early once an assignment repeats. ``wcss[t]`` is the objective of the
    assignment made in round ``t`` against the centroids it was made with.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(points)
    if n == 0:
        raise EmptyInput("kmeans needs at least one observation")
    if k > n:
        raise KTooLarge(k, n)
    init = random.Random(seed).sample(range(n), k)
    centroids = points[init].copy()
    labels, cost = _assign(points, centroids)
    result = KMeansResult(labels, centroids, [cost])
    if on_iteration:
        on_iteration(0, cost)
    for t in range(1, iterations + 1):
        centroids = _update(points, labels, centroids)
        new_labels, cost = _assign(points, centroids)
        result.centroids = centroids
        result.wcss.append(cost)
        if on_iteration:
            on_iteration(t, cost)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    result.labels = labels
    return result


def _points_array(records: Sequence[Record]) -> np.ndarray:
    _require(records, Point, "kmeans")
    return np.array([(r.value.x, r.value.y) for r in records], dtype=np.float64).reshape(-1, 2)


def kmeans_records(records: Sequence[Record], params: Mapping[str, str]) -> list[Record]:
    p = KMeansParams.from_params(params)
    result = lloyd(_points_array(records), p.k, p.iterations, p.seed)
    return [Record(str(i), Pair(str(i), int(c))) for i, c in enumerate(result.labels)]


def kmeans(bd: BigData, params: KMeansParams) -> tuple[BigData, list[Point]]:
    """Cluster a dataset of points; returns (assignments, centroids)."""
    result = lloyd(_points_array(bd.records), params.k, params.iterations, params.seed)
    labels = [Record(str(i), Pair(str(i), int(c))) for i, c in enumerate(result.labels)]
    assignments = apply_action(bd, "kmeans", lambda _recs, _params: labels, params.to_params())
    return assignments, [Point(x, y) for x, y in result.centroids]


def wcss(points, labels, centroids) -> float:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    diff = points - np.asarray(centroids, dtype=np.float64)[np.asarray(labels)]
    return float((diff * diff).sum())


# -- PageRank ----------------------------------------------------------------------


@dataclass(frozen=True)
class PageRankParams:
    damping: float = 0.85
    iterations: int = 20

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise InvalidParams(f"pagerank: damping must be in (0, 1), got {self.damping}")
        if self.iterations < 1:
            raise InvalidParams(f"pagerank: iterations must be >= 1, got {self.iterations}")

    @classmethod
    def from_params(cls, params: Mapping[str, str]) -> "PageRankParams":
        _check_params("pagerank", params, ("damping", "iterations"))
        kw = {}
        if "damping" in params:
            try:
                kw["damping"] = float(params["damping"])
            except ValueError:
                raise InvalidParams(f"pagerank: damping must be a number, got {params['damping']!r}") from None
        if "iterations" in params:
            kw["iterations"] = _parse_int("pagerank", "iterations", params["iterations"])
        return cls(**kw)

    def to_params(self) -> dict[str, str]:
        return {"damping": repr(self.damping), "iterations": str(self.iterations)}


def pagerank_scores(
    edges: Iterable[tuple[str, str]],
    damping: float = 0.85,
    iterations: int = 20,
    nodes: Iterable[str] = (),
    on_iteration: Callable[[int, np.ndarray], None] | None = None,
) -> dict[str, float]:
    """Power iteration over a directed multigraph.

    Pages are every endpoint in ``edges`` plus any extra ``nodes``. Rank mass
    sitting on pages with no out-links is spread uniformly over all pages.
    Returns raw probabilities keyed by page name.
    """
    edges = list(edges)
    names = sorted(set(nodes) | {s for s, _ in edges} | {d for _, d in edges}, key=_utf8)
    if not names:
        raise EmptyGraph("pagerank needs at least one page")
    index = {name: i for i, name in enumerate(names)}
    n = len(names)
    src = np.fromiter((index[s] for s, _ in edges), dtype=np.int64, count=len(edges))
    dst = np.fromiter((index[d] for _, d in edges), dtype=np.int64, count=len(edges))
    outdeg = np.bincount(src, minlength=n).astype(np.float64)
    dangling = outdeg == 0
    rank = np.full(n, 1.0 / n)
    for t in range(1, iterations + 1):
        inflow = np.bincount(dst, weights=rank[src] / outdeg[src], minlength=n)
        spill = rank[dangling].sum()
        rank = (1.0 - damping) / n + damping * (inflow + spill / n)
        if on_iteration:
            on_iteration(t, rank)
    return {name: float(rank[i]) for i, name in enumerate(names)}


def display_score(raw: float) -> float:
    return round(raw * 1000.0, 3)


def pagerank_records(records: Sequence[Record], params: Mapping[str, str]) -> list[Record]:
    p = PageRankParams.from_params(params)
    _require(records, Edge, "pagerank")
    scores = pagerank_scores(((r.value.src, r.value.dst) for r in records), p.damping, p.iterations)
    return [Record(page, Number(display_score(raw))) for page, raw in scores.items()]


def pagerank(bd: BigData, params: PageRankParams) -> BigData:
    return apply_action(bd, "pagerank", pagerank_records, params.to_params())


OPERATORS = {
    "wordcount": word_count_records,
    "sort": sort_records,
    "kmeans": kmeans_records,
    "pagerank": pagerank_records,
}
