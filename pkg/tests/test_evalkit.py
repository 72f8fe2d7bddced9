import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from forgesat.evalkit import (
    contingency, evaluate, format_metrics, kmeans, nmi, pca_2d, permutation_null, purity, report,
)


def oracle_nmi(a, b):
    n = len(a)
    ca, cb, cab = Counter(a), Counter(b), Counter(zip(a, b))
    ha = -sum(c / n * math.log(c / n) for c in ca.values())
    hb = -sum(c / n * math.log(c / n) for c in cb.values())
    if ha == 0 and hb == 0:
        return 1.0
    if ha == 0 or hb == 0:
        return 0.0
    mi = sum(c / n * math.log((c / n) / (ca[x] / n * cb[y] / n)) for (x, y), c in cab.items())
    return mi / ((ha + hb) / 2)


def oracle_purity(a, b):
    clusters = {}
    for t, p in zip(a, b):
        clusters.setdefault(p, []).append(t)
    dom = [Counter(m).most_common(1)[0][1] for m in clusters.values()]
    macro = sum(d / len(m) for d, m in zip(dom, clusters.values())) / len(clusters)
    return macro, sum(dom) / len(a)


def test_nmi_examples():
    assert nmi(["a", "a", "b", "b"], [1, 1, 0, 0]) == pytest.approx(1.0)
    assert nmi(["a", "a", "b", "b"], [0, 0, 0, 0]) == 0.0
    a, b = ["A", "A", "B", "B"], [0, 0, 0, 1]
    assert abs(nmi(a, b) - oracle_nmi(a, b)) < 1e-9


def test_nmi_length_mismatch():
    with pytest.raises(ValueError):
        nmi([1, 2], [1])


def test_purity_examples():
    assert purity([0, 1, 2], [5, 6, 7]) == (1.0, 1.0)
    macro, weighted = purity(["A", "A", "B", "B", "B"], [0, 0, 0, 1, 1])
    assert macro == pytest.approx(5 / 6) and weighted == pytest.approx(0.8)
    labels = [i % 14 for i in range(140)]
    assert purity(labels, [0] * 140) == pytest.approx((1 / 14, 1 / 14))


labelings = st.integers(1, 20).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 5), min_size=n, max_size=n), st.lists(st.integers(0, 5), min_size=n, max_size=n))
)


@given(labelings)
@settings(max_examples=200, deadline=None)
def test_metrics_match_oracles(ab):
    a, b = ab
    assert abs(nmi(a, b) - oracle_nmi(a, b)) < 1e-9
    assert abs(nmi(a, b) - nmi(b, a)) < 1e-12
    pm, pw = purity(a, b)
    om, ow = oracle_purity(a, b)
    assert abs(pm - om) < 1e-9 and abs(pw - ow) < 1e-9
    assert 0 <= nmi(a, b) <= 1 and 0 <= pm <= 1
    assert pw >= max(Counter(a).values()) / len(a) - 1e-12
    relabel = [(7 * x + 3) % 11 for x in b]
    assert nmi(a, relabel) == pytest.approx(nmi(a, b), abs=1e-12)
    assert purity(a, relabel) == pytest.approx((pm, pw))


def test_matches_sklearn():
    sk = pytest.importorskip("sklearn.metrics")
    g = np.random.default_rng(0)
    for _ in range(50):
        a, b = g.integers(0, 4, 30), g.integers(0, 5, 30)
        assert nmi(a, b) == pytest.approx(sk.normalized_mutual_info_score(a, b), abs=1e-9)


def test_nmi_one_iff_same_partition():
    assert nmi([0, 0, 1, 2], [2, 2, 0, 1]) == pytest.approx(1.0)
    assert nmi([0, 0, 1, 2], [2, 2, 0, 0]) < 1.0


def test_contingency():
    t = contingency(["a", "b", "a"], [0, 0, 1])
    assert t.tolist() == [[1, 1], [1, 0]]


def test_kmeans_separable():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
    ca = kmeans(x, 2, seed=0)
    assert ca.labels[0] == ca.labels[1] != ca.labels[2] == ca.labels[3]
    assert ca.inertia == pytest.approx(1.0)


def test_kmeans_k_equals_n_and_determinism():
    x = np.random.default_rng(1).normal(size=(12, 3))
    assert kmeans(x, 12, seed=0).inertia == pytest.approx(0.0, abs=1e-18)
    a, b = kmeans(x, 3, seed=5), kmeans(x, 3, seed=5)
    assert (a.labels == b.labels).all() and a.inertia == b.inertia


def test_kmeans_errors():
    with pytest.raises(ValueError):
        kmeans(np.zeros((3, 2)), 4)
    with pytest.raises(ValueError, match="distinct"):
        kmeans(np.zeros((5, 2)), 2)


def test_permutation_null():
    labels = np.repeat(np.arange(4), 10)
    null, pct = permutation_null(labels, labels, trials=1000, seed=0)
    assert pct == 100.0 and len(null) == 1000
    again, pct2 = permutation_null(labels, labels, trials=1000, seed=0)
    assert (null == again).all() and pct2 == pct
    with pytest.raises(ValueError):
        permutation_null(labels, labels, trials=50)


def test_permutation_null_random_not_extreme():
    g = np.random.default_rng(2)
    labels = np.repeat(np.arange(4), 10)
    pcts = [permutation_null(labels, g.permutation(labels), 200, seed=s)[1] for s in range(30)]
    assert 20 < np.mean(pcts) < 80


def test_pca_line_and_isotropic():
    t = np.linspace(-1, 1, 20)
    _, frac = pca_2d(np.c_[t, 2 * t, -t])
    assert frac[1] == pytest.approx(0.0, abs=1e-12) and frac[0] == pytest.approx(1.0)
    _, frac = pca_2d(np.random.default_rng(3).normal(size=(4000, 2)))
    assert abs(frac[0] - 0.5) < 0.05 and abs(frac[1] - 0.5) < 0.05


def test_pca_row_permutation():
    x = np.random.default_rng(4).normal(size=(30, 5)) * [3, 2, 1, 0.5, 0.1]
    perm = np.random.default_rng(5).permutation(30)
    a, _ = pca_2d(x)
    b, _ = pca_2d(x[perm])
    np.testing.assert_allclose(b, a[perm], atol=1e-10)
    with pytest.raises(ValueError):
        pca_2d(np.zeros((1, 3)))


def test_evaluate_std_over_seeds():
    g = np.random.default_rng(6)
    x = np.vstack([g.normal(c, 1.0, size=(10, 2)) for c in (0, 3, 6)])
    labels = [str(i // 10) for i in range(30)]
    s = evaluate("STATIC-SAT", x, labels, k=3, seeds=(0, 1, 2), restarts=2)
    vals = [r.nmi for r in s.runs]
    mean = sum(vals) / 3
    assert s.nmi == pytest.approx((mean, math.sqrt(sum((v - mean) ** 2 for v in vals) / 3)))


def test_report(tmp_path):
    g = np.random.default_rng(7)
    ids = [str(i) for i in range(20)]
    labels = ["a"] * 10 + ["b"] * 10
    tables = {v: (ids, g.normal(size=(20, 3)), labels) for v in ("FORGE-MIP", "FORGE-MIP-SAT", "FORGE-SAT", "STATIC-SAT")}
    rows = report(tables, k=2, restarts=2, trials=100, out_dir=tmp_path)
    assert len(rows) == 4
    text = (tmp_path / "metrics.tsv").read_text()
    assert text == format_metrics(report(tables, k=2, restarts=2, trials=100))
    assert len(list(tmp_path.glob("scatter_*.svg"))) == 4
    svg = (tmp_path / "scatter_FORGE-SAT.svg").read_bytes()
    report(tables, k=2, restarts=2, trials=100, out_dir=tmp_path)
    assert (tmp_path / "scatter_FORGE-SAT.svg").read_bytes() == svg
    bad = dict(tables)
    bad["STATIC-SAT"] = (ids, tables["STATIC-SAT"][1], labels[::-1])
    with pytest.raises(ValueError):
        report(bad, k=2)
