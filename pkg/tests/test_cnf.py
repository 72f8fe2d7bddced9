import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from forgesat import cnf
from forgesat.cnf import (
    SAT, UNSAT, CnfFormula, CorpusManifest, DimacsError, DimacsWarning, ManifestEntry,
    brute_force_sat, clique_cnf, dpll_solve, gen_clique, gen_random_ksat, gen_sr_pair,
    gen_vertex_cover, parse_dimacs, random_graph, vertex_cover_cnf, write_dimacs,
)

from conftest import random_formula


def test_parse_basic():
    f = parse_dimacs("p cnf 2 2\n1 -2 0\n2 0\n")
    assert f.num_vars == 2
    assert f.clauses == ((1, -2), (2,))


def test_parse_missing_trailing_newline():
    f = parse_dimacs("p cnf 1 1\n1 0")
    assert f.num_vars == 1 and f.clauses == ((1,),)


def test_parse_comments_and_multiline_clause():
    f = parse_dimacs("c hello\np cnf 3 2\n1 -2\n3 0 -1 0\n")
    assert f.clauses == ((1, -2, 3), (-1,))


@pytest.mark.parametrize("text", [
    "p cnf 1 1\n2 0",          # literal out of range
    "1 0\n",                   # no header
    "p cnf 1 1\n1",            # missing terminator
    "p cnf 1 1\n1 x 0\n",      # bad token
    "p dnf 1 1\n1 0\n",        # wrong format tag
])
def test_parse_errors(text):
    with pytest.raises(DimacsError):
        parse_dimacs(text)


def test_parse_warns_on_clause_count():
    with pytest.warns(DimacsWarning):
        f = parse_dimacs("p cnf 2 3\n1 0\n2 0\n")
    assert f.num_clauses == 2


def test_write_examples():
    assert write_dimacs(CnfFormula(2, ((1, -2),))) == "p cnf 2 1\n1 -2 0\n"
    assert write_dimacs(CnfFormula(0, ())) == "p cnf 0 0\n"


clause_lists = st.integers(1, 8).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(
            st.lists(st.integers(1, n).flatmap(lambda v: st.sampled_from([v, -v])), min_size=1, max_size=5),
            max_size=12,
        ),
    )
)


@given(clause_lists)
@settings(max_examples=100, deadline=None)
def test_roundtrip_property(nc):
    n, clauses = nc
    f = CnfFormula(n, tuple(tuple(c) for c in clauses))
    g = parse_dimacs(write_dimacs(f))
    assert g.num_vars == n and g.clauses == f.clauses


def test_random_ksat_contract():
    a = gen_random_ksat(5, 3, 3, 7)
    assert a == gen_random_ksat(5, 3, 3, 7)
    f = gen_random_ksat(20, 200, 3, 1)
    assert all(len({abs(l) for l in c}) == 3 for c in f.clauses)
    assert f.num_clauses == 200 and f.family == "random-ksat"


def test_random_ksat_errors():
    with pytest.raises(ValueError):
        gen_random_ksat(2, 5, 3, 0)


@pytest.mark.slow
def test_random_ksat_phase_transition_fraction():
    sat = sum(dpll_solve(gen_random_ksat(30, 129, 3, s)).status == SAT for s in range(100))
    assert 20 <= sat <= 80


def test_dpll_examples():
    assert dpll_solve(CnfFormula(1, ((1,), (-1,)))).status == UNSAT
    res = dpll_solve(CnfFormula(0, ()))
    assert res.status == SAT and len(res.assignment) == 0


def test_dpll_matches_truth_table():
    g = np.random.default_rng(0)
    for _ in range(500):
        f = random_formula(g, n_max=10, k_choices=(1, 2, 3), ratio=(0.5, 6.0))
        res = dpll_solve(f)
        assert (res.status == SAT) == brute_force_sat(f)
        if res.status == SAT:
            assert f.evaluate([bool(v) for v in res.assignment])


def test_dpll_budget():
    f = gen_random_ksat(60, 258, 3, 0)
    res = dpll_solve(f, budget=1)
    assert res.budget_exceeded and res.status == cnf.BUDGET


def test_sr_pair_contract():
    for seed in range(10):
        unsat, sat = gen_sr_pair(10, seed)
        assert dpll_solve(unsat).status == UNSAT
        assert dpll_solve(sat).status == SAT
        diffs = [(a, b) for a, b in zip(unsat.clauses, sat.clauses) if a != b]
        assert len(diffs) == 1
        a, b = diffs[0]
        assert sum(x != y for x, y in zip(a, b)) == 1
        assert [abs(x) for x in a] == [abs(y) for y in b]
    assert gen_sr_pair(10, 3) == gen_sr_pair(10, 3)


def _has_clique(n, edges, k):
    es = set(edges)
    return any(
        all((u, v) in es for u, v in itertools.combinations(sub, 2))
        for sub in itertools.combinations(range(n), k)
    )


def _has_cover(n, edges, k):
    return any(
        all(u in sub or v in sub for u, v in edges)
        for size in range(0, k + 1)
        for sub in map(set, itertools.combinations(range(n), size))
    )


def test_clique_examples():
    k4 = list(itertools.combinations(range(4), 2))
    assert dpll_solve(clique_cnf(4, k4, 3)).status == SAT
    assert dpll_solve(clique_cnf(4, [], 2)).status == UNSAT


def test_clique_matches_enumeration():
    for seed in range(50):
        f = gen_clique(10, 0.5, 4, seed)
        edges = random_graph(10, 0.5, seed)
        assert (dpll_solve(f).status == SAT) == _has_clique(10, edges, 4)


def test_vertex_cover_examples():
    assert dpll_solve(vertex_cover_cnf(2, [(0, 1)], 1)).status == SAT
    assert dpll_solve(vertex_cover_cnf(3, [(0, 1), (1, 2), (0, 2)], 1)).status == UNSAT


def test_vertex_cover_matches_enumeration():
    for seed in range(50):
        f = gen_vertex_cover(8, 0.4, 4, seed)
        edges = random_graph(8, 0.4, seed)
        assert (dpll_solve(f).status == SAT) == _has_cover(8, edges, 4)


def test_manifest_roundtrip(tmp_path):
    f = gen_random_ksat(5, 10, 3, 0)
    (tmp_path / "a.cnf").write_text(write_dimacs(f))
    m = CorpusManifest([ManifestEntry("a.cnf", "random-ksat", SAT, 0)])
    m.save(tmp_path / "manifest.jsonl")
    back = CorpusManifest.load(tmp_path / "manifest.jsonl")
    assert back.dumps() == m.dumps()
    (g,) = back.resolve(tmp_path)
    assert g.clauses == f.clauses and g.family == "random-ksat"


def test_manifest_rejects_duplicates():
    e = ManifestEntry("a.cnf", "random-ksat", SAT, 0)
    with pytest.raises(ValueError):
        CorpusManifest([e, e])
