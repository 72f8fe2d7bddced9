import itertools

import numpy as np
import pytest

from forgesat.cnf import SAT, CnfFormula, dpll_solve
from forgesat.mip import (
    GE, BipartiteGraph, LinearConstraint, check_feasible, format_mip, mip_to_graph, sat_to_mip,
)

from conftest import random_formula


def terms(con):
    return sorted(con.terms)


def test_clause_encoding_example():
    inst = sat_to_mip(CnfFormula(3, ((1, -2, 3),)))
    (con,) = inst.constraints
    assert terms(con) == [(0, 1.0), (1, -1.0), (2, 1.0)]
    assert con.sense == GE and con.rhs == 0.0


def test_negative_unit_clause():
    (con,) = sat_to_mip(CnfFormula(1, ((-1,),))).constraints
    assert terms(con) == [(0, -1.0)] and con.rhs == 0.0


def test_positive_clause_rhs_one():
    (con,) = sat_to_mip(CnfFormula(2, ((1, 2),))).constraints
    assert con.rhs == 1.0


def test_tautology_dropped():
    inst = sat_to_mip(CnfFormula(1, ((1, -1),)))
    assert inst.constraints == () and inst.dropped_tautologies == 1


def test_duplicate_literals_merged():
    (con,) = sat_to_mip(CnfFormula(2, ((1, 1, -2),))).constraints
    assert terms(con) == [(0, 1.0), (1, -1.0)] and con.rhs == 0.0


def test_satisfied_examples():
    con = LinearConstraint(((0, 1.0), (1, -1.0), (2, 1.0)), GE, 0.0)
    assert con.satisfied([1, 1, 0])
    assert not LinearConstraint(((0, -1.0),), GE, 0.0).satisfied([1])


def test_check_feasible_length():
    inst = sat_to_mip(CnfFormula(2, ((1, 2),)))
    with pytest.raises(ValueError):
        check_feasible(inst, [1])


def test_graph_example():
    g = mip_to_graph(sat_to_mip(CnfFormula(3, ((1, -2, 3),))))
    assert (g.n_constraints, g.n_variables, g.n_edges) == (1, 3, 3)
    assert g.coef.tolist() == [1.0, -1.0, 1.0]


def test_isolated_variable_degree_zero():
    g = mip_to_graph(sat_to_mip(CnfFormula(3, ((1, 2),))))
    assert g.variable_degree().tolist() == [1, 1, 0]


def test_csr_consistency():
    g = np.random.default_rng(1)
    for _ in range(100):
        f = random_formula(g)
        inst = sat_to_mip(f)
        graph = mip_to_graph(inst)
        assert graph.n_edges == sum(len(c.terms) for c in inst.constraints)
        for c in range(graph.n_constraints):
            assert sorted(graph.neighbors_of_constraint(c).tolist()) == sorted(i for i, _ in inst.constraints[c].terms)
        back = {(int(c), v) for v in range(graph.n_variables) for c in graph.neighbors_of_variable(v)}
        assert back == {tuple(e) for e in graph.edges.tolist()}


def test_graph_rejects_parallel_and_zero_edges():
    with pytest.raises(ValueError):
        BipartiteGraph.from_edges(1, 2, [(0, 1), (0, 1)], [1.0, 1.0])
    with pytest.raises(ValueError):
        BipartiteGraph.from_edges(1, 2, [(0, 1)], [0.0])


def test_graph_arrays_read_only():
    g = mip_to_graph(sat_to_mip(CnfFormula(2, ((1, 2),))))
    with pytest.raises(ValueError):
        g.edges[0, 0] = 5


def test_encoding_equivalence_by_enumeration():
    g = np.random.default_rng(2)
    for _ in range(200):
        f = random_formula(g)
        inst = sat_to_mip(f)
        feasible = any(check_feasible(inst, p) for p in itertools.product((0, 1), repeat=f.num_vars))
        assert feasible == (dpll_solve(f).status == SAT)


def test_format_mip():
    assert format_mip(sat_to_mip(CnfFormula(2, ((1, -2),)))) == "+1*x0 -1*x1 >= 0\n"
