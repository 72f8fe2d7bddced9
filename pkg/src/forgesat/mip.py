"""0-1 MIP encoding of CNF formulas and the constraint/variable bipartite graph."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from forgesat.cnf import CnfFormula

BINARY, INTEGER, CONTINUOUS = "binary", "integer", "continuous"
LE, EQ, GE = "<=", "=", ">="
SENSES = (LE, EQ, GE)
KINDS = (BINARY, INTEGER, CONTINUOUS)


@dataclass(frozen=True)
class MipVariable:
    index: int
    kind: str = BINARY
    lb: float = 0.0
    ub: float = 1.0
    obj: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.lb > self.ub:
            raise ValueError("lb > ub")


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple[tuple[int, float], ...]
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")
        idx = [i for i, _ in self.terms]
        if len(set(idx)) != len(idx):
            raise ValueError("repeated variable in constraint")
        if any(c == 0 for _, c in self.terms):
            raise ValueError("zero coefficient in constraint")

    def activity(self, x: Sequence[float]) -> float:
        return sum(c * x[i] for i, c in self.terms)

    def satisfied(self, x: Sequence[float]) -> bool:
        a = self.activity(x)
        if self.sense == GE:
            return a >= self.rhs
        if self.sense == LE:
            return a <= self.rhs
        return a == self.rhs


@dataclass(frozen=True)
class MipInstance:
    variables: tuple[MipVariable, ...]
    constraints: tuple[LinearConstraint, ...]
    objective_sense: str = "min"
    dropped_tautologies: int = 0

    def __post_init__(self):
        n = len(self.variables)
        for con in self.constraints:
            for i, _ in con.terms:
                if not 0 <= i < n:
                    raise ValueError(f"term index {i} out of range")

    @property
    def num_vars(self) -> int:
        return len(self.variables)


def merge_clause(clause: Sequence[int]) -> dict[int, int] | None:
    """Variable -> +1/-1 for a clause, duplicates merged; ``None`` for a tautology."""
    signs: dict[int, int] = {}
    for lit in clause:
        v, s = abs(lit), (1 if lit > 0 else -1)
        if signs.get(v, s) != s:
            return None
        signs[v] = s
    return signs


def sat_to_mip(formula: CnfFormula) -> MipInstance:
    """Each clause becomes ``sum_P x - sum_N x >= 1 - |N|`` over binary ``x``.

    Variable ``x_i`` of the formula maps to MIP index ``i - 1``.
    """
    variables = tuple(MipVariable(i) for i in range(formula.num_vars))
    constraints = []
    dropped = 0
    for clause in formula.clauses:
        signs = merge_clause(clause)
        if signs is None:
            dropped += 1
            continue
        terms = tuple((v - 1, float(s)) for v, s in signs.items())
        n_neg = sum(1 for s in signs.values() if s < 0)
        constraints.append(LinearConstraint(terms, GE, float(1 - n_neg)))
    return MipInstance(variables, tuple(constraints), dropped_tautologies=dropped)


def check_feasible(instance: MipInstance, point: Sequence[float]) -> bool:
    if len(point) != instance.num_vars:
        raise ValueError(f"point has {len(point)} entries, instance has {instance.num_vars} variables")
    return all(con.satisfied(point) for con in instance.constraints)


def format_mip(instance: MipInstance) -> str:
    """Debug dump: one constraint per line, ``+1*x0 -1*x3 >= 0``."""
    lines = []
    for con in instance.constraints:
        terms = " ".join(f"{c:+g}*x{i}" for i, c in con.terms)
        lines.append(f"{terms} {con.sense} {con.rhs:g}")
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Constraint/variable graph in CSR form, both directions.

    ``edges`` is an ``(E, 2)`` int array of (constraint, variable) pairs sorted
    lexicographically, ``coef`` the matching coefficients.
    """

    n_constraints: int
    n_variables: int
    edges: np.ndarray
    coef: np.ndarray
    c_indptr: np.ndarray = field(repr=False)
    c_indices: np.ndarray = field(repr=False)
    v_indptr: np.ndarray = field(repr=False)
    v_indices: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n_constraints, n_variables, edges, coef) -> "BipartiteGraph":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        coef = np.asarray(coef, dtype=np.float64)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges, coef = edges[order], coef[order]
        if len(edges) and (np.diff(edges[:, 0] * (n_variables + 1) + edges[:, 1]) == 0).any():
            raise ValueError("parallel edges")
        if (coef == 0).any():
            raise ValueError("zero-coefficient edge")
        c_indptr = np.zeros(n_constraints + 1, dtype=np.int64)
        np.cumsum(np.bincount(edges[:, 0], minlength=n_constraints), out=c_indptr[1:])
        c_indices = edges[:, 1].copy()
        vorder = np.lexsort((edges[:, 0], edges[:, 1]))
        v_indptr = np.zeros(n_variables + 1, dtype=np.int64)
        np.cumsum(np.bincount(edges[:, 1], minlength=n_variables), out=v_indptr[1:])
        v_indices = edges[vorder, 0].copy()
        for a in (edges, coef, c_indptr, c_indices, v_indptr, v_indices):
            a.setflags(write=False)
        return cls(n_constraints, n_variables, edges, coef, c_indptr, c_indices, v_indptr, v_indices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_nodes(self) -> int:
        return self.n_constraints + self.n_variables

    def constraint_degree(self) -> np.ndarray:
        return np.diff(self.c_indptr)

    def variable_degree(self) -> np.ndarray:
        return np.diff(self.v_indptr)

    def neighbors_of_constraint(self, c: int) -> np.ndarray:
        return self.c_indices[self.c_indptr[c] : self.c_indptr[c + 1]]

    def neighbors_of_variable(self, v: int) -> np.ndarray:
        return self.v_indices[self.v_indptr[v] : self.v_indptr[v + 1]]


def mip_to_graph(instance: MipInstance) -> BipartiteGraph:
    edges, coef = [], []
    for ci, con in enumerate(instance.constraints):
        for vi, c in con.terms:
            if c != 0:
                edges.append((ci, vi))
                coef.append(c)
    return BipartiteGraph.from_edges(len(instance.constraints), instance.num_vars, edges, coef)
