"""CNF formulas: data model, DIMACS I/O, generators and a DPLL labeller."""
from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from forgesat import kernels, rng

SAT = "SAT"
UNSAT = "UNSAT"
UNKNOWN = "UNKNOWN"
BUDGET = "BUDGET"  # solver status only; manifests record UNKNOWN

FAMILIES = ("random-ksat", "sr", "clique", "vcover")

DEFAULT_BUDGET = 200_000


class DimacsError(ValueError):
    pass


class DimacsWarning(UserWarning):
    pass


class BudgetExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class CnfFormula:
    """Clauses of signed integer literals; ``x_i`` is ``i`` and its negation ``-i``."""

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    family: str | None = None
    feasibility: str | None = None
    source_id: str | None = None

    def __post_init__(self):
        clauses = tuple(tuple(int(l) for l in c) for c in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if self.num_vars < 0:
            raise ValueError("num_vars must be non-negative")
        for c in clauses:
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range for {self.num_vars} variables")
        if self.feasibility not in (None, SAT, UNSAT, UNKNOWN):
            raise ValueError(f"bad feasibility label {self.feasibility!r}")

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def with_labels(self, **kw) -> "CnfFormula":
        return replace(self, **kw)

    def evaluate(self, assignment: Sequence[bool]) -> bool:
        if len(assignment) != self.num_vars:
            raise ValueError("assignment length does not match num_vars")
        return all(
            any(assignment[abs(l) - 1] == (l > 0) for l in c) for c in self.clauses
        )


# -- DIMACS -----------------------------------------------------------------


def parse_dimacs(text: str) -> CnfFormula:
    header = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            if header is not None:
                raise DimacsError(f"line {lineno}: duplicate header")
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed header {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise DimacsError(f"line {lineno}: malformed header {line!r}") from None
            if header[0] < 0 or header[1] < 0:
                raise DimacsError(f"line {lineno}: negative header counts")
            continue
        if header is None:
            raise DimacsError(f"line {lineno}: clause before header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"line {lineno}: non-integer token {tok!r}") from None
            if lit == 0:
                if not current:
                    raise DimacsError(f"line {lineno}: empty clause")
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > header[0]:
                raise DimacsError(f"line {lineno}: literal {lit} exceeds {header[0]} variables")
            else:
                current.append(lit)
    if header is None:
        raise DimacsError("missing 'p cnf' header")
    if current:
        raise DimacsError("last clause is missing its terminating 0")
    if len(clauses) != header[1]:
        warnings.warn(
            f"header declares {header[1]} clauses, found {len(clauses)}",
            DimacsWarning,
            stacklevel=2,
        )
    return CnfFormula(header[0], tuple(clauses))


def write_dimacs(formula: CnfFormula) -> str:
    lines = [f"p cnf {formula.num_vars} {formula.num_clauses}"]
    lines.extend(" ".join(map(str, c)) + " 0" for c in formula.clauses)
    return "\n".join(lines) + "\n"


def read_dimacs(path) -> CnfFormula:
    path = Path(path)
    return parse_dimacs(path.read_text()).with_labels(source_id=path.stem)


# -- DPLL ---------------------------------------------------------------------


@dataclass(frozen=True)
class DpllResult:
    status: str  # SAT, UNSAT or BUDGET
    assignment: tuple[bool, ...] | None
    decisions: int

    @property
    def budget_exceeded(self) -> bool:
        return self.status == BUDGET


def flatten(clauses: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    sizes = [len(c) for c in clauses]
    offsets = np.zeros(len(clauses) + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    lits = np.fromiter(itertools.chain.from_iterable(clauses), dtype=np.int32, count=int(offsets[-1]))
    return lits, offsets


def dpll_solve(formula: CnfFormula, budget: int = DEFAULT_BUDGET) -> DpllResult:
    """Decide satisfiability with unit propagation and pure-literal elimination.

    ``budget`` caps the number of branching decisions; running out yields a
    ``"BUDGET"`` result rather than an exception.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    lits, offsets = flatten(formula.clauses)
    status, assign, decisions = kernels.dpll_flat(lits, offsets, formula.num_vars, budget)
    if status == 1:
        values = tuple(bool(v) for v in assign[1:])
        return DpllResult(SAT, values, int(decisions))
    if status == 0:
        return DpllResult(UNSAT, None, int(decisions))
    return DpllResult(BUDGET, None, int(decisions))


def brute_force_sat(formula: CnfFormula) -> bool:
    """Truth-table check; only for small ``num_vars``."""
    n = formula.num_vars
    for bits in itertools.product((False, True), repeat=n):
        if formula.evaluate(bits):
            return True
    return False


def label(formula: CnfFormula, budget: int = DEFAULT_BUDGET) -> CnfFormula:
    res = dpll_solve(formula, budget)
    return formula.with_labels(feasibility=UNKNOWN if res.budget_exceeded else res.status)


# -- generators -----------------------------------------------------------------


def gen_random_ksat(n: int, m: int, k: int, seed: int) -> CnfFormula:
    """Uniform random k-SAT: ``k`` distinct variables per clause, fair-coin signs."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    if k < 1 or k > n:
        raise ValueError(f"clause width {k} must lie in [1, {n}]")
    gen = rng.stream(seed, rng.GENERATION)
    signs = rng.stream(seed, rng.SIGNS)
    clauses = []
    for _ in range(m):
        vs = gen.choice(n, size=k, replace=False) + 1
        sg = signs.integers(0, 2, size=k)
        clauses.append(tuple(int(v) if s else -int(v) for v, s in zip(vs, sg)))
    return CnfFormula(n, tuple(clauses), family="random-ksat", source_id=f"ksat-n{n}-m{m}-k{k}-s{seed}")


@dataclass(frozen=True)
class SRParams:
    """Clause-width law: ``1 + Bernoulli(p_k_2) + Geometric(p_geo)``."""

    p_k_2: float = 0.3
    p_geo: float = 0.4
    budget: int = DEFAULT_BUDGET
    max_clauses: int = 10_000


def gen_sr_pair(n: int, seed: int, config: SRParams = SRParams()) -> tuple[CnfFormula, CnfFormula]:
    """Grow random clauses until UNSAT; flip one literal of the last clause for the SAT twin."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = rng.stream(seed, rng.GENERATION)
    signs = rng.stream(seed, rng.SIGNS)
    clauses: list[tuple[int, ...]] = []
    while True:
        if len(clauses) >= config.max_clauses:
            raise BudgetExhausted("SR generation did not reach UNSAT within max_clauses")
        k = 1 + int(gen.random() < config.p_k_2) + int(gen.geometric(config.p_geo))
        k = min(k, n)
        vs = gen.choice(n, size=k, replace=False) + 1
        sg = signs.integers(0, 2, size=k)
        clause = tuple(int(v) if s else -int(v) for v, s in zip(vs, sg))
        clauses.append(clause)
        res = dpll_solve(CnfFormula(n, tuple(clauses)), config.budget)
        if res.budget_exceeded:
            raise BudgetExhausted(f"DPLL budget exhausted after {len(clauses)} clauses")
        if res.status == UNSAT:
            break
    sat_clauses = clauses[:-1] + [(-clause[0],) + clause[1:]]
    sid = f"sr-n{n}-s{seed}"
    unsat = CnfFormula(n, tuple(clauses), family="sr", feasibility=UNSAT, source_id=sid + "-unsat")
    sat = CnfFormula(n, tuple(sat_clauses), family="sr", feasibility=SAT, source_id=sid + "-sat")
    return unsat, sat


def random_graph(n_vertices: int, p_edge: float, seed: int) -> list[tuple[int, int]]:
    """G(n, p) edge list with ``u < v``, drawn from the graph substream."""
    g = rng.stream(seed, rng.GRAPH)
    pairs = list(itertools.combinations(range(n_vertices), 2))
    draws = g.random(len(pairs))
    return [pq for pq, r in zip(pairs, draws) if r < p_edge]


def _check_graph_params(n_vertices, p_edge, k):
    if n_vertices < 1 or not 1 <= k <= n_vertices:
        raise ValueError(f"need 1 <= k <= n_vertices, got k={k}, n_vertices={n_vertices}")
    if not 0.0 <= p_edge <= 1.0:
        raise ValueError("p_edge must lie in [0, 1]")


def clique_cnf(n_vertices: int, edges: Iterable[tuple[int, int]], k: int) -> CnfFormula:
    """Slot encoding: ``x[i, v]`` means vertex ``v`` fills clique slot ``i``."""
    _check_graph_params(n_vertices, 0.0, k)
    edge_set = {(min(u, v), max(u, v)) for u, v in edges}

    def x(i, v):
        return i * n_vertices + v + 1

    clauses = [tuple(x(i, v) for v in range(n_vertices)) for i in range(k)]
    for v in range(n_vertices):
        for i, j in itertools.combinations(range(k), 2):
            clauses.append((-x(i, v), -x(j, v)))
    for u, v in itertools.combinations(range(n_vertices), 2):
        if (u, v) in edge_set:
            continue
        for i, j in itertools.combinations(range(k), 2):
            clauses.append((-x(i, u), -x(j, v)))
            clauses.append((-x(i, v), -x(j, u)))
    return CnfFormula(n_vertices * k, tuple(clauses), family="clique")


def gen_clique(n_vertices: int, p_edge: float, k: int, seed: int) -> CnfFormula:
    _check_graph_params(n_vertices, p_edge, k)
    f = clique_cnf(n_vertices, random_graph(n_vertices, p_edge, seed), k)
    return f.with_labels(source_id=f"clique-n{n_vertices}-p{p_edge:g}-k{k}-s{seed}")


def vertex_cover_cnf(n_vertices: int, edges: Iterable[tuple[int, int]], k: int) -> CnfFormula:
    """Slot encoding: every edge has an endpoint in some slot, each slot holds at most one vertex."""
    _check_graph_params(n_vertices, 0.0, k)

    def x(i, v):
        return i * n_vertices + v + 1

    clauses = []
    for u, v in sorted({(min(a, b), max(a, b)) for a, b in edges}):
        clauses.append(tuple(lit for i in range(k) for lit in (x(i, u), x(i, v))))
    for i in range(k):
        for u, v in itertools.combinations(range(n_vertices), 2):
            clauses.append((-x(i, u), -x(i, v)))
    return CnfFormula(n_vertices * k, tuple(clauses), family="vcover")


def gen_vertex_cover(n_vertices: int, p_edge: float, k: int, seed: int) -> CnfFormula:
    _check_graph_params(n_vertices, p_edge, k)
    f = vertex_cover_cnf(n_vertices, random_graph(n_vertices, p_edge, seed), k)
    return f.with_labels(source_id=f"vcover-n{n_vertices}-p{p_edge:g}-k{k}-s{seed}")


# -- manifest -----------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    family: str
    feasibility: str | None = None
    seed: int | None = None


@dataclass
class CorpusManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    families: tuple[str, ...] = FAMILIES

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.path in seen:
                raise ValueError(f"duplicate manifest path {e.path!r}")
            if e.family not in self.families:
                raise ValueError(f"family {e.family!r} not in {self.families}")
            seen.add(e.path)

    def dumps(self) -> str:
        return "".join(
            json.dumps(
                {"path": e.path, "family": e.family, "feasibility": e.feasibility, "seed": e.seed},
                sort_keys=True,
            )
            + "\n"
            for e in self.entries
        )

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str, families: tuple[str, ...] | None = None) -> "CorpusManifest":
        entries = []
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            entries.append(
                ManifestEntry(rec["path"], rec["family"], rec.get("feasibility"), rec.get("seed"))
            )
        fams = families or tuple(sorted(set(FAMILIES) | {e.family for e in entries}))
        return cls(entries, fams)

    @classmethod
    def load(cls, path) -> "CorpusManifest":
        return cls.loads(Path(path).read_text())

    def resolve(self, root) -> list[CnfFormula]:
        """Read every entry's DIMACS file (relative to ``root``) with labels attached."""
        out = []
        for e in self.entries:
            p = Path(root) / e.path
            if not p.is_file():
                raise FileNotFoundError(f"manifest entry not found: {p}")
            f = parse_dimacs(p.read_text())
            out.append(f.with_labels(family=e.family, feasibility=e.feasibility, source_id=e.path))
        return out
