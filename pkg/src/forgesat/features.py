"""Node feature matrices under the MIP or the SAT schema.

Both schemas are zero-padded to a shared width and get a trailing side
indicator column (1 = constraint node, 0 = variable node), so one set of
encoder weights accepts either.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from forgesat.cnf import CnfFormula
from forgesat.mip import BINARY, CONTINUOUS, EQ, GE, INTEGER, LE, MipInstance, merge_clause


@dataclass(frozen=True)
class FeatureSchema:
    id: str
    constraint_names: tuple[str, ...]
    variable_names: tuple[str, ...]

    @property
    def constraint_width(self) -> int:
        return len(self.constraint_names)

    @property
    def variable_width(self) -> int:
        return len(self.variable_names)

    def describe(self) -> dict:
        return {
            "id": self.id,
            "constraint_names": list(self.constraint_names),
            "variable_names": list(self.variable_names),
            "padded_width": PADDED_WIDTH,
        }


SAT_SCHEMA = FeatureSchema(
    "SAT",
    ("width", "pos_count", "neg_count", "pos_neg_ratio"),
    ("degree", "pos_deg", "neg_deg", "pos_neg_ratio", "pos_deg_norm", "neg_deg_norm"),
)
MIP_SCHEMA = FeatureSchema(
    "MIP",
    ("sense_le", "sense_eq", "sense_ge", "rhs", "nnz", "mean_abs_coef"),
    ("is_binary", "is_integer", "is_continuous", "lb", "ub", "obj", "degree"),
)
SCHEMAS = {s.id: s for s in (SAT_SCHEMA, MIP_SCHEMA)}

PADDED_WIDTH = max(
    SAT_SCHEMA.constraint_width,
    SAT_SCHEMA.variable_width,
    MIP_SCHEMA.constraint_width,
    MIP_SCHEMA.variable_width,
)
INPUT_WIDTH = PADDED_WIDTH + 1


def get_schema(schema) -> FeatureSchema:
    if isinstance(schema, FeatureSchema):
        return schema
    try:
        return SCHEMAS[str(schema).upper()]
    except KeyError:
        raise ValueError(f"unknown feature schema {schema!r}") from None


# -- SAT schema -------------------------------------------------------------


def sat_constraint_features(formula: CnfFormula, drop_tautologies: bool = False) -> np.ndarray:
    """Per clause: ``[width, pos_count, neg_count, pos_count / max(neg_count, 1)]``.

    Repeated literals count once.
    """
    rows = []
    for clause in formula.clauses:
        if drop_tautologies and merge_clause(clause) is None:
            continue
        lits = set(clause)
        pos = sum(1 for l in lits if l > 0)
        neg = len(lits) - pos
        rows.append((pos + neg, pos, neg, pos / max(neg, 1)))
    return np.array(rows, dtype=np.float64).reshape(-1, 4)


def _literal_degrees(formula: CnfFormula, drop_tautologies: bool) -> tuple[np.ndarray, np.ndarray]:
    pos = np.zeros(formula.num_vars, dtype=np.float64)
    neg = np.zeros(formula.num_vars, dtype=np.float64)
    for clause in formula.clauses:
        if drop_tautologies and merge_clause(clause) is None:
            continue
        for lit in set(clause):
            if lit > 0:
                pos[lit - 1] += 1
            else:
                neg[-lit - 1] += 1
    return pos, neg


def sat_variable_features(formula: CnfFormula, drop_tautologies: bool = False) -> np.ndarray:
    """Per variable: ``[degree, pos_deg, neg_deg, ratio, pos_deg_norm, neg_deg_norm]``.

    The ``*_norm`` columns divide by the mean over all variables; a zero mean
    gives 0.
    """
    pos, neg = _literal_degrees(formula, drop_tautologies)
    n = formula.num_vars
    if n == 0:
        return np.zeros((0, 6))
    # deg * n / total is a single rounding of exact integers, so each entry is
    # the correctly rounded value of deg / mean
    sp, sn = pos.sum(), neg.sum()
    pos_norm = pos * n / sp if sp > 0 else np.zeros(n)
    neg_norm = neg * n / sn if sn > 0 else np.zeros(n)
    ratio = pos / np.maximum(neg, 1.0)
    return np.column_stack([pos + neg, pos, neg, ratio, pos_norm, neg_norm])


# -- MIP schema -------------------------------------------------------------

_SENSE_COL = {LE: 0, EQ: 1, GE: 2}
_KIND_COL = {BINARY: 0, INTEGER: 1, CONTINUOUS: 2}


def mip_constraint_features(instance: MipInstance) -> np.ndarray:
    """Per constraint: ``[sense one-hot (<=, =, >=), rhs, nnz, mean |coef|]``."""
    out = np.zeros((len(instance.constraints), 6))
    for r, con in enumerate(instance.constraints):
        out[r, _SENSE_COL[con.sense]] = 1.0
        out[r, 3] = con.rhs
        out[r, 4] = len(con.terms)
        out[r, 5] = np.mean([abs(c) for _, c in con.terms]) if con.terms else 0.0
    return out


def mip_variable_features(instance: MipInstance) -> np.ndarray:
    """Per variable: ``[kind one-hot (bin, int, cont), lb, ub, obj, degree]``."""
    degree = np.zeros(instance.num_vars)
    for con in instance.constraints:
        for i, c in con.terms:
            if c != 0:
                degree[i] += 1
    out = np.zeros((instance.num_vars, 7))
    for r, var in enumerate(instance.variables):
        out[r, _KIND_COL[var.kind]] = 1.0
        out[r, 3:6] = (var.lb, var.ub, var.obj)
    out[:, 6] = degree
    return out


# -- assembly -----------------------------------------------------------------


@dataclass(frozen=True)
class Standardization:
    """Frozen per-side column statistics; constant columns keep mean 0, std 1."""

    constraint_mean: np.ndarray
    constraint_std: np.ndarray
    variable_mean: np.ndarray
    variable_std: np.ndarray

    @classmethod
    def identity(cls) -> "Standardization":
        z, o = np.zeros(PADDED_WIDTH), np.ones(PADDED_WIDTH)
        return cls(z, o, z.copy(), o.copy())

    @classmethod
    def fit(cls, raw: Iterable["NodeFeatures"], tol: float = 1e-12) -> "Standardization":
        raw = list(raw)
        if not raw:
            raise ValueError("cannot fit standardization on an empty corpus")
        schema = get_schema(raw[0].schema_id)
        stats = []
        for side, width in (("constraint", schema.constraint_width), ("variable", schema.variable_width)):
            mats = [getattr(nf, side)[:, :PADDED_WIDTH] for nf in raw]
            x = np.concatenate(mats, axis=0) if mats else np.zeros((0, PADDED_WIDTH))
            mean, std = np.zeros(PADDED_WIDTH), np.ones(PADDED_WIDTH)
            if len(x):
                m, s = x[:, :width].mean(axis=0), x[:, :width].std(axis=0)
                live = s > tol
                mean[:width] = np.where(live, m, 0.0)
                std[:width] = np.where(live, s, 1.0)
            stats += [mean, std]
        return cls(*stats)

    def as_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardization":
        return cls(**{k: np.asarray(d[k], dtype=np.float64) for k in cls.__dataclass_fields__})


@dataclass(frozen=True, eq=False)
class NodeFeatures:
    """``constraint`` and ``variable`` are ``(n, INPUT_WIDTH)``; last column is the side flag."""

    constraint: np.ndarray
    variable: np.ndarray
    schema_id: str

    def stacked(self) -> np.ndarray:
        return np.vstack([self.constraint, self.variable])

    def standardized(self, stats: Standardization) -> "NodeFeatures":
        c = self.constraint.copy()
        v = self.variable.copy()
        c[:, :PADDED_WIDTH] = (c[:, :PADDED_WIDTH] - stats.constraint_mean) / stats.constraint_std
        v[:, :PADDED_WIDTH] = (v[:, :PADDED_WIDTH] - stats.variable_mean) / stats.variable_std
        schema = get_schema(self.schema_id)
        # padding stays exactly zero
        c[:, schema.constraint_width : PADDED_WIDTH] = 0.0
        v[:, schema.variable_width : PADDED_WIDTH] = 0.0
        return NodeFeatures(c, v, self.schema_id)


def _pad(x: np.ndarray, indicator: float) -> np.ndarray:
    out = np.zeros((x.shape[0], INPUT_WIDTH))
    out[:, : x.shape[1]] = x
    out[:, -1] = indicator
    return out


def build_node_features(source, schema, stats: Standardization | None = None) -> NodeFeatures:
    """Featurize a formula (SAT schema) or a MIP instance (MIP schema)."""
    schema = get_schema(schema)
    if schema.id == "SAT":
        if not isinstance(source, CnfFormula):
            raise TypeError("SAT schema needs a CnfFormula")
        c = sat_constraint_features(source, drop_tautologies=True)
        v = sat_variable_features(source, drop_tautologies=True)
    else:
        if not isinstance(source, MipInstance):
            raise TypeError("MIP schema needs a MipInstance")
        c = mip_constraint_features(source)
        v = mip_variable_features(source)
    nf = NodeFeatures(_pad(c, 1.0), _pad(v, 0.0), schema.id)
    if not (np.isfinite(nf.constraint).all() and np.isfinite(nf.variable).all()):
        raise ValueError("non-finite feature value")
    return nf.standardized(stats) if stats is not None else nf


def native_mask(schema, n_constraints: int, n_variables: int) -> np.ndarray:
    """Boolean ``(n_nodes, PADDED_WIDTH)`` mask of each side's unpadded columns."""
    schema = get_schema(schema)
    mask = np.zeros((n_constraints + n_variables, PADDED_WIDTH), dtype=bool)
    mask[:n_constraints, : schema.constraint_width] = True
    mask[n_constraints:, : schema.variable_width] = True
    return mask


def dump_features(nf: NodeFeatures) -> str:
    """One record per node: ``side index v0 v1 ...``."""
    lines = []
    for side, mat in (("c", nf.constraint), ("v", nf.variable)):
        for i, row in enumerate(mat):
            lines.append(" ".join([side, str(i)] + [repr(float(x)) for x in row]))
    return "\n".join(lines) + ("\n" if lines else "")
