"""Instance, clause and variable embeddings, plus the static feature baseline."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from forgesat.checkpoint import Checkpoint, CheckpointError
from forgesat.cnf import CnfFormula
from forgesat.features import sat_constraint_features, sat_variable_features
from forgesat.pipeline import featurize_corpus

FORGE_MIP = "FORGE-MIP"
FORGE_MIP_SAT = "FORGE-MIP-SAT"
FORGE_SAT = "FORGE-SAT"
STATIC_SAT = "STATIC-SAT"
VARIANTS = (FORGE_MIP, FORGE_MIP_SAT, FORGE_SAT, STATIC_SAT)

# variant -> (schema the checkpoint was trained on, schema used for featurizing)
VARIANT_SCHEMAS = {
    FORGE_MIP: ("MIP", "MIP"),
    FORGE_MIP_SAT: ("MIP", "SAT"),
    FORGE_SAT: ("SAT", "SAT"),
}


def normalize_variant(name: str) -> str:
    v = name.upper().replace("_", "-")
    if v not in VARIANTS:
        raise ValueError(f"unknown variant {name!r}; choose from {', '.join(VARIANTS)}")
    return v


@dataclass(frozen=True)
class InstanceEmbedding:
    vector: np.ndarray
    instance_id: str
    variant: str


@dataclass(frozen=True)
class NodeEmbeddingSet:
    clause_codes: np.ndarray
    clause_vectors: np.ndarray
    variable_codes: np.ndarray
    variable_vectors: np.ndarray


def instance_embedding(codes: Sequence[int], k: int, instance_id: str = "", variant: str = FORGE_SAT) -> InstanceEmbedding:
    """Normalized histogram of codeword assignments over all nodes."""
    codes = np.asarray(codes, dtype=np.int64)
    if codes.size == 0:
        raise ValueError("empty code list")
    if codes.min() < 0 or codes.max() >= k:
        raise ValueError(f"code out of range [0, {k})")
    hist = np.bincount(codes, minlength=k).astype(np.float64) / codes.size
    return InstanceEmbedding(hist, instance_id, variant)


def node_embeddings(codes: Sequence[int], codebook: np.ndarray, n_constraints: int) -> NodeEmbeddingSet:
    """Codeword vectors per node; the first ``n_constraints`` codes are clause nodes."""
    codes = np.asarray(codes, dtype=np.int64)
    if codes.size and (codes.min() < 0 or codes.max() >= len(codebook)):
        raise ValueError("code out of range")
    vecs = codebook[codes]
    return NodeEmbeddingSet(codes[:n_constraints], vecs[:n_constraints], codes[n_constraints:], vecs[n_constraints:])


def static_instance_embedding(formula: CnfFormula) -> np.ndarray:
    """Mean clause features (4) followed by mean variable features (6), unstandardized."""
    if formula.num_clauses == 0:
        raise ValueError("static embedding needs at least one clause")
    c = sat_constraint_features(formula)
    v = sat_variable_features(formula)
    return np.concatenate([c.mean(axis=0), v.mean(axis=0) if len(v) else np.zeros(6)])


# -- corpus tables ------------------------------------------------------------


@dataclass
class EmbeddingTable:
    ids: list[str]
    families: list[str]
    feasibility: list[str]
    variant: str
    matrix: np.ndarray
    transfer: dict | None = None

    def __len__(self):
        return len(self.ids)

    def group_labels(self) -> list[str]:
        return [f"{f}|{s}" for f, s in zip(self.families, self.feasibility)]

    def dumps(self) -> str:
        d = self.matrix.shape[1]
        lines = ["\t".join(["id", "family", "feasibility", "variant"] + [f"v{j}" for j in range(d)])]
        for i, row in enumerate(self.matrix):
            lines.append(
                "\t".join([self.ids[i], self.families[i], self.feasibility[i], self.variant] + [repr(float(x)) for x in row])
            )
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "EmbeddingTable":
        rows = [line.split("\t") for line in text.splitlines() if line]
        if not rows or rows[0][:4] != ["id", "family", "feasibility", "variant"]:
            raise ValueError("not an embedding table")
        body = rows[1:]
        variants = {r[3] for r in body}
        if len(variants) > 1:
            raise ValueError(f"table mixes variants: {sorted(variants)}")
        variant = variants.pop() if variants else ""
        d = len(rows[0]) - 4
        mat = np.array([[float(x) for x in r[4:]] for r in body], dtype=np.float64).reshape(len(body), d)
        return cls([r[0] for r in body], [r[1] for r in body], [r[2] for r in body], variant, mat)

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        return cls.loads(Path(path).read_text())


def embed_formulas(
    formulas: Sequence[CnfFormula],
    variant: str,
    checkpoint: Checkpoint | None = None,
) -> EmbeddingTable:
    """Instance embeddings for ``formulas`` under one variant, in input order."""
    variant = normalize_variant(variant)
    ids = [f.source_id or str(i) for i, f in enumerate(formulas)]
    fams = [f.family or "" for f in formulas]
    feas = [f.feasibility or "UNKNOWN" for f in formulas]
    if variant == STATIC_SAT:
        if checkpoint is not None:
            raise ValueError("STATIC-SAT does not use a checkpoint")
        mat = np.array([static_instance_embedding(f) for f in formulas]).reshape(len(formulas), 10)
        return EmbeddingTable(ids, fams, feas, variant, mat)
    if checkpoint is None:
        raise ValueError(f"{variant} needs a checkpoint")
    trained, applied = VARIANT_SCHEMAS[variant]
    base_schema = checkpoint.transfer["trained_schema"] if checkpoint.transfer else checkpoint.schema_id
    if base_schema != trained:
        raise CheckpointError(f"{variant} needs a {trained}-trained checkpoint, got {base_schema}")
    ckpt = checkpoint.bind_schema(applied) if checkpoint.schema_id != applied else checkpoint
    # transferred weights carry statistics for the wrong schema: refit on this corpus
    stats = None if ckpt.transfer else ckpt.stats
    samples, _ = featurize_corpus(formulas, applied, stats)
    model = ckpt.model()
    k = ckpt.config.codebook_size
    mat = np.zeros((len(formulas), k))
    for i, s in enumerate(samples):
        codes = model.codes(s.graph, s.x)
        mat[i] = instance_embedding(codes, k, ids[i], variant).vector
    return EmbeddingTable(ids, fams, feas, variant, mat, transfer=ckpt.transfer)


def embed_nodes(formula: CnfFormula, checkpoint: Checkpoint) -> NodeEmbeddingSet:
    samples, _ = featurize_corpus([formula], checkpoint.schema_id, checkpoint.stats)
    s = samples[0]
    codes = checkpoint.model().codes(s.graph, s.x)
    return node_embeddings(codes, checkpoint.codebook, s.graph.n_constraints)


def embed_corpus(manifest, root, variant: str, checkpoint: Checkpoint | None = None) -> EmbeddingTable:
    """Resolve a manifest's DIMACS files and embed them in manifest order."""
    return embed_formulas(manifest.resolve(root), variant, checkpoint)
