"""Corpus-level plumbing shared by the embedding code and the CLI."""
from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

from forgesat.checkpoint import Checkpoint
from forgesat.cnf import CnfFormula, write_dimacs
from forgesat.features import Standardization, build_node_features, get_schema
from forgesat.mip import mip_to_graph, sat_to_mip
from forgesat.model import EpochLog, Sample, TrainConfig, train

T = TypeVar("T")
R = TypeVar("R")

WORKERS_ENV = "FORGESAT_WORKERS"


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Order-preserving map; uses processes only when ``FORGESAT_WORKERS`` > 1."""
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def corpus_digest(formulas: Iterable[CnfFormula]) -> str:
    h = hashlib.sha256()
    for f in formulas:
        h.update((f.source_id or "").encode())
        h.update(b"\x00")
        h.update(write_dimacs(f).encode())
        h.update(b"\x01")
    return h.hexdigest()


def raw_features(formula: CnfFormula, schema_id: str):
    inst = sat_to_mip(formula)
    graph = mip_to_graph(inst)
    src = formula if get_schema(schema_id).id == "SAT" else inst
    return graph, build_node_features(src, schema_id)


def featurize_corpus(
    formulas: Sequence[CnfFormula],
    schema_id: str,
    stats: Standardization | None = None,
) -> tuple[list[Sample], Standardization]:
    """Graphs plus standardized features; statistics are fitted here when not given."""
    built = [raw_features(f, schema_id) for f in formulas]
    if stats is None:
        stats = Standardization.fit(nf for _, nf in built)
    samples = [
        Sample.build(g, nf.standardized(stats), name=f.source_id or str(i))
        for i, (f, (g, nf)) in enumerate(zip(formulas, built))
    ]
    return samples, stats


def pretrain(
    formulas: Sequence[CnfFormula],
    schema_id: str,
    config: TrainConfig,
    progress=None,
) -> tuple[Checkpoint, list[EpochLog]]:
    samples, stats = featurize_corpus(formulas, schema_id)
    model, logs = train(samples, config, progress=progress)
    return Checkpoint.from_model(model, schema_id, stats, corpus_digest(formulas)), logs
