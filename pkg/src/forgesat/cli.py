"""``forgesat`` command line: gen, label, pretrain, embed, eval, reproduce.

Exit codes: 0 success, 1 usage error, 2 data error, 3 reproducibility divergence.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from forgesat import __version__, cnf, kernels
from forgesat.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from forgesat.cnf import CorpusManifest, ManifestEntry
from forgesat.embeddings import STATIC_SAT, VARIANT_SCHEMAS, EmbeddingTable, embed_formulas, normalize_variant
from forgesat.evalkit import VariantSummary, evaluate, format_metrics, pca_2d, scatter_svg
from forgesat.model import NonFiniteLoss, TrainConfig
from forgesat.pipeline import parallel_map, pretrain

log = logging.getLogger("forgesat")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3
MANIFEST = "manifest.jsonl"

DEFAULT_CONFIG = {
    "seed": 0,
    "corpus": None,
    "checkpoint": None,
    "out": None,
    "variant": "forge-sat",
    "train": {},
    "gen": {
        "families": {"random-ksat": 40, "clique": 40, "vcover": 40},
        "balance": True,
        "budget": cnf.DEFAULT_BUDGET,
        "max_attempts": 20000,
        "random-ksat": {"n": 20, "m": 91, "k": 3},
        "sr": {"n": 10, "p_k_2": 0.3, "p_geo": 0.4},
        "clique": {"n_vertices": 10, "p_edge": 0.5, "k": 4},
        "vcover": {"n_vertices": 8, "p_edge": 0.5, "k": 4},
    },
    "label": {"family": None, "budget": cnf.DEFAULT_BUDGET},
    "eval": {"k": None, "restarts": 10, "seeds": [0, 1, 2], "trials": 1000, "variants": None},
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# -- config -------------------------------------------------------------------


# mappings that a config replaces wholesale instead of merging into
_REPLACED = {"families"}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in _REPLACED:
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def effective_config(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if getattr(args, "config", None):
        try:
            loaded = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a mapping")
        cfg = _merge(cfg, loaded)
    for key in ("seed", "corpus", "checkpoint", "out", "variant"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("k", "restarts", "trials"):
        val = getattr(args, key, None)
        if val is not None:
            cfg["eval"][key] = val
    if getattr(args, "eval_seeds", None):
        cfg["eval"]["seeds"] = [int(s) for s in args.eval_seeds.split(",")]
    if getattr(args, "variants", None):
        cfg["eval"]["variants"] = [v.strip() for v in args.variants.split(",") if v.strip()]
    for key in TrainConfig.__dataclass_fields__:
        val = getattr(args, f"train_{key}", None)
        if val is not None:
            cfg["train"][key] = val
    if getattr(args, "epochs", None) is not None:
        cfg["train"]["epochs"] = args.epochs
    if getattr(args, "family", None):
        if args.command == "gen":
            fams = {}
            for item in args.family:
                name, _, count = item.partition("=")
                if not count.isdigit():
                    raise UsageError(f"--family expects NAME=COUNT, got {item!r}")
                fams[name] = int(count)
            cfg["gen"]["families"] = fams
        else:
            cfg["label"]["family"] = args.family[0]
    if getattr(args, "budget", None) is not None:
        cfg["gen"]["budget"] = args.budget
        cfg["label"]["budget"] = args.budget
    if getattr(args, "balance", None) is not None:
        cfg["gen"]["balance"] = args.balance
    cfg["train"].setdefault("seed", cfg["seed"])
    for key in ("corpus", "checkpoint", "out"):
        if cfg.get(key):
            cfg[key] = str(Path(cfg[key]).resolve())
    return cfg


def train_config(cfg: dict) -> TrainConfig:
    unknown = set(cfg["train"]) - set(TrainConfig.__dataclass_fields__)
    if unknown:
        raise UsageError(f"unknown train settings: {sorted(unknown)}")
    try:
        return TrainConfig(**cfg["train"])
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _require(cfg: dict, key: str) -> Path:
    if not cfg.get(key):
        raise UsageError(f"--{key} is required")
    return Path(cfg[key])


# -- digests and run records --------------------------------------------------


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def corpus_dir_digest(corpus: Path) -> str:
    """Hash of the manifest and every file it references, in manifest order."""
    mpath = corpus / MANIFEST
    if not mpath.is_file():
        raise DataError(f"no {MANIFEST} in {corpus}")
    h = hashlib.sha256(mpath.read_bytes())
    for e in CorpusManifest.load(mpath).entries:
        p = corpus / e.path
        if not p.is_file():
            raise DataError(f"manifest entry not found: {p}")
        h.update(e.path.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


@dataclass
class RunRecord:
    command: str
    config: dict
    tool_version: str = __version__
    kernel_backend: str = kernels.BACKEND
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    status: str = "running"
    started: float = 0.0
    finished: float | None = None

    def to_json(self) -> str:
        # key order matters: family order drives generation order
        return json.dumps(self.__dict__, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls(**json.loads(text))

    def write(self, out: Path) -> Path:
        out.mkdir(parents=True, exist_ok=True)
        suffix = f"_{normalize_variant(self.config['variant'])}" if self.command == "embed" else ""
        path = out / f"run_{self.command}{suffix}.json"
        path.write_text(self.to_json())
        return path


def _outputs(out: Path, names) -> dict:
    return {n: file_digest(out / n) for n in sorted(names)}


# -- gen / label ---------------------------------------------------------------


def _generator(family: str, params: dict):
    if family == "random-ksat":
        return lambda s: [cnf.gen_random_ksat(params["n"], params["m"], params["k"], s)]
    if family == "clique":
        return lambda s: [cnf.gen_clique(params["n_vertices"], params["p_edge"], params["k"], s)]
    if family == "vcover":
        return lambda s: [cnf.gen_vertex_cover(params["n_vertices"], params["p_edge"], params["k"], s)]
    if family == "sr":
        sp = cnf.SRParams(params.get("p_k_2", 0.3), params.get("p_geo", 0.4), params.get("budget", cnf.DEFAULT_BUDGET))
        return lambda s: list(cnf.gen_sr_pair(params["n"], s, sp))
    raise UsageError(f"unknown family {family!r}; choose from {', '.join(cnf.FAMILIES)}")


@dataclass(frozen=True)
class _GenJob:
    family: str
    params: tuple
    seed: int
    budget: int

    def __call__(self):
        out = []
        try:
            forms = _generator(self.family, dict(self.params))(self.seed)
        except cnf.BudgetExhausted:
            return []
        for f in forms:
            if f.feasibility is None:
                f = cnf.label(f, self.budget)
            out.append(f)
        return out


def _run_job(job: _GenJob):
    return job()


def generate_family(family: str, count: int, gcfg: dict, seed: int) -> list[tuple[int, cnf.CnfFormula]]:
    """``count`` labelled instances; with ``balance`` half SAT and half UNSAT."""
    params = tuple(sorted(gcfg.get(family, {}).items()))
    balance = gcfg["balance"]
    want = {cnf.SAT: count // 2, cnf.UNSAT: count - count // 2} if balance else None
    got: list[tuple[int, cnf.CnfFormula]] = []
    counts = {cnf.SAT: 0, cnf.UNSAT: 0}
    base = seed * 1_000_000
    attempt = 0
    batch = max(count, 8)
    while len(got) < count:
        if attempt >= gcfg["max_attempts"]:
            raise DataError(f"{family}: could not fill {count} instances in {attempt} attempts")
        jobs = [_GenJob(family, params, base + attempt + j, gcfg["budget"]) for j in range(batch)]
        attempt += batch
        for job, forms in zip(jobs, parallel_map(_run_job, jobs)):
            for f in forms:
                if len(got) >= count:
                    break
                if want is not None:
                    if f.feasibility not in want or counts[f.feasibility] >= want[f.feasibility]:
                        continue
                    counts[f.feasibility] += 1
                got.append((job.seed, f))
    return got


def cmd_gen(cfg: dict) -> RunRecord:
    out = Path(cfg.get("corpus") or _require(cfg, "out"))
    out.mkdir(parents=True, exist_ok=True)
    rec = RunRecord("gen", cfg, started=time.time())
    entries, files, summary = [], [], {}
    for family, count in cfg["gen"]["families"].items():
        _generator(family, cfg["gen"].get(family, {}))  # validates the family name early
        fam_dir = out / family
        fam_dir.mkdir(exist_ok=True)
        items = generate_family(family, int(count), cfg["gen"], int(cfg["seed"]))
        tally = {cnf.SAT: 0, cnf.UNSAT: 0, cnf.UNKNOWN: 0}
        for seed, f in items:
            tag = f.source_id or f"{family}-s{seed}"
            rel = f"{family}/{tag}.cnf"
            header = f"c family={family} seed={seed} feasibility={f.feasibility}\n"
            (out / rel).write_text(header + cnf.write_dimacs(f))
            entries.append(ManifestEntry(rel, family, f.feasibility, seed))
            files.append(rel)
            tally[f.feasibility] += 1
        summary[family] = tally
        log.info("%s: %s", family, tally)
    CorpusManifest(entries).save(out / MANIFEST)
    rec.outputs = _outputs(out, files + [MANIFEST])
    rec.extra["summary"] = summary
    print(json.dumps({"corpus": str(out), "instances": len(entries), "summary": summary}, sort_keys=True))
    return rec


@dataclass(frozen=True)
class _LabelJob:
    path: str
    budget: int

    def __call__(self):
        return cnf.label(cnf.read_dimacs(self.path), self.budget).feasibility


def _run_label(job: _LabelJob):
    return job()


def cmd_label(cfg: dict) -> RunRecord:
    corpus = _require(cfg, "corpus")
    out = _require(cfg, "out")
    rec = RunRecord("label", cfg, started=time.time())
    mpath = corpus / MANIFEST
    if mpath.is_file():
        manifest = CorpusManifest.load(mpath)
        rec.inputs["corpus"] = corpus_dir_digest(corpus)
    else:
        family = cfg["label"].get("family")
        if not family:
            raise UsageError("corpus has no manifest; pass --family to ingest plain DIMACS files")
        paths = sorted(p.relative_to(corpus).as_posix() for p in corpus.rglob("*.cnf"))
        if not paths:
            raise DataError(f"no .cnf files under {corpus}")
        manifest = CorpusManifest([ManifestEntry(p, family) for p in paths], families=(family,) + cnf.FAMILIES)
        h = hashlib.sha256()
        for p in paths:
            h.update(p.encode())
            h.update((corpus / p).read_bytes())
        rec.inputs["corpus"] = h.hexdigest()
    jobs = [_LabelJob(str(corpus / e.path), int(cfg["label"]["budget"])) for e in manifest.entries]
    labels = parallel_map(_run_label, jobs)
    out.mkdir(parents=True, exist_ok=True)
    rel_root = os.path.relpath(corpus.resolve(), out.resolve())
    entries = [
        ManifestEntry(Path(rel_root, e.path).as_posix(), e.family, lab, e.seed)
        for e, lab in zip(manifest.entries, labels)
    ]
    CorpusManifest(entries, manifest.families).save(out / MANIFEST)
    tally: dict[str, dict[str, int]] = {}
    for e in entries:
        tally.setdefault(e.family, {}).setdefault(e.feasibility, 0)
        tally[e.family][e.feasibility] += 1
    rec.outputs = _outputs(out, [MANIFEST])
    rec.extra["summary"] = tally
    print(json.dumps({"labelled": len(entries), "summary": tally}, sort_keys=True))
    return rec


# -- pretrain / embed -----------------------------------------------------------


def _load_corpus(corpus: Path) -> list[cnf.CnfFormula]:
    mpath = corpus / MANIFEST
    if not mpath.is_file():
        raise DataError(f"no {MANIFEST} in {corpus}")
    try:
        return CorpusManifest.load(mpath).resolve(corpus)
    except (FileNotFoundError, cnf.DimacsError, ValueError) as exc:
        raise DataError(str(exc)) from None


def _pretrain_schema(variant: str) -> str:
    v = normalize_variant(variant)
    if v == STATIC_SAT:
        raise UsageError("static-sat has nothing to pretrain")
    return VARIANT_SCHEMAS[v][0]


def cmd_pretrain(cfg: dict) -> RunRecord:
    corpus = _require(cfg, "corpus")
    out = _require(cfg, "out")
    ckpt_path = Path(cfg.get("checkpoint") or out / "checkpoint.fsat")
    schema = _pretrain_schema(cfg["variant"])
    tcfg = train_config(cfg)
    rec = RunRecord("pretrain", cfg, started=time.time())
    rec.inputs["corpus"] = corpus_dir_digest(corpus)
    formulas = _load_corpus(corpus)
    out.mkdir(parents=True, exist_ok=True)
    loss_path = out / "loss.log"
    try:
        with loss_path.open("w") as fh:
            ckpt, _ = pretrain(formulas, schema, tcfg, progress=lambda e: fh.write(e.line() + "\n"))
        ckpt_path.parent.mkdir(parents=True, exist_ok=True)
        save_checkpoint(ckpt, ckpt_path)
    except (NonFiniteLoss, ValueError) as exc:
        for p in (loss_path, ckpt_path):
            p.unlink(missing_ok=True)
        raise DataError(f"pretraining aborted: {exc}") from None
    rec.outputs = {"loss.log": file_digest(loss_path), "checkpoint": file_digest(ckpt_path)}
    rec.extra["schema"] = schema
    rec.extra["checkpoint_path"] = str(ckpt_path)
    print(json.dumps({"checkpoint": str(ckpt_path), "schema": schema, "epochs": tcfg.epochs}))
    return rec


def cmd_embed(cfg: dict) -> RunRecord:
    corpus = _require(cfg, "corpus")
    out = _require(cfg, "out")
    variant = normalize_variant(cfg["variant"])
    rec = RunRecord("embed", cfg, started=time.time())
    rec.inputs["corpus"] = corpus_dir_digest(corpus)
    ckpt = None
    if variant == STATIC_SAT:
        if cfg.get("checkpoint"):
            raise UsageError("static-sat does not take a checkpoint")
    else:
        ckpt_path = _require(cfg, "checkpoint")
        rec.inputs["checkpoint"] = file_digest(ckpt_path)
        ckpt = load_checkpoint(ckpt_path)
    formulas = _load_corpus(corpus)
    table = embed_formulas(formulas, variant, ckpt)
    out.mkdir(parents=True, exist_ok=True)
    name = f"embeddings_{variant}.tsv"
    table.save(out / name)
    rec.outputs = _outputs(out, [name])
    rec.extra["variant"] = variant
    rec.extra["transfer"] = table.transfer
    print(json.dumps({"table": str(out / name), "rows": len(table), "dim": table.matrix.shape[1], "transfer": table.transfer}))
    return rec


# -- eval ---------------------------------------------------------------------


def cmd_eval(cfg: dict, tables: list[str]) -> RunRecord:
    out = _require(cfg, "out")
    ecfg = cfg["eval"]
    rec = RunRecord("eval", cfg, started=time.time())
    rec.extra["tables"] = list(tables)
    loaded: dict[str, EmbeddingTable] = {}
    for t in tables:
        tb = EmbeddingTable.load(t)
        rec.inputs[f"table:{tb.variant}"] = file_digest(t)
        loaded[tb.variant] = tb
    requested = [normalize_variant(v) for v in (ecfg.get("variants") or [])]
    missing = [v for v in requested if v not in loaded]
    if missing:
        raise DataError(f"missing embedding tables for: {', '.join(missing)}")
    if not loaded:
        raise UsageError("no embedding tables given")
    first = next(iter(loaded.values()))
    for name, tb in loaded.items():
        if (tb.ids, tb.families, tb.feasibility) != (first.ids, first.families, first.feasibility):
            raise DataError(f"{name} covers a different instance set or labels")
    known = np.array([f != cnf.UNKNOWN for f in first.feasibility])
    excluded = int((~known).sum())
    labels = [g for g, ok in zip(first.group_labels(), known) if ok]
    k = ecfg.get("k") or len(set(labels))
    seeds = [int(s) for s in ecfg["seeds"]]
    out.mkdir(parents=True, exist_ok=True)
    summaries: list[VariantSummary] = []
    fam_summaries: list[VariantSummary] = []
    written = ["metrics.tsv"]
    for name, tb in loaded.items():
        x = tb.matrix[known]
        summaries.append(evaluate(name, x, labels, k, seeds, int(ecfg["restarts"]), int(ecfg["trials"]) or None))
        coords, frac = pca_2d(x)
        svg = f"scatter_{name}.svg"
        scatter_svg(coords, labels, f"{name} (PCA {frac[0]:.2f}/{frac[1]:.2f})", out / svg)
        written.append(svg)
        if excluded:
            fk = len(set(tb.families))
            fam_summaries.append(evaluate(name, tb.matrix, tb.families, fk, seeds, int(ecfg["restarts"]), None))
    (out / "metrics.tsv").write_text(format_metrics(summaries))
    if fam_summaries:
        (out / "metrics_family.tsv").write_text(format_metrics(fam_summaries))
        written.append("metrics_family.tsv")
    rec.outputs = _outputs(out, written)
    rec.extra.update(k=k, excluded_unknown=excluded, instances=int(known.sum()))
    sys.stdout.write(format_metrics(summaries))
    if excluded:
        print(f"# excluded {excluded} instances with unknown feasibility from group metrics")
    return rec


# -- reproduce ----------------------------------------------------------------


def _current_inputs(rec: RunRecord, cfg: dict) -> dict:
    cur = {}
    for key in rec.inputs:
        if key == "corpus":
            corpus = Path(cfg["corpus"])
            if (corpus / MANIFEST).is_file():
                cur[key] = corpus_dir_digest(corpus)
            else:
                h = hashlib.sha256()
                for p in sorted(q.relative_to(corpus).as_posix() for q in corpus.rglob("*.cnf")):
                    h.update(p.encode())
                    h.update((corpus / p).read_bytes())
                cur[key] = h.hexdigest()
        elif key == "checkpoint":
            cur[key] = file_digest(cfg["checkpoint"])
        elif key.startswith("table:"):
            variant = key.split(":", 1)[1]
            path = next(t for t in rec.extra["tables"] if EmbeddingTable.load(t).variant == variant)
            cur[key] = file_digest(path)
    return cur


def cmd_reproduce(record_path: str) -> int:
    rec = RunRecord.from_json(Path(record_path).read_text())
    if rec.status != "ok":
        raise DataError(f"run record status is {rec.status!r}, not 'ok'")
    divergences = []
    try:
        current = _current_inputs(rec, rec.config)
    except (OSError, DataError, StopIteration) as exc:
        raise DataError(f"cannot resolve recorded inputs: {exc}") from None
    for key, digest in rec.inputs.items():
        if current.get(key) != digest:
            divergences.append(f"input {key}: recorded {digest[:12]}, now {str(current.get(key))[:12]}")
    # replay next to the original output so relative paths come out identical
    orig = Path(rec.config.get("out") or rec.config.get("corpus"))
    orig.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(prefix=".repro-", dir=orig.parent) as tmp:
        cfg = copy.deepcopy(rec.config)
        cfg["out"] = tmp
        if rec.command == "gen":
            cfg["corpus"] = tmp
        if rec.command == "pretrain":
            cfg["checkpoint"] = str(Path(tmp) / "checkpoint.fsat")
        new = _dispatch(rec.command, cfg, rec.extra.get("tables", []))
        for key, digest in rec.outputs.items():
            got = new.outputs.get(key)
            if got != digest:
                divergences.append(f"output {key}: recorded {digest[:12]}, now {str(got)[:12]}")
    for d in divergences:
        print(f"DIVERGENCE {d}")
    print(json.dumps({"record": record_path, "divergences": len(divergences)}))
    return EXIT_DIVERGED if divergences else EXIT_OK


# -- entry point ----------------------------------------------------------------


def _dispatch(command: str, cfg: dict, tables=()) -> RunRecord:
    if command == "gen":
        return cmd_gen(cfg)
    if command == "label":
        return cmd_label(cfg)
    if command == "pretrain":
        return cmd_pretrain(cfg)
    if command == "embed":
        return cmd_embed(cfg)
    if command == "eval":
        return cmd_eval(cfg, list(tables))
    raise UsageError(f"unknown command {command!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--variant", help="forge-mip | forge-mip-sat | forge-sat | static-sat")
    common.add_argument("--checkpoint")
    common.add_argument("--corpus")
    common.add_argument("--out")
    common.add_argument("--k", type=int)
    common.add_argument("--restarts", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--eval-seeds", help="comma-separated clustering seeds")
    common.add_argument("--variants", help="comma-separated variants that eval must find")
    common.add_argument("--epochs", type=int)
    common.add_argument("--budget", type=int, help="DPLL decision budget")
    common.add_argument("--family", action="append", help="gen: NAME=COUNT (repeatable); label: family of plain DIMACS files")
    common.add_argument("--balance", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("-v", "--verbose", action="store_true")
    for name, fld in TrainConfig.__dataclass_fields__.items():
        if name in ("epochs", "seed"):
            continue
        common.add_argument(f"--{name.replace('_', '-')}", dest=f"train_{name}", type=type(fld.default))

    p = _Parser(prog="forgesat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"forgesat {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("gen", parents=[common], help="generate and label a synthetic corpus")
    sub.add_parser("label", parents=[common], help="label a corpus (or plain DIMACS directory) with DPLL")
    sub.add_parser("pretrain", parents=[common], help="pretrain the graph autoencoder")
    sub.add_parser("embed", parents=[common], help="write an instance embedding table")
    ev = sub.add_parser("eval", parents=[common], help="cluster embedding tables and report NMI/purity")
    ev.add_argument("tables", nargs="+")
    rp = sub.add_parser("reproduce", help="replay a run record and compare digests")
    rp.add_argument("record")
    rp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "reproduce":
            return cmd_reproduce(args.record)
        cfg = effective_config(args)
        tables = [str(Path(t).resolve()) for t in getattr(args, "tables", ())]
        record_dir = cfg.get("out") or cfg.get("corpus")
        if not record_dir:
            raise UsageError("--out is required")
        RunRecord(args.command, cfg, started=time.time(), extra={"tables": tables}).write(Path(record_dir))
        try:
            rec = _dispatch(args.command, cfg, tables)
        except Exception:
            RunRecord(args.command, cfg, status="failed", finished=time.time()).write(Path(record_dir))
            raise
        rec.status = "ok"
        rec.finished = time.time()
        rec.write(Path(record_dir))
        return EXIT_OK
    except UsageError as exc:
        print(f"forgesat: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CheckpointError, cnf.DimacsError, FileNotFoundError, ValueError) as exc:
        print(f"forgesat: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
