"""Acceptance gate: one test per criterion, each recorded for the summary table."""
import json
import time
from fractions import Fraction

import numpy as np
import pytest

from forgesat import cli
from forgesat.checkpoint import dumps
from forgesat.cnf import SAT, dpll_solve, gen_clique, gen_vertex_cover
from forgesat.embeddings import EmbeddingTable, embed_formulas
from forgesat.evalkit import evaluate, permutation_null, purity
from forgesat.features import sat_constraint_features, sat_variable_features
from forgesat.mip import sat_to_mip
from forgesat.model import TrainConfig, sample_negatives
from forgesat.pipeline import pretrain

from conftest import ACCEPTANCE, FIVE_CLAUSES, make_sample, model_grad_report, random_formula
from test_evalkit import oracle_nmi, oracle_purity

pytestmark = pytest.mark.acceptance


def record(num, ok, detail):
    ACCEPTANCE[num] = (bool(ok), detail)
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def all_points(n):
    return ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(np.float64)


def truth_table_sat(f):
    pts = all_points(f.num_vars).astype(bool)
    ok = np.ones(len(pts), dtype=bool)
    for c in f.clauses:
        sat = np.zeros(len(pts), dtype=bool)
        for lit in c:
            sat |= pts[:, abs(lit) - 1] == (lit > 0)
        ok &= sat
    return bool(ok.any())


def mip_feasible(inst):
    pts = all_points(inst.num_vars)
    if not inst.constraints:
        return True
    a = np.zeros((len(inst.constraints), inst.num_vars))
    b = np.array([c.rhs for c in inst.constraints])
    for i, con in enumerate(inst.constraints):
        assert con.sense == ">="
        for j, coef in con.terms:
            a[i, j] = coef
    return bool((pts @ a.T >= b).all(axis=1).any())


def test_criterion_1_encoding_equivalence():
    t0 = time.time()
    g = np.random.default_rng(101)
    formulas = [random_formula(g, n_max=10, k_choices=(2, 3), ratio=(1.0, 6.0)) for _ in range(200)]
    formulas += [gen_clique(5, 0.6, 3, s) for s in range(25)]
    formulas += [gen_vertex_cover(6, 0.4, 2, s) for s in range(25)]
    agree = dpll_ok = 0
    for f in formulas:
        status = dpll_solve(f).status == SAT
        dpll_ok += status == truth_table_sat(f)
        agree += mip_feasible(sat_to_mip(f)) == status
    sat = sum(truth_table_sat(f) for f in formulas)
    dt = time.time() - t0
    record(1, agree == dpll_ok == len(formulas) and dt < 60,
           f"{agree}/{len(formulas)} MIP-vs-DPLL, {dpll_ok}/{len(formulas)} DPLL-vs-truth-table, "
           f"{sat} SAT, {dt:.1f}s")


def test_criterion_2_feature_identities():
    g = np.random.default_rng(102)
    clauses = variables = 0
    bad = []
    worst_mean = 0.0
    while clauses < 1000 or variables < 1000:
        f = random_formula(g, n_max=12, k_choices=(1, 2, 3), ratio=(0.3, 5.0))
        c, v = sat_constraint_features(f), sat_variable_features(f)
        clauses += len(c)
        variables += len(v)
        if not (np.isfinite(c).all() and np.isfinite(v).all()):
            bad.append("non-finite")
        if (c[:, 0] != c[:, 1] + c[:, 2]).any():
            bad.append("width")
        if (v[:, 0] != v[:, 1] + v[:, 2]).any():
            bad.append("degree")
        total = int(v[:, 1].sum())
        if total:
            # the exact rational mean of deg/mean(deg) is 1; each stored entry
            # must be that rational correctly rounded
            exact = [Fraction(int(p) * f.num_vars, total) for p in v[:, 1]]
            if sum(exact) / len(exact) != 1 or any(float(e) != x for e, x in zip(exact, v[:, 4])):
                bad.append("pos_deg_norm")
            worst_mean = max(worst_mean, abs(v[:, 4].mean() - 1.0))
    ok = not bad and worst_mean <= 4 * np.finfo(float).eps
    record(2, ok, f"{clauses} clauses, {variables} variables, violations={sorted(set(bad))}, "
                  f"pos_deg_norm exact per entry, float mean off by <= {worst_mean:.1e}")


def test_criterion_3_gradient_check():
    t0 = time.time()
    s = make_sample(FIVE_CLAUSES)
    neg = sample_negatives(s, 1.0, np.random.default_rng(0))
    from forgesat.model import ForgeModel

    rep = model_grad_report(ForgeModel(TrainConfig()), s, neg)
    worst = max(rep, key=lambda n: rep[n][0])
    coord = max(r[1] for r in rep.values())
    absdev = max(r[2] for r in rep.values())
    dt = time.time() - t0
    record(3, rep[worst][0] < 1e-4 and dt < 60,
           f"max group rel err {rep[worst][0]:.2e} ({worst}) over {len(rep)} groups; "
           f"per-coordinate worst {coord:.1e} at abs deviation <= {absdev:.1e}; {dt:.1f}s")


def _family_corpus(counts, seed):
    gcfg = dict(cli.DEFAULT_CONFIG["gen"])
    out = []
    for fam, n in counts.items():
        out += [f for _, f in cli.generate_family(fam, n, gcfg, seed)]
    return out


@pytest.mark.slow
def test_criterion_4_training():
    t0 = time.time()
    corpus = _family_corpus({"random-ksat": 20, "clique": 20, "vcover": 20}, seed=2)
    cfg = TrainConfig()
    ck1, logs = pretrain(corpus, "SAT", cfg)
    ck2, logs2 = pretrain(corpus, "SAT", cfg)
    first, last = logs[0].total, logs[-1].total
    used = logs[-1].codes_used
    identical = dumps(ck1) == dumps(ck2) and [l.line() for l in logs] == [l.line() for l in logs2]
    dt = time.time() - t0
    ok = len(corpus) == 60 and last < 0.5 * first and used >= cfg.codebook_size / 4 and identical
    record(4, ok, f"loss {first:.3f} -> {last:.3f} (ratio {last / first:.3f}), codes used {used}/"
                  f"{cfg.codebook_size}, bit-identical={identical}, {dt:.0f}s for two runs")


def test_criterion_5_metric_oracles():
    g = np.random.default_rng(105)
    worst = 0.0
    for _ in range(100):
        n = int(g.integers(1, 21))
        a = g.integers(0, int(g.integers(1, 7)), n).tolist()
        b = g.integers(0, int(g.integers(1, 7)), n).tolist()
        from forgesat.evalkit import nmi

        worst = max(worst, abs(nmi(a, b) - oracle_nmi(a, b)))
        worst = max(worst, *np.abs(np.subtract(purity(a, b), oracle_purity(a, b))))
    p14 = purity([i % 14 for i in range(140)], [0] * 140)
    ok = worst < 1e-9 and abs(p14[0] - 1 / 14) < 1e-12 and abs(p14[1] - 1 / 14) < 1e-12
    record(5, ok, f"max deviation from oracles {worst:.1e}; one-cluster purity over 14 classes {p14[0]:.4f}")


@pytest.mark.slow
def test_criterion_6_clustering_analogue():
    t0 = time.time()
    fams = {"random-ksat": 40, "clique": 40, "vcover": 40}
    corpus = _family_corpus(fams, seed=0)
    train_corpus = _family_corpus({f: 10 for f in fams}, seed=1)
    assert not {f.source_id for f in corpus} & {f.source_id for f in train_corpus}
    ck, _ = pretrain(train_corpus, "SAT", TrainConfig())
    forge = embed_formulas(corpus, "forge-sat", ck)
    static = embed_formulas(corpus, "static-sat")
    labels = forge.group_labels()
    assert len(set(labels)) == 6
    seeds = (0, 1, 2)
    fs = evaluate("FORGE-SAT", forge.matrix, labels, 6, seeds, restarts=10)
    ss = evaluate("STATIC-SAT", static.matrix, labels, 6, seeds, restarts=10)
    from forgesat.evalkit import kmeans

    null, _ = permutation_null(labels, kmeans(forge.matrix, 6, seed=0, restarts=10).labels, trials=1000, seed=0)
    q99 = float(np.percentile(null, 99))
    f_nmi, s_nmi = fs.nmi[0], ss.nmi[0]
    dt = time.time() - t0
    ok = f_nmi > q99 and f_nmi >= s_nmi - 0.05
    record(6, ok, f"FORGE-SAT NMI {f_nmi:.3f}±{fs.nmi[1]:.3f}, STATIC-SAT NMI {s_nmi:.3f}±{ss.nmi[1]:.3f}, "
                  f"null q99 {q99:.3f}, purity(macro) {fs.purity_macro[0]:.3f} vs {ss.purity_macro[0]:.3f}, {dt:.0f}s")


@pytest.fixture(scope="module")
def transfer_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("transfer")
    c, o = root / "corpus", root / "out"
    run = lambda *a: cli.main([str(x) for x in a])
    codes = [
        run("gen", "--corpus", c, "--family", "random-ksat=6", "--family", "clique=6", "--family", "vcover=6"),
        run("pretrain", "--corpus", c, "--out", o, "--variant", "forge-mip", "--epochs", 10),
        run("embed", "--corpus", c, "--out", o, "--variant", "forge-mip-sat", "--checkpoint", o / "checkpoint.fsat"),
        run("embed", "--corpus", c, "--out", o, "--variant", "static-sat"),
        run("eval", o / "embeddings_FORGE-MIP-SAT.tsv", o / "embeddings_STATIC-SAT.tsv", "--out", o / "eval",
            "--restarts", 3, "--trials", 200),
    ]
    return root, codes


def test_criterion_7_transfer(transfer_run):
    root, codes = transfer_run
    o = root / "out"
    pre = json.loads((o / "run_pretrain.json").read_text())
    rec = json.loads((o / "run_embed_FORGE-MIP-SAT.json").read_text())
    table = EmbeddingTable.load(o / "embeddings_FORGE-MIP-SAT.tsv")
    transfer = rec["extra"].get("transfer")
    valid = (
        table.matrix.shape == (18, 32)
        and (table.matrix >= 0).all()
        and np.allclose(table.matrix.sum(axis=1), 1.0, atol=1e-12, rtol=0)
    )
    ok = (
        codes[:3] == [0, 0, 0]
        and pre["extra"].get("schema") == "MIP"
        and transfer == {"trained_schema": "MIP", "applied_schema": "SAT"}
        and rec["status"] == "ok"
        and valid
    )
    record(7, ok, f"exit codes {codes[:3]}, pretrain schema {pre['extra'].get('schema')}, "
                  f"record transfer {transfer}, histograms valid={valid}")


def test_criterion_8_reproduce(transfer_run, capsys):
    root, codes = transfer_run
    records = sorted(root.rglob("run_*.json"))
    results = {}
    for r in records:
        capsys.readouterr()
        rc = cli.main(["reproduce", str(r)])
        lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("{")]
        div = json.loads(lines[-1])["divergences"] if lines else None
        results[r.name] = (rc, div)
    ok = codes == [0] * 5 and len(records) == 5 and all(v == (0, 0) for v in results.values())
    record(8, ok, "; ".join(f"{k}: exit {rc}, {d} divergences" for k, (rc, d) in results.items()))
