"""Vector-quantized graph autoencoder over constraint/variable graphs.

Encoder: two GraphSAGE rounds with mean aggregation and separate weights for
constraint and variable nodes.  Latents snap to the nearest row of a single
shared codebook.  The decoder reconstructs each node's native feature columns
from its codeword and scores (constraint, variable) pairs with a bilinear form.
Gradients pass the quantizer straight through.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from forgesat import kernels, rng
from forgesat.features import INPUT_WIDTH, PADDED_WIDTH, NodeFeatures, native_mask
from forgesat.mip import BipartiteGraph
from forgesat.numerics import (
    AdamState,
    Parameter,
    adam_step,
    bce_logits_loss,
    glorot,
    mse_loss,
    relu,
    relu_backward,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 64
    latent: int = 32
    codebook_size: int = 32
    lr: float = 1e-3
    beta: float = 0.25
    lambda_edge: float = 1.0
    epochs: int = 200
    neg_ratio: float = 1.0
    seed: int = 0
    reinit_period: int = 1

    def __post_init__(self):
        for name in ("hidden", "latent", "lr", "beta", "lambda_edge", "epochs", "neg_ratio", "reinit_period"):
            if not getattr(self, name) > 0:
                raise ValueError(f"TrainConfig.{name} must be positive")
        if self.codebook_size < 2:
            raise ValueError("codebook_size must be >= 2")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass(frozen=True)
class LossBreakdown:
    feat: float
    edge: float
    code: float
    commit: float
    total: float


@dataclass
class Sample:
    """One training/inference instance: graph, stacked inputs, reconstruction mask."""

    graph: BipartiteGraph
    x: np.ndarray
    mask: np.ndarray
    schema_id: str
    name: str = ""
    _pool: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def build(cls, graph: BipartiteGraph, nf: NodeFeatures, name: str = "") -> "Sample":
        if nf.constraint.shape[0] != graph.n_constraints or nf.variable.shape[0] != graph.n_variables:
            raise ValueError("feature rows do not match graph nodes")
        if nf.constraint.shape[1] != INPUT_WIDTH:
            raise ValueError(f"feature width {nf.constraint.shape[1]} != {INPUT_WIDTH}")
        mask = native_mask(nf.schema_id, graph.n_constraints, graph.n_variables)
        return cls(graph, nf.stacked(), mask, nf.schema_id, name)

    def negative_pool(self) -> np.ndarray:
        """Flat ids ``c * n_variables + v`` of all non-edges."""
        if self._pool is None:
            g = self.graph
            ids = g.edges[:, 0] * g.n_variables + g.edges[:, 1]
            self._pool = np.setdiff1d(np.arange(g.n_constraints * g.n_variables, dtype=np.int64), ids)
        return self._pool


def sample_negatives(sample: Sample, ratio: float, gen: np.random.Generator) -> np.ndarray:
    """``(count, 2)`` uniformly drawn (constraint, variable) pairs that are not edges."""
    pool = sample.negative_pool()
    count = min(int(round(ratio * sample.graph.n_edges)), len(pool))
    if count == 0:
        return np.zeros((0, 2), dtype=np.int64)
    picked = gen.choice(pool, size=count, replace=False)
    nv = sample.graph.n_variables
    return np.column_stack([picked // nv, picked % nv])


PARAM_ORDER = tuple(
    [f"enc{l}_{side}_{kind}" for l in (1, 2) for side in ("c", "v") for kind in ("self", "neigh", "bias")]
    + ["dec_trunk_w", "dec_trunk_b", "dec_head_c_w", "dec_head_c_b", "dec_head_v_w", "dec_head_v_b"]
    + ["edge_bilinear", "codebook"]
)


def init_params(config: TrainConfig, input_width: int = INPUT_WIDTH) -> dict[str, Parameter]:
    gen = rng.stream(config.seed, rng.INIT)
    h, d, k = config.hidden, config.latent, config.codebook_size
    p: dict[str, np.ndarray] = {}
    for l, (fin, fout) in ((1, (input_width, h)), (2, (h, d))):
        for side in ("c", "v"):
            p[f"enc{l}_{side}_self"] = glorot(gen, fin, fout)
            p[f"enc{l}_{side}_neigh"] = glorot(gen, fin, fout)
            p[f"enc{l}_{side}_bias"] = np.zeros((1, fout))
    p["dec_trunk_w"] = glorot(gen, d, h)
    p["dec_trunk_b"] = np.zeros((1, h))
    for side in ("c", "v"):
        p[f"dec_head_{side}_w"] = glorot(gen, h, PADDED_WIDTH)
        p[f"dec_head_{side}_b"] = np.zeros((1, PADDED_WIDTH))
    p["edge_bilinear"] = glorot(gen, d, d)
    p["codebook"] = gen.normal(0.0, 1.0 / np.sqrt(d), size=(k, d))
    return {name: Parameter(p[name]) for name in PARAM_ORDER}


def nearest_codes(z: np.ndarray, codebook: np.ndarray) -> np.ndarray:
    """Index of the nearest codeword per row; ties go to the lowest index."""
    d2 = (
        np.sum(z * z, axis=1, keepdims=True)
        - 2.0 * z @ codebook.T
        + np.sum(codebook * codebook, axis=1)[None, :]
    )
    return np.argmin(d2, axis=1)


def quantize(z: np.ndarray, codebook: np.ndarray):
    """Return ``(codes, zq, code_loss, commit_loss)``.

    Both losses equal the mean over nodes of ``||z - e||^2``; they differ only
    in which side receives gradient (codebook vs encoder).
    """
    if z.shape[1] != codebook.shape[1]:
        raise ValueError("latent width does not match codebook")
    codes = nearest_codes(z, codebook)
    zq = codebook[codes]
    n = max(len(z), 1)
    diff = z - zq
    sq = float(np.sum(diff * diff) / n)
    return codes, zq, sq, sq


@dataclass
class Frozen:
    """Stop-gradient constants captured at a base point, for gradient checks."""

    codes: np.ndarray
    z: np.ndarray
    e: np.ndarray
    offset: np.ndarray


class ForgeModel:
    def __init__(self, config: TrainConfig, params: dict[str, Parameter] | None = None):
        self.config = config
        self.params = params if params is not None else init_params(config)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name].value

    def param_list(self) -> list[Parameter]:
        return [self.params[n] for n in PARAM_ORDER]

    # -- encoder ----------------------------------------------------------

    def _sage(self, l: int, g: BipartiteGraph, hc: np.ndarray, hv: np.ndarray):
        agg_c = kernels.segment_mean(g.c_indptr, g.c_indices, hv, g.n_constraints)
        agg_v = kernels.segment_mean(g.v_indptr, g.v_indices, hc, g.n_variables)
        pc = hc @ self[f"enc{l}_c_self"] + agg_c @ self[f"enc{l}_c_neigh"] + self[f"enc{l}_c_bias"]
        pv = hv @ self[f"enc{l}_v_self"] + agg_v @ self[f"enc{l}_v_neigh"] + self[f"enc{l}_v_bias"]
        return pc, pv, agg_c, agg_v

    def _sage_backward(self, l, g, hc, hv, agg_c, agg_v, dpc, dpv, need_input_grad=True):
        P = self.params
        P[f"enc{l}_c_self"].grad[...] = hc.T @ dpc
        P[f"enc{l}_c_neigh"].grad[...] = agg_c.T @ dpc
        P[f"enc{l}_c_bias"].grad[...] = dpc.sum(axis=0, keepdims=True)
        P[f"enc{l}_v_self"].grad[...] = hv.T @ dpv
        P[f"enc{l}_v_neigh"].grad[...] = agg_v.T @ dpv
        P[f"enc{l}_v_bias"].grad[...] = dpv.sum(axis=0, keepdims=True)
        if not need_input_grad:
            return None, None
        dhc = dpc @ self[f"enc{l}_c_self"].T
        dhv = dpv @ self[f"enc{l}_v_self"].T
        dhv += kernels.segment_mean_backward(
            g.c_indptr, g.c_indices, dpc @ self[f"enc{l}_c_neigh"].T, g.n_variables
        )
        dhc += kernels.segment_mean_backward(
            g.v_indptr, g.v_indices, dpv @ self[f"enc{l}_v_neigh"].T, g.n_constraints
        )
        return dhc, dhv

    def encode(self, g: BipartiteGraph, x: np.ndarray) -> np.ndarray:
        """Latent matrix, constraint rows first then variable rows."""
        if x.shape[1] != self["enc1_c_self"].shape[0]:
            raise ValueError(f"input width {x.shape[1]} != model width {self['enc1_c_self'].shape[0]}")
        nc = g.n_constraints
        p1c, p1v, _, _ = self._sage(1, g, x[:nc], x[nc:])
        zc, zv, _, _ = self._sage(2, g, relu(p1c), relu(p1v))
        return np.vstack([zc, zv])

    def codes(self, g: BipartiteGraph, x: np.ndarray) -> np.ndarray:
        return nearest_codes(self.encode(g, x), self["codebook"])

    # -- full loss ----------------------------------------------------------

    def loss_and_grad(
        self,
        sample: Sample,
        negatives: np.ndarray,
        frozen: Frozen | None = None,
        backward: bool = True,
    ):
        """Forward pass, loss terms and (optionally) gradients into ``param.grad``.

        With ``frozen`` the codes and every stop-gradient operand come from a
        base point, so the returned loss is a smooth function of the
        parameters whose exact gradient is the straight-through gradient.
        Returns ``(LossBreakdown, codes, z)``.
        """
        cfg = self.config
        g, x = sample.graph, sample.x
        nc, n = g.n_constraints, g.n_nodes
        xc, xv = x[:nc], x[nc:]

        p1c, p1v, a1c, a1v = self._sage(1, g, xc, xv)
        h1c, h1v = relu(p1c), relu(p1v)
        zc, zv, a2c, a2v = self._sage(2, g, h1c, h1v)
        z = np.vstack([zc, zv])

        book = self["codebook"]
        if frozen is None:
            codes = nearest_codes(z, book)
            e = book[codes]
            q = e
            z_sg, e_sg = z, e
        else:
            codes = frozen.codes
            e = book[codes]
            q = z + frozen.offset
            z_sg, e_sg = frozen.z, frozen.e
        nn = max(n, 1)
        code_loss = float(np.sum((z_sg - e) ** 2) / nn)
        commit_loss = float(np.sum((z - e_sg) ** 2) / nn)

        # feature reconstruction
        t_pre = q @ self["dec_trunk_w"] + self["dec_trunk_b"]
        t = relu(t_pre)
        rc = t[:nc] @ self["dec_head_c_w"] + self["dec_head_c_b"]
        rv = t[nc:] @ self["dec_head_v_w"] + self["dec_head_v_b"]
        recon = np.vstack([rc, rv])
        feat_loss, drecon = mse_loss(recon, x[:, :PADDED_WIDTH], sample.mask)

        # edge reconstruction
        pairs = np.vstack([g.edges, negatives]) if len(negatives) else g.edges
        labels = np.concatenate([np.ones(g.n_edges), np.zeros(len(negatives))])
        qc, qv = q[:nc], q[nc:]
        left = qc[pairs[:, 0]] @ self["edge_bilinear"]
        right = qv[pairs[:, 1]]
        logits = np.sum(left * right, axis=1)
        edge_loss, dlogits = bce_logits_loss(logits, labels)

        total = feat_loss + cfg.lambda_edge * edge_loss + code_loss + cfg.beta * commit_loss
        breakdown = LossBreakdown(feat_loss, edge_loss, code_loss, commit_loss, total)
        if not backward:
            return breakdown, codes, z

        P = self.params
        for prm in P.values():
            prm.zero_grad()

        # decoder heads and trunk
        P["dec_head_c_w"].grad[...] = t[:nc].T @ drecon[:nc]
        P["dec_head_c_b"].grad[...] = drecon[:nc].sum(axis=0, keepdims=True)
        P["dec_head_v_w"].grad[...] = t[nc:].T @ drecon[nc:]
        P["dec_head_v_b"].grad[...] = drecon[nc:].sum(axis=0, keepdims=True)
        dt = np.vstack([drecon[:nc] @ self["dec_head_c_w"].T, drecon[nc:] @ self["dec_head_v_w"].T])
        dt_pre = relu_backward(t_pre, dt)
        P["dec_trunk_w"].grad[...] = q.T @ dt_pre
        P["dec_trunk_b"].grad[...] = dt_pre.sum(axis=0, keepdims=True)
        dq = dt_pre @ self["dec_trunk_w"].T

        # bilinear edge scorer
        ds = cfg.lambda_edge * dlogits
        wl = ds[:, None] * left
        wr = ds[:, None] * right
        P["edge_bilinear"].grad[...] = qc[pairs[:, 0]].T @ wr
        dqc = np.zeros_like(qc)
        dqv = np.zeros_like(qv)
        np.add.at(dqc, pairs[:, 0], wr @ self["edge_bilinear"].T)
        np.add.at(dqv, pairs[:, 1], wl)
        dq += np.vstack([dqc, dqv])

        # codebook term updates codewords only
        dbook = np.zeros_like(book)
        np.add.at(dbook, codes, 2.0 * (e - z_sg) / nn)
        P["codebook"].grad[...] = dbook

        # straight-through plus commitment
        dz = dq + cfg.beta * 2.0 * (z - e_sg) / nn
        dh1c, dh1v = self._sage_backward(2, g, h1c, h1v, a2c, a2v, dz[:nc], dz[nc:])
        self._sage_backward(
            1, g, xc, xv, a1c, a1v,
            relu_backward(p1c, dh1c), relu_backward(p1v, dh1v),
            need_input_grad=False,
        )
        return breakdown, codes, z

    def frozen_at(self, sample: Sample) -> Frozen:
        z = self.encode(sample.graph, sample.x)
        codes = nearest_codes(z, self["codebook"])
        e = self["codebook"][codes].copy()
        return Frozen(codes, z, e, e - z)


@dataclass
class EpochLog:
    epoch: int
    feat: float
    edge: float
    code: float
    commit: float
    total: float
    codes_used: int
    reinit: int

    def line(self) -> str:
        return (
            f"epoch={self.epoch} total={self.total!r} feat={self.feat!r} edge={self.edge!r} "
            f"code={self.code!r} commit={self.commit!r} codes_used={self.codes_used} reinit={self.reinit}"
        )

    @classmethod
    def parse(cls, line: str) -> "EpochLog":
        kv = dict(tok.split("=", 1) for tok in line.split())
        ints = {"epoch", "codes_used", "reinit"}
        return cls(**{k: (int(v) if k in ints else float(v)) for k, v in kv.items()})


class NonFiniteLoss(FloatingPointError):
    pass


def train(
    samples: Sequence[Sample],
    config: TrainConfig,
    model: ForgeModel | None = None,
    progress=None,
) -> tuple[ForgeModel, list[EpochLog]]:
    """Full-graph Adam training, one step per instance, seeded throughout."""
    if not samples:
        raise ValueError("empty training corpus")
    schema_ids = {s.schema_id for s in samples}
    if len(schema_ids) != 1:
        raise ValueError(f"mixed feature schemas in corpus: {sorted(schema_ids)}")
    model = model or ForgeModel(config)
    plist = model.param_list()
    state = AdamState.for_params(plist)
    book_idx = PARAM_ORDER.index("codebook")
    k = config.codebook_size
    logs = []
    for epoch in range(1, config.epochs + 1):
        order = rng.stream(config.seed, rng.SHUFFLE, epoch).permutation(len(samples))
        neg_gen = rng.stream(config.seed, rng.NEGATIVES, epoch)
        usage = np.zeros(k, dtype=np.int64)
        latents = []
        sums = np.zeros(5)
        for i in order:
            s = samples[i]
            neg = sample_negatives(s, config.neg_ratio, neg_gen)
            lb, codes, z = model.loss_and_grad(s, neg)
            if not np.isfinite(lb.total):
                raise NonFiniteLoss(f"non-finite loss at epoch {epoch} on instance {s.name or i}")
            adam_step(plist, state, lr=config.lr)
            usage += np.bincount(codes, minlength=k)
            latents.append(z)
            sums += (lb.feat, lb.edge, lb.code, lb.commit, lb.total)
        reinit = 0
        if epoch % config.reinit_period == 0:
            dead = np.flatnonzero(usage == 0)
            if len(dead):
                pool = np.vstack(latents)
                pick = rng.stream(config.seed, rng.REINIT, epoch).choice(len(pool), size=len(dead), replace=len(dead) > len(pool))
                model.params["codebook"].value[dead] = pool[pick]
                state.m[book_idx][dead] = 0.0
                state.v[book_idx][dead] = 0.0
                reinit = len(dead)
        means = sums / len(samples)
        entry = EpochLog(epoch, *means.tolist(), int((usage > 0).sum()), reinit)
        logs.append(entry)
        log.debug(entry.line())
        if progress is not None:
            progress(entry)
    return model, logs
