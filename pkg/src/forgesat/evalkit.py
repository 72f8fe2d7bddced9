"""Clustering and cluster-quality metrics for instance embeddings."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from forgesat import rng


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int


@dataclass(frozen=True)
class MetricsReport:
    variant: str
    nmi: float
    purity_macro: float
    purity_weighted: float
    k: int
    seed: int
    restarts: int
    null_percentile: float | None = None


# -- k-means ------------------------------------------------------------------


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    d = np.sum(x * x, axis=1)[:, None] - 2.0 * x @ c.T + np.sum(c * c, axis=1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(x: np.ndarray, k: int, gen: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = [x[gen.integers(n)]]
    closest = _sq_dists(x, centers[0][None, :])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = gen.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), gen.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(x[idx])
        closest = np.minimum(closest, _sq_dists(x, x[idx][None, :])[:, 0])
    return np.array(centers)


def _lloyd(x, centers, max_iter, tol):
    k = len(centers)
    for it in range(1, max_iter + 1):
        d = _sq_dists(x, centers)
        labels = np.argmin(d, axis=1)
        new = np.empty_like(centers)
        counts = np.bincount(labels, minlength=k)
        point_d = d[np.arange(len(x)), labels]
        taken = set()
        for j in range(k):
            if counts[j]:
                new[j] = x[labels == j].mean(axis=0)
                continue
            # empty cluster: move it onto the farthest point not already used
            order = np.argsort(-point_d, kind="stable")
            far = next((i for i in order if i not in taken), order[0])
            taken.add(far)
            new[j] = x[far]
            point_d[far] = 0.0
        shift = float(np.max(np.sum((new - centers) ** 2, axis=1)))
        centers = new
        if shift <= tol:
            break
    d = _sq_dists(x, centers)
    labels = np.argmin(d, axis=1)
    inertia = float(np.sum(np.sum((x - centers[labels]) ** 2, axis=1)))
    return labels, centers, inertia, it


def kmeans(
    x: np.ndarray,
    k: int,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-8,
) -> ClusterAssignment:
    """Lloyd's algorithm with k-means++ seeding; best of ``restarts`` by inertia."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be a 2-D array")
    n = len(x)
    if k < 1 or k > n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    distinct = len(np.unique(x, axis=0))
    if distinct < k:
        raise ValueError(f"only {distinct} distinct points for k={k} clusters")
    best = None
    for r in range(restarts):
        gen = rng.stream(seed, rng.KMEANS, r)
        labels, centers, inertia, it = _lloyd(x, _kmeanspp(x, k, gen), max_iter, tol)
        if best is None or inertia < best.inertia:
            best = ClusterAssignment(labels, centers, inertia, it)
    return best


# -- metrics ------------------------------------------------------------------


def _encode(labels: Sequence[Hashable]) -> np.ndarray:
    _, inv = np.unique(np.asarray([str(l) for l in labels]), return_inverse=True)
    return inv.reshape(-1)


def contingency(true_labels, pred) -> np.ndarray:
    if len(true_labels) != len(pred):
        raise ValueError("label and cluster sequences differ in length")
    if len(true_labels) == 0:
        raise ValueError("need at least one instance")
    t, p = _encode(true_labels), _encode(pred)
    table = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
    np.add.at(table, (t, p), 1)
    return table


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(true_labels, pred) -> float:
    """Mutual information over the arithmetic mean of the two entropies (nats)."""
    table = contingency(true_labels, pred).astype(np.float64)
    n = table.sum()
    hu, hv = _entropy(table.sum(axis=1)), _entropy(table.sum(axis=0))
    if hu == 0.0 and hv == 0.0:
        return 1.0
    if hu == 0.0 or hv == 0.0:
        return 0.0
    pij = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / (n * n)
    nz = pij > 0
    mi = float(np.sum(pij[nz] * np.log(pij[nz] / outer[nz])))
    return float(min(max(mi / ((hu + hv) / 2.0), 0.0), 1.0))


def purity(true_labels, pred) -> tuple[float, float]:
    """``(macro, weighted)``: mean per-cluster dominant fraction, and dominant total / N."""
    table = contingency(true_labels, pred)
    dominant = table.max(axis=0)
    sizes = table.sum(axis=0)
    macro = float(np.mean(dominant / sizes))
    weighted = float(dominant.sum() / sizes.sum())
    return macro, weighted


def permutation_null(true_labels, pred, trials: int = 1000, seed: int = 0) -> tuple[np.ndarray, float]:
    """NMI under seeded shuffles of the cluster labels, and the observed value's percentile.

    The percentile is the share of null draws strictly below the observed NMI,
    times 100.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    gen = rng.stream(seed, rng.PERMUTATION)
    pred = np.asarray(pred)
    observed = nmi(true_labels, pred)
    null = np.array([nmi(true_labels, gen.permutation(pred)) for _ in range(trials)])
    return null, float(100.0 * np.mean(null < observed))


# -- projection ---------------------------------------------------------------


def pca_2d(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Top-2 principal coordinates and explained-variance fractions.

    Each component's largest-magnitude loading is made positive.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError("need an (N, D) array with D >= 1")
    if len(x) < 2:
        raise ValueError("need at least two points")
    xc = x - x.mean(axis=0)
    cov = xc.T @ xc / (len(x) - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals, vecs = np.clip(vals[order], 0.0, None), vecs[:, order]
    comps = np.zeros((x.shape[1], 2))
    m = min(2, x.shape[1])
    comps[:, :m] = vecs[:, :m]
    for j in range(m):
        if comps[np.argmax(np.abs(comps[:, j])), j] < 0:
            comps[:, j] *= -1
    total = vals.sum()
    frac = np.zeros(2)
    if total > 0:
        frac[:m] = vals[:m] / total
    return xc @ comps, frac


# -- reporting ------------------------------------------------------------------

METRIC_COLUMNS = (
    "variant", "nmi_mean", "nmi_std", "purity_macro_mean", "purity_macro_std",
    "purity_weighted_mean", "purity_weighted_std", "k", "seeds", "null_percentile",
)


@dataclass(frozen=True)
class VariantSummary:
    variant: str
    runs: tuple[MetricsReport, ...]

    def _stat(self, attr):
        v = np.array([getattr(r, attr) for r in self.runs])
        return float(v.mean()), float(v.std())

    @property
    def nmi(self):
        return self._stat("nmi")

    @property
    def purity_macro(self):
        return self._stat("purity_macro")

    @property
    def purity_weighted(self):
        return self._stat("purity_weighted")

    def row(self) -> list[str]:
        null = self.runs[0].null_percentile
        return [
            self.variant,
            *(f"{x:.6f}" for x in (*self.nmi, *self.purity_macro, *self.purity_weighted)),
            str(self.runs[0].k),
            ";".join(str(r.seed) for r in self.runs),
            "" if null is None else f"{null:.2f}",
        ]


def evaluate(
    variant: str,
    x: np.ndarray,
    labels: Sequence[str],
    k: int,
    seeds: Sequence[int] = (0, 1, 2),
    restarts: int = 10,
    trials: int | None = None,
) -> VariantSummary:
    """Cluster once per seed; the null percentile is computed on the first seed's clusters."""
    runs = []
    for i, seed in enumerate(seeds):
        ca = kmeans(x, k, seed=seed, restarts=restarts)
        pm, pw = purity(labels, ca.labels)
        pct = None
        if trials and i == 0:
            _, pct = permutation_null(labels, ca.labels, trials, seed)
        runs.append(MetricsReport(variant, nmi(labels, ca.labels), pm, pw, k, seed, restarts, pct))
    return VariantSummary(variant, tuple(runs))


def format_metrics(summaries: Sequence[VariantSummary]) -> str:
    lines = ["\t".join(METRIC_COLUMNS)]
    lines += ["\t".join(s.row()) for s in summaries]
    return "\n".join(lines) + "\n"


def scatter_svg(coords: np.ndarray, labels: Sequence[str], title: str, path) -> None:
    """Write a 2-D scatter coloured by ground-truth group as an SVG file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "forgesat"
    fig, ax = plt.subplots(figsize=(6, 5))
    groups = sorted(set(labels))
    cmap = plt.get_cmap("tab20", max(len(groups), 1))
    labels = np.asarray(labels)
    for i, grp in enumerate(groups):
        sel = labels == grp
        ax.scatter(coords[sel, 0], coords[sel, 1], s=14, color=cmap(i), label=grp)
    ax.set_title(title)
    ax.set_xlabel("PC1")
    ax.set_ylabel("PC2")
    ax.legend(fontsize=7, loc="best", markerscale=1.2)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def report(
    tables: dict[str, tuple[list[str], np.ndarray, list[str]]],
    k: int,
    seeds: Sequence[int] = (0, 1, 2),
    restarts: int = 10,
    trials: int | None = 1000,
    out_dir=None,
) -> list[VariantSummary]:
    """Evaluate several variants on one instance set.

    ``tables`` maps variant -> ``(ids, matrix, labels)``; ids and labels must
    agree across variants.  With ``out_dir`` a ``metrics.tsv`` and one
    ``scatter_<variant>.svg`` per variant are written.
    """
    from pathlib import Path

    ref = None
    for name, (ids, _, labels) in tables.items():
        if ref is None:
            ref = (list(ids), list(labels))
        elif (list(ids), list(labels)) != ref:
            raise ValueError(f"variant {name} is evaluated on a different instance set")
    summaries = [
        evaluate(name, np.asarray(x), labels, k, seeds, restarts, trials)
        for name, (_, x, labels) in tables.items()
    ]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.tsv").write_text(format_metrics(summaries))
        for name, (_, x, labels) in tables.items():
            coords, frac = pca_2d(np.asarray(x))
            scatter_svg(coords, labels, f"{name} (PCA {frac[0]:.2f}/{frac[1]:.2f})", out / f"scatter_{name}.svg")
    return summaries
