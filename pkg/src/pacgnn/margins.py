"""Margin operators and empirical (robust) margin losses."""

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gnn
from .attack import AttackConfig, batch_margins, candidate_margins, epsilon_attack, nested_candidates
from .errors import InvalidParams, LabelOutOfRange


def margin(logits, y: int) -> float:
    """f_y - max_{j != y} f_j."""
    z = np.asarray(logits, dtype=np.float64).ravel()
    if z.size < 2:
        raise InvalidParams("need K >= 2 logits")
    if not 0 <= y < z.size:
        raise LabelOutOfRange(f"label {y} outside [0, {z.size})")
    return float(z[y] - np.max(np.delete(z, y)))


def pairwise_margin(logits, i: int, j: int) -> float:
    z = np.asarray(logits, dtype=np.float64).ravel()
    for c in (i, j):
        if not 0 <= c < z.size:
            raise LabelOutOfRange(f"class {c} outside [0, {z.size})")
    return float(z[i] - z[j])


def sample_margins(p, graphs, labels=None) -> np.ndarray:
    """Clean true-label margins of every sample, batched by graph size."""
    labels = np.array([g.label for g in graphs] if labels is None else labels)
    out = np.empty(len(graphs))
    kind = gnn.diffusion_kind(p)
    for idx in gnn.group_by_size(graphs).values():
        X, P = gnn.stack_graphs([graphs[i] for i in idx], kind)
        out[idx] = batch_margins(p, X, P, labels[idx])[0]
    return out


def loss_at(margins, gamma: float) -> float:
    """Fraction of margins <= gamma (ties count as losses)."""
    if gamma < 0:
        raise InvalidParams("gamma must be >= 0")
    margins = np.asarray(margins)
    if margins.size == 0:
        raise InvalidParams("dataset is empty")
    return float(np.mean(margins <= gamma))


def empirical_margin_loss(p, graphs, gamma: float) -> float:
    return loss_at(sample_margins(p, graphs), gamma)


def robust_margin(p, g, y: int, cfg: AttackConfig):
    """Smallest margin over the attack's candidates, with the minimizing graph."""
    cands = epsilon_attack(p, g, y, cfg)
    marg = candidate_margins(p, cands, y)
    k = int(np.argmin(marg))
    return float(marg[k]), cands[k]


def robust_margins(p, graphs, cfg: AttackConfig, threads: int = 1):
    """Robust margins and witnesses for every sample."""
    def one(g):
        return robust_margin(p, g, g.label, cfg)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            res = list(pool.map(one, graphs))
    else:
        res = [one(g) for g in graphs]
    return np.array([r[0] for r in res]), [r[1] for r in res]


def empirical_robust_margin_loss(p, graphs, gamma: float, cfg: AttackConfig) -> float:
    return loss_at(robust_margins(p, graphs, cfg)[0], gamma)


def nested_robust_losses(p, graphs, gamma: float, cfg: AttackConfig, epsilons) -> dict:
    """Robust loss per epsilon with candidate sets nested in epsilon."""
    per_eps = {float(e): [] for e in epsilons}
    for g in graphs:
        sets = nested_candidates(p, g, g.label, cfg, epsilons)
        for e, cands in sets.items():
            per_eps[e].append(float(np.min(candidate_margins(p, cands, g.label))))
    return {e: loss_at(v, gamma) for e, v in per_eps.items()}


@dataclass
class MarginReport:
    gamma: float
    clean: np.ndarray
    robust: np.ndarray
    witnesses: list = field(default_factory=list, repr=False)

    @property
    def clean_loss(self) -> float:
        return loss_at(self.clean, self.gamma)

    @property
    def robust_loss(self) -> float:
        return loss_at(self.robust, self.gamma)

    @property
    def attacked(self) -> np.ndarray:
        return self.robust < self.clean

    def to_csv(self, path=None, provenance: str = None) -> str:
        buf = io.StringIO()
        if provenance:
            buf.write(f"# {provenance}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "clean_margin", "robust_margin", "attacked"])
        for i, (c, r, a) in enumerate(zip(self.clean, self.robust, self.attacked)):
            w.writerow([i, repr(float(c)), repr(float(r)), int(a)])
        w.writerow(["summary", self.clean_loss, self.robust_loss, f"gamma={self.gamma}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def margin_report(p, graphs, gamma: float, cfg: AttackConfig, threads: int = 1) -> MarginReport:
    clean = sample_margins(p, graphs)
    robust, wit = robust_margins(p, graphs, cfg, threads)
    # batched and per-graph passes round differently; an unmoved witness keeps its clean margin
    unmoved = np.array([w is g for w, g in zip(wit, graphs)], dtype=bool)
    robust = np.where(unmoved, clean, np.minimum(robust, clean))
    return MarginReport(gamma, clean, robust, wit)
