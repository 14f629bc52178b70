"""Epsilon-attacks: feature PGD inside a spectral-norm ball plus greedy edge flips.

The attack produces a finite candidate list whose smallest margin stands in
for the infimum over all admissible perturbations. The unattacked graph is
always candidate 0.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import gnn
from .errors import InvalidParams
from .graph import Graph, diffusion_norm, diffusion_operator
from .linalg import project_spectral_ball, project_spectral_ball_batch, spectral_norm_with_retry

STRUCTURE_MODES = ("none", "flips")

# candidates may sit this far outside the ball after projection round-off
BALL_TOL = 1e-9


@dataclass
class AttackConfig:
    """Attack budget and search effort.

    ``restarts`` counts PGD runs: run 0 starts at X, the rest at random
    points on the epsilon-sphere. ``step_size=None`` means epsilon / 10.
    ``diffusion_norm_cap`` limits ||P_G||_2 of MPGNN structure candidates
    (None: the clean graph's own norm); ``allow_diffusion_growth`` lifts it.
    """

    epsilon: float = 0.0
    pgd_steps: int = 40
    step_size: Optional[float] = None
    restarts: int = 3
    edge_flip_budget: int = 2
    structure_mode: str = "none"
    seed: int = 0
    allow_diffusion_growth: bool = False
    diffusion_norm_cap: Optional[float] = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise InvalidParams("epsilon must be >= 0")
        if min(self.pgd_steps, self.restarts, self.edge_flip_budget) < 0:
            raise InvalidParams("attack counts must be >= 0")
        if self.structure_mode not in STRUCTURE_MODES:
            raise InvalidParams(f"structure_mode must be one of {STRUCTURE_MODES}")
        if self.step_size is not None and self.step_size <= 0 and self.pgd_steps > 0:
            raise InvalidParams("step_size must be > 0 when pgd_steps > 0")

    @property
    def step(self) -> float:
        return self.epsilon / 10 if self.step_size is None else self.step_size

    @property
    def feature_active(self) -> bool:
        return self.epsilon > 0 and self.pgd_steps > 0 and self.restarts > 0

    @property
    def structure_active(self) -> bool:
        return self.structure_mode == "flips" and self.edge_flip_budget > 0


def batch_margins(p, X, P, y):
    """True-label margins for a stack; also returns the runner-up classes."""
    z = gnn.batch_logits(p, X, P)
    return _margins_from_logits(z, y)


def _margins_from_logits(z, y):
    rows = np.arange(z.shape[0])
    others = z.copy()
    others[rows, y] = -np.inf
    j = np.argmax(others, axis=1)
    return z[rows, y] - z[rows, j], j


def _margins_and_grads(p, X, P, y):
    z, trace = gnn.batch_trace(p, X, P)
    marg, j = _margins_from_logits(z, y)
    rows = np.arange(z.shape[0])
    d = np.zeros_like(z)
    d[rows, y] = 1.0
    d[rows, j] -= 1.0
    _, dX = gnn.batch_backward(p, X, P, trace, d)
    return marg, dX


def _sphere_start(shape, eps, rng):
    r = rng.standard_normal(shape)
    nrm = np.linalg.norm(r, ord=2)
    return r * (eps / nrm) if nrm > 0 else np.zeros(shape)


def batch_pgd(p, X, P, y, cfg: AttackConfig, rngs=None):
    """Feature PGD on a stack of equally sized graphs.

    ``rngs`` holds one generator per graph (used for the random restarts).
    Returns best perturbations of shape (restarts, N, n, h0) and their
    margins of shape (restarts, N).
    """
    N = X.shape[0]
    y = np.asarray(y)
    R = cfg.restarts
    eps, step = cfg.epsilon, cfg.step
    if rngs is None:
        rngs = [np.random.default_rng([cfg.seed, k]) for k in range(N)]
    best_d = np.zeros((R,) + X.shape)
    best_m = np.zeros((R, N))
    for r in range(R):
        if r == 0:
            delta = np.zeros_like(X)
        else:
            delta = np.stack([_sphere_start(X.shape[1:], eps, rngs[k]) for k in range(N)])
        cur_best_m = np.full(N, np.inf)
        cur_best_d = delta.copy()
        for it in range(cfg.pgd_steps + 1):
            if it < cfg.pgd_steps:
                marg, grad = _margins_and_grads(p, X + delta, P, y)
            else:
                marg, _ = batch_margins(p, X + delta, P, y)
            better = marg < cur_best_m
            cur_best_m = np.where(better, marg, cur_best_m)
            cur_best_d[better] = delta[better]
            if it == cfg.pgd_steps:
                break
            gn = np.sqrt(np.sum(grad * grad, axis=(1, 2)))
            scale = np.where(gn > 0, step / np.where(gn > 0, gn, 1.0), 0.0)
            delta = project_spectral_ball_batch(delta - scale[:, None, None] * grad, eps)
        best_d[r] = cur_best_d
        best_m[r] = cur_best_m
    return best_d, best_m


def _single_stack(p, g: Graph):
    return g.features[None], diffusion_operator(g, gnn.diffusion_kind(p))[None]


def _feature_candidates(p, base: Graph, y: int, cfg: AttackConfig, origin: Graph, rng):
    """PGD around ``origin``'s features on ``base``'s structure (PGD runs only)."""
    if not cfg.feature_active:
        return []
    X = origin.features[None]
    P = diffusion_operator(base, gnn.diffusion_kind(p))[None]
    best_d, _ = batch_pgd(p, X, P, [y], cfg, rngs=[rng])
    out = []
    for r in range(cfg.restarts):
        # one more exact projection keeps the stored candidate inside the ball
        d = project_spectral_ball(best_d[r, 0], cfg.epsilon)
        out.append(base.with_features(origin.features + d))
    return out


def feature_attack(p, g: Graph, y: int, cfg: AttackConfig) -> list:
    """[g] followed by one PGD candidate per restart, sharing g's edges."""
    rng = np.random.default_rng([cfg.seed, 0])
    return [g] + _feature_candidates(p, g, y, cfg, g, rng)


def _diffusion_cap(p, g: Graph, cfg: AttackConfig):
    if p.arch == "gcn" or cfg.allow_diffusion_growth:
        return None
    kind = gnn.diffusion_kind(p)
    if kind == "laplacian":
        return None
    cap = cfg.diffusion_norm_cap if cfg.diffusion_norm_cap is not None else diffusion_norm(g, kind)
    return cap * (1 + 1e-12)


def structure_attack(p, g: Graph, y: int, cfg: AttackConfig) -> list:
    """Greedy single-edge flips; each accepted flip lowers the margin the most.

    Stops after ``edge_flip_budget`` flips or when no flip lowers the margin.
    Returns [g] followed by the graph after each accepted flip.
    """
    out = [g]
    if not cfg.structure_active or g.n < 2:
        return out
    kind = gnn.diffusion_kind(p)
    cap = _diffusion_cap(p, g, cfg)
    pairs = [(i, j) for i in range(g.n) for j in range(i + 1, g.n)]
    cur = g
    cur_m = float(batch_margins(p, *_single_stack(p, g), [y])[0][0])
    for _ in range(cfg.edge_flip_budget):
        cands = [cur.flip_edge(i, j) for i, j in pairs]
        if cap is not None:
            cands = [c for c in cands if diffusion_norm(c, kind) <= cap]
        if not cands:
            break
        X = np.repeat(g.features[None], len(cands), axis=0)
        P = np.stack([diffusion_operator(c, kind) for c in cands])
        marg, _ = batch_margins(p, X, P, np.full(len(cands), y))
        k = int(np.argmin(marg))
        if not marg[k] < cur_m:
            break
        cur, cur_m = cands[k], float(marg[k])
        out.append(cur)
    return out


def epsilon_attack(p, g: Graph, y: int, cfg: AttackConfig) -> list:
    """Union of feature candidates, structure candidates and PGD on each structure candidate.

    Order: g, feature restarts, then for each structure candidate s: s and
    its PGD restarts. Deterministic given the config seed.
    """
    cands = feature_attack(p, g, y, cfg)
    for s_idx, s in enumerate(structure_attack(p, g, y, cfg)[1:], start=1):
        cands.append(s)
        rng = np.random.default_rng([cfg.seed, s_idx])
        cands.extend(_feature_candidates(p, s, y, cfg, g, rng))
    return cands


def candidate_margins(p, cands, y: int) -> np.ndarray:
    kind = gnn.diffusion_kind(p)
    X = np.stack([c.features for c in cands])
    P = np.stack([diffusion_operator(c, kind) for c in cands])
    return batch_margins(p, X, P, np.full(len(cands), y))[0]


def within_budget(g: Graph, cand: Graph, epsilon: float, tol: float = BALL_TOL) -> bool:
    """Feature constraint ||X' - X||_2 <= epsilon (plus tolerance)."""
    return spectral_norm_with_retry(cand.features - g.features) <= epsilon + tol


def nested_candidates(p, g: Graph, y: int, cfg: AttackConfig, epsilons) -> dict:
    """Candidate sets C(eps) that grow with eps by construction.

    C(eps_k) is the union over eps_i <= eps_k of the attack at eps_i and the
    largest-budget candidates re-projected onto the eps_i ball.
    """
    eps_sorted = sorted(set(float(e) for e in epsilons))
    runs = {e: epsilon_attack(p, g, y, _with_eps(cfg, e)) for e in eps_sorted}
    top = runs[eps_sorted[-1]]
    out, acc = {}, []
    for e in eps_sorted:
        acc = acc + runs[e]
        for c in top[1:]:
            d = project_spectral_ball(c.features - g.features, e)
            acc.append(c.with_features(g.features + d))
        out[e] = list(acc)
    return out


def _with_eps(cfg: AttackConfig, eps: float) -> AttackConfig:
    from dataclasses import replace

    return replace(cfg, epsilon=eps)
