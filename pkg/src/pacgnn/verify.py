"""Randomized checks of the perturbation lemmas, norm facts, tail bounds and the PAC guarantee.

Each check returns a TrialReport. Deterministic inequalities count a
violation when RHS - LHS < -tol; Monte Carlo checks compare an estimate
against its cap plus three standard errors. Trial t draws from
``np.random.default_rng([seed, t])`` so every report is reproducible and
independent of thread scheduling.

Robust-margin checks use one shared finite candidate set for both weight
vectors (the union of the attacks against w and against w + dw, plus the
clean graph). This is a construction of this harness: the guarantee only
needs a common feasible set, and a w-dependent heuristic set would not give one.
"""

import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import gnn
from .attack import AttackConfig, batch_margins, batch_pgd, epsilon_attack
from .bounds import BoundInputs, baseline_comparators, gcn_certificate
from .graph import (CorpusSpec, DIFFUSION_KINDS, adjacency, diffusion_operator, generate,
                    generate_corpus, max_degree, normalized_laplacian)
from .linalg import frobenius_norm


def spectral_norm(m) -> float:
    """LAPACK 2-norm: the harness computes its bounds independently of power iteration."""
    return float(np.linalg.norm(np.asarray(m, dtype=np.float64), ord=2))


SLACK_TOL = 1e-6
NORM_TOL = 1e-9


@dataclass
class TrialReport:
    name: str
    trials: int
    violations: int
    worst_slack: float
    config: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out

    def row(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}  {self.name:<34} trials={self.trials:<7} "
                f"violations={self.violations:<4} worst_slack={self.worst_slack:.4g}")


def _run(name, fn, trials, seed, tol, config, threads=1):
    """Apply fn(rng) -> list of slacks to every trial and aggregate."""
    def one(t):
        return fn(np.random.default_rng([seed, t]))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(t) for t in range(trials)]
    violations, worst = 0, math.inf
    for slacks in results:
        s = min(slacks)
        worst = min(worst, s)
        violations += int(s < -tol)
    return TrialReport(name, trials, violations, worst, config, seed)


# --- random instances ---------------------------------------------------------

def _dims(rng, l, h_max):
    dims = [int(rng.integers(1, h_max + 1)) for _ in range(l)]
    dims.append(int(rng.integers(2, h_max + 1)))
    return dims


def _random_graph(rng, n, h0, B=None):
    B = rng.uniform(0.5, 2.0) if B is None else B
    return generate("erdos_renyi", n, p=rng.uniform(0.0, 1.0), h0=h0, B=B, seed=rng)


def _scaled_gaussian(rng, shape, target_norm):
    d = rng.standard_normal(shape)
    nrm = spectral_norm(d)
    return d * (target_norm / nrm) if nrm > 0 else np.zeros(shape)


def random_gcn(rng, l_range=(2, 5), h_max=8):
    l = int(rng.integers(l_range[0], l_range[1] + 1))
    dims = _dims(rng, l, h_max)
    W = [rng.standard_normal((a, b)) * rng.uniform(0.3, 1.5) / math.sqrt(a)
         for a, b in zip(dims, dims[1:])]
    return gnn.GcnParams(W)


def _relative_perturbations(rng, mats, scale, only=None):
    """Gaussian perturbations with ||dM||_2 <= ||M||_2 / l, one at the cap when scale = 1."""
    l = len(mats) if only is None else only
    k = len(mats)
    fracs = rng.uniform(0.0, 1.0, size=k)
    fracs[int(rng.integers(k))] = 1.0
    return [_scaled_gaussian(rng, m.shape, scale * f * spectral_norm(m) / l)
            for m, f in zip(mats, fracs)]


def _rel_sum(mats, deltas):
    return sum(spectral_norm(d) / spectral_norm(m) for m, d in zip(mats, deltas))


# --- GCN perturbation ---------------------------------------------------------

def check_gcn_perturbation(trials=1000, seed=0, l_range=(2, 5), h_max=8, n_max=12,
                           scale=1.0, only_last=False, threads=1) -> TrialReport:
    """||f_{w+dw} - f_w|| against (e/sqrt n)||X||_F ||P||^{l-1} prod||W|| sum ratio and e B prod sum."""
    def trial(rng):
        p = random_gcn(rng, l_range, h_max)
        n = int(rng.integers(1, n_max + 1))
        g = _random_graph(rng, n, p.dims[0])
        B = spectral_norm(g.features)
        l = p.depth
        dW = _relative_perturbations(rng, p.layers, scale)
        if only_last:
            dW = [np.zeros_like(d) for d in dW[:-1]] + [dW[-1]]
        q = p.replace([w + d for w, d in zip(p.layers, dW)])
        lhs = float(np.linalg.norm(gnn.logits(q, g) - gnn.logits(p, g)))
        prod = math.prod(spectral_norm(w) for w in p.layers)
        ratio = _rel_sum(p.layers, dW)
        pn = spectral_norm(diffusion_operator(g))
        tight = math.e / math.sqrt(n) * frobenius_norm(g.features) * pn ** (l - 1) * prod * ratio
        loose = math.e * B * prod * ratio
        return [tight - lhs, loose - lhs]

    cfg = {"l_range": list(l_range), "h_max": h_max, "n_max": n_max, "scale": scale,
           "only_last": only_last}
    return _run("gcn_perturbation", trial, trials, seed, SLACK_TOL, cfg, threads)


def _pairwise_min(p, cands, i, j):
    kind = gnn.diffusion_kind(p)
    X = np.stack([c.features for c in cands])
    P = np.stack([diffusion_operator(c, kind) for c in cands])
    z = gnn.batch_logits(p, X, P)
    return float(np.min(z[:, i] - z[:, j]))


DEFAULT_LEMMA_ATTACK = AttackConfig(epsilon=0.3, pgd_steps=10, restarts=2, edge_flip_budget=1,
                                    structure_mode="flips")


def check_margin_perturbation(trials=500, seed=0, attack_cfg: AttackConfig = None, l_range=(2, 5),
                              h_max=8, n_max=12, scale=1.0, threads=1) -> TrialReport:
    """Clean pairwise margins against 2eB(...) and shared-candidate robust margins against 2e(B+eps)(...)."""
    cfg = DEFAULT_LEMMA_ATTACK if attack_cfg is None else attack_cfg

    def trial(rng):
        p = random_gcn(rng, l_range, h_max)
        n = int(rng.integers(1, n_max + 1))
        g = _random_graph(rng, n, p.dims[0])
        K = p.n_classes
        y = int(rng.integers(K))
        i, j = (int(v) for v in rng.choice(K, size=2, replace=False))
        B = spectral_norm(g.features)
        dW = _relative_perturbations(rng, p.layers, scale)
        q = p.replace([w + d for w, d in zip(p.layers, dW)])
        factor = math.prod(spectral_norm(w) for w in p.layers) * _rel_sum(p.layers, dW)
        zp, zq = gnn.logits(p, g), gnn.logits(q, g)
        clean = abs((zq[i] - zq[j]) - (zp[i] - zp[j]))
        acfg = replace(cfg, seed=int(rng.integers(2 ** 31)))
        shared = epsilon_attack(p, g, y, acfg) + epsilon_attack(q, g, y, acfg)[1:]
        robust = abs(_pairwise_min(q, shared, i, j) - _pairwise_min(p, shared, i, j))
        return [2 * math.e * B * factor - clean,
                2 * math.e * (B + cfg.epsilon) * factor - robust]

    conf = {"attack": asdict(cfg), "l_range": list(l_range), "h_max": h_max, "n_max": n_max,
            "scale": scale, "candidate_semantics": "shared"}
    return _run("margin_perturbation", trial, trials, seed, SLACK_TOL, conf, threads)


# --- MPGNN perturbation -------------------------------------------------------

ACTS = ("relu", "tanh", "identity")


def random_mpgnn(rng, tau_mode="generic", l_range=(2, 5), h_max=8, n_max=12):
    """A bounded MPGNN and a graph; tau_mode='unit' sets M2 = 1/||P_G|| so tau = 1 exactly."""
    l = int(rng.integers(l_range[0], l_range[1] + 1))
    dims = _dims(rng, l, h_max)
    kind = str(rng.choice(DIFFUSION_KINDS))
    while True:
        n = int(rng.integers(2 if tau_mode == "unit" else 1, n_max + 1))
        g = _random_graph(rng, n, dims[0])
        pn = spectral_norm(diffusion_operator(g, kind))
        if tau_mode != "unit" or pn > 0:
            break
    M1 = rng.uniform(0.3, 2.0)
    if tau_mode == "unit":
        M2 = 1.0 / pn
    else:
        M2 = rng.uniform(0.3, 2.0)
        while abs(M2 * pn - 1) < 1e-3:
            M2 = rng.uniform(0.3, 2.0)
    W = [_scaled_gaussian(rng, (a, b), rng.uniform(0.2, 1.0) * M2) for a, b in zip(dims, dims[1:])]
    U = [_scaled_gaussian(rng, (dims[0], b), rng.uniform(0.2, 1.0) * M1) for b in dims[1:-1]]
    acts = [str(a) for a in rng.choice(ACTS, size=3)]
    p = gnn.MpgnnParams(W, U, *acts, lipschitz=1.0, diffusion=kind, M1=M1, M2=M2)
    return p, g


def mpgnn_output_bound(p, g, eta, x_norm=None) -> float:
    """Change bound for the MPGNN output at relative perturbation eta."""
    l, L = p.depth, p.lipschitz
    x_norm = spectral_norm(g.features) if x_norm is None else x_norm
    tau = L ** 3 * p.M2 * spectral_norm(diffusion_operator(g, p.diffusion))
    base = math.e * eta * L * p.M1 * p.M2 * x_norm
    if abs(tau - 1) < 1e-12:
        return base * (l + 1) ** 2
    return base * l * (tau ** (l - 1) - 1) / (tau - 1)


def check_mpgnn_perturbation(trials=500, seed=0, tau_mode="generic", margin_form=True,
                             attack_cfg: AttackConfig = None, l_range=(2, 5), h_max=8, n_max=12,
                             scale=1.0, threads=1) -> TrialReport:
    """Output, clean-margin and shared-candidate robust-margin forms of the MPGNN change bounds."""
    if tau_mode not in ("generic", "unit"):
        raise ValueError("tau_mode must be 'generic' or 'unit'")
    cfg = replace(DEFAULT_LEMMA_ATTACK, structure_mode="none") if attack_cfg is None else attack_cfg

    def trial(rng):
        p, g = random_mpgnn(rng, tau_mode, l_range, h_max, n_max)
        l = p.depth
        eta_cap = scale * rng.uniform(0.0, 1.0) / l
        mats = p.W + p.U
        fr = rng.uniform(0.0, 1.0, size=len(mats))
        fr[int(rng.integers(len(mats)))] = 1.0
        deltas = [_scaled_gaussian(rng, m.shape, eta_cap * f * spectral_norm(m)) for m, f in zip(mats, fr)]
        eta = max(spectral_norm(d) / spectral_norm(m) for m, d in zip(mats, deltas))
        q = p.replace([w + d for w, d in zip(p.W, deltas[:l])],
                      [u + d for u, d in zip(p.U, deltas[l:])])
        zp, zq = gnn.logits(p, g), gnn.logits(q, g)
        bound = mpgnn_output_bound(p, g, eta)
        slacks = [bound - float(np.linalg.norm(zq - zp))]
        if margin_form:
            K = p.n_classes
            i, j = (int(v) for v in rng.choice(K, size=2, replace=False))
            clean = abs((zq[i] - zq[j]) - (zp[i] - zp[j]))
            slacks.append(2 * bound - clean)
            y = int(rng.integers(K))
            acfg = replace(cfg, seed=int(rng.integers(2 ** 31)))
            shared = epsilon_attack(p, g, y, acfg) + epsilon_attack(q, g, y, acfg)[1:]
            robust = abs(_pairwise_min(q, shared, i, j) - _pairwise_min(p, shared, i, j))
            x_norm = spectral_norm(g.features)
            rb = mpgnn_output_bound(p, g, eta, x_norm + cfg.epsilon)
            slacks.append(2 * rb - robust)
        return slacks

    conf = {"tau_mode": tau_mode, "margin_form": margin_form, "attack": asdict(cfg),
            "l_range": list(l_range), "h_max": h_max, "n_max": n_max, "scale": scale,
            "candidate_semantics": "shared"}
    return _run(f"mpgnn_perturbation_{tau_mode}", trial, trials, seed, SLACK_TOL, conf, threads)


# --- norm propositions --------------------------------------------------------

def check_norm_propositions(trials=1000, graph_trials=500, seed=0, n_max=30, threads=1) -> TrialReport:
    """||AB||_F <= ||A||_F ||B||_2; ||A_G||_2 <= max degree; ||normalized Laplacian||_2 <= 1."""
    def trial(rng):
        r, k, c = (int(v) for v in rng.integers(1, 9, size=3))
        A = rng.standard_normal((r, k)) * rng.uniform(0.1, 3)
        Bm = rng.standard_normal((k, c)) * rng.uniform(0.1, 3)
        slacks = [frobenius_norm(A) * spectral_norm(Bm) - frobenius_norm(A @ Bm)]
        return slacks

    def graph_trial(rng):
        n = int(rng.integers(1, n_max + 1))
        g = generate(str(rng.choice(["erdos_renyi", "star", "complete"])) if n >= 2 else "complete",
                     n, p=rng.uniform(0, 1), h0=1, seed=rng)
        return [max_degree(g) - spectral_norm(adjacency(g)),
                1.0 - spectral_norm(normalized_laplacian(g))]

    rep_m = _run("frobenius_product", trial, trials, seed, NORM_TOL, {}, threads)
    rep_g = _run("graph_norms", graph_trial, graph_trials, seed + 1, NORM_TOL, {}, threads)
    return TrialReport("norm_propositions", rep_m.trials + rep_g.trials,
                       rep_m.violations + rep_g.violations,
                       min(rep_m.worst_slack, rep_g.worst_slack),
                       {"matrix_trials": trials, "graph_trials": graph_trials, "n_max": n_max,
                        "tol": NORM_TOL}, seed)


# --- Monte Carlo checks -------------------------------------------------------

def spectral_tail_threshold(h: int, sigma: float, l: int) -> float:
    return sigma * math.sqrt(2 * h * math.log(4 * l * h))


def spectral_tail_cap(h: int, sigma: float, t: float) -> float:
    """Union-bound cap 2h exp(-t^2 / (2 h sigma^2)) on P(||dW||_2 >= t)."""
    if sigma == 0:
        return 0.0
    return 2 * h * math.exp(-t * t / (2 * h * sigma * sigma))


def check_gaussian_spectral_tail(h=4, sigma=1.0, trials=100_000, l=2, seed=0,
                                 chunk=20_000) -> TrialReport:
    """Exceedance frequency of ||dW||_2 > t over h x h Gaussian matrices."""
    t = spectral_tail_threshold(h, sigma, l)
    cap = spectral_tail_cap(h, sigma, t) if sigma > 0 else 1.0 / (2 * l)
    rng = np.random.default_rng(seed)
    hits, done = 0, 0
    while done < trials:
        k = min(chunk, trials - done)
        mats = sigma * rng.standard_normal((k, h, h))
        hits += int(np.sum(np.linalg.norm(mats, ord=2, axis=(1, 2)) > t))
        done += k
    freq = hits / trials
    se = math.sqrt(cap * (1 - cap) / trials)
    slack = cap + 3 * se - freq
    # the cap equals 1/(2l) at this t; check the rearrangement as well
    algebra = abs(cap - 1.0 / (2 * l)) if sigma > 0 else 0.0
    violations = int(slack < 0) + int(algebra > 1e-12)
    return TrialReport("gaussian_spectral_tail", trials, violations, slack,
                       {"h": h, "sigma": sigma, "l": l, "t": t, "cap": cap, "frequency": freq,
                        "standard_error": se, "cap_minus_inverse_2l": algebra}, seed)


def moment_exact(m: int) -> float:
    """E[exp(2(m-1) X^2)] for X the mean of m centered fair coin flips (binomial sum)."""
    total = 0.0
    for k in range(m + 1):
        x = k / m - 0.5
        total += math.comb(m, k) * math.exp(2 * (m - 1) * x * x)
    return total / 2 ** m


def moment_enumerated(m: int) -> float:
    """Same expectation by listing all 2^m outcomes."""
    vals = [math.exp(2 * (m - 1) * (sum(bits) / m - 0.5) ** 2)
            for bits in itertools.product((0, 1), repeat=m)]
    return sum(vals) / len(vals)


def check_moment_lemma(m=10, trials=1_000_000, seed=0, exact_m=4, chunk=250_000) -> TrialReport:
    """Monte Carlo E[exp(2(m-1)X^2)] <= 2m + 3 SE, plus exact enumeration at ``exact_m``."""
    rng = np.random.default_rng(seed)
    s1 = s2 = 0.0
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        x = rng.binomial(m, 0.5, size=k) / m - 0.5
        v = np.exp(2 * (m - 1) * x * x)
        s1 += float(v.sum())
        s2 += float((v * v).sum())
        done += k
    mean = s1 / trials
    var = max(s2 / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
    se = math.sqrt(var / trials)
    mc_slack = 2 * m + 3 * se - mean
    exact = moment_enumerated(exact_m)
    exact_slack = 2 * exact_m - exact
    violations = int(mc_slack < 0) + int(exact_slack < 0)
    return TrialReport("moment_lemma", trials, violations, min(mc_slack, exact_slack),
                       {"m": m, "estimate": mean, "standard_error": se, "cap": 2 * m,
                        "exact_m": exact_m, "exact_value": exact, "exact_cap": 2 * exact_m,
                        "exact_value_at_m": moment_exact(m)}, seed)


# --- end-to-end PAC experiment ------------------------------------------------

@dataclass
class PacExperimentConfig:
    resamples: int = 50
    m: int = 200
    heldout: int = 20_000
    delta: float = 0.1
    gamma: float = 0.1
    epsilon: float = 0.1
    n: int = 6
    p: float = 0.4
    h0: int = 4
    K: int = 2
    B: float = 1.0
    hidden: int = 8
    train_steps: int = 100
    lr: float = 0.5
    pgd_steps: int = 20
    restarts: int = 2
    degree_pair: tuple = (3, 20)
    degree_n: int = 24
    degree_m: int = 50


def _robust_margins_batched(p, X, P, y, cfg: AttackConfig, seed):
    """Feature-only robust margins for a stack (clean graph plus PGD restarts)."""
    clean = batch_margin_values(p, X, P, y)
    if not cfg.feature_active:
        return clean
    rng = np.random.default_rng([seed, 0])
    rngs = [rng] * X.shape[0]
    _, best_m = batch_pgd(p, X, P, y, cfg, rngs=rngs)
    return np.minimum(clean, best_m.min(axis=0))


def batch_margin_values(p, X, P, y):
    return batch_margins(p, X, P, y)[0]


def _corpus_arrays(spec, seed):
    meta, graphs = generate_corpus(spec, seed)
    X, P = gnn.stack_graphs(graphs, "laplacian")
    y = np.array([g.label for g in graphs])
    return graphs, X, P, y


def end_to_end_pac(cfg: PacExperimentConfig = None, seed=0, log=None) -> dict:
    """Resample training sets, certify, and compare against a large held-out robust loss."""
    cfg = PacExperimentConfig() if cfg is None else cfg
    t0 = time.time()
    spec = CorpusSpec(family="erdos_renyi", m=cfg.heldout, n=cfg.n, p=cfg.p, h0=cfg.h0, K=cfg.K,
                      B=cfg.B)
    _, Xh, Ph, yh = _corpus_arrays(spec, [seed, 10 ** 6])
    acfg = AttackConfig(epsilon=cfg.epsilon, pgd_steps=cfg.pgd_steps, restarts=cfg.restarts,
                        edge_flip_budget=0, structure_mode="none", seed=seed)
    arch = gnn.ArchSpec(hidden=(cfg.hidden,))
    rows = []
    last_params = None
    for r in range(cfg.resamples):
        tr_spec = replace(spec, m=cfg.m)
        graphs, X, P, y = _corpus_arrays(tr_spec, [seed, r])
        res = gnn.train(graphs, arch, cfg.train_steps, cfg.lr, seed=r, h0=cfg.h0, K=cfg.K)
        p = res.params
        last_params = p
        train_rm = _robust_margins_batched(p, X, P, y, acfg, seed + r)
        emp = float(np.mean(train_rm <= cfg.gamma))
        held_rm = _robust_margins_batched(p, Xh, Ph, yh, acfg, seed + r)
        true_loss = float(np.mean(held_rm <= 0))
        cert = gcn_certificate(BoundInputs.from_gcn(p, cfg.B, cfg.gamma, cfg.delta, cfg.m,
                                                    cfg.epsilon))
        violated = true_loss > emp + cert.bound_value
        rows.append({"resample": r, "train_loss": res.losses[-1], "empirical_robust_loss": emp,
                     "heldout_robust_loss": true_loss, "certificate": cert.bound_value,
                     "regime": cert.regime, "violated": bool(violated)})
        if log:
            log(f"resample {r}: emp={emp:.3f} heldout={true_loss:.3f} "
                f"cert={cert.bound_value:.4g} ({time.time() - t0:.1f}s)")
    R = cfg.resamples
    violations = sum(row["violated"] for row in rows)
    allowed = cfg.delta * R + 3 * math.sqrt(R * cfg.delta * (1 - cfg.delta))
    return {
        "config": asdict(cfg),
        "seed": seed,
        "rows": rows,
        "violations": violations,
        "violation_frequency": violations / R,
        "allowed_violations": allowed,
        "passed": violations <= allowed,
        "vacuous_fraction": sum(row["certificate"] >= 1 for row in rows) / R,
        "degree_independence": degree_independence(last_params, cfg, seed),
        "candidate_semantics": "feature PGD, same attack on training and held-out samples",
        "seconds": time.time() - t0,
    }


def degree_independence(p, cfg: PacExperimentConfig, seed=0) -> dict:
    """Certificates and comparators for fixed weights on two regular-graph corpora."""
    out = {}
    certs = []
    for d in cfg.degree_pair:
        spec = CorpusSpec(family="random_regular", m=cfg.degree_m, n=cfg.degree_n, degree=d,
                          h0=cfg.h0, K=cfg.K, B=cfg.B)
        meta, graphs = generate_corpus(spec, [seed, d])
        inp = BoundInputs.from_gcn(p, meta.B, cfg.gamma, cfg.delta, cfg.m, cfg.epsilon)
        cert = gcn_certificate(inp)
        dmax = max(max_degree(g) for g in graphs)
        certs.append(cert)
        out[f"d{d}"] = {"max_degree": dmax, "certificate": cert.to_json(),
                        "comparators": baseline_comparators(inp, dmax)}
    out["identical"] = all(c.to_json() == certs[0].to_json() for c in certs)
    out["certificate_difference"] = abs(certs[0].bound_value - certs[-1].bound_value)
    return out


def pac_report(result: dict) -> TrialReport:
    return TrialReport("end_to_end_pac", len(result["rows"]),
                       0 if result["passed"] and result["degree_independence"]["identical"] else 1,
                       result["allowed_violations"] - result["violations"],
                       result["config"], result["seed"])


# --- driver -------------------------------------------------------------------

CHECKS = {
    "gcn_perturbation": lambda seed, threads: check_gcn_perturbation(1000, seed, threads=threads),
    "margin_perturbation": lambda seed, threads: check_margin_perturbation(500, seed, threads=threads),
    "mpgnn_perturbation_unit": lambda seed, threads: check_mpgnn_perturbation(
        500, seed, "unit", threads=threads),
    "mpgnn_perturbation_generic": lambda seed, threads: check_mpgnn_perturbation(
        500, seed, "generic", threads=threads),
    "norm_propositions": lambda seed, threads: check_norm_propositions(1000, 500, seed, threads=threads),
    "gaussian_spectral_tail": lambda seed, threads: check_gaussian_spectral_tail(seed=seed),
    "moment_lemma": lambda seed, threads: check_moment_lemma(seed=seed),
    "end_to_end_pac": lambda seed, threads: pac_report(end_to_end_pac(seed=seed)),
}


def run_all(seed=0, threads=1, names=None, log=None) -> list:
    names = list(CHECKS) if names is None else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks: {unknown}")
    reports = []
    for name in names:
        rep = CHECKS[name](seed, threads)
        if log:
            log(rep.row())
        reports.append(rep)
    return reports


def reports_to_json(reports) -> str:
    return json.dumps([r.to_json() for r in reports], indent=1)
