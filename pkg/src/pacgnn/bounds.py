"""Capacity measures and explicit-constant PAC-Bayes certificates for GCN and MPGNN.

Every certificate has the form

    sqrt((2 KL + log(8 m |C| / delta)) / (2 (m - 1)))

where the posterior scale sigma is tied to a grid point beta_tilde of a
cover of the admissible weight-scale interval. Outside that interval the
bound is trivially 1 and the regime says which side was hit.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateWeight, InvalidParams
from .graph import diffusion_norm
from .linalg import frobenius_norm, spectral_norm_with_retry

E = math.e
REGIMES = ("valid", "trivial_small_beta", "trivial_large_beta")
# tau within this distance of 1 uses the tau = 1 formulas
TAU_ONE_TOL = 1e-12


@dataclass
class BoundInputs:
    """Scalars a certificate depends on. No graph structure enters except max ||P_G||_2."""

    B: float
    gamma: float
    delta: float
    m: int
    w_spec: tuple
    w_frob: tuple
    width: int
    epsilon: float = 0.0
    u_spec: tuple = ()
    u_frob: tuple = ()
    lipschitz: float = 1.0
    M1: Optional[float] = None
    M2: Optional[float] = None
    max_diffusion_norm: Optional[float] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidParams("gamma must be > 0")
        if not 0 < self.delta < 1:
            raise InvalidParams("delta must lie in (0, 1)")
        if self.m < 2:
            raise InvalidParams("need m >= 2 samples")
        if self.B <= 0 or self.epsilon < 0:
            raise InvalidParams("need B > 0 and epsilon >= 0")
        self.w_spec = tuple(float(v) for v in self.w_spec)
        self.w_frob = tuple(float(v) for v in self.w_frob)
        self.u_spec = tuple(float(v) for v in self.u_spec)
        self.u_frob = tuple(float(v) for v in self.u_frob)
        if min(self.w_spec + self.w_frob + self.u_spec + self.u_frob) < 0:
            raise InvalidParams("norms must be >= 0")

    @property
    def depth(self) -> int:
        return len(self.w_spec)

    @property
    def radius(self) -> float:
        return self.B + self.epsilon

    @classmethod
    def from_gcn(cls, p, B, gamma, delta, m, epsilon=0.0):
        return cls(B=B, gamma=gamma, delta=delta, m=m, epsilon=epsilon,
                   w_spec=tuple(spectral_norm_with_retry(w) for w in p.layers),
                   w_frob=tuple(frobenius_norm(w) for w in p.layers),
                   width=p.width)

    @classmethod
    def from_mpgnn(cls, p, graphs, B, gamma, delta, m=None, epsilon=0.0, max_diffusion_norm=None):
        if max_diffusion_norm is None:
            max_diffusion_norm = max(diffusion_norm(g, p.diffusion) for g in graphs)
        return cls(B=B, gamma=gamma, delta=delta, m=len(graphs) if m is None else m,
                   epsilon=epsilon,
                   w_spec=tuple(spectral_norm_with_retry(w) for w in p.W),
                   w_frob=tuple(frobenius_norm(w) for w in p.W),
                   u_spec=tuple(spectral_norm_with_retry(u) for u in p.U),
                   u_frob=tuple(frobenius_norm(u) for u in p.U),
                   width=p.width, lipschitz=p.lipschitz, M1=p.M1, M2=p.M2,
                   max_diffusion_norm=max_diffusion_norm)


@dataclass
class BoundCertificate:
    bound_value: float
    regime: str
    components: dict = field(default_factory=dict)
    model: str = "gcn"

    def to_json(self) -> dict:
        return asdict(self)


def _check_nonzero(spec_norms):
    for k, s in enumerate(spec_norms):
        if s == 0:
            raise DegenerateWeight(f"weight matrix {k + 1} has zero spectral norm")


def phi_capacity(p) -> float:
    """Prod ||W_i||_2^2 * sum ||W_i||_F^2 / ||W_i||_2^2."""
    mats = p.layers if hasattr(p, "layers") else p
    spec = [spectral_norm_with_retry(w) for w in mats]
    frob = [frobenius_norm(w) for w in mats]
    return _phi(spec, frob)


def _phi(spec, frob):
    _check_nonzero(spec)
    prod = math.prod(s * s for s in spec)
    return prod * sum((f / s) ** 2 for f, s in zip(frob, spec))


def cover_size(formula_value: float) -> int:
    """max(1, ceil(value)), ignoring round-off just above an integer."""
    return max(1, math.ceil(formula_value - 1e-9))


def nearest_center(beta: float, lo: float, radius: float, size: int) -> float:
    """Closest of the centers lo + radius (2k + 1), k = 0..size-1."""
    k = int(np.clip(round((beta - lo) / (2 * radius) - 0.5), 0, size - 1))
    return lo + radius * (2 * k + 1)


def lemma_bound(kl: float, m: int, delta: float, size: int) -> float:
    return math.sqrt((2 * kl + math.log(8 * m * size / delta)) / (2 * (m - 1)))


def _trivial(regime, model, **comp):
    return BoundCertificate(1.0, regime, comp, model)


def _gcn_core(inp: BoundInputs, radius: float) -> BoundCertificate:
    l, h, m, gamma = inp.depth, inp.width, inp.m, inp.gamma
    _check_nonzero(inp.w_spec)
    beta = math.prod(inp.w_spec) ** (1.0 / l)
    lo = (gamma / (2 * radius)) ** (1.0 / l)
    hi = (gamma * math.sqrt(m) / (2 * radius)) ** (1.0 / l)
    size = cover_size(l / 2 * (m ** (1.0 / (2 * l)) - 1))
    if beta < lo:
        return _trivial("trivial_small_beta", "gcn", beta=beta, cover_size=size)
    if beta > hi:
        return _trivial("trivial_large_beta", "gcn", beta=beta, cover_size=size)
    beta_t = nearest_center(beta, lo, lo / l, size)
    sigma = gamma / (4 * E ** 2 * radius * beta_t ** (l - 1) * l
                     * math.sqrt(2 * h * math.log(4 * l * h)))
    # weights rescaled to a common spectral norm beta (ReLU homogeneity)
    w_sq = beta ** 2 * sum((f / s) ** 2 for f, s in zip(inp.w_frob, inp.w_spec))
    kl = w_sq / (2 * sigma ** 2)
    value = lemma_bound(kl, m, inp.delta, size)
    return BoundCertificate(value, "valid", {
        "beta": beta, "beta_tilde": beta_t, "sigma": sigma, "kl": kl,
        "cover_size": size, "beta_range": [lo, hi], "w_norm_sq": w_sq,
    }, "gcn")


def gcn_certificate(inp: BoundInputs) -> BoundCertificate:
    """Robust GCN certificate; the feature radius is B + epsilon."""
    return _gcn_core(inp, inp.B + inp.epsilon)


def gcn_standard_certificate(inp: BoundInputs) -> BoundCertificate:
    """Certificate for the unattacked setting: feature radius B, epsilon ignored."""
    return _gcn_core(inp, inp.B)


def geometric_sum(tau: float, terms: int) -> float:
    """sum_{i<terms} tau^i, i.e. (tau^terms - 1)/(tau - 1) without the 0/0 at tau = 1."""
    return float(sum(tau ** i for i in range(terms)))


def mpgnn_quantities(inp: BoundInputs) -> dict:
    if inp.M1 is None or inp.M2 is None or inp.max_diffusion_norm is None:
        raise InvalidParams("MPGNN quantities need M1, M2 and max ||P_G||")
    l, h, L = inp.depth, inp.width, inp.lipschitz
    zeta = min(inp.w_spec + inp.u_spec)
    if zeta == 0:
        raise DegenerateWeight("a weight matrix has zero spectral norm")
    tau = L ** 3 * inp.M2 * inp.max_diffusion_norm
    lmm = L * inp.M1 * inp.M2
    xi = lmm * geometric_sum(tau, l - 1)
    w_sq = sum(f * f for f in inp.w_frob) + sum(f * f for f in inp.u_frob)
    return {
        "tau": tau, "xi": xi, "zeta": zeta, "w_norm_sq": w_sq,
        "tau_is_one": abs(tau - 1) < TAU_ONE_TOL,
        "psi0": inp.radius ** 2 * h * math.log(l * h),
        "psi1": max(zeta ** -6, lmm ** 3) * w_sq,
        "psi2": max(1 / zeta, xi ** (1.0 / l)) ** (2 * l + 2) * w_sq,
    }


def mpgnn_certificate(inp: BoundInputs, q: Optional[dict] = None) -> BoundCertificate:
    q = mpgnn_quantities(inp) if q is None else q
    l, h, m, gamma, radius = inp.depth, inp.width, inp.m, inp.gamma, inp.radius
    lmm = inp.lipschitz * inp.M1 * inp.M2
    log_term = math.sqrt(2 * h * math.log(4 * (2 * l - 1) * h))
    shared = {k: q[k] for k in ("tau", "xi", "zeta", "w_norm_sq", "psi0", "psi1", "psi2")}
    if q["tau_is_one"]:
        beta = max(1 / q["zeta"], math.sqrt(lmm))
        lo = math.sqrt(gamma / (2 * radius * l))
        hi = math.sqrt(gamma * math.sqrt(m) / (2 * radius * l))
        cover_radius = lo / 4
        size = cover_size(2 * (m ** 0.25 - 1))
    else:
        beta = max(1 / q["zeta"], q["xi"] ** (1.0 / l))
        lo = (gamma / (2 * radius)) ** (1.0 / l)
        hi = (gamma * math.sqrt(m) / (2 * radius)) ** (1.0 / l)
        cover_radius = lo / (l + 2)
        size = cover_size((l + 2) / 2 * (m ** (1.0 / (2 * l)) - 1))
    shared.update(beta=beta, cover_size=size, branch="tau_one" if q["tau_is_one"] else "tau_generic")
    if beta < lo:
        return _trivial("trivial_small_beta", "mpgnn", **shared)
    if beta > hi:
        return _trivial("trivial_large_beta", "mpgnn", **shared)
    beta_t = nearest_center(beta, lo, cover_radius, size)
    if q["tau_is_one"]:
        sigma = gamma / (4 * E ** 2 * (l + 1) ** 2 * radius * beta_t ** 3 * log_term)
    else:
        sigma = gamma / (4 * E ** 2 * l * radius * beta_t ** (l + 1) * log_term)
    kl = q["w_norm_sq"] / (2 * sigma ** 2)
    shared.update(beta_tilde=beta_t, sigma=sigma, kl=kl, beta_range=[lo, hi])
    return BoundCertificate(lemma_bound(kl, m, inp.delta, size), "valid", shared, "mpgnn")


def baseline_comparators(inp: BoundInputs, d: float) -> dict:
    """Unit-constant scaling values for comparison tables (not certificates).

    base = l sqrt(h log(lh)) sqrt(Phi) (B + eps) / (gamma sqrt(m)). The
    degree-power bounds multiply it by d^{(l-1)/2} (GCN) or d^{l-2} (MPGNN).
    The degree-free GCN value is ``base`` itself and the MPGNN counterpart
    carries ||P_G||^{l-2} in place of the degree power.
    """
    if d < 1:
        raise InvalidParams("max degree must be >= 1")
    l, h = inp.depth, inp.width
    phi = _phi(inp.w_spec, inp.w_frob)
    base = l * math.sqrt(h * math.log(l * h)) * math.sqrt(phi) * inp.radius / (inp.gamma * math.sqrt(inp.m))
    pnorm = 1.0 if inp.max_diffusion_norm is None else inp.max_diffusion_norm
    return {
        "degree_power_gcn": d ** ((l - 1) / 2) * base,
        "degree_power_mpgnn": d ** (l - 2) * base,
        "degree_free_gcn": base,
        "diffusion_norm_mpgnn": pnorm ** (l - 2) * base,
    }
