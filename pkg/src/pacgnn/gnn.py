"""GCN and MPGNN graph classifiers with hand-written reverse-mode gradients.

Both models run on stacks of equally sized graphs: features ``X`` of shape
(N, n, h0) and diffusion matrices ``P`` of shape (N, n, n). Single-graph entry
points wrap a stack of one. The forward trace keeps every intermediate and the
backward pass walks it in reverse; there is no general tape.
"""

import json
from dataclasses import InitVar, dataclass, field
from typing import Optional

import numpy as np

from .errors import Divergence, InvalidParams, ShapeMismatch
from .graph import Graph, diffusion_operator
from .linalg import (as_matrix, matrix_from_json, matrix_to_json, project_spectral_ball,
                     spectral_norm_with_retry)


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z):
    # subgradient at 0 is 0
    return (z > 0).astype(np.float64)


def _tanh_grad(z):
    t = np.tanh(z)
    return 1.0 - t * t


ACTIVATIONS = {
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
    "identity": (lambda z: z, np.ones_like),
}
# all three are 1-Lipschitz and vanish at 0
LIPSCHITZ = {"relu": 1.0, "tanh": 1.0, "identity": 1.0}

_NORM_SLACK = 1e-9


@dataclass
class GcnParams:
    """Weights W_1..W_l; W_k maps width h_{k-1} to h_k and h_l is the class count."""

    layers: list

    arch = "gcn"

    def __post_init__(self):
        self.layers = [as_matrix(w) for w in self.layers]
        if len(self.layers) < 2:
            raise InvalidParams("GCN needs l > 1 layers")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.shape[1] != b.shape[0]:
                raise ShapeMismatch(f"layer shapes {a.shape} -> {b.shape} do not chain")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def dims(self) -> list:
        return [self.layers[0].shape[0]] + [w.shape[1] for w in self.layers]

    @property
    def width(self) -> int:
        return max(self.dims)

    @property
    def n_classes(self) -> int:
        return self.layers[-1].shape[1]

    def matrices(self):
        return list(self.layers)

    def replace(self, W=None, U=None) -> "GcnParams":
        return GcnParams(list(W) if W is not None else list(self.layers))


@dataclass
class MpgnnParams:
    """MPGNN weights: W_1..W_l, skip weights U_1..U_{l-1} and activation choices.

    Spectral bounds ||W_k|| <= M2 and ||U_k|| <= M1 are checked on
    construction unless ``strict=False`` (used for perturbed copies).
    """

    W: list
    U: list
    phi: str = "relu"
    rho: str = "relu"
    psi: str = "relu"
    lipschitz: float = 1.0
    diffusion: str = "laplacian"
    M1: float = 1.0
    M2: float = 1.0
    strict: InitVar[bool] = True

    arch = "mpgnn"

    def __post_init__(self, strict):
        self.W = [as_matrix(w) for w in self.W]
        self.U = [as_matrix(u) for u in self.U]
        l = len(self.W)
        if l < 2:
            raise InvalidParams("MPGNN needs l > 1 layers")
        if len(self.U) != l - 1:
            raise ShapeMismatch(f"expected {l - 1} skip weights, got {len(self.U)}")
        for name in (self.phi, self.rho, self.psi):
            if name not in ACTIVATIONS:
                raise InvalidParams(f"unknown activation {name!r}")
        if self.lipschitz < max(LIPSCHITZ[a] for a in (self.phi, self.rho, self.psi)):
            raise InvalidParams("lipschitz constant below that of the chosen activations")
        h0 = self.W[0].shape[0]
        for k in range(l):
            if k > 0 and self.W[k].shape[0] != self.W[k - 1].shape[1]:
                raise ShapeMismatch(f"W_{k + 1} has {self.W[k].shape[0]} rows, "
                                    f"expected {self.W[k - 1].shape[1]}")
            if k < l - 1 and self.U[k].shape != (h0, self.W[k].shape[1]):
                raise ShapeMismatch(f"U_{k + 1} has shape {self.U[k].shape}, "
                                    f"expected {(h0, self.W[k].shape[1])}")
        if strict:
            self.check_bounds()

    def check_bounds(self):
        for k, w in enumerate(self.W):
            if spectral_norm_with_retry(w) > self.M2 * (1 + _NORM_SLACK) + _NORM_SLACK:
                raise InvalidParams(f"||W_{k + 1}||_2 exceeds M2 = {self.M2}")
        for k, u in enumerate(self.U):
            if spectral_norm_with_retry(u) > self.M1 * (1 + _NORM_SLACK) + _NORM_SLACK:
                raise InvalidParams(f"||U_{k + 1}||_2 exceeds M1 = {self.M1}")

    @property
    def depth(self) -> int:
        return len(self.W)

    @property
    def dims(self) -> list:
        return [self.W[0].shape[0]] + [w.shape[1] for w in self.W]

    @property
    def width(self) -> int:
        return max(self.dims)

    @property
    def n_classes(self) -> int:
        return self.W[-1].shape[1]

    def matrices(self):
        return list(self.W) + list(self.U)

    def replace(self, W=None, U=None, strict=False) -> "MpgnnParams":
        return MpgnnParams(
            list(W) if W is not None else list(self.W),
            list(U) if U is not None else list(self.U),
            self.phi, self.rho, self.psi, self.lipschitz, self.diffusion,
            self.M1, self.M2, strict=strict,
        )


def diffusion_kind(p) -> str:
    return "laplacian" if p.arch == "gcn" else p.diffusion


# --- batched core -----------------------------------------------------------

def _check_stack(p, X, P):
    if X.ndim != 3 or P.ndim != 3 or X.shape[:2] != P.shape[:2] or P.shape[1] != P.shape[2]:
        raise ShapeMismatch(f"bad stack shapes X={X.shape}, P={P.shape}")
    if X.shape[2] != p.dims[0]:
        raise ShapeMismatch(f"features have {X.shape[2]} columns, model expects {p.dims[0]}")


def _gcn_trace(p: GcnParams, X, P):
    hs, zs, phs = [X], [], []
    for w in p.layers[:-1]:
        ph = P @ hs[-1]
        z = ph @ w
        phs.append(ph)
        zs.append(z)
        hs.append(_relu(z))
    logits = hs[-1].mean(axis=1) @ p.layers[-1]
    return logits, {"H": hs, "Z": zs, "PH": phs}


def _gcn_backward(p: GcnParams, X, P, trace, dlogits):
    hs, zs, phs = trace["H"], trace["Z"], trace["PH"]
    n = X.shape[1]
    grads = [None] * p.depth
    grads[-1] = hs[-1].mean(axis=1).T @ dlogits
    dh = np.repeat(((dlogits @ p.layers[-1].T) / n)[:, None, :], n, axis=1)
    pt = np.swapaxes(P, 1, 2)
    for k in reversed(range(p.depth - 1)):
        dz = dh * _relu_grad(zs[k])
        grads[k] = np.einsum("bni,bnj->ij", phs[k], dz)
        dh = pt @ (dz @ p.layers[k].T)
    return {"W": grads}, dh


def _mpgnn_trace(p: MpgnnParams, X, P):
    phi, _ = ACTIVATIONS[p.phi]
    rho, _ = ACTIVATIONS[p.rho]
    psi, _ = ACTIVATIONS[p.psi]
    N, n, h0 = X.shape
    hs = [np.zeros((N, n, h0))]
    es, fs, pss = [], [], []
    for k in range(p.depth - 1):
        ps = P @ psi(hs[-1])
        f = ps @ p.W[k]
        e = X @ p.U[k] + rho(f)
        pss.append(ps)
        fs.append(f)
        es.append(e)
        hs.append(phi(e))
    logits = hs[-1].mean(axis=1) @ p.W[-1]
    return logits, {"H": hs, "E": es, "F": fs, "PS": pss}


def _mpgnn_backward(p: MpgnnParams, X, P, trace, dlogits):
    _, dphi = ACTIVATIONS[p.phi]
    _, drho = ACTIVATIONS[p.rho]
    _, dpsi = ACTIVATIONS[p.psi]
    hs, es, fs, pss = trace["H"], trace["E"], trace["F"], trace["PS"]
    n = X.shape[1]
    l = p.depth
    gW = [None] * l
    gU = [None] * (l - 1)
    gW[-1] = hs[-1].mean(axis=1).T @ dlogits
    dh = np.repeat(((dlogits @ p.W[-1].T) / n)[:, None, :], n, axis=1)
    dX = np.zeros_like(X)
    pt = np.swapaxes(P, 1, 2)
    for k in reversed(range(l - 1)):
        de = dh * dphi(es[k])
        gU[k] = np.einsum("bni,bnj->ij", X, de)
        dX += de @ p.U[k].T
        df = de * drho(fs[k])
        gW[k] = np.einsum("bni,bnj->ij", pss[k], df)
        dh = (pt @ (df @ p.W[k].T)) * dpsi(hs[k])
    return {"W": gW, "U": gU}, dX


def batch_trace(p, X, P):
    """Forward pass over a stack; returns (logits (N, K), trace)."""
    _check_stack(p, X, P)
    if p.arch == "gcn":
        return _gcn_trace(p, X, P)
    return _mpgnn_trace(p, X, P)


def batch_backward(p, X, P, trace, dlogits):
    """Vector-Jacobian product of the logits; returns (param grads, dX)."""
    if p.arch == "gcn":
        return _gcn_backward(p, X, P, trace, dlogits)
    return _mpgnn_backward(p, X, P, trace, dlogits)


def batch_logits(p, X, P):
    return batch_trace(p, X, P)[0]


def stack_graphs(graphs, kind: str):
    """Features and diffusion matrices of equally sized graphs as 3-D arrays."""
    X = np.stack([g.features for g in graphs])
    P = np.stack([diffusion_operator(g, kind) for g in graphs])
    return X, P


def group_by_size(graphs):
    groups = {}
    for idx, g in enumerate(graphs):
        groups.setdefault(g.n, []).append(idx)
    return groups


# --- single-graph API -------------------------------------------------------

def _single(p, g: Graph):
    X = g.features[None]
    P = diffusion_operator(g, diffusion_kind(p))[None]
    return X, P


def gcn_forward(p: GcnParams, g: Graph):
    """Logits of length K and node representations H_0..H_{l-1}."""
    if p.arch != "gcn":
        raise InvalidParams("gcn_forward needs GcnParams")
    X, P = _single(p, g)
    logits, trace = batch_trace(p, X, P)
    return logits[0], [h[0] for h in trace["H"]]


def mpgnn_forward(p: MpgnnParams, g: Graph):
    """Logits and H_0..H_{l-1}, where H_0 is the zero matrix."""
    if p.arch != "mpgnn":
        raise InvalidParams("mpgnn_forward needs MpgnnParams")
    X, P = _single(p, g)
    logits, trace = batch_trace(p, X, P)
    return logits[0], [h[0] for h in trace["H"]]


def forward(p, g: Graph):
    return gcn_forward(p, g) if p.arch == "gcn" else mpgnn_forward(p, g)


def logits(p, g: Graph) -> np.ndarray:
    X, P = _single(p, g)
    return batch_logits(p, X, P)[0]


def predict(p, g: Graph) -> int:
    return int(np.argmax(logits(p, g)))


def grad_features(p, g: Graph, i: int, j: int) -> np.ndarray:
    """Gradient of f(G)_i - f(G)_j with respect to the node features."""
    K = p.n_classes
    if i == j or not (0 <= i < K and 0 <= j < K):
        raise InvalidParams(f"need distinct class indices in [0, {K}), got ({i}, {j})")
    X, P = _single(p, g)
    _, trace = batch_trace(p, X, P)
    d = np.zeros((1, K))
    d[0, i], d[0, j] = 1.0, -1.0
    _, dX = batch_backward(p, X, P, trace, d)
    return dX[0]


def cross_entropy(z, y):
    """Mean softmax cross-entropy of logits (N, K) at labels y, and its gradient."""
    z = np.atleast_2d(z)
    y = np.atleast_1d(y)
    shifted = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(z.shape[0])
    loss = float(np.mean(logsum - shifted[rows, y]))
    probs = np.exp(shifted - logsum[:, None])
    probs[rows, y] -= 1.0
    return loss, probs / z.shape[0]


def grad_weights(p, g: Graph, y: int):
    """Cross-entropy gradient at label y, shaped like the parameters.

    Returns ``{"W": [...]}`` for GCN and ``{"W": [...], "U": [...]}`` for MPGNN.
    """
    if not 0 <= y < p.n_classes:
        raise InvalidParams(f"label {y} outside [0, {p.n_classes})")
    X, P = _single(p, g)
    z, trace = batch_trace(p, X, P)
    _, dz = cross_entropy(z, [y])
    grads, _ = batch_backward(p, X, P, trace, dz)
    return grads


def dataset_loss_and_grads(p, graphs, labels=None):
    """Mean cross-entropy over a corpus with gradients, batching graphs by size."""
    labels = np.array([g.label for g in graphs] if labels is None else labels)
    kind = diffusion_kind(p)
    m = len(graphs)
    total = 0.0
    acc = None
    for idx in group_by_size(graphs).values():
        X, P = stack_graphs([graphs[i] for i in idx], kind)
        z, trace = batch_trace(p, X, P)
        loss, dz = cross_entropy(z, labels[idx])
        w = len(idx) / m
        grads, _ = batch_backward(p, X, P, trace, dz * w)
        total += loss * w
        if acc is None:
            acc = grads
        else:
            acc = {k: [a + b for a, b in zip(acc[k], grads[k])] for k in acc}
    return total, acc


# --- initialization, training, checkpoints ----------------------------------

@dataclass
class ArchSpec:
    arch: str = "gcn"
    hidden: tuple = (8,)
    phi: str = "relu"
    rho: str = "relu"
    psi: str = "relu"
    diffusion: str = "laplacian"
    M1: float = 1.0
    M2: float = 1.0
    lipschitz: float = 1.0

    def dims(self, h0: int, K: int) -> list:
        return [h0, *self.hidden, K]


def init_params(spec: ArchSpec, h0: int, K: int, seed=0):
    """N(0, (0.5/sqrt(h))^2) entries; MPGNN weights are then projected onto the M1/M2 balls."""
    dims = spec.dims(h0, K)
    if len(dims) < 3:
        raise InvalidParams("need at least one hidden layer (l > 1)")
    h = max(dims)
    std = 0.5 / np.sqrt(h)
    rng = np.random.default_rng(seed)
    W = [std * rng.standard_normal((a, b)) for a, b in zip(dims, dims[1:])]
    if spec.arch == "gcn":
        return GcnParams(W)
    if spec.arch != "mpgnn":
        raise InvalidParams(f"unknown architecture {spec.arch!r}")
    U = [std * rng.standard_normal((h0, b)) for b in dims[1:-1]]
    W = [project_spectral_ball(w, spec.M2) for w in W]
    U = [project_spectral_ball(u, spec.M1) for u in U]
    return MpgnnParams(W, U, spec.phi, spec.rho, spec.psi, spec.lipschitz,
                       spec.diffusion, spec.M1, spec.M2)


@dataclass
class TrainResult:
    params: object
    losses: list = field(default_factory=list)
    seed: int = 0


def train(graphs, spec: ArchSpec, steps: int, lr: float, seed=0,
          h0: Optional[int] = None, K: Optional[int] = None,
          init=None) -> TrainResult:
    """Full-batch gradient descent on mean cross-entropy.

    MPGNN weights are re-projected onto their spectral balls after each step
    so the norm assumptions hold for every iterate.
    """
    if not graphs:
        raise InvalidParams("training set is empty")
    h0 = graphs[0].h0 if h0 is None else h0
    K = (max(g.label for g in graphs) + 1) if K is None else K
    p = init if init is not None else init_params(spec, h0, K, seed)
    losses = []
    for _ in range(steps):
        loss, grads = dataset_loss_and_grads(p, graphs)
        if not np.isfinite(loss):
            raise Divergence(f"loss became {loss} after {len(losses)} steps")
        losses.append(loss)
        W = [w - lr * g for w, g in zip(p.matrices()[: p.depth], grads["W"])]
        if p.arch == "gcn":
            p = GcnParams(W)
        else:
            U = [u - lr * g for u, g in zip(p.U, grads["U"])]
            W = [project_spectral_ball(w, p.M2) for w in W]
            U = [project_spectral_ball(u, p.M1) for u in U]
            if not all(np.all(np.isfinite(a)) for a in W + U):
                raise Divergence("non-finite weights")
            p = p.replace(W, U, strict=True)
    if steps:
        final, _ = dataset_loss_and_grads(p, graphs)
        if not np.isfinite(final):
            raise Divergence(f"final loss is {final}")
        losses.append(final)
    return TrainResult(p, losses, seed)


def accuracy(p, graphs) -> float:
    kind = diffusion_kind(p)
    correct = 0
    for idx in group_by_size(graphs).values():
        X, P = stack_graphs([graphs[i] for i in idx], kind)
        pred = np.argmax(batch_logits(p, X, P), axis=1)
        correct += int(np.sum(pred == np.array([graphs[i].label for i in idx])))
    return correct / len(graphs)


def params_to_json(p, seed=None, provenance=None) -> dict:
    out = {"arch": p.arch, "dims": p.dims, "seed": seed}
    if p.arch == "gcn":
        out["weights"] = {"W": [matrix_to_json(w) for w in p.layers]}
        out["activation"] = "relu"
        out["diffusion"] = "laplacian"
        out["M1"] = out["M2"] = None
    else:
        out["weights"] = {"W": [matrix_to_json(w) for w in p.W],
                          "U": [matrix_to_json(u) for u in p.U]}
        out["activation"] = {"phi": p.phi, "rho": p.rho, "psi": p.psi,
                             "lipschitz": p.lipschitz}
        out["diffusion"] = p.diffusion
        out["M1"], out["M2"] = p.M1, p.M2
    if provenance:
        out["provenance"] = provenance
    return out


def params_from_json(obj):
    W = [matrix_from_json(w) for w in obj["weights"]["W"]]
    if obj["arch"] == "gcn":
        return GcnParams(W)
    if obj["arch"] != "mpgnn":
        raise InvalidParams(f"unknown architecture {obj['arch']!r}")
    U = [matrix_from_json(u) for u in obj["weights"]["U"]]
    act = obj["activation"]
    return MpgnnParams(W, U, act["phi"], act["rho"], act["psi"], act.get("lipschitz", 1.0),
                       obj["diffusion"], obj["M1"], obj["M2"])


def save_checkpoint(p, path, seed=None, provenance=None):
    with open(path, "w") as fh:
        json.dump(params_to_json(p, seed, provenance), fh, indent=1)


def load_checkpoint(path):
    with open(path) as fh:
        return params_from_json(json.load(fh))
