"""Graph samples, diffusion operators, synthetic generators and JSON-lines datasets."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AssumptionViolation, InvalidParams, ParseError
from .linalg import as_matrix, project_spectral_ball, spectral_norm_with_retry

DIFFUSION_KINDS = ("laplacian", "adjacency", "normalized_adjacency")
GENERATOR_KINDS = ("erdos_renyi", "random_regular", "star", "complete")

# slack when validating ||X||_2 <= B against rounding in the projection
ASSUMPTION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with node features and a class label.

    Edges are stored as sorted pairs (i < j); self-loops are rejected since
    the diffusion operators add them where needed.
    """

    n: int
    edges: frozenset
    features: np.ndarray
    label: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParams("graph needs at least one node")
        norm_edges = set()
        for e in self.edges:
            i, j = (int(x) for x in e)
            if i == j:
                raise InvalidParams(f"self-loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise InvalidParams(f"edge ({i}, {j}) out of range for n={self.n}")
            pair = (min(i, j), max(i, j))
            if pair in norm_edges:
                raise InvalidParams(f"duplicate edge {pair}")
            norm_edges.add(pair)
        x = as_matrix(self.features)
        if x.shape[0] != self.n:
            raise InvalidParams(f"features have {x.shape[0]} rows, expected {self.n}")
        x.setflags(write=False)
        object.__setattr__(self, "edges", frozenset(norm_edges))
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "label", int(self.label))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.edges == other.edges
            and self.label == other.label
            and self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
        )

    __hash__ = None

    @property
    def h0(self) -> int:
        return self.features.shape[1]

    def with_features(self, features) -> "Graph":
        # same structure, so cached diffusion operators stay valid
        return Graph(self.n, self.edges, features, self.label, _cache=self._cache)

    def with_edges(self, edges) -> "Graph":
        return Graph(self.n, frozenset(edges), self.features, self.label)

    def flip_edge(self, i: int, j: int) -> "Graph":
        pair = (min(i, j), max(i, j))
        return self.with_edges(self.edges ^ {pair})


@dataclass(frozen=True)
class DatasetMeta:
    K: int
    h0: int
    B: float
    m: int = 0


def adjacency(g: Graph) -> np.ndarray:
    a = np.zeros((g.n, g.n))
    for i, j in g.edges:
        a[i, j] = a[j, i] = 1.0
    return a


def max_degree(g: Graph) -> int:
    deg = np.zeros(g.n, dtype=int)
    for i, j in g.edges:
        deg[i] += 1
        deg[j] += 1
    return int(deg.max())


def normalized_laplacian(g: Graph) -> np.ndarray:
    """D~^{-1/2} (A + I) D~^{-1/2}; the self-loop keeps every degree >= 1."""
    a_tilde = adjacency(g) + np.eye(g.n)
    d_inv_sqrt = 1.0 / np.sqrt(a_tilde.sum(axis=1))
    return d_inv_sqrt[:, None] * a_tilde * d_inv_sqrt[None, :]


def diffusion_operator(g: Graph, kind: str = "laplacian") -> np.ndarray:
    """The message-passing matrix P_G. Result is cached per graph and read-only."""
    cached = g._cache.get(kind)
    if cached is not None:
        return cached
    if kind == "laplacian":
        p = normalized_laplacian(g)
    elif kind == "adjacency":
        p = adjacency(g)
    elif kind == "normalized_adjacency":
        a_tilde = adjacency(g) + np.eye(g.n)
        p = a_tilde / a_tilde.sum(axis=1, keepdims=True)
    else:
        raise InvalidParams(f"unknown diffusion kind {kind!r}")
    p.setflags(write=False)
    g._cache[kind] = p
    return p


def diffusion_norm(g: Graph, kind: str = "laplacian") -> float:
    key = ("norm", kind)
    if key not in g._cache:
        g._cache[key] = spectral_norm_with_retry(diffusion_operator(g, kind))
    return g._cache[key]


def sample_features(n: int, h0: int, B: float, rng) -> np.ndarray:
    """Uniform [-1, 1] entries projected into the spectral ball of radius B."""
    x = rng.uniform(-1.0, 1.0, size=(n, h0))
    return project_spectral_ball(x, B)


def _edges_for(kind, n, p, degree, rng):
    if kind == "erdos_renyi":
        if p is None or not 0.0 <= p <= 1.0:
            raise InvalidParams("erdos_renyi needs 0 <= p <= 1")
        iu, ju = np.triu_indices(n, k=1)
        keep = rng.random(iu.size) < p
        return {(int(i), int(j)) for i, j in zip(iu[keep], ju[keep])}
    if kind == "complete":
        return {(i, j) for i in range(n) for j in range(i + 1, n)}
    if kind == "star":
        if n < 2:
            raise InvalidParams("star needs n >= 2")
        return {(0, j) for j in range(1, n)}
    if kind == "random_regular":
        if degree is None or degree < 0 or degree >= n or (n * degree) % 2:
            raise InvalidParams(f"no {degree}-regular graph on {n} nodes")
        import networkx as nx

        nxg = nx.random_regular_graph(degree, n, seed=int(rng.integers(2**31)))
        return {(min(i, j), max(i, j)) for i, j in nxg.edges()}
    raise InvalidParams(f"unknown generator kind {kind!r}")


def generate(kind: str, n: int, *, p=None, degree=None, h0: int = 4, B: float = 1.0,
             label: int = 0, seed=0) -> Graph:
    """One synthetic graph. For ``star`` the hub is node 0 with n - 1 leaves."""
    if n < 1 or h0 < 1 or B <= 0:
        raise InvalidParams("need n >= 1, h0 >= 1 and B > 0")
    rng = np.random.default_rng(seed)
    edges = _edges_for(kind, n, p, degree, rng)
    return Graph(n, frozenset(edges), sample_features(n, h0, B, rng), label)


@dataclass
class CorpusSpec:
    """Synthetic labelled corpus: graph family plus a fixed teacher GCN for labels."""

    family: str = "erdos_renyi"
    m: int = 100
    n: int = 8
    p: float = 0.3
    degree: int = 3
    h0: int = 4
    K: int = 2
    B: float = 1.0
    teacher_hidden: int = 8
    teacher_seed: int = 1234


def teacher_params(spec: CorpusSpec):
    from .gnn import GcnParams

    rng = np.random.default_rng(spec.teacher_seed)
    w1 = rng.standard_normal((spec.h0, spec.teacher_hidden))
    w2 = rng.standard_normal((spec.teacher_hidden, spec.K))
    return GcnParams([w1, w2])


def generate_corpus(spec: CorpusSpec, seed=0):
    """Sample ``spec.m`` graphs and label them with the teacher's argmax."""
    from .gnn import predict

    if spec.m < 1:
        raise InvalidParams("corpus needs m >= 1")
    if spec.K < 2:
        raise InvalidParams("need K >= 2 classes")
    teacher = teacher_params(spec)
    seeds = np.random.SeedSequence(seed).spawn(spec.m)
    graphs = []
    for ss in seeds:
        g = generate(spec.family, spec.n, p=spec.p, degree=spec.degree, h0=spec.h0,
                     B=spec.B, seed=ss)
        graphs.append(Graph(g.n, g.edges, g.features, int(predict(teacher, g)), _cache=g._cache))
    return DatasetMeta(K=spec.K, h0=spec.h0, B=spec.B, m=len(graphs)), graphs


def validate_sample(g: Graph, meta: DatasetMeta, index=None):
    if g.h0 != meta.h0:
        raise ParseError(f"sample {index} has {g.h0} feature columns, expected {meta.h0}")
    if not 0 <= g.label < meta.K:
        raise ParseError(f"sample {index} label {g.label} outside [0, {meta.K})")
    xn = spectral_norm_with_retry(g.features)
    if xn > meta.B + ASSUMPTION_TOL:
        raise AssumptionViolation(
            f"sample {index}: ||X||_2 = {xn:.6g} exceeds B = {meta.B}", sample=index
        )


def graph_to_record(g: Graph) -> dict:
    return {
        "n": g.n,
        "edges": [list(e) for e in sorted(g.edges)],
        "features": g.features.tolist(),
        "label": g.label,
    }


def save_dataset(meta: DatasetMeta, graphs, path, provenance=None):
    header = {"K": meta.K, "h0": meta.h0, "B": meta.B}
    if provenance:
        header["provenance"] = provenance
    with open(path, "w") as fh:
        fh.write(json.dumps({"meta": header}) + "\n")
        for g in graphs:
            fh.write(json.dumps(graph_to_record(g)) + "\n")


def load_dataset(path):
    """Read a JSON-lines corpus and validate every sample against the header."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("empty dataset file", line=1)
    try:
        head = json.loads(lines[0])
        hm = head["meta"]
        K, h0, B = int(hm["K"]), int(hm["h0"]), float(hm["B"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad meta header: {exc}", line=1) from exc
    meta = DatasetMeta(K=K, h0=h0, B=B)
    graphs = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
            g = Graph(int(rec["n"]), frozenset(tuple(e) for e in rec["edges"]),
                      rec["features"], int(rec["label"]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(str(exc), line=lineno) from exc
        try:
            validate_sample(g, meta, index=len(graphs))
        except ParseError as exc:
            raise ParseError(str(exc), line=lineno) from exc
        graphs.append(g)
    return DatasetMeta(K=K, h0=h0, B=B, m=len(graphs)), graphs
