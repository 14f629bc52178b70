import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import jacobi_eigenvalues, laplacian_oracle, spectral_norm_oracle
from pacgnn.errors import AssumptionViolation, InvalidParams, ParseError
from pacgnn.graph import (CorpusSpec, DatasetMeta, Graph, adjacency, diffusion_norm,
                          diffusion_operator, generate, generate_corpus, load_dataset,
                          max_degree, normalized_laplacian, save_dataset)
from pacgnn.linalg import spectral_norm_with_retry


def edgeless(n, h0=2):
    return Graph(n, frozenset(), np.zeros((n, h0)))


def test_graph_invariants():
    with pytest.raises(InvalidParams):
        Graph(2, frozenset({(0, 0)}), np.zeros((2, 1)))
    with pytest.raises(InvalidParams):
        Graph(2, frozenset({(0, 2)}), np.zeros((2, 1)))
    with pytest.raises(InvalidParams):
        Graph(2, frozenset({(0, 1), (1, 0)}), np.zeros((2, 1)))
    with pytest.raises(InvalidParams):
        Graph(3, frozenset(), np.zeros((2, 1)))
    g = Graph(3, frozenset({(2, 0)}), np.zeros((3, 1)))
    assert g.edges == frozenset({(0, 2)})


def test_flip_edge_toggles():
    g = edgeless(3)
    h = g.flip_edge(2, 1)
    assert h.edges == frozenset({(1, 2)})
    assert h.flip_edge(1, 2) == g


def test_adjacency_examples():
    assert np.array_equal(adjacency(edgeless(3)), np.zeros((3, 3)))
    g = Graph(2, frozenset({(0, 1)}), np.zeros((2, 1)))
    assert np.array_equal(adjacency(g), [[0, 1], [1, 0]])
    r = generate("erdos_renyi", 12, p=0.4, seed=3)
    a = adjacency(r)
    assert np.array_equal(a, a.T) and not np.any(np.diag(a))


def test_max_degree_examples():
    assert max_degree(edgeless(4)) == 0
    assert max_degree(generate("star", 5)) == 4
    r = generate("erdos_renyi", 15, p=0.3, seed=8)
    assert max_degree(r) == max(sum(row) for row in adjacency(r).tolist())


def test_laplacian_examples():
    assert np.array_equal(normalized_laplacian(edgeless(1)), [[1.0]])
    g = Graph(2, frozenset({(0, 1)}), np.zeros((2, 1)))
    lap = normalized_laplacian(g)
    assert np.allclose(lap, 0.5)
    assert jacobi_eigenvalues(lap) == pytest.approx([0.0, 1.0], abs=1e-12)


def test_laplacian_matches_loop_oracle():
    for seed in range(20):
        g = generate("erdos_renyi", 9, p=0.35, seed=seed)
        assert np.allclose(normalized_laplacian(g), laplacian_oracle(g.n, g.edges), atol=1e-14)


def test_diffusion_kinds():
    g = generate("erdos_renyi", 8, p=0.5, seed=1)
    assert np.array_equal(diffusion_operator(g, "laplacian"), normalized_laplacian(g))
    star = generate("star", 5)
    assert spectral_norm_oracle(diffusion_operator(star, "adjacency")) == pytest.approx(2.0, abs=1e-10)
    assert diffusion_norm(star, "adjacency") == pytest.approx(2.0, rel=1e-9)
    reg = generate("random_regular", 10, degree=3, seed=4)
    assert np.allclose(diffusion_operator(reg, "normalized_adjacency").sum(axis=1), 1.0)
    with pytest.raises(InvalidParams):
        diffusion_operator(g, "heat")


def test_diffusion_operator_is_read_only():
    g = generate("complete", 3)
    with pytest.raises(ValueError):
        diffusion_operator(g)[0, 0] = 2.0


def test_generators():
    assert len(generate("complete", 4).edges) == 6
    assert max_degree(generate("star", 7)) == 6
    a = generate("erdos_renyi", 20, p=0.2, seed=5)
    b = generate("erdos_renyi", 20, p=0.2, seed=5)
    assert a == b
    reg = generate("random_regular", 12, degree=4, seed=2)
    assert set(adjacency(reg).sum(axis=1)) == {4.0}
    for bad in [dict(degree=6), dict(degree=3, n=5), dict(degree=-1)]:
        with pytest.raises(InvalidParams):
            generate("random_regular", bad.pop("n", 6), **bad)
    with pytest.raises(InvalidParams):
        generate("erdos_renyi", 5, p=1.5)
    with pytest.raises(InvalidParams):
        generate("lattice", 5)
    with pytest.raises(InvalidParams):
        generate("star", 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.floats(0, 1), st.integers(0, 10**6), st.floats(0.1, 3))
def test_degree_and_laplacian_norms(n, p, seed, B):
    g = generate("erdos_renyi", n, p=p, B=B, seed=seed)
    assert spectral_norm_with_retry(adjacency(g)) <= max_degree(g) + 1e-9
    assert spectral_norm_with_retry(normalized_laplacian(g)) <= 1 + 1e-9
    assert np.linalg.norm(g.features, 2) <= B + 1e-9


def test_degree_norm_bounds_on_500_graphs():
    rng = np.random.default_rng(0)
    for t in range(500):
        n = int(rng.integers(1, 31))
        g = generate("erdos_renyi", n, p=float(rng.random()), seed=[0, t])
        assert np.linalg.norm(adjacency(g), 2) <= max_degree(g) + 1e-9
        assert np.linalg.norm(normalized_laplacian(g), 2) <= 1 + 1e-9


def test_corpus_deterministic_and_labelled():
    spec = CorpusSpec(m=30, n=6, K=3)
    meta, gs = generate_corpus(spec, seed=7)
    _, again = generate_corpus(spec, seed=7)
    assert meta == DatasetMeta(K=3, h0=4, B=1.0, m=30)
    assert gs == again
    assert all(0 <= g.label < 3 for g in gs)
    with pytest.raises(InvalidParams):
        generate_corpus(CorpusSpec(K=1))


def test_dataset_roundtrip(tmp_path):
    meta, gs = generate_corpus(CorpusSpec(m=12, family="random_regular", n=6, degree=2), seed=1)
    path = tmp_path / "d.jsonl"
    save_dataset(meta, gs, path, provenance={"seed": 1})
    meta2, gs2 = load_dataset(path)
    assert meta2 == meta
    assert gs2 == gs


def test_load_errors(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text("")
    with pytest.raises(ParseError):
        load_dataset(path)

    head = json.dumps({"meta": {"K": 2, "h0": 1, "B": 1.0}})
    path.write_text(head + "\n" + json.dumps({"n": 1, "edges": [], "features": [[0.5]], "label": 0})
                    + "\n{broken\n")
    with pytest.raises(ParseError) as info:
        load_dataset(path)
    assert info.value.line == 3

    path.write_text(head + "\n" + json.dumps({"n": 1, "edges": [], "features": [[0.5]], "label": 4}))
    with pytest.raises(ParseError):
        load_dataset(path)

    over = [[1.1]]
    path.write_text(head + "\n" + json.dumps({"n": 1, "edges": [], "features": [[0.2]], "label": 0})
                    + "\n" + json.dumps({"n": 1, "edges": [], "features": over, "label": 1}))
    with pytest.raises(AssumptionViolation) as info:
        load_dataset(path)
    assert info.value.sample == 1


def test_boundary_sample_at_exactly_b(tmp_path):
    x = np.zeros((2, 2))
    x[0, 0] = 1.0
    g = Graph(2, frozenset({(0, 1)}), x, 0)
    path = tmp_path / "d.jsonl"
    save_dataset(DatasetMeta(K=2, h0=2, B=1.0), [g], path)
    assert load_dataset(path)[1] == [g]
    assert math.isclose(np.linalg.norm(x, 2), 1.0)
