"""Certificate and comparator values for one trained GCN on regular graphs of growing degree."""

import argparse

from pacgnn.bounds import BoundInputs, baseline_comparators, gcn_certificate
from pacgnn.gnn import ArchSpec, train
from pacgnn.graph import CorpusSpec, generate_corpus, max_degree


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--degrees", type=int, nargs="+", default=[3, 5, 10, 20])
    ap.add_argument("--n", type=int, default=24)
    ap.add_argument("--m", type=int, default=200)
    ap.add_argument("--depth", type=int, default=4)
    ap.add_argument("--gamma", type=float, default=0.1)
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    _, train_graphs = generate_corpus(CorpusSpec(m=args.m, n=8, h0=4, K=2), args.seed)
    p = train(train_graphs, ArchSpec(hidden=(8,) * (args.depth - 1)), 100, 0.5, seed=args.seed,
              h0=4, K=2).params
    print("degree,certificate,regime,degree_free_gcn,degree_power_gcn")
    for d in args.degrees:
        spec = CorpusSpec(family="random_regular", m=50, n=args.n, degree=d, h0=4, K=2)
        meta, graphs = generate_corpus(spec, [args.seed, d])
        inp = BoundInputs.from_gcn(p, meta.B, args.gamma, 0.1, args.m, args.epsilon)
        cert = gcn_certificate(inp)
        comp = baseline_comparators(inp, max(max_degree(g) for g in graphs))
        print(f"{d},{cert.bound_value!r},{cert.regime},{comp['degree_free_gcn']!r},"
              f"{comp['degree_power_gcn']!r}")


if __name__ == "__main__":
    main()
