"""GCN and MPGNN certificates over a grid of budgets and sample sizes for fixed layer norms."""

import argparse

from pacgnn.bounds import BoundInputs, gcn_certificate, mpgnn_certificate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--spec", type=float, nargs="+", default=[1.0, 1.1, 1.2])
    ap.add_argument("--frob-ratio", type=float, default=2.0)
    ap.add_argument("--width", type=int, default=8)
    ap.add_argument("--gamma", type=float, default=2.0)
    ap.add_argument("--epsilons", type=float, nargs="+", default=[0.0, 0.1, 0.3, 1.0])
    ap.add_argument("--ms", type=int, nargs="+", default=[10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6])
    args = ap.parse_args()

    w_frob = tuple(args.frob_ratio * s for s in args.spec)
    print("model,m,epsilon,regime,certificate")
    for m in args.ms:
        for eps in args.epsilons:
            base = dict(B=1.0, gamma=args.gamma, delta=0.1, m=m, epsilon=eps,
                        w_spec=tuple(args.spec), w_frob=w_frob, width=args.width)
            c = gcn_certificate(BoundInputs(**base))
            print(f"gcn,{m},{eps},{c.regime},{c.bound_value!r}")
            u = args.spec[:-1]
            c = mpgnn_certificate(BoundInputs(u_spec=tuple(u), u_frob=tuple(args.frob_ratio * s for s in u),
                                              M1=1.0, M2=1.5, max_diffusion_norm=1.0, **base))
            print(f"mpgnn,{m},{eps},{c.regime},{c.bound_value!r}")


if __name__ == "__main__":
    main()
