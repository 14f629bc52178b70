"""Run the property checks and write a JSON report."""

import argparse
import sys

from pacgnn import verify


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--checks", nargs="*", default=None, choices=sorted(verify.CHECKS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="verify.json")
    args = ap.parse_args()
    reports = verify.run_all(args.seed, args.threads, args.checks, log=print)
    with open(args.out, "w") as fh:
        fh.write(verify.reports_to_json(reports))
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
