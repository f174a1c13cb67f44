"""Per-layer forward time as the relation grows at fixed N and D."""

from __future__ import annotations

import argparse

from ssx.bench import bench


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--N", type=int, default=2048)
    p.add_argument("--widths", type=int, nargs="+", default=[8])
    p.add_argument("--min-log2", type=int, default=18)
    p.add_argument("--max-log2", type=int, default=21)
    p.add_argument("--reps", type=int, default=7)
    args = p.parse_args()

    edges = [2**e for e in range(args.min_log2, args.max_log2 + 1)]
    rep = bench(edges, N=args.N, widths=args.widths, reps=args.reps)
    print(f"{'D':>4} {'E':>9} {'median s':>10} {'iqr s':>10}")
    for r in rep.runs:
        print(f"{r.D:>4} {r.E:>9} {r.seconds:>10.5f} {r.iqr:>10.5f}")
    print("doubling ratios:", " ".join(f"{x:.2f}" for x in rep.ratios()))
    print(f"log-log slope in E: {rep.edge_exponent:.3f}; fit residual {rep.residual:.3f}")


if __name__ == "__main__":
    main()
