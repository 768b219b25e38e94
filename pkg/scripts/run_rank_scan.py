#!/usr/bin/env python3
"""Scan motif-matrix ranks and critical kernel sizes over chain lengths.

Reproduces the rank-law table: exact integer rank per (N, K), the class count,
the rational lower bound, and K* for each N.
"""

import argparse
from fractions import Fraction

from spinmotif.motif import integer_rank, motif_count_matrix
from spinmotif.spinchain import (
    class_count_lower_bound,
    enumerate_basis,
    partition_classes,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[6, 8, 10, 12])
    ap.add_argument("--species", type=int, default=2)
    args = ap.parse_args()

    for n in args.sizes:
        basis = enumerate_basis(n, args.species)
        part = partition_classes(basis, args.species)
        bound = class_count_lower_bound(n, args.species)
        print(f"N={n}: {len(basis)} states, {len(part)} classes "
              f"(bound {bound} ~ {float(bound):.2f})")
        k_star = None
        for k in range(1, n // 2 + 1):
            rank = integer_rank(motif_count_matrix(basis, k, args.species))
            marker = ""
            if k_star is None and rank >= len(part):
                k_star = k
                marker = "  <- K*"
            print(f"  K={k}: rank {rank}{marker}")


if __name__ == "__main__":
    main()
