"""Motif (cyclic K-substring) counting, motif count matrices, and exact rank.

Motifs are ordered lexicographically over label sequences; all rank and
class-average computations use exact integer/rational arithmetic, with floats
allowed only as cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .spinchain import SpinConfig, enumerate_basis, orbit, partition_classes

Motif = tuple[int, ...]


def all_motifs(m: int, k: int) -> list[Motif]:
    return list(product(range(m), repeat=k))


def motif_index(motif: Motif, m: int) -> int:
    idx = 0
    for x in motif:
        idx = idx * m + x
    return idx


def conjugate(motif: Motif) -> Motif:
    """Label-swapped partner of an M=2 motif."""
    if any(x > 1 for x in motif):
        raise ValueError("conjugate is only defined for M=2 motifs")
    return tuple(1 - x for x in motif)


def motif_vector(s: SpinConfig, k: int, m: int) -> np.ndarray:
    """Cyclic occurrence counts of every length-k motif in s.

    The vector has m**k entries in lexicographic motif order and sums to N
    (one motif per cyclic window).
    """
    n = len(s)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= K <= N, got K={k}, N={n}")
    counts = np.zeros(m**k, dtype=np.int64)
    ext = s + s[: k - 1]
    for i in range(n):
        counts[motif_index(ext[i : i + k], m)] += 1
    return counts


@dataclass
class MotifCountMatrix:
    """Integer matrix of motif counts: m**k rows (motifs) x basis columns."""

    entries: np.ndarray  # int64, shape (m**k, n_states)
    n: int
    m: int
    k: int

    @property
    def motifs(self) -> list[Motif]:
        return all_motifs(self.m, self.k)


def motif_count_matrix(
    basis: list[SpinConfig], k: int, m: int, max_entries: int = 200_000_000
) -> MotifCountMatrix:
    n = len(basis[0])
    if m**k * len(basis) > max_entries:
        raise MemoryError(f"motif count matrix {m**k} x {len(basis)} exceeds cap")
    cols = [motif_vector(s, k, m) for s in basis]
    return MotifCountMatrix(np.stack(cols, axis=1), n=n, m=m, k=k)


def _bareiss_rank(rows: list[list[int]]) -> int:
    """Exact rank over the rationals via fraction-free Gaussian elimination."""
    mat = [row[:] for row in rows]
    nrows = len(mat)
    ncols = len(mat[0]) if nrows else 0
    rank = 0
    prev = 1
    for col in range(ncols):
        pivot_row = next((r for r in range(rank, nrows) if mat[r][col] != 0), None)
        if pivot_row is None:
            continue
        mat[rank], mat[pivot_row] = mat[pivot_row], mat[rank]
        piv = mat[rank][col]
        for r in range(rank + 1, nrows):
            row_r = mat[r]
            row_p = mat[rank]
            factor = row_r[col]
            for c in range(col, ncols):
                row_r[c] = (row_r[c] * piv - factor * row_p[c]) // prev
        prev = piv
        rank += 1
        if rank == nrows:
            break
    return rank


def integer_rank(matrix: MotifCountMatrix | np.ndarray) -> int:
    entries = matrix.entries if isinstance(matrix, MotifCountMatrix) else matrix
    rows = [[int(x) for x in row] for row in entries]
    if not rows:
        return 0
    return _bareiss_rank(rows)


def float_rank(matrix: MotifCountMatrix | np.ndarray, rtol: float = 1e-8) -> int:
    """Float-SVD numerical rank; cross-check only, never the source of truth."""
    entries = matrix.entries if isinstance(matrix, MotifCountMatrix) else matrix
    svals = np.linalg.svd(np.asarray(entries, dtype=float), compute_uv=False)
    if svals.size == 0 or svals[0] == 0.0:
        return 0
    return int(np.sum(svals > rtol * svals[0]))


def critical_kernel_size(n: int, m: int) -> int:
    """Smallest K whose motif count matrix rank reaches the equivalence-class count."""
    basis = enumerate_basis(n, m)
    n_classes = len(partition_classes(basis, m))
    for k in range(1, n + 1):
        rank = integer_rank(motif_count_matrix(basis, k, m))
        if rank >= n_classes:
            return k
    raise RuntimeError(f"no kernel size up to N={n} reaches rank {n_classes}")


def _alternating_prefix(k: int, m: int) -> Motif:
    return tuple(i % m for i in range(k - 1))


def ambiguous_pair(n: int, k: int, m: int = 2) -> tuple[SpinConfig, SpinConfig]:
    """Two valid states with identical K-motif vectors that are not related by
    any symmetry.

    Built as A-x-A-y-A-z vs A-y-A-x-A-z with A an alternating prefix of length
    K-1; the segments x, y, z are chosen greedily (lexicographic tie-break) to
    restore zero magnetization.  Requires K < N/3.
    """
    if 3 * k >= n:
        raise ValueError(f"construction needs K < N/3, got K={k}, N={n}")
    if n % m != 0:
        raise ValueError(f"N={n} not divisible by M={m}")
    a = _alternating_prefix(k, m)
    rest = n - 3 * (k - 1)
    target = n // m
    for lx in range(1, rest - 1):
        for ly in range(1, rest - lx):
            lz = rest - lx - ly
            for x in product(range(m), repeat=lx):
                for y in product(range(m), repeat=ly):
                    if x == y:
                        continue
                    for z in product(range(m), repeat=lz):
                        s1 = a + x + a + y + a + z
                        if any(s1.count(lbl) != target for lbl in range(m)):
                            continue
                        s2 = a + y + a + x + a + z
                        if not np.array_equal(
                            motif_vector(s1, k, m), motif_vector(s2, k, m)
                        ):
                            continue
                        if s2 in orbit(s1, m):
                            continue
                        return s1, s2
    raise RuntimeError(f"no ambiguous pair found for N={n}, K={k}, M={m}")


def independent_operator_set(k: int, m: int = 2) -> list[Motif]:
    """One motif per conjugate pair (the lexicographically smaller one): all
    2**(K-1) motifs starting with label 0."""
    if m != 2:
        raise ValueError("independent operator selection is defined for M=2")
    return [mo for mo in all_motifs(2, k) if mo[0] == 0]


def class_averaged_counts(cls: tuple[SpinConfig, ...], motif: Motif, m: int) -> Fraction:
    """Exact mean motif count over an equivalence class."""
    if not cls:
        raise ValueError("empty equivalence class")
    k = len(motif)
    total = sum(int(motif_vector(s, k, m)[motif_index(motif, m)]) for s in cls)
    return Fraction(total, len(cls))


def motif_symmetry_classes(k: int, m: int) -> list[tuple[Motif, ...]]:
    """Orbits of motifs under label permutation and reflection about the window
    center (the symmetries of the entanglement Hamiltonian)."""
    from itertools import permutations

    seen: set[Motif] = set()
    classes: list[tuple[Motif, ...]] = []
    for mo in all_motifs(m, k):
        if mo in seen:
            continue
        members = set()
        for perm in permutations(range(m)):
            relabeled = tuple(perm[x] for x in mo)
            members.add(relabeled)
            members.add(relabeled[::-1])
        members_t = tuple(sorted(members))
        classes.append(members_t)
        seen.update(members_t)
    return classes
