"""Zero-magnetization spin-chain basis, symmetry group, and equivalence classes.

States are tuples of species labels in ``{0..M-1}`` with each label appearing
exactly ``N/M`` times.  The symmetry group is generated by cyclic translations,
reflections about any pivot, and permutations of the species labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from math import factorial
from typing import Iterator

SpinConfig = tuple[int, ...]

#: Refuse to enumerate bases larger than this; bigger systems go through sampling.
DEFAULT_BASIS_CAP = 20_000_000


class BasisTooLargeError(ValueError):
    pass


def basis_size(n: int, m: int) -> int:
    """Multinomial count of balanced length-n strings over m labels."""
    _validate_sizes(n, m)
    size = factorial(n)
    for _ in range(m):
        size //= factorial(n // m)
    return size


def _validate_sizes(n: int, m: int) -> None:
    if m < 2:
        raise ValueError(f"need at least 2 species, got M={m}")
    if n < m:
        raise ValueError(f"need N >= M, got N={n}, M={m}")
    if n % m != 0:
        raise ValueError(f"N={n} not divisible by M={m}")


def _gen_balanced(counts: list[int], prefix: list[int], out: list[SpinConfig]) -> None:
    if not any(counts):
        out.append(tuple(prefix))
        return
    for label, c in enumerate(counts):
        if c > 0:
            counts[label] -= 1
            prefix.append(label)
            _gen_balanced(counts, prefix, out)
            prefix.pop()
            counts[label] += 1


def enumerate_basis(n: int, m: int, cap: int = DEFAULT_BASIS_CAP) -> list[SpinConfig]:
    """All zero-magnetization states of n sites and m species, lexicographic.

    Raises :class:`BasisTooLargeError` when the basis would exceed ``cap``.
    """
    size = basis_size(n, m)
    if size > cap:
        raise BasisTooLargeError(f"basis for N={n}, M={m} has {size} states > cap {cap}")
    out: list[SpinConfig] = []
    _gen_balanced([n // m] * m, [], out)
    return out


# ---------------------------------------------------------------------------
# Symmetry operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Translate:
    shift: int


@dataclass(frozen=True)
class Reflect:
    """Maps site i to (2*pivot - i) mod N."""

    pivot: int


@dataclass(frozen=True)
class Relabel:
    perm: tuple[int, ...]


SymmetryOp = Translate | Reflect | Relabel


def apply_symmetry(op: SymmetryOp, s: SpinConfig) -> SpinConfig:
    n = len(s)
    if isinstance(op, Translate):
        k = op.shift % n
        return s[k:] + s[:k]
    if isinstance(op, Reflect):
        return tuple(s[(2 * op.pivot - i) % n] for i in range(n))
    if isinstance(op, Relabel):
        return tuple(op.perm[x] for x in s)
    raise TypeError(f"unknown symmetry op {op!r}")


def inverse(op: SymmetryOp) -> SymmetryOp:
    if isinstance(op, Translate):
        return Translate(-op.shift)
    if isinstance(op, Reflect):
        return op
    if isinstance(op, Relabel):
        inv = [0] * len(op.perm)
        for i, j in enumerate(op.perm):
            inv[j] = i
        return Relabel(tuple(inv))
    raise TypeError(f"unknown symmetry op {op!r}")


def group_generators(m: int) -> list[SymmetryOp]:
    """Generators of the full symmetry group: one translation, one reflection,
    and adjacent label transpositions (which generate all relabelings)."""
    gens: list[SymmetryOp] = [Translate(1), Reflect(0)]
    for i in range(m - 1):
        perm = list(range(m))
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        gens.append(Relabel(tuple(perm)))
    return gens


def orbit(s: SpinConfig, m: int) -> set[SpinConfig]:
    """Closure of s under the generated symmetry group (BFS over generators)."""
    gens = group_generators(m)
    seen = {s}
    frontier = [s]
    while frontier:
        nxt = []
        for t in frontier:
            for g in gens:
                u = apply_symmetry(g, t)
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return seen


@dataclass
class EquivalenceClassPartition:
    """Orbit partition of the basis; classes ordered by their lex-min representative."""

    classes: list[tuple[SpinConfig, ...]]
    class_of: dict[SpinConfig, int]

    @property
    def representatives(self) -> list[SpinConfig]:
        return [cls[0] for cls in self.classes]

    def __len__(self) -> int:
        return len(self.classes)


def partition_classes(basis: list[SpinConfig], m: int) -> EquivalenceClassPartition:
    """Partition the basis into orbits under translations, reflections and
    relabelings.  Representatives are the lexicographically smallest members.
    """
    classes: list[tuple[SpinConfig, ...]] = []
    class_of: dict[SpinConfig, int] = {}
    for s in basis:  # basis is lex sorted, so reps come out lex-minimal
        if s in class_of:
            continue
        members = tuple(sorted(orbit(s, m)))
        idx = len(classes)
        classes.append(members)
        for t in members:
            class_of[t] = idx
    return EquivalenceClassPartition(classes, class_of)


def class_count_lower_bound(n: int, m: int) -> Fraction:
    """#states / #symmetries: N! / (2N * M! * ((N/M)!)^M), as an exact rational."""
    _validate_sizes(n, m)
    return Fraction(factorial(n), 2 * n * factorial(m) * factorial(n // m) ** m)


def marshall_sign(s: SpinConfig) -> int:
    """Sign gauge (-1)^(# down spins on even sites) for the M=2 chain.

    The gauged Hamiltonian has non-positive off-diagonal entries, so the
    nondegenerate ground state can be taken strictly positive.
    """
    if any(x > 1 for x in s):
        raise ValueError("Marshall gauge is only defined for M=2")
    downs_on_even = sum(s[i] for i in range(0, len(s), 2))
    return -1 if downs_on_even % 2 else 1


def all_relabelings(m: int) -> list[Relabel]:
    return [Relabel(p) for p in permutations(range(m))]


def translations(n: int) -> Iterator[Translate]:
    return (Translate(k) for k in range(n))
