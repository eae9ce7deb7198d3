"""Permutations, set partitions, the coarsening lattice, and Fock patterns.

Everything in this module is exact integer/rational combinatorics at desk
scale (photon numbers up to 8).  All functions are pure and return immutable
values (tuples, read-only arrays), so results may be shared freely across
threads.

Conventions
-----------
* Permutations are tuples ``sigma`` of length n with ``sigma[i]`` the image
  of ``i``; indices are 0-based.
* A set partition is a tuple of blocks, each block a sorted tuple of
  indices; blocks are ordered by their smallest element and the list of all
  partitions of ``{0..n-1}`` is sorted lexicographically by that block
  signature.
* Mode occupations are length-m tuples of counts; mode assignments are the
  matching nondecreasing tuples of per-photon mode indices.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "MAX_PHOTONS",
    "MAX_MODES",
    "CapacityError",
    "Permutation",
    "SetPartition",
    "CycleType",
    "ModeOccupation",
    "ModeAssignment",
    "identity",
    "compose",
    "inverse",
    "conjugate",
    "enumerate_permutations",
    "permutation_index",
    "induced_partition",
    "cycle_type",
    "canonical_partition",
    "enumerate_partitions",
    "partition_index",
    "is_coarser",
    "coarsening_matrix",
    "mobius_matrix",
    "enumerate_patterns",
    "multiplicity_factor",
    "occupation_to_assignment",
    "assignment_to_occupation",
    "full_block_partition",
    "singleton_partition",
]

MAX_PHOTONS = 8
MAX_MODES = 16

Permutation = tuple[int, ...]
SetPartition = tuple[tuple[int, ...], ...]
CycleType = tuple[int, ...]
ModeOccupation = tuple[int, ...]
ModeAssignment = tuple[int, ...]


class CapacityError(ValueError):
    """A request exceeds the desk-scale size caps (n! / Bell-number growth)."""


def _check_photon_count(n: int) -> None:
    if not 1 <= n <= MAX_PHOTONS:
        raise CapacityError(f"photon number {n} outside supported range 1..{MAX_PHOTONS}")


# ---------------------------------------------------------------------------
# Permutations
# ---------------------------------------------------------------------------

def identity(n: int) -> Permutation:
    return tuple(range(n))


def compose(p: Permutation, q: Permutation) -> Permutation:
    """Composition ``p after q``: ``compose(p, q)[i] == p[q[i]]``."""
    if len(p) != len(q):
        raise ValueError("permutations act on different sets")
    return tuple(p[q[i]] for i in range(len(p)))


def inverse(p: Permutation) -> Permutation:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


def conjugate(sigma: Permutation, tau: Permutation) -> Permutation:
    """Return ``tau^-1 . sigma . tau`` (basis relabeling of ``sigma`` by ``tau``)."""
    return compose(inverse(tau), compose(sigma, tau))


@lru_cache(maxsize=None)
def enumerate_permutations(n: int) -> tuple[Permutation, ...]:
    """All n! permutations of ``{0..n-1}`` in lexicographic order of the mapping."""
    _check_photon_count(n)
    return tuple(itertools.permutations(range(n)))


@lru_cache(maxsize=None)
def permutation_index(n: int) -> dict[Permutation, int]:
    """Rank of each permutation in :func:`enumerate_permutations` order."""
    return {sigma: k for k, sigma in enumerate(enumerate_permutations(n))}


# ---------------------------------------------------------------------------
# Partitions and cycle types
# ---------------------------------------------------------------------------

def induced_partition(sigma: Permutation) -> SetPartition:
    """The orbit partition of ``sigma`` (its cycles, as unordered blocks)."""
    n = len(sigma)
    seen = [False] * n
    blocks = []
    for start in range(n):
        if seen[start]:
            continue
        orbit = []
        i = start
        while not seen[i]:
            seen[i] = True
            orbit.append(i)
            i = sigma[i]
        blocks.append(tuple(sorted(orbit)))
    return canonical_partition(blocks)


def cycle_type(sigma: Permutation) -> CycleType:
    """Multiset of orbit sizes, canonically sorted nonincreasing."""
    return tuple(sorted((len(b) for b in induced_partition(sigma)), reverse=True))


def canonical_partition(blocks: Iterable[Iterable[int]]) -> SetPartition:
    """Canonical form: sorted blocks, ordered by smallest element."""
    normed = sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0])
    flat = sorted(i for b in normed for i in b)
    if flat != list(range(len(flat))):
        raise ValueError(f"blocks {normed} do not partition a contiguous 0-based ground set")
    return tuple(normed)


@lru_cache(maxsize=None)
def enumerate_partitions(n: int) -> tuple[SetPartition, ...]:
    """All set partitions of ``{0..n-1}``, lexicographically sorted canonical forms."""
    _check_photon_count(n)

    def grow(k: int, blocks: list[list[int]]):
        if k == n:
            yield canonical_partition(blocks)
            return
        for b in blocks:
            b.append(k)
            yield from grow(k + 1, blocks)
            b.pop()
        blocks.append([k])
        yield from grow(k + 1, blocks)
        blocks.pop()

    return tuple(sorted(grow(0, [])))


@lru_cache(maxsize=None)
def partition_index(n: int) -> dict[SetPartition, int]:
    return {lam: k for k, lam in enumerate(enumerate_partitions(n))}


def full_block_partition(n: int) -> SetPartition:
    return (tuple(range(n)),)


def singleton_partition(n: int) -> SetPartition:
    return tuple((i,) for i in range(n))


def is_coarser(lam: SetPartition, pi: SetPartition) -> bool:
    """True iff every block of ``pi`` is contained in some block of ``lam``."""
    ground_lam = sorted(i for b in lam for i in b)
    ground_pi = sorted(i for b in pi for i in b)
    if ground_lam != ground_pi:
        raise ValueError("partitions are over different ground sets")
    owner = {}
    for k, block in enumerate(lam):
        for i in block:
            owner[i] = k
    return all(len({owner[i] for i in block}) == 1 for block in pi)


@lru_cache(maxsize=None)
def coarsening_matrix(n: int) -> np.ndarray:
    """0/1 matrix R over the canonical partition order.

    ``R[i][j] == 1`` iff partition ``j`` is coarser than or equal to partition
    ``i``.  Row ``i`` therefore selects exactly the partitions whose mixture
    weights contribute to the permutation expectation value with orbit
    partition ``i``, and the matrix is invertible over the rationals.
    """
    parts = enumerate_partitions(n)
    r = np.array(
        [[1 if is_coarser(lam, pi) else 0 for lam in parts] for pi in parts],
        dtype=np.int64,
    )
    r.setflags(write=False)
    return r


@lru_cache(maxsize=None)
def mobius_matrix(n: int) -> np.ndarray:
    """Exact integer inverse of :func:`coarsening_matrix` (Gauss-Jordan over Q)."""
    r = coarsening_matrix(n)
    size = r.shape[0]
    a = [[Fraction(int(r[i][j])) for j in range(size)] for i in range(size)]
    inv = [[Fraction(1) if i == j else Fraction(0) for j in range(size)] for i in range(size)]
    for col in range(size):
        pivot = next(row for row in range(col, size) if a[row][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        inv[col], inv[pivot] = inv[pivot], inv[col]
        scale = a[col][col]
        a[col] = [x / scale for x in a[col]]
        inv[col] = [x / scale for x in inv[col]]
        for row in range(size):
            if row != col and a[row][col] != 0:
                factor = a[row][col]
                a[row] = [x - factor * y for x, y in zip(a[row], a[col])]
                inv[row] = [x - factor * y for x, y in zip(inv[row], inv[col])]
    for row in inv:
        for x in row:
            if x.denominator != 1:
                raise ArithmeticError("partition lattice inverse is not integral")
    m = np.array([[int(x) for x in row] for row in inv], dtype=np.int64)
    m.setflags(write=False)
    return m


# ---------------------------------------------------------------------------
# Fock patterns
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def enumerate_patterns(n: int, m: int) -> tuple[ModeOccupation, ...]:
    """All C(n+m-1, m-1) occupations of n photons over m modes.

    Deterministic order: lexicographic in the mode-assignment representation
    (so ``(1,0)`` precedes ``(0,1)``), matching the sampling CDF order.
    """
    _check_photon_count(n)
    if not 1 <= m <= MAX_MODES:
        raise CapacityError(f"mode count {m} outside supported range 1..{MAX_MODES}")
    out = []
    for assignment in itertools.combinations_with_replacement(range(m), n):
        out.append(assignment_to_occupation(assignment, m))
    return tuple(out)


def multiplicity_factor(occupation: Sequence[int]) -> int:
    """mu(n) = prod_i n_i! for a mode occupation."""
    result = 1
    for c in occupation:
        if c < 0:
            raise ValueError("negative occupation count")
        result *= math.factorial(c)
    return result


def occupation_to_assignment(occupation: Sequence[int]) -> ModeAssignment:
    out = []
    for mode, count in enumerate(occupation):
        if count < 0:
            raise ValueError("negative occupation count")
        out.extend([mode] * count)
    return tuple(out)


def assignment_to_occupation(assignment: Sequence[int], m: int) -> ModeOccupation:
    occ = [0] * m
    for mode in assignment:
        if not 0 <= mode < m:
            raise ValueError(f"mode index {mode} out of range for {m} modes")
        occ[mode] += 1
    return tuple(occ)
