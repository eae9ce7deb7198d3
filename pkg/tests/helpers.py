"""Shared test utilities: independent oracles and random-state factories."""

from __future__ import annotations

import itertools

import numpy as np

from loqc_certify.combinatorics import enumerate_partitions
from loqc_certify.distinguishability import (
    DirectGI,
    GIVector,
    PartitionMixture,
    PureProduct,
    gram_gi_vector,
    partition_gi_vector,
)


def naive_permanent(a: np.ndarray) -> complex:
    """Literal n!-term definition; the reference for the Ryser implementation."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    for sigma in itertools.permutations(range(n)):
        prod = 1.0 + 0.0j
        for i, j in enumerate(sigma):
            prod *= a[i, j]
        total += prod
    return total


def random_psd_gram(n: int, rng: np.random.Generator, *, complex_entries: bool = True,
                    rank: int | None = None) -> np.ndarray:
    """Unit-diagonal PSD Gram matrix from random unit vectors."""
    r = rank or n
    v = rng.normal(size=(n, r))
    if complex_entries:
        v = v + 1j * rng.normal(size=(n, r))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    g = v @ v.conj().T
    np.fill_diagonal(g, 1.0)
    return g


def random_positive_mixture(n: int, rng: np.random.Generator) -> PartitionMixture:
    parts = enumerate_partitions(n)
    w = rng.random(len(parts))
    w /= w.sum()
    return PartitionMixture(n, dict(zip(parts, w)))


def random_gi_vector(n: int, rng: np.random.Generator) -> GIVector:
    """A valid expectation table: convex mix of a product state and a mixture."""
    t = rng.random()
    gi_a = gram_gi_vector(random_psd_gram(n, rng))
    gi_b = partition_gi_vector(random_positive_mixture(n, rng))
    return GIVector(n, t * gi_a.values + (1 - t) * gi_b.values)


def random_model(n: int, rng: np.random.Generator):
    """One of the three model kinds, at random."""
    kind = rng.integers(0, 3)
    if kind == 0:
        return PureProduct(random_psd_gram(n, rng))
    if kind == 1:
        return random_positive_mixture(n, rng)
    return DirectGI(random_gi_vector(n, rng))
