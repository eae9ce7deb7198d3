"""Internal-state models and generalized indistinguishabilities.

The output statistics of any linear-optical experiment on a fixed photon
number depend on the internal (unresolved) degrees of freedom only through
the n! expectation values of photon-permutation operators.  This module
builds that expectation table (:class:`GIVector`) from three model classes:

* :class:`PureProduct` -- each photon in a pure internal state, specified by
  the Gram matrix of pairwise amplitude overlaps;
* :class:`PartitionMixture` -- a (possibly quasi-) mixture over set
  partitions of the photons into mutually identical, cross-orthogonal blocks;
* :class:`DirectGI` -- an explicit expectation table.

It also provides permutation twirling, the symmetric-subspace weight, the
exact partition-weight inversion through the lattice Möbius matrix, and the
two stock noise models used throughout (Gaussian time delays, independent
orthogonal-noise photons).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .combinatorics import (
    Permutation,
    SetPartition,
    canonical_partition,
    cycle_type,
    enumerate_partitions,
    enumerate_permutations,
    full_block_partition,
    induced_partition,
    is_coarser,
    mobius_matrix,
    permutation_index,
)

__all__ = [
    "RepresentationError",
    "GIVector",
    "PureProduct",
    "PartitionMixture",
    "DirectGI",
    "InternalModel",
    "validate_gram",
    "gi_from_gram",
    "gi_from_partition",
    "gram_gi_vector",
    "partition_gi_vector",
    "model_gi_vector",
    "model_photon_count",
    "partition_weights_from_gi",
    "twirl",
    "symmetric_weight",
    "time_delay_gram",
    "obb_model",
    "indistinguishable_coefficient",
    "overlaps_from_visibilities",
    "model_to_json",
    "model_from_json",
]

_GRAM_HERMITIAN_TOL = 1e-8
_GRAM_DIAG_TOL = 1e-8
_GRAM_EIG_FLOOR = -1e-10
_ORBIT_TOL = 1e-9
_WEIGHT_SUM_TOL = 1e-12
_NEGATIVE_WEIGHT_TOL = 1e-12


class RepresentationError(ValueError):
    """The state has no representation of the requested form."""


# ---------------------------------------------------------------------------
# GIVector
# ---------------------------------------------------------------------------

class GIVector:
    """Dense table of permutation expectation values over S_n.

    ``values[k]`` is the expectation for the k-th permutation in the
    lexicographic enumeration.  Valid tables satisfy value(identity) = 1,
    value(sigma^-1) = conj(value(sigma)), and |value| <= 1.
    """

    __slots__ = ("n", "values")

    def __init__(self, n: int, values: Sequence[complex], *, validate: bool = True):
        perms = enumerate_permutations(n)
        vals = np.asarray(values, dtype=complex)
        if vals.shape != (len(perms),):
            raise ValueError(f"expected {len(perms)} values for n={n}, got {vals.shape}")
        self.n = n
        self.values = vals
        self.values.setflags(write=False)
        if validate:
            self._validate()

    def _validate(self) -> None:
        perms = enumerate_permutations(self.n)
        index = permutation_index(self.n)
        if abs(self.values[0] - 1.0) > 1e-9:
            raise ValueError("expectation of the identity permutation must be 1")
        if np.abs(self.values).max() > 1 + 1e-8:
            raise ValueError("permutation expectations must have modulus <= 1")
        for k, sigma in enumerate(perms):
            inv = index[tuple(int(x) for x in np.argsort(sigma))]
            if abs(self.values[k] - np.conj(self.values[inv])) > 1e-8:
                raise ValueError("table is not conjugate-symmetric under inversion")

    def value(self, sigma: Permutation) -> complex:
        return complex(self.values[permutation_index(self.n)[tuple(sigma)]])

    def as_dict(self) -> dict[Permutation, complex]:
        return {s: complex(v) for s, v in zip(enumerate_permutations(self.n), self.values)}

    def is_orbit_invariant(self, tol: float = _ORBIT_TOL) -> bool:
        groups: dict[SetPartition, list[complex]] = {}
        for sigma, v in zip(enumerate_permutations(self.n), self.values):
            groups.setdefault(induced_partition(sigma), []).append(v)
        return all(max(abs(v - vs[0]) for v in vs) <= tol for vs in groups.values())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GIVector)
            and self.n == other.n
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"GIVector(n={self.n})"


# ---------------------------------------------------------------------------
# Model classes
# ---------------------------------------------------------------------------

def validate_gram(g: np.ndarray) -> np.ndarray:
    """Check Hermiticity, unit diagonal and positivity; clip tiny negative modes.

    Minimum eigenvalues down to -1e-10 are tolerated (overlap tables measured
    from pairwise visibilities can be slightly inconsistent) and projected
    back onto the PSD cone; anything worse is rejected.
    """
    g = np.asarray(g, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("Gram matrix must be square")
    if np.abs(g - g.conj().T).max() > _GRAM_HERMITIAN_TOL:
        raise ValueError("Gram matrix must be Hermitian")
    if np.abs(np.diagonal(g) - 1.0).max() > _GRAM_DIAG_TOL:
        raise ValueError("Gram matrix must have unit diagonal")
    w, v = np.linalg.eigh(g)
    if w.min() < _GRAM_EIG_FLOOR:
        raise ValueError(f"Gram matrix is not positive semidefinite (min eig {w.min():.3e})")
    if w.min() < -1e-15:
        g = (v * np.clip(w, 0.0, None)) @ v.conj().T
    return g


@dataclass(frozen=True)
class PureProduct:
    """Independent pure internal states with amplitude-overlap Gram matrix."""

    gram: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gram", validate_gram(self.gram))
        self.gram.setflags(write=False)

    @property
    def photons(self) -> int:
        return self.gram.shape[0]


@dataclass(frozen=True)
class PartitionMixture:
    """Affine mixture over set partitions; negative weights allowed but flagged."""

    n: int
    weights: Mapping[SetPartition, float]

    def __post_init__(self):
        normed: dict[SetPartition, float] = {}
        for blocks, w in self.weights.items():
            lam = canonical_partition(blocks)
            if len([i for b in lam for i in b]) != self.n:
                raise ValueError(f"partition {lam} is not over {self.n} elements")
            normed[lam] = normed.get(lam, 0.0) + float(w)
        total = math.fsum(normed.values())
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError(f"partition weights sum to {total!r}, expected 1")
        object.__setattr__(self, "weights", normed)

    @property
    def photons(self) -> int:
        return self.n

    @property
    def is_quasi(self) -> bool:
        """True when any weight is negative (quasi-mixture)."""
        return any(w < -_NEGATIVE_WEIGHT_TOL for w in self.weights.values())

    def weight(self, blocks) -> float:
        return self.weights.get(canonical_partition(blocks), 0.0)


@dataclass(frozen=True)
class DirectGI:
    """Explicit expectation table, for states outside the other two classes."""

    gi: GIVector

    @property
    def photons(self) -> int:
        return self.gi.n


InternalModel = Union[PureProduct, PartitionMixture, DirectGI]


def model_photon_count(model: InternalModel) -> int:
    return model.photons


# ---------------------------------------------------------------------------
# Expectation values
# ---------------------------------------------------------------------------

def gi_from_gram(g: np.ndarray, sigma: Permutation) -> complex:
    """prod_j G[j, sigma(j)]: the permutation expectation of a pure product state.

    Only overlaps between photons adjacent along each cycle of sigma enter
    the product; any pair not linked by sigma is invisible to it.
    """
    g = np.asarray(g, dtype=complex)
    return complex(np.prod(g[np.arange(len(sigma)), list(sigma)]))


def gi_from_partition(mixture: PartitionMixture, sigma: Permutation) -> float:
    """Total weight of partitions coarser than or equal to the orbits of sigma."""
    target = induced_partition(sigma)
    return math.fsum(
        w for lam, w in mixture.weights.items() if is_coarser(lam, target)
    )


def gram_gi_vector(g: np.ndarray) -> GIVector:
    g = validate_gram(g)
    n = g.shape[0]
    vals = [gi_from_gram(g, sigma) for sigma in enumerate_permutations(n)]
    return GIVector(n, vals)


def partition_gi_vector(mixture: PartitionMixture) -> GIVector:
    n = mixture.n
    # One pass over partitions per orbit class rather than per permutation.
    by_partition: dict[SetPartition, float] = {}
    for sigma in enumerate_permutations(n):
        pi = induced_partition(sigma)
        if pi not in by_partition:
            by_partition[pi] = math.fsum(
                w for lam, w in mixture.weights.items() if is_coarser(lam, pi)
            )
    vals = [by_partition[induced_partition(s)] for s in enumerate_permutations(n)]
    return GIVector(n, vals)


def model_gi_vector(model: InternalModel) -> GIVector:
    if isinstance(model, PureProduct):
        return gram_gi_vector(model.gram)
    if isinstance(model, PartitionMixture):
        return partition_gi_vector(model)
    if isinstance(model, DirectGI):
        return model.gi
    raise TypeError(f"not an internal model: {model!r}")


# ---------------------------------------------------------------------------
# Twirling, symmetric weight, partition inversion
# ---------------------------------------------------------------------------

def twirl(gi: GIVector) -> GIVector:
    """Average the table over conjugation by all permutations.

    Conjugation orbits are exactly the cycle-type classes, and the uniform
    conjugation average hits every class element equally often, so the twirl
    is the per-class mean.  The output is cycle-type invariant and twirling
    is idempotent.
    """
    perms = enumerate_permutations(gi.n)
    sums: dict[tuple[int, ...], complex] = {}
    counts: dict[tuple[int, ...], int] = {}
    for sigma, v in zip(perms, gi.values):
        ct = cycle_type(sigma)
        sums[ct] = sums.get(ct, 0.0) + v
        counts[ct] = counts.get(ct, 0) + 1
    means = {ct: sums[ct] / counts[ct] for ct in sums}
    return GIVector(gi.n, [means[cycle_type(s)] for s in perms])


def symmetric_weight(gi: GIVector) -> float:
    """Weight on the completely symmetric subspace: the mean of the table."""
    mean = complex(np.mean(gi.values))
    if abs(mean.imag) > 1e-10:
        raise ValueError(f"symmetric weight has imaginary residue {mean.imag:.3e}")
    return float(mean.real)


def partition_weights_from_gi(gi: GIVector, tol: float = _ORBIT_TOL) -> PartitionMixture:
    """Invert the coarsening system to recover (quasi-)partition weights.

    Requires orbit invariance: permutations with the same orbit partition
    must carry the same expectation (within ``tol``), otherwise the state has
    no partition representation and a :class:`RepresentationError` is raised.
    Negative weights are legal output; the result's ``is_quasi`` flag records
    them.
    """
    n = gi.n
    parts = enumerate_partitions(n)
    groups: dict[SetPartition, list[complex]] = {lam: [] for lam in parts}
    for sigma, v in zip(enumerate_permutations(n), gi.values):
        groups[induced_partition(sigma)].append(v)
    m_vec = np.zeros(len(parts), dtype=float)
    for k, lam in enumerate(parts):
        vs = groups[lam]
        spread = max(abs(v - vs[0]) for v in vs)
        if spread > tol:
            raise RepresentationError(
                f"expectations are not orbit-invariant (spread {spread:.3e} on {lam})"
            )
        mean = complex(np.mean(vs))
        if abs(mean.imag) > tol:
            raise RepresentationError(
                f"orbit expectation on {lam} is not real ({mean.imag:.3e})"
            )
        m_vec[k] = mean.real
    weights_vec = mobius_matrix(n).astype(float) @ m_vec
    weights = {lam: float(w) for lam, w in zip(parts, weights_vec)}
    return PartitionMixture(n, weights)


# ---------------------------------------------------------------------------
# Stock models
# ---------------------------------------------------------------------------

def time_delay_gram(delays: Sequence[float]) -> np.ndarray:
    """Gram matrix of unit-width Gaussian wavepackets at the given delays.

    Amplitude overlap ``G[i, j] = exp(-(t_i - t_j)^2 / 4)``; the pairwise
    (transposition) expectation values are then ``exp(-(t_i - t_j)^2 / 2)``.
    """
    t = np.asarray(delays, dtype=float)
    g = np.exp(-np.subtract.outer(t, t) ** 2 / 4.0)
    return validate_gram(g)


def obb_model(n: int, eps: float) -> PartitionMixture:
    """Independent orthogonal-noise model ("orthogonal bad bit").

    Each photon is ideal with probability 1-eps or lands in an internal state
    orthogonal to every other photon with probability eps.  A bad subset S
    contributes weight eps^|S| (1-eps)^(n-|S|) to the partition made of the
    block of good photons plus singletons for S; the fully indistinguishable
    coefficient is (1-eps)^n.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    import itertools

    weights: dict[SetPartition, float] = {}
    for r in range(n + 1):
        for bad in itertools.combinations(range(n), r):
            w = (eps ** r) * ((1.0 - eps) ** (n - r))
            good = tuple(i for i in range(n) if i not in bad)
            blocks = [good] if good else []
            blocks.extend((i,) for i in bad)
            lam = canonical_partition(blocks)
            weights[lam] = weights.get(lam, 0.0) + w
    return PartitionMixture(n, weights)


def indistinguishable_coefficient(mixture: PartitionMixture) -> float:
    """Weight of the single full block: the genuinely n-photon-interfering part."""
    return mixture.weights.get(full_block_partition(mixture.n), 0.0)


def overlaps_from_visibilities(visibilities: np.ndarray) -> np.ndarray:
    """Convert pairwise interference visibilities to real overlaps x = sqrt(V)."""
    v = np.asarray(visibilities, dtype=float)
    if (v < 0).any() or (v > 1 + 1e-12).any():
        raise ValueError("visibilities must lie in [0, 1]")
    return np.sqrt(v)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def model_to_json(model: InternalModel) -> str:
    if isinstance(model, PureProduct):
        payload = {
            "kind": "pure_product",
            "gram": [[[float(z.real), float(z.imag)] for z in row] for row in model.gram],
        }
    elif isinstance(model, PartitionMixture):
        payload = {
            "kind": "partition_mixture",
            "n": model.n,
            "terms": [
                {"blocks": [list(b) for b in lam], "weight": w}
                for lam, w in sorted(model.weights.items())
            ],
        }
    elif isinstance(model, DirectGI):
        payload = {
            "kind": "direct_gi",
            "n": model.gi.n,
            "values": [[float(v.real), float(v.imag)] for v in model.gi.values],
        }
    else:
        raise TypeError(f"not an internal model: {model!r}")
    return json.dumps(payload)


def model_from_json(text: str) -> InternalModel:
    payload = json.loads(text)
    kind = payload.get("kind")
    if kind == "pure_product":
        g = np.array(
            [[complex(re, im) for re, im in row] for row in payload["gram"]], dtype=complex
        )
        return PureProduct(g)
    if kind == "partition_mixture":
        weights = {
            canonical_partition(term["blocks"]): float(term["weight"])
            for term in payload["terms"]
        }
        return PartitionMixture(payload["n"], weights)
    if kind == "direct_gi":
        vals = [complex(re, im) for re, im in payload["values"]]
        return DirectGI(GIVector(payload["n"], vals))
    raise ValueError(f"unknown internal model kind {kind!r}")
