"""Output statistics for partially distinguishable photons.

The production path expands each output probability as a permutation sum

    P(s) = 1/(mu_in mu_s) * sum_sigma <J_sigma> perm(M * conj(M_sigma))

with M the transition submatrix for the (input, output) assignment pair and
M_sigma its row permutation.  The sum runs densely over all n! permutations
with the expectation table precomputed once per experiment; at desk scale
(n <= 6) this is milliseconds and trivially auditable.

``oracle_*`` implements the same physics with none of that machinery: it
orthonormalizes the internal states, expands the full multi-photon amplitude
over (output mode, internal state) Fock configurations, and sums squared
magnitudes over the unresolved internal outcomes.  It exists solely to
cross-check the permanent expansion and shares no code path with it.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .combinatorics import (
    CapacityError,
    ModeOccupation,
    enumerate_patterns,
    enumerate_permutations,
    inverse,
    multiplicity_factor,
    occupation_to_assignment,
)
from .distinguishability import (
    GIVector,
    InternalModel,
    PartitionMixture,
    PureProduct,
    model_gi_vector,
    model_photon_count,
)
from .unitaries import check_unitary, permuted_product_permanent, submatrix

__all__ = [
    "DENSE_MAX_PHOTONS",
    "DENSE_MAX_MODES",
    "ExperimentSpec",
    "OutputDistribution",
    "output_probability",
    "probability_with_assignment",
    "output_distribution",
    "oracle_probability",
    "oracle_distribution",
    "sample_counts",
    "distribution_to_csv",
]

DENSE_MAX_PHOTONS = 6
DENSE_MAX_MODES = 12
_CLIP_WINDOW = 1e-10
_NEGATIVE_FAILURE = 1e-6
_IMAG_TOL = 1e-10
_NORMALIZATION_TOL = 1e-8


@dataclass(frozen=True)
class ExperimentSpec:
    """A fixed interferometer, input occupation, and internal-state model."""

    unitary: np.ndarray
    input_occupation: ModeOccupation
    internal: InternalModel

    def __post_init__(self):
        u = check_unitary(self.unitary)
        object.__setattr__(self, "unitary", u)
        self.unitary.setflags(write=False)
        occ = tuple(int(c) for c in self.input_occupation)
        if len(occ) != u.shape[0]:
            raise ValueError("input occupation length must equal the unitary dimension")
        if any(c < 0 for c in occ):
            raise ValueError("occupation counts must be nonnegative")
        object.__setattr__(self, "input_occupation", occ)
        if model_photon_count(self.internal) != sum(occ):
            raise ValueError("internal model photon count does not match the input")

    @property
    def photons(self) -> int:
        return sum(self.input_occupation)

    @property
    def modes(self) -> int:
        return self.unitary.shape[0]


@dataclass(frozen=True)
class OutputDistribution:
    """Normalized pattern probabilities plus the raw normalization residue."""

    probabilities: Mapping[ModeOccupation, float]
    normalization_residue: float

    def __getitem__(self, s: ModeOccupation) -> float:
        return self.probabilities[tuple(s)]

    def items(self):
        return self.probabilities.items()


def _clip_probability(value: complex, context: str) -> float:
    # A 1e-10 window absorbs float noise; anything past 1e-6 is a formula
    # bug, not rounding, and must not be silenced.
    if abs(value.imag) > _IMAG_TOL:
        raise ArithmeticError(f"{context}: imaginary residue {value.imag:.3e}")
    p = value.real
    if p < -_NEGATIVE_FAILURE or p > 1.0 + _NEGATIVE_FAILURE:
        raise ArithmeticError(f"{context}: probability {p!r} far outside [0, 1]")
    if p < -_CLIP_WINDOW or p > 1.0 + _CLIP_WINDOW:
        raise ArithmeticError(f"{context}: probability {p!r} beyond the noise window")
    return min(max(p, 0.0), 1.0)


def probability_with_assignment(
    unitary: np.ndarray,
    d_in: Sequence[int],
    s: ModeOccupation,
    gi: GIVector,
) -> float:
    """Permutation-sum probability for an explicit input assignment order.

    The photon labels of ``gi`` follow the order of ``d_in``; relabeling the
    photons while conjugating the internal model accordingly leaves the
    result unchanged.
    """
    n = len(d_in)
    mu_in = 1
    for _, group in itertools.groupby(sorted(d_in)):
        mu_in *= math.factorial(len(list(group)))
    d_out = occupation_to_assignment(s)
    if len(d_out) != n:
        raise ValueError("output pattern has the wrong photon number")
    mat = submatrix(unitary, d_in, d_out)
    total = 0.0 + 0.0j
    # <J_sigma> couples to the kernel of the inverse permutation: the bra-ket
    # overlap of two photon-to-slot assignments tau, tau' carries the Gram
    # product of sigma = tau^-1 tau', while the amplitude pair contributes
    # perm(M * conj(M_rows[sigma^-1])).  Verified against the amplitude
    # oracle; flipping the orientation is only visible for complex overlaps.
    for sigma, g in zip(enumerate_permutations(n), gi.values):
        if g == 0:
            continue
        total += g * permuted_product_permanent(mat, inverse(sigma))
    value = total / (mu_in * multiplicity_factor(s))
    return _clip_probability(value, f"P({s})")


def output_probability(spec: ExperimentSpec, s: ModeOccupation, *, _gi: GIVector | None = None) -> float:
    """Probability of the output occupation ``s``, clipped to [0, 1]."""
    s = tuple(int(c) for c in s)
    if sum(s) != spec.photons:
        raise ValueError("output pattern photon number does not match the input")
    if len(s) != spec.modes:
        raise ValueError("output pattern length does not match the mode count")
    gi = _gi if _gi is not None else model_gi_vector(spec.internal)
    d_in = occupation_to_assignment(spec.input_occupation)
    return probability_with_assignment(spec.unitary, d_in, s, gi)


def output_distribution(spec: ExperimentSpec) -> OutputDistribution:
    """Dense distribution over all output patterns, renormalized.

    The pre-normalization deficit is reported as ``normalization_residue``
    and must stay below 1e-8 for a consistent spec.
    """
    n, m = spec.photons, spec.modes
    if n > DENSE_MAX_PHOTONS or m > DENSE_MAX_MODES:
        raise CapacityError(
            f"dense distribution capped at n<={DENSE_MAX_PHOTONS}, m<={DENSE_MAX_MODES}"
        )
    gi = model_gi_vector(spec.internal)
    probs = {}
    for s in enumerate_patterns(n, m):
        probs[s] = output_probability(spec, s, _gi=gi)
    total = math.fsum(probs.values())
    residue = total - 1.0
    if abs(residue) > _NORMALIZATION_TOL:
        raise ArithmeticError(f"distribution sums to {total!r} (residue {residue:.3e})")
    probs = {s: p / total for s, p in probs.items()}
    return OutputDistribution(probs, residue)


# ---------------------------------------------------------------------------
# Independent amplitude oracle
# ---------------------------------------------------------------------------

_ORACLE_MAX_PHOTONS = 4


def _internal_vectors(gram: np.ndarray) -> np.ndarray:
    """Rows are internal single-photon states reproducing the Gram overlaps."""
    w, v = np.linalg.eigh(gram)
    w = np.clip(w, 0.0, None)
    keep = w > 1e-14
    ell = v[:, keep] * np.sqrt(w[keep])
    return np.conj(ell)


def _oracle_pure_product(
    unitary: np.ndarray, input_occ: ModeOccupation, gram: np.ndarray
) -> dict[ModeOccupation, float]:
    """Full output distribution via explicit Fock amplitudes, permanent-free."""
    d_in = occupation_to_assignment(input_occ)
    n = len(d_in)
    m = unitary.shape[0]
    vecs = _internal_vectors(gram)
    r = vecs.shape[1]
    base = m * r

    # Amplitude products over all ordered external mode lists, shape (m^n,).
    k_grid = np.array(list(itertools.product(range(m), repeat=n)), dtype=np.int64)
    k_amp = np.ones(len(k_grid), dtype=complex)
    for pos in range(n):
        k_amp *= unitary[d_in[pos], k_grid[:, pos]]

    # Accumulate ordered-list amplitudes per composite (mode, internal) multiset.
    acc = np.zeros(base**n, dtype=complex)
    for a in itertools.product(range(r), repeat=n):
        v_amp = 1.0 + 0.0j
        for pos, ai in enumerate(a):
            v_amp *= vecs[pos, ai]
        if v_amp == 0:
            continue
        codes = k_grid * r + np.asarray(a, dtype=np.int64)
        codes = np.sort(codes, axis=1)
        flat = np.zeros(len(codes), dtype=np.int64)
        for pos in range(n):
            flat = flat * base + codes[:, pos]
        np.add.at(acc, flat, k_amp * v_amp)

    mu_in = multiplicity_factor(input_occ)
    out: dict[ModeOccupation, float] = {}
    for flat in np.flatnonzero(np.abs(acc) > 0):
        amp = acc[flat]
        digits = []
        rest = int(flat)
        for _ in range(n):
            digits.append(rest % base)
            rest //= base
        digits.reverse()
        mult = 1
        run = 1
        for prev, cur in zip(digits, digits[1:]):
            run = run + 1 if cur == prev else 1
            mult *= run if cur == prev else 1
        occ = [0] * m
        for c in digits:
            occ[c // r] += 1
        key = tuple(occ)
        out[key] = out.get(key, 0.0) + (abs(amp) ** 2) * mult / mu_in
    return out


def oracle_distribution(spec: ExperimentSpec) -> dict[ModeOccupation, float]:
    """Brute-force distribution for pure-product or partition-mixture models."""
    if spec.photons > _ORACLE_MAX_PHOTONS:
        raise CapacityError(f"oracle capped at n<={_ORACLE_MAX_PHOTONS}")
    model = spec.internal
    if isinstance(model, PureProduct):
        return _oracle_pure_product(spec.unitary, spec.input_occupation, model.gram)
    if isinstance(model, PartitionMixture):
        out: dict[ModeOccupation, float] = {}
        for lam, weight in model.weights.items():
            g = np.zeros((spec.photons, spec.photons))
            for block in lam:
                for i in block:
                    for j in block:
                        g[i, j] = 1.0
            part = _oracle_pure_product(spec.unitary, spec.input_occupation, g)
            for s, p in part.items():
                out[s] = out.get(s, 0.0) + weight * p
        return out
    raise ValueError("the oracle supports pure-product and partition-mixture models only")


def oracle_probability(spec: ExperimentSpec, s: ModeOccupation) -> float:
    return oracle_distribution(spec).get(tuple(int(c) for c in s), 0.0)


# ---------------------------------------------------------------------------
# Sampling and export
# ---------------------------------------------------------------------------

def sample_counts(
    spec: ExperimentSpec, shots: int, seed: int
) -> dict[ModeOccupation, int]:
    """Multinomial draw from the exact distribution, deterministic in ``seed``.

    Inverse-CDF over the fixed pattern enumeration order with a counter-based
    (Philox) generator, so batches are reproducible and splittable.
    """
    if shots < 0:
        raise ValueError("shots must be >= 0")
    if shots == 0:
        return {}
    dist = output_distribution(spec)
    patterns = enumerate_patterns(spec.photons, spec.modes)
    probs = np.array([dist.probabilities[s] for s in patterns])
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))
    draws = np.searchsorted(cdf, rng.random(shots), side="right")
    counts = np.bincount(draws, minlength=len(patterns))
    return {patterns[i]: int(c) for i, c in enumerate(counts) if c > 0}


def distribution_to_csv(dist: OutputDistribution, path) -> None:
    """CSV dump: pattern (1-based mode order, pipe-separated counts), probability."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pattern", "probability"])
        for s, p in dist.items():
            writer.writerow(["|".join(str(c) for c in s), f"{p:.17g}"])
