"""Interferometer matrices: construction, perturbation, and permanents.

All interferometers are represented by their m x m complex matrix U acting on
creation operators as ``a_i -> sum_k U[i, k] b_k``.  With that convention a
physical sequence of elements (first A, then B) has total matrix ``A @ B``.

The two witness networks built here (cyclic two-layer ring, superposed
pairwise-interference network) are self-certifying: construction runs an
ideal-photon check against the closed-form statistics they must produce and
refuses to return a network that fails it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .combinatorics import (
    CapacityError,
    ModeOccupation,
    Permutation,
    enumerate_patterns,
    multiplicity_factor,
    occupation_to_assignment,
)

__all__ = [
    "UNITARITY_TOL",
    "ConstructionError",
    "check_unitary",
    "fourier_unitary",
    "haar_random",
    "perturb",
    "beamsplitter",
    "compose_circuits",
    "submatrix",
    "permanent",
    "permuted_product_permanent",
    "CyclicNetwork",
    "cyclic_network",
    "HomNetwork",
    "hom_network",
    "unitary_to_json",
    "unitary_from_json",
]

UNITARITY_TOL = 1e-10
_DET_TOL = 1e-8
_PERMANENT_CAP = 16
_KAHAN_MIN_DIM = 10


class ConstructionError(RuntimeError):
    """A constructed network failed its build-time validation."""


def check_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> np.ndarray:
    """Validate ||U†U - I||_max <= tol and |det U| ~ 1; return U as complex array."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    dev = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
    if dev > tol:
        raise ValueError(f"matrix is not unitary: max |U†U - I| = {dev:.3e} > {tol:g}")
    det_dev = abs(abs(np.linalg.det(u)) - 1.0)
    if det_dev > _DET_TOL:
        raise ValueError(f"|det U| deviates from 1 by {det_dev:.3e}")
    return u


def fourier_unitary(n: int) -> np.ndarray:
    """Discrete Fourier transform matrix, entry (j, k) = exp(2 pi i j k / n) / sqrt(n)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    u = np.exp(2j * np.pi * j * k / n) / math.sqrt(n)
    return check_unitary(u)


def _generator(seed: int) -> np.random.Generator:
    # Philox is counter-based and splittable: identical streams on every
    # platform, and sub-streams can be derived from (seed, index) keys.
    return np.random.Generator(np.random.Philox(key=np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))


def haar_random(m: int, seed: int) -> np.ndarray:
    """Haar-distributed m x m unitary, deterministic in ``seed``.

    QR of a complex Ginibre matrix with the R-diagonal phases folded back in,
    which corrects the QR gauge so the result carries the invariant measure.
    """
    if m < 1:
        raise ValueError("dimension must be >= 1")
    rng = _generator(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return check_unitary(q)


def perturb(u_ideal: np.ndarray, eps: float, seed: int) -> np.ndarray:
    """Geodesic-style perturbation ``U_ideal . exp(eps log U_Haar)``.

    The logarithm of the Haar draw is taken on the principal branch
    (eigenphases in (-pi, pi]) via a complex Schur decomposition, which is
    diagonal for normal matrices and therefore exact for unitaries up to
    rounding.  ``eps = 0`` returns ``u_ideal`` unchanged.
    """
    u_ideal = check_unitary(u_ideal)
    if eps < 0:
        raise ValueError("perturbation strength must be >= 0")
    if eps == 0:
        return u_ideal.copy()
    h = haar_random(u_ideal.shape[0], seed)
    t, q = scipy.linalg.schur(h, output="complex")
    phases = np.angle(np.diagonal(t))
    w = (q * np.exp(1j * eps * phases)) @ q.conj().T
    return check_unitary(u_ideal @ w)


def beamsplitter(m: int, i: int, j: int) -> np.ndarray:
    """Balanced beamsplitter on modes (i, j) of m: 2x2 block (1/sqrt2)[[1, i],[i, 1]]."""
    u = np.eye(m, dtype=complex)
    u[i, i] = u[j, j] = 1 / math.sqrt(2)
    u[i, j] = u[j, i] = 1j / math.sqrt(2)
    return u


def compose_circuits(*stages: np.ndarray) -> np.ndarray:
    """Total matrix of elements applied in temporal order (first arg first)."""
    total = stages[0]
    for s in stages[1:]:
        total = total @ s
    return total


def submatrix(u: np.ndarray, d_in: Sequence[int], d_out: Sequence[int]) -> np.ndarray:
    """Transition matrix M with ``M[i, j] = U[d_in[i], d_out[j]]``.

    Repeated mode indices produce repeated rows/columns, as required for
    bunched input or output configurations.
    """
    u = np.asarray(u, dtype=complex)
    if len(d_in) != len(d_out):
        raise ValueError("input and output assignments must have equal length")
    m = u.shape[0]
    for idx in (*d_in, *d_out):
        if not 0 <= idx < m:
            raise IndexError(f"mode index {idx} out of range for {m} modes")
    return u[np.ix_(list(d_in), list(d_out))]


def permanent(a: np.ndarray) -> complex:
    """Permanent of a square complex matrix via Ryser's formula.

    Gray-code subset iteration keeps the running row sums incremental,
    O(2^n n) overall.  For dimensions >= 10 the alternating outer sum is
    accumulated with Kahan compensation; the 2^n cancellations otherwise eat
    several digits.  The empty 0x0 permanent is 1 by convention.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n > _PERMANENT_CAP:
        raise CapacityError(f"permanent dimension {n} exceeds cap {_PERMANENT_CAP}")

    # Plain Python complex scalars beat per-step ndarray dispatch by an order
    # of magnitude at desk-scale dimensions.
    cols = [tuple(col) for col in a.T.tolist()]
    row_sums = [0j] * n
    total = 0j
    comp = 0j
    use_kahan = n >= _KAHAN_MIN_DIM
    gray = 0
    rng = range(n)
    for k in range(1, 1 << n):
        new_gray = k ^ (k >> 1)
        j = (gray ^ new_gray).bit_length() - 1
        col = cols[j]
        if new_gray & (1 << j):
            for i in rng:
                row_sums[i] += col[i]
        else:
            for i in rng:
                row_sums[i] -= col[i]
        gray = new_gray
        term = row_sums[0]
        for i in range(1, n):
            term *= row_sums[i]
        if new_gray.bit_count() & 1:
            term = -term
        if use_kahan:
            y = term - comp
            t = total + y
            comp = (t - total) - y
            total = t
        else:
            total += term
    if n & 1:
        total = -total
    return complex(total)


def permuted_product_permanent(m: np.ndarray, sigma: Permutation) -> complex:
    """perm(M * conj(M with rows permuted by sigma)), elementwise product.

    This is the kernel weighting a photon-permutation expectation value in
    the output-probability expansion; sigma and its inverse give complex
    conjugate values.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("transition matrix must be square")
    if len(sigma) != m.shape[0]:
        raise ValueError("permutation size does not match matrix dimension")
    return permanent(m * np.conj(m[list(sigma), :]))


def _ideal_probability(u: np.ndarray, d_in: Sequence[int], s: ModeOccupation) -> float:
    """|perm(M)|^2 / (mu(in) mu(out)) for perfectly indistinguishable photons."""
    d_out = occupation_to_assignment(s)
    mat = submatrix(u, d_in, d_out)
    mu_in = multiplicity_factor(assignment_counts(d_in, u.shape[0]))
    return abs(permanent(mat)) ** 2 / (mu_in * multiplicity_factor(s))


def assignment_counts(d_in: Sequence[int], m: int) -> ModeOccupation:
    occ = [0] * m
    for i in d_in:
        occ[i] += 1
    return tuple(occ)


# ---------------------------------------------------------------------------
# Witness networks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CyclicNetwork:
    """Two-layer ring of balanced beamsplitters on 2n modes with phase alpha.

    Layer 1 couples (0,1),(2,3),...,(2n-2,2n-1); the tunable phase sits on
    mode 0 between layers; layer 2 couples (1,2),(3,4),...,(2n-1,0).  Photons
    enter on the even 0-based modes (odd modes in 1-based labels).
    """

    photons: int
    alpha: float
    unitary: np.ndarray
    input_occupation: ModeOccupation

    @property
    def modes(self) -> int:
        return 2 * self.photons

    def output_pairs(self) -> tuple[tuple[int, int], ...]:
        m = self.modes
        return tuple((2 * j + 1, (2 * j + 2) % m) for j in range(self.photons))

    def eligible_patterns(self) -> tuple[ModeOccupation, ...]:
        """The 2^n outputs with exactly one photon in each adjacent pair."""
        import itertools

        pats = []
        for choice in itertools.product((0, 1), repeat=self.photons):
            occ = [0] * self.modes
            for (a, b), c in zip(self.output_pairs(), choice):
                occ[a if c == 0 else b] += 1
            pats.append(tuple(occ))
        return tuple(pats)

    def is_eligible(self, s: ModeOccupation) -> bool:
        return all(s[a] + s[b] == 1 and s[a] * s[b] == 0 for a, b in self.output_pairs())

    def even_mode_count(self, s: ModeOccupation) -> int:
        """Photons in even modes (1-based labels), i.e. odd 0-based indices."""
        return sum(s[i] for i in range(1, self.modes, 2))

    def fringe_sign(self, s: ModeOccupation) -> int:
        """Sign of the cos(alpha) fringe term for an eligible pattern."""
        return -1 if (self.photons + self.even_mode_count(s)) & 1 else 1

    def ideal_fringe(self, s: ModeOccupation) -> float:
        """Eligible-pattern probability for perfectly indistinguishable photons."""
        return (1.0 + self.fringe_sign(s) * math.cos(self.alpha)) / 2 ** (2 * self.photons - 1)


def cyclic_network(n: int, alpha: float) -> CyclicNetwork:
    """Build and validate the 2n-mode cyclic fringe network.

    Validation: with ideal photons on the input modes, every eligible output
    pattern must reproduce the closed-form fringe probability to 1e-9, and
    the eligible-event total must equal 1/2^(n-1).
    """
    if n < 2:
        raise ValueError("cyclic network needs n >= 2 photons")
    m = 2 * n
    layer1 = np.eye(m, dtype=complex)
    for j in range(n):
        layer1 = layer1 @ beamsplitter(m, 2 * j, 2 * j + 1)
    phase = np.eye(m, dtype=complex)
    phase[0, 0] = np.exp(1j * alpha)
    layer2 = np.eye(m, dtype=complex)
    for j in range(n):
        layer2 = layer2 @ beamsplitter(m, 2 * j + 1, (2 * j + 2) % m)
    u = check_unitary(compose_circuits(layer1, phase, layer2))

    occ = [0] * m
    for j in range(n):
        occ[2 * j] = 1
    net = CyclicNetwork(photons=n, alpha=float(alpha), unitary=u, input_occupation=tuple(occ))

    d_in = occupation_to_assignment(net.input_occupation)
    worst = 0.0
    total = 0.0
    for s in net.eligible_patterns():
        p = _ideal_probability(u, d_in, s)
        worst = max(worst, abs(p - net.ideal_fringe(s)))
        total += p
    worst = max(worst, abs(total - 0.5 ** (n - 1)))
    if worst > 1e-9:
        raise ConstructionError(
            f"cyclic network validation failed: max fringe deviation {worst:.3e}"
        )
    return net


@dataclass(frozen=True)
class HomNetwork:
    """Pairwise-interference network: a reference photon split over n-1 paths.

    Photon 0 enters path mode 0 and is spread over the n-1 path modes by a
    Fourier transform; photon k (k >= 1) enters mode (n-1)+(k-1) and meets
    path k-1 on a balanced beamsplitter.  Output pair j is (j, n-1+j).
    """

    photons: int
    unitary: np.ndarray
    input_occupation: ModeOccupation

    @property
    def modes(self) -> int:
        return max(2, 2 * (self.photons - 1))

    def output_pairs(self) -> tuple[tuple[int, int], ...]:
        k = max(1, self.photons - 1)
        return tuple((j, k + j) for j in range(k))

    def is_bunched(self, s: ModeOccupation) -> bool:
        """True when no output pair holds exactly one photon on each arm."""
        return not any(s[a] == 1 and s[b] == 1 for a, b in self.output_pairs())


def hom_network(n: int) -> HomNetwork:
    """Build and validate the superposed pairwise-interference network.

    Validation: perfectly indistinguishable photons must bunch with
    probability 1 (total coincidence probability below 1e-9).
    """
    if n < 2:
        raise ValueError("the bunching network needs n >= 2 photons")
    paths = n - 1
    m = 2 * paths
    split = np.eye(m, dtype=complex)
    split[:paths, :paths] = fourier_unitary(paths)
    layer = np.eye(m, dtype=complex)
    for j in range(paths):
        layer = layer @ beamsplitter(m, j, paths + j)
    u = check_unitary(compose_circuits(split, layer))

    occ = [0] * m
    occ[0] = 1
    for k in range(1, n):
        occ[paths + (k - 1)] += 1
    net = HomNetwork(photons=n, unitary=u, input_occupation=tuple(occ))

    d_in = occupation_to_assignment(net.input_occupation)
    coincidence = 0.0
    for s in enumerate_patterns(n, m):
        if not net.is_bunched(s):
            coincidence += _ideal_probability(u, d_in, s)
    if coincidence > 1e-9:
        raise ConstructionError(
            f"bunching network validation failed: ideal coincidence mass {coincidence:.3e}"
        )
    return net


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def unitary_to_json(u: np.ndarray) -> str:
    """JSON row-major [re, im] encoding; floats round-trip exactly."""
    u = np.asarray(u, dtype=complex)
    payload = {
        "dimension": u.shape[0],
        "entries": [[float(z.real), float(z.imag)] for z in u.ravel()],
    }
    return json.dumps(payload)


def unitary_from_json(text: str) -> np.ndarray:
    payload = json.loads(text)
    dim = payload["dimension"]
    flat = np.array([complex(re, im) for re, im in payload["entries"]], dtype=complex)
    if flat.size != dim * dim:
        raise ValueError("entry count does not match declared dimension")
    return flat.reshape(dim, dim)
