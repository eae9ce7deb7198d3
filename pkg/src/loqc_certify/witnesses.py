"""Indistinguishability witnesses: statistics -> lower bounds on c_n.

Each witness is a pure fold over a frequency table (counts or probabilities)
producing a :class:`WitnessReport` with the raw estimate, the finite-size
corrected bound, and the structural assumptions the bound relies on.  The
four methods:

* ``fourier``  -- total weight on suppressed output patterns of a discrete
  Fourier interferometer; no partition assumption (twirl-invariant).
* ``cyclic``   -- fringe contrast of the two-layer ring network; requires a
  partition representation, sign-free.
* ``hom``      -- bunching fraction of the superposed pairwise-interference
  network; requires a positive partition representation.
* ``twomode``  -- two-mode photon-number correlator at the optimal
  interferometer; requires a positive partition representation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np
import scipy.optimize

from .combinatorics import (
    ModeOccupation,
    enumerate_patterns,
    multiplicity_factor,
    occupation_to_assignment,
)
from .distinguishability import (
    InternalModel,
    PartitionMixture,
    RepresentationError,
    model_gi_vector,
    partition_weights_from_gi,
)
from .engine import ExperimentSpec, output_distribution, sample_counts
from .unitaries import (
    check_unitary,
    cyclic_network,
    fourier_unitary,
    hom_network,
    permanent,
    submatrix,
)

__all__ = [
    "ztl_valid",
    "forbidden_patterns",
    "unique_completion_mode",
    "delta_hoeffding",
    "kappa_factor",
    "hom_bunching_threshold",
    "WitnessReport",
    "fourier_witness",
    "cyclic_witness",
    "cyclic_fringe_scan",
    "hom_witness",
    "twomode_witness",
    "finite_size_correction",
    "find_umax",
    "SearchError",
    "WitnessSetting",
    "witness_setting",
    "evaluate_witness",
    "WITNESS_METHODS",
]

WITNESS_METHODS = ("fourier", "cyclic", "hom", "twomode")


class SearchError(RuntimeError):
    """Numerical search failed to reach its target."""


# ---------------------------------------------------------------------------
# Suppression-law helpers
# ---------------------------------------------------------------------------

def ztl_valid(s: ModeOccupation) -> bool:
    """Suppression-law test for an n-photon pattern on an n-mode Fourier network.

    A pattern survives iff sum_i i*s_i = 0 (mod n) with 0-based mode index i.
    """
    s = tuple(int(c) for c in s)
    n = sum(s)
    if len(s) != n:
        raise ValueError("suppression law needs mode count equal to photon number")
    return sum(i * c for i, c in enumerate(s)) % n == 0


@lru_cache(maxsize=None)
def forbidden_patterns(n: int) -> frozenset[ModeOccupation]:
    """All n-photon patterns on n modes that ideal bosons never produce."""
    return frozenset(s for s in enumerate_patterns(n, n) if not ztl_valid(s))


def unique_completion_mode(t: ModeOccupation) -> int:
    """The unique mode where adding one photon makes an (n-1)-photon pattern valid."""
    t = tuple(int(c) for c in t)
    n = len(t)
    if sum(t) != n - 1:
        raise ValueError("expected n-1 photons over n modes")
    return (-sum(i * c for i, c in enumerate(t))) % n


# ---------------------------------------------------------------------------
# Finite-size machinery
# ---------------------------------------------------------------------------

def delta_hoeffding(shots: int, epsilon: float) -> float:
    """Maximum per-observable deviation sqrt(ln(1/eps) / 2N) at confidence 1-eps."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return math.sqrt(math.log(1.0 / epsilon) / (2.0 * shots))


def kappa_factor(method: str, n: int) -> float:
    """Method-dependent multiplier from observable error to c_n error."""
    if method == "fourier":
        return n / (n - 1)
    if method == "cyclic":
        return float(2**n)
    if method == "hom":
        return float(2 * n - 2)
    if method == "twomode":
        raise ValueError(
            "the two-mode correction applies at the moment level, not as a scalar"
        )
    raise ValueError(f"unknown witness method {method!r}")


def hom_bunching_threshold(n: int) -> float:
    """Default bunching threshold p*(n) = (2n-3)/(2n-2).

    This is the largest bunching probability attainable by any state whose
    fully-indistinguishable coefficient vanishes (reached when every photon
    except one non-reference photon is identical).  The brute-force
    cross-check for n in {2, 3} lives in the test suite; callers may override
    the threshold explicitly.
    """
    if n < 2:
        raise ValueError("threshold defined for n >= 2")
    return (2 * n - 3) / (2 * n - 2)


def finite_size_correction(
    c_raw: float,
    method: str,
    n: int,
    shots: int,
    epsilon: float,
    moments: Mapping[str, float] | None = None,
) -> float:
    """Confidence-corrected lower bound from a raw estimate.

    For fourier/cyclic/hom this is ``c_raw - kappa_n * delta(N, eps)``.  The
    two-mode method needs the measured moments because photon-number
    observables are not [0, 1]-bounded; at n=3 the corrected bound is
    ``12 (<n1 n2> - 2 d - (<n1> + 3d)(<n2> + 3d))``.
    """
    delta = delta_hoeffding(shots, epsilon)
    if method == "twomode":
        if n != 3:
            raise ValueError("two-mode finite-size correction is pinned for n=3 only")
        if moments is None:
            raise ValueError("two-mode correction needs the measured moments")
        n1, n2, n12 = moments["n1"], moments["n2"], moments["n12"]
        return 12.0 * (n12 - 2.0 * delta - (n1 + 3.0 * delta) * (n2 + 3.0 * delta))
    return c_raw - kappa_factor(method, n) * delta


# ---------------------------------------------------------------------------
# Witness report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WitnessReport:
    """Outcome of one witness evaluation.

    ``shots == 0`` marks exact-mode evaluation, in which case no finite-size
    correction is applied and ``c_corrected == c_raw``.
    """

    method: str
    photons: int
    c_raw: float
    c_corrected: float
    shots: int
    epsilon: float | None
    kappa: float | None
    statistics: dict[str, float]
    flags: dict[str, object]
    frequencies: dict[ModeOccupation, float] = field(repr=False, default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "method": self.method,
            "photons": self.photons,
            "c_raw": self.c_raw,
            "c_corrected": self.c_corrected,
            "shots": self.shots,
            "epsilon": self.epsilon,
            "kappa": self.kappa,
            "statistics": dict(sorted(self.statistics.items())),
            "flags": {k: self.flags[k] for k in sorted(self.flags)},
            "frequencies": [
                {"pattern": list(s), "weight": w}
                for s, w in sorted(self.frequencies.items())
            ],
        }
        return json.dumps(payload, sort_keys=True)


def _normalize(freqs: Mapping[ModeOccupation, float]) -> tuple[dict[ModeOccupation, float], float]:
    table = {tuple(int(c) for c in s): float(w) for s, w in freqs.items()}
    total = math.fsum(table.values())
    if total <= 0:
        raise ValueError("frequency table is empty")
    return table, total


def _corrected(c_raw: float, method: str, n: int, shots: int, epsilon: float | None,
               moments=None) -> tuple[float, float | None]:
    if method == "twomode":
        kappa = None
    else:
        kappa = kappa_factor(method, n)
    if shots == 0:
        return c_raw, kappa
    if epsilon is None:
        raise ValueError("sampled-mode reports need a confidence epsilon")
    return finite_size_correction(c_raw, method, n, shots, epsilon, moments), kappa


# ---------------------------------------------------------------------------
# The four witnesses
# ---------------------------------------------------------------------------

def fourier_witness(
    freqs: Mapping[ModeOccupation, float],
    n: int,
    lam: float | None = None,
    *,
    shots: int = 0,
    epsilon: float | None = None,
    input_flags: Mapping[str, object] | None = None,
) -> WitnessReport:
    """Suppressed-pattern witness: c_n >= 1 - p_f / lambda.

    Default ``lambda = (n-1)/n``, exact on inputs where at least one photon is
    orthogonal to all others (the independent orthogonal-noise family) and
    conjectured to be worst-case in general.  No partition assumption is
    needed: the observable is invariant under permutation twirling, so the
    bound always refers to the twirled input.
    """
    if lam is None:
        lam = (n - 1) / n
    if lam <= 0:
        raise ValueError("lambda must be positive")
    table, total = _normalize(freqs)
    forbidden = forbidden_patterns(n)
    for s in table:
        if len(s) != n or sum(s) != n:
            raise ValueError(f"pattern {s} is not an n-photon pattern on n modes")
    p_f = math.fsum(w for s, w in table.items() if s in forbidden) / total
    c_raw = 1.0 - p_f / lam
    c_corr, kappa = _corrected(c_raw, "fourier", n, shots, epsilon)
    flags = {
        "requires": "none (no partition assumption; the observable is invariant"
        " under cyclic mode relabelings, and for n=3 under full permutation"
        " twirling, so the bound then refers to the twirled input)",
        "lambda": lam,
        "lambda_assumption": (
            "default lambda=(n-1)/n proven when at least one photon is orthogonal"
            " to all others (includes independent orthogonal noise); conjectured"
            " worst-case in general"
        ),
        "semi_device_independent": "numerical evidence",
        "input_flags": dict(input_flags or {}),
    }
    return WitnessReport(
        method="fourier", photons=n, c_raw=c_raw, c_corrected=c_corr,
        shots=shots, epsilon=epsilon, kappa=kappa,
        statistics={"p_f": p_f}, flags=flags, frequencies=table,
    )


def _cyclic_pairs(n: int) -> tuple[tuple[int, int], ...]:
    m = 2 * n
    return tuple((2 * j + 1, (2 * j + 2) % m) for j in range(n))


def _cyclic_classify(s: ModeOccupation, n: int) -> int | None:
    """Fringe sign (-1)^(n+q) of an eligible ring pattern, else None."""
    if len(s) != 2 * n:
        raise ValueError("ring patterns live on 2n modes")
    for a, b in _cyclic_pairs(n):
        if s[a] + s[b] != 1:
            return None
    q = sum(s[i] for i in range(1, 2 * n, 2))
    return -1 if (n + q) & 1 else 1


def cyclic_witness(
    freqs: Mapping[ModeOccupation, float],
    n: int,
    alpha: float = 0.0,
    *,
    shots: int = 0,
    epsilon: float | None = None,
    input_flags: Mapping[str, object] | None = None,
) -> WitnessReport:
    """Ring-fringe witness: contrast of the two parity classes of eligible events.

    Eligible patterns hold exactly one photon in each adjacent output pair;
    the class carrying the +cos(alpha) fringe is fixed by the parity of
    (n + number of occupied even modes).  The estimate
    ``(P+ - P-) / ((P+ + P-) cos alpha)`` equals the weight of the full-cycle
    permutation for any input with a (possibly signed) partition
    representation.  Not semi-device-independent.
    """
    if abs(math.cos(alpha)) < 1e-12:
        raise ValueError("cos(alpha) = 0: the fringe carries no information")
    table, _ = _normalize(freqs)
    p_plus = p_minus = 0.0
    for s, w in table.items():
        sign = _cyclic_classify(s, n)
        if sign == 1:
            p_plus += w
        elif sign == -1:
            p_minus += w
    if p_plus + p_minus <= 0:
        raise ValueError("no eligible ring events in the table")
    total_eligible = p_plus + p_minus
    c_raw = (p_plus - p_minus) / (total_eligible * math.cos(alpha))
    c_corr, kappa = _corrected(c_raw, "cyclic", n, shots, epsilon)
    grand = math.fsum(table.values())
    flags = {
        "requires": "partition representation (weights may be negative)",
        "semi_device_independent": False,
        "input_flags": dict(input_flags or {}),
    }
    return WitnessReport(
        method="cyclic", photons=n, c_raw=c_raw, c_corrected=c_corr,
        shots=shots, epsilon=epsilon, kappa=kappa,
        statistics={
            "p_plus": p_plus / grand,
            "p_minus": p_minus / grand,
            "eligible_fraction": total_eligible / grand,
            "alpha": alpha,
        },
        flags=flags, frequencies=table,
    )


def _hom_pairs(n: int) -> tuple[tuple[int, int], ...]:
    k = max(1, n - 1)
    return tuple((j, k + j) for j in range(k))


def hom_witness(
    freqs: Mapping[ModeOccupation, float],
    n: int,
    *,
    p_star: float | None = None,
    shots: int = 0,
    epsilon: float | None = None,
    input_flags: Mapping[str, object] | None = None,
) -> WitnessReport:
    """Bunching witness: c_n >= (p_b - p*) / (1 - p*), with 2 p_b - 1 as upper bound.

    ``p_b`` is the fraction of events with no output pair in coincidence.
    Valid only for inputs with a positive partition representation; on signed
    (quasi) mixtures the estimate can exceed the true coefficient.
    """
    if p_star is None:
        p_star = hom_bunching_threshold(n)
    if not 0.0 < p_star < 1.0:
        raise ValueError("bunching threshold must lie in (0, 1)")
    table, total = _normalize(freqs)
    pairs = _hom_pairs(n)
    modes = 2 * max(1, n - 1)
    for s in table:
        if len(s) != modes:
            raise ValueError(f"pattern {s} does not live on the {modes}-mode network")
    bunched = 0.0
    for s, w in table.items():
        if not any(s[a] == 1 and s[b] == 1 for a, b in pairs):
            bunched += w
    p_b = bunched / total
    c_raw = (p_b - p_star) / (1.0 - p_star)
    c_upper = 2.0 * p_b - 1.0
    c_corr, kappa = _corrected(c_raw, "hom", n, shots, epsilon)
    flags = {
        "requires": "positive partition representation",
        "semi_device_independent": "numerical evidence",
        "p_star": p_star,
        "input_flags": dict(input_flags or {}),
    }
    return WitnessReport(
        method="hom", photons=n, c_raw=c_raw, c_corrected=c_corr,
        shots=shots, epsilon=epsilon, kappa=kappa,
        statistics={"p_b": p_b, "c_upper": c_upper},
        flags=flags, frequencies=table,
    )


def twomode_witness(
    freqs: Mapping[ModeOccupation, float],
    modes: tuple[int, int] = (0, 1),
    n: int = 3,
    *,
    c_max_lower_order: float | None = None,
    shots: int = 0,
    epsilon: float | None = None,
    input_flags: Mapping[str, object] | None = None,
) -> WitnessReport:
    """Photon-number correlator witness between two output modes.

    ``C = <n_i n_j> - <n_i><n_j>`` reaches ``C_q = 1/4 - 1/(2n)`` for ideal
    photons at the optimal interferometer and is non-positive for fully
    distinguishable ones.  The conversion to a c_n bound divides by
    ``C_q - C_max``, where ``C_max`` bounds the correlator over states with
    no fully symmetric component; that constant is pinned (= 0) only at n=3,
    so larger n must supply ``c_max_lower_order`` explicitly.
    """
    if n != 3 and c_max_lower_order is None:
        raise ValueError(
            "the correlator-to-c_n conversion is pinned only for n=3;"
            " supply c_max_lower_order for other photon numbers"
        )
    c_max = 0.0 if c_max_lower_order is None else float(c_max_lower_order)
    i, j = modes
    table, total = _normalize(freqs)
    for s in table:
        if max(i, j) >= len(s):
            raise ValueError(f"pattern {s} has no mode {max(i, j)}")
    n1 = math.fsum(s[i] * w for s, w in table.items()) / total
    n2 = math.fsum(s[j] * w for s, w in table.items()) / total
    n12 = math.fsum(s[i] * s[j] * w for s, w in table.items()) / total
    corr = n12 - n1 * n2
    c_q = 0.25 - 1.0 / (2.0 * n)
    c_raw = (corr - c_max) / (c_q - c_max)
    moments = {"n1": n1, "n2": n2, "n12": n12}
    c_corr, kappa = _corrected(c_raw, "twomode", n, shots, epsilon, moments)
    flags = {
        "requires": "positive partition representation (for the c_n conversion;"
        " whether the bare correlator witness needs it is open)",
        "semi_device_independent": True,
        "c_q": c_q,
        "c_max_lower_order": c_max,
        "input_flags": dict(input_flags or {}),
    }
    stats = {"correlator": corr, **moments}
    return WitnessReport(
        method="twomode", photons=n, c_raw=c_raw, c_corrected=c_corr,
        shots=shots, epsilon=epsilon, kappa=kappa,
        statistics=stats, flags=flags, frequencies=table,
    )


def cyclic_fringe_scan(
    model: InternalModel,
    n: int,
    alphas,
    *,
    deviation: np.ndarray | None = None,
    shots: int = 0,
    seed: int = 0,
) -> dict:
    """Diagnostic phase scan of the ring network.

    Evaluates the two parity-class totals on a grid of phase settings and
    reports the classic fringe visibility of the plus class,
    ``(max - min) / (max + min)``.  ``deviation`` optionally appends a fixed
    miscalibration stage after the (phase-swept) ideal network.
    """
    points = []
    plus_values = []
    for k, alpha in enumerate(alphas):
        net = cyclic_network(n, float(alpha))
        u = net.unitary if deviation is None else net.unitary @ check_unitary(deviation)
        spec = ExperimentSpec(u, net.input_occupation, model)
        if shots == 0:
            freqs = dict(output_distribution(spec).items())
        else:
            freqs = {s: float(c) for s, c in sample_counts(spec, shots, seed + k).items()}
        p_plus = p_minus = 0.0
        for s, w in freqs.items():
            sign = _cyclic_classify(s, n)
            if sign == 1:
                p_plus += w
            elif sign == -1:
                p_minus += w
        total = math.fsum(freqs.values())
        points.append({"alpha": float(alpha), "p_plus": p_plus / total, "p_minus": p_minus / total})
        plus_values.append(p_plus / total)
    vmax, vmin = max(plus_values), min(plus_values)
    visibility = (vmax - vmin) / (vmax + vmin) if vmax + vmin > 0 else float("nan")
    return {"points": points, "visibility": visibility}


# ---------------------------------------------------------------------------
# Optimal correlator interferometer
# ---------------------------------------------------------------------------

def _hermitian_from_params(x: np.ndarray, m: int) -> np.ndarray:
    h = np.zeros((m, m), dtype=complex)
    k = 0
    for i in range(m):
        h[i, i] = x[k]
        k += 1
    for i in range(m):
        for j in range(i + 1, m):
            h[i, j] = x[k] + 1j * x[k + 1]
            h[j, i] = x[k] - 1j * x[k + 1]
            k += 2
    return h


def _unitary_from_params(x: np.ndarray, m: int) -> np.ndarray:
    w, v = np.linalg.eigh(_hermitian_from_params(x, m))
    return (v * np.exp(1j * w)) @ v.conj().T


def _ideal_correlator(u: np.ndarray, n: int) -> float:
    # Ideal photons only: P(s) = |perm(M)|^2 / mu(s), no expectation table needed.
    d_in = list(range(n))
    n1 = n2 = n12 = 0.0
    for s in enumerate_patterns(n, u.shape[0]):
        p = abs(permanent(submatrix(u, d_in, occupation_to_assignment(s)))) ** 2
        p /= multiplicity_factor(s)
        n1 += s[0] * p
        n2 += s[1] * p
        n12 += s[0] * s[1] * p
    return n12 - n1 * n2


@lru_cache(maxsize=8)
def find_umax(n: int, seed: int = 0, *, modes: int = 4, starts: int = 12) -> np.ndarray:
    """Search for the interferometer maximizing the ideal two-mode correlator.

    Multi-start Nelder-Mead over Hermitian generators.  Three modes top out
    at C = 0 for n = 3; four modes reach the C_q bound, so that is the
    default search space.  Raises :class:`SearchError` (carrying the best
    value found) if no start comes within 1e-3 of C_q.
    """
    if n != 3:
        raise ValueError("the correlator search is supported for n=3 only")
    c_q = 0.25 - 1.0 / (2.0 * n)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    best_val = -np.inf
    best_u = None
    for _ in range(starts):
        x0 = rng.normal(size=modes * modes)
        res = scipy.optimize.minimize(
            lambda x: -_ideal_correlator(_unitary_from_params(x, modes), n),
            x0,
            method="Nelder-Mead",
            options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-12},
        )
        if -res.fun > best_val:
            best_val = -res.fun
            best_u = _unitary_from_params(res.x, modes)
        if best_val >= c_q - 1e-3:
            break
    if best_val < c_q - 1e-3:
        raise SearchError(
            f"correlator search reached {best_val:.6f}, short of C_q = {c_q:.6f}"
        )
    u = check_unitary(best_u)
    u.setflags(write=False)
    return u


# ---------------------------------------------------------------------------
# End-to-end evaluation on a model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WitnessSetting:
    """A witness method bound to a concrete interferometer and input."""

    method: str
    photons: int
    unitary: np.ndarray
    input_occupation: tuple[int, ...]
    alpha: float = 0.0


def witness_setting(
    method: str,
    n: int,
    *,
    alpha: float = 0.0,
    umax_seed: int = 0,
    unitary: np.ndarray | None = None,
) -> WitnessSetting:
    """Build the ideal setting for a witness, or bind an explicit (e.g.
    perturbed) interferometer to the same input layout and classifiers."""
    if method == "fourier":
        ideal = fourier_unitary(n)
        occ = (1,) * n
    elif method == "cyclic":
        net = cyclic_network(n, alpha)
        ideal = net.unitary
        occ = net.input_occupation
    elif method == "hom":
        net = hom_network(n)
        ideal = net.unitary
        occ = net.input_occupation
    elif method == "twomode":
        ideal = find_umax(n, umax_seed)
        occ = (1,) * n + (0,) * (ideal.shape[0] - n)
    else:
        raise ValueError(f"unknown witness method {method!r}")
    u = ideal if unitary is None else check_unitary(unitary)
    if u.shape != ideal.shape:
        raise ValueError(f"{method} network for n={n} needs shape {ideal.shape}")
    return WitnessSetting(method=method, photons=n, unitary=u,
                          input_occupation=occ, alpha=alpha)


def _input_flags(model: InternalModel) -> dict[str, object]:
    """What the input model actually provides, for the report's validity flags."""
    flags: dict[str, object] = {}
    if isinstance(model, PartitionMixture):
        flags["partition_representation"] = True
        flags["partition_nonnegative"] = not model.is_quasi
        return flags
    gi = model_gi_vector(model)
    if not gi.is_orbit_invariant():
        flags["partition_representation"] = False
        flags["partition_nonnegative"] = False
        return flags
    try:
        mixture = partition_weights_from_gi(gi)
    except RepresentationError:
        flags["partition_representation"] = False
        flags["partition_nonnegative"] = False
        return flags
    flags["partition_representation"] = True
    flags["partition_nonnegative"] = not mixture.is_quasi
    return flags


def evaluate_witness(
    setting: WitnessSetting,
    model: InternalModel,
    *,
    shots: int = 0,
    seed: int = 0,
    epsilon: float | None = None,
    lam: float | None = None,
    p_star: float | None = None,
) -> WitnessReport:
    """Run a witness end to end on an internal-state model.

    ``shots == 0`` evaluates on the exact output distribution; otherwise a
    multinomial sample of that size is drawn with the given seed.
    """
    spec = ExperimentSpec(setting.unitary, setting.input_occupation, model)
    if shots == 0:
        freqs: Mapping[ModeOccupation, float] = dict(output_distribution(spec).items())
    else:
        freqs = {s: float(c) for s, c in sample_counts(spec, shots, seed).items()}
    flags = _input_flags(model)
    n = setting.photons
    if setting.method == "fourier":
        return fourier_witness(freqs, n, lam, shots=shots, epsilon=epsilon,
                               input_flags=flags)
    if setting.method == "cyclic":
        return cyclic_witness(freqs, n, setting.alpha, shots=shots, epsilon=epsilon,
                              input_flags=flags)
    if setting.method == "hom":
        return hom_witness(freqs, n, p_star=p_star, shots=shots, epsilon=epsilon,
                           input_flags=flags)
    if setting.method == "twomode":
        return twomode_witness(freqs, (0, 1), n, shots=shots, epsilon=epsilon,
                               input_flags=flags)
    raise ValueError(f"unknown witness method {setting.method!r}")
