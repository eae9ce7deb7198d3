"""Reversibility, fidelity thresholds, sample planning, and count ingestion.

Three threshold constructions turn two measured quantities into a certified
lower bound on the operational (equivalence-class) fidelity of a prepared
state with a linear-optical target:

* additive, projection form:   T = p1 + p2 - 1 - d1 - d2
* additive, witness form:      T = p1 + c* - 1 - d1 - xi
* multiplicative, source form: T = (p1 - d1)(c* - xi)

``p1`` is the photon reversibility (the probability of recovering one photon
in each of the first n modes after undoing the target unitary), ``p2`` the
symmetric-subspace weight, and ``c*`` an indistinguishability witness value.
The multiplicative form measures the witness directly on the source and is
tighter, at the price of assuming the interferometer is a mixture of
internal-state-preserving unitaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .combinatorics import ModeOccupation
from .distinguishability import (
    InternalModel,
    RepresentationError,
    model_gi_vector,
    symmetric_weight,
)
from .engine import ExperimentSpec, output_probability
from .unitaries import check_unitary, unitary_from_json, unitary_to_json

__all__ = [
    "pattern_ones",
    "reversibility",
    "symmetric_projection_estimate",
    "threshold_additive",
    "threshold_witness",
    "threshold_source",
    "SamplePlan",
    "plan_samples",
    "reference_fidelity",
    "CountTable",
    "ingest_counts",
    "export_counts",
    "EmptyDataError",
    "Certificate",
    "MismatchedProgramError",
]

_PROGRAM_TOL = 1e-10


class EmptyDataError(ValueError):
    """A count file survived parsing but holds no usable events."""


class MismatchedProgramError(ValueError):
    """Count tables were taken under a different interferometer program."""


def pattern_ones(n: int, m: int) -> ModeOccupation:
    """One photon in each of the first n modes, vacuum elsewhere."""
    if n > m:
        raise ValueError("photon number exceeds mode count")
    return (1,) * n + (0,) * (m - n)


UnitaryMixture = Sequence[tuple[float, np.ndarray]]


def _as_mixture(actual: np.ndarray | UnitaryMixture) -> list[tuple[float, np.ndarray]]:
    if isinstance(actual, np.ndarray):
        return [(1.0, check_unitary(actual))]
    terms = [(float(w), check_unitary(u)) for w, u in actual]
    total = math.fsum(w for w, _ in terms)
    if abs(total - 1.0) > 1e-9 or any(w < 0 for w, _ in terms):
        raise ValueError("mixture weights must be nonnegative and sum to 1")
    return terms


def reversibility(
    u_target: np.ndarray,
    actual: np.ndarray | UnitaryMixture,
    internal: InternalModel,
) -> float:
    """Probability of recovering the canonical pattern after undoing the target.

    The source state (one photon in each of the first n modes) passes through
    the actual map, then through the inverse of the target; p1 is the
    probability of detecting exactly one photon in each of the first n modes
    again.  Mixtures of unitaries combine convexly.
    """
    u_target = check_unitary(u_target)
    m = u_target.shape[0]
    n = internal.photons
    ones = pattern_ones(n, m)
    total = 0.0
    for w, u_actual in _as_mixture(actual):
        if u_actual.shape != u_target.shape:
            raise ValueError("actual map dimension does not match the target")
        composed = u_actual @ u_target.conj().T
        spec = ExperimentSpec(composed, ones, internal)
        total += w * output_probability(spec, ones)
    return total


def symmetric_projection_estimate(internal: InternalModel) -> float:
    """Simulation-only estimator of the symmetric-projector term.

    There is no known interferometer-plus-counting measurement of this
    quantity for general inputs, so it is computed from the model's
    permutation expectations; certificates built on it are labeled
    non-experimental.
    """
    return symmetric_weight(model_gi_vector(internal))


def threshold_additive(p1: float, p2: float, delta1: float, delta2: float) -> float:
    """T = p1 + p2 - 1 - delta1 - delta2."""
    _check_bounds(p1=p1, p2=p2)
    _check_deviations(delta1, delta2)
    return p1 + p2 - 1.0 - delta1 - delta2


def threshold_witness(p1: float, c_raw: float, delta1: float, xi: float) -> float:
    """T = p1 + c* - 1 - delta1 - xi (witness measured on the reversed state)."""
    _check_bounds(p1=p1)
    _check_deviations(delta1, xi)
    return p1 + c_raw - 1.0 - delta1 - xi


def threshold_source(p1: float, c_raw: float, delta1: float, xi: float) -> float:
    """T = (p1 - delta1)(c* - xi) (witness measured directly on the source)."""
    _check_bounds(p1=p1)
    _check_deviations(delta1, xi)
    return (p1 - delta1) * (c_raw - xi)


def _check_bounds(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not -1e-9 <= value <= 1.0 + 1e-9:
            raise ValueError(f"{name}={value!r} outside [0, 1]")


def _check_deviations(*deviations: float) -> None:
    for d in deviations:
        if d < 0:
            raise ValueError("deviation terms must be >= 0")


@dataclass(frozen=True)
class SamplePlan:
    k_reversibility: int
    k_witness: int

    @property
    def k_total(self) -> int:
        return self.k_reversibility + self.k_witness


def plan_samples(
    epsilon: float,
    delta1: float,
    delta2: float | None = None,
    *,
    kappa: float | None = None,
    xi: float | None = None,
) -> SamplePlan:
    """Minimal per-term sample counts for the requested confidence.

    Supply ``delta2`` for the projection form (both observables are plain
    probabilities), or ``kappa`` and ``xi`` for a witness whose c_n error is
    kappa times the observable error.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if delta1 <= 0:
        raise ValueError("delta1 must be positive")
    ln_term = math.log(2.0 / epsilon) / 2.0
    k1 = math.ceil(ln_term / delta1**2)
    if delta2 is not None:
        if delta2 <= 0:
            raise ValueError("delta2 must be positive")
        k2 = math.ceil(ln_term / delta2**2)
    elif kappa is not None and xi is not None:
        if xi <= 0 or kappa <= 0:
            raise ValueError("kappa and xi must be positive")
        k2 = math.ceil(ln_term * kappa**2 / xi**2)
    else:
        raise ValueError("supply either delta2 or both kappa and xi")
    return SamplePlan(k1, k2)


def reference_fidelity(
    u_target: np.ndarray,
    actual: np.ndarray | UnitaryMixture,
    internal: InternalModel,
) -> float:
    """Tight simulated ground truth ``p1 * symmetric weight of the source``.

    Requires the source to possess a partition representation and the actual
    map to be a unitary mixture (both checked); witnesses are compared
    against this in the scenario plots.
    """
    gi = model_gi_vector(internal)
    if not gi.is_orbit_invariant():
        raise RepresentationError(
            "reference fidelity needs a source with a partition representation;"
            " the supplied model is not orbit-invariant"
        )
    p1 = reversibility(u_target, actual, internal)
    return p1 * symmetric_weight(gi)


# ---------------------------------------------------------------------------
# Count files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountTable:
    """Post-selected pattern counts for one measurement setting."""

    setting: str
    n: int
    m: int
    unitary: np.ndarray
    counts: Mapping[ModeOccupation, int]
    raw_total: int
    dropped: int

    @property
    def retained(self) -> int:
        return sum(self.counts.values())


def ingest_counts(path) -> CountTable:
    """Load a count file, post-selecting on the declared photon number.

    Schema: ``{"n": int, "m": int, "setting": str, "unitary": {...},
    "events": [{"pattern": [int x m], "count": int}, ...]}``.  Events whose
    pattern does not sum to n are dropped and the drop count recorded;
    nothing surviving post-selection is an error.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed count file {path}: {exc}") from exc
    for key in ("n", "m", "setting", "unitary", "events"):
        if key not in payload:
            raise ValueError(f"count file {path} is missing field {key!r}")
    n, m = int(payload["n"]), int(payload["m"])
    unitary = unitary_from_json(json.dumps(payload["unitary"]))
    if unitary.shape != (m, m):
        raise ValueError(f"count file {path}: unitary dimension does not match m={m}")
    counts: dict[ModeOccupation, int] = {}
    raw_total = 0
    dropped = 0
    for event in payload["events"]:
        pattern = tuple(int(c) for c in event["pattern"])
        count = int(event["count"])
        if count < 0:
            raise ValueError("negative event count")
        if len(pattern) != m:
            raise ValueError(f"pattern {pattern} does not have {m} modes")
        raw_total += count
        if sum(pattern) != n:
            dropped += count
            continue
        counts[pattern] = counts.get(pattern, 0) + count
    if not counts:
        raise EmptyDataError(f"count file {path}: no events survive post-selection on n={n}")
    return CountTable(
        setting=str(payload["setting"]), n=n, m=m, unitary=check_unitary(unitary),
        counts=counts, raw_total=raw_total, dropped=dropped,
    )


def export_counts(
    path,
    *,
    setting: str,
    n: int,
    m: int,
    unitary: np.ndarray,
    counts: Mapping[ModeOccupation, int],
) -> None:
    """Write a count file in the ingestion schema (deterministic ordering)."""
    payload = {
        "n": n,
        "m": m,
        "setting": setting,
        "unitary": json.loads(unitary_to_json(unitary)),
        "events": [
            {"pattern": list(s), "count": int(c)} for s, c in sorted(counts.items())
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    """A fidelity certification outcome against a declared accept threshold."""

    level: int                 # 1 projection, 2 reversed witness, 3 source witness
    method: str                # "projection" | "witness-sum" | "source-product"
    witness: str | None
    threshold: float
    p1_observed: float
    second_observed: float     # p2 or c*
    epsilon: float
    shots_reversibility: int
    shots_witness: int
    delta1: float
    xi: float
    accept_threshold: float
    accept: bool
    flags: dict[str, object] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "level": self.level,
            "method": self.method,
            "witness": self.witness,
            "threshold": self.threshold,
            "p1_observed": self.p1_observed,
            "second_observed": self.second_observed,
            "epsilon": self.epsilon,
            "shots_reversibility": self.shots_reversibility,
            "shots_witness": self.shots_witness,
            "delta1": self.delta1,
            "xi": self.xi,
            "accept_threshold": self.accept_threshold,
            "accept": self.accept,
            "flags": {k: self.flags[k] for k in sorted(self.flags)},
        }
        return json.dumps(payload, sort_keys=True)

    def __post_init__(self):
        forms = {1: "projection", 2: "witness-sum", 3: "source-product"}
        if forms.get(self.level) != self.method:
            raise ValueError(f"level {self.level} does not match method {self.method!r}")
