"""Scenario runners: the numerical studies behind the CLI subcommands.

Each runner takes a configuration dict (see ``configs/`` for committed
examples), writes CSV/JSON (and a PNG figure), and returns a summary dict.
Outputs are deterministic: identical config and seeds produce byte-identical
CSV and JSON files.  Every CSV row carries the provenance (seed, shots,
epsilon, model) needed to regenerate it.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .certify import (
    Certificate,
    CountTable,
    EmptyDataError,
    MismatchedProgramError,
    export_counts,
    ingest_counts,
    pattern_ones,
    reference_fidelity,
    reversibility,
    threshold_source,
    threshold_witness,
)
from .combinatorics import enumerate_partitions, singleton_partition
from .distinguishability import (
    InternalModel,
    PartitionMixture,
    PureProduct,
    indistinguishable_coefficient,
    model_from_json,
    model_gi_vector,
    model_to_json,
    obb_model,
    partition_weights_from_gi,
    time_delay_gram,
)
from .engine import ExperimentSpec, output_distribution, distribution_to_csv, sample_counts
from .unitaries import (
    cyclic_network,
    fourier_unitary,
    haar_random,
    perturb,
    unitary_from_json,
    unitary_to_json,
)
from .witnesses import (
    WITNESS_METHODS,
    cyclic_witness,
    delta_hoeffding,
    evaluate_witness,
    fourier_witness,
    hom_witness,
    kappa_factor,
    twomode_witness,
    witness_setting,
)
from . import plotting

__all__ = [
    "derive_seed",
    "parse_unitary",
    "parse_model",
    "certify_from_counts",
    "run_witness_compare",
    "run_perturbation_study",
    "run_partition_study",
    "run_fidelity_demo",
    "run_simulate",
    "run_counts_certify",
    "max_workers",
]

# A raw estimate counts as overshooting when it exceeds the true coefficient
# beyond numerical tolerance.
OVERSHOOT_TOL = 1e-6


def derive_seed(*parts) -> int:
    """Stable 64-bit sub-stream seed from any hashable provenance tuple."""
    digest = hashlib.sha256(repr(parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def max_workers() -> int:
    env = os.environ.get("LOQC_CERTIFY_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_csv(path: Path, fieldnames: Sequence[str], rows: Iterable[Mapping]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in fieldnames])


def _write_json(path: Path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")


def parse_unitary(spec, m: int) -> np.ndarray:
    """Interferometer spec: 'fourier' | 'haar:SEED' | 'cyclic:ALPHA' | 'file:PATH' | inline JSON."""
    if isinstance(spec, dict):
        return unitary_from_json(json.dumps(spec))
    if spec == "fourier":
        return fourier_unitary(m)
    if spec.startswith("haar:"):
        return haar_random(m, int(spec.split(":", 1)[1]))
    if spec.startswith("cyclic:"):
        if m % 2:
            raise ValueError("a cyclic network needs an even mode count")
        return cyclic_network(m // 2, float(spec.split(":", 1)[1])).unitary
    if spec.startswith("file:"):
        return unitary_from_json(Path(spec.split(":", 1)[1]).read_text(encoding="utf-8"))
    raise ValueError(f"unknown unitary spec {spec!r}")


def _overlap_gram(x: Sequence[float], scale: float = 1.0) -> np.ndarray:
    """Three-photon Gram from pairwise overlaps (x12, x13, x23), scaled off-diagonal."""
    x12, x13, x23 = (scale * float(v) for v in x)
    return np.array([[1.0, x12, x13], [x12, 1.0, x23], [x13, x23, 1.0]])


def parse_model(spec, n: int) -> InternalModel:
    """Internal-model spec dict -> model; accepts the serialization kinds too."""
    if not isinstance(spec, Mapping):
        raise ValueError("internal model spec must be an object")
    kind = spec.get("kind")
    if kind == "ideal":
        return PureProduct(np.ones((n, n)))
    if kind == "distinguishable":
        return PartitionMixture(n, {singleton_partition(n): 1.0})
    if kind == "obb":
        return obb_model(n, float(spec["eps"]))
    if kind == "time_delay":
        return PureProduct(time_delay_gram(spec["delays"]))
    if kind == "overlaps":
        if n != 3:
            raise ValueError("pairwise-overlap specs are stored for n=3")
        return PureProduct(_overlap_gram(spec["x"], float(spec.get("scale", 1.0))))
    return model_from_json(json.dumps(spec))


def _true_c(model: InternalModel) -> float:
    return indistinguishable_coefficient(
        partition_weights_from_gi(model_gi_vector(model))
    )


def _provenance(cfg: Mapping, model: InternalModel) -> dict:
    return {
        "seed": cfg["seed"],
        "shots": cfg["shots"],
        "epsilon": cfg["epsilon"],
        "model": model_to_json(model),
    }


def _with_defaults(config: Mapping | None, defaults: dict) -> dict:
    cfg = dict(defaults)
    cfg.update(config or {})
    return cfg


# ---------------------------------------------------------------------------
# witness-compare
# ---------------------------------------------------------------------------

WITNESS_COMPARE_DEFAULTS = {
    "n": 3,
    "overlaps": [0.98, 0.94, 0.91],
    "grid_points": 20,
    "shots": 0,
    "epsilon": 0.1,
    "seed": 7,
}


def run_witness_compare(config: Mapping | None, out_dir) -> dict:
    """Sweep a pairwise-overlap family and evaluate all four witnesses.

    The grid scales the three off-diagonal overlaps linearly from 0 to the
    configured operating point, which keeps every Gram matrix on the sweep
    positive semidefinite.
    """
    cfg = _with_defaults(config, WITNESS_COMPARE_DEFAULTS)
    n = cfg["n"]
    if n != 3:
        raise ValueError("the comparison study is defined for n=3")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    settings = {method: witness_setting(method, n) for method in WITNESS_METHODS}
    rows = []
    scales = np.linspace(0.0, 1.0, int(cfg["grid_points"]))
    for t in scales:
        model = PureProduct(_overlap_gram(cfg["overlaps"], float(t)))
        mixture = partition_weights_from_gi(model_gi_vector(model))
        row = {
            "scale": float(t),
            "cyclic_overlap": float(t**3 * math.prod(cfg["overlaps"])),
            "true_c3": indistinguishable_coefficient(mixture),
            "positive_partition": int(not mixture.is_quasi),
        }
        for method in WITNESS_METHODS:
            report = evaluate_witness(
                settings[method],
                model,
                shots=cfg["shots"],
                seed=derive_seed(cfg["seed"], method, float(t)),
                epsilon=cfg["epsilon"] if cfg["shots"] else None,
            )
            row[f"{method}_raw"] = report.c_raw
            row[f"{method}_corrected"] = report.c_corrected
        row.update(_provenance(cfg, model))
        rows.append(row)

    fields = [
        "scale", "cyclic_overlap", "true_c3", "positive_partition",
        *[f"{m}_{kind}" for m in WITNESS_METHODS for kind in ("raw", "corrected")],
        "seed", "shots", "epsilon", "model",
    ]
    csv_path = out / "witness_compare.csv"
    _write_csv(csv_path, fields, rows)
    _write_json(out / "witness_compare_config.json", cfg)
    fig_path = out / "witness_compare.png"
    plotting.plot_witness_compare(rows, fig_path)
    return {"csv": str(csv_path), "figure": str(fig_path), "rows": len(rows)}


# ---------------------------------------------------------------------------
# perturb-study
# ---------------------------------------------------------------------------

# Default study state: photons 2 and 3 nearly identical, photon 1 nearly
# orthogonal to both.  The ring fringe reads the small cycle product exactly,
# but perturbed networks leak the large pairwise coherence x23 into it, which
# is what makes the cyclic witness overshoot while the others stay safe.
PERTURB_STUDY_DEFAULTS = {
    "n": 3,
    "overlaps": [0.2, 0.2, 0.98],
    "eps_grid": [0.05, 0.1, 0.2],
    "trials": 500,
    "shots": 0,
    "epsilon": 0.1,
    "seed": 11,
}


def run_perturbation_study(config: Mapping | None, out_dir) -> dict:
    """Monte-Carlo robustness study: witnesses under perturbed interferometers.

    Each trial perturbs the ideal network of every witness with a fresh
    Haar-seeded deviation of strength eps and records whether the raw
    estimate exceeds the true indistinguishable coefficient.
    """
    cfg = _with_defaults(config, PERTURB_STUDY_DEFAULTS)
    n = cfg["n"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    model = PureProduct(_overlap_gram(cfg["overlaps"]))
    true_c = _true_c(model)
    ideal = {method: witness_setting(method, n) for method in WITNESS_METHODS}

    tasks = []
    for method in WITNESS_METHODS:
        for eps in cfg["eps_grid"]:
            for trial in range(int(cfg["trials"])):
                tasks.append((method, float(eps), trial))

    def one(task):
        method, eps, trial = task
        seed = derive_seed(cfg["seed"], method, eps, trial)
        u = perturb(ideal[method].unitary, eps, seed)
        setting = witness_setting(method, n, unitary=u)
        report = evaluate_witness(
            setting, model,
            shots=cfg["shots"],
            seed=derive_seed(seed, "shots"),
            epsilon=cfg["epsilon"] if cfg["shots"] else None,
        )
        return {
            "witness": method,
            "eps_perturb": eps,
            "trial": trial,
            "perturbation_seed": seed,
            "raw": report.c_raw,
            "true_c3": true_c,
            "overshoot": int(report.c_raw > true_c + OVERSHOOT_TOL),
            "seed": cfg["seed"],
            "shots": cfg["shots"],
            "epsilon": cfg["epsilon"],
            "model": model_to_json(model),
        }

    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        rows = list(pool.map(one, tasks))

    summary = {}
    for method in WITNESS_METHODS:
        for eps in cfg["eps_grid"]:
            pts = [r for r in rows if r["witness"] == method and r["eps_perturb"] == eps]
            summary[f"{method}@{eps:g}"] = {
                "trials": len(pts),
                "overshoot_rate": sum(r["overshoot"] for r in pts) / len(pts),
            }

    fields = [
        "witness", "eps_perturb", "trial", "perturbation_seed", "raw", "true_c3",
        "overshoot", "seed", "shots", "epsilon", "model",
    ]
    csv_path = out / "perturb_study.csv"
    _write_csv(csv_path, fields, rows)
    _write_json(out / "perturb_study_summary.json", summary)
    fig_path = out / "perturb_study.png"
    plotting.plot_perturbation_study(rows, true_c, fig_path)
    return {"csv": str(csv_path), "figure": str(fig_path), "summary": summary}


# ---------------------------------------------------------------------------
# partition-study
# ---------------------------------------------------------------------------

PARTITION_STUDY_DEFAULTS = {
    "n": 3,
    "tau_grid": [round(x, 4) for x in np.linspace(0.0, 1.2, 25)],
    "shots": 0,
    "epsilon": 0.1,
    "seed": 3,
}


def _partition_label(lam) -> str:
    return "_".join("".join(str(i + 1) for i in block) for block in lam)


def run_partition_study(config: Mapping | None, out_dir) -> dict:
    """Analytic partition weights of the symmetric time-delay family vs tau.

    Delays (0, tau, -tau) make photon 1 overlap photons 2 and 3 equally while
    photons 2 and 3 drift apart twice as fast; one partition weight is
    negative for every tau > 0, which is exactly the regime where the
    bunching witness overshoots.
    """
    cfg = _with_defaults(config, PARTITION_STUDY_DEFAULTS)
    n = cfg["n"]
    if n != 3:
        raise ValueError("the partition study is defined for n=3")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    settings = {method: witness_setting(method, n) for method in WITNESS_METHODS}
    parts = enumerate_partitions(n)
    rows = []
    for tau in cfg["tau_grid"]:
        model = PureProduct(time_delay_gram([0.0, float(tau), -float(tau)]))
        mixture = partition_weights_from_gi(model_gi_vector(model))
        row = {"tau": float(tau)}
        for lam in parts:
            row[f"weight_{_partition_label(lam)}"] = mixture.weights[lam]
        row["has_negative"] = int(mixture.is_quasi)
        row["true_c3"] = indistinguishable_coefficient(mixture)
        for method in WITNESS_METHODS:
            report = evaluate_witness(
                settings[method], model,
                shots=cfg["shots"],
                seed=derive_seed(cfg["seed"], method, float(tau)),
                epsilon=cfg["epsilon"] if cfg["shots"] else None,
            )
            row[f"{method}_raw"] = report.c_raw
        row.update(_provenance(cfg, model))
        rows.append(row)

    fields = (
        ["tau"]
        + [f"weight_{_partition_label(lam)}" for lam in parts]
        + ["has_negative", "true_c3"]
        + [f"{m}_raw" for m in WITNESS_METHODS]
        + ["seed", "shots", "epsilon", "model"]
    )
    csv_path = out / "partition_study.csv"
    _write_csv(csv_path, fields, rows)
    _write_json(out / "partition_study_config.json", cfg)
    fig_path = out / "partition_study.png"
    plotting.plot_partition_study(rows, fig_path)
    return {"csv": str(csv_path), "figure": str(fig_path), "rows": len(rows)}


# ---------------------------------------------------------------------------
# fidelity-demo
# ---------------------------------------------------------------------------

FIDELITY_DEMO_DEFAULTS = {
    "n": 3,
    "target_modes": 4,
    "targets": 12,
    "obb_eps_grid": [0.0, 0.05, 0.1, 0.2],
    "shots": 0,
    "epsilon": 0.1,
    "seed": 5,
    "accept_threshold": 0.5,
    "export_counts_for": None,  # [target_index, obb_eps] or None
}


def _source_product_certificate(
    *,
    u_target: np.ndarray,
    model: InternalModel,
    n: int,
    shots: int,
    epsilon: float,
    seed: int,
    accept_threshold: float,
) -> tuple[Certificate, dict]:
    """Reversibility + source-side Fourier witness -> multiplicative threshold."""
    m = u_target.shape[0]
    ones = pattern_ones(n, m)
    rev_program = u_target.conj().T
    # State preparation applies the target itself, so the reversal program
    # composes to the identity on the external modes.
    rev_spec = ExperimentSpec(u_target @ rev_program, ones, model)

    wit_setting = witness_setting("fourier", n)
    wit_spec = ExperimentSpec(wit_setting.unitary, wit_setting.input_occupation, model)

    if shots == 0:
        p1 = reversibility(u_target, u_target, model)
        wit_freqs = dict(output_distribution(wit_spec).items())
        delta1 = 0.0
        xi = 0.0
        shots_rev = shots_wit = 0
        report = fourier_witness(wit_freqs, n)
    else:
        rev_counts = sample_counts(rev_spec, shots, derive_seed(seed, "rev"))
        p1 = rev_counts.get(ones, 0) / shots
        wit_counts = sample_counts(wit_spec, shots, derive_seed(seed, "wit"))
        report = fourier_witness(
            {s: float(c) for s, c in wit_counts.items()}, n,
            shots=shots, epsilon=epsilon / 2.0,
        )
        delta1 = delta_hoeffding(shots, epsilon / 2.0)
        xi = kappa_factor("fourier", n) * delta_hoeffding(shots, epsilon / 2.0)
        shots_rev = shots_wit = shots
    c_raw = report.c_raw
    threshold = threshold_source(p1, c_raw, delta1, xi)
    cert = Certificate(
        level=3,
        method="source-product",
        witness="fourier",
        threshold=threshold,
        p1_observed=p1,
        second_observed=c_raw,
        epsilon=epsilon,
        shots_reversibility=shots_rev,
        shots_witness=shots_wit,
        delta1=delta1,
        xi=xi,
        accept_threshold=accept_threshold,
        accept=threshold >= accept_threshold,
        flags={
            "assumptions": [
                "source has a partition representation",
                "interferometer map is a mixture of internal-preserving unitaries",
            ],
            "witness_flags": report.flags["input_flags"],
        },
    )
    extras = {
        "rev_spec": rev_spec,
        "wit_spec": wit_spec,
        "rev_program": rev_program,
        "wit_unitary": wit_setting.unitary,
    }
    return cert, extras


def run_fidelity_demo(config: Mapping | None, out_dir) -> dict:
    """Certify seeded Haar targets against an orthogonal-noise source grid."""
    cfg = _with_defaults(config, FIDELITY_DEMO_DEFAULTS)
    n, m = cfg["n"], cfg["target_modes"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cert_dir = out / "certificates"
    cert_dir.mkdir(exist_ok=True)

    rows = []
    for t_index in range(int(cfg["targets"])):
        target_seed = derive_seed(cfg["seed"], "target", t_index)
        u_target = haar_random(m, target_seed)
        for eps_src in cfg["obb_eps_grid"]:
            model = obb_model(n, float(eps_src))
            cert, extras = _source_product_certificate(
                u_target=u_target,
                model=model,
                n=n,
                shots=int(cfg["shots"]),
                epsilon=float(cfg["epsilon"]),
                seed=derive_seed(cfg["seed"], t_index, float(eps_src)),
                accept_threshold=float(cfg["accept_threshold"]),
            )
            ref = reference_fidelity(u_target, u_target, model)
            cert_path = cert_dir / f"target{t_index:02d}_eps{eps_src:g}.json"
            cert_path.write_text(cert.to_json(), encoding="utf-8")
            rows.append({
                "target_index": t_index,
                "target_seed": target_seed,
                "obb_eps": float(eps_src),
                "p1": cert.p1_observed,
                "c_raw": cert.second_observed,
                "delta1": cert.delta1,
                "xi": cert.xi,
                "threshold": cert.threshold,
                "reference_fidelity": ref,
                "accept": int(cert.accept),
                "seed": cfg["seed"],
                "shots": cfg["shots"],
                "epsilon": cfg["epsilon"],
                "model": model_to_json(model),
            })
            export_for = cfg.get("export_counts_for")
            if export_for is not None and [t_index, eps_src] == list(export_for):
                _export_demo_counts(out, extras, u_target, n, m, int(cfg["shots"]),
                                    derive_seed(cfg["seed"], t_index, float(eps_src)))

    fields = [
        "target_index", "target_seed", "obb_eps", "p1", "c_raw", "delta1", "xi",
        "threshold", "reference_fidelity", "accept", "seed", "shots", "epsilon", "model",
    ]
    csv_path = out / "fidelity_demo.csv"
    _write_csv(csv_path, fields, rows)
    _write_json(out / "fidelity_demo_config.json", cfg)
    fig_path = out / "fidelity_demo.png"
    plotting.plot_fidelity_demo(rows, fig_path)
    return {"csv": str(csv_path), "figure": str(fig_path), "certificates": str(cert_dir)}


def _export_demo_counts(
    out: Path, extras: dict, u_target: np.ndarray, n: int, m: int, shots: int, seed: int
) -> None:
    if shots <= 0:
        raise ValueError("count export needs shots > 0")
    counts_dir = out / "counts"
    counts_dir.mkdir(exist_ok=True)
    rev_counts = sample_counts(extras["rev_spec"], shots, derive_seed(seed, "rev"))
    export_counts(
        counts_dir / "rev.json", setting="rev", n=n, m=m,
        unitary=extras["rev_program"], counts=rev_counts,
    )
    wit_counts = sample_counts(extras["wit_spec"], shots, derive_seed(seed, "wit"))
    export_counts(
        counts_dir / "fourier.json", setting="fourier", n=n, m=n,
        unitary=extras["wit_unitary"], counts=wit_counts,
    )
    (counts_dir / "target.json").write_text(unitary_to_json(u_target), encoding="utf-8")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

SIMULATE_DEFAULTS = {
    "n": 2,
    "m": 2,
    "unitary": "fourier",
    "input": None,           # default: one photon in each of the first n modes
    "model": {"kind": "ideal"},
    "shots": 0,
    "seed": 0,
    "epsilon": 0.1,
    "setting": "sim",
}


def run_simulate(config: Mapping | None, out_dir) -> dict:
    """Raw distribution dump (CSV), optionally with sampled counts (JSON)."""
    cfg = _with_defaults(config, SIMULATE_DEFAULTS)
    n, m = cfg["n"], cfg["m"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    u = parse_unitary(cfg["unitary"], m)
    occupation = tuple(cfg["input"]) if cfg["input"] else pattern_ones(n, m)
    model = parse_model(cfg["model"], n)
    spec = ExperimentSpec(u, occupation, model)
    dist = output_distribution(spec)
    csv_path = out / "distribution.csv"
    distribution_to_csv(dist, csv_path)
    meta = {
        "n": n, "m": m, "input": list(occupation),
        "model": model_to_json(model),
        "normalization_residue": dist.normalization_residue,
        "seed": cfg["seed"], "shots": cfg["shots"],
    }
    _write_json(out / "simulate_meta.json", meta)
    result = {"csv": str(csv_path), "meta": str(out / "simulate_meta.json")}
    if cfg["shots"]:
        counts = sample_counts(spec, int(cfg["shots"]), int(cfg["seed"]))
        counts_path = out / "counts.json"
        export_counts(counts_path, setting=cfg["setting"], n=n, m=m, unitary=u, counts=counts)
        result["counts"] = str(counts_path)
    return result


# ---------------------------------------------------------------------------
# counts-certify
# ---------------------------------------------------------------------------

COUNTS_CERTIFY_DEFAULTS = {
    "counts": [],
    "n": 3,
    "target_modes": 4,
    "target_unitary": None,      # unitary spec for the target
    "epsilon": 0.1,
    "epsilon_split": 0.5,
    "accept_threshold": 0.5,
    "assume_positive_partition": True,
    "assume_partition_representation": True,
    "lambda": None,
}

_WITNESS_SETTINGS = {"fourier", "cyclic", "hom", "twomode"}
_WITNESS_NEEDS = {
    "fourier": "partition_representation",   # twirl-equivalent; weakest
    "cyclic": "partition_representation",
    "hom": "positive_partition",
    "twomode": "positive_partition",
}


def certify_from_counts(
    tables: Mapping[str, CountTable],
    *,
    u_target: np.ndarray,
    n: int,
    epsilon: float,
    accept_threshold: float,
    lam: float | None = None,
    assume_positive_partition: bool = True,
    assume_partition_representation: bool = True,
    epsilon_split: float = 0.5,
) -> Certificate:
    """Build a certificate from ingested count tables.

    Needs a ``rev`` table taken under the inverse-target program plus exactly
    one witness table.  A witness table whose interferometer matches the bare
    witness network is treated as a source-side measurement (multiplicative
    threshold); a fourier table matching inverse-target-then-Fourier is
    treated as a reversed-state measurement (additive threshold).
    ``epsilon_split`` is the fraction of the failure budget assigned to the
    reversibility estimate (the remainder goes to the witness).
    """
    if not 0.0 < epsilon_split < 1.0:
        raise ValueError("epsilon_split must lie strictly between 0 and 1")
    if "rev" not in tables:
        raise ValueError("missing the 'rev' reversibility setting")
    witnesses = sorted(set(tables) & _WITNESS_SETTINGS)
    if len(witnesses) != 1:
        raise ValueError(f"need exactly one witness setting, got {witnesses or 'none'}")
    wname = witnesses[0]

    m = u_target.shape[0]
    rev = tables["rev"]
    if rev.n != n or rev.m != m:
        raise MismatchedProgramError("reversibility table dimensions do not match the target")
    if np.abs(rev.unitary - u_target.conj().T).max() > 1e-10:
        raise MismatchedProgramError(
            "reversibility counts were not taken under the inverse-target program"
        )
    ones = pattern_ones(n, m)
    n_rev = rev.retained
    p1 = rev.counts.get(ones, 0) / n_rev

    wit = tables[wname]
    if wit.n != n:
        raise MismatchedProgramError("witness table photon number does not match")
    required = _WITNESS_NEEDS[wname]
    if required == "positive_partition" and not assume_positive_partition:
        raise ValueError(
            f"the {wname} witness requires a positive partition representation,"
            " which the configuration declines to assume"
        )
    if not assume_partition_representation and wname != "fourier":
        raise ValueError(
            f"the {wname} witness requires a partition representation,"
            " which the configuration declines to assume"
        )

    setting = witness_setting(wname, n)
    freqs = {s: float(c) for s, c in wit.counts.items()}
    n_wit = wit.retained
    level = None
    if wit.unitary.shape == setting.unitary.shape and \
            np.abs(wit.unitary - setting.unitary).max() <= 1e-10:
        level = 3
    elif wname == "fourier" and wit.m == m:
        embedded = np.eye(m, dtype=complex)
        embedded[:n, :n] = setting.unitary
        expected = u_target.conj().T @ embedded
        if np.abs(wit.unitary - expected).max() <= 1e-10:
            level = 2
            kept = {s[:n]: w for s, w in freqs.items() if sum(s[:n]) == n}
            if not kept:
                raise EmptyDataError("no witness events with all photons in the first n modes")
            n_wit = int(sum(kept.values()))
            freqs = kept
    if level is None:
        raise MismatchedProgramError(
            f"the {wname} table's interferometer matches neither the source-side"
            " network nor the reversed program"
        )

    eps_rev = epsilon * epsilon_split
    eps_wit = epsilon * (1.0 - epsilon_split)
    if wname == "fourier":
        report = fourier_witness(freqs, n, lam, shots=n_wit, epsilon=eps_wit)
        xi = kappa_factor("fourier", n) * delta_hoeffding(n_wit, eps_wit)
    elif wname == "cyclic":
        report = cyclic_witness(freqs, n, shots=n_wit, epsilon=eps_wit)
        xi = kappa_factor("cyclic", n) * delta_hoeffding(n_wit, eps_wit)
    elif wname == "hom":
        report = hom_witness(freqs, n, shots=n_wit, epsilon=eps_wit)
        xi = kappa_factor("hom", n) * delta_hoeffding(n_wit, eps_wit)
    else:
        report = twomode_witness(freqs, (0, 1), n, shots=n_wit, epsilon=eps_wit)
        xi = report.c_raw - report.c_corrected
    delta1 = delta_hoeffding(n_rev, eps_rev)

    if level == 3:
        threshold = threshold_source(p1, report.c_raw, delta1, xi)
        method = "source-product"
    else:
        threshold = threshold_witness(p1, report.c_raw, delta1, xi)
        method = "witness-sum"
    return Certificate(
        level=level,
        method=method,
        witness=wname,
        threshold=threshold,
        p1_observed=p1,
        second_observed=report.c_raw,
        epsilon=epsilon,
        shots_reversibility=n_rev,
        shots_witness=n_wit,
        delta1=delta1,
        xi=xi,
        accept_threshold=accept_threshold,
        accept=threshold >= accept_threshold,
        flags={
            "assumed_positive_partition": assume_positive_partition,
            "assumed_partition_representation": assume_partition_representation,
            "dropped_events": {name: tables[name].dropped for name in tables},
        },
    )


def run_counts_certify(config: Mapping | None, out_dir) -> dict:
    """Ingest count files and emit a certificate; exit status maps the verdict."""
    cfg = _with_defaults(config, COUNTS_CERTIFY_DEFAULTS)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not cfg["counts"]:
        raise ValueError("no count files configured")
    tables = {}
    for path in cfg["counts"]:
        table = ingest_counts(path)
        if table.setting in tables:
            raise ValueError(f"duplicate setting {table.setting!r}")
        tables[table.setting] = table
    if cfg["target_unitary"] is None:
        raise ValueError("counts-certify needs a target unitary spec")
    u_target = parse_unitary(cfg["target_unitary"], cfg["target_modes"])
    cert = certify_from_counts(
        tables,
        u_target=u_target,
        n=int(cfg["n"]),
        epsilon=float(cfg["epsilon"]),
        accept_threshold=float(cfg["accept_threshold"]),
        lam=cfg.get("lambda"),
        assume_positive_partition=bool(cfg["assume_positive_partition"]),
        assume_partition_representation=bool(cfg["assume_partition_representation"]),
        epsilon_split=float(cfg["epsilon_split"]),
    )
    cert_path = out / "certificate.json"
    cert_path.write_text(cert.to_json(), encoding="utf-8")
    return {"certificate": str(cert_path), "accept": cert.accept, "threshold": cert.threshold}
