"""Acceptance suite: one test per release criterion, each printing a verdict.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Three sub-cases are expected failures with the analysis recorded in
the project notes: the bunching-witness overshoot at tau = 1.0 (the true
crossover sits at tau = 0.981 once the sound bunching threshold is used),
the ring blind-spot raw estimate above 0.5 (Bessel's inequality caps the
cycle product at 0.25 when one pair is orthogonal), and forbidden-mass
twirling invariance at n = 4 (the suppression set is only cyclically,
not permutation, symmetric beyond n = 3).
"""

import math
import time

import numpy as np
import pytest

from helpers import random_positive_mixture, random_psd_gram
from loqc_certify.certify import (
    CountTable,
    pattern_ones,
    reference_fidelity,
    threshold_source,
)
from loqc_certify.combinatorics import (
    coarsening_matrix,
    enumerate_patterns,
    mobius_matrix,
    partition_index,
    singleton_partition,
)
from loqc_certify.distinguishability import (
    DirectGI,
    GIVector,
    PartitionMixture,
    PureProduct,
    gram_gi_vector,
    indistinguishable_coefficient,
    model_gi_vector,
    obb_model,
    partition_gi_vector,
    partition_weights_from_gi,
    time_delay_gram,
    twirl,
)
from loqc_certify.engine import (
    ExperimentSpec,
    oracle_distribution,
    output_distribution,
    sample_counts,
)
from loqc_certify.scenarios import certify_from_counts, derive_seed, run_perturbation_study
from loqc_certify.unitaries import fourier_unitary, haar_random
from loqc_certify.witnesses import (
    cyclic_witness,
    delta_hoeffding,
    evaluate_witness,
    find_umax,
    forbidden_patterns,
    fourier_witness,
    kappa_factor,
    witness_setting,
)


def _report(criterion: str, ok: bool, detail: str = "") -> None:
    print(f"[acceptance] criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())


def _overlap_gram(x12, x13, x23):
    return np.array([[1.0, x12, x13], [x12, 1.0, x23], [x13, x23, 1.0]])


def _forbidden_mass(n, gi):
    u = fourier_unitary(n)
    return sum(
        output_distribution(ExperimentSpec(u, (1,) * n, DirectGI(gi)))[s]
        for s in forbidden_patterns(n)
    )


# ---------------------------------------------------------------------------
# 1. oracle equivalence
# ---------------------------------------------------------------------------

def test_criterion_01_oracle_equivalence():
    rng = np.random.default_rng(20251)
    start = time.monotonic()
    worst = 0.0
    checked = 0
    while checked < 200:
        n = int(rng.integers(2, 5))
        m = int(rng.integers(n, 7))
        u = haar_random(m, int(rng.integers(0, 2**62)))
        occ = [0] * m
        for k in rng.choice(m, size=n, replace=False):
            occ[k] += 1
        if checked % 2 == 0:
            model = PureProduct(random_psd_gram(n, rng))
        else:
            model = random_positive_mixture(n, rng)
        spec = ExperimentSpec(u, tuple(occ), model)
        dist = output_distribution(spec)
        orc = oracle_distribution(spec)
        for s in enumerate_patterns(n, m):
            worst = max(worst, abs(dist[s] - orc.get(s, 0.0)))
        checked += 1
    elapsed = time.monotonic() - start
    ok = worst <= 1e-9 and elapsed <= 60.0
    _report("1 (oracle equivalence)", ok, f"max dev {worst:.2e} over {checked} specs, {elapsed:.1f}s")
    assert worst <= 1e-9
    assert elapsed <= 60.0


# ---------------------------------------------------------------------------
# 2. suppression-law exactness
# ---------------------------------------------------------------------------

def test_criterion_02_suppression_law():
    worst = 0.0
    for n in (2, 3, 4, 5):
        spec = ExperimentSpec(fourier_unitary(n), (1,) * n, PureProduct(np.ones((n, n))))
        dist = output_distribution(spec)
        mass = sum(dist[s] for s in forbidden_patterns(n))
        worst = max(worst, mass)
    ok = worst <= 1e-10
    _report("2 (suppression law)", ok, f"max forbidden mass {worst:.2e} for n=2..5")
    assert worst <= 1e-10


# ---------------------------------------------------------------------------
# 3. independent-orthogonal-noise exactness
# ---------------------------------------------------------------------------

def test_criterion_03_obb_exactness():
    worst_p = worst_c = 0.0
    for n in (3, 4):
        setting = witness_setting("fourier", n)
        for eps in np.linspace(0.0, 1.0, 11):
            report = evaluate_witness(setting, obb_model(n, float(eps)))
            c_n = (1.0 - eps) ** n
            p_valid = 1.0 - report.statistics["p_f"]
            worst_p = max(worst_p, abs(p_valid - ((1 - 1 / n) * c_n + 1 / n)))
            worst_c = max(worst_c, abs(report.c_raw - c_n))
    ok = worst_p <= 1e-9 and worst_c <= 1e-9
    _report("3 (orthogonal-noise exactness)", ok,
            f"valid-pattern dev {worst_p:.2e}, recovered-c dev {worst_c:.2e}")
    assert worst_p <= 1e-9
    assert worst_c <= 1e-9


# ---------------------------------------------------------------------------
# 4. five-partition matrices and the negative delay weight
# ---------------------------------------------------------------------------

def test_criterion_04_partition_matrices_and_delay_weight():
    # Reference ordering [(12)(3), (13)(2), (23)(1), (123), (1)(2)(3)],
    # reindexed from the canonical enumeration.
    order = [
        ((0, 1), (2,)),
        ((0, 2), (1,)),
        ((0,), (1, 2)),
        ((0, 1, 2),),
        ((0,), (1,), (2,)),
    ]
    idx = [partition_index(3)[lam] for lam in order]
    r = coarsening_matrix(3)[np.ix_(idx, idx)]
    mu = mobius_matrix(3)[np.ix_(idx, idx)]
    r_expected = [
        [1, 0, 0, 1, 0],
        [0, 1, 0, 1, 0],
        [0, 0, 1, 1, 0],
        [0, 0, 0, 1, 0],
        [1, 1, 1, 1, 1],
    ]
    mu_expected = [
        [1, 0, 0, -1, 0],
        [0, 1, 0, -1, 0],
        [0, 0, 1, -1, 0],
        [0, 0, 0, 1, 0],
        [-1, -1, -1, 2, 1],
    ]
    matrices_ok = r.tolist() == r_expected and mu.tolist() == mu_expected

    tau = 1.0
    gi = gram_gi_vector(time_delay_gram([0.0, tau, -tau]))
    w = partition_weights_from_gi(gi)
    value = w.weights[((0,), (1, 2))]
    expected = math.exp(-2.0) - math.exp(-1.5)
    weight_ok = abs(value - expected) <= 1e-12

    negative_ok = True
    for t in np.linspace(0.1, 1.2, 12):
        wt = partition_weights_from_gi(gram_gi_vector(time_delay_gram([0.0, t, -t])))
        negative_ok &= wt.weights[((0,), (1, 2))] < 0

    ok = matrices_ok and weight_ok and negative_ok
    _report("4 (partition matrices + delay weight)", ok,
            f"matrices={matrices_ok}, weight dev {abs(value-expected):.1e}, negative on grid={negative_ok}")
    assert matrices_ok
    assert weight_ok
    assert negative_ok


# ---------------------------------------------------------------------------
# 5. witness tightness on the overlap grid
# ---------------------------------------------------------------------------

def test_criterion_05_witness_tightness():
    base = (0.98, 0.94, 0.91)
    settings = {m: witness_setting(m, 3) for m in ("fourier", "cyclic", "hom", "twomode")}
    worst_tight = 0.0
    worst_sound = -1.0
    positive_points = 0
    for t in np.linspace(0.0, 1.0, 20):
        model = PureProduct(_overlap_gram(*(t * x for x in base)))
        mixture = partition_weights_from_gi(model_gi_vector(model))
        c3 = indistinguishable_coefficient(mixture)
        raw = {m: evaluate_witness(settings[m], model).c_raw for m in settings}
        worst_tight = max(worst_tight, abs(raw["fourier"] - c3), abs(raw["cyclic"] - c3))
        if not mixture.is_quasi:
            positive_points += 1
            worst_sound = max(worst_sound, raw["hom"] - c3, raw["twomode"] - c3)
    ok = worst_tight <= 1e-6 and worst_sound <= 1e-9
    _report("5 (witness tightness)", ok,
            f"fourier/cyclic dev {worst_tight:.2e}; hom/twomode excess {worst_sound:.2e} "
            f"on {positive_points} positive-partition points")
    assert worst_tight <= 1e-6
    assert worst_sound <= 1e-9


# ---------------------------------------------------------------------------
# 6. failure modes
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "tau",
    [
        0.5,
        pytest.param(
            1.0,
            marks=pytest.mark.xfail(
                strict=True,
                reason="with the sound bunching threshold (2n-3)/(2n-2) the "
                "overshoot region is tau < 0.981; at tau = 1.0 the raw estimate "
                "0.2131 sits below the true 0.2231 (see notes ledger)",
            ),
        ),
    ],
)
def test_criterion_06a_bunching_overshoot(tau):
    setting = witness_setting("hom", 3)
    model = PureProduct(time_delay_gram([0.0, tau, -tau]))
    report = evaluate_witness(setting, model)
    true_c = math.exp(-1.5 * tau**2)
    ok = report.c_raw > true_c
    _report("6a (bunching overshoot)", ok,
            f"tau={tau}: raw {report.c_raw:.6f} vs true {true_c:.6f}")
    assert report.c_raw > true_c


@pytest.mark.xfail(
    strict=True,
    reason="unattainable as stated: with <phi2|phi4> = 0 Bessel's inequality "
    "bounds the ring cycle product by 1/4 for every valid Gram matrix; the "
    "optimal construction reaches 0.25 (> 0, demonstrating the blind spot, "
    "but never > 0.5; see notes ledger)",
)
def test_criterion_06b_ring_blind_spot():
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    phi = [(e1 + e2) / math.sqrt(2), e1, (e1 + e2) / math.sqrt(2), e2]
    g = np.array([[float(np.dot(a, b)) for b in phi] for a in phi])
    assert abs(g[1, 3]) <= 1e-15
    report = evaluate_witness(witness_setting("cyclic", 4), PureProduct(g))
    ok = report.c_raw > 0.5
    _report("6b (ring blind spot)", ok, f"raw {report.c_raw:.6f} vs required > 0.5")
    assert report.c_raw > 0.5


# ---------------------------------------------------------------------------
# 7. twirling invariance of the forbidden mass
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "n",
    [
        3,
        pytest.param(
            4,
            marks=pytest.mark.xfail(
                strict=True,
                reason="the suppression set is invariant under cyclic, not full "
                "permutation, relabeling; beyond n = 3 conjugacy classes split "
                "into several cyclic orbits and the invariance fails, e.g. "
                "(01)(23) vs (02)(13) give forbidden mass 0.75 vs 0.5 "
                "(verified against the amplitude oracle; see notes ledger)",
            ),
        ),
    ],
)
def test_criterion_07_twirl_invariance(n):
    rng = np.random.default_rng(777 + n)
    worst = 0.0
    for k in range(100):
        kind = k % 3
        if kind == 0:
            gi = gram_gi_vector(random_psd_gram(n, rng))
        elif kind == 1:
            gi = partition_gi_vector(random_positive_mixture(n, rng))
        else:
            a = gram_gi_vector(random_psd_gram(n, rng)).values
            b = partition_gi_vector(random_positive_mixture(n, rng)).values
            t = rng.random()
            gi = GIVector(n, t * a + (1 - t) * b)
        worst = max(worst, abs(_forbidden_mass(n, gi) - _forbidden_mass(n, twirl(gi))))
    ok = worst <= 1e-10
    _report("7 (twirling invariance)", ok, f"n={n}: max dev {worst:.2e} over 100 tables")
    assert worst <= 1e-10


# ---------------------------------------------------------------------------
# 8. robustness Monte Carlo
# ---------------------------------------------------------------------------

def test_criterion_08_semi_device_independence(tmp_path):
    start = time.monotonic()
    result = run_perturbation_study(
        {"eps_grid": [0.05, 0.1], "trials": 500, "seed": 11}, tmp_path
    )
    elapsed = time.monotonic() - start
    summary = result["summary"]
    cyclic_rates = [summary[f"cyclic@{e:g}"]["overshoot_rate"] for e in (0.05, 0.1)]
    safe_rates = [
        summary[f"{m}@{e:g}"]["overshoot_rate"]
        for m in ("fourier", "hom", "twomode")
        for e in (0.05, 0.1)
    ]
    ok = all(r > 0 for r in cyclic_rates) and all(r == 0 for r in safe_rates) and elapsed <= 600
    _report("8 (robustness Monte Carlo)", ok,
            f"cyclic rates {cyclic_rates}, others max {max(safe_rates):g}, {elapsed:.0f}s")
    assert all(r > 0 for r in cyclic_rates)
    assert all(r == 0 for r in safe_rates)
    assert elapsed <= 600.0


# ---------------------------------------------------------------------------
# 9. two-mode correlator maximum
# ---------------------------------------------------------------------------

def test_criterion_09_two_mode_maximum():
    u = find_umax(3)
    setting = witness_setting("twomode", 3)
    ideal = evaluate_witness(setting, PureProduct(np.ones((3, 3))))
    dist = evaluate_witness(
        setting, PartitionMixture(3, {singleton_partition(3): 1.0})
    )
    c_ideal = ideal.statistics["correlator"]
    c_dist = dist.statistics["correlator"]
    ok = abs(c_ideal - 1 / 12) <= 1e-3 and c_dist <= 1e-9
    _report("9 (two-mode maximum)", ok,
            f"ideal C {c_ideal:.6f} (target {1/12:.6f}), distinguishable C {c_dist:.2e}")
    assert abs(c_ideal - 1 / 12) <= 1e-3
    assert c_dist <= 1e-9
    assert u.shape == (4, 4)


# ---------------------------------------------------------------------------
# 10. ring totals and the correction table
# ---------------------------------------------------------------------------

def test_criterion_10_ring_totals_and_kappa_table():
    worst = 0.0
    for n in (2, 3, 4):
        setting = witness_setting("cyclic", n)
        dist = output_distribution(
            ExperimentSpec(setting.unitary, setting.input_occupation, PureProduct(np.ones((n, n))))
        )
        report = cyclic_witness(dict(dist.items()), n)
        worst = max(worst, abs(report.statistics["eligible_fraction"] - 0.5 ** (n - 1)))
    table_ok = (
        kappa_factor("fourier", 3) == 1.5
        and kappa_factor("cyclic", 3) == 8.0
        and kappa_factor("hom", 3) == 4.0
    )
    ok = worst <= 1e-9 and table_ok
    _report("10 (ring totals + correction table)", ok,
            f"total dev {worst:.2e}, table exact={table_ok}")
    assert worst <= 1e-9
    assert table_ok


# ---------------------------------------------------------------------------
# 11. end-to-end fidelity demo
# ---------------------------------------------------------------------------

def test_criterion_11_fidelity_demo():
    start = time.monotonic()
    n, m = 3, 4
    targets = [haar_random(m, derive_seed(5, "target", i)) for i in range(12)]
    eps_grid = [0.0, 0.05, 0.1, 0.2]
    fourier_setting = witness_setting("fourier", n)

    # exact mode: threshold never exceeds the reference
    worst = -1.0
    for u in targets:
        for eps_src in eps_grid:
            model = obb_model(n, eps_src)
            p1 = 1.0  # exact reversal of the exact target
            report = evaluate_witness(fourier_setting, model)
            t_exact = threshold_source(p1, report.c_raw, 0.0, 0.0)
            ref = reference_fidelity(u, u, model)
            worst = max(worst, t_exact - ref)
    exact_ok = worst <= 1e-9

    # sampled mode: the corrected threshold stays below the reference in at
    # least 99% of repetitions
    shots = 10**5
    epsilon = 0.1
    delta1 = delta_hoeffding(shots, epsilon / 2)
    xi = kappa_factor("fourier", n) * delta_hoeffding(shots, epsilon / 2)
    model = obb_model(n, 0.1)
    ref_by_target = {i: reference_fidelity(targets[i], targets[i], model) for i in range(12)}
    ones = pattern_ones(n, m)
    wit_specs = {
        i: ExperimentSpec(fourier_setting.unitary, fourier_setting.input_occupation, model)
        for i in range(12)
    }
    rev_specs = {
        i: ExperimentSpec(targets[i] @ targets[i].conj().T, ones, model) for i in range(12)
    }
    good = total = 0
    for rep in range(100):
        for i in range(12):
            rev_counts = sample_counts(rev_specs[i], shots, derive_seed("rep", rep, i, "rev"))
            p1_hat = rev_counts.get(ones, 0) / shots
            wit_counts = sample_counts(wit_specs[i], shots, derive_seed("rep", rep, i, "wit"))
            report = fourier_witness(
                {s: float(c) for s, c in wit_counts.items()}, n,
                shots=shots, epsilon=epsilon / 2,
            )
            t_val = threshold_source(p1_hat, report.c_raw, delta1, xi)
            good += t_val <= ref_by_target[i]
            total += 1
    frac = good / total
    elapsed = time.monotonic() - start
    sampled_ok = frac >= 0.99 and elapsed <= 900
    _report("11 (fidelity demo)", exact_ok and sampled_ok,
            f"exact excess {worst:.2e}; sampled below-reference fraction {frac:.4f}; {elapsed:.0f}s")
    assert exact_ok
    assert frac >= 0.99
    assert elapsed <= 900.0


# ---------------------------------------------------------------------------
# 12. closed loop
# ---------------------------------------------------------------------------

def test_criterion_12_closed_loop(tmp_path):
    from loqc_certify.certify import export_counts, ingest_counts

    n, m = 3, 4
    u_target = haar_random(m, derive_seed(5, "target", 0))
    model = obb_model(n, 0.1)
    shots = 50_000
    ones = pattern_ones(n, m)
    rev_counts = sample_counts(
        ExperimentSpec(u_target @ u_target.conj().T, ones, model), shots, derive_seed("loop", "rev")
    )
    wit = witness_setting("fourier", n)
    wit_counts = sample_counts(
        ExperimentSpec(wit.unitary, wit.input_occupation, model), shots, derive_seed("loop", "wit")
    )
    in_memory = {
        "rev": CountTable("rev", n, m, u_target.conj().T, rev_counts, shots, 0),
        "fourier": CountTable("fourier", n, n, wit.unitary, wit_counts, shots, 0),
    }
    direct = certify_from_counts(in_memory, u_target=u_target, n=n,
                                 epsilon=0.1, accept_threshold=0.5)

    export_counts(tmp_path / "rev.json", setting="rev", n=n, m=m,
                  unitary=u_target.conj().T, counts=rev_counts)
    export_counts(tmp_path / "fourier.json", setting="fourier", n=n, m=n,
                  unitary=wit.unitary, counts=wit_counts)
    loaded = {
        "rev": ingest_counts(tmp_path / "rev.json"),
        "fourier": ingest_counts(tmp_path / "fourier.json"),
    }
    round_trip = certify_from_counts(loaded, u_target=u_target, n=n,
                                     epsilon=0.1, accept_threshold=0.5)
    ok = round_trip.to_json() == direct.to_json()
    _report("12 (closed loop)", ok, f"threshold {direct.threshold:.6f}, accept={direct.accept}")
    assert ok
